"""Laplace-Stieltjes transforms and probability generating functions.

A transform is stored as a numerator/denominator pair of complex functions so
that the denominator can be searched for zeros directly.  Every function here
accepts numpy arrays as well as scalars.

Catalog
-------
exponential(mu)                  mu / (s + mu)
erlang(k, mu)                    (mu / (s + mu))**k
hyperexponential(p, mu1, mu2)    p mu1/(s+mu1) + (1-p) mu2/(s+mu2)
md1_sojourn(rho)                 (1-rho) s e^{-s} / (s - rho + rho e^{-s})

PGF catalog: md1_queue(rho), geometric(q), deterministic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

import numpy as np

from .errors import BadParam, PoleHit

POLE_GUARD = 1e-13
REMOVABLE_RADIUS = 1e-4

ComplexFn = Callable[[Any], Any]


@dataclass(frozen=True)
class Removable:
    """Series branch used inside ``radius`` of a removable singularity."""

    point: complex
    radius: float
    func: ComplexFn


@dataclass(frozen=True)
class TransformSpec:
    id: str
    numerator: ComplexFn
    denominator: ComplexFn
    params: Mapping[str, float] = field(default_factory=dict)
    search_bracket: tuple[float, float] = (-3.0, -1e-6)
    known_sigma0: float | None = None
    removable: Removable | None = None
    source: Mapping[str, Any] | None = None

    def __call__(self, s):
        return eval_transform(self, s)


@dataclass(frozen=True)
class PgfSpec:
    id: str
    numerator: ComplexFn
    denominator: ComplexFn
    params: Mapping[str, float] = field(default_factory=dict)
    radius_bracket: tuple[float, float] | None = (1.0 + 1e-6, 50.0)
    removable: Removable | None = None

    def __call__(self, z):
        return _evaluate(self.numerator, self.denominator, self.removable, z)

    @property
    def f(self) -> ComplexFn:
        return self.__call__


def _evaluate(num, den, removable, x):
    scalar = np.ndim(x) == 0
    x = np.asarray(x, dtype=complex)
    out = np.empty(x.shape, dtype=complex)
    near = np.zeros(x.shape, dtype=bool)
    if removable is not None:
        near = np.abs(x - removable.point) < removable.radius
        if near.any():
            out[near] = removable.func(x[near])
    far = ~near
    if far.any():
        xf = x[far]
        d = np.broadcast_to(den(xf), xf.shape)
        bad = np.abs(d) < POLE_GUARD
        if bad.any():
            raise PoleHit(f"denominator vanishes at {complex(xf[bad][0])!r}")
        out[far] = num(xf) / d
    return complex(out[()]) if scalar else out


def eval_transform(spec: TransformSpec, s):
    """Evaluate ``spec`` at ``s`` (scalar or array); raises PoleHit near zeros."""
    return _evaluate(spec.numerator, spec.denominator, spec.removable, s)


def check_normalization(spec: TransformSpec | PgfSpec, tol: float = 1e-12) -> bool:
    at = 1.0 if isinstance(spec, PgfSpec) else 0.0
    return abs(spec(at) - 1.0) <= tol


# -- catalog ----------------------------------------------------------------


def _positive(name, value):
    if not (np.isfinite(value) and value > 0):
        raise BadParam(f"{name} must be positive, got {value!r}")
    return float(value)


def _const(c):
    return lambda s: c + 0 * np.asarray(s, dtype=complex)


def make_exponential(mu: float) -> TransformSpec:
    mu = _positive("mu", mu)
    return TransformSpec(
        id="exponential",
        numerator=_const(mu),
        denominator=lambda s: s + mu,
        params={"mu": mu},
        search_bracket=(-mu - 1.0, -1e-6),
        known_sigma0=-mu,
        source={"catalog": "exponential", "params": {"mu": mu}},
    )


def make_erlang(k: int, mu: float) -> TransformSpec:
    mu = _positive("mu", mu)
    if int(k) != k or k < 1:
        raise BadParam(f"k must be a positive integer, got {k!r}")
    k = int(k)
    return TransformSpec(
        id="erlang",
        numerator=_const(mu**k),
        denominator=lambda s: (s + mu) ** k,
        params={"k": k, "mu": mu},
        search_bracket=(-mu - 1.0, -1e-6),
        known_sigma0=-mu,
        source={"catalog": "erlang", "params": {"k": k, "mu": mu}},
    )


def make_hyperexponential(p: float, mu1: float, mu2: float) -> TransformSpec:
    mu1 = _positive("mu1", mu1)
    mu2 = _positive("mu2", mu2)
    if not (0.0 <= p <= 1.0):
        raise BadParam(f"p must lie in [0, 1], got {p!r}")
    if p == 1.0 or mu1 == mu2:
        return make_exponential(mu1)
    if p == 0.0:
        return make_exponential(mu2)
    slow = min(mu1, mu2)
    return TransformSpec(
        id="hyperexponential",
        numerator=lambda s: p * mu1 * (s + mu2) + (1 - p) * mu2 * (s + mu1),
        denominator=lambda s: (s + mu1) * (s + mu2),
        params={"p": p, "mu1": mu1, "mu2": mu2},
        # midpoint between the two real poles: the product changes sign once
        search_bracket=(-(slow + max(mu1, mu2)) / 2.0, -1e-6),
        known_sigma0=-slow,
        source={"catalog": "hyperexponential", "params": {"p": p, "mu1": mu1, "mu2": mu2}},
    )


def _check_rho(rho):
    if not (np.isfinite(rho) and 0.0 < rho < 1.0):
        raise BadParam(f"rho must lie in (0, 1), got {rho!r}")
    return float(rho)


# 1/(j+1)! for j = 0..5: six-term series of (e^x - 1)/x
_EXPM1_OVER_X = np.array([1.0 / math.factorial(j + 1) for j in range(6)])


def _expm1_over_x(x):
    return np.polynomial.polynomial.polyval(x, _EXPM1_OVER_X)


def make_md1_sojourn(rho: float) -> TransformSpec:
    """M/D/1 sojourn-time transform (unit service, Poisson arrivals at rate rho)."""
    rho = _check_rho(rho)

    def series(s):
        # (1 - e^{-s})/s = expm1_over_x(-s); the factor s cancels
        return (1 - rho) * np.exp(-s) / (1 - rho * _expm1_over_x(-s))

    return TransformSpec(
        id="md1_sojourn",
        numerator=lambda s: (1 - rho) * s * np.exp(-s),
        denominator=lambda s: s - rho + rho * np.exp(-s),
        params={"rho": rho},
        search_bracket=(-3.0, -1e-6),
        removable=Removable(0.0, REMOVABLE_RADIUS, series),
        source={"catalog": "md1_sojourn", "params": {"rho": rho}},
    )


def make_catalog(dist: str, params: Mapping[str, float]) -> TransformSpec:
    params = dict(params)
    try:
        if dist == "exponential":
            return make_exponential(params["mu"])
        if dist == "erlang":
            return make_erlang(params["k"], params["mu"])
        if dist == "hyperexponential":
            return make_hyperexponential(params["p"], params["mu1"], params["mu2"])
        if dist == "md1_sojourn":
            return make_md1_sojourn(params["rho"])
    except KeyError as exc:
        raise BadParam(f"{dist}: missing parameter {exc.args[0]!r}") from None
    raise BadParam(f"unknown distribution {dist!r}")


def make_md1_queue_pgf(rho: float) -> PgfSpec:
    """Pollaczek-Khinchin PGF of the M/D/1 number in system."""
    rho = _check_rho(rho)

    def series(z):
        w = z - 1
        return (1 - rho) * np.exp(rho * w) / (1 - rho * _expm1_over_x(rho * w))

    return PgfSpec(
        id="md1_queue",
        numerator=lambda z: (1 - rho) * (z - 1) * np.exp(rho * (z - 1)),
        denominator=lambda z: z - np.exp(rho * (z - 1)),
        params={"rho": rho},
        radius_bracket=(1.0 + 1e-6, 1.0 + 20.0 / rho),
        removable=Removable(1.0, REMOVABLE_RADIUS, series),
    )


def make_geometric_pgf(q: float) -> PgfSpec:
    """PGF (1-q) z / (1 - q z) of a geometric variable on {1, 2, ...}."""
    if not (0.0 < q < 1.0):
        raise BadParam(f"q must lie in (0, 1), got {q!r}")
    q = float(q)
    return PgfSpec(
        id="geometric",
        numerator=lambda z: (1 - q) * z,
        denominator=lambda z: 1 - q * z,
        params={"q": q},
        radius_bracket=(1.0 + 1e-9, 2.0 / q),
    )


def make_deterministic_pgf() -> PgfSpec:
    """f(z) = z, i.e. X = 1 almost surely.  Entire: no finite radius."""
    return PgfSpec(
        id="deterministic",
        numerator=lambda z: np.asarray(z, dtype=complex),
        denominator=_const(1.0),
        params={},
        radius_bracket=(1.0 + 1e-9, 1e6),
    )


def make_pgf_catalog(dist: str, params: Mapping[str, float]) -> PgfSpec:
    params = dict(params)
    try:
        if dist in ("md1_queue", "md1_queue_pgf"):
            return make_md1_queue_pgf(params["rho"])
        if dist == "geometric":
            return make_geometric_pgf(params["q"])
        if dist == "deterministic":
            return make_deterministic_pgf()
    except KeyError as exc:
        raise BadParam(f"{dist}: missing parameter {exc.args[0]!r}") from None
    raise BadParam(f"unknown generating function {dist!r}")


PGF_CATALOG = ("md1_queue", "geometric", "deterministic")
TRANSFORM_CATALOG = ("exponential", "erlang", "hyperexponential", "md1_sojourn")


def pgf_to_ls(pgf: PgfSpec) -> TransformSpec:
    """phi(s) = f(e^{-s}); the radius bracket maps to an abscissa bracket by -log."""
    bracket = (-math.log(pgf.radius_bracket[1]), -math.log(pgf.radius_bracket[0]))
    removable = None
    if pgf.removable is not None:
        z0 = complex(pgf.removable.point)
        if z0 != 0:
            s0 = -np.log(z0)
            # slightly wider than the z-radius so the PGF's own branch decides
            removable = Removable(s0, 2 * pgf.removable.radius, lambda s: pgf(np.exp(-s)))
    return TransformSpec(
        id=f"pgf:{pgf.id}",
        numerator=lambda s: pgf.numerator(np.exp(-s)),
        denominator=lambda s: pgf.denominator(np.exp(-s)),
        params=dict(pgf.params),
        search_bracket=bracket,
        removable=removable,
        source={"pgf": pgf.id, "params": dict(pgf.params)},
    )


# -- custom expression trees ------------------------------------------------

_BINARY = {
    "add": np.add, "+": np.add,
    "sub": np.subtract, "-": np.subtract,
    "mul": np.multiply, "*": np.multiply,
    "div": np.divide, "/": np.divide,
    "pow": np.power, "^": np.power,
}
_UNARY = {"exp": np.exp, "neg": np.negative}


def compile_expression(node: Any, params: Mapping[str, float] | None = None,
                       var: str = "s") -> ComplexFn:
    """Compile a JSON expression tree into a vectorised complex function.

    Nodes are numbers, ``{"const": c}``, ``{"var": name}`` (or the bare
    string ``name``), ``{"param": key}``, and ``{"op": op, "args": [...]}``
    with ``op`` in add/sub/mul/div/pow (n-ary folds left for add/mul),
    exp, neg.
    """
    params = params or {}

    if isinstance(node, bool):
        raise BadParam("booleans are not valid expression nodes")
    if isinstance(node, (int, float)):
        return _const(complex(node))
    if isinstance(node, str):
        if node != var:
            raise BadParam(f"unknown variable {node!r} (expected {var!r})")
        return lambda x: np.asarray(x, dtype=complex)
    if not isinstance(node, Mapping):
        raise BadParam(f"invalid expression node {node!r}")
    if "const" in node:
        value = node["const"]
        if isinstance(value, (list, tuple)):
            value = complex(value[0], value[1])
        return _const(complex(value))
    if "var" in node:
        return compile_expression(node["var"], params, var)
    if "param" in node:
        try:
            return _const(complex(params[node["param"]]))
        except KeyError:
            raise BadParam(f"unknown parameter {node['param']!r}") from None
    op = node.get("op")
    args = [compile_expression(a, params, var) for a in node.get("args", [])]
    if op in _UNARY:
        if len(args) != 1:
            raise BadParam(f"{op} takes one argument")
        f, (a,) = _UNARY[op], args
        return lambda x: f(a(x))
    if op in _BINARY:
        if len(args) < 2 or (op not in ("add", "+", "mul", "*") and len(args) != 2):
            raise BadParam(f"{op} has wrong arity {len(args)}")
        f = _BINARY[op]

        def fold(x, f=f, args=args):
            acc = args[0](x)
            for a in args[1:]:
                acc = f(acc, a(x))
            return acc

        return fold
    raise BadParam(f"unknown operator {op!r}")


def make_custom(numerator: Any, denominator: Any, search_bracket=(-3.0, -1e-6),
                params: Mapping[str, float] | None = None,
                known_sigma0: float | None = None) -> TransformSpec:
    params = dict(params or {})
    lo, hi = (float(v) for v in search_bracket)
    if not lo < hi:
        raise BadParam(f"search bracket must be increasing, got {search_bracket!r}")
    return TransformSpec(
        id="custom",
        numerator=compile_expression(numerator, params),
        denominator=compile_expression(denominator, params),
        params=params,
        search_bracket=(lo, hi),
        known_sigma0=known_sigma0,
        source={"custom": {"numerator": numerator, "denominator": denominator}},
    )


# -- JSON -------------------------------------------------------------------


def spec_to_dict(spec: TransformSpec | PgfSpec) -> dict:
    if isinstance(spec, PgfSpec):
        return {
            "kind": "pgf",
            "id": spec.id,
            "params": dict(spec.params),
            "radius_bracket": list(spec.radius_bracket) if spec.radius_bracket else None,
        }
    src = dict(spec.source or {})
    out = {
        "kind": "transform",
        "id": spec.id,
        "params": dict(spec.params),
        "search_bracket": list(spec.search_bracket),
        "known_sigma0": spec.known_sigma0,
    }
    if "pgf" in src:
        out["pgf"] = {"id": src["pgf"], "params": src["params"]}
    if "custom" in src:
        out["numerator"] = src["custom"]["numerator"]
        out["denominator"] = src["custom"]["denominator"]
    return out


def spec_from_dict(data: Mapping[str, Any]) -> TransformSpec | PgfSpec:
    kind = data.get("kind", "transform")
    if kind == "pgf":
        pgf = make_pgf_catalog(data["id"], data.get("params", {}))
        if data.get("radius_bracket"):
            pgf = PgfSpec(pgf.id, pgf.numerator, pgf.denominator, pgf.params,
                          tuple(data["radius_bracket"]), pgf.removable)
        return pgf
    if "pgf" in data:
        return pgf_to_ls(make_pgf_catalog(data["pgf"]["id"], data["pgf"].get("params", {})))
    ident = data.get("id", "custom")
    if ident == "custom" or "numerator" in data:
        return make_custom(
            data["numerator"], data["denominator"],
            data.get("search_bracket", (-3.0, -1e-6)),
            data.get("params"), data.get("known_sigma0"),
        )
    spec = make_catalog(ident, data.get("params", {}))
    if data.get("search_bracket"):
        spec = TransformSpec(spec.id, spec.numerator, spec.denominator, spec.params,
                             tuple(data["search_bracket"]), spec.known_sigma0,
                             spec.removable, spec.source)
    return spec
