"""Pole analysis of a transform at its abscissa of convergence.

The abscissa sigma0 is the rightmost real zero of the denominator.  The pole
order comes from the argument principle on a small circle around sigma0, the
Laurent coefficients from trapezoidal contour integrals on the same circle,
and analyticity near the axis Re s = sigma0 is certified by counting poles
in a rectangle with the argument principle.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import (AmbiguousOrder, Cancellation, ContourThroughPole, NoBracket,
                     NotConverged, PoleHit)
from .transforms import POLE_GUARD, TransformSpec, eval_transform

WINDING_TOL = 0.1
CANCEL_TOL = 1e-10
ROOT_TOL = 1e-12
BASE_NODES = 256
MAX_NODES = 1 << 15
LAURENT_RTOL = 1e-8
JITTER_RETRIES = 5


@dataclass
class PoleInfo:
    sigma0: float
    order: int
    laurent: list[float]
    strip_halfwidth: float
    extra_poles_in_strip: int
    contour_radius: float
    quadrature_nodes: int
    winding_residual: float = 0.0

    @property
    def leading(self) -> float:
        return self.laurent[-1]

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class PoleList:
    rectangle: tuple[float, float, float, float]
    poles: list[tuple[complex, int]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "rectangle": list(self.rectangle),
            "poles": [{"re": z.real, "im": z.imag, "order": m} for z, m in self.poles],
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["re", "im", "order"])
        for z, m in self.poles:
            w.writerow([repr(z.real), repr(z.imag), m])
        return buf.getvalue()


# -- abscissa ---------------------------------------------------------------


def _real_fn(f):
    return lambda x: float(np.real(f(complex(x))))


def _complex_step(f, x, h=1e-20):
    return float(np.imag(f(complex(x, h)))) / h


def _bisect(g, lo, hi, glo):
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        gm = g(mid)
        if gm == 0.0:
            return mid
        if (gm > 0) == (glo > 0):
            lo, glo = mid, gm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def find_abscissa(spec: TransformSpec, scan_points: int = 2001) -> float:
    """Rightmost real zero of the denominator inside ``spec.search_bracket``.

    The bracket is scanned for sign changes, the rightmost one is bisected and
    the result polished with Newton steps (complex-step derivative).
    """
    den = spec.denominator
    g = _real_fn(den)
    root = None
    if spec.known_sigma0 is not None and abs(den(complex(spec.known_sigma0))) < ROOT_TOL:
        root = float(spec.known_sigma0)
    else:
        lo, hi = spec.search_bracket
        xs = np.linspace(lo, hi, scan_points)
        vals = np.real(den(xs.astype(complex)))
        sign = np.sign(vals)
        exact = np.flatnonzero(sign == 0)
        change = np.flatnonzero(sign[:-1] * sign[1:] < 0)
        if exact.size == 0 and change.size == 0:
            raise NoBracket(f"no sign change of the denominator on [{lo}, {hi}]")
        best_exact = xs[exact[-1]] if exact.size else -np.inf
        best_change = xs[change[-1]] if change.size else -np.inf
        if best_exact >= best_change:
            root = float(best_exact)
        else:
            i = change[-1]
            root = float(_bisect(g, xs[i], xs[i + 1], vals[i]))
        for _ in range(4):
            d = _complex_step(den, root)
            if d == 0.0 or not np.isfinite(d):
                break
            step = g(root) / d
            if not np.isfinite(step) or abs(step) > 1e-3:
                break
            root = float(root - step)
        if abs(den(complex(root))) >= ROOT_TOL:
            raise NoBracket(f"root refinement stalled at {root!r}: "
                            f"|den| = {abs(den(complex(root))):.3e}")
    if abs(spec.numerator(complex(root))) < CANCEL_TOL:
        raise Cancellation(f"numerator vanishes at {root!r}: removable point, not a pole")
    return root


# -- argument principle -----------------------------------------------------


def _winding(f, curve, n0=64, max_rounds=40, max_points=200_000, length=1.0):
    """Winding number of ``f`` along the closed curve ``curve(t)``, t in [0, 1].

    Samples are added until, on every step, both the phase change and the
    bound |dz| * |f'/f| stay below pi/4.  The log-derivative test stops a
    zero close to the contour from aliasing a whole turn between two
    samples.  Raises ContourThroughPole when a sample lands on a zero or the
    refinement does not settle.
    """
    h = 1e-7 * length

    def sample(t):
        z = curve(t)
        v = np.asarray(f(z), dtype=complex)
        dv = (np.asarray(f(z + h), dtype=complex) - np.asarray(f(z - h), dtype=complex)) / (2 * h)
        with np.errstate(divide="ignore", invalid="ignore"):
            ld = np.abs(dv / v)
        return z, v, ld

    t = np.linspace(0.0, 1.0, n0 + 1)
    z, v, ld = sample(t)
    for _ in range(max_rounds):
        if np.any(np.abs(v) < POLE_GUARD) or not np.all(np.isfinite(v)):
            raise ContourThroughPole("contour passes through a zero")
        dphi = np.angle(v[1:] / v[:-1])
        reach = np.abs(np.diff(z)) * np.maximum(ld[1:], ld[:-1])
        bad = np.flatnonzero((np.abs(dphi) > math.pi / 4) | (reach > math.pi / 4))
        if bad.size == 0:
            return float(dphi.sum() / (2 * math.pi))
        if t.size + bad.size > max_points:
            break
        tm = 0.5 * (t[bad] + t[bad + 1])
        zm, vm, lm = sample(tm)
        t = np.insert(t, bad + 1, tm)
        z = np.insert(z, bad + 1, zm)
        v = np.insert(v, bad + 1, vm)
        ld = np.insert(ld, bad + 1, lm)
    raise ContourThroughPole("phase refinement did not converge")


def _circle(center, radius):
    return lambda t: center + radius * np.exp(2j * math.pi * t)


def _rectangle(re0, re1, im0, im1):
    corners = np.array([complex(re0, im0), complex(re1, im0),
                        complex(re1, im1), complex(re0, im1), complex(re0, im0)])
    perim = 2 * ((re1 - re0) + (im1 - im0))
    cum = np.concatenate([[0.0], np.cumsum(np.abs(np.diff(corners)))]) / perim

    def curve(t):
        t = np.asarray(t, dtype=float)
        k = np.clip(np.searchsorted(cum, t, side="right") - 1, 0, 3)
        frac = (t - cum[k]) / (cum[k + 1] - cum[k])
        return corners[k] + frac * (corners[k + 1] - corners[k])

    return curve, perim


def _zero_count(f, curve, n0, length):
    w = _winding(f, curve, n0, length=length)
    n = round(w)
    if abs(w - n) > WINDING_TOL:
        raise ContourThroughPole(f"non-integer winding {w:.4f}")
    return int(n)


def rect_counts(spec: TransformSpec, rect) -> tuple[int, int]:
    """(denominator zeros, numerator zeros) inside ``rect = (re0, re1, im0, im1)``."""
    curve, perim = _rectangle(*rect)
    n0 = int(min(4096, max(64, 8 * perim)))
    return (_zero_count(spec.denominator, curve, n0, perim),
            _zero_count(spec.numerator, curve, n0, perim))


def _disk_counts(spec, center, radius):
    curve = _circle(center, radius)
    n0 = int(min(4096, max(64, 16 * radius)))
    length = 2 * math.pi * radius
    return (_zero_count(spec.denominator, curve, n0, length),
            _zero_count(spec.numerator, curve, n0, length))


def choose_contour_radius(spec: TransformSpec, sigma0: float) -> float:
    """min(0.4 * distance to the nearest other zero, 0.5), from a radius ladder."""
    radii = 1.25 * 0.8 ** np.arange(32)
    counts = []
    for r in radii[::-1]:
        try:
            counts.append(_disk_counts(spec, sigma0, r))
        except ContourThroughPole:
            counts.append(None)
    counts = counts[::-1]
    base = counts[-1]
    if base is None:
        raise AmbiguousOrder("cannot resolve the zero structure near sigma0")
    clean = radii[-1]
    for r, c in zip(radii[::-1], counts[::-1]):
        if c != base:
            break
        clean = r
    return float(min(0.4 * clean, 0.5))


def _nodes(sigma0, eps, n):
    theta = 2 * math.pi * np.arange(n) / n
    u = eps * np.exp(1j * theta)
    return sigma0 + u, u


def winding_number(spec: TransformSpec, sigma0: float, eps: float, nodes: int = BASE_NODES,
                   func=None) -> float:
    """(1/2 pi i) of the contour integral of f'/f on |s - sigma0| = eps.

    Trapezoid rule with ``nodes`` points; f' by central differences with step
    1e-6 * eps.
    """
    f = func if func is not None else (lambda s: eval_transform(spec, s))
    s, u = _nodes(sigma0, eps, nodes)
    h = 1e-6 * eps
    fs = f(s)
    dfs = (f(s + h) - f(s - h)) / (2 * h)
    return float(np.real(np.mean(dfs / fs * u)))


def pole_order(spec: TransformSpec, sigma0: float, eps: float | None = None,
               nodes: int = BASE_NODES) -> int:
    if eps is None:
        eps = choose_contour_radius(spec, sigma0)
    w = winding_number(spec, sigma0, eps, nodes)
    d = -round(w)
    if abs(w + d) >= WINDING_TOL:
        raise AmbiguousOrder(f"winding {w:.4f} is not within {WINDING_TOL} of an integer")
    if d <= 0:
        raise AmbiguousOrder(f"winding {w:.4f}: no pole enclosed at {sigma0!r}")
    return int(d)


def _laurent_raw(spec, sigma0, order, eps, n):
    s, u = _nodes(sigma0, eps, n)
    vals = eval_transform(spec, s)
    return np.array([np.mean(vals * u**j) for j in range(1, order + 1)])


def laurent_coefficients(spec: TransformSpec, sigma0: float, order: int,
                         eps: float | None = None, nodes: int = BASE_NODES,
                         return_nodes: bool = False):
    """A_j = (1/2 pi i) * contour integral of phi(s) (s - sigma0)^(j-1), j = 1..order.

    The node count is doubled until successive results agree to 1e-8 relative.
    """
    if eps is None:
        eps = choose_contour_radius(spec, sigma0)
    n = nodes
    prev = _laurent_raw(spec, sigma0, order, eps, n)
    while True:
        if 2 * n > MAX_NODES:
            raise NotConverged(f"Laurent coefficients unsettled at {n} nodes")
        n *= 2
        cur = _laurent_raw(spec, sigma0, order, eps, n)
        scale = max(np.max(np.abs(cur)), 1e-300)
        if np.max(np.abs(cur - prev)) <= LAURENT_RTOL * scale:
            break
        prev = cur
    if np.max(np.abs(cur.imag)) > LAURENT_RTOL * scale:
        raise NotConverged("Laurent coefficients have a non-negligible imaginary part")
    out = cur.real.copy()
    out[np.abs(out) < 1e-14 * scale] = 0.0
    return (out, n) if return_nodes else out


def principal_part(laurent, sigma0):
    coeffs = np.asarray(laurent, dtype=float)
    return lambda s: sum(a / (np.asarray(s) - sigma0) ** (j + 1) for j, a in enumerate(coeffs))


def residual_winding(spec: TransformSpec, sigma0: float, laurent, eps: float,
                     nodes: int = BASE_NODES) -> float:
    """Winding of phi minus its principal part; ~0 when all pole content is captured."""
    pp = principal_part(laurent, sigma0)
    rem = lambda s: eval_transform(spec, s) - pp(s)  # noqa: E731
    s, _ = _nodes(sigma0, eps, nodes)
    scale = np.max(np.abs(eval_transform(spec, s)))
    if np.max(np.abs(rem(s))) <= 1e-12 * scale:
        # phi is exactly its principal part: nothing left to wind
        return 0.0
    return winding_number(spec, sigma0, eps, nodes, func=rem)


# -- strip certificate and pole maps ----------------------------------------


def _jitter(k):
    # deterministic, irrational-ish offsets
    return 1.0 + 1e-3 * ((k * 0.6180339887498949) % 1.0 + 0.1)


def _net_poles(spec, rect, cell_aspect=2.0):
    re0, re1, im0, im1 = rect
    width = re1 - re0
    ncell = max(1, int(math.ceil((im1 - im0) / (cell_aspect * width))))
    ncell += 1 - ncell % 2  # odd: the real axis stays inside the middle cell
    edges = np.linspace(im0, im1, ncell + 1)
    total = 0
    for a, b in zip(edges[:-1], edges[1:]):
        dz, nz = rect_counts(spec, (re0, re1, a, b))
        if dz < 0 or nz < 0:
            raise ContourThroughPole("negative zero count")
        total += dz - nz
    return total


def verify_strip_analyticity(spec: TransformSpec, sigma0: float, lam: float,
                             eps: float | None = None, order: int | None = None) -> int:
    """Number of poles of phi within the strip segment around sigma0, less the pole at sigma0.

    Rectangle [sigma0 - d, sigma0 + d] x [2 sigma0 lam, -2 sigma0 lam] with
    d = eps/2; zero certifies analyticity on the segment except sigma0.
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    if eps is None:
        eps = choose_contour_radius(spec, sigma0)
    big = -2.0 * sigma0 * lam
    last = None
    for k in range(JITTER_RETRIES + 1):
        j = _jitter(k) if k else 1.0
        half = 0.5 * eps * j
        top = big * (2.0 - j)
        try:
            in_rect = _net_poles(spec, (sigma0 - half, sigma0 + half, -top, top))
            dz, nz = _disk_counts(spec, sigma0, eps)
            return int(in_rect - (dz - nz))
        except (ContourThroughPole, PoleHit) as exc:
            last = exc
    raise ContourThroughPole(f"strip contour kept hitting zeros: {last}")


def _polish(spec, z, mult, steps=30):
    f = spec.denominator
    for _ in range(steps):
        h = 1e-7 * max(1.0, abs(z))
        fz = f(z)
        if fz == 0:
            break
        d = (f(z + h) - f(z - h)) / (2 * h)
        if d == 0 or not np.isfinite(d):
            break
        step = mult * fz / d
        z = z - step
        if abs(step) < 1e-15 * max(1.0, abs(z)):
            break
    z = complex(z)
    if abs(z.imag) < 1e-14 * max(1.0, abs(z)):
        z = complex(z.real, 0.0)
    return z


def locate_poles_rect(spec: TransformSpec, rect, min_size: float = 1e-6,
                      newton_size: float = 1e-2) -> PoleList:
    """All poles of phi in ``rect = (re0, re1, im0, im1)`` by recursive quadrisection.

    Cells are split while they hold denominator zeros; a cell holding a
    single simple zero is Newton-polished once it is smaller than
    ``newton_size``, clustered zeros are followed down to ``min_size``.
    Leaves report order = denominator zeros - numerator zeros; removable
    points (order <= 0) are dropped.  Output is sorted by real part,
    descending (ties: imaginary part ascending).
    """
    re0, re1, im0, im1 = (float(v) for v in rect)
    root_rect = None
    counts = None
    for k in range(JITTER_RETRIES + 1):
        j = _jitter(k) - 1.0 if k else 0.0
        trial = (re0 - j * (re1 - re0), re1 + j * (re1 - re0),
                 im0 - j * (im1 - im0), im1 + j * (im1 - im0))
        try:
            counts = rect_counts(spec, trial)
            root_rect = trial
            break
        except (ContourThroughPole, PoleHit):
            continue
    if root_rect is None:
        raise ContourThroughPole("rectangle boundary kept hitting zeros")

    found: list[tuple[complex, int]] = []
    stack = [(root_rect, counts)]
    while stack:
        cell, (dz, nz, *stuck) = stack.pop()
        a0, a1, b0, b1 = cell
        size = max(a1 - a0, b1 - b0)
        if dz == 0:
            continue
        if (dz == 1 and size < newton_size) or size < min_size or stuck:
            centre = complex(0.5 * (a0 + a1), 0.5 * (b0 + b1))
            order = dz - nz
            if order > 0:
                z = _polish(spec, centre, dz)
                if abs(z - centre) > 2 * size:
                    z = centre
                found.append((z, order))
            continue
        # split slightly off-centre so grid lines rarely cross symmetric zeros
        for k in range(JITTER_RETRIES + 1):
            fx = 0.5 + 0.0137 * _jitter(k)
            fy = 0.5 - 0.0113 * _jitter(k)
            xm = a0 + fx * (a1 - a0)
            ym = b0 + fy * (b1 - b0)
            kids = [(a0, xm, b0, ym), (xm, a1, b0, ym), (a0, xm, ym, b1), (xm, a1, ym, b1)]
            try:
                kid_counts = [rect_counts(spec, c) for c in kids]
            except (ContourThroughPole, PoleHit):
                continue
            if sum(c[0] for c in kid_counts) == dz:
                break
        else:
            if size >= newton_size:
                raise ContourThroughPole(f"subdivision of {cell} is inconsistent")
            # a multiple zero: |den| drops under the guard before min_size
            stack.append((cell, (dz, nz, True)))
            continue
        stack.extend(zip(kids, kid_counts))
    found.sort(key=lambda p: (-round(p[0].real, 9), round(p[0].imag, 9)))
    return PoleList(rectangle=(re0, re1, im0, im1), poles=found)


def analyze_pole(spec: TransformSpec, lam: float | None = None) -> PoleInfo:
    """find_abscissa -> pole_order -> laurent_coefficients (-> strip count)."""
    sigma0 = find_abscissa(spec)
    eps = choose_contour_radius(spec, sigma0)
    w = winding_number(spec, sigma0, eps)
    order = pole_order(spec, sigma0, eps)
    laurent, n = laurent_coefficients(spec, sigma0, order, eps, return_nodes=True)
    extra = 0
    halfwidth = 0.0
    if lam is not None:
        halfwidth = -2.0 * sigma0 * lam
        extra = verify_strip_analyticity(spec, sigma0, lam, eps)
    return PoleInfo(
        sigma0=sigma0, order=order, laurent=[float(a) for a in laurent],
        strip_halfwidth=halfwidth, extra_poles_in_strip=extra,
        contour_radius=eps, quadrature_nodes=n,
        winding_residual=abs(w + order),
    )
