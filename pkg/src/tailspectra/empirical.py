"""Monte Carlo and closed-form tails, slope estimates, and a non-exponential counterexample."""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import special

from . import _accel, kernels
from .errors import BadParam, Overflow, TooFewPoints

CHUNK = 1 << 16
DEFAULT_WINDOW = (0.90, 0.999)
MIN_POINTS = 50
EXACT_BUDGET = 1 << 53


# -- random streams ---------------------------------------------------------


def _stream(seed: int, chunk: int) -> np.random.Generator:
    """Substream for one chunk; depends only on (seed, chunk)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(chunk,))))


def chunked_draw(seed: int, n: int, draw, threads: int | None = None) -> np.ndarray:
    """Fill n values chunk by chunk; ``draw(rng, size)`` fills one chunk.

    Chunk c always uses substream (seed, c), so the output does not depend
    on the number of worker threads.
    """
    if n < 0:
        raise BadParam(f"sample size must be non-negative, got {n}")
    out = np.empty(n)
    bounds = [(c, c * CHUNK, min(n, (c + 1) * CHUNK)) for c in range((n + CHUNK - 1) // CHUNK)]

    def work(item):
        c, lo, hi = item
        out[lo:hi] = draw(_stream(seed, c), hi - lo)

    workers = min(threads or _accel.thread_cap(), _accel.thread_cap(), max(1, len(bounds)))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(work, bounds))
    else:
        for item in bounds:
            work(item)
    return out


# -- samples ----------------------------------------------------------------


@dataclass
class SampleSet:
    model: dict
    seed: int
    values: np.ndarray
    notes: list = field(default_factory=list)

    @property
    def count(self) -> int:
        return int(self.values.size)

    def header(self) -> dict:
        return {"model": self.model, "seed": self.seed, "count": self.count}

    def dump(self, path) -> None:
        """One JSON header line, then the values as little-endian float64."""
        with open(path, "wb") as fh:
            fh.write(json.dumps(self.header(), sort_keys=True).encode() + b"\n")
            fh.write(self.values.astype("<f8").tobytes())


def load_samples(path) -> SampleSet:
    with open(path, "rb") as fh:
        head = json.loads(fh.readline())
        values = np.frombuffer(fh.read(), dtype="<f8").copy()
    if values.size != head["count"]:
        raise ValueError(f"{path}: header says {head['count']} values, found {values.size}")
    return SampleSet(model=head["model"], seed=head["seed"], values=values)


def _check_seed(seed):
    if int(seed) != seed or seed < 0:
        raise BadParam(f"seed must be a non-negative integer, got {seed!r}")
    return int(seed)


def simulate_md1(rho: float, n: int, seed: int, threads: int | None = None) -> SampleSet:
    """Sojourn times of an M/D/1 queue with unit service and arrival rate ``rho``.

    W_{k+1} = max(0, W_k + 1 - A_k), sojourn W_k + 1; the first n//10
    customers are discarded as warm-up, so ``n`` sojourn times remain.
    """
    if not 0 < rho < 1:
        raise BadParam(f"rho must lie in (0, 1), got {rho}")
    if int(n) != n or n < 1000:
        raise BadParam(f"n must be an integer >= 1000, got {n}")
    seed = _check_seed(seed)
    n = int(n)
    warm = n // 10
    arrivals = chunked_draw(seed, n + warm, lambda g, m: g.exponential(1.0 / rho, m), threads)
    waits = kernels.lindley_waiting(1.0 - arrivals)
    notes = []
    if rho > 0.95:
        relax = 1.0 / (1.0 - math.sqrt(rho)) ** 2
        notes.append(f"heavy traffic: relaxation time ~{relax:.0f} customers vs warm-up {warm}")
    return SampleSet(model={"dist": "md1_sojourn", "rho": rho}, seed=seed,
                     values=waits[warm:] + 1.0, notes=notes)


def sample_catalog(dist: str, params: dict, n: int, seed: int,
                   threads: int | None = None) -> SampleSet:
    """Independent draws from exponential, erlang or hyperexponential."""
    seed = _check_seed(seed)
    if dist == "md1_sojourn":
        return simulate_md1(params["rho"], n, seed, threads)
    _validate(dist, params)
    if dist == "exponential":
        mu = params["mu"]
        draw = lambda g, m: g.exponential(1.0 / mu, m)  # noqa: E731
    elif dist == "erlang":
        k, mu = int(params["k"]), params["mu"]
        draw = lambda g, m: g.gamma(k, 1.0 / mu, m)  # noqa: E731
    else:
        p, mu1, mu2 = params["p"], params["mu1"], params["mu2"]

        def draw(g, m):
            pick = g.random(m) < p
            return np.where(pick, g.exponential(1.0 / mu1, m), g.exponential(1.0 / mu2, m))
    values = chunked_draw(seed, int(n), draw, threads)
    return SampleSet(model={"dist": dist, **params}, seed=seed, values=values)


# -- tail curves ------------------------------------------------------------


@dataclass
class TailCurve:
    x: np.ndarray
    log_tail: np.ndarray
    source: str
    meta: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "log_tail"])
        for a, b in zip(self.x, self.log_tail):
            w.writerow([repr(float(a)), repr(float(b))])
        return buf.getvalue()


def empirical_tail(values) -> TailCurve:
    """log of the complementary ECDF at each distinct sample value with tail > 0."""
    v = np.sort(np.asarray(values, dtype=float))
    n = v.size
    xs, last = np.unique(v, return_index=False, return_counts=True)
    above = n - np.cumsum(last)
    keep = above > 0
    return TailCurve(xs[keep], np.log(above[keep] / n), "empirical", {"n": n})


def _validate(dist, params):
    try:
        if dist == "exponential":
            ok = params["mu"] > 0
        elif dist == "erlang":
            ok = params["mu"] > 0 and int(params["k"]) == params["k"] and params["k"] >= 1
        elif dist == "hyperexponential":
            ok = 0 <= params["p"] <= 1 and params["mu1"] > 0 and params["mu2"] > 0
        else:
            raise BadParam(f"no closed-form tail for {dist!r}")
    except KeyError as exc:
        raise BadParam(f"{dist}: missing parameter {exc}") from None
    if not ok:
        raise BadParam(f"{dist}: invalid parameters {params}")


def log_tail(dist: str, params: dict, x) -> np.ndarray:
    """Exact log P(X > x) for x >= 0."""
    _validate(dist, params)
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise BadParam("closed-form tails are evaluated at x >= 0")
    if dist == "exponential":
        return -params["mu"] * x
    if dist == "erlang":
        k, mu = int(params["k"]), params["mu"]
        j = np.arange(k)
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = j * np.log(mu * x[..., None]) - special.gammaln(j + 1)
        terms[..., 0] = 0.0
        return -mu * x + special.logsumexp(terms, axis=-1)
    p, mu1, mu2 = params["p"], params["mu1"], params["mu2"]
    with np.errstate(divide="ignore"):
        a = math.log(p) if p > 0 else -np.inf
        b = math.log1p(-p) if p < 1 else -np.inf
    return np.logaddexp(a - mu1 * x, b - mu2 * x)


def closed_form_tail(dist: str, params: dict, x_grid) -> TailCurve:
    x = np.asarray(x_grid, dtype=float)
    if x.ndim != 1 or np.any(np.diff(x) <= 0):
        raise BadParam("x_grid must be strictly increasing")
    return TailCurve(x, log_tail(dist, params, x), "closed_form", {"dist": dist, **params})


def estimate_decay_slope(curve: TailCurve, window=None) -> tuple[float, float]:
    """Least-squares slope of log_tail against x, with its standard error.

    ``window`` = (q_lo, q_hi) keeps points whose distribution level
    1 - tail lies in [q_lo, q_hi].  Empirical curves default to
    (0.90, 0.999); other curves use every point.
    """
    if window is None and curve.source == "empirical":
        window = DEFAULT_WINDOW
    x, y = np.asarray(curve.x), np.asarray(curve.log_tail)
    if window is not None:
        lo, hi = window
        if not 0 <= lo < hi < 1:
            raise BadParam(f"window must satisfy 0 <= lo < hi < 1, got {window}")
        keep = (y <= math.log1p(-lo)) & (y >= math.log1p(-hi))
        x, y = x[keep], y[keep]
    if x.size < MIN_POINTS:
        raise TooFewPoints(f"{x.size} points in the window, need {MIN_POINTS}")
    from scipy import stats  # deferred: slow to import, rarely needed

    fit = stats.linregress(x, y)
    return float(fit.slope), float(fit.stderr)


def normalized_ratio(dist: str, params: dict, sigma0: float, D: int, x: float) -> float:
    """x^{-D+1} e^{-sigma0 x} P(X > x), assembled in the log domain."""
    if x <= 0:
        raise BadParam("x must be positive")
    return float(np.exp((1 - D) * math.log(x) - sigma0 * x + log_tail(dist, params, x)))


# -- counterexample ---------------------------------------------------------


@dataclass
class CounterexampleModel:
    """P(X > x) = e^{sigma0 x} h^{-c_n} for c_n <= x < c_{n+1}, c_n = c_{n-1} + h^{c_{n-1}}."""

    h: int
    sigma0: float
    c: list

    def index(self, x: float) -> int:
        """n with c_n <= x < c_{n+1}."""
        if x < 0:
            raise BadParam("x must be non-negative")
        n = 0
        while n + 1 < len(self.c) and self.c[n + 1] <= x:
            n += 1
        if n == len(self.c) - 1 and x - self.c[n] > 0:
            # next point c_n + h^c_n lies beyond x iff log(x - c_n) < c_n log h
            if math.log(x - self.c[n]) >= self.c[n] * math.log(self.h):
                raise Overflow(f"x = {x} lies past the last computed jump")
        return n

    def log_gamma_at(self, x: float) -> float:
        return -self.c[self.index(x)] * math.log(self.h)

    def log_tail(self, x: float) -> float:
        return self.sigma0 * x + self.log_gamma_at(x)

    def rate(self, x: float) -> float:
        """x^{-1} log P(X > x)."""
        n = self.index(x)
        return self.sigma0 - (self.c[n] / x) * math.log(self.h)

    def to_dict(self) -> dict:
        return {"h": self.h, "sigma0": self.sigma0, "c": [int(v) for v in self.c]}


def build_counterexample(h: int, sigma0: float, n_max: int) -> CounterexampleModel:
    if int(h) != h or h < 2:
        raise BadParam(f"h must be an integer >= 2, got {h}")
    if not sigma0 < 0:
        raise BadParam(f"sigma0 must be negative, got {sigma0}")
    if int(n_max) != n_max or n_max < 1:
        raise BadParam(f"n_max must be a positive integer, got {n_max}")
    h = int(h)
    c = [0]
    for _ in range(int(n_max)):
        prev = c[-1]
        # h**prev alone would already break the budget; don't form it
        if prev * math.log2(h) >= 54:
            raise Overflow(f"c_{len(c)} exceeds 2^53 (h={h})")
        nxt = prev + h**prev
        if nxt > EXACT_BUDGET:
            raise Overflow(f"c_{len(c)} = {nxt} exceeds 2^53")
        c.append(nxt)
    return CounterexampleModel(h=h, sigma0=float(sigma0), c=c)


def check_monotone(model: CounterexampleModel) -> bool:
    """F*(x) = 1 - e^{sigma0 x} gamma(x) is non-decreasing across every jump.

    Compares the tail just left of each c_n (still on the previous step)
    with the tail at c_n and at interior points of each step.
    """
    prev = None
    for n in range(1, len(model.c)):
        left, right = model.c[n - 1], model.c[n]
        pts = [left + 0.5 * (right - left), right * (1 - 1e-12)]
        vals = [model.sigma0 * x - model.c[n - 1] * math.log(model.h) for x in pts]
        vals.append(model.log_tail(right))
        for v in vals:
            if prev is not None and v > prev:
                return False
            prev = v
    return True


def counterexample_lim_points(model: CounterexampleModel, delta: float = 1e-12) -> TailCurve:
    """x^{-1} log P(X>x) at x = c_n and just before c_{n+1}.

    On the first subsequence the value is sigma0 - log h; on the second it
    is sigma0 - (c_n/c_{n+1}) log h, which climbs back toward sigma0.
    """
    xs, labels, ns = [], [], []
    for n in range(1, len(model.c)):
        if n >= 2:
            xs.append(model.c[n] * (1.0 - delta))
            labels.append("before_jump")
            ns.append(n - 1)
        xs.append(float(model.c[n]))
        labels.append("at_jump")
        ns.append(n)
    rate = np.array([model.rate(x) for x in xs])
    x = np.array(xs)
    return TailCurve(x, rate * x, "counterexample",
                     {"h": model.h, "sigma0": model.sigma0, "rate": rate.tolist(),
                      "label": labels, "n": ns})


def oscillation_csv(curve: TailCurve) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "label", "x", "log_tail", "rate"])
    for n, lab, x, lt, r in zip(curve.meta["n"], curve.meta["label"], curve.x,
                                curve.log_tail, curve.meta["rate"]):
        w.writerow([n, lab, repr(float(x)), repr(float(lt)), repr(float(r))])
    return buf.getvalue()


def write_text(path, text: str) -> Path:
    path = Path(path)
    path.write_text(text)
    return path
