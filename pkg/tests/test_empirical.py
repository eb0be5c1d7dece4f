import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tailspectra.empirical import (
    TailCurve, build_counterexample, check_monotone, chunked_draw, closed_form_tail,
    counterexample_lim_points, empirical_tail, estimate_decay_slope, load_samples,
    log_tail, normalized_ratio, oscillation_csv, sample_catalog, simulate_md1,
)
from tailspectra.errors import BadParam, Overflow, TooFewPoints

MD1_SIGMA0 = -1.2564312086261697


@pytest.fixture(scope="module")
def md1_big():
    return simulate_md1(0.5, 10**6, 42)


def test_md1_mean(md1_big):
    v = md1_big.values
    assert md1_big.count == 10**6
    se = v.std() / math.sqrt(v.size)
    # 1 + rho / (2 (1 - rho)) = 1.5
    assert abs(v.mean() - 1.5) < 3 * se
    assert v.min() >= 1.0


def test_md1_slope(md1_big):
    slope, stderr = estimate_decay_slope(empirical_tail(md1_big.values))
    assert abs(slope - MD1_SIGMA0) < 0.1
    assert stderr < 1e-2


def test_md1_reproducible():
    a = simulate_md1(0.5, 1000, 42)
    b = simulate_md1(0.5, 1000, 42)
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, simulate_md1(0.5, 1000, 43).values)


def test_thread_count_independent():
    a = simulate_md1(0.7, 300_000, 5, threads=1)
    b = simulate_md1(0.7, 300_000, 5, threads=4)
    assert np.array_equal(a.values, b.values)
    x = sample_catalog("erlang", {"k": 2, "mu": 1.0}, 200_000, 9, threads=1)
    y = sample_catalog("erlang", {"k": 2, "mu": 1.0}, 200_000, 9, threads=3)
    assert np.array_equal(x.values, y.values)


def test_chunked_draw_is_prefix_stable():
    a = chunked_draw(11, 100_000, lambda g, m: g.random(m))
    b = chunked_draw(11, 150_000, lambda g, m: g.random(m))
    assert np.array_equal(a[:65536], b[:65536])


def test_heavy_traffic_note():
    s = simulate_md1(0.99, 2000, 1)
    assert s.notes and "heavy traffic" in s.notes[0]
    assert not simulate_md1(0.5, 2000, 1).notes


@pytest.mark.parametrize("rho,n", [(0.0, 1000), (1.0, 1000), (0.5, 999), (0.5, 1000.5)])
def test_md1_bad_args(rho, n):
    with pytest.raises(BadParam):
        simulate_md1(rho, n, 1)


def test_dump_round_trip(tmp_path):
    s = sample_catalog("exponential", {"mu": 2.0}, 5000, 3)
    path = tmp_path / "s.bin"
    s.dump(path)
    back = load_samples(path)
    assert back.header() == s.header()
    assert np.array_equal(back.values, s.values)


@pytest.mark.parametrize("seed", [1, 2, 3, 4, 5])
def test_exponential_ecdf_slope(seed):
    s = sample_catalog("exponential", {"mu": 1.0}, 10**6, seed)
    slope, _ = estimate_decay_slope(empirical_tail(s.values))
    assert -1.1 < slope < -0.9


def test_closed_form_tails():
    assert log_tail("exponential", {"mu": 1.0}, 10.0) == -10.0
    want = math.log(math.exp(-50) * 51)
    assert float(log_tail("erlang", {"k": 2, "mu": 1.0}, 50.0)) == pytest.approx(want, rel=1e-14)
    assert float(log_tail("erlang", {"k": 3, "mu": 2.0}, 0.0)) == 0.0
    x = np.linspace(40, 80, 200)
    hyper = closed_form_tail("hyperexponential", {"p": 0.5, "mu1": 1.0, "mu2": 2.0}, x)
    slope, _ = estimate_decay_slope(hyper)
    assert slope == pytest.approx(-1.0, abs=1e-9)
    with pytest.raises(BadParam):
        closed_form_tail("exponential", {"mu": 1.0}, [2.0, 1.0])
    with pytest.raises(BadParam):
        log_tail("md1_sojourn", {"rho": 0.5}, 1.0)


def test_closed_form_slopes():
    x = np.linspace(0, 30, 301)
    slope, _ = estimate_decay_slope(closed_form_tail("exponential", {"mu": 1.0}, x))
    assert abs(slope + 1) < 1e-9
    x = np.linspace(20, 60, 401)
    slope, _ = estimate_decay_slope(closed_form_tail("erlang", {"k": 2, "mu": 1.0}, x))
    assert -1.05 < slope < -0.95 and slope > -1


def test_too_few_points():
    curve = TailCurve(np.arange(10.0), -np.arange(10.0), "closed_form")
    with pytest.raises(TooFewPoints):
        estimate_decay_slope(curve)


def test_normalized_ratio():
    for x in (0.5, 7.0, 300.0):
        assert normalized_ratio("exponential", {"mu": 1.0}, -1.0, 1, x) == pytest.approx(1.0)
    vals = [normalized_ratio("erlang", {"k": 2, "mu": 1.0}, -1.0, 2, x)
            for x in (50.0, 200.0, 1000.0)]
    assert abs(vals[0] - 1.02) < 1e-10
    assert vals[1] == pytest.approx(201 / 200, rel=1e-12)
    assert vals[0] > vals[1] > vals[2] > 1.0


@settings(max_examples=50, deadline=None)
@given(st.floats(1.0, 500.0), st.floats(1.0, 500.0))
def test_erlang_ratio_monotone(a, b):
    lo, hi = min(a, b), max(a, b)
    r = lambda x: normalized_ratio("erlang", {"k": 2, "mu": 1.0}, -1.0, 2, x)  # noqa: E731
    assert r(hi) <= r(lo) * (1 + 1e-12)


def test_counterexample_sequences():
    assert build_counterexample(2, -1.0, 4).c == [0, 1, 3, 11, 2059]
    assert build_counterexample(3, -1.0, 3).c == [0, 1, 4, 85]
    with pytest.raises(Overflow):
        build_counterexample(2, -1.0, 5)
    with pytest.raises(BadParam):
        build_counterexample(1, -1.0, 3)
    with pytest.raises(BadParam):
        build_counterexample(2, 0.5, 3)


def test_counterexample_values():
    m = build_counterexample(2, -1.0, 4)
    assert m.log_tail(0.0) == 0.0  # F*(0) = 0
    assert m.rate(3.0) == pytest.approx(-1 - math.log(2), abs=1e-15)
    assert m.rate(2059 * (1 - 1e-12)) == pytest.approx(-1 - 11 / 2059 * math.log(2), abs=1e-9)
    assert check_monotone(m)


@pytest.mark.parametrize("h", [2, 3])
def test_counterexample_oscillation(h):
    m = build_counterexample(h, -1.0, 4 if h == 2 else 3)
    curve = counterexample_lim_points(m)
    labels, rates, ns = curve.meta["label"], curve.meta["rate"], curve.meta["n"]
    at = [r for r, lab in zip(rates, labels) if lab == "at_jump"]
    before = [(n, r) for n, r, lab in zip(ns, rates, labels) if lab == "before_jump"]
    for r in at:
        assert r == pytest.approx(-1 - math.log(h), abs=1e-12)
    for n, r in before:
        assert r > -1 - m.c[n] / m.c[n + 1] * math.log(h) - 1e-10
    if h == 2:
        assert before[-1][1] - at[-1] >= 0.99 * math.log(h)
    csv_text = oscillation_csv(curve).splitlines()
    assert csv_text[0] == "n,label,x,log_tail,rate"


def test_index_past_last_jump():
    m = build_counterexample(2, -1.0, 2)
    with pytest.raises(Overflow):
        m.rate(1e6)
