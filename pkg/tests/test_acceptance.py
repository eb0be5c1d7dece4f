"""Acceptance criteria 1-10, one verdict line each."""
import io
import json
import math
import time

import numpy as np
from scipy.optimize import bisect

from acceptance_log import report
from tailspectra import cli
from tailspectra.bounds import analyze_tail
from tailspectra.empirical import (
    build_counterexample, counterexample_lim_points, empirical_tail, estimate_decay_slope,
    normalized_ratio, sample_catalog, simulate_md1,
)
from tailspectra.extremal import (
    ExtremalConfig, eval_majorant, extremal_integrals, find_omega0, lattice_sum_audit,
    sin_power_integral, verify_lemmas,
)
from tailspectra.reports import strip_volatile
from tailspectra.spectral import (
    choose_contour_radius, find_abscissa, laurent_coefficients, pole_order,
)
from tailspectra.transforms import make_erlang, make_exponential

MD1_ROOT = bisect(lambda s: s - 0.5 + 0.5 * math.exp(-s), -3.0, -1e-6, xtol=1e-15, rtol=1e-15)


def _cli(argv, out_dir):
    cfg = cli.config_from_args(cli.build_parser().parse_args([*argv, "--out", str(out_dir)]))
    return cli.run(cfg, io.StringIO())


def test_c01_md1_abscissa(tmp_path):
    t0 = time.perf_counter()
    status, paths = _cli(["analyze", "--dist", "md1_sojourn", "--rho", "0.5"], tmp_path)
    elapsed = time.perf_counter() - t0
    sigma0 = json.loads(paths[0].read_text())["result"]["decay_rate"]
    ok = (status == 0 and abs(sigma0 + 1.26) <= 0.01 and abs(sigma0 - MD1_ROOT) <= 1e-9
          and elapsed < 1.0)
    assert report(1, ok, f"sigma0={sigma0:.12f} bisection={MD1_ROOT:.12f} "
                         f"runtime={elapsed:.2f}s")


def _stable(spec, s0):
    eps = choose_contour_radius(spec, s0)
    D = pole_order(spec, s0, eps)
    a = laurent_coefficients(spec, s0, D, eps)
    b = laurent_coefficients(spec, s0, D, eps / 2)
    return D, a, float(np.max(np.abs(a - b)) / np.max(np.abs(a)))


def test_c02_pole_structure():
    D1, a1, r1 = _stable(make_exponential(1.0), find_abscissa(make_exponential(1.0)))
    D2, a2, r2 = _stable(make_erlang(2, 1.0), find_abscissa(make_erlang(2, 1.0)))
    ok = (D1 == 1 and abs(a1[0] - 1) <= 1e-6 and D2 == 2 and abs(a2[1] - 1) <= 1e-6
          and abs(a2[0]) <= 1e-6 and r1 <= 1e-7 and r2 <= 1e-7)
    assert report(2, ok, f"exp D={D1} A1={a1[0]:.3g}; erlang D={D2} A2={a2[1]:.3g} "
                         f"A1={a2[0]:.2g}; eps/2 drift {max(r1, r2):.1e}")


def test_c03_lemma_suite():
    t0 = time.perf_counter()
    w0 = find_omega0(3, use_table=False)
    reps = [verify_lemmas(w, 3, checks=("1", "2", "3", "4")) for w in (w0, w0 + 5)]
    elapsed = time.perf_counter() - t0
    worst = min(r.worst_violation for r in reps)
    ok = (w0 <= 40 and all(r.omega_lemmas_pass and r.lemma2_pass for r in reps)
          and worst > -1e-9 and elapsed < 60)
    assert report(3, ok, f"omega0={w0:g}, checked at {w0:g} and {w0 + 5:g}, "
                         f"worst slack {worst:.2e}, runtime={elapsed:.1f}s")


def test_c04_lattice_audit():
    a = lattice_sum_audit(0.5, 3, 10**6)
    b = lattice_sum_audit(0.25, 1, 10**6)
    classical = (math.pi / math.sin(math.pi * 0.25)) ** 2
    ok = (abs(a.direct_sum - math.pi**4 / 3) <= 1e-6 and abs(a.ratio - 1 / 3) <= 1e-6
          and abs(b.direct_sum - classical) <= 1e-8)
    assert report(4, ok, f"direct={a.direct_sum:.10f} rhs={a.claimed_rhs:.6f} "
                         f"ratio={a.ratio:.10f}; K=1 err {abs(b.direct_sum - classical):.1e}")


def test_c05_interpolation():
    errs = [abs(eval_majorant(float(j), 10.0, 3) - math.exp(-10 * j)) for j in range(6)]
    errs += [abs(eval_majorant(float(j), 10.0, 3)) for j in range(-5, 0)]
    ok = max(errs) <= 1e-8
    assert report(5, ok, f"max |M(j) - target| = {max(errs):.1e}")


def test_c06_integrals():
    res = extremal_integrals(ExtremalConfig(K=3, omega=10.0, sigma0=-1.0), rtol=1e-6)
    dM = abs(res.int_M - res.int_M_quadrature) / abs(res.int_M)
    dm = abs(res.int_m - res.int_m_quadrature) / abs(res.int_m)
    i44 = sin_power_integral(4, 4)
    i42 = sin_power_integral(4, 2)
    ok = (dM <= 1e-6 and dm <= 1e-6 and res.int_m > 0
          and abs(i44 - 2 * math.pi / 3) <= 1e-8 and abs(i42 - math.pi / 2) <= 1e-8)
    assert report(6, ok, f"int M={res.int_M:.9f} (rel {dM:.1e}), int m={res.int_m:.9f} "
                         f"(rel {dm:.1e}); I44 err {abs(i44 - 2 * math.pi / 3):.1e}, "
                         f"I42 err {abs(i42 - math.pi / 2):.1e}")


def test_c07_sandwich():
    rep = analyze_tail(make_erlang(2, 1.0))
    params = {"k": 2, "mu": 1.0}
    ratios = [normalized_ratio("erlang", params, -1.0, 2, x) for x in (50.0, 200.0, 1000.0)]
    trending = ratios[0] > ratios[1] > ratios[2] and abs(ratios[2] - 1) < abs(ratios[0] - 1)
    ok = (rep.C1 <= rep.C2 and math.isfinite(rep.C2) and rep.C1 > 0
          and rep.decay_rate == -1.0 and rep.normalization_exponent == 1
          and abs(ratios[0] - 1.02) <= 1e-10 and trending)
    assert report(7, ok, f"C1={rep.C1:.6g} C2={rep.C2:.6g} decay={rep.decay_rate} "
                         f"contains 1: {rep.contained}; ratios "
                         + ", ".join(f"{r:.6f}" for r in ratios))


def test_c08_empirical():
    t0 = time.perf_counter()
    md1, _ = estimate_decay_slope(empirical_tail(simulate_md1(0.5, 10**6, 42).values))
    exp, _ = estimate_decay_slope(empirical_tail(
        sample_catalog("exponential", {"mu": 1.0}, 10**6, 42).values))
    elapsed = time.perf_counter() - t0
    ok = abs(md1 - MD1_ROOT) <= 0.1 and abs(exp + 1) <= 0.1 and elapsed < 60
    assert report(8, ok, f"md1 slope={md1:.4f} (target {MD1_ROOT:.4f}), "
                         f"exponential slope={exp:.4f}, runtime={elapsed:.1f}s")


def test_c09_counterexample():
    m = build_counterexample(2, -1.0, 4)
    curve = counterexample_lim_points(m)
    rate = dict(zip(zip(curve.meta["label"], curve.meta["n"]), curve.meta["rate"]))
    target = -1 - math.log(2)
    at_ok = all(abs(rate[("at_jump", n)] - target) <= 1e-12 for n in range(1, 5))
    near = m.rate(2059 * (1 - 1e-12))
    near_ok = abs(near - (-1 - 11 / 2059 * math.log(2))) <= 1e-9
    sep = rate[("before_jump", 3)] - rate[("at_jump", 4)]
    ok = m.c == [0, 1, 3, 11, 2059] and at_ok and near_ok and sep >= 0.99 * math.log(2)
    assert report(9, ok, f"c={m.c}, value near 2059: {near:.12f}, separation "
                         f"{sep:.6f} vs log 2 = {math.log(2):.6f}")


COMMANDS = [
    ["analyze", "--dist", "md1_sojourn", "--rho", "0.5"],
    ["analyze", "--dist", "exponential", "--mu", "1"],
    ["analyze", "--dist", "erlang", "--k", "2", "--mu", "1"],
    ["verify", "--omega", "10", "15", "--K", "3"],
    ["audit", "--t", "0.5", "--K", "3"],
    ["audit", "--t", "0.25", "--K", "1"],
    ["simulate", "--dist", "md1_sojourn", "--rho", "0.5", "--n", "1000000", "--seed", "42"],
    ["simulate", "--dist", "exponential", "--mu", "1", "--n", "1000000", "--seed", "42"],
    ["counterexample", "--h", "2", "--sigma0", "-1", "--n-max", "4"],
    ["polemap", "--dist", "md1_sojourn", "--rho", "0.5"],
]


def test_c10_determinism(tmp_path):
    mismatched = []
    for argv in COMMANDS:
        runs = []
        for k in range(2):
            out = tmp_path / f"{argv[0]}-{len(runs)}-{COMMANDS.index(argv)}"
            _, paths = _cli(argv, out)
            runs.append({p.name: p for p in paths})
        a, b = runs
        if sorted(a) != sorted(b):
            mismatched.append(" ".join(argv))
            continue
        for name in a:
            if name.endswith(".json"):
                ja = json.dumps(strip_volatile(json.loads(a[name].read_text())), sort_keys=True)
                jb = json.dumps(strip_volatile(json.loads(b[name].read_text())), sort_keys=True)
                same = ja == jb
            else:
                same = a[name].read_bytes() == b[name].read_bytes()
            if not same:
                mismatched.append(name)
    ok = not mismatched
    assert report(10, ok, f"{len(COMMANDS)} commands run twice; "
                          f"mismatches: {mismatched or 'none'}")
