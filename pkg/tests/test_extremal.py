import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tailspectra.errors import MethodDisagreement, PoleOfQ
from tailspectra.extremal import (
    OMEGA0_TABLE, ExtremalConfig, Grids, R_derivs_k3_closed, eval_E, eval_majorant,
    eval_minorant, eval_Q, eval_R, eval_R_deriv, eval_R_tilde, eval_scaled,
    extremal_integrals, find_omega0, integral_majorant, integral_minorant,
    lattice_sum_audit, lattice_sum_closed, lemma4_lhs, odd_order, quadrature_integral,
    series_coefficients, sin_power_integral, sinc_power, type_certificate, verify_lemmas,
)

mp.mp.dps = 40

# frozen mpmath values (40 digits, truncated)
M10_K3 = {
    0.5: 0.165207866305988055964,
    -0.5: 0.164095554303705963652,
    1.3: 0.00153683378996517225983,
    -2.7: 8.260775134195802820877e-5,
    3.25: 2.294869881332146729190e-5,
    0.999: 4.585590592277865187540e-5,
}
Q10_K3 = {-1.0: 5.991954845343252092992, 0.5: 96.55648853119976695988}
INT_M_3_10 = 6.670803006878655282761774307335871067303
INT_m_3_10 = 0.003833660271924030972914572263579054534592


def mp_R(v, K):
    v = mp.mpf(v)
    return v**K / (1 - mp.exp(-v)) if v != 0 else (mp.mpf(1) if K == 1 else mp.mpf(0))


def mp_R_complex(v, K):
    return v**K / (1 - mp.exp(-v))


def mp_R_tilde(v, omega, K):
    w = mp.mpf(omega)
    taylor = sum(mp.diff(lambda x: mp_R(x, K), w, k) * mp.mpf(v) ** k / mp.factorial(k)
                 for k in range(K))
    return mp_R(w + v, K) - taylor


def test_odd_order():
    assert [odd_order(d) for d in (1, 2, 3, 4, 5)] == [1, 3, 3, 5, 5]
    with pytest.raises(ValueError):
        odd_order(0)


def test_config():
    c = ExtremalConfig(K=3, omega=10.0, sigma0=-1.0)
    assert c.lam * c.omega == pytest.approx(2 * math.pi, rel=1e-15)
    for bad in ({"K": 2, "omega": 1, "sigma0": -1}, {"K": 3, "omega": 0, "sigma0": -1},
                {"K": 3, "omega": 1, "sigma0": 0.5}):
        with pytest.raises(ValueError):
            ExtremalConfig(**bad)


def test_R_values():
    assert eval_R(0.0, 3) == 0.0
    assert eval_R(1.0, 3) == pytest.approx(1 / (1 - math.exp(-1)), rel=1e-15)
    assert eval_R(-1.0, 3) == pytest.approx(-1 / (1 - math.e), rel=1e-15)
    assert eval_R(-1.0, 3) > 0
    assert eval_R(0.0, 1) == pytest.approx(1.0)


@pytest.mark.parametrize("K", [1, 3, 5, 7])
@pytest.mark.parametrize("v", [-7.3, -0.4, -1e-3, 0.0, 2e-4, 0.31, 0.6, 1.0, 4.5, 12.0])
def test_R_derivs_against_mpmath(K, v):
    for j in range(K + 2):
        # Cauchy-integral derivative; R is analytic for |Im v| < 2 pi
        want = float(mp.re(mp.diff(lambda x: mp_R_complex(x, K), mp.mpf(v), j,
                                   method="quad", radius=0.5)))
        got = float(eval_R_deriv(v, j, K))
        assert got == pytest.approx(want, rel=1e-10, abs=1e-12)


def test_R_deriv_limits():
    assert eval_R_deriv(60.0, 3, 3) == pytest.approx(6.0, rel=1e-12)
    assert abs(eval_R_deriv(-60.0, 2, 3)) < 1e-20
    h = 1e-5
    fd = (eval_R(1 + h, 3) - eval_R(1 - h, 3)) / (2 * h)
    assert eval_R_deriv(1.0, 1, 3) == pytest.approx(fd, abs=1e-6)


def test_k3_closed_forms_match_engine():
    # the hard-coded forms cancel badly for |v| < 0.5; the engine is checked there
    # against mpmath instead
    rng = np.random.default_rng(7)
    v = rng.uniform(0.5, 40, 1000) * rng.choice([-1.0, 1.0], 1000)
    for j in range(5):
        a = np.asarray(eval_R_deriv(v, j, 3))
        b = np.asarray(R_derivs_k3_closed(v, j))
        assert np.all(np.abs(a - b) <= 1e-10 * np.maximum(np.abs(b), 1e-3)), j


@pytest.mark.parametrize("omega,K", [(10.0, 3), (1.0, 1), (17.0, 5), (0.5, 3), (24.0, 7)])
def test_R_tilde_against_mpmath(omega, K):
    for v in (-30.0, -3.0, -0.7, -0.01, 0.02, 0.9, 5.0, 25.0):
        want = float(mp_R_tilde(v, omega, K))
        got = float(eval_R_tilde(v, omega, K))
        assert got == pytest.approx(want, rel=1e-9, abs=1e-12 * max(1.0, omega**K))


def test_R_tilde_taylor_origin():
    for omega in (1.0, 5.0, 10.0):
        for K in (1, 3, 5):
            assert eval_R_tilde(0.0, omega, K) == 0.0
            if K == 1:
                continue  # only R(omega) is subtracted, the slope survives
            h = 1e-4
            d = (eval_R_tilde(h, omega, K) - eval_R_tilde(-h, omega, K)) / (2 * h)
            assert abs(d) < 1e-6 * max(1.0, omega**K)
    assert eval_R_tilde(1.0, 10.0, 3) > 0
    assert eval_R_tilde(-1.0, 10.0, 3) < 0


def test_Q_values():
    for t, want in Q10_K3.items():
        assert eval_Q(t, 10.0, 3) == pytest.approx(want, rel=1e-12)
    assert eval_Q(-2.0, 10.0, 3) >= 0
    assert eval_Q(-2.0, 10.0, 3) <= 6 / (1 - math.exp(-10)) / 16
    for t in (0.0, 1.0, 4.0):
        with pytest.raises(PoleOfQ):
            eval_Q(t, 10.0, 3)


def test_Q_explicit_k3_coefficients():
    c, d, n = series_coefficients(10.0, 3)
    assert list(c) == [-1000.0, 300.0, -60.0, 6.0]
    assert n >= 3


@pytest.mark.parametrize("omega,K", [(10.0, 3), (3.0, 3), (1.0, 1), (17.0, 5)])
@pytest.mark.parametrize("t", [-0.5, -1.0, -2.5, -6.0])
def test_Q_duality_negative_t(omega, K, t):
    # int_0^inf Rtilde(v) e^{t v} dv, independently in mpmath
    f = lambda v: mp_R_tilde(v, omega, K) * mp.exp(t * v)  # noqa: E731
    mp.mp.dps = 25
    try:
        want = float(mp.quad(f, [0, 1, omega, 2 * omega, mp.inf]))
    finally:
        mp.mp.dps = 40
    assert eval_Q(t, omega, K) == pytest.approx(want, rel=1e-7)


@pytest.mark.parametrize("t", [0.3, 0.5, 1.3, 2.7, 4.1])
def test_positive_t_identity(t):
    omega, K = 10.0, 3
    lhs = float(lemma4_lhs([t], omega, K)[0])
    rhs = eval_Q(t, omega, K) - math.factorial(K) * math.exp(-omega * t) * float(
        lattice_sum_closed(t, K))
    assert lhs == pytest.approx(rhs, rel=1e-6)


def test_majorant_frozen_values():
    for t, want in M10_K3.items():
        assert eval_majorant(t, 10.0, 3) == pytest.approx(want, rel=1e-11)


@pytest.mark.parametrize("omega,K", [(10.0, 3), (1.0, 1), (17.0, 5), (2.5, 3)])
def test_interpolation(omega, K):
    for j in range(0, 6):
        assert abs(eval_majorant(float(j), omega, K) - math.exp(-j * omega)) < 1e-8
    for j in range(-5, 0):
        assert abs(eval_majorant(float(j), omega, K)) < 1e-8
        assert abs(eval_minorant(float(j), omega, K) - eval_majorant(float(j), omega, K)) < 1e-8
    # limits from both sides
    for j in (-3, 0, 2):
        for h in (1e-6, -1e-6):
            assert abs(eval_majorant(j + h, omega, K) - eval_majorant(float(j), omega, K)) < 1e-4


def test_minorant_values():
    assert eval_minorant(0.0, 10.0, 3) == pytest.approx(1 - 1 / (1 - math.exp(-10)), rel=1e-9)
    assert abs(eval_minorant(-3.0, 10.0, 3)) < 1e-12
    t = np.linspace(-20, 20, 40001)
    M, m = eval_majorant(t, 10.0, 3), eval_minorant(t, 10.0, 3)
    gap = M - m
    assert np.all(gap >= 0)
    assert np.allclose(gap, sinc_power(t, 3) / (1 - math.exp(-10)), rtol=1e-12, atol=1e-15)


def test_scaled_reparameterization():
    cfg = ExtremalConfig(K=3, omega=10.0, sigma0=-2.0)
    assert eval_scaled(0.0, cfg) == pytest.approx(1.0)
    assert eval_scaled(1.0, cfg) == eval_majorant(0.2, 10.0, 3)
    rng = np.random.default_rng(3)
    t = rng.uniform(-5, 5, 100)
    # E_omega(-sigma0 t / omega) = e^{sigma0 t} on t >= 0
    lhs = eval_E(-cfg.sigma0 * t / cfg.omega, cfg.omega)
    rhs = np.where(t >= 0, np.exp(cfg.sigma0 * np.maximum(t, 0)), 0.0)
    assert np.allclose(lhs, rhs, rtol=1e-14, atol=0)
    with pytest.raises(ValueError):
        eval_scaled(0.0, cfg, "other")


def test_lattice_audit():
    rec = lattice_sum_audit(0.5, 3, 10**6)
    assert rec.direct_sum == pytest.approx(math.pi**4 / 3, abs=1e-6)
    assert rec.claimed_rhs == pytest.approx(math.pi**4, rel=1e-14)
    assert rec.ratio == pytest.approx(1 / 3, abs=1e-6)
    assert rec.tail_bound < 1e-9 * rec.direct_sum
    rec = lattice_sum_audit(0.25, 1, 10**6)
    assert abs(rec.direct_sum - (math.pi / math.sin(math.pi / 4)) ** 2) < 1e-8
    with pytest.raises(ValueError):
        lattice_sum_audit(2.0, 3)


def test_lattice_closed_form_oracle():
    frozen = {(0.5, 3): 32.46969701133414574548, (0.25, 1): 19.73920880217871723767,
              (0.3, 5): 1380.50145377805392833817}
    for (t, K), want in frozen.items():
        assert float(lattice_sum_closed(t, K)) == pytest.approx(want, rel=1e-13)
        assert lattice_sum_audit(t, K).direct_sum == pytest.approx(want, rel=1e-11)


def test_lemma_report_omega10():
    rep = verify_lemmas(10.0, 3)
    assert rep.lemma1_pass and rep.lemma2_pass and rep.lemma3_pass and rep.lemma4_pass
    assert rep.minorant_pass
    assert rep.majorant_pass is False
    assert rep.worst_check == "majorant"
    assert -1e-7 < rep.worst_violation < -1e-9
    assert 0.9 < rep.worst_location < 1.1
    d = rep.to_dict()
    assert d["omega_lemmas_pass"] is True and d["grids"]["lemma1"] == [-50.0, 50.0, 0.01]


def test_lemma1_small_omega():
    # the sign pattern still holds at omega = 0.1 for K = 3 (mpmath confirms)
    rep = verify_lemmas(0.1, 3, checks=("1",))
    assert rep.lemma1_pass is True
    assert rep.violations["lemma1"]["worst"] >= 0.0
    v = np.linspace(-50, 50, 1001)
    for x in v[::50]:
        val = mp_R_tilde(x, 0.1, 3)
        assert (val >= 0) if x >= 0 else (val <= 0)


def test_lemma4_failure_band():
    rep = verify_lemmas(6.0, 3, checks=("4",))
    assert rep.lemma4_pass is False and rep.worst_violation < -1e-9


def test_worst_violation_reported_on_pass():
    rep = verify_lemmas(20.0, 3, checks=("1", "3"))
    assert rep.lemma1_pass and math.isfinite(rep.worst_violation)


@pytest.mark.slow
@pytest.mark.parametrize("K", sorted(OMEGA0_TABLE))
def test_omega0_table_recomputes(K):
    assert find_omega0(K, use_table=False) == OMEGA0_TABLE[K]


def test_omega0_plus_five():
    w0 = find_omega0(3)
    assert w0 <= 40
    for w in (w0, w0 + 5):
        rep = verify_lemmas(w, 3, checks=("1", "3", "4"))
        assert rep.omega_lemmas_pass


def test_type_certificate():
    cert = type_certificate(10.0, 3)
    assert cert["ratio"] <= 1.0 + 1e-12
    assert cert["C"] == pytest.approx(1.0, abs=1e-12)


def test_sin_power_constants():
    assert sin_power_integral(4, 4) == pytest.approx(2 * math.pi / 3, abs=1e-8)
    assert sin_power_integral(4, 2) == pytest.approx(math.pi / 2, abs=1e-8)
    mp.mp.dps = 20
    try:
        want = float(mp.quadosc(lambda t: mp.sin(t) ** 6 / t**4, [0, mp.inf], period=mp.pi) * 2)
    finally:
        mp.mp.dps = 40
    assert sin_power_integral(6, 4) == pytest.approx(want, rel=1e-9)
    with pytest.raises(ValueError):
        sin_power_integral(4, 3)


def test_integrals_k3():
    cfg = ExtremalConfig(K=3, omega=10.0, sigma0=-1.0)
    assert integral_majorant(cfg) == pytest.approx(INT_M_3_10, rel=1e-12)
    assert integral_minorant(cfg) == pytest.approx(INT_m_3_10, rel=1e-9)
    res = extremal_integrals(cfg)
    assert res.int_m > 0 and res.int_m <= res.int_M
    assert res.relative_disagreement < 1e-6
    assert abs(res.int_M_quadrature - INT_M_3_10) < 1e-6 * INT_M_3_10
    assert abs(res.int_m_quadrature - INT_m_3_10) < 1e-6 * INT_m_3_10


def test_integrals_scale_with_sigma0():
    a = ExtremalConfig(K=3, omega=10.0, sigma0=-1.0)
    b = ExtremalConfig(K=3, omega=10.0, sigma0=-2.5)
    assert integral_majorant(b) == pytest.approx(integral_majorant(a) / 2.5, rel=1e-14)
    q, tb = quadrature_integral(b, "majorant")
    assert q == pytest.approx(integral_majorant(b), rel=1e-6)


def test_integrals_k1_minorant_vanishes():
    res = extremal_integrals(ExtremalConfig(K=1, omega=1.0, sigma0=-1.0))
    assert res.int_m == 0.0
    assert res.int_M > 0


def test_method_disagreement_raised(monkeypatch):
    import tailspectra.extremal as ex
    monkeypatch.setattr(ex, "integral_minorant", lambda cfg: 0.5)
    with pytest.raises(MethodDisagreement):
        ex.extremal_integrals(ExtremalConfig(K=3, omega=10.0, sigma0=-1.0))


@settings(max_examples=60, deadline=None)
@given(st.floats(-20, 20), st.sampled_from([(10.0, 3), (1.0, 1), (17.0, 5)]))
def test_gap_identity_property(t, wk):
    omega, K = wk
    gap = eval_majorant(t, omega, K) - eval_minorant(t, omega, K)
    assert gap >= 0
    assert gap == pytest.approx(float(sinc_power(t, K)) / -math.expm1(-omega), rel=1e-9,
                                abs=1e-15)


def test_default_grids():
    g = Grids()
    assert g.sandwich == (-20.0, 20.0, 0.001) and g.lemma4_t == (0.1, 10.0, 0.1)
