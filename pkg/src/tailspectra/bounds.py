"""Decay-rate certificate and sandwich constants for a transform's tail.

For a distribution whose transform has a pole of order D at its abscissa
sigma0 < 0 with leading Laurent coefficient A_D,

    C1 <= liminf x^{-D+1} e^{-sigma0 x} P(X > x)
       <= limsup x^{-D+1} e^{-sigma0 x} P(X > x) <= C2,

with C1 = A_D * int m and C2 = A_D * int M for the rescaled minorant and
majorant; in particular x^{-1} log P(X > x) -> sigma0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field


from . import extremal, spectral
from .errors import (AmbiguousOrder, Cancellation, NoBracket, NotAPole, PoleHit,
                     StripContaminated)
from .transforms import PgfSpec, TransformSpec, pgf_to_ls

SCHEMA_VERSION = "1.0"
LADDER = (1, 2, 4)


@dataclass
class TailBoundReport:
    spec_id: str
    sigma0: float
    order: int
    A_D: float
    laurent: list
    K: int
    omega: float
    lam: float
    C1: float
    C2: float
    decay_rate: float
    normalization_exponent: int
    lemma_report: extremal.LemmaReport
    integrals: extremal.ExtremalIntegrals
    strip_certificate: int
    strip_ladder: list
    pole: spectral.PoleInfo
    reference_limit: float
    contained: bool
    certified: bool
    caveats: list = field(default_factory=list)
    radius: float | None = None
    decay_rate_from_radius: float | None = None

    def to_dict(self) -> dict:
        out = {
            "schema_version": SCHEMA_VERSION,
            "spec_id": self.spec_id,
            "decay_rate": self.decay_rate,
            "sigma0": self.sigma0,
            "order": self.order,
            "A_D": self.A_D,
            "laurent": list(self.laurent),
            "normalization_exponent": self.normalization_exponent,
            "K": self.K,
            "omega": self.omega,
            "lambda": self.lam,
            "C1": self.C1,
            "C2": self.C2,
            "reference_limit": self.reference_limit,
            "contained": self.contained,
            "certified": self.certified,
            "strip_certificate": self.strip_certificate,
            "strip_ladder": [list(x) for x in self.strip_ladder],
            "pole": self.pole.to_dict(),
            "lemma_report": self.lemma_report.to_dict(),
            "integrals": self.integrals.to_dict(),
            "caveats": list(self.caveats),
        }
        if self.radius is not None:
            out["radius"] = self.radius
            out["decay_rate_from_radius"] = self.decay_rate_from_radius
        return out


def reference_limit(A_D: float, sigma0: float, D: int) -> float:
    """lim x^{-D+1} e^{-sigma0 x} P(X>x) when the pole at sigma0 dominates.

    (1 - phi(s))/s ~ -A_D / (sigma0 (s - sigma0)^D) near sigma0, which is the
    transform of -A_D/sigma0 * x^{D-1} e^{sigma0 x}/(D-1)!.
    """
    return A_D / (math.factorial(D - 1) * -sigma0)


def _locate_pole(spec: TransformSpec):
    try:
        sigma0 = spectral.find_abscissa(spec)
        eps = spectral.choose_contour_radius(spec, sigma0)
        order = spectral.pole_order(spec, sigma0, eps)
        laurent, nodes = spectral.laurent_coefficients(spec, sigma0, order, eps,
                                                       return_nodes=True)
    except (Cancellation, AmbiguousOrder, NoBracket, PoleHit) as exc:
        raise NotAPole(f"{spec.id}: {exc}", {"spec_id": spec.id, "stage": "pole",
                                            "reason": f"{type(exc).__name__}: {exc}"}) from exc
    if order < 1:
        raise NotAPole(f"{spec.id}: winding number gives order {order}",
                       {"spec_id": spec.id, "stage": "pole", "sigma0": sigma0, "order": order})
    return sigma0, eps, order, [float(a) for a in laurent], nodes


def analyze_tail(spec: TransformSpec, omega_choice: float | None = None,
                 cross_check: bool = True) -> TailBoundReport:
    """Pole analysis, extremal construction and sandwich constants for ``spec``.

    The decay rate is sigma0 whenever sigma0 is a pole; lemma-check failures
    and sandwich containment only add caveats.  Raises NotAPole when the
    abscissa is not a pole and StripContaminated when every rung of the
    lambda ladder sees extra poles.
    """
    sigma0, eps, D, laurent, nodes = _locate_pole(spec)
    A_D = laurent[D - 1]
    K = extremal.odd_order(D)
    omega_base = float(omega_choice) if omega_choice is not None else extremal.find_omega0(K)
    caveats = []
    if K != D:
        caveats.append(f"pole order {D} is even; the extremal pair uses K = {K}")

    ladder = []
    omega = None
    for mult in LADDER:
        w = omega_base * mult
        lam = 2.0 * math.pi / w
        count = spectral.verify_strip_analyticity(spec, sigma0, lam, eps, D)
        ladder.append((lam, count))
        if count == 0:
            omega = w
            break
    pole = spectral.PoleInfo(
        sigma0=sigma0, order=D, laurent=laurent,
        strip_halfwidth=-2.0 * sigma0 * ladder[-1][0], extra_poles_in_strip=ladder[-1][1],
        contour_radius=eps, quadrature_nodes=nodes,
        winding_residual=abs(spectral.winding_number(spec, sigma0, eps) + D),
    )
    if omega is None:
        raise StripContaminated(
            f"{spec.id}: extra poles near the axis at every lambda in the ladder",
            {"spec_id": spec.id, "stage": "strip", "pole": pole.to_dict(),
             "strip_ladder": [list(x) for x in ladder], "decay_rate": sigma0})
    if len(ladder) > 1:
        caveats.append(f"strip certified only after shrinking lambda to {ladder[-1][0]:.6g}")
    lam = 2.0 * math.pi / omega

    lemmas = extremal.verify_lemmas(omega, K)
    for name in ("lemma1", "lemma2", "lemma3", "lemma4", "majorant", "minorant"):
        info = lemmas.violations.get(name)
        if info and info["worst"] < extremal.INEQ_TOL:
            caveats.append(f"{name} check failed: worst slack {info['worst']:.3e} at {info['at']:.6g}")

    config = extremal.ExtremalConfig(K=K, omega=omega, sigma0=sigma0)
    integrals = extremal.extremal_integrals(config, cross_check=cross_check)
    C1, C2 = A_D * integrals.int_m, A_D * integrals.int_M
    if K == 1:
        caveats.append("for K = 1 the minorant integrates to 0, so C1 = 0 is a trivial bound")
    if A_D <= 0:
        caveats.append(f"leading coefficient A_D = {A_D:.6g} is not positive")
    ref = reference_limit(A_D, sigma0, D)
    contained = C1 <= ref <= C2
    if not contained:
        caveats.append(f"reference limit {ref:.6g} lies outside [C1, C2] = [{C1:.6g}, {C2:.6g}]")
    certified = ladder[-1][1] == 0 and lemmas.all_pass
    if not certified:
        caveats.append("sandwich constants are diagnostic: not every numerical check passed")

    return TailBoundReport(
        spec_id=spec.id, sigma0=sigma0, order=D, A_D=A_D, laurent=laurent, K=K,
        omega=omega, lam=lam, C1=C1, C2=C2, decay_rate=sigma0, normalization_exponent=D - 1,
        lemma_report=lemmas, integrals=integrals, strip_certificate=ladder[-1][1],
        strip_ladder=ladder, pole=pole, reference_limit=ref, contained=contained,
        certified=certified, caveats=caveats,
    )


def _radius(pgf: PgfSpec) -> float:
    """Smallest real zero r > 1 of the PGF's denominator, found by Brent's method."""
    if pgf.radius_bracket is None:
        raise NotAPole(f"{pgf.id}: entire generating function, no finite radius",
                       {"spec_id": pgf.id, "stage": "radius"})
    lo, hi = pgf.radius_bracket

    def den(x):
        return float(pgf.denominator(complex(x)).real)

    if den(lo) * den(hi) > 0:
        raise NotAPole(f"{pgf.id}: no sign change of the denominator on {pgf.radius_bracket}",
                       {"spec_id": pgf.id, "stage": "radius"})
    from scipy import optimize  # deferred: only PGF inputs need it

    return optimize.brentq(den, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=200)


def discrete_decay(pgf: PgfSpec, omega_choice: float | None = None,
                   cross_check: bool = True) -> TailBoundReport:
    """Tail report for an integer-valued variable from its generating function."""
    r = _radius(pgf)
    report = analyze_tail(pgf_to_ls(pgf), omega_choice, cross_check)
    report.radius = r
    report.decay_rate_from_radius = -math.log(r)
    gap = abs(report.sigma0 + math.log(r))
    if gap >= 1e-9:
        report.caveats.append(f"sigma0 and -log r differ by {gap:.3e}")
    return report


def render_text(report: TailBoundReport) -> str:
    """Plain-text summary: each hypothesis with its numeric verdict."""
    lr = report.lemma_report

    def mark(flag):
        return "pass" if flag else "FAIL"

    lines = [
        f"transform            {report.spec_id}",
        f"abscissa sigma0      {report.sigma0:.12g}",
        f"pole order D         {report.order}  (winding residual {report.pole.winding_residual:.2e})",
        f"leading coeff A_D    {report.A_D:.12g}",
        f"decay rate           {report.decay_rate:.12g}",
        f"normalisation        x^-{report.normalization_exponent} e^(-sigma0 x) P(X>x)",
        "",
        "hypotheses",
        f"  pole at sigma0                     pass",
        f"  no other poles on the strip        {mark(report.strip_certificate == 0)}"
        f"  (lambda = {report.lam:.6g}, count {report.strip_certificate})",
        f"  lemma 1 (sign of remainder)        {mark(lr.lemma1_pass)}",
        f"  lemma 2 (derivative bound)         {mark(lr.lemma2_pass)}",
        f"  lemma 3 (growth bound)             {mark(lr.lemma3_pass)}",
        f"  lemma 4 (integral bound)           {mark(lr.lemma4_pass)}",
        f"  M >= E on the grid                 {mark(lr.majorant_pass)}",
        f"  E >= m on the grid                 {mark(lr.minorant_pass)}",
        f"  worst slack                        {lr.worst_violation:.3e} ({lr.worst_check})",
        "",
        f"sandwich (K={report.K}, omega={report.omega:.6g})",
        f"  C1 = {report.C1:.12g}",
        f"  C2 = {report.C2:.12g}",
        f"  reference limit {report.reference_limit:.12g}  "
        f"{'inside' if report.contained else 'outside'} [C1, C2]",
        f"status               {'certified' if report.certified else 'diagnostic'}",
    ]
    if report.radius is not None:
        lines.insert(5, f"radius r             {report.radius:.12g}  (-log r = "
                        f"{report.decay_rate_from_radius:.12g})")
    if report.caveats:
        lines.append("caveats")
        lines.extend(f"  - {c}" for c in report.caveats)
    return "\n".join(lines) + "\n"
