"""Command-line front end.

    tailspectra analyze --dist md1_sojourn --rho 0.5
    tailspectra verify --omega 5 10 20 --K 3
    tailspectra audit --t 0.5 --K 3
    tailspectra simulate --rho 0.5 --n 1000000 --seed 42
    tailspectra counterexample --h 2 --sigma0 -1 --n-max 4
    tailspectra polemap --dist md1_sojourn --rho 0.5 --csv

Exit status: 0 on success, 2 when the input fails a hypothesis of the tail
theorem (the report is still written), 1 on usage or parameter errors.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, bounds, empirical, extremal, reports, spectral, transforms
from .errors import HypothesisFailure, TailSpectraError

COMMANDS = ("analyze", "verify", "audit", "simulate", "counterexample", "polemap")

# distribution -> {parameter: flag dest}
DIST_PARAMS = {
    "exponential": {"mu": "mu"},
    "erlang": {"k": "k", "mu": "mu"},
    "hyperexponential": {"p": "p", "mu1": "mu", "mu2": "mu2"},
    "md1_sojourn": {"rho": "rho"},
    "md1_queue": {"rho": "rho"},
    "geometric": {"q": "q"},
    "deterministic": {},
}
PGF_DISTS = ("md1_queue", "geometric", "deterministic")
SAMPLEABLE = ("exponential", "erlang", "hyperexponential", "md1_sojourn")

DEFAULTS = {
    "dist": "md1_sojourn", "seed": 0, "out": ".", "csv": False, "K": 3, "t": 0.5,
    "N": 10**6, "h": 2, "sigma0": -1.0, "n_max": 4, "rect": [-20.0, 0.0, -40.0, 40.0],
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class RunConfig:
    command: str
    spec: dict | None = None
    omega: list | None = None
    lam: float | None = None
    seed: int = 0
    n_samples: int | None = None
    output_dir: str = "."
    emit_csv: bool = False
    options: dict = field(default_factory=dict)

    def echo(self) -> dict:
        """Everything that determines the result (the output directory does not)."""
        out = asdict(self)
        out.pop("output_dir")
        return out


# -- argument handling ------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tailspectra", description="Tail decay from transform poles.")
    p.add_argument("--version", action="version", version=f"tailspectra {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", help="JSON file whose keys mirror the flags")
        sp.add_argument("--out", help="output directory (default: .)")
        sp.add_argument("--csv", action="store_true", default=None, help="also write CSV curves")

    def dist_flags(sp):
        sp.add_argument("--dist", choices=sorted(DIST_PARAMS))
        sp.add_argument("--spec-file", dest="spec_file", help="JSON transform spec")
        sp.add_argument("--rho", type=float)
        sp.add_argument("--mu", "--mu1", type=float, dest="mu")
        sp.add_argument("--mu2", type=float)
        sp.add_argument("--k", type=int)
        sp.add_argument("--p", type=float)
        sp.add_argument("--q", type=float)

    sp = sub.add_parser("analyze", help="decay rate and sandwich constants")
    common(sp)
    dist_flags(sp)
    sp.add_argument("--omega", type=float)
    sp.add_argument("--lambda", dest="lam", type=float)
    sp.add_argument("--n", type=int, help="samples for an empirical overlay CSV")
    sp.add_argument("--seed", type=int)

    sp = sub.add_parser("verify", help="lemma checks at one or more omega")
    common(sp)
    sp.add_argument("--omega", type=float, nargs="+")
    sp.add_argument("--K", type=int)

    sp = sub.add_parser("audit", help="lattice-sum audit")
    common(sp)
    sp.add_argument("--t", type=float)
    sp.add_argument("--K", type=int)
    sp.add_argument("--N", type=int)

    sp = sub.add_parser("simulate", help="Monte Carlo tail and slope estimate")
    common(sp)
    dist_flags(sp)
    sp.add_argument("--n", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--threads", type=int)
    sp.add_argument("--dump", action="store_true", default=None,
                    help="also write the raw samples (binary)")

    sp = sub.add_parser("counterexample", help="oscillating non-exponential tail")
    common(sp)
    sp.add_argument("--h", type=int)
    sp.add_argument("--sigma0", type=float)
    sp.add_argument("--n-max", dest="n_max", type=int)

    sp = sub.add_parser("polemap", help="poles of a transform in a rectangle")
    common(sp)
    dist_flags(sp)
    sp.add_argument("--rect", type=float, nargs=4, metavar=("RE0", "RE1", "IM0", "IM1"))
    return p


def _merge(args: argparse.Namespace) -> dict:
    """Config-file values overlaid by explicitly given flags, then defaults."""
    merged = {}
    if getattr(args, "config", None):
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(data, dict):
            raise UsageError("config file must hold a JSON object")
        merged.update({k.replace("-", "_"): v for k, v in data.items()})
    for k, v in vars(args).items():
        if v is not None and k not in ("config", "command"):
            merged[k] = v
    for k, v in DEFAULTS.items():
        merged.setdefault(k, v)
    return merged


def _spec_echo(m: dict) -> dict:
    if m.get("spec_file"):
        try:
            data = json.loads(Path(m["spec_file"]).read_text())
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read spec file {m['spec_file']}: {exc}") from None
        return {"spec_file": data}
    dist = m["dist"]
    if dist not in DIST_PARAMS:
        raise UsageError(f"unknown --dist {dist!r}; choose from {', '.join(sorted(DIST_PARAMS))}")
    params = {}
    for name, flag in DIST_PARAMS[dist].items():
        value = m.get(flag, m.get(name))
        if value is None:
            raise UsageError(f"--dist {dist} needs --{flag}")
        params[name] = value
    return {"dist": dist, "params": params}


def config_from_args(args: argparse.Namespace) -> RunConfig:
    m = _merge(args)
    cmd = args.command
    cfg = RunConfig(command=cmd, seed=int(m["seed"]), output_dir=str(m["out"]),
                    emit_csv=bool(m["csv"]))
    if cmd in ("analyze", "simulate", "polemap"):
        cfg.spec = _spec_echo(m)
    if cmd == "analyze":
        if m.get("omega") is not None and m.get("lam") is not None:
            raise UsageError("give --omega or --lambda, not both")
        if m.get("lam") is not None:
            if m["lam"] <= 0:
                raise UsageError("--lambda must be positive")
            cfg.lam = float(m["lam"])
        if m.get("omega") is not None:
            cfg.omega = [float(m["omega"])]
        cfg.n_samples = m.get("n")
    elif cmd == "verify":
        om = m.get("omega")
        cfg.omega = [float(x) for x in (om if isinstance(om, list) else [om])] if om is not None else None
        cfg.options = {"K": int(m["K"])}
    elif cmd == "audit":
        cfg.options = {"t": float(m["t"]), "K": int(m["K"]), "N": int(m["N"])}
    elif cmd == "simulate":
        cfg.n_samples = int(m.get("n") or 10**6)
        cfg.options = {"threads": m.get("threads"), "dump": bool(m.get("dump"))}
    elif cmd == "counterexample":
        cfg.options = {"h": int(m["h"]), "sigma0": float(m["sigma0"]), "n_max": int(m["n_max"])}
    elif cmd == "polemap":
        rect = [float(x) for x in m["rect"]]
        if len(rect) != 4 or rect[0] >= rect[1] or rect[2] >= rect[3]:
            raise UsageError("--rect needs RE0 < RE1 and IM0 < IM1")
        cfg.options = {"rect": rect}
    if cfg.omega is not None and any(not w > 0 for w in cfg.omega):
        raise UsageError("--omega must be positive")
    return cfg


# -- commands ---------------------------------------------------------------


def _resolve(spec_echo: dict):
    if "spec_file" in spec_echo:
        return transforms.spec_from_dict(spec_echo["spec_file"])
    dist, params = spec_echo["dist"], spec_echo["params"]
    if dist in PGF_DISTS:
        return transforms.make_pgf_catalog(dist, params)
    return transforms.make_catalog(dist, params)


def _catalog(cfg: RunConfig) -> str:
    if cfg.spec and "dist" in cfg.spec:
        return cfg.spec["dist"]
    if cfg.spec:
        return str(cfg.spec["spec_file"].get("id", "custom"))
    return cfg.command


def _as_transform(obj):
    return transforms.pgf_to_ls(obj) if isinstance(obj, transforms.PgfSpec) else obj


def _curve_csv(omega: float, K: int, sigma0: float | None = None) -> str:
    u = np.round(np.arange(-500, 501) * 0.01, 10)
    table = extremal.curve_table(omega, K, u)
    lines = ["u,t,M,m,E"]
    for row in table:
        t = omega * row[0] / -sigma0 if sigma0 else row[0]
        lines.append(",".join(repr(float(x)) for x in (row[0], t, *row[1:])))
    return "\n".join(lines) + "\n"


def _thin(curve: empirical.TailCurve, points: int = 2000) -> empirical.TailCurve:
    """Keep about ``points`` rows, evenly spaced in log-tail."""
    if curve.x.size <= points:
        return curve
    levels = np.linspace(curve.log_tail[0], curve.log_tail[-1], points)
    idx = np.unique(np.searchsorted(-curve.log_tail, -levels))
    idx = idx[idx < curve.x.size]
    return empirical.TailCurve(curve.x[idx], curve.log_tail[idx], curve.source, curve.meta)


def cmd_analyze(cfg: RunConfig, out):
    obj = _resolve(cfg.spec)
    omega = cfg.omega[0] if cfg.omega else (2 * math.pi / cfg.lam if cfg.lam else None)
    catalog = _catalog(cfg)
    try:
        if isinstance(obj, transforms.PgfSpec):
            report = bounds.discrete_decay(obj, omega)
        else:
            report = bounds.analyze_tail(obj, omega)
    except HypothesisFailure as exc:
        result = {"verdict": type(exc).__name__, "message": str(exc), "diagnostics": exc.payload}
        paths = reports.emit_report("analyze", catalog, cfg.echo(), result, cfg.output_dir)
        print(f"{type(exc).__name__}: {exc}", file=out)
        return 2, paths
    csvs = {}
    if cfg.emit_csv:
        csvs["majorant"] = _curve_csv(report.omega, report.K, report.sigma0)
        if cfg.n_samples and cfg.spec.get("dist") in SAMPLEABLE:
            s = empirical.sample_catalog(cfg.spec["dist"], cfg.spec["params"], cfg.n_samples,
                                         cfg.seed)
            csvs["empirical"] = _thin(empirical.empirical_tail(s.values)).to_csv()
    result = {"verdict": "certified" if report.certified else "diagnostic", **report.to_dict()}
    paths = reports.emit_report("analyze", catalog, cfg.echo(), result, cfg.output_dir, csvs)
    out.write(bounds.render_text(report))
    return 0, paths


def cmd_verify(cfg: RunConfig, out):
    K = cfg.options["K"]
    omegas = cfg.omega or [extremal.find_omega0(K)]
    paths = []
    for w in omegas:
        rep = extremal.verify_lemmas(w, K)
        result = {**rep.to_dict(), "type_certificate": extremal.type_certificate(w, K)}
        echo = {**cfg.echo(), "omega": [w]}
        csvs = {"curve": _curve_csv(w, K)} if cfg.emit_csv else {}
        paths += reports.emit_report("verify", f"K{K}", echo, result, cfg.output_dir, csvs)
        out.write(f"omega={w:g} K={K}: lemmas 1-4 "
                  f"{'pass' if rep.omega_lemmas_pass and rep.lemma2_pass else 'FAIL'}, "
                  f"M>=E {'pass' if rep.majorant_pass else 'FAIL'}, "
                  f"E>=m {'pass' if rep.minorant_pass else 'FAIL'}, "
                  f"worst {rep.worst_violation:.3e} ({rep.worst_check} at {rep.worst_location:g})\n")
    return 0, paths


def cmd_audit(cfg: RunConfig, out):
    o = cfg.options
    rec = extremal.lattice_sum_audit(o["t"], o["K"], o["N"])
    result = {**rec.to_dict(), "closed_form": float(extremal.lattice_sum_closed(o["t"], o["K"]))}
    paths = reports.emit_report("audit", f"K{o['K']}", cfg.echo(), result, cfg.output_dir)
    out.write(f"direct sum {rec.direct_sum:.12g}  (pi/sin pi t)^{o['K'] + 1} = "
              f"{rec.claimed_rhs:.12g}  ratio {rec.ratio:.12g}\n")
    return 0, paths


def cmd_simulate(cfg: RunConfig, out):
    dist = cfg.spec.get("dist")
    if dist not in SAMPLEABLE:
        raise UsageError(f"simulate supports {', '.join(SAMPLEABLE)}")
    s = empirical.sample_catalog(dist, cfg.spec["params"], cfg.n_samples, cfg.seed,
                                 cfg.options.get("threads"))
    curve = empirical.empirical_tail(s.values)
    slope, stderr = empirical.estimate_decay_slope(curve)
    sigma0 = spectral.find_abscissa(_as_transform(_resolve(cfg.spec)))
    result = {
        "model": s.model, "seed": s.seed, "count": s.count,
        "mean": float(s.values.mean()), "slope": slope, "stderr": stderr,
        "window": list(empirical.DEFAULT_WINDOW), "reference_sigma0": sigma0,
        "slope_minus_sigma0": slope - sigma0, "notes": s.notes,
    }
    paths = reports.emit_report("simulate", dist, cfg.echo(), result, cfg.output_dir,
                                {"": _thin(curve).to_csv()})
    if cfg.options.get("dump"):
        p = paths[0].with_suffix(".bin")
        s.dump(p)
        paths.append(p)
    out.write(f"slope {slope:.6f} +/- {stderr:.2e}   sigma0 {sigma0:.6f}\n")
    return 0, paths


def cmd_counterexample(cfg: RunConfig, out):
    o = cfg.options
    model = empirical.build_counterexample(o["h"], o["sigma0"], o["n_max"])
    curve = empirical.counterexample_lim_points(model)
    rate, labels = curve.meta["rate"], curve.meta["label"]
    at = [(n, x, r) for n, lab, x, r in zip(curve.meta["n"], labels, curve.x, rate)
          if lab == "at_jump"]
    before = [(n, x, r) for n, lab, x, r in zip(curve.meta["n"], labels, curve.x, rate)
              if lab == "before_jump"]
    gaps = [b[2] - a[2] for a, b in zip(at[1:], before)]
    result = {
        "model": model.to_dict(), "log_h": math.log(model.h),
        "at_jump": [{"n": n, "x": x, "rate": r} for n, x, r in at],
        "before_jump": [{"n": n, "x": x, "rate": r} for n, x, r in before],
        "separation": gaps, "monotone": empirical.check_monotone(model),
    }
    paths = reports.emit_report("counterexample", f"h{model.h}", cfg.echo(), result,
                                cfg.output_dir, {"": empirical.oscillation_csv(curve)})
    out.write(f"c = {model.c}\n")
    for n, x, r in at:
        out.write(f"  x = c_{n} = {x:g}: rate {r:.15g}\n")
    for n, x, r in before:
        out.write(f"  x -> c_{n + 1}: rate {r:.15g}\n")
    return 0, paths


def cmd_polemap(cfg: RunConfig, out):
    spec = _as_transform(_resolve(cfg.spec))
    poles = spectral.locate_poles_rect(spec, tuple(cfg.options["rect"]))
    paths = reports.emit_report("polemap", _catalog(cfg), cfg.echo(), poles.to_dict(),
                                cfg.output_dir, {"": poles.to_csv()})
    out.write(f"{len(poles.poles)} poles in {cfg.options['rect']}\n")
    return 0, paths


HANDLERS = {
    "analyze": cmd_analyze, "verify": cmd_verify, "audit": cmd_audit,
    "simulate": cmd_simulate, "counterexample": cmd_counterexample, "polemap": cmd_polemap,
}


def run(config: RunConfig, out=None) -> tuple[int, list[Path]]:
    """Execute one command; returns (exit status, written paths)."""
    return HANDLERS[config.command](config, out or sys.stdout)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            parser.print_help()
            return 1
        cfg = config_from_args(args)
        status, paths = run(cfg)
    except UsageError as exc:
        print(f"tailspectra: error: {exc}", file=sys.stderr)
        return 1
    except (TailSpectraError, ValueError, ArithmeticError) as exc:
        print(f"tailspectra: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"tailspectra: {exc}", file=sys.stderr)
        return 1
    for p in paths:
        print(f"wrote {p}")
    return status


if __name__ == "__main__":
    sys.exit(main())
