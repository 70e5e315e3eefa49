"""
Command line entry point.

    sparsesel sweep <config.toml | manifest.json | shipped-name>
    sparsesel select <data.csv> --criterion ebicr --tuning 1 --selector omp
    sparsesel audit [--quick]

Exit codes: 0 success, 2 bad input or config, 3 sweep runtime failure,
4 no candidate could be scored, 5 audit failure.
"""

from __future__ import annotations

import argparse
import json
import subprocess
import sys
from pathlib import Path

from . import __version__
from .audits import misfit_energy_audit, null_variance_audit, overfit_variance_audit, tail_bound_trend
from .config import ExperimentConfig, load_config, resolve_config_path, shipped_configs
from .core import Dataset
from .criteria import CriterionKind, CriterionSpec
from .errors import AllCandidatesFailed, ConfigError, DataError
from .selectors import PathSource, default_k_max, run_selector, select
from .simlab import Axis, GeneratorConfig, run_sweep
from .svgplot import line_chart

EXIT_OK, EXIT_INPUT, EXIT_RUNTIME, EXIT_NO_CANDIDATE, EXIT_AUDIT = 0, 2, 3, 4, 5


def _err(msg: str) -> None:
    print(msg, file=sys.stderr, flush=True)


def version_string() -> str:
    """``git describe`` of the source tree when available, else the package version."""
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"], cwd=Path(__file__).parent,
                             capture_output=True, text=True, timeout=5)
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+g{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

def run_experiment(cfg: ExperimentConfig, output_dir: Path, quiet: bool = False) -> dict:
    """Run a sweep and write the CSV table, SVG plot and JSON manifest."""
    for w in cfg.zeta_warnings():
        _err(w)
    progress = None if quiet else (lambda m: _err(f"[{cfg.name}] {m}"))
    result = run_sweep(cfg.generator, cfg.axis, cfg.axis_values, cfg.criteria, cfg.selector,
                       cfg.trials, cfg.workers, cfg.k_max, keep_records=False, progress=progress)
    output_dir.mkdir(parents=True, exist_ok=True)
    csv_path = output_dir / f"{cfg.name}_pcms.csv"
    svg_path = output_dir / f"{cfg.name}_plot.svg"
    man_path = output_dir / f"{cfg.name}_manifest.json"
    result.write_csv(csv_path)
    xlabel = "SNR (dB)" if cfg.axis is Axis.SNR_DB else "N"
    svg = line_chart(result.axis_values, list(result.pcms), result.labels, title=cfg.name, xlabel=xlabel)
    svg_path.write_text(svg, encoding="utf-8")
    manifest = {
        "config": cfg.to_dict(),
        "seed": cfg.generator.seed,
        "version": version_string(),
        "digest": result.digest,
        "failures": result.failures,
        "outputs": {"csv": csv_path.name, "plot": svg_path.name},
    }
    man_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return {"csv": csv_path, "plot": svg_path, "manifest": man_path, "result": result}


def cmd_sweep(args) -> int:
    try:
        cfg = load_config(resolve_config_path(args.config))
        if args.workers is not None:
            cfg.workers = args.workers
        if args.trials is not None:
            cfg.trials = args.trials
    except ConfigError as exc:
        _err(f"config error: {exc}")
        return EXIT_INPUT
    out = Path(args.output_dir if args.output_dir is not None else cfg.output_dir)
    try:
        paths = run_experiment(cfg, out, quiet=args.quiet)
    except ConfigError as exc:
        _err(f"config error: {exc}")
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001 - any failure mid-sweep maps to one exit code
        _err(f"sweep failed: {type(exc).__name__}: {exc}")
        return EXIT_RUNTIME
    print(paths["csv"])
    print(paths["plot"])
    print(paths["manifest"])
    return EXIT_OK


# ---------------------------------------------------------------------------
# select
# ---------------------------------------------------------------------------

def _human(support):
    return "{" + ", ".join(str(i + 1) for i in support) + "}"


def cmd_select(args) -> int:
    try:
        dataset = Dataset.from_csv(args.data)
        spec = CriterionSpec(CriterionKind.parse(args.criterion), args.tuning)
        if args.scale != 1.0:
            if not args.scale > 0:
                raise DataError("--scale must be positive")
            dataset = dataset.scaled(args.scale)
        k_max = default_k_max(dataset.n) if args.kmax is None else args.kmax
        path = run_selector(dataset, args.selector, k_max)
    except (DataError, ValueError) as exc:
        _err(f"input error: {exc}")
        return EXIT_INPUT
    except OSError as exc:
        _err(f"input error: {exc}")
        return EXIT_INPUT
    try:
        res = select(dataset, path, spec)
    except AllCandidatesFailed as exc:
        _err(f"selection failed: {exc}")
        return EXIT_NO_CANDIDATE

    if args.json:
        payload = {
            "criterion": spec.kind.value,
            "tuning": spec.tuning,
            "selector": path.source.value,
            "k_max": k_max,
            "scale": args.scale,
            "n": dataset.n,
            "p": dataset.p,
            "chosen": list(res.chosen),
            "coefficients": [float(c) for c in res.fit.coefficients],
            "candidates": [{"support": list(s.support), "score": s.score} for s in res.scores],
            "skipped": [{"support": list(s), "reason": r} for s, r in res.skipped],
            "path_flags": path.flags,
        }
        print(json.dumps(payload, indent=2))
        return EXIT_OK

    print(f"data: n={dataset.n}, p={dataset.p}; selector={path.source.value} (k_max={k_max}); criterion={spec.label}")
    if path.flags:
        print(f"path notes: {', '.join(path.flags)}")
    print("candidates (1-indexed):")
    for s in res.scores:
        mark = "*" if s.support == res.chosen else " "
        print(f" {mark} k={len(s.support):<3d} score={s.score:<22.10g} {_human(s.support)}")
    for s, reason in res.skipped:
        print(f"   skipped {_human(s)}: {reason}")
    print(f"chosen support: {_human(res.chosen)}")
    if res.chosen:
        print("coefficients:")
        for idx, c in zip(res.chosen, res.fit.coefficients):
            print(f"  x[{idx + 1}] = {c:.10g}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# audit
# ---------------------------------------------------------------------------

_X_S = (50.0, 40.0, 30.0, 20.0, 10.0)


def run_audits(quick: bool = False, ms=None, seed: int = 2022):
    """Run every statistical audit; returns a list of (name, passed, detail, report)."""
    tail_trials = 5000 if quick else 20000
    b_trials = 400 if quick else 2000
    c_trials = 400 if quick else 2000
    misfit_trials = 100 if quick else 500
    n_se = 4.0 if quick else 3.0
    ms = [100, 1000, 10000] if ms is None else list(ms)

    rows = []
    tail = tail_bound_trend(ms, k=3, psi=1.2, trials=tail_trials, seed=seed, slack_se=2.0 if quick else 0.0)
    last = tail.points[-1]
    rows.append(("chi-square max bound", tail.chi2_ok and tail.chi2_decreasing,
                 f"violation at m={last.m}: {last.chi2_violation:.5f} (limit {tail.chi2_limit}); "
                 f"fractions {[round(p.chi2_violation, 5) for p in tail.points]}", tail))
    rows.append(("gaussian max bound", tail.gauss_ok and tail.gauss_decreasing,
                 f"violation at m={last.m}: {last.gauss_violation:.5f} (limit {tail.gauss_limit}); "
                 f"fractions {[round(p.gauss_violation, 5) for p in tail.points]}", tail))
    if tail.notice:
        rows.append(("tail bound notes", True, tail.notice, tail))

    base = GeneratorConfig(n=50, p=10, x_s=_X_S, snr_db=0.0, seed=seed)
    nv = null_variance_audit(base, [50, 200, 800], b_trials, n_se=n_se)
    rows.append(("null variance mean", nv.mean_ok,
                 "offsets/SE " + ", ".join(f"{m / s:+.2f}" for m, s in zip(nv.mean_offset, nv.mean_offset_se)), nv))
    rows.append(("null variance formula", nv.var_formula_ok,
                 "offsets/SE " + ", ".join(f"{m / s:+.2f}" for m, s in zip(nv.var_offset, nv.var_offset_se)), nv))
    rows.append(("null variance shrinks with N", nv.variance_decreasing,
                 "sample variances " + ", ".join(f"{v:.4g}" for v in nv.sample_variance), nv))

    ov_cfg = GeneratorConfig(n=200, p=300, x_s=_X_S, sigma2=4.0, seed=seed)
    ov = overfit_variance_audit(ov_cfg, c_trials, k=7, n_se=n_se)
    rows.append(("overfit variance moments", ov.passed,
                 f"mean {ov.mean:.3f} vs {ov.mean_target:g} (se {ov.mean_se:.3f}); "
                 f"var {ov.variance:.2f} vs {ov.variance_target:g} (se {ov.variance_se:.2f})", ov))

    mf_cfg = GeneratorConfig(n=100, p=1000, x_s=_X_S, snr_db=0.0, seed=seed)
    for swap in (True, False):
        mf = misfit_energy_audit(mf_cfg, misfit_trials, swap_one=swap)
        name = "misfit energy (swap one)" if swap else "misfit energy (random)"
        rows.append((name, mf.passed, f"min {mf.min_energy:.4g} > {mf.floor:g} over {mf.trials} trials", mf))
    return rows


def cmd_audit(args) -> int:
    rows = run_audits(quick=args.quick, ms=args.m, seed=args.seed)
    width = max(len(r[0]) for r in rows)
    failed = False
    for name, ok, detail, _ in rows:
        print(f"{'PASS' if ok else 'FAIL'}  {name:<{width}}  {detail}")
        failed |= not ok
    if args.json_log:
        log = [{"audit": name, "passed": ok, "detail": detail, "report": rep.to_dict()}
               for name, ok, detail, rep in rows]
        Path(args.json_log).write_text(json.dumps(log, indent=2) + "\n", encoding="utf-8")
    return EXIT_AUDIT if failed else EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sparsesel", description=__doc__.split("\n\n")[0].strip())
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="run a PCMS sweep from a config file")
    p.add_argument("config", help=f"TOML config, JSON manifest, or shipped name ({', '.join(shipped_configs())})")
    p.add_argument("--workers", type=int, help="override worker count")
    p.add_argument("--trials", type=int, help="override Monte Carlo trials")
    p.add_argument("--output-dir", help="override output directory")
    p.add_argument("--quiet", action="store_true", help="no progress lines on stderr")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("select", help="select a model for a CSV dataset (first column is y)")
    p.add_argument("data")
    p.add_argument("--criterion", default="ebicr", choices=["bic", "ebic", "efic", "ebicr", "ebic_r"])
    p.add_argument("--tuning", type=float, default=1.0, help="gamma, c or zeta (ignored for bic)")
    p.add_argument("--selector", default="omp", choices=[PathSource.OMP.value, PathSource.LARS.value])
    p.add_argument("--kmax", type=int, help="maximum path length (default floor(N/2), at most 30)")
    p.add_argument("--json", action="store_true", help="machine-readable output, 0-indexed")
    p.add_argument("--scale", type=float, default=1.0, help="multiply y by this factor first")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("audit", help="run the statistical audits")
    p.add_argument("--quick", action="store_true", help="fewer trials, wider tolerances")
    p.add_argument("--m", type=int, nargs="+", help="batch sizes for the tail-bound audit")
    p.add_argument("--seed", type=int, default=2022)
    p.add_argument("--json-log", help="write a JSON audit log here")
    p.set_defaults(func=cmd_audit)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
