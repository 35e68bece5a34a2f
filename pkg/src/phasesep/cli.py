"""Command-line entry point.

Subcommands: check-hypotheses, simulate, ensemble, converge, certify.  All
take a JSON config (--config) with optional dotted-path overrides (--set).
Exit codes: 0 success, 1 hypothesis/domain failure, 2 config error,
3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import ensemble as ens
from .config import RunConfig, load_config
from .diagnostics import certificate_audit
from .errors import ConfigError, PhasesepError, SchemaVersionError
from .hypotheses import all_passed, format_table, run_hypothesis_checks

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2
EXIT_IO = 3


def _parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="phasesep",
        description="Barrier-separated stochastic phase-field simulations",
    )
    sub = top.add_subparsers(dest="command", required=True)
    for name, doc in (
        ("check-hypotheses", "validate the structural hypotheses of a config"),
        ("simulate", "run a single trajectory and write its report"),
        ("ensemble", "run a Monte Carlo ensemble and write its report"),
        ("converge", "run the refinement study requested by the config"),
        ("certify", "audit a persisted report against the separation certificate"),
    ):
        cmd = sub.add_parser(name, help=doc)
        if name == "certify":
            cmd.add_argument("--report", required=True,
                             help="directory holding report.json + timeseries.csv")
        else:
            cmd.add_argument("--config", required=True, help="JSON config path")
            cmd.add_argument("--set", action="append", default=[], metavar="K=V",
                             help="dotted-path config override, repeatable")
        if name in ("simulate", "ensemble", "converge"):
            cmd.add_argument("--force", action="store_true",
                             help="run even if hypothesis checks fail")
            cmd.add_argument("--workers", type=int, default=1)
    return top


def _load(args) -> RunConfig:
    return load_config(args.config, args.set)


def _gate(cfg: RunConfig, force: bool) -> tuple[bool, list]:
    results = run_hypothesis_checks(cfg)
    ok = all_passed(results)
    if not ok:
        print("hypothesis checks FAILED:", file=sys.stderr)
        print(format_table(results), file=sys.stderr)
        if not force:
            print("refusing to run (use --force to override)", file=sys.stderr)
    return ok, results


def _write_json(path: Path, payload: dict):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2) + "\n", newline="\n")


def cmd_check_hypotheses(args) -> int:
    cfg = _load(args)
    results = run_hypothesis_checks(cfg)
    print(format_table(results))
    out = Path(cfg.out_dir) / "hypotheses.json"
    _write_json(out, {
        "schema_version": ens.SCHEMA_VERSION,
        "fingerprint": cfg.fingerprint(),
        "all_passed": all_passed(results),
        "checks": [r.to_dict() for r in results],
    })
    print(f"wrote {out}")
    return EXIT_OK if all_passed(results) else EXIT_FAIL


def _run_and_persist(cfg: RunConfig, workers: int, unverified: bool) -> int:
    from .figures import render_ensemble_figures

    report, records = ens.run_ensemble(cfg, workers=workers,
                                       hypotheses_unverified=unverified)
    paths = ens.persist(report, records, cfg.out_dir)
    figs = render_ensemble_figures(report, records, cfg.out_dir)
    agg = report.aggregate
    print(f"{cfg.n_traj} trajectories: delta_min in "
          f"[{agg['delta_min_min']:.6g}, {agg['delta_min_max']:.6g}], "
          f"clamp events {agg['total_clamp_events']}")
    for p in list(paths.values()) + figs:
        print(f"wrote {p}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _load(args)
    ok, _ = _gate(cfg, args.force)
    if not ok and not args.force:
        return EXIT_FAIL
    raw = cfg.effective_dict()
    raw["ensemble"]["n_traj"] = 1
    from .config import validate_config

    return _run_and_persist(validate_config(raw), args.workers, not ok)


def cmd_ensemble(args) -> int:
    cfg = _load(args)
    ok, _ = _gate(cfg, args.force)
    if not ok and not args.force:
        return EXIT_FAIL
    return _run_and_persist(cfg, args.workers, not ok)


def cmd_converge(args) -> int:
    cfg = _load(args)
    ok, _ = _gate(cfg, args.force)
    if not ok and not args.force:
        return EXIT_FAIL
    from .figures import render_study_figure

    study = ens.convergence_study(cfg, hypotheses_unverified=not ok)
    out = Path(cfg.out_dir)
    _write_json(out / "study.json", study.to_dict())
    lines = ["level,metric,value"]
    for m in study.metrics:
        for k, v in m.items():
            lines.append(f"{m.get('dt', m.get('lambda', m.get('n', m.get('sigma0'))))},{k},{v}")
    (out / "study.csv").write_text("\n".join(lines) + "\n", newline="\n")
    figs = render_study_figure(study, out)
    print(json.dumps(study.verdicts, indent=2))
    for p in [str(out / "study.json"), str(out / "study.csv")] + figs:
        print(f"wrote {p}")
    return EXIT_OK


def cmd_certify(args) -> int:
    from .figures import render_certificate_figure

    data, records = ens.load_records(args.report)
    audits = [certificate_audit(rec) for rec in records]
    out = Path(args.report)
    payload = {
        "schema_version": ens.SCHEMA_VERSION,
        "fingerprint": data["fingerprint"],
        "all_passed": all(a.all_passed for a in audits),
        "per_trajectory": [a.to_dict() for a in audits],
    }
    _write_json(out / "certify.json", payload)
    figs = render_certificate_figure(audits, out)
    n_bad = sum(not a.all_passed for a in audits)
    print(f"certificate audit: {len(audits) - n_bad}/{len(audits)} trajectories pass")
    for p in [str(out / "certify.json")] + figs:
        print(f"wrote {p}")
    return EXIT_OK if payload["all_passed"] else EXIT_FAIL


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    handlers = {
        "check-hypotheses": cmd_check_hypotheses,
        "simulate": cmd_simulate,
        "ensemble": cmd_ensemble,
        "converge": cmd_converge,
        "certify": cmd_certify,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SchemaVersionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except PhasesepError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
