"""Command-line entry point.

Exit codes: 0 success or valid certificate, 1 invalid certificate or failed
run, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from . import controller
from .bench_math import certificates
from .bench_math.suite import reference_checks
from .config import ConfigParseError, LoadedConfig, load_config
from .model_provider import ConfigError
from .program_db import CorruptSnapshot, ProgramDatabase

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _load(args) -> LoadedConfig:
    overrides = {"seed": args.seed} if args.seed is not None else None
    cfg = load_config(args.config, overrides=overrides)
    if args.out is not None:
        cfg.run = dataclasses.replace(cfg.run, out_dir=Path(args.out))
    return cfg


def _write_report(out_dir: Path | None, report: controller.RunReport) -> None:
    summary = report.summary()
    print(json.dumps({k: summary[k] for k in ("best_id", "best_objective", "best_metrics", "counts")}, indent=2))
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "report.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")


def _execute(args, resume: ProgramDatabase | None = None) -> int:
    try:
        cfg = _load(args)
        provider = cfg.make_provider(args.stub_script)
    except (ConfigParseError, ConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        if cfg.run.refine_rounds and resume is None:
            report = controller.refine_loop(cfg.task, cfg.run, provider, cfg.warm_start, cfg.seed)
        else:
            report = controller.run(cfg.task, cfg.run, provider, cfg.seed,
                                    warm_start=cfg.warm_start, resume=resume)
    except controller.SeedEvaluationFailed as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    _write_report(cfg.run.out_dir, report)
    return EXIT_OK


def cmd_run(args) -> int:
    return _execute(args)


def cmd_resume(args) -> int:
    try:
        db = ProgramDatabase.restore(Path(args.snapshot).read_bytes())
    except (OSError, CorruptSnapshot) as exc:
        print(f"cannot resume: {exc}", file=sys.stderr)
        return EXIT_FAIL
    return _execute(args, resume=db)


def cmd_best(args) -> int:
    try:
        db = ProgramDatabase.restore(Path(args.snapshot).read_bytes())
    except (OSError, CorruptSnapshot) as exc:
        print(f"cannot read snapshot: {exc}", file=sys.stderr)
        return EXIT_FAIL
    best = db.best
    if best is None:
        print("no candidates")
        return EXIT_OK
    print(f"best {best.id} objective {best.objective:.12g}")
    for name, value in sorted(best.metrics.items()):
        print(f"  {name}: {value:.12g}")
    for i, text in enumerate(best.block_texts):
        print(f"--- block {i}")
        print(text, end="" if text.endswith("\n") else "\n")
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        verdict = certificates.verify_file(args.problem, args.certificate)
    except certificates.UnknownProblem:
        known = ", ".join(sorted(certificates.PROBLEMS))
        print(f"unknown problem {args.problem!r}; known: {known}", file=sys.stderr)
        return EXIT_USAGE
    except certificates.MalformedCertificate as exc:
        print(f"malformed certificate: {exc}", file=sys.stderr)
        return EXIT_FAIL
    print(verdict)
    return EXIT_OK if verdict.valid else EXIT_FAIL


def cmd_bench(args) -> int:
    checks = reference_checks()
    for check in checks:
        print(check.line())
    failed = sum(not c.passed for c in checks)
    print(f"{len(checks) - failed}/{len(checks)} reference checks passed")
    return EXIT_OK if failed == 0 else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="codevolve", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log every candidate")
    sub = parser.add_subparsers(dest="command", required=True)

    def run_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", required=True, help="YAML run configuration")
        p.add_argument("--out", help="output directory (overrides run.out_dir)")
        p.add_argument("--seed", type=int, help="rng seed (overrides run.seed)")
        p.add_argument("--stub-script", help="replay this stub script instead of the configured provider")

    p = sub.add_parser("run", help="evolve a task")
    run_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("resume", help="continue a run from a database snapshot")
    run_flags(p)
    p.add_argument("--snapshot", required=True)
    p.set_defaults(func=cmd_resume)

    p = sub.add_parser("best", help="show the best program in a snapshot")
    p.add_argument("--snapshot", required=True)
    p.set_defaults(func=cmd_best)

    p = sub.add_parser("verify", help="check a certificate file")
    p.add_argument("problem", help=", ".join(sorted(certificates.PROBLEMS)))
    p.add_argument("certificate")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="reproduce the reference values of the verifiers")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
