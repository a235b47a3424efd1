"""Command-line entry points: run, verify, study.

Exit codes: 0 clean, 1 usage/config error, 2 invariant breach,
3 solver failure.  Every run or study invocation with an output
directory leaves a manifest listing the emitted artifacts, the config
hash, and wall times, also when it fails.
"""

from __future__ import annotations

import argparse
import os
import sys
from datetime import datetime, timezone

from . import config as cfgmod
from .errors import ConfigError, InvariantViolation, SolverError
from .output import sha256_text, write_manifest
from .simulate import EXIT_CONFIG, EXIT_INVARIANT, EXIT_OK, EXIT_SOLVER, run
from .studies import decay_study, refinement_study
from .verify import format_table, run_verification


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _resolve_out(args_out: str | None, cfg: dict[str, str]) -> str | None:
    if args_out:
        return args_out
    if cfg.get("run.out_dir"):
        return cfg["run.out_dir"]
    return os.environ.get("NSF_OUT_DIR") or None


def _load_config(path: str, overrides) -> dict[str, str]:
    cfg = cfgmod.parse_config(path)
    return cfgmod.apply_overrides(cfg, overrides)


def cmd_run(args) -> int:
    try:
        cfg = _load_config(args.config, args.set)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = _resolve_out(args.out, cfg)
    started = _now()
    status = EXIT_CONFIG
    try:
        result = run(cfg, out_dir=out_dir)
        status = result.exit_status
        if result.message:
            print(result.message, file=sys.stderr)
        print(f"run finished: status={result.status} t={result.final_state.t:g} "
              f"records={len(result.records)}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        status = EXIT_CONFIG
    except InvariantViolation as exc:
        print(f"invariant breach: {exc}", file=sys.stderr)
        status = EXIT_INVARIANT
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        status = EXIT_SOLVER
    finally:
        if out_dir and os.path.isdir(out_dir):
            write_manifest(out_dir, sha256_text(cfgmod.config_text(cfg)),
                           started, _now(), status)
    return status


def cmd_verify(args) -> int:
    try:
        checks = run_verification(args.scope)
    except ConfigError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(format_table(checks))
    return EXIT_OK if all(c.passed for c in checks) else EXIT_INVARIANT


def cmd_study(args) -> int:
    try:
        cfg = _load_config(args.config, args.set)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = _resolve_out(args.out, cfg)
    started = _now()
    status = EXIT_CONFIG
    try:
        if args.kind == "refinement":
            result = refinement_study(cfg, args.levels, out_dir=out_dir)
            orders = ", ".join(f"{o:.3f}" for o in result["orders"])
            print(f"refinement case={result['case']} observed orders: {orders}")
        else:
            result = decay_study(cfg, out_dir=out_dir)
            print(f"decay: v ratio {result['v_ratio']:.3e}, "
                  f"theta ratio {result['theta_ratio']:.3e}, "
                  f"monotone beyond t=1: v={result['monotone_v_beyond_1']} "
                  f"theta={result['monotone_theta_beyond_1']}")
        status = EXIT_OK
    except ConfigError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        status = EXIT_CONFIG
    except InvariantViolation as exc:
        print(f"study failed: {exc}", file=sys.stderr)
        status = EXIT_INVARIANT
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        status = EXIT_SOLVER
    finally:
        if out_dir and os.path.isdir(out_dir):
            write_manifest(out_dir, sha256_text(cfgmod.config_text(cfg)),
                           started, _now(), status)
    return status


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nsfsim",
        description="Simulator for heat-conducting power-law incompressible "
                    "flow with entropy-equality diagnostics")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a configured simulation")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config key (repeatable)")
    p_run.add_argument("--out", help="output directory (default NSF_OUT_DIR)")
    p_run.set_defaults(func=cmd_run)

    p_ver = sub.add_parser("verify", help="run the sampling property suites")
    p_ver.add_argument("--scope", default="all",
                       choices=["all", "laws", "truncation", "basis"])
    p_ver.set_defaults(func=cmd_verify)

    p_st = sub.add_parser("study", help="refinement or decay experiment")
    p_st.add_argument("--kind", required=True, choices=["refinement", "decay"])
    p_st.add_argument("--config", required=True)
    p_st.add_argument("--levels", type=int, default=3)
    p_st.add_argument("--set", action="append", metavar="KEY=VALUE")
    p_st.add_argument("--out")
    p_st.set_defaults(func=cmd_study)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
