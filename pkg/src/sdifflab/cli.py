"""Command line entry point: ``lab run``, ``lab verify-all`` and ``lab list``."""

from __future__ import annotations

import argparse
import json
import sys

from . import lab

# flag -> config key
FLAG_KEYS = {
    "nu": "nu",
    "dt": "dt",
    "K": "K",
    "T": "T",
    "scheme": "scheme",
    "direction": "direction",
    "seed": "seed",
    "paths": "paths",
    "psi_spec": "psi",
    "v_spec": "V",
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lab", description="Run the numerical experiments and write reports.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one experiment")
    r.add_argument("experiment")
    r.add_argument("--config", help="JSON config file")
    r.add_argument("--out", help="directory for report.json and CSV tables")
    r.add_argument("--nu", type=float)
    r.add_argument("--dt", type=float)
    r.add_argument("--K", type=int)
    r.add_argument("--T", type=float)
    r.add_argument("--scheme", choices=["rk4", "ifrk4"])
    r.add_argument("--direction", choices=["forward", "backward", "euler"])
    r.add_argument("--seed", type=int)
    r.add_argument("--paths", type=int)
    r.add_argument("--psi-spec", dest="psi_spec", help="terminal cost as a JSON mode list")
    r.add_argument("--v-spec", dest="v_spec", help="potential as a JSON mode list")
    r.add_argument("--json", action="store_true", help="print the JSON report instead of the summary")

    v = sub.add_parser("verify-all", help="run every experiment with default settings")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--jobs", type=int, default=1)
    v.add_argument("--out", help="directory for reports")

    sub.add_parser("list", help="list experiments")
    return p


def _config_from_args(args) -> dict:
    cfg = lab.load_config(args.config) if args.config else {}
    if cfg.get("experiment", args.experiment) != args.experiment:
        raise lab.ConfigError(f"config is for {cfg['experiment']!r}, not {args.experiment!r}")
    cfg["experiment"] = args.experiment
    for flag, key in FLAG_KEYS.items():
        val = getattr(args, flag)
        if val is None:
            continue
        if flag in ("psi_spec", "v_spec"):
            try:
                val = json.loads(val)
            except json.JSONDecodeError as e:
                raise lab.ConfigError(f"--{flag.replace('_', '-')}: {e.msg}") from e
        cfg[key] = val
    if args.out:
        cfg["output_dir"] = args.out
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "list":
            for name, desc in lab.list_experiments():
                print(f"{name:24s} {desc}")
            return 0
        if args.command == "run":
            rep = lab.run(_config_from_args(args))
            print(rep.to_json() if args.json else rep.summary())
            return 0 if rep.passed else 1
        reports = lab.verify_all(args.seed, jobs=args.jobs, output_dir=args.out)
        for rep in reports:
            print(rep.summary())
        table = lab.criteria_table(reports)
        for c, ok in table.items():
            print(f"criterion {c:2d}: {'PASS' if ok else 'FAIL'}")
        return 0 if all(r.passed for r in reports) else 1
    except lab.ConfigError as e:
        print(f"lab: config error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
