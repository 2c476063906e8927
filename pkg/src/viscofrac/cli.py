"""Command-line entry point: ``viscofrac run | validate | sweep``."""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from .constitutive import ConstitutiveLaw, LawKind
from .driver import config_from_toml, run, validate

__all__ = ["main"]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="viscofrac",
        description="Phase-field fracture in nonlinear viscoelastic solids.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a simulation")
    p_run.add_argument("--config", required=True, help="TOML config file")

    p_val = sub.add_parser("validate", help="check a configuration without running")
    p_val.add_argument("--config", required=True, help="TOML config file")

    p_sw = sub.add_parser("sweep", help="run a parameter sweep")
    p_sw.add_argument("--config", required=True, help="TOML config file")
    p_sw.add_argument(
        "--param", required=True,
        help="sweep spec like n=10,100,1000 (law parameter name = value list)",
    )
    return parser


def _cmd_run(args) -> int:
    cfg = config_from_toml(args.config)
    out = run(cfg)
    rep = out.reports[-1]
    print(f"completed {cfg.n_steps} steps; total energy {rep.total:.6g}; "
          f"inequality residual {rep.inequality_residual:.3e}")
    if cfg.output_dir:
        print(f"outputs written to {cfg.output_dir}")
    return 0


def _cmd_validate(args) -> int:
    cfg = config_from_toml(args.config)
    findings = validate(cfg)
    ok = True
    for f in findings:
        status = "PASS" if f.passed else "FAIL"
        print(f"[{status}] {f.name}: {f.detail}")
        ok = ok and f.passed
    return 0 if ok else 1


def _sweep_law(law: ConstitutiveLaw, name: str, value: float) -> ConstitutiveLaw:
    if name == "p":
        return ConstitutiveLaw.p_growth(value)
    if name == "a":
        if law.kind is LawKind.REGULARIZED:
            return ConstitutiveLaw.regularized(value, law.n)
        return ConstitutiveLaw.strain_limiting(value)
    if name == "n":
        return ConstitutiveLaw.regularized(law.a, int(value))
    raise ValueError(f"unknown sweep parameter {name!r} (expected p, a or n)")


def _cmd_sweep(args) -> int:
    name, _, values = args.param.partition("=")
    if not values:
        print("sweep spec must look like n=10,100,1000", file=sys.stderr)
        return 2
    base = config_from_toml(args.config)
    for raw in values.split(","):
        value = float(raw)
        cfg = dataclasses.replace(base, law=_sweep_law(base.law, name.strip(), value))
        if base.output_dir:
            cfg = dataclasses.replace(
                cfg, output_dir=str(Path(base.output_dir) / f"{name.strip()}_{raw.strip()}")
            )
        out = run(cfg)
        rep = out.reports[-1]
        print(f"{name.strip()}={raw.strip()}: total {rep.total:.6g}, "
              f"max strain {out.metadata['max_strain_norm']:.6g}, "
              f"inequality residual {rep.inequality_residual:.3e}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {"run": _cmd_run, "validate": _cmd_validate, "sweep": _cmd_sweep}
    return handlers[args.command](args)


if __name__ == "__main__":
    raise SystemExit(main())
