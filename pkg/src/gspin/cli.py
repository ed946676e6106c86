"""Command-line interface: simulate, fit, reproduce, validate-config.

Exit codes: 0 success, 1 reproduction checks failed, 2 invalid config or
arguments, 3 fit did not converge, 4 file read/write failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .analysis import FitModel, fit
from .config import ConfigError, load_config
from .figures import FIGURES, reproduce
from .io import FORMATS, dumps_report, read_trace, write_sidecar, write_trace
from .simulate import simulate

EXIT_OK = 0
EXIT_CHECKS_FAILED = 1
EXIT_CONFIG = 2
EXIT_NOT_CONVERGED = 3
EXIT_IO = 4

MODEL_ALIASES = {
    "lorentzian": "lorentzian_sum",
    "lorentziansum": "lorentzian_sum",
    "sine": "sinusoid",
    "dampedcosinesum": "damped_cosine_sum",
    "g2": "g2_three_level",
    "g2threelevel": "g2_three_level",
}


def parse_model(spec: str) -> FitModel:
    """``kind[:n]`` or ``kind(n)``, e.g. ``lorentzian_sum:2``, ``dampedCosineSum(4)``."""
    text = spec.strip().replace("(", ":").rstrip(")")
    kind, _, n = text.partition(":")
    key = kind.strip()
    kind = MODEL_ALIASES.get(key.lower().replace("_", ""), MODEL_ALIASES.get(key.lower(), key))
    return FitModel(kind, int(n) if n else 1)


def _err(msg: str) -> None:
    print(f"gspin: {msg}", file=sys.stderr)


def cmd_validate(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        _err(str(exc))
        return EXIT_CONFIG
    print(f"{args.config}: ok ({cfg.sequence.kind}, hash {cfg.digest()[:12]})")
    return EXIT_OK


def cmd_simulate(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        _err(str(exc))
        return EXIT_CONFIG
    out = args.out or cfg.run.output or Path(args.config).with_suffix(f".{args.format}").name
    out = Path(out)
    if out.suffix != f".{args.format}":
        out = out.with_suffix(f".{args.format}")
    rec = simulate(cfg, args.jobs, args.seed)
    try:
        write_trace(rec, out, args.format)
        write_sidecar(out, rec.meta)
    except OSError as exc:
        _err(f"cannot write {out}: {exc.strerror}")
        return EXIT_IO
    print(f"wrote {out} ({rec.sweep.size} points, seed {rec.meta['seed']})")
    return EXIT_OK


def _summary(res) -> str:
    lines = [f"model {res.model.kind}({res.model.n}): "
             f"{'converged' if res.converged else 'NOT CONVERGED'} after {res.iterations} evaluations"]
    for k in res.model.names:
        lines.append(f"  {k:<10} = {res.params[k]:.9g} +- {res.errors[k]:.3g}")
    lines.append(f"  chi2 = {res.chi2:.6g}, dof = {res.dof}")
    if res.merged:
        lines.append(f"  merged lines: {list(res.merged)}")
    if not res.converged:
        lines.append(f"  {res.message}; estimates are not authoritative")
    return "\n".join(lines)


def cmd_fit(args) -> int:
    try:
        model = parse_model(args.model)
    except ValueError as exc:
        _err(f"bad model spec {args.model!r}: {exc}")
        return EXIT_CONFIG
    try:
        rec = read_trace(args.trace)
    except (OSError, ValueError, KeyError) as exc:
        _err(f"cannot read {args.trace}: {exc}")
        return EXIT_IO
    try:
        res = fit(model, rec.sweep, rec.signal, rec.weights())
    except ValueError as exc:
        _err(str(exc))
        return EXIT_CONFIG
    report = {**res.to_dict(), "trace": str(args.trace)}
    if "config_hash" in rec.meta:
        report["config_hash"] = rec.meta["config_hash"]
    out = Path(args.out) if args.out else Path(args.trace).with_name(Path(args.trace).stem + ".fit.json")
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(dumps_report(report))
    except OSError as exc:
        _err(f"cannot write {out}: {exc.strerror}")
        return EXIT_IO
    print(_summary(res))
    print(f"wrote {out}")
    return EXIT_OK if res.converged else EXIT_NOT_CONVERGED


def cmd_reproduce(args) -> int:
    figures = FIGURES if args.figure == "all" else [args.figure]
    ok = True
    for fig in figures:
        rep = reproduce(fig, seed=args.seed, jobs=args.jobs)
        try:
            rep.write(args.out, args.format)
        except OSError as exc:
            _err(f"cannot write to {args.out}: {exc.strerror}")
            return EXIT_IO
        print(rep.table())
        ok &= rep.passed
    return EXIT_OK if ok else EXIT_CHECKS_FAILED


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gspin", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="override the config seed")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
    common.add_argument("--format", choices=FORMATS, default="csv", help="trace file format")

    s = sub.add_parser("simulate", parents=[common], help="run one config and write its trace")
    s.add_argument("config")
    s.add_argument("--out", help="trace path (default: run.output or <config>.<format>)")
    s.set_defaults(func=cmd_simulate)

    f = sub.add_parser("fit", help="fit a model to a trace file")
    f.add_argument("trace")
    f.add_argument("model", help="e.g. lorentzian_sum:2, sinusoid, damped_cosine_sum:4")
    f.add_argument("--out", help="report path (default: <trace>.fit.json)")
    f.set_defaults(func=cmd_fit)

    r = sub.add_parser("reproduce", parents=[common], help="run a bundled figure pipeline")
    r.add_argument("figure", choices=(*FIGURES, "all"))
    r.add_argument("--out", default="reproduce", help="output directory")
    r.set_defaults(func=cmd_reproduce)

    v = sub.add_parser("validate-config", help="check a config without running it")
    v.add_argument("config")
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "jobs", 1) < 1:
        _err("--jobs must be >= 1")
        return EXIT_CONFIG
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
