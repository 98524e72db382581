"""Command-line front end.

Exit codes: 0 success, 1 usage or parse error, 2 validation error,
3 state not macroscopic, 4 soundness violation in a tail experiment.

Tail experiments read a TOML config whose keys are the fields of
:class:`TailConfig`; any key can be overridden on the command line with a
flag of the same name (``--dims 8,16 --deltas 0.3``).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from .concentration import (
    LEVY_CONSTANT,
    BoundParams,
    SweepSpec,
    TailExperimentResult,
    concentration_sweep,
    design_tail_bound,
    haar_tail_bound,
    povm_family,
    state_family,
)
from .entropy import LogBase, coarseness_report, observational_entropy, von_neumann_entropy
from .io import ParseError, load_ensemble, load_povm, load_state
from .macro import NotMacroscopic, ProjectionCheckFailed, commutes_with_all, macrostate_decomposition
from .qcore import DensityOperator, Povm, ValidationError

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_NOT_MACRO, EXIT_SOUNDNESS = 0, 1, 2, 3, 4


class SoundnessViolation(RuntimeError):
    pass


@dataclass
class TailConfig(SweepSpec):
    out_csv: str = ""
    out_json: str = ""
    # multiplies the bounds in the soundness verdict only; < 1 is a test hook
    bound_scale: float = 1.0


def _coerce(value, default, key: str):
    """Convert a command-line string to the type of a config default."""
    if not isinstance(value, str):
        return value
    if isinstance(default, (list, tuple)):
        elem = type(default[0]) if default else str
        return [elem(v) for v in value.split(",") if v]
    if isinstance(default, bool):
        return value.lower() in ("1", "true", "yes")
    if isinstance(default, (int, float, str)):
        try:
            return type(default)(value)
        except ValueError:
            raise ParseError(f"bad value {value!r} for {key}") from None
    return value


def load_config(path: Optional[str], overrides: dict) -> TailConfig:
    data = {}
    if path:
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except OSError as exc:
            raise ParseError(f"{path}: cannot read ({exc.strerror})") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ParseError(f"{path}: {exc}") from exc
    data.update({k: v for k, v in overrides.items() if v is not None})
    fields = {f.name: f for f in dataclasses.fields(TailConfig)}
    unknown = sorted(set(data) - set(fields))
    if unknown:
        raise ParseError(f"unknown config keys: {', '.join(unknown)}")
    defaults = TailConfig()
    kwargs = {k: _coerce(v, getattr(defaults, k), k) for k, v in data.items()}
    for k in ("dims", "ensembles", "deltas"):
        if k in kwargs:
            kwargs[k] = list(kwargs[k])
    cfg = TailConfig(**kwargs)
    LogBase.parse(cfg.base)
    if cfg.samples < 1 or cfg.workers < 1:
        raise ValidationError("samples and workers must be positive")
    if any(not 0 < x for x in cfg.deltas):
        raise ValidationError("deltas must be positive")
    return cfg


def _extra_overrides(rest: Sequence[str]) -> dict:
    out = {}
    i = 0
    while i < len(rest):
        tok = rest[i]
        if not tok.startswith("--"):
            raise ParseError(f"unexpected argument {tok!r}")
        key, eq, val = tok[2:].partition("=")
        if not eq:
            if i + 1 >= len(rest):
                raise ParseError(f"flag {tok} needs a value")
            i += 1
            val = rest[i]
        out[key.replace("-", "_")] = val
        i += 1
    return out


# state / POVM specs

def parse_state(spec: str) -> DensityOperator:
    """``uniform:d``, ``pure0:d``, ``plus:d``, ``rank:r:d``, ``diag:v1,v2,...`` or a file."""
    name, _, arg = spec.partition(":")
    if name in ("uniform", "pure0", "plus"):
        return state_family(name, int(arg))
    if name == "rank":
        r, _, d = arg.partition(":")
        return state_family(f"rank:{r}", int(d))
    if name == "diag":
        return state_family(spec, len(arg.split(",")))
    if Path(spec).exists():
        return load_state(spec)
    raise ParseError(f"unknown state {spec!r} (not a builtin and no such file)")


def parse_povm(spec: str, d: int) -> Povm:
    """``computational``, ``pm-basis``, ``balanced:k``, ``ranks:r1,...`` or a file."""
    name = spec.partition(":")[0]
    if name in ("computational", "pm-basis", "balanced", "ranks"):
        return povm_family(spec, d)
    if Path(spec).exists():
        return load_povm(spec)
    raise ParseError(f"unknown POVM {spec!r} (not a builtin and no such file)")


def _fmt(x: float) -> str:
    return f"{x:.10g}"


# commands

def cmd_oe(args) -> int:
    base = LogBase.parse(args.base)
    rho = parse_state(args.state)
    povm = parse_povm(args.povm, rho.dimension)
    sp = observational_entropy(rho, povm, base, args.tolerance or 1e-9)
    s = von_neumann_entropy(rho, base)
    rep = coarseness_report(povm)
    print(f"S_P      = {_fmt(sp.value)} ({base.value})")
    print(f"S        = {_fmt(s.value)}")
    print(f"log d    = {_fmt(base.log(rho.dimension))}")
    print(f"kappa    = {_fmt(rep.kappa)}  (outcomes {rep.n_outcomes}, min volume {_fmt(rep.min_volume)})")
    print(f"sqrt(d) < min volume: {'yes' if rep.vn_satisfied else 'no'}")
    macro = abs(sp.nats - s.nats) <= 1e-7
    print(f"macroscopic (S_P = S): {'yes' if macro else 'no'}")
    return EXIT_OK


def cmd_macro(args) -> int:
    rho = parse_state(args.state)
    povm = parse_povm(args.povm, rho.dimension)
    tol = args.tolerance or 1e-8
    dec = macrostate_decomposition(rho, povm, tol)
    ok, worst = commutes_with_all(rho, povm, tol)
    print(f"macroscopic: residual={dec.residual:.3e}")
    print(f"blocks: {len(dec.partition)}")
    for y, (block, c, v) in enumerate(zip(dec.partition, dec.coefficients, dec.pvm.volumes)):
        print(f"  Pi_{y}: outcomes {list(block)}  rank {int(round(v))}  c = {_fmt(c)}")
    print(f"commutes with all effects: {'yes' if ok else 'no'} (max |[m, P_x]| = {worst:.3e})")
    return EXIT_OK


def _jsonable(x):
    if isinstance(x, float) and math.isnan(x):
        return None
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def write_csv(path: str, rows: List[TailExperimentResult], config: dict) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("# config: " + json.dumps(config, sort_keys=True) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TailExperimentResult.CSV_COLUMNS)
        for r in rows:
            w.writerow(r.csv_row())


def cmd_tail(args, rest) -> int:
    overrides = {k: getattr(args, k) for k in ("seed", "samples", "workers", "base",
                                               "out_csv", "out_json", "tolerance")}
    overrides.update(_extra_overrides(rest))
    cfg = load_config(args.config, overrides)
    config = dataclasses.asdict(cfg)
    t0 = time.perf_counter()
    res = concentration_sweep(cfg)
    elapsed = time.perf_counter() - t0
    bad = [r for r in res.rows if not r.sound(cfg.bound_scale)]
    print(f"{'ensemble':<15}{'d':>5}{'delta':>7}{'hits':>7}{'estimate':>11}{'ci_high':>11}"
          f"{'haar_bd':>10}{'design_bd':>11}  ok")
    for r in res.rows:
        print(f"{r.ensemble:<15}{r.d:>5}{r.delta:>7.3g}{r.n_hits:>7}{r.estimate:>11.3e}{r.ci_high:>11.3e}"
              f"{r.haar_bound_clamped:>10.3g}{r.design_bound_clamped:>11.3g}  "
              f"{'yes' if r.sound(cfg.bound_scale) else 'NO'}")
    for c in res.coarseness:
        verdict = {None: "n/a", True: "yes", False: "no"}[c["coarse"]]
        print(f"d={c['d']}: kappa={_fmt(c['kappa'])} threshold={_fmt(c['threshold'])} coarse={verdict}")
    print(f"{len(res.rows)} points in {elapsed:.1f} s; soundness violations: {len(bad)}")
    if cfg.out_csv:
        write_csv(cfg.out_csv, res.rows, config)
    if cfg.out_json:
        doc = {"config": config, "seed": cfg.seed,
               "rows": [dataclasses.asdict(r) for r in res.rows],
               "coarseness": res.coarseness,
               "soundness_violations": len(bad)}
        Path(cfg.out_json).write_text(json.dumps(_jsonable(doc), indent=1, sort_keys=True))
    if bad:
        raise SoundnessViolation(f"{len(bad)} grid points exceed their clamped bound")
    return EXIT_OK


def worked_examples() -> List[str]:
    """Power-of-two reproduction of the d = 2^128 worked examples."""
    lines = []
    kappa, log2_d, delta = 2.0 ** -38, 128, 2.0 ** -5
    haar_c = haar_tail_bound(BoundParams(kappa, log2_d, delta, base="two", constant=2.0 ** -10))
    haar = haar_tail_bound(BoundParams(kappa, log2_d, delta, base="two"))
    lines.append("Haar example: d = 2^128, kappa = 2^-38 (min volume 2^90), delta = 2^-5, log base two")
    lines.append(f"  exponent C delta kappa^2 d log d with C -> 2^-10: 2^{haar_c.extra['log2_exponent']:g}")
    lines.append(f"  prefactor 4/kappa: 2^{haar_c.extra['log2_prefactor']:g}")
    lines.append(f"  bound: 2^{haar_c.extra['log2_prefactor']:g} x exp(-2^{haar_c.extra['log2_exponent']:g})"
                 f" = 2^{haar_c.log2_value:.6g}")
    lines.append(f"  exact C = 1/(18 pi^3) = {LEVY_CONSTANT:.6g}: exponent 2^{haar.extra['log2_exponent']:.6g},"
                 f" bound 2^{haar.log2_value:.6g}")
    one = design_tail_bound(BoundParams(kappa, log2_d, delta, epsilon=1.0, base="two"))
    zero = design_tail_bound(BoundParams(kappa, log2_d, delta, epsilon=0.0, base="two"))
    stated = -11
    lines.append("2-design example: same parameters, t = 2, eps < 1")
    lines.append(f"  design bound <= 2^{stated}: {'yes' if one.log2_value <= stated else 'no'}")
    lines.append(f"  exact value at eps = 1: 2^{one.log2_value:g}")
    lines.append(f"  exact value at eps = 0: 2^{zero.log2_value:g}")
    return lines


def cmd_worked_examples(args) -> int:
    for line in worked_examples():
        print(line)
    return EXIT_OK


def _design_ensemble(spec: str):
    from .ensembles import UnitaryEnsemble
    name, _, arg = spec.partition(":")
    if name == "clifford-group":
        return UnitaryEnsemble.clifford_group(int(arg or 1))
    if name == "identity":
        d = int(arg or 2)
        return UnitaryEnsemble.explicit([np.eye(d)], name="identity")
    if Path(spec).exists():
        return load_ensemble(spec)
    raise ParseError(f"unknown ensemble {spec!r}")


def cmd_design_quality(args) -> int:
    from .moments import DEFAULT_SUPEROP_CAP, brickwork_epsilon_bounds, design_epsilon_bounds
    cap = args.cap or DEFAULT_SUPEROP_CAP
    name, _, arg = args.ensemble.partition(":")
    print(f"{'ensemble':<26}{'eps_lower':>13}{'eps_upper':>13}{'diamond_lo':>13}{'diamond_hi':>13}")
    if name == "brickwork":
        n = int(arg or 3)
        depths = [int(x) for x in args.depths.split(",")]
        for depth, b in brickwork_epsilon_bounds(n, depths, cap):
            print(f"{f'brickwork(n={n},depth={depth})':<26}{b.eps_lower:>13.4e}{b.eps_upper:>13.4e}"
                  f"{b.diamond_lower:>13.4e}{b.diamond_upper:>13.4e}")
        return EXIT_OK
    ens = _design_ensemble(args.ensemble)
    b = design_epsilon_bounds(ens, cap)
    print(f"{ens.describe():<26}{b.eps_lower:>13.4e}{b.eps_upper:>13.4e}"
          f"{b.diamond_lower:>13.4e}{b.diamond_upper:>13.4e}")
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ParseError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="obsentropy", description="Observational entropy under random unitaries.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    common = _Parser(add_help=False)
    common.add_argument("--base", choices=["nat", "two"], default=None)
    common.add_argument("--tolerance", type=float, default=None)

    oe = sub.add_parser("oe", parents=[common], help="observational and von Neumann entropy")
    oe.add_argument("--state", required=True)
    oe.add_argument("--povm", required=True)

    mc = sub.add_parser("macro", parents=[common], help="macrostate decomposition")
    mc.add_argument("--state", required=True)
    mc.add_argument("--povm", required=True)

    tl = sub.add_parser("tail", parents=[common], help="Monte Carlo tail sweep")
    tl.add_argument("--config")
    tl.add_argument("--seed", type=int)
    tl.add_argument("--samples", type=int)
    tl.add_argument("--workers", type=int)
    tl.add_argument("--out-csv", dest="out_csv")
    tl.add_argument("--out-json", dest="out_json")

    sub.add_parser("worked-examples", help="power-of-two bound arithmetic at d = 2^128")

    dq = sub.add_parser("design-quality", help="2-design error interval")
    dq.add_argument("--ensemble", required=True,
                    help="clifford-group:n, identity:d, brickwork:n, or an operator file")
    dq.add_argument("--depths", default="1,2,4")
    dq.add_argument("--cap", type=int, default=None)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        parser = build_parser()
        args, rest = parser.parse_known_args(argv)
        if rest and args.command != "tail":
            raise ParseError(f"unrecognized arguments: {' '.join(rest)}")
        if args.command == "oe":
            args.base = args.base or "nat"
            return cmd_oe(args)
        if args.command == "macro":
            return cmd_macro(args)
        if args.command == "tail":
            return cmd_tail(args, rest)
        if args.command == "worked-examples":
            return cmd_worked_examples(args)
        return cmd_design_quality(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NotMacroscopic as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_NOT_MACRO
    except (ValidationError, ProjectionCheckFailed, ValueError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except SoundnessViolation as exc:
        print(f"soundness violation: {exc}", file=sys.stderr)
        return EXIT_SOUNDNESS


if __name__ == "__main__":
    sys.exit(main())
