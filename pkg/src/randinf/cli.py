"""Command-line interface: CSV ingestion, subcommands, JSON/CSV output.

Exit codes: 0 success, 2 input or validation error, 3 computation error,
4 method-precondition error (for example inverting a non-monotone statistic).
Numbers are serialized with 12 significant digits and infinities as the
strings "inf" / "-inf".  Identical inputs and seeds produce byte-identical
output.
"""

import argparse
import csv
import json
import math
import sys

import numpy as np

from . import __version__
from .combine import combined_interval, make_combiner
from .datasets import toy_experiment
from .design import CRD, RBD, Design, EnumerationCapError
from .inversion import (
    ConfidenceInterval,
    LevelTooHighError,
    NonMonotoneStatisticError,
    build_step_function,
    confidence_interval,
    traditional_interval,
)
from .mcplan import required_k, threshold_table
from .randomization import DEFAULT_ENUMERATION_CAP, ExactMode, MCMode, PValueKind, p_values
from .simulate import ScenarioConfig, balanced_design, run_scenario
from .statistics import ObservedData, StatisticError, get_statistic, observed_statistic

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_COMPUTE = 3
EXIT_PRECONDITION = 4


class InputError(ValueError):
    pass


# ---------------------------------------------------------------------------
# serialization helpers
# ---------------------------------------------------------------------------


def _num(x):
    """12-significant-digit JSON-safe number; infinities become strings."""
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if x != x:
        raise ValueError("refusing to serialize NaN")
    return float(f"{x:.12g}")


def _dump(obj, as_json: bool, out=None):
    out = out or sys.stdout
    if as_json:
        json.dump(obj, out, indent=2)
        out.write("\n")
    else:
        _dump_text(obj, out)


def _dump_text(obj, out, indent=""):
    if isinstance(obj, dict):
        for key, val in obj.items():
            if isinstance(val, (dict, list)):
                out.write(f"{indent}{key}:\n")
                _dump_text(val, out, indent + "  ")
            else:
                out.write(f"{indent}{key}: {val}\n")
    elif isinstance(obj, list):
        for val in obj:
            _dump_text(val, out, indent)
    else:
        out.write(f"{indent}{obj}\n")


def _interval_dict(ci: ConfidenceInterval):
    d = {
        "lower": _num(ci.lower),
        "upper": _num(ci.upper),
        "alpha1": _num(ci.alpha1),
        "alpha2": _num(ci.alpha2),
        "method": ci.method,
        "statistic": ci.statistic,
    }
    d.update(_mode_dict(ci.mode))
    return d


def _mode_dict(mode, k_field: str = "k"):
    if isinstance(mode, MCMode):
        return {"mode": "mc", k_field: mode.k, "seed": mode.seed}
    return {"mode": "exact"}


# ---------------------------------------------------------------------------
# input parsing
# ---------------------------------------------------------------------------


def parse_design(text: str) -> Design:
    """``crd:N,N1`` or ``rbd:SIZE/TREATED,SIZE/TREATED,...``"""
    try:
        kind, _, body = text.partition(":")
        if kind == "crd":
            n, n1 = (int(v) for v in body.split(","))
            return CRD(n, n1)
        if kind == "rbd":
            blocks = tuple(tuple(int(v) for v in blk.split("/")) for blk in body.split(","))
            return RBD(blocks)
    except (ValueError, TypeError) as exc:
        raise InputError(f"bad design {text!r}: {exc}") from exc
    raise InputError(f"bad design {text!r}: expected crd:N,N1 or rbd:SIZE/TREATED,...")


def read_experiment(path, design: Design) -> ObservedData:
    """Load a unit_id,w,y[,block] CSV and validate it against the design."""
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None:
                raise InputError(f"{path}: empty file")
            cols = set(reader.fieldnames)
            if not {"unit_id", "w", "y"} <= cols:
                raise InputError(f"{path}: header must contain unit_id,w,y (got {sorted(cols)})")
            has_block = "block" in cols
            w, y, blocks = [], [], []
            for lineno, row in enumerate(reader, start=2):
                if row["w"] not in ("0", "1"):
                    raise InputError(f"{path}:{lineno}: w must be 0 or 1, got {row['w']!r}")
                w.append(int(row["w"]))
                try:
                    val = float(row["y"])
                except ValueError:
                    raise InputError(f"{path}:{lineno}: bad outcome {row['y']!r}") from None
                if not math.isfinite(val):
                    raise InputError(f"{path}:{lineno}: outcome must be finite")
                y.append(val)
                if has_block:
                    blocks.append(row["block"])
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc

    if isinstance(design, RBD) and not has_block:
        raise InputError(f"{path}: blocked design declared but no block column")
    if isinstance(design, CRD) and has_block:
        raise InputError(f"{path}: block column present but design is not blocked")
    if len(w) != design.n_units:
        raise InputError(f"{path}: {len(w)} rows but design has {design.n_units} units")

    w_arr = np.array(w, dtype=np.int8)
    if isinstance(design, CRD):
        if int(w_arr.sum()) != design.n_treated:
            raise InputError(
                f"{path}: {int(w_arr.sum())} treated units but design declares {design.n_treated}"
            )
        block_ids = None
    else:
        order = {}
        block_ids = np.array([order.setdefault(b, len(order)) for b in blocks])
        sizes = np.bincount(block_ids)
        if len(sizes) != len(design.blocks):
            raise InputError(f"{path}: {len(sizes)} blocks in file, {len(design.blocks)} declared")
        start = 0
        for idx, (size, treated) in enumerate(design.blocks):
            sel = block_ids == idx
            if int(sel.sum()) != size:
                raise InputError(f"{path}: block {idx} has {int(sel.sum())} units, declared {size}")
            if int(w_arr[sel].sum()) != treated:
                raise InputError(
                    f"{path}: block {idx} has {int(w_arr[sel].sum())} treated, declared {treated}"
                )
            if not np.all(np.nonzero(sel)[0] == np.arange(start, start + size)):
                raise InputError(f"{path}: block {idx} rows must be contiguous and ordered")
            start += size
    return ObservedData(w_obs=w_arr, y_obs=np.array(y), blocks=block_ids)


def _mode_from_args(args) -> ExactMode | MCMode:
    if args.mode == "exact":
        return ExactMode(cap=args.cap)
    k = args.k
    if k is None:
        if args.epsilon is None:
            raise InputError("mc mode needs --k or --epsilon (with optional --delta)")
        k = required_k(args.epsilon, args.delta)
    if args.seed is None:
        raise InputError("mc mode needs --seed for reproducibility")
    return MCMode(k=k, seed=args.seed)


def _add_common(p, with_mode=True):
    p.add_argument("--statistic", default="diff_means", help="registered statistic name")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    if with_mode:
        p.add_argument("--mode", choices=("exact", "mc"), default="exact")
        p.add_argument("--k", type=int, default=None, help="Monte Carlo draws")
        p.add_argument("--epsilon", type=float, default=None, help="sup-norm error target")
        p.add_argument("--delta", type=float, default=0.01, help="probability budget for epsilon")
        p.add_argument("--seed", type=int, default=None, help="Monte Carlo seed")
        p.add_argument("--cap", type=int, default=DEFAULT_ENUMERATION_CAP,
                       help="exact-mode enumeration cap")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_test(args):
    design = parse_design(args.design)
    data = read_experiment(args.file, design)
    stat = get_statistic(args.statistic)
    mode = _mode_from_args(args)
    pv = p_values(data, design, stat, args.theta, mode)
    out = {
        "theta": _num(args.theta),
        "T_obs": _num(observed_statistic(stat, data)),
        "p_Lplus": _num(pv[PValueKind.LPLUS]),
        "p_Uplus": _num(pv[PValueKind.UPLUS]),
        "p_Lminus": _num(pv[PValueKind.LMINUS]),
        "p_Uminus": _num(pv[PValueKind.UMINUS]),
        "p_two_sided": _num(pv[PValueKind.TWO_SIDED_L]),
        "statistic": stat.name,
    }
    out.update(_mode_dict(mode, k_field="K"))
    _dump(out, args.json)


def cmd_pcurve(args):
    design = parse_design(args.design)
    data = read_experiment(args.file, design)
    stat = get_statistic(args.statistic)
    mode = _mode_from_args(args)
    kind = PValueKind(args.side)
    if args.exact_breakpoints:
        if not stat.theta_monotone_rightcontinuous:
            raise NonMonotoneStatisticError(
                f"statistic {stat.name!r} has no breakpoint representation; use a theta grid"
            )
        f = build_step_function(data, design, stat, kind, mode)
        rows = [{"breakpoint": _num(b), "value_at": _num(v)}
                for b, v in zip(f.breakpoints, np.atleast_1d(f.value(f.breakpoints)))]
        payload = {"side": kind.value, "base": _num(f.base), "points": rows}
        payload.update(_mode_dict(mode))
        if args.json:
            _dump(payload, True)
        else:
            print("breakpoint,value_at")
            for row in rows:
                print(f"{row['breakpoint']},{row['value_at']}")
        return
    grid = _parse_grid(args)
    values = [p_values(data, design, stat, t, mode)[kind] for t in grid]
    if args.json:
        payload = {"side": kind.value,
                   "points": [{"theta": _num(t), "p": _num(p)} for t, p in zip(grid, values)]}
        payload.update(_mode_dict(mode))
        _dump(payload, True)
    else:
        print("theta,p")
        for t, p in zip(grid, values):
            print(f"{_num(t)},{_num(p)}")


def _parse_grid(args):
    if args.grid:
        return [float(v) for v in args.grid.split(",")]
    if args.grid_range:
        lo, hi, count = args.grid_range.split(",")
        return np.linspace(float(lo), float(hi), int(count)).tolist()
    raise InputError("pcurve needs --grid, --grid-range, or --exact-breakpoints")


def cmd_invert(args):
    design = parse_design(args.design)
    data = read_experiment(args.file, design)
    stat = get_statistic(args.statistic)
    mode = _mode_from_args(args)
    alpha1 = args.alpha1 if args.alpha1 is not None else args.alpha / 2
    alpha2 = args.alpha2 if args.alpha2 is not None else args.alpha / 2
    ci = confidence_interval(data, design, stat, alpha1, alpha2, mode)
    out = {"proposed": _interval_dict(ci)}
    if args.traditional:
        grid = None
        if args.grid:
            grid = [float(v) for v in args.grid.split(",")]
        tr = traditional_interval(data, design, stat, alpha1 + alpha2, mode, theta_grid=grid)
        out["traditional"] = _interval_dict(tr)
    _dump(out, args.json)


def cmd_combine(args):
    if len(args.files) != len(args.designs.split(";")):
        raise InputError("need one design per file, separated by ';'")
    designs = [parse_design(t) for t in args.designs.split(";")]
    experiments = [(read_experiment(f, d), d) for f, d in zip(args.files, designs)]
    stat = get_statistic(args.statistic)
    mode = _mode_from_args(args)
    combiner = make_combiner(args.combiner, None if not args.weights else
                             [float(v) for v in args.weights.split(",")])
    combined = combined_interval(experiments, stat, combiner, args.alpha, mode)
    per_exp = [
        confidence_interval(data, design, stat, args.alpha / 2, args.alpha / 2, mode)
        for data, design in experiments
    ]
    out = {
        "combined": _interval_dict(combined),
        "combiner": args.combiner,
        "experiments": [
            dict(_interval_dict(ci), file=path, n_units=design.n_units)
            for ci, path, design in zip(per_exp, args.files, designs)
        ],
    }
    _dump(out, args.json)


def cmd_mc_threshold(args):
    eps = [float(v) for v in args.epsilons.split(",")]
    rows = threshold_table(eps, args.delta)
    if args.json:
        _dump({"delta": _num(args.delta),
               "rows": [{"epsilon": _num(e), "k_threshold": k} for e, k in rows]}, True)
    else:
        print(f"{'epsilon':>10} {'K_threshold':>12}")
        for e, k in rows:
            print(f"{e:>10g} {k:>12d}")


def cmd_simulate(args):
    with open(args.config) as fh:
        raw = json.load(fh)
    cfg = ScenarioConfig(
        design1=balanced_design(raw["b1"], raw["k1"]),
        design2=balanced_design(raw["b2"], raw["k2"]),
        true_theta=raw.get("true_theta", 0.0),
        reps=raw.get("reps", 500),
        k_cap=raw.get("k_cap", 5000),
        alpha=raw.get("alpha", 0.05),
        combiners=tuple(raw.get("combiners", ["fisher", "de"])),
        statistic=raw.get("statistic", "diff_means"),
        master_seed=raw.get("master_seed", 0),
    )
    result = run_scenario(cfg)
    if args.json:
        payload = {
            "scenario": {k: raw.get(k) for k in ("b1", "k1", "b2", "k2")},
            "reps": cfg.reps, "k_cap": cfg.k_cap, "alpha": _num(cfg.alpha),
            "master_seed": cfg.master_seed,
            "arms": {
                name: {"coverage": _num(arm.coverage),
                       "width_mean": _num(arm.width_mean),
                       "width_sd": _num(arm.width_sd)}
                for name, arm in result.arms.items()
            },
        }
        _dump(payload, True)
    else:
        print(result.summary_table())


def cmd_toy(args):
    data, design = toy_experiment()
    stat = get_statistic("diff_means")
    thetas = [-3.0, -1.0, 0.0, 1.0, 3.0]
    pvals = [p_values(data, design, stat, t)[PValueKind.LPLUS] for t in thetas]
    ci = confidence_interval(data, design, stat, 0.025, 0.025)
    tr = traditional_interval(data, design, stat, 0.05, theta_grid=thetas)
    if args.json:
        out = {
            "data": {
                "w_obs": data.w_obs.tolist(),
                "y_obs": [_num(v) for v in data.y_obs],
            },
            "design": {"n_units": 10, "n_treated": 5, "assignments": 252},
            "T_obs": _num(observed_statistic(stat, data)),
            "p_Lplus": {f"{t:g}": _num(p) for t, p in zip(thetas, pvals)},
            "proposed_interval": _interval_dict(ci),
            "traditional_interval_on_grid": _interval_dict(tr),
        }
        _dump(out, True)
        return
    print("unit_id  w  y_obs")
    for i, (w, y) in enumerate(zip(data.w_obs, data.y_obs), start=1):
        print(f"{i:>7d}  {w}  {y:>5.2f}")
    print(f"\nbalanced design, 5 of 10 treated: 252 assignments, exact enumeration")
    print(f"T_obs (difference of means) = {observed_statistic(stat, data):.3f}")
    print("\n  theta   p_Lplus")
    for t, p in zip(thetas, pvals):
        print(f"{t:>7g}   {p:.3f}")
    print(f"\nproposed 95% interval: [{_num(ci.lower)}, {_num(ci.upper)})")
    print(f"traditional interval on the theta grid: [{_num(tr.lower)}, {_num(tr.upper)})")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="randinf",
        description="Randomization inference: exact and Monte Carlo p-value functions, "
                    "guaranteed-coverage intervals, and combination across experiments.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("test", help="all five p-values of the constant-effect null at one theta")
    p.add_argument("file")
    p.add_argument("--design", required=True)
    p.add_argument("--theta", type=float, required=True)
    _add_common(p)
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("pcurve", help="dump a p-value curve: grid values or exact breakpoints")
    p.add_argument("file")
    p.add_argument("--design", required=True)
    p.add_argument("--side", default="Lplus",
                   choices=[k.value for k in PValueKind if k != PValueKind.TWO_SIDED_L])
    p.add_argument("--grid", default=None, help="comma-separated theta values")
    p.add_argument("--grid-range", default=None, help="LO,HI,COUNT")
    p.add_argument("--exact-breakpoints", action="store_true")
    _add_common(p)
    p.set_defaults(func=cmd_pcurve)

    p = sub.add_parser("invert", help="guaranteed-coverage interval for the constant effect")
    p.add_argument("file")
    p.add_argument("--design", required=True)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--alpha1", type=float, default=None)
    p.add_argument("--alpha2", type=float, default=None)
    p.add_argument("--traditional", action="store_true",
                   help="also report the two-crossing interval (no coverage guarantee)")
    p.add_argument("--grid", default=None,
                   help="theta grid for the traditional comparison interval")
    _add_common(p)
    p.set_defaults(func=cmd_invert)

    p = sub.add_parser("combine", help="fuse experiments into one combined interval")
    p.add_argument("files", nargs="+")
    p.add_argument("--designs", required=True, help="one design per file, ';'-separated")
    p.add_argument("--combiner", default="fisher",
                   choices=("fisher", "stouffer", "double_exponential", "de"))
    p.add_argument("--weights", default=None, help="comma-separated non-negative weights")
    p.add_argument("--alpha", type=float, default=0.05)
    _add_common(p)
    p.set_defaults(func=cmd_combine)

    p = sub.add_parser("mc-threshold", help="Monte Carlo sample sizes for accuracy targets")
    p.add_argument("--epsilons", default="0.1,0.05,0.02,0.01,0.005,0.002,0.001")
    p.add_argument("--delta", type=float, default=0.01)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_mc_threshold)

    p = sub.add_parser("simulate", help="run a two-experiment coverage/width scenario")
    p.add_argument("config", help="JSON scenario file (b1,k1,b2,k2,reps,...)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("toy", help="the ten-unit worked example end to end")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_toy)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (InputError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NonMonotoneStatisticError, LevelTooHighError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except (StatisticError, EnumerationCapError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
