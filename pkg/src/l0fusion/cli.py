"""Command-line interface.

Every subcommand accepts ``--config FILE`` (flat ``key = value`` lines whose
keys are the long option names) and ``--print-config``. Explicit flags
override the file. Exit status is 0 on success, 2 on usage or configuration
errors and 1 on runtime failures.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import Any, Sequence

import numpy as np

from . import io
from .experiments import RECORD_FIELDS, SimSettings, run_pipeline, run_study, summarize
from .metrics import grouping_distance, nmi_with_zero_group, same_grouping, tpp
from .experiments import nmi_on_support
from .numerics import Dataset
from .params import Budget
from .screening import ScreeningConfig, screen_with_covariates
from .solver import SolveOptions, export_mio, solve_exact
from .tuning import TuneConfig, default_fit, tune

logger = logging.getLogger("l0fusion")


class UsageError(Exception):
    pass


def int_list(text: str) -> list[int]:
    """``"1,2,5"`` or ``"1-4"`` or a mix such as ``"1-3,6"``."""
    out: list[int] = []
    for part in str(text).replace(" ", "").split(","):
        if not part:
            continue
        if "-" in part[1:]:
            lo, hi = part.split("-", 1) if part[0] != "-" else (part, part)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    if not out:
        raise argparse.ArgumentTypeError(f"empty integer list: {text!r}")
    return out


def pair_list(text: str) -> list[tuple[int, int]]:
    """``"0:1,2:5"`` -> ``[(0, 1), (2, 5)]`` (0-based feature indices)."""
    pairs = []
    for part in str(text).replace(" ", "").split(","):
        if not part:
            continue
        a, sep, b = part.partition(":")
        if not sep:
            raise argparse.ArgumentTypeError(f"expected i:j pairs, got {part!r}")
        pairs.append((int(a), int(b)))
    return pairs


def opt_float(text: str) -> float | None:
    return None if str(text).lower() in ("", "none") else float(text)


def opt_int(text: str) -> int | None:
    return None if str(text).lower() in ("", "none") else int(text)


def boolean(text: str) -> bool:
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text!r}")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value file; flags override it")
    p.add_argument("--print-config", action="store_true", help="print effective settings and exit")
    p.add_argument("--out", default="-", help="output path (default: stdout)")
    p.add_argument("-v", "--verbose", action="store_true")


def _solver_flags(p: argparse.ArgumentParser, with_budget: bool = True) -> None:
    if with_budget:
        p.add_argument("--K", type=int, default=2, help="maximum number of nonzero groups")
        p.add_argument("--s", type=opt_int, default=None, help="maximum nonzeros (default p)")
    p.add_argument("--gap-tol", type=float, default=1e-4)
    p.add_argument("--time-limit", type=opt_float, default=None, help="seconds")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="l0fuse", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("simulate", help="Monte Carlo study from a preset design")
    _common(p)
    d = SimSettings()
    p.add_argument("--preset", default=d.preset)
    p.add_argument("--reps", type=int, default=d.reps)
    p.add_argument("--seed", type=int, default=d.seed)
    p.add_argument("--rho", type=float, default=d.rho)
    p.add_argument("--signal-r", type=float, default=d.signal_r)
    p.add_argument("--sigma", type=float, default=d.sigma)
    p.add_argument("--n", type=opt_int, default=None)
    p.add_argument("--p", type=opt_int, default=None)
    p.add_argument("--K", type=opt_int, default=None, help="default: true group count")
    p.add_argument("--s", type=opt_int, default=None, help="default: true sparsity")
    p.add_argument("--screen", type=int, default=0, help="CoSaMP size, 0 to skip")
    p.add_argument("--gap-tol", type=float, default=d.gap_tol)
    p.add_argument("--time-limit", type=opt_float, default=d.time_limit)
    p.add_argument("--warm-start", type=boolean, default=True)
    p.add_argument("--workers", type=opt_int, default=None)
    p.add_argument("--no-summary", action="store_true")

    p = sub.add_parser("pipeline", help="screen, tune K and fuse a dataset CSV")
    _common(p)
    p.add_argument("data")
    p.add_argument("--s-hat", type=int, required=False, default=None, help="screening size (capped at 100)")
    p.add_argument("--K", type=int_list, default=int_list("1-10"), help="grid, e.g. 1-10")
    p.add_argument("--method", choices=("bic", "cv"), default="cv")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    _solver_flags(p, with_budget=False)

    p = sub.add_parser("fit", help="exact fit of one budget")
    _common(p)
    p.add_argument("data")
    _solver_flags(p)
    p.add_argument("--node-limit", type=opt_int, default=None)
    p.add_argument("--warm-start", type=boolean, default=True)
    p.add_argument("--must-link", type=pair_list, default=[])
    p.add_argument("--cannot-link", type=pair_list, default=[])

    p = sub.add_parser("screen", help="CoSaMP screening")
    _common(p)
    p.add_argument("data")
    p.add_argument("--size", type=int, required=False, default=None)
    p.add_argument("--expand", type=opt_int, default=None)
    p.add_argument("--max-iters", type=int, default=200)

    p = sub.add_parser("metrics", help="compare an estimate with the truth")
    _common(p)
    p.add_argument("estimate", help="coefficient file, one value per line")
    p.add_argument("truth", help="coefficient file, one value per line")

    p = sub.add_parser("tune", help="score a (K, s) grid")
    _common(p)
    p.add_argument("data")
    p.add_argument("--K", type=int_list, default=int_list("1-4"))
    p.add_argument("--s", type=int_list, default=None, help="grid (default: p)")
    p.add_argument("--method", choices=("bic", "cv"), default="bic")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    _solver_flags(p, with_budget=False)

    p = sub.add_parser("export-mio", help="write the mixed-integer model in LP format")
    _common(p)
    p.add_argument("data")
    p.add_argument("--K", type=int, default=2)
    p.add_argument("--s", type=opt_int, default=None)
    p.add_argument("--big-m", type=opt_float, default=None)
    p.add_argument("--delta", type=float, default=1e-6)
    return parser


_META = {"config", "print_config", "out", "verbose", "command", "help"}


def _apply_config(parser: argparse.ArgumentParser, path: str) -> None:
    """Install file values as parser defaults, converting with each option's type."""
    try:
        raw = io.read_config(path)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    except io.InputFormatError as exc:
        raise UsageError(str(exc)) from None
    actions = {a.dest: a for a in parser._actions}
    values: dict[str, Any] = {}
    for key, text in raw.items():
        act = actions.get(key)
        if act is None or key in _META or not act.option_strings:
            raise UsageError(f"{path}: unknown key {key!r}")
        try:
            if act.nargs == 0:
                values[key] = boolean(text)
            elif act.type is not None:
                values[key] = act.type(text)
            else:
                values[key] = text
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise UsageError(f"{path}: key {key!r}: {exc}") from None
        if act.choices is not None and values[key] not in act.choices:
            raise UsageError(f"{path}: key {key!r}: invalid choice {text!r}")
    parser.set_defaults(**values)


def _config_text(v: Any) -> str:
    if isinstance(v, list):
        return ",".join(":".join(map(str, x)) if isinstance(x, tuple) else str(x) for x in v)
    return io.format_value(v)


def _settings(args: argparse.Namespace) -> dict[str, Any]:
    return {k: v for k, v in sorted(vars(args).items()) if k not in _META}


def _open_out(path: str):
    return sys.stdout if path == "-" else open(path, "w", newline="")


def _emit_json(path: str, obj: Any) -> None:
    fh = _open_out(path)
    try:
        json.dump(obj, fh, indent=2, default=_json_default)
        fh.write("\n")
    finally:
        if fh is not sys.stdout:
            fh.close()


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"not serializable: {type(o)}")


def _load(path: str) -> tuple[Dataset, np.ndarray | None]:
    return io.read_dataset(path)


def _sim_settings(args) -> SimSettings:
    return SimSettings(
        preset=args.preset, reps=args.reps, seed=args.seed, rho=args.rho,
        signal_r=args.signal_r, sigma=args.sigma, n=args.n, p=args.p, K=args.K, s=args.s,
        screen=args.screen, gap_tol=args.gap_tol, time_limit=args.time_limit,
        warm_start=args.warm_start, workers=args.workers,
    )


def cmd_simulate(args) -> int:
    try:
        settings = _sim_settings(args)
    except ValueError as exc:
        raise UsageError(f"simulate: {exc}") from None
    records = run_study(settings)
    rows = list(records)
    if not args.no_summary:
        rows += summarize(records)
    fh = _open_out(args.out)
    try:
        io.write_table(fh, rows, RECORD_FIELDS)
    finally:
        if fh is not sys.stdout:
            fh.close()
    return 0


def cmd_pipeline(args) -> int:
    if args.s_hat is None:
        raise UsageError("pipeline: --s-hat is required")
    data, truth = _load(args.data)
    res = run_pipeline(
        data, args.s_hat, args.K, method=args.method, folds=args.folds, seed=args.seed,
        gap_tol=args.gap_tol, time_limit=args.time_limit, beta_true=truth,
    )
    _emit_json(args.out, {
        "settings": _settings(args),
        "screened": res.support,
        "K": res.K,
        "scores": {f"K={k},s={s}": v for (k, s), v in res.scores.items()},
        "covariates": res.params.alpha,
        "groups": res.groups,
        "beta": res.params.beta,
        "objective": res.report.incumbent_objective,
        "mip_gap": res.report.mip_gap,
        "termination": res.report.termination,
        "metrics": res.metrics,
    })
    return 0


def cmd_fit(args) -> int:
    data, truth = _load(args.data)
    s = data.p if args.s is None else args.s
    opts = SolveOptions(
        use_warm_start=args.warm_start, gap_tol=args.gap_tol, node_limit=args.node_limit,
        time_limit=args.time_limit, must_link=args.must_link, cannot_link=args.cannot_link,
    )
    fp, rep = solve_exact(data, Budget(args.K, s), opts)
    out = {
        "settings": _settings(args),
        "beta": fp.beta,
        "alpha": fp.alpha,
        "labels": fp.labels,
        "group_values": fp.gamma,
        "objective": rep.incumbent_objective,
        "lower_bound": rep.lower_bound,
        "mip_gap": rep.mip_gap,
        "nodes": rep.nodes_explored,
        "wall_time": rep.wall_time,
        "termination": rep.termination,
        "warm_start_objective": rep.warm_start_objective,
    }
    if truth is not None:
        out["same_grouping"] = same_grouping(fp.beta, truth)
        out["nmi_zero"] = nmi_with_zero_group(fp.beta, truth)
    _emit_json(args.out, out)
    return 0


def cmd_screen(args) -> int:
    if args.size is None:
        raise UsageError("screen: --size is required")
    data, truth = _load(args.data)
    res = screen_with_covariates(
        data, ScreeningConfig(args.size, args.expand, max_iters=args.max_iters)
    )
    out = {
        "settings": _settings(args),
        "support": res.support,
        "coef": res.coef[res.support],
        "iterations": res.iterations,
        "converged": res.converged,
    }
    if truth is not None and np.any(truth):
        out["tpp"] = tpp(res.support, np.flatnonzero(truth))
    _emit_json(args.out, out)
    return 0


def cmd_metrics(args) -> int:
    est = io.read_vector(args.estimate)
    truth = io.read_vector(args.truth)
    if est.size != truth.size:
        raise UsageError(f"metrics: lengths differ ({est.size} vs {truth.size})")
    rows = [
        {"metric": "nmi", "value": nmi_on_support(est, truth)},
        {"metric": "nmi_zero", "value": nmi_with_zero_group(est, truth)},
        {"metric": "grouping_distance", "value": grouping_distance(est, truth)},
        {"metric": "same_grouping", "value": same_grouping(est, truth)},
        {"metric": "tpp", "value": tpp(np.flatnonzero(est), np.flatnonzero(truth)) if np.any(truth) else None},
    ]
    fh = _open_out(args.out)
    try:
        io.write_table(fh, rows, ["metric", "value"])
    finally:
        if fh is not sys.stdout:
            fh.close()
    return 0


def cmd_tune(args) -> int:
    data, _ = _load(args.data)
    s_grid = args.s if args.s is not None else [data.p]
    cfg = TuneConfig(args.K, s_grid, args.method, args.folds, args.seed)
    res = tune(data, cfg, default_fit(SolveOptions(gap_tol=args.gap_tol, time_limit=args.time_limit)))
    rows = [
        {"K": k, "s": s, "score": v, "selected": (k, s) == (res.K, res.s)}
        for (k, s), v in sorted(res.scores.items())
    ]
    fh = _open_out(args.out)
    try:
        io.write_table(fh, rows, ["K", "s", "score", "selected"])
    finally:
        if fh is not sys.stdout:
            fh.close()
    return 0


def cmd_export_mio(args) -> int:
    data, _ = _load(args.data)
    s = data.p if args.s is None else args.s
    text = export_mio(data, Budget(args.K, s), args.big_m, args.delta)
    fh = _open_out(args.out)
    try:
        fh.write(text)
    finally:
        if fh is not sys.stdout:
            fh.close()
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "pipeline": cmd_pipeline,
    "fit": cmd_fit,
    "screen": cmd_screen,
    "metrics": cmd_metrics,
    "tune": cmd_tune,
    "export-mio": cmd_export_mio,
}


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(sys.stderr)
            return 2
        if args.config:
            sub = parser._subparsers._group_actions[0].choices[args.command]
            _apply_config(sub, args.config)
            args = parser.parse_args(argv)
        logging.basicConfig(
            level=logging.DEBUG if args.verbose else logging.WARNING,
            format="%(levelname)s %(name)s: %(message)s",
        )
        if args.print_config:
            for k, v in _settings(args).items():
                print(f"{k} = {_config_text(v)}")
            return 0
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
