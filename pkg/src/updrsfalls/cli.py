"""Batch command-line front end.

Subcommands: describe, fit, crossval, grid, synth, roc-export. Outputs are
written atomically (temp file + rename), every output file starts with a
header comment line declaring the full resolved configuration, and errors
surface as single-line diagnostics (exit 1 for validation problems, exit 2
when strict mode counts non-converged cells), never stack traces.
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile
from contextlib import contextmanager
from dataclasses import dataclass

from .cohort import HORIZONS, SCHEMES, build_view, load_cohort, write_cohort
from .errors import UpdrsFallsError
from .forest import DEFAULT_N_TREES, ForestConfig, fit_forest, write_importance_csv
from .logistic import DEFAULT_V0, write_fit_summary
from .selection import bma_average, forward_select, write_membership_table
from .stats import describe_cohort
from .suite import (METHODS, SuiteOptions, run_cell, run_scheme_suite,
                    write_metrics_grid, write_variables_grid)
from .synth import ScenarioConfig, generate_synthetic, load_scenario
from .tree import TreeConfig, fit_tree, tree_to_text
from .evaluation import write_roc_csv

FIDELITY_FLAGS = ("full-data-selection", "lml-ratio-weights",
                  "entropy-splits", "threshold-balance")

_DEFAULTS_TEXT = (
    "method defaults: v0 = 1000, n_trees = 500, mtry = floor(sqrt(p)), "
    "min_node_size = 5, min_impurity_decrease = 0.01, max_depth = 5")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that reports bad arguments as exit-code-1 diagnostics."""

    def error(self, message):
        raise _UsageError(message)


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved invocation: one value per knob, fidelity toggles as a
    flag set."""
    command: str
    input_path: str | None = None
    output_dir: str | None = None
    scheme: str | None = None
    method: str | None = None
    horizon: str | None = None
    seed: int | None = None
    weighting: str = "posterior_softmax"
    fidelity_flags: frozenset = frozenset()
    v0: float = DEFAULT_V0
    n_trees: int = DEFAULT_N_TREES
    mtry: int | None = None
    min_node_size: int = 5
    min_impurity_decrease: float = 0.01
    max_depth: int = 5
    strict: bool = False
    scenario_path: str | None = None

    def validate(self):
        for flag in self.fidelity_flags:
            if flag not in FIDELITY_FLAGS:
                raise _UsageError(f"unknown fidelity flag {flag!r}")
        if self.command == "synth" and self.seed is None:
            raise _UsageError("synth requires --seed")
        if self.method == "rf" and self.seed is None:
            raise _UsageError("--method rf requires --seed")

    def suite_options(self) -> SuiteOptions:
        f = self.fidelity_flags
        return SuiteOptions(
            v0=self.v0, n_trees=self.n_trees, mtry=self.mtry,
            min_node_size=self.min_node_size,
            min_impurity_decrease=self.min_impurity_decrease,
            max_depth=self.max_depth,
            criterion="entropy" if "entropy-splits" in f else "gini",
            weighting=("lml_ratio" if "lml-ratio-weights" in f
                       else "posterior_softmax"),
            threshold_rule=("balance" if "threshold-balance" in f
                            else "youden"),
            full_data_selection="full-data-selection" in f)

    def header_line(self) -> str:
        pairs = [
            ("command", self.command),
            ("input", self.input_path or "-"),
            ("out", self.output_dir or "-"),
            ("scenario", self.scenario_path or "-"),
            ("scheme", self.scheme or "-"),
            ("method", self.method or "-"),
            ("horizon", self.horizon or "-"),
            ("seed", "-" if self.seed is None else self.seed),
            ("v0", repr(self.v0)),
            ("n_trees", self.n_trees),
            ("mtry", "auto" if self.mtry is None else self.mtry),
            ("min_node_size", self.min_node_size),
            ("min_impurity_decrease", repr(self.min_impurity_decrease)),
            ("max_depth", self.max_depth),
            ("weighting", self.weighting),
            ("fidelity", "+".join(sorted(self.fidelity_flags)) or "none"),
            ("strict", self.strict),
        ]
        return "config " + " ".join(f"{k}={v}" for k, v in pairs)


@contextmanager
def _atomic_open(path):
    """Write-to-temp-then-rename so partially written outputs never land
    under the final name."""
    path = os.path.abspath(path)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path), suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _add_analysis_options(p: _Parser, with_fidelity=True):
    p.add_argument("--seed", type=int, default=None,
                   help="base seed for all randomized steps (required for "
                        "--method rf and synth; grid defaults to 0)")
    p.add_argument("--v0", type=float, default=DEFAULT_V0,
                   help="prior variance of every regression coefficient "
                        "(default: 1000)")
    p.add_argument("--n-trees", type=int, default=DEFAULT_N_TREES,
                   help="number of trees per forest (default: 500)")
    p.add_argument("--mtry", type=int, default=None,
                   help="features sampled per split "
                        "(default: floor(sqrt(p)))")
    p.add_argument("--min-node-size", type=int, default=5,
                   help="smallest allowed child node (default: 5)")
    p.add_argument("--min-impurity-decrease", type=float, default=0.01,
                   help="smallest split gain kept (default: 0.01)")
    p.add_argument("--max-depth", type=int, default=5,
                   help="tree depth limit (default: 5)")
    p.add_argument("--strict", action="store_true",
                   help="exit 2 when any cell fails to converge")
    if with_fidelity:
        p.add_argument("--full-data-selection", action="store_true",
                       help="freeze variable selection on the full data "
                            "instead of redoing it per cross-validation fold")
        p.add_argument("--lml-ratio-weights", action="store_true",
                       help="average models with literal lml-ratio weights "
                            "instead of softmax posterior weights")
        p.add_argument("--entropy-splits", action="store_true",
                       help="grow trees on entropy instead of Gini impurity")
        p.add_argument("--threshold-balance", action="store_true",
                       help="pick the threshold minimizing |sensitivity - "
                            "specificity| instead of maximizing Youden's J")


def _build_parser() -> _Parser:
    parser = _Parser(prog="updrsfalls",
                     description="Falls-classification batch toolkit: "
                                 "ingest or synthesize cohorts, fit models, "
                                 "cross-validate, and emit report tables.",
                     epilog=_DEFAULTS_TEXT)
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    def cell_args(p):
        p.add_argument("--scheme", required=True, choices=SCHEMES,
                       help="predictor scheme")
        p.add_argument("--method", required=True, choices=METHODS,
                       help="classification method")
        p.add_argument("--horizon", required=True, choices=HORIZONS,
                       help="fall-outcome horizon")

    p = sub.add_parser("describe", epilog=_DEFAULTS_TEXT,
                       help="descriptive statistics table per horizon")
    p.add_argument("--input", required=True, help="cohort CSV")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--horizon", choices=HORIZONS, default=None,
                   help="single horizon (default: both)")

    p = sub.add_parser("fit", epilog=_DEFAULTS_TEXT,
                       help="full-data fit of one scheme x method x horizon")
    p.add_argument("--input", required=True, help="cohort CSV")
    p.add_argument("--out", required=True, help="output directory")
    cell_args(p)
    _add_analysis_options(p)

    p = sub.add_parser("crossval", epilog=_DEFAULTS_TEXT,
                       help="leave-one-out evaluation of one cell")
    p.add_argument("--input", required=True, help="cohort CSV")
    p.add_argument("--out", required=True, help="output directory")
    cell_args(p)
    _add_analysis_options(p)

    p = sub.add_parser("grid", epilog=_DEFAULTS_TEXT,
                       help="full scheme x method x horizon grid with "
                            "report tables")
    p.add_argument("--input", required=True, help="cohort CSV")
    p.add_argument("--out", required=True, help="output directory")
    _add_analysis_options(p)

    p = sub.add_parser("synth", epilog=_DEFAULTS_TEXT,
                       help="generate a synthetic cohort CSV")
    p.add_argument("--scenario", default=None,
                   help="scenario config file (default: built-in scenario)")
    p.add_argument("--seed", type=int, required=True, help="generator seed")
    p.add_argument("--out", required=True, help="output CSV path")

    p = sub.add_parser("roc-export", epilog=_DEFAULTS_TEXT,
                       help="plot-ready threshold,fpr,tpr CSV for one cell")
    p.add_argument("--input", required=True, help="cohort CSV")
    p.add_argument("--out", required=True, help="output directory")
    cell_args(p)
    _add_analysis_options(p)

    return parser


def _config_from_args(args) -> RunConfig:
    flags = set()
    for flag in FIDELITY_FLAGS:
        if getattr(args, flag.replace("-", "_"), False):
            flags.add(flag)
    seed = getattr(args, "seed", None)
    if args.command == "grid" and seed is None:
        seed = 0
    cfg = RunConfig(
        command=args.command,
        input_path=getattr(args, "input", None),
        output_dir=getattr(args, "out", None),
        scheme=getattr(args, "scheme", None),
        method=getattr(args, "method", None),
        horizon=getattr(args, "horizon", None),
        seed=seed,
        weighting=("lml_ratio" if "lml-ratio-weights" in flags
                   else "posterior_softmax"),
        fidelity_flags=frozenset(flags),
        v0=getattr(args, "v0", DEFAULT_V0),
        n_trees=getattr(args, "n_trees", DEFAULT_N_TREES),
        mtry=getattr(args, "mtry", None),
        min_node_size=getattr(args, "min_node_size", 5),
        min_impurity_decrease=getattr(args, "min_impurity_decrease", 0.01),
        max_depth=getattr(args, "max_depth", 5),
        strict=getattr(args, "strict", False),
        scenario_path=getattr(args, "scenario", None),
    )
    cfg.validate()
    return cfg


def _ensure_dir(path):
    os.makedirs(path, exist_ok=True)


def _cmd_describe(cfg: RunConfig) -> int:
    dataset = load_cohort(cfg.input_path)
    _ensure_dir(cfg.output_dir)
    horizons = [cfg.horizon] if cfg.horizon else list(HORIZONS)
    for h in horizons:
        summary = describe_cohort(dataset, h)
        with _atomic_open(os.path.join(cfg.output_dir, f"describe_{h}.csv")) as fh:
            summary.to_csv(fh, header_comment=cfg.header_line())
    return 0


def _cmd_fit(cfg: RunConfig) -> int:
    dataset = load_cohort(cfg.input_path)
    view = build_view(dataset, cfg.scheme, cfg.horizon)
    _ensure_dir(cfg.output_dir)
    opts = cfg.suite_options()
    stem = f"fit_{cfg.method}_{cfg.scheme}_{cfg.horizon}"
    out = os.path.join(cfg.output_dir, stem)

    if cfg.method == "dt":
        tree = fit_tree(view, TreeConfig(
            opts.min_node_size, opts.min_impurity_decrease,
            opts.max_depth, opts.criterion))
        with _atomic_open(out + ".txt") as fh:
            fh.write(f"# {cfg.header_line()}\n")
            fh.write(tree_to_text(tree, view.feature_names))
    elif cfg.method == "rf":
        forest = fit_forest(view, ForestConfig(
            n_trees=opts.n_trees, mtry=opts.mtry,
            tree_config=TreeConfig(opts.min_node_size,
                                   opts.min_impurity_decrease,
                                   opts.max_depth, opts.criterion),
            seed=cfg.seed if cfg.seed is not None else 0))
        with _atomic_open(out + ".csv") as fh:
            write_importance_csv(forest, fh, header_comment=cfg.header_line())
    elif cfg.method == "logit":
        trace = forward_select(view, v0=opts.v0)
        fit = trace.fits[trace.preferred_model]
        with _atomic_open(out + ".csv") as fh:
            write_fit_summary(fit, fh, header_comment=cfg.header_line())
    else:  # bma
        trace = forward_select(view, v0=opts.v0)
        avg = bma_average(trace, view, weighting=opts.weighting, v0=opts.v0)
        with _atomic_open(out + ".csv") as fh:
            write_membership_table(avg, fh, header_comment=cfg.header_line())
    return 0


def _finish_cell(cfg: RunConfig, cell) -> int | None:
    """Shared failed-cell handling for single-cell commands; returns the
    exit code when the cell failed, else None."""
    if cell.ok:
        return None
    sys.stderr.write(f"updrsfalls: error: {cell.error_kind}: {cell.error}\n")
    return 2 if cfg.strict and cell.error_kind == "NonConvergence" else 1


def _cmd_crossval(cfg: RunConfig) -> int:
    dataset = load_cohort(cfg.input_path)
    view = build_view(dataset, cfg.scheme, cfg.horizon)
    _ensure_dir(cfg.output_dir)
    opts = cfg.suite_options()
    cell = run_cell(view, cfg.method, opts,
                    cfg.seed if cfg.seed is not None else 0)
    code = _finish_cell(cfg, cell)
    if code is not None:
        return code
    stem = f"crossval_{cfg.method}_{cfg.scheme}_{cfg.horizon}"
    with _atomic_open(os.path.join(cfg.output_dir, stem + ".csv")) as fh:
        cell.report.write_csv(fh, header_comment=cfg.header_line())
    if cfg.method == "bma":
        trace = forward_select(view, v0=opts.v0)
        avg = bma_average(trace, view, weighting=opts.weighting, v0=opts.v0)
        name = f"membership_{cfg.scheme}_{cfg.horizon}.csv"
        with _atomic_open(os.path.join(cfg.output_dir, name)) as fh:
            write_membership_table(avg, fh, header_comment=cfg.header_line())
    return 0


def _cmd_roc_export(cfg: RunConfig) -> int:
    dataset = load_cohort(cfg.input_path)
    view = build_view(dataset, cfg.scheme, cfg.horizon)
    _ensure_dir(cfg.output_dir)
    cell = run_cell(view, cfg.method, cfg.suite_options(),
                    cfg.seed if cfg.seed is not None else 0)
    code = _finish_cell(cfg, cell)
    if code is not None:
        return code
    name = f"roc_{cfg.scheme}_{cfg.method}_{cfg.horizon}.csv"
    with _atomic_open(os.path.join(cfg.output_dir, name)) as fh:
        write_roc_csv(cell.report.roc, fh, header_comment=cfg.header_line())
    return 0


def _cmd_grid(cfg: RunConfig) -> int:
    dataset = load_cohort(cfg.input_path)
    _ensure_dir(cfg.output_dir)
    suite = run_scheme_suite(dataset, methods=set(METHODS),
                             horizons=set(HORIZONS), seed=cfg.seed,
                             options=cfg.suite_options())
    header = cfg.header_line()
    for h in suite.horizons:
        with _atomic_open(os.path.join(cfg.output_dir, f"metrics_{h}.csv")) as fh:
            write_metrics_grid(suite, h, fh, header_comment=header)
    with _atomic_open(os.path.join(cfg.output_dir, "variables.csv")) as fh:
        write_variables_grid(suite, fh, header_comment=header)
    for (scheme, horizon, method), cell in suite.cells.items():
        if not cell.ok:
            continue
        name = f"roc_{scheme}_{method}_{horizon}.csv"
        with _atomic_open(os.path.join(cfg.output_dir, name)) as fh:
            write_roc_csv(cell.report.roc, fh, header_comment=header)
    for cell in suite.failures():
        sys.stderr.write(
            f"updrsfalls: cell {cell.scheme}/{cell.horizon}/{cell.method} "
            f"failed: {cell.error_kind}: {cell.error}\n")
    if cfg.strict and suite.error_count("NonConvergence") > 0:
        sys.stderr.write("updrsfalls: error: non-converged cells present "
                         "in strict mode\n")
        return 2
    return 0


def _cmd_synth(cfg: RunConfig) -> int:
    scenario = (load_scenario(cfg.scenario_path)
                if cfg.scenario_path else ScenarioConfig())
    dataset = generate_synthetic(scenario, cfg.seed)
    write_cohort(dataset, cfg.output_dir, header_comment=cfg.header_line())
    return 0


_COMMANDS = {
    "describe": _cmd_describe,
    "fit": _cmd_fit,
    "crossval": _cmd_crossval,
    "grid": _cmd_grid,
    "synth": _cmd_synth,
    "roc-export": _cmd_roc_export,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = _config_from_args(args)
        return _COMMANDS[cfg.command](cfg)
    except _UsageError as exc:
        sys.stderr.write(f"updrsfalls: error: {exc}\n")
        return 1
    except UpdrsFallsError as exc:
        sys.stderr.write(f"updrsfalls: error: {type(exc).__name__}: {exc}\n")
        return 1
    except OSError as exc:
        sys.stderr.write(f"updrsfalls: error: {exc}\n")
        return 1
    except Exception as exc:  # noqa: BLE001 - diagnostics, never stack traces
        sys.stderr.write(
            f"updrsfalls: internal error: {type(exc).__name__}: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
