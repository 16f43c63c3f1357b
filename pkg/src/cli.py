"""
Command Line Interface

    replisum combine --po 0.026 --pr 0.001 --method edgington
    replisum level --po 0.001 --method fisher
    replisum power --original-power 0.8 --c 1 --curve 0.2 10 50
    replisum samplesize --po 0.035 --method edgington-weighted --wr 2 --power 0.8
    replisum sequential plan --alpha 0.025 --gamma 0.5
    replisum analyze --input projects.csv --out-dir results/
    replisum simulate --spec null_edgington.json --nsim 1000000

Results go to standard output (JSON by default, or text/CSV with
--output), diagnostics to standard error. Exit codes: 0 success, 1 usage or
domain error, 2 data error, 3 numerical failure.
"""

from enum import Enum
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence
import argparse
import json
import logging
import os
import sys

import numpy as np
import pandas as pd
from pydantic import BaseModel, ValidationError

from .config import get_settings, read_config_file
from .design import sample_size_ratio_curve
from .errors import DataError, NumericalError, ReplisumError, UsageError
from .power import c_grid, power_curve
from .projects import filter_projects, ingest_csv, success_rates, summary_statistics, write_report
from .pydantic_models import (
    DEFAULT_WEIGHTS,
    CombineRequest,
    DesignInput,
    LevelRequest,
    Method,
    PowerRequest,
    PowerScenario,
    PowerType,
    Weights,
)
from .replication_service import get_replication_service
from .sequential import assess_three, final_decision, spending_curve
from .sim import load_sim_config

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3

COMMANDS = ("combine", "level", "power", "samplesize", "sequential", "analyze", "simulate")
SEQUENTIAL_ACTIONS = ("plan", "decide", "assess")
TRUE_VALUES = {"1", "true", "yes", "on"}


class ArgumentParser(argparse.ArgumentParser):
    """argparse parser that raises UsageError instead of exiting."""

    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


# Output

def _round_sig(value: Any) -> Any:
    """Recursively round floats to 6 significant digits for JSON output."""
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, (float, np.floating)):
        if np.isnan(value):
            return None
        return float(f"{value:.6g}")
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, BaseModel):
        return _round_sig(value.model_dump(mode="python"))
    if isinstance(value, dict):
        return {_round_sig(k) if isinstance(k, Enum) else k: _round_sig(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_round_sig(v) for v in value]
    return value


def _percent(p: Optional[float]) -> str:
    return "n/a" if p is None else f"{100.0 * p:.1f}%"


def _emit(args: argparse.Namespace, payload: Any, text: Callable[[], List[str]], frame: Callable[[], pd.DataFrame]):
    """Write `payload` in the requested output format."""
    if args.output == "json":
        sys.stdout.write(json.dumps(_round_sig(payload), indent=2) + "\n")
    elif args.output == "csv":
        frame().to_csv(sys.stdout, index=False, float_format="%.6g", lineterminator="\n")
    else:
        sys.stdout.write("\n".join(text()) + "\n")


def _weights(args: argparse.Namespace) -> Weights:
    if args.wo is None and args.wr is None:
        return DEFAULT_WEIGHTS
    return Weights(wo=args.wo if args.wo is not None else 1.0, wr=args.wr if args.wr is not None else DEFAULT_WEIGHTS.wr)


def _methods(args: argparse.Namespace, c: Optional[float] = None) -> List[Method]:
    if args.method:
        return list(dict.fromkeys(args.method))
    return [m for m in Method if m != Method.META_ANALYSIS or c is not None]


# Commands

def cmd_combine(args: argparse.Namespace) -> int:
    request = CombineRequest(po=args.po, pr=args.pr, c=args.c, methods=_methods(args, args.c), alpha=args.alpha, weights=_weights(args))
    rows = [
        {"method": r.method.value, "p": r.p_combined, "level": r.overall_level, "success": r.success}
        for r in get_replication_service().combine(request)
    ]
    _emit(
        args,
        rows,
        lambda: [
            f"{row['method']}: p = {row['p']:.6g} ({'success' if row['success'] else 'no success'} at level {row['level']:.6g})"
            for row in rows
        ],
        lambda: pd.DataFrame(rows, columns=["method", "p", "level", "success"]),
    )
    return EXIT_OK


def cmd_level(args: argparse.Namespace) -> int:
    request = LevelRequest(po=args.po, methods=_methods(args, args.c), alpha=args.alpha, c=args.c, weights=_weights(args))
    levels = get_replication_service().levels(request)
    _emit(
        args,
        levels,
        lambda: [f"{lv.method.value}: {_percent(lv.level)}" for lv in levels],
        lambda: pd.DataFrame(
            [{"method": lv.method.value, "po": lv.po, "level": lv.level} for lv in levels],
            columns=["method", "po", "level"],
        ),
    )
    return EXIT_OK


def cmd_power(args: argparse.Namespace) -> int:
    weights = _weights(args)
    methods = args.method or list(Method)
    if args.curve:
        c_min, c_max, steps = args.curve
        if not float(steps).is_integer():
            raise UsageError(f"--curve steps must be an integer, got {steps}")
        frame = power_curve(
            c_grid(c_min, c_max, int(steps)),
            methods,
            args.original_power,
            d=args.d,
            alpha=args.alpha,
            weights=weights,
            workers=args.workers,
        )
        _emit(
            args,
            frame.to_dict(orient="records"),
            lambda: [
                f"{row.method} c={row.c:.3g}: {_percent(row.project_power)}" for row in frame.itertuples()
            ],
            lambda: frame,
        )
        return EXIT_OK

    scenario = PowerScenario(original_power=args.original_power, c=args.c, d=args.d, alpha=args.alpha, weights=weights)
    results = get_replication_service().power(PowerRequest(scenario=scenario, methods=methods, include_limit=args.limit))
    _emit(
        args,
        results,
        lambda: [
            f"{r.method.value}: {_percent(r.project_power)}" + (f" (limit {_percent(r.limit)})" if r.limit is not None else "")
            for r in results
        ],
        lambda: pd.DataFrame(
            [r.model_dump(mode="json", exclude={"limit"} if not args.limit else set()) for r in results]
        ),
    )
    return EXIT_OK


def cmd_samplesize(args: argparse.Namespace) -> int:
    method = args.method[-1] if args.method else Method.EDGINGTON
    weights = _weights(args) if method == Method.EDGINGTON_WEIGHTED else None
    power_type = PowerType.PREDICTIVE if args.predictive else PowerType.CONDITIONAL

    if args.ratio_curve:
        po_min, po_max, steps = args.ratio_curve
        if not (0.0 < po_min <= po_max < 1.0) or steps < 1 or not float(steps).is_integer():
            raise UsageError(f"Invalid --ratio-curve grid: {po_min} {po_max} {steps}")
        pos = np.geomspace(po_min, po_max, int(steps))
        frame = sample_size_ratio_curve(
            pos,
            methods=args.method or (Method.EDGINGTON, Method.EDGINGTON_WEIGHTED),
            target_powers=(args.power,),
            power_types=(power_type,),
            alpha=args.alpha,
            weights=_weights(args),
            workers=args.workers,
        )
        _emit(
            args,
            frame.to_dict(orient="records"),
            lambda: [f"{row.method} po={row.po:.3g}: ratio {row.ratio:.4f}" for row in frame.itertuples()],
            lambda: frame,
        )
        return EXIT_OK

    if args.po is None:
        raise UsageError("samplesize needs --po unless --ratio-curve is given")
    inp = DesignInput(
        po=args.po,
        alpha=args.alpha,
        target_power=args.power,
        method=method,
        weights=weights,
        power_type=power_type,
        theta_hat_o=args.theta,
        tau=args.tau,
        no=args.no,
        shrinkage=args.shrinkage,
    )
    result = get_replication_service().sample_size(inp)

    def text() -> List[str]:
        lines = [
            f"method: {result.method.value} ({result.power_type.value} power)",
            f"replication level: {result.adjusted_level:.6g}",
            f"relative sample size c: {result.relative_sample_size:.4f}",
            f"ratio to two-trials rule: {result.sample_size_ratio:.4f}",
        ]
        if result.absolute_sample_size is not None:
            lines.append(f"replication size per group: {result.absolute_sample_size}")
        if result.replication_size_from_no is not None:
            lines.append(f"replication size from no: {result.replication_size_from_no}")
        return lines

    _emit(args, result, text, lambda: pd.DataFrame([result.model_dump(mode="json")]))
    return EXIT_OK


def cmd_sequential(args: argparse.Namespace) -> int:
    if args.action == "assess":
        result = assess_three(args.po, args.pr1, args.pr2, args.alpha)
        _emit(
            args,
            {"e3": args.po + args.pr1 + args.pr2, "p": result.p_combined, "level": result.overall_level, "success": result.success},
            lambda: [f"E3 = {args.po + args.pr1 + args.pr2:.6g}: p = {result.p_combined:.6g} ({'success' if result.success else 'no success'})"],
            lambda: pd.DataFrame([{"e3": args.po + args.pr1 + args.pr2, "p": result.p_combined, "success": result.success}]),
        )
        return EXIT_OK

    service = get_replication_service()
    plan = service.sequential_plan(args.alpha, args.gamma)

    if args.action == "plan":
        if args.curve:
            frame = spending_curve(args.alpha, np.linspace(0.0, 1.0, args.curve))
            _emit(
                args,
                frame.to_dict(orient="records"),
                lambda: [f"gamma={row.gamma:.3f}: b2={row.b2:.4f} b3={row.b3:.4f}" for row in frame.itertuples()],
                lambda: frame,
            )
        else:
            _emit(
                args,
                {"alpha": plan.alpha, "gamma": plan.gamma, "b2": plan.b2, "b3": plan.b3},
                lambda: [f"b2 = {plan.b2:.4f}", f"b3 = {plan.b3:.4f}"],
                lambda: pd.DataFrame([{"gamma": plan.gamma, "b2": plan.b2, "b3": plan.b3}]),
            )
        return EXIT_OK

    decision = service.sequential_decide(args.e2, args.alpha, args.gamma)
    payload: Dict[str, Any] = {"verdict": decision.verdict, "next_level": decision.next_level}
    if args.pr2 is not None:
        payload["final_verdict"] = final_decision(args.e2, args.pr2, plan)

    def text() -> List[str]:
        lines = [f"verdict: {decision.verdict.value}"]
        if decision.next_level is not None:
            lines.append(f"second replication level: {decision.next_level:.6g}")
        if "final_verdict" in payload:
            lines.append(f"final verdict: {payload['final_verdict'].value}")
        return lines

    _emit(args, payload, text, lambda: pd.DataFrame([_round_sig(payload)]))
    return EXIT_OK


def cmd_analyze(args: argparse.Namespace) -> int:
    report = ingest_csv(args.input, strict=True)
    records = filter_projects(report.records, args.projects)
    rows = get_replication_service().analyze(records, alpha=args.alpha)
    if args.out_dir:
        for path in write_report(rows, args.out_dir):
            logger.info(f"Wrote {path}")

    level = args.alpha * args.alpha
    rates = success_rates(rows, [level])
    summary = summary_statistics(rows)

    def text() -> List[str]:
        lines = [f"{summary['n_pairs']} study pairs"]
        for project in rates["project"].unique():
            sub = rates[rates["project"] == project]
            parts = [f"{row.method} {row.rate_percent:.1f}%" for row in sub.itertuples()]
            lines.append(f"{project}: " + ", ".join(parts))
        lines.append(f"pairs with po < 1e-6: {summary['n_po_below_1e-6']}")
        lines.append(f"discordant pairs (edgington vs two-trials): {summary['n_discordant_edgington_two_trials']}")
        return lines

    _emit(args, {"summary": summary, "success_rates": rates.to_dict(orient="records")}, text, lambda: rates)
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = load_sim_config(args.spec, seed=args.seed, n_sim=args.nsim, default_seed=get_settings().seed)
    result = get_replication_service().simulate(cfg, workers=args.workers)
    _emit(
        args,
        {"rate": result.rate, "se": result.se, "n_sim": result.n_sim, "successes": result.successes, "seed": cfg.seed},
        lambda: [f"rate = {result.rate:.6g} (se {result.se:.2g}, n = {result.n_sim})"],
        lambda: pd.DataFrame([result.model_dump()]),
    )
    return EXIT_OK


# Parser

def _add_method(parser: argparse.ArgumentParser, help_text: str) -> None:
    parser.add_argument(
        "--method",
        action="append",
        type=Method,
        choices=list(Method),
        metavar="{" + "|".join(m.value for m in Method) + "}",
        help=help_text,
    )


def _add_weights(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--wo", type=float, help="weight of the original study (default 1)")
    parser.add_argument("--wr", type=float, help="weight of the replication study (default 2)")


def build_parser() -> ArgumentParser:
    settings = get_settings()

    common = ArgumentParser(add_help=False)
    common.add_argument("--output", choices=["json", "text", "csv"], default="json", help="output format")
    common.add_argument("--workers", type=int, default=settings.workers, help="worker threads for grids and simulations")
    common.add_argument("--config", help="key=value file with flag defaults")
    common.add_argument("-v", "--verbose", action="count", default=0, help="log progress to standard error")
    common.add_argument("--alpha", type=float, default=0.025, help="one-sided significance level")

    parser = ArgumentParser(prog="replisum", description="Replication success assessment")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)

    p = sub.add_parser("combine", parents=[common], help="combined p-values")
    p.add_argument("--po", type=float, required=True)
    p.add_argument("--pr", type=float, required=True)
    p.add_argument("--c", type=float, help="variance ratio (needed for meta)")
    _add_method(p, "method(s); default every method whose inputs are given")
    _add_weights(p)
    p.set_defaults(handler=cmd_combine)

    p = sub.add_parser("level", parents=[common], help="replication significance levels")
    p.add_argument("--po", type=float, required=True)
    p.add_argument("--c", type=float, help="variance ratio (needed for meta)")
    _add_method(p, "method(s)")
    _add_weights(p)
    p.set_defaults(handler=cmd_level)

    p = sub.add_parser("power", parents=[common], help="project power")
    p.add_argument("--original-power", type=float, required=True)
    p.add_argument("--c", type=float, default=1.0, help="relative sample size n_r / n_o")
    p.add_argument("--d", type=float, default=1.0, help="effect ratio theta_r / theta_o")
    p.add_argument("--curve", type=float, nargs=3, metavar=("CMIN", "CMAX", "STEPS"), help="evaluate over a c grid")
    p.add_argument("--limit", action="store_true", help="also report the limit for c to infinity")
    _add_method(p, "method(s); default all")
    _add_weights(p)
    p.set_defaults(handler=cmd_power)

    p = sub.add_parser("samplesize", parents=[common], help="replication sample size")
    p.add_argument("--po", type=float)
    p.add_argument("--power", type=float, default=0.8, help="target power")
    p.add_argument("--predictive", action="store_true", help="use predictive instead of conditional power")
    p.add_argument("--theta", type=float, help="original effect estimate")
    p.add_argument("--tau", type=float, help="common standard deviation")
    p.add_argument("--no", type=int, help="original sample size per group")
    p.add_argument("--shrinkage", type=float, default=0.0, help="fractional reduction of the original effect")
    p.add_argument("--ratio-curve", type=float, nargs=3, metavar=("POMIN", "POMAX", "STEPS"),
                   help="sample size ratio over a log-spaced po grid")
    _add_method(p, "two-trials, edgington (default) or edgington-weighted")
    _add_weights(p)
    p.set_defaults(handler=cmd_samplesize)

    p = sub.add_parser("sequential", help="two sequential replications")
    actions = p.add_subparsers(dest="action", required=True, parser_class=ArgumentParser)
    a = actions.add_parser("plan", parents=[common], help="budgets b2 and b3")
    a.add_argument("--gamma", type=float, default=0.5, help="share of alpha^2 spent after the first replication")
    a.add_argument("--curve", type=int, metavar="STEPS", help="budgets over an evenly spaced gamma grid")
    a.set_defaults(handler=cmd_sequential)
    a = actions.add_parser("decide", parents=[common], help="decision after the first replication")
    a.add_argument("--e2", type=float, required=True, help="po + pr1")
    a.add_argument("--gamma", type=float, default=0.5)
    a.add_argument("--pr2", type=float, help="second replication p-value, for the final verdict")
    a.set_defaults(handler=cmd_sequential)
    a = actions.add_parser("assess", parents=[common], help="Edgington's method for three studies")
    a.add_argument("--po", type=float, required=True)
    a.add_argument("--pr1", type=float, required=True)
    a.add_argument("--pr2", type=float, required=True)
    a.set_defaults(handler=cmd_sequential, gamma=None)

    p = sub.add_parser("analyze", parents=[common], help="analyze a replication-project dataset")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--projects", nargs="+", help="restrict to these projects")
    p.add_argument("--out-dir", type=Path, help="write CSV/JSON tables here")
    p.set_defaults(handler=cmd_analyze)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo success rate")
    p.add_argument("--spec", type=Path, required=True, help="JSON simulation config")
    p.add_argument("--seed", type=int, help="seed (default: file, then REPLISUM_SEED)")
    p.add_argument("--nsim", type=int, help="number of draws")
    p.set_defaults(handler=cmd_simulate)

    return parser


# Configuration file

def _given_options(argv: Sequence[str]) -> set:
    return {token.split("=", 1)[0] for token in argv if token.startswith("--")}


def _config_tokens(entries: Dict[str, str], given: set) -> List[str]:
    """Turn key=value entries into flag tokens, skipping flags given on the command line."""
    tokens: List[str] = []
    for key, value in entries.items():
        if key == "config":
            continue
        option = "--" + key.replace("_", "-")
        if option in given:
            continue
        lowered = value.lower()
        if key in ("predictive", "limit"):
            if lowered in TRUE_VALUES:
                tokens.append(option)
            continue
        if key == "verbose":
            tokens.extend([option] * (int(value) if value.isdigit() else int(lowered in TRUE_VALUES)))
            continue
        if key == "method":
            for method in value.split(","):
                tokens.extend([option, method.strip()])
            continue
        tokens.append(option)
        tokens.extend(value.replace(",", " ").split())
    return tokens


def _apply_config(argv: List[str]) -> List[str]:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return argv

    entries = read_config_file(known.config)
    tokens = _config_tokens(entries, _given_options(argv))

    # insert after the (sub)command so the entries reach the right parser
    position = next((i for i, token in enumerate(argv) if token in COMMANDS), None)
    if position is None:
        return argv
    if argv[position] == "sequential" and position + 1 < len(argv) and argv[position + 1] in SEQUENTIAL_ACTIONS:
        position += 1
    return argv[: position + 1] + tokens + argv[position + 1:]


def _configure_logging(verbose: int) -> None:
    level = os.getenv("REPLISUM_LOG_LEVEL", "WARNING").upper()
    if verbose == 1:
        level = "INFO"
    elif verbose > 1:
        level = "DEBUG"
    logging.basicConfig(stream=sys.stderr, level=level, format="%(levelname)s %(name)s: %(message)s", force=True)


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parse `argv`, run the command and return the exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(_apply_config(argv))
        _configure_logging(args.verbose)
        if args.workers < 1:
            raise UsageError(f"--workers must be at least 1, got {args.workers}")
        return args.handler(args)
    except DataError as e:
        sys.stderr.write(f"error: {e}\n")
        for line, message in e.rows:
            sys.stderr.write(f"  line {line}: {message}\n")
        return EXIT_DATA
    except NumericalError as e:
        sys.stderr.write(f"error: {e}\n")
        for key, value in e.diagnostics.items():
            sys.stderr.write(f"  {key}: {value}\n")
        return EXIT_NUMERICAL
    except ValidationError as e:
        sys.stderr.write(f"error: invalid input: {e}\n")
        return EXIT_USAGE
    except ReplisumError as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_USAGE
    except SystemExit as e:
        # --help
        return int(e.code or 0)


def main() -> None:
    sys.exit(run())
