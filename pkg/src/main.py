"""
Command-line entry point for the stochastic-order game toolkit.

Subcommands:
    compare <distA.json> <distB.json>
    solve <game.json> [--out r.json] [--csv d.csv]
    mgss <multigame.json> [--weights w1,...,wd] [--out r.json]
    report <game.json> --from r.json [--quantiles 0.05,0.95] [--out report.json]

Machine-readable results go to stdout as JSON; progress banners and logs go to stderr.
"""

import argparse
import json
import logging
import sys
import time
from typing import Any, Dict, List, Optional, Sequence

from .config_manager import ConfigManager
from .distributions import from_literal, truncate
from .exceptions import (
    DistributionError, GameFileError, IncomparablePayoffsError, InvalidConfigurationError,
    NotConvergedError, ParseError, StochOrderError
)
from .game import Game, SolveResult, ZeroSumSolver
from .game_parser import GameFileParser, GameSpec
from .mgss import MGSSResult, MultiGame, MultiGoalSolver
from .moments import moment_sequence
from .ordering import compare
from .risk_report import RiskReporter
from .utils import setup_logging

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INVALID_INPUT = 2
EXIT_NOT_CONVERGED = 3
EXIT_INCOMPARABLE = 4


def banner(message: str) -> None:
    print(message, file=sys.stderr)


def emit_json(data: Dict[str, Any]) -> None:
    print(json.dumps(data, indent=2))


def write_json(data: Dict[str, Any], path: str) -> None:
    with open(path, 'w', encoding='utf-8') as file:
        json.dump(data, file, indent=2)
    banner(f"   💾 Written: {path}")


def parse_float_list(text: str, name: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ParseError(f"--{name}", f"expected comma-separated numbers, got '{text}'")


def load_distribution(path: str):
    """Read one distribution literal from a JSON file."""
    try:
        with open(path, 'r', encoding='utf-8') as file:
            literal = json.load(file)
    except OSError as e:
        raise ParseError(path, f"cannot read file: {e}")
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}:{e.lineno}:{e.colno}", e.msg)
    try:
        return from_literal(literal)
    except DistributionError as e:
        raise ParseError(f"{path} at $", str(e))


def load_game(path: str, config_manager: ConfigManager) -> GameSpec:
    banner(f"📥 Loading game: {path}")
    spec = GameFileParser(config_manager.get_truncation_policy()).load(path)
    n, m = spec.game.shape
    goals = f", {spec.game.d} goals" if spec.is_multigoal else ""
    banner(f"   📊 {n}x{m} payoff matrix{goals}")
    return spec


def solver_overrides(spec: GameSpec, args: argparse.Namespace) -> Dict[str, Any]:
    overrides = dict(spec.solver)
    if args.criterion:
        overrides["criterion"] = args.criterion
    if args.threads:
        overrides["threads"] = args.threads
    return overrides


def run_compare(args: argparse.Namespace, config_manager: ConfigManager) -> int:
    d1 = load_distribution(args.first)
    d2 = load_distribution(args.second)
    cfg = config_manager.get_ordering_config()
    banner(f"⚖️  Comparing {d1!r} with {d2!r}")

    outcome = compare(d1, d2, cfg)
    policy = config_manager.get_truncation_policy()
    moments = []
    for d in (d1, d2):
        compact = d if d.is_compact else truncate(d, policy)
        moments.append(moment_sequence(compact, cfg.k_max).first(5))
    emit_json({**outcome.to_dict(), "first_moments": moments})
    banner(f"   ✅ {outcome.relation.value} ({outcome.decided_by.value})")
    return EXIT_OK


def run_solve(args: argparse.Namespace, config_manager: ConfigManager) -> int:
    spec = load_game(args.game, config_manager)
    if spec.is_multigoal:
        raise ParseError(f"{args.game} at $.goals", "multi-goal files are solved with the mgss subcommand")
    game: Game = spec.game
    solver = ZeroSumSolver(config_manager.get_solver_config(solver_overrides(spec, args)),
                           config_manager.get_ordering_config(spec.ordering))

    banner(f"🎯 Solving by fictitious play ({solver.config.criterion} criterion)")
    try:
        result = solver.solve(game)
    except NotConvergedError as e:
        emit_json(e.result.to_dict())
        raise
    emit_json(result.to_dict())
    status = "converged" if result.converged else "NOT converged"
    banner(f"   ✅ {status} after {result.iterations} iterations")

    if args.out:
        write_json(result.to_dict(), args.out)
    if args.csv:
        written = RiskReporter(config_manager).emit_plot_data(game, result, args.csv)
        banner(f"   📈 Plot data: {written}")
    return EXIT_OK if result.converged else EXIT_NOT_CONVERGED


def run_mgss(args: argparse.Namespace, config_manager: ConfigManager) -> int:
    spec = load_game(args.game, config_manager)
    mg = spec.game if spec.is_multigoal else MultiGame([spec.game])
    weights = parse_float_list(args.weights, "weights") if args.weights else spec.weights
    solver = MultiGoalSolver(config_manager.get_solver_config(solver_overrides(spec, args)),
                             config_manager.get_ordering_config(spec.ordering),
                             axiom_grid=args.axiom_grid)

    banner(f"🎯 Computing multi-goal security strategy for {mg.d} goals")
    try:
        result = solver.solve(mg, weights)
    except NotConvergedError as e:
        emit_json(e.result.to_dict())
        raise
    emit_json(result.to_dict())
    banner(f"   ✅ p* = {result.p_star.to_list()} after {result.iterations} iterations")
    if result.axiom_report is not None and not result.axiom_report.holds:
        banner("   ⚠️  Axiom check failed on the grid")

    if args.out:
        write_json(result.to_dict(), args.out)
    return EXIT_OK if result.converged else EXIT_NOT_CONVERGED


def run_report(args: argparse.Namespace, config_manager: ConfigManager) -> int:
    spec = load_game(args.game, config_manager)
    try:
        with open(args.result, 'r', encoding='utf-8') as file:
            data = json.load(file)
    except OSError as e:
        raise ParseError(args.result, f"cannot read file: {e}")
    except json.JSONDecodeError as e:
        raise ParseError(f"{args.result}:{e.lineno}:{e.colno}", e.msg)

    try:
        if spec.is_multigoal:
            result = MGSSResult.from_dict(data, spec.game)
        else:
            result = SolveResult.from_dict(data, spec.game)
    except (KeyError, TypeError, ValueError, StochOrderError) as e:
        raise ParseError(f"{args.result} at $", f"not a result for this game: {e}")

    quantiles = parse_float_list(args.quantiles, "quantiles")
    reporter = RiskReporter(config_manager, quantiles=quantiles)
    banner("📊 Compiling risk report")
    report = reporter.compile_report(spec.game, result)
    emit_json(report.to_dict())
    banner(reporter.create_summary_report(report))
    if args.out:
        banner(f"   💾 Written: {reporter.write_report_json(report, args.out)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stochorder",
        description="Security strategies and risk reports for games with loss-distribution payoffs",
    )
    parser.add_argument("--config", default="config/app_config.json", help="JSON configuration file")
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR")
    parser.add_argument("--threads", type=int, default=None, help="worker threads for cell moments")
    parser.add_argument("--criterion", choices=("moments", "expectation"), default=None,
                        help="best-response ranking used by the solvers")
    sub = parser.add_subparsers(dest="command", required=True)

    p_compare = sub.add_parser("compare", help="decide the preference between two distributions")
    p_compare.add_argument("first")
    p_compare.add_argument("second")

    p_solve = sub.add_parser("solve", help="security strategies of a zero-sum game")
    p_solve.add_argument("game")
    p_solve.add_argument("--out", help="write the result JSON here")
    p_solve.add_argument("--csv",
                         help="write x,density,cdf plot data of the assurance here (relative to the output directory)")

    p_mgss = sub.add_parser("mgss", help="multi-goal security strategy")
    p_mgss.add_argument("game")
    p_mgss.add_argument("--weights", help="comma-separated goal weights")
    p_mgss.add_argument("--axiom-grid", type=float, default=0.05, help="grid step of the axiom check")
    p_mgss.add_argument("--out", help="write the result JSON here")

    p_report = sub.add_parser("report", help="risk report from a solved game")
    p_report.add_argument("game")
    p_report.add_argument("--from", dest="result", required=True, help="result JSON of solve or mgss")
    p_report.add_argument("--quantiles", default="0.05,0.95", help="comma-separated probability levels")
    p_report.add_argument("--out", help="write the report JSON here (relative to the output directory)")
    return parser


COMMANDS = {
    "compare": run_compare,
    "solve": run_solve,
    "mgss": run_mgss,
    "report": run_report,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Main entry point.

    Returns:
        0 on success, 2 for invalid input or configuration, 3 when the solver did not
        converge, 4 for incomparable payoffs, 1 for anything else
    """
    args = build_parser().parse_args(argv)
    try:
        start = time.time()
        config_manager = ConfigManager(args.config)
        setup_logging(log_level=args.log_level or config_manager.get_log_level(),
                      log_file=config_manager.get_log_path())

        code = COMMANDS[args.command](args, config_manager)
        banner(f"⏱️  Completed in {time.time() - start:.2f} seconds")
        return code

    except (GameFileError, InvalidConfigurationError, DistributionError) as e:
        banner(f"❌ Invalid input: {e}")
        logging.error(f"Invalid input: {e}")
        return EXIT_INVALID_INPUT
    except NotConvergedError as e:
        banner(f"❌ {e}")
        return EXIT_NOT_CONVERGED
    except IncomparablePayoffsError as e:
        banner(f"❌ {e}")
        logging.error(f"Incomparable payoffs: {e}")
        return EXIT_INCOMPARABLE
    except KeyboardInterrupt:
        banner("\n⚠️  Processing interrupted by user")
        return EXIT_FAILURE
    except Exception as e:
        banner(f"❌ Error: {e}")
        banner("💡 Check log file for detailed error information")
        logging.error(f"Main execution failed: {e}", exc_info=True)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
