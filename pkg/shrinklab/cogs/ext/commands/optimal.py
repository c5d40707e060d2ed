from __future__ import annotations

from argparse import ArgumentParser, Namespace
from typing import TYPE_CHECKING

from shrinklab.auction.optimal import IC_PAIR_MODES, brute_force_oracle, solve_optimal_mechanism
from shrinklab.client import Command
from shrinklab.cogs.ext.error_handler import EXIT_OK, EXIT_VALIDATION
from shrinklab.cogs.utils.data import load_instance, save_mechanism
from shrinklab.cogs.utils.getters import get_market
from shrinklab.cogs.utils.parsers import parse_winners

if TYPE_CHECKING:
    from shrinklab.client import ShrinkLab


class OptimalCommands:
    """This class implements the lp verb."""

    def __init__(self, client: ShrinkLab):
        self.client = client

    def configure_lp(self, parser: ArgumentParser) -> None:
        parser.add_argument("--instance", required=True, help="instance JSON path")
        parser.add_argument("--winners", default="all", help="'all' or 'top:K'")
        parser.add_argument("--market", choices=("full", "shrunk"), default="full", help="market to optimize over")
        parser.add_argument("--ic-pairs", dest="ic_pairs", choices=IC_PAIR_MODES, default="threshold",
                            help="threshold: allocation-only program; adjacent or all: explicit payment columns")
        parser.add_argument("--out", help="write the completed optimal mechanism here")
        parser.add_argument("--oracle", action="store_true", help="also run the deterministic brute-force search")

    def lp(self, args: Namespace) -> int:
        restriction = parse_winners(args.winners)
        dist = get_market(load_instance(args.instance), args.market)
        mech, solution = solve_optimal_mechanism(dist, restriction, args.ic_pairs, self.client.config.lp_cap)
        print(
            f"status {solution.status} optimum {solution.objective_value!r} winners {restriction} "
            f"pivots {solution.iterations} residual {solution.max_residual:.3g}"
        )
        if args.oracle:
            print(f"oracle {brute_force_oracle(dist, self.client.config.oracle_nodes)!r}")
        if solution.status != "optimal":
            return EXIT_VALIDATION
        if args.out:
            save_mechanism(args.out, mech)
            print(f"wrote {args.out}")
        return EXIT_OK


def setup(client: ShrinkLab):
    commands = OptimalCommands(client)
    client.add_command(Command("lp", "solve the optimal-revenue linear program", commands.configure_lp, commands.lp))
