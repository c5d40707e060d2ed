from __future__ import annotations

import csv
import sys

from argparse import ArgumentParser, Namespace
from typing import TYPE_CHECKING

from shrinklab.constants import K_DEFAULT, Z_DEFAULT
from shrinklab.auction.analysis import gap_sweep, lemma_identities
from shrinklab.auction.distributions import build_hard_instance
from shrinklab.auction.mechanisms import explicit_full_mechanism
from shrinklab.auction.montecarlo import monte_carlo_revenue
from shrinklab.client import Command
from shrinklab.cogs.ext.commands.instance import add_instance_flags
from shrinklab.cogs.ext.error_handler import EXIT_OK, EXIT_VALIDATION
from shrinklab.cogs.models.distributions import BalancedSpec
from shrinklab.cogs.models.reports import RngSeed
from shrinklab.cogs.utils.data import load_instance, load_mechanism, sweep_rows, write_sweep_csv
from shrinklab.cogs.utils.parsers import parse_float_list, parse_int_list, parse_scalar

if TYPE_CHECKING:
    from shrinklab.client import ShrinkLab


class AnalysisCommands:
    """This class implements the sweep, lemmas and montecarlo verbs."""

    def __init__(self, client: ShrinkLab):
        self.client = client

    def configure_sweep(self, parser: ArgumentParser) -> None:
        parser.add_argument("--d", required=True, help="'8,64,1024' or a range '4..128'")
        parser.add_argument("--eps", required=True, help="comma separated epsilons")
        parser.add_argument("--z", default=repr(Z_DEFAULT))
        parser.add_argument("--csv", help="output CSV path; rows go to stdout without it")
        parser.add_argument("--lp-cross-check", dest="lp_cross_check", action="store_true",
                            help="also solve both LPs on a truncated instance per row")
        parser.add_argument("--n", type=int, default=3)
        parser.add_argument("--K", type=int, default=K_DEFAULT)

    def sweep(self, args: Namespace) -> int:
        config = self.client.config
        reports = gap_sweep(
            parse_int_list(args.d, "d"), parse_float_list(args.eps, "eps"), parse_scalar(args.z),
            lp_cross_check=args.lp_cross_check, n=args.n, K=args.K, workers=config.workers,
            size_cap=config.size_cap, lp_cap=config.lp_cap
        )
        if args.csv:
            write_sweep_csv(args.csv, reports)
            print(f"wrote {len(reports)} rows to {args.csv}")
        else:
            csv.writer(sys.stdout, lineterminator="\n").writerows(sweep_rows(reports))
        if args.lp_cross_check:
            for r in reports:
                print(
                    f"d={r.d} eps={r.epsilon} lp_shrunk={r.lp_rev_shrunk!r} lp_full={r.lp_rev_full!r} "
                    f"lp_lookahead={r.lp_rev_lookahead!r} lp_ratio={r.lp_ratio!r} trunc_error={r.trunc_error:.4g}"
                )
        return EXIT_OK

    def configure_lemmas(self, parser: ArgumentParser) -> None:
        parser.add_argument("--d", required=True, help="'4..128' or '8,64'")
        parser.add_argument("--z", default=repr(Z_DEFAULT), help="'p/q' checks the identities exactly")

    def lemmas(self, args: Namespace) -> int:
        z = parse_scalar(args.z)
        failed = 0
        for d in parse_int_list(args.d, "d"):
            for check in lemma_identities(d, z):
                status = "pass" if check.passed else "FAIL"
                failed += not check.passed
                print(f"d={check.d} item={check.item} {status} worst_error={check.worst_error:.3g} {check.description}")
        return EXIT_OK if failed == 0 else EXIT_VALIDATION

    def configure_montecarlo(self, parser: ArgumentParser) -> None:
        add_instance_flags(parser)
        parser.add_argument("--instance", help="instance JSON path; built from the flags without it")
        parser.add_argument("--mech", help="mechanism JSON path; the explicit full mechanism without it")
        parser.add_argument("--samples", type=int, default=1_000_000)
        parser.add_argument("--seed", type=int, default=0)

    def montecarlo(self, args: Namespace) -> int:
        if args.instance:
            inst = load_instance(args.instance)
        else:
            spec = BalancedSpec(args.eps, args.d, args.K)
            inst = build_hard_instance(args.n, spec, parse_scalar(args.z), self.client.config.size_cap)
        mech = load_mechanism(args.mech) if args.mech else explicit_full_mechanism(inst)
        result = monte_carlo_revenue(mech, inst, args.samples, RngSeed(args.seed))
        print(f"estimate {result.estimate!r} std_error {result.std_error!r} samples {result.samples}")
        return EXIT_OK


def setup(client: ShrinkLab):
    commands = AnalysisCommands(client)
    client.add_command(Command("sweep", "sweep the revenue gap over d and epsilon", commands.configure_sweep, commands.sweep))
    client.add_command(Command("lemmas", "check the equal-revenue identities", commands.configure_lemmas, commands.lemmas))
    client.add_command(Command("montecarlo", "estimate revenue by sampling", commands.configure_montecarlo, commands.montecarlo))
