from __future__ import annotations

from argparse import ArgumentParser, Namespace
from typing import TYPE_CHECKING

from shrinklab.auction.mechanisms import expected_revenue, validate_mechanism
from shrinklab.auction.transforms import high_priced_transform, shift_report
from shrinklab.client import Command
from shrinklab.cogs.ext.error_handler import EXIT_OK, EXIT_VALIDATION
from shrinklab.cogs.utils.data import load_instance, load_mechanism, save_mechanism
from shrinklab.cogs.utils.getters import get_mechanism_market

if TYPE_CHECKING:
    from shrinklab.client import ShrinkLab


class TransformCommands:
    """This class implements the transform verb."""

    def __init__(self, client: ShrinkLab):
        self.client = client

    def configure_transform(self, parser: ArgumentParser) -> None:
        parser.add_argument("--instance", required=True, help="instance JSON path")
        parser.add_argument("--mech", required=True, help="mechanism over the shrunken market")
        parser.add_argument("--kind", choices=("high-priced", "shift"), required=True)
        parser.add_argument("--out", required=True, help="output mechanism JSON path")

    def transform(self, args: Namespace) -> int:
        inst = load_instance(args.instance)
        mech = load_mechanism(args.mech)
        _, dist = get_mechanism_market(inst, mech, "shrunk")
        before = expected_revenue(mech, dist)
        if args.kind == "high-priced":
            output = high_priced_transform(mech, inst)
            summary = ""
        else:
            report = shift_report(mech, inst)
            output = report.mechanism
            summary = (
                f" fixes {report.fix_count} blocked {len(report.blocked)} residual {report.residual:.3g}"
                f" stray {report.stray:.3g}"
            )
        after = expected_revenue(output, dist)
        save_mechanism(args.out, output)
        print(f"{args.kind} revenue {before!r} -> {after!r}{summary}")
        print(f"wrote {args.out}")
        return EXIT_OK if validate_mechanism(output, dist).ok else EXIT_VALIDATION


def setup(client: ShrinkLab):
    commands = TransformCommands(client)
    client.add_command(Command("transform", "apply a mechanism transformation", commands.configure_transform, commands.transform))
