from __future__ import annotations

import json
import os

from argparse import ArgumentParser, Namespace
from typing import TYPE_CHECKING

from shrinklab.constants import K_DEFAULT, Z_DEFAULT
from shrinklab.auction.distributions import build_hard_instance, is_valid_family
from shrinklab.auction.mechanisms import (
    expected_revenue, explicit_full_mechanism, explicit_shrunken_mechanism, validate_mechanism
)
from shrinklab.client import Command
from shrinklab.cogs.ext.error_handler import EXIT_OK, EXIT_VALIDATION
from shrinklab.cogs.models.distributions import BalancedSpec
from shrinklab.cogs.utils.data import load_instance, load_mechanism, save_instance, save_mechanism
from shrinklab.cogs.utils.getters import get_mechanism_market
from shrinklab.cogs.utils.parsers import parse_scalar

if TYPE_CHECKING:
    from shrinklab.client import ShrinkLab

def add_instance_flags(parser: ArgumentParser) -> None:
    """Declares the flags that describe a hard instance."""
    parser.add_argument("--n", type=int, default=3, help="number of bidders, weak bidder included")
    parser.add_argument("--d", type=int, default=8, help="block length of the balanced law")
    parser.add_argument("--eps", type=float, default=0.01, help="block decay epsilon")
    parser.add_argument("--K", type=int, default=K_DEFAULT, help="number of retained blocks")
    parser.add_argument("--z", default=repr(Z_DEFAULT), help="revenue level; 'p/q' is kept exact")


class InstanceCommands:
    """This class implements the build, validate and revenue verbs."""

    def __init__(self, client: ShrinkLab):
        self.client = client

    def configure_build(self, parser: ArgumentParser) -> None:
        add_instance_flags(parser)
        parser.add_argument("--out", help="instance JSON path")
        parser.add_argument("--explicit", choices=("shrunken", "full"), help="also write an explicit mechanism")
        parser.add_argument("--mech-out", dest="mech_out", help="path of the explicit mechanism")

    def build(self, args: Namespace) -> int:
        spec = BalancedSpec(args.eps, args.d, args.K)
        inst = build_hard_instance(args.n, spec, parse_scalar(args.z), self.client.config.size_cap)
        out = args.out or os.path.join(self.client.config.data_path, "instance.json")
        save_instance(out, inst)
        print(
            f"wrote {out}: n={inst.n} d={spec.d} m={inst.family.m} profiles={len(inst.joint_n.pmf)} "
            f"trunc_error={inst.trunc_error:.6g}"
        )
        if args.explicit:
            mech = explicit_full_mechanism(inst) if args.explicit == "full" else explicit_shrunken_mechanism(inst)
            mech_out = args.mech_out or os.path.join(self.client.config.data_path, f"explicit_{args.explicit}.json")
            save_mechanism(mech_out, mech)
            print(f"wrote {mech_out}")
        return EXIT_OK

    def configure_validate(self, parser: ArgumentParser) -> None:
        parser.add_argument("--instance", required=True, help="instance JSON path")
        parser.add_argument("--mech", help="mechanism JSON path; without it the instance itself is checked")
        parser.add_argument("--market", choices=("full", "shrunk"), help="market of the mechanism")

    def validate(self, args: Namespace) -> int:
        inst = load_instance(args.instance)
        if args.mech is None:
            ok = is_valid_family(inst.family) and inst.is_weak_bidder_dominated()
            print(json.dumps({"valid_family": is_valid_family(inst.family), "weak_dominated": inst.is_weak_bidder_dominated()}))
            return EXIT_OK if ok else EXIT_VALIDATION
        mech = load_mechanism(args.mech)
        _, dist = get_mechanism_market(inst, mech, args.market)
        report = validate_mechanism(mech, dist)
        print(json.dumps(report.to_dict()))
        return EXIT_OK if report.ok else EXIT_VALIDATION

    def configure_revenue(self, parser: ArgumentParser) -> None:
        parser.add_argument("--instance", required=True, help="instance JSON path")
        parser.add_argument("--mech", required=True, help="mechanism JSON path")
        parser.add_argument("--market", choices=("full", "shrunk"), help="market of the mechanism")

    def revenue(self, args: Namespace) -> int:
        inst = load_instance(args.instance)
        mech = load_mechanism(args.mech)
        market, dist = get_mechanism_market(inst, mech, args.market)
        print(f"{market} revenue {expected_revenue(mech, dist)!r}")
        return EXIT_OK


def setup(client: ShrinkLab):
    commands = InstanceCommands(client)
    client.add_command(Command("build", "build a hard instance", commands.configure_build, commands.build))
    client.add_command(Command("validate", "check a mechanism's axioms", commands.configure_validate, commands.validate))
    client.add_command(Command("revenue", "expected revenue of a mechanism", commands.configure_revenue, commands.revenue))
