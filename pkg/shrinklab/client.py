from __future__ import annotations

import importlib
import logging

from argparse import ArgumentParser, Namespace
from typing import Callable, Dict, List, Literal, NamedTuple, Optional, Sequence

from shrinklab.cogs.ext.error_handler import ErrorHandler
from shrinklab.cogs.models.exceptions import UsageError
from shrinklab.cogs.utils.logger import setup_root_logger

class VersionInfo(NamedTuple):
    major: int
    minor: int
    micro: int
    releaselevel: Literal["alpha", "beta", "candidate", "final"]
    commit_id: str


__VERSION__ = VersionInfo(major=1, minor=0, micro=0, releaselevel='final', commit_id="unknown")


class LabConfig(NamedTuple):
    log_level: int = logging.INFO
    size_cap: int = 20000
    lp_cap: int = 1200
    oracle_nodes: int = 2_000_000
    workers: int = 1
    data_path: str = "data"


class Command(NamedTuple):
    """A command line verb: how to declare its flags and what to run."""
    name: str
    help: str
    configure: Callable[[ArgumentParser], None]
    callback: Callable[[Namespace], int]


class LabArgumentParser(ArgumentParser):
    """Argument parser that raises UsageError instead of exiting."""

    def error(self, message: str):
        raise UsageError(message, "arguments")


class ShrinkLab:
    """This class represents the ShrinkLab command line client."""

    def __init__(self, config: Optional[LabConfig] = None):
        # This defines the command modules, each exposing setup(client)
        self.extensions_to_load = [
            'shrinklab.cogs.ext.commands.instance',
            'shrinklab.cogs.ext.commands.optimal',
            'shrinklab.cogs.ext.commands.transform',
            'shrinklab.cogs.ext.commands.analysis',
        ]

        self.client_version = __VERSION__
        self.config = config or LabConfig()
        self.commands: Dict[str, Command] = {}

        self.setup_logging(self.config.log_level)
        self.error_handler = ErrorHandler(self)
        self.load_all_extensions()

    @property
    def version(self) -> str:
        """Returns the client version as a string."""
        return f"{self.client_version.major}.{self.client_version.minor}.{self.client_version.micro}"

    def setup_logging(self, logging_level: int = logging.WARNING):
        """Sets up client logging module."""
        self.logger = setup_root_logger(logging_level)

    def add_command(self, command: Command) -> None:
        """Registers a verb."""
        if command.name in self.commands:
            raise ValueError(f"command {command.name} is already registered")
        self.commands[command.name] = command

    def load_all_extensions(self):
        """Attempts to load all extensions as defined in client object."""
        for ext in self.extensions_to_load:
            self.logger.debug(f"Loading {ext}.")
            importlib.import_module(ext).setup(self)
            self.logger.debug(f"Successfully loaded {ext}.")

    def build_parser(self) -> ArgumentParser:
        """Returns the argument parser with one sub-parser per registered verb."""
        parser = LabArgumentParser(prog="shrinklab", description="Market-shrinkage auction laboratory.")
        parser.add_argument("-e", "--envfile", help="specifies .env file to load environment from")
        parser.add_argument("-v", "--verbose", action="store_true", help="log debug output")
        parser.add_argument("--version", action="version", version=f"%(prog)s {self.version}")
        verbs = parser.add_subparsers(dest="verb", metavar="verb")
        for command in self.commands.values():
            sub = verbs.add_parser(command.name, help=command.help)
            command.configure(sub)
            sub.set_defaults(callback=command.callback)
        return parser

    def run(self, argv: Optional[Sequence[str]] = None) -> int:
        """Parses arguments, runs one verb and returns its exit status."""
        try:
            args = self.build_parser().parse_args(argv)
            if args.verbose:
                self.logger.setLevel(logging.DEBUG)
            if args.verb is None:
                raise UsageError("a verb is required", "verb")
            return args.callback(args)
        except Exception as e:
            return self.error_handler.handle(e)

    @property
    def verbs(self) -> List[str]:
        return list(self.commands)
