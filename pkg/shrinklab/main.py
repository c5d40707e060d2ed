import logging
import os
import sys

from argparse import ArgumentParser
from typing import List, Optional

# Allows us to not set the Python path
sys.path.append(os.getcwd())

from shrinklab.client import LabConfig, ShrinkLab
from shrinklab.constants import DATA_FILE_PATH, INSTANCE_SIZE_CAP, LP_SIZE_CAP, ORACLE_NODE_BUDGET
from shrinklab.cogs.models.exceptions import ConfigurationError, UsageError

def load_env_from_file(path: str) -> None:
    if not os.path.exists(path):
        raise UsageError(f"env file {path} does not exist", "envfile")
    with open(path, encoding="utf-8") as f:
        for line in f.readlines():
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            if "=" not in line:
                raise ConfigurationError(f"line '{line.strip()}' is not KEY=value", "envfile")
            key, value = line.split("=", 1)
            os.environ[key.strip()] = value.strip()

def _positive_int(name: str, default: int) -> int:
    raw = os.environ.get(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        raise ConfigurationError(f"{raw} is not an integer", name)
    if value < 1:
        raise ConfigurationError(f"{value} must be positive", name)
    return value

def config_from_env() -> LabConfig:
    level_name = os.environ.get("SHRINKLAB_LOG_LEVEL", "INFO").upper()
    level = logging.getLevelName(level_name)
    if not isinstance(level, int):
        raise ConfigurationError(f"unknown log level {level_name}", "SHRINKLAB_LOG_LEVEL")

    return LabConfig(
        log_level=level,
        size_cap=_positive_int("SHRINKLAB_SIZE_CAP", INSTANCE_SIZE_CAP),
        lp_cap=_positive_int("SHRINKLAB_LP_CAP", LP_SIZE_CAP),
        oracle_nodes=_positive_int("SHRINKLAB_ORACLE_NODES", ORACLE_NODE_BUDGET),
        workers=_positive_int("SHRINKLAB_WORKERS", 1),
        data_path=os.environ.get("SHRINKLAB_DATA_PATH", DATA_FILE_PATH)
    )

def main(argv: Optional[List[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)

    # Only the env file is needed before the client exists
    arg_parser = ArgumentParser(add_help=False)
    arg_parser.add_argument("-e", "--envfile")
    args, _ = arg_parser.parse_known_args(argv)
    try:
        if args.envfile:
            load_env_from_file(args.envfile)
        config = config_from_env()
    except UsageError as e:
        print(f"error: {e.diagnostic}", file=sys.stderr)
        return 2

    lab = ShrinkLab(config)
    return lab.run(argv)

def run() -> None:
    sys.stdout.reconfigure(encoding="utf-8", line_buffering=True)  # type: ignore[attr-defined]
    try:
        sys.exit(main())
    except KeyboardInterrupt:
        sys.exit(130)

if __name__ == "__main__":
    run()
