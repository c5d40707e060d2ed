import logging

ROOT_LOGGER = 'ShrinkLab'
LOG_FORMAT = '[%(asctime)s %(name)s:%(levelname)s]: %(message)s'
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"

def get_logger(name: str) -> logging.Logger:
    """Returns a child logger of the ShrinkLab logger, such as ShrinkLab.simplex."""
    return logging.getLogger(f"{ROOT_LOGGER}.{name}")

def setup_root_logger(logging_level: int = logging.WARNING) -> logging.Logger:
    """Sets up the ShrinkLab logger with a single stream handler."""
    logger = logging.getLogger(ROOT_LOGGER)
    logger.setLevel(logging_level)
    if not logger.handlers:
        ch = logging.StreamHandler()
        ch.setFormatter(logging.Formatter(LOG_FORMAT, DATE_FORMAT))
        logger.addHandler(ch)
    return logger
