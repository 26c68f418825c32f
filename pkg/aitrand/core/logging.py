import logging
import sys

_FORMAT = "%(asctime)s | %(levelname)s | %(message)s"


def setup_logging(level: str | int = "INFO"):
    # stdout is reserved for JSON records emitted by the CLI
    logging.basicConfig(
        level=level,
        format=_FORMAT,
        handlers=[logging.StreamHandler(sys.stderr)],
        force=True,
    )


def get_logger(name: str):
    return logging.getLogger(name)
