"""fp-spectra - determinant and permanent spectra of matrices over subsets of F_p."""

import sys
from pathlib import Path

from loguru import logger

__version__ = "0.1.0"

# worker processes inherit the sinks, so every record carries its pid
STDERR_FORMAT = (
    "<green>{time:HH:mm:ss.SSS}</green> | <level>{level: <8}</level> | "
    "<magenta>pid {process}</magenta> | "
    "<cyan>{name}</cyan>:<cyan>{function}</cyan>:<cyan>{line}</cyan> - <level>{message}</level>"
)
FILE_FORMAT = "{time:YYYY-MM-DD HH:mm:ss} | {level: <8} | pid {process} | {name}:{function}:{line} - {message}"


def add_file_sink(log_file: str | Path, level: str = "INFO", serialize: bool = False) -> int:
    """Append records to a rotating log file and return the loguru handler id.

    With serialize=True each record is one JSON object per line, which is what
    long scans are usually grepped with.
    """
    return logger.add(
        log_file,
        format=FILE_FORMAT,
        level=level,
        rotation="10 MB",
        retention="1 week",
        serialize=serialize,
    )


def configure_logging(
    log_file: str | Path | None = None, level: str = "INFO", serialize: bool = False
) -> None:
    """Replace all sinks with a colored stderr sink and an optional file sink.

    Example:
        >>> configure_logging(level="DEBUG")
        >>> configure_logging(log_file="scan.log", level="INFO", serialize=True)
    """
    logger.remove()
    logger.add(sys.stderr, format=STDERR_FORMAT, level=level, colorize=True)
    if log_file:
        add_file_sink(log_file, level, serialize)


def install_exception_hook() -> None:
    """Log uncaught exceptions with their traceback before the interpreter exits."""

    def exception_handler(exc_type, exc_value, exc_traceback):
        if issubclass(exc_type, KeyboardInterrupt):
            sys.__excepthook__(exc_type, exc_value, exc_traceback)
            return

        logger.opt(exception=(exc_type, exc_value, exc_traceback)).critical(
            f"Uncaught {exc_type.__name__}"
        )

    sys.excepthook = exception_handler


__all__ = ["__version__", "add_file_sink", "configure_logging", "install_exception_hook"]
