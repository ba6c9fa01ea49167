import logging
import os
import sys
from logging.handlers import TimedRotatingFileHandler
from typing import Optional

LOG_FILE = "atscalc.log"
LOG_FORMAT = "%(asctime)s [%(levelname)s] [%(name)s] %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"

# marks the handlers installed here so a second setup can find them
_OWNED = "_atscalc_handler"


def _owned(handler: logging.Handler) -> bool:
    return getattr(handler, _OWNED, False)


def setup_logger(log_folder: Optional[str] = None, level=logging.INFO, log_file: str = LOG_FILE) -> logging.Logger:
    """
    Console logging on stderr, plus a daily rotating file in ``log_folder``.

    The CLI calls this once before the scenario is read (console only) and
    again with the scenario's log folder; the file handler then follows
    the folder of the latest call.
    """
    root = logging.getLogger()
    root.setLevel(level)
    formatter = logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT)

    # Reports go to stdout, so the console handler writes to stderr
    if not any(_owned(h) and type(h) is logging.StreamHandler for h in root.handlers):
        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setFormatter(formatter)
        setattr(console_handler, _OWNED, True)
        root.addHandler(console_handler)

    if log_folder is None:
        return root

    log_path = os.path.abspath(os.path.join(log_folder, log_file))
    for handler in root.handlers[:]:
        if _owned(handler) and isinstance(handler, TimedRotatingFileHandler):
            if handler.baseFilename == log_path:
                return root
            root.removeHandler(handler)
            handler.close()

    os.makedirs(log_folder, exist_ok=True)
    # Rotates daily at midnight, keeps 7 days
    file_handler = TimedRotatingFileHandler(
        filename=log_path,
        when="midnight",
        interval=1,
        backupCount=7,
        encoding="utf-8"
    )
    file_handler.setFormatter(formatter)
    setattr(file_handler, _OWNED, True)
    root.addHandler(file_handler)
    return root


def log_file_path() -> Optional[str]:
    """Path of the current run log, None before a folder is configured."""
    for handler in logging.getLogger().handlers:
        if _owned(handler) and isinstance(handler, TimedRotatingFileHandler):
            return handler.baseFilename
    return None


def get_logger(name: str):
    return logging.getLogger(name)
