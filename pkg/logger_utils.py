"""
GB2D - Logging Utilities

Thread-safe logger implementation for sweeps whose repetitions run in worker
threads and for solver blocks dispatched to a thread pool.
"""

import logging
import sys
import threading
from typing import Optional

from constants import Defaults


# Third-party loggers that are too chatty at INFO
_QUIET_LOGGERS = ('cvxpy',)


class ThreadSafeLogger:
    """
    Thread-safe logger wrapper

    Serializes log calls across threads so that lines emitted by concurrent
    sweep repetitions are not interleaved.

    @example
    logger = ThreadSafeLogger(__name__)
    logger.info("Solving dual SDP...")
    """

    def __init__(self, name: str):
        """
        Initialize thread-safe logger

        @param name - Logger name (typically __name__ of module)
        """
        self._lock = threading.Lock()
        self._logger = logging.getLogger(name)

    def _log(self, level: int, message: str) -> None:
        if not self._logger.isEnabledFor(level):
            return
        with self._lock:
            self._logger.log(level, message)

    def debug(self, message: str) -> None:
        self._log(logging.DEBUG, message)

    def info(self, message: str) -> None:
        self._log(logging.INFO, message)

    def warning(self, message: str) -> None:
        self._log(logging.WARNING, message)

    def error(self, message: str) -> None:
        self._log(logging.ERROR, message)

    def exception(self, message: str, exc_info: bool = True) -> None:
        """
        Log an error with the active exception's traceback

        @param message - Message to log
        @param exc_info - Attach the traceback (default: True)
        """
        with self._lock:
            self._logger.error(message, exc_info=exc_info)

    def is_enabled_for(self, level: int) -> bool:
        """Check whether a level would be emitted (guards costly debug formatting)"""
        return self._logger.isEnabledFor(level)


def setup_logging(
    log_file: Optional[str] = Defaults.LOG_FILE,
    level: int = logging.INFO,
    include_thread_name: bool = True
) -> ThreadSafeLogger:
    """
    Configure root logging and return a thread-safe logger

    Log records go to the log file and to stderr; stdout is left to command
    output such as the certify report. Passing log_file=None keeps the
    console handler only.

    @param log_file - Path to log file (default: 'gb2d.log')
    @param level - Logging level (default: logging.INFO)
    @param include_thread_name - Include thread name in log format
    @returns Configured ThreadSafeLogger instance

    @example
    logger = setup_logging(log_file='sweep.log', level=logging.DEBUG)
    """
    if include_thread_name:
        log_format = '%(asctime)s - [%(threadName)s] - %(levelname)s - %(message)s'
    else:
        log_format = '%(asctime)s - %(levelname)s - %(message)s'

    handlers = [logging.StreamHandler(sys.stderr)]
    if log_file:
        handlers.insert(0, logging.FileHandler(log_file, encoding='utf-8'))

    logging.basicConfig(level=level, format=log_format, handlers=handlers, force=True)
    for name in _QUIET_LOGGERS:
        logging.getLogger(name).setLevel(max(level, logging.WARNING))

    return ThreadSafeLogger('gb2d')


def get_logger(name: Optional[str] = None) -> ThreadSafeLogger:
    """
    Get thread-safe logger instance

    @param name - Logger name (default: __name__)
    @returns ThreadSafeLogger instance
    """
    return ThreadSafeLogger(name or __name__)
