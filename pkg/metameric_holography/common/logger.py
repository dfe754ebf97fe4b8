"""
Logging utilities for the hologram toolkit.

Log records go to stdout (and optionally a file) through the standard logging
package. Optimisation runs additionally draw a single status line that is
erased before the next record is written.
"""

import logging
import math
import sys
import time
from typing import Any, Mapping, Optional

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
DATE_FORMAT = '%Y-%m-%d %H:%M:%S'


class StatusLine:
    """A carriage-return status line on stdout."""

    def __init__(self, width: int = 30):
        self.width = width
        self._length = 0

    def draw(self, current: int, total: int, suffix: str = "") -> None:
        filled = self.width * current // total
        text = f"\r[{'█' * filled}{'-' * (self.width - filled)}] {100.0 * current / total:5.1f}% ({current}/{total})"
        if suffix:
            text += f" {suffix}"
        self.clear()
        print(text, end='', flush=True)
        self._length = len(text)

    def clear(self) -> None:
        if self._length:
            print('\r' + ' ' * self._length + '\r', end='', flush=True)
            self._length = 0


class Logger:
    """Logger with an optimisation status line and metric tables."""

    def __init__(self, log_level: str = "INFO", log_file: Optional[str] = None,
                 name: str = "metaholo", show_progress: bool = True):
        """Initialize logger with specified level and optional file output."""
        self.logger = logging.getLogger(name)
        self.logger.setLevel(getattr(logging, log_level.upper()))
        self.logger.handlers.clear()
        self.show_progress = show_progress
        self.status = StatusLine()
        self._best_loss = math.inf
        self._started = 0.0

        formatter = logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT)
        handlers = [logging.StreamHandler(sys.stdout)]
        if log_file:
            handlers.append(logging.FileHandler(log_file, encoding='utf-8'))
        for handler in handlers:
            handler.setFormatter(formatter)
            self.logger.addHandler(handler)

    def _emit(self, level: int, message: str, **kwargs) -> None:
        self.status.clear()
        self.logger.log(level, message, **kwargs)

    def info(self, message: str) -> None:
        self._emit(logging.INFO, message)

    def debug(self, message: str) -> None:
        self._emit(logging.DEBUG, message)

    def warning(self, message: str) -> None:
        self._emit(logging.WARNING, message)

    def error(self, message: str, exception: Optional[Exception] = None) -> None:
        """Log an error; with an exception the traceback is included."""
        if exception:
            self._emit(logging.ERROR, f"{message}: {exception}", exc_info=True)
        else:
            self._emit(logging.ERROR, message)

    def progress(self, current: int, total: int, message: str = "") -> None:
        """Redraw the status line; no-op when progress display is off."""
        if total > 0 and self.show_progress:
            self.status.draw(current, total, f"- {message}" if message else "")

    def loss_progress(self, iteration: int, total: int, loss: float) -> None:
        """
        Progress callback for optimisation runs.

        Every iteration is logged at DEBUG. The status line shows the current
        and best loss and the iteration rate; the last iteration logs a summary.
        """
        if iteration == 1:
            self._best_loss = math.inf
            self._started = time.perf_counter()
        self._best_loss = min(self._best_loss, loss)
        self.logger.debug(f"iteration {iteration}/{total} loss {loss:.6e}")

        elapsed = time.perf_counter() - self._started
        rate = iteration / elapsed if elapsed > 0 else 0.0
        self.progress(iteration, total, f"loss {loss:.4e} (best {self._best_loss:.4e}, {rate:.1f} it/s)")
        if iteration == total:
            self.info(f"Finished {total} iterations, final loss {loss:.6e}")

    def metrics(self, title: str, values: Mapping[str, Any]) -> None:
        """Log named results as an aligned block."""
        self.info(title)
        width = max((len(name) for name in values), default=0)
        for name, value in values.items():
            text = f"{value:.6g}" if isinstance(value, float) else str(value)
            self.info(f"  {name.ljust(width)}  {text}")

    def section(self, title: str) -> None:
        """Log a section header."""
        self._emit(logging.INFO, "=" * 60)
        self._emit(logging.INFO, f" {title}")
        self._emit(logging.INFO, "=" * 60)


class TimedLogger:
    """Context manager logging the wall time of a named operation."""

    def __init__(self, logger: Logger, operation_name: str):
        self.logger = logger
        self.operation_name = operation_name
        self.duration = 0.0
        self._start = 0.0

    def __enter__(self):
        self._start = time.perf_counter()
        self.logger.info(f"Starting {self.operation_name}...")
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.duration = time.perf_counter() - self._start
        if exc_type is None:
            self.logger.info(f"Completed {self.operation_name} in {self.duration:.2f} seconds")
        else:
            self.logger.error(f"Failed {self.operation_name} after {self.duration:.2f} seconds")


def get_logger(name: str = "metaholo", log_level: str = "INFO", log_file: Optional[str] = None,
               show_progress: bool = True) -> Logger:
    """Get a configured logger instance."""
    return Logger(log_level, log_file, name, show_progress)
