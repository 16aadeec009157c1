"""Logging utility with optional Datadog tracing."""

import contextlib
import logging
from typing import Any, Dict, Iterator

from rich.console import Console
from rich.logging import RichHandler

from config.settings import settings

# Create rich console for better terminal output
console = Console(stderr=True)


class StructuredLogger:
    """Logger with structured key=value fields and Datadog integration."""

    def __init__(self, name: str):
        self.logger = logging.getLogger(name)
        self.logger.setLevel(settings.log_level.upper())
        self.logger.propagate = False

        # Remove existing handlers
        self.logger.handlers.clear()

        rich_handler = RichHandler(
            console=console,
            show_time=True,
            show_path=False,
            markup=True
        )
        rich_handler.setFormatter(
            logging.Formatter("%(message)s", datefmt="[%X]")
        )
        self.logger.addHandler(rich_handler)

        # Initialize Datadog tracing if configured
        self.tracer = None
        if settings.dd_api_key:
            try:
                from ddtrace import patch, tracer
                patch(logging=True)
                self.tracer = tracer
            except ImportError:
                console.print("[yellow]Warning: Datadog not configured properly[/yellow]")

    def debug(self, message: str, **kwargs: Any) -> None:
        """Log debug message with optional structured data."""
        if self.logger.isEnabledFor(logging.DEBUG):
            self.logger.debug(f"[dim]{message}[/dim] {self._format_extra(kwargs)}")

    def info(self, message: str, **kwargs: Any) -> None:
        """Log info message with optional structured data."""
        self.logger.info(f"{message} {self._format_extra(kwargs)}")

    def warning(self, message: str, **kwargs: Any) -> None:
        """Log warning message with optional structured data."""
        self.logger.warning(f"[yellow]{message}[/yellow] {self._format_extra(kwargs)}")

    def error(self, message: str, **kwargs: Any) -> None:
        """Log error message with optional structured data."""
        self.logger.error(f"[red]{message}[/red] {self._format_extra(kwargs)}")

    def success(self, message: str, **kwargs: Any) -> None:
        """Log success message with optional structured data."""
        self.logger.info(f"[green]✓ {message}[/green] {self._format_extra(kwargs)}")

    @contextlib.contextmanager
    def span(self, operation: str, **tags: Any) -> Iterator[None]:
        """Wrap a block in a Datadog span when tracing is enabled."""
        if self.tracer is None:
            yield
            return
        with self.tracer.trace(operation, service=settings.dd_service) as span:
            for key, value in tags.items():
                span.set_tag(key, value)
            yield

    def _format_extra(self, data: Dict[str, Any]) -> str:
        """Format extra data for logging."""
        if not data:
            return ""

        formatted_items = []
        for key, value in data.items():
            if isinstance(value, float):
                value = f"{value:.4g}"
            formatted_items.append(f"[dim]{key}={value}[/dim]")

        return f"({', '.join(formatted_items)})"


def get_logger(name: str) -> StructuredLogger:
    """Get a structured logger instance."""
    return StructuredLogger(name)
