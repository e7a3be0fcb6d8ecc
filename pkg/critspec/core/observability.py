"""
Observability module providing structured logging, metrics collection, and tracing.
"""

import logging
import sys
import time
from contextlib import contextmanager
from functools import wraps
from typing import Any, Callable, Iterator, Optional

import structlog
from opentelemetry import trace
from opentelemetry.sdk.resources import Resource
from opentelemetry.sdk.trace import TracerProvider
from opentelemetry.sdk.trace.export import ConsoleSpanExporter, SimpleSpanProcessor
from prometheus_client import CollectorRegistry, Counter, Histogram, generate_latest

from critspec.core.config import settings


def setup_logging(level: Optional[str] = None) -> None:
    """Configure structured logging. Logs go to stderr, never into artifacts."""
    level_name = (level or settings.log_level).upper()

    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_logger_name,
            structlog.stdlib.add_log_level,
            structlog.stdlib.PositionalArgumentsFormatter(),
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            structlog.processors.UnicodeDecoder(),
            structlog.processors.JSONRenderer()
            if settings.log_format == "json"
            else structlog.dev.ConsoleRenderer(colors=False),
        ],
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        cache_logger_on_first_use=True,
    )

    logging.basicConfig(
        format="%(message)s",
        stream=sys.stderr,
        level=getattr(logging, level_name, logging.INFO),
        force=True,
    )


def get_logger(name: str) -> structlog.stdlib.BoundLogger:
    """Get a structured logger instance."""
    return structlog.get_logger(name)


# Metrics Registry
registry = CollectorRegistry()

stage_runs = Counter(
    "critspec_stage_runs_total",
    "Pipeline stage executions",
    ["stage", "status"],
    registry=registry,
)

stage_duration = Histogram(
    "critspec_stage_duration_seconds",
    "Pipeline stage duration",
    ["stage"],
    registry=registry,
)

root_restarts = Counter(
    "critspec_root_restarts_total",
    "Perturbation restarts of the simultaneous root finder",
    registry=registry,
)

criterion_verdicts = Counter(
    "critspec_criterion_verdicts_total",
    "Diagnostic criterion outcomes",
    ["criterion", "status"],
    registry=registry,
)

series_terms = Counter(
    "critspec_series_terms_total",
    "Number of series terms summed",
    ["method"],
    registry=registry,
)


class MetricsCollector:
    """Collects and exposes application metrics."""

    @staticmethod
    def track_stage(stage: str, status: str) -> None:
        """Track a pipeline stage outcome."""
        if settings.metrics_enabled:
            stage_runs.labels(stage=stage, status=status).inc()

    @staticmethod
    @contextmanager
    def track_duration(stage: str) -> Iterator[None]:
        """Track stage duration."""
        start = time.perf_counter()
        try:
            yield
        finally:
            if settings.metrics_enabled:
                stage_duration.labels(stage=stage).observe(time.perf_counter() - start)

    @staticmethod
    def track_root_restart() -> None:
        """Track a root finder restart."""
        if settings.metrics_enabled:
            root_restarts.inc()

    @staticmethod
    def track_verdict(criterion: str, status: str) -> None:
        """Track a diagnostic verdict."""
        if settings.metrics_enabled:
            criterion_verdicts.labels(criterion=criterion, status=status).inc()

    @staticmethod
    def track_series_terms(method: str, count: int) -> None:
        """Track how many series terms were evaluated."""
        if settings.metrics_enabled and count > 0:
            series_terms.labels(method=method).inc(count)

    @staticmethod
    def get_metrics() -> bytes:
        """Get metrics in Prometheus exposition format."""
        return generate_latest(registry)


# Tracing Setup
tracer: Optional[trace.Tracer] = None


def setup_tracing() -> None:
    """Configure OpenTelemetry tracing."""
    global tracer

    if not settings.tracing_enabled:
        return

    resource = Resource.create({
        "service.name": settings.app_name,
        "service.version": settings.app_version,
        "deployment.environment": settings.environment,
    })

    provider = TracerProvider(resource=resource)
    if settings.environment != "development":
        provider.add_span_processor(SimpleSpanProcessor(ConsoleSpanExporter(out=sys.stderr)))
    trace.set_tracer_provider(provider)

    tracer = trace.get_tracer(__name__)


def trace_operation(name: str) -> Callable[[Callable[..., Any]], Callable[..., Any]]:
    """Decorator to trace function execution."""
    def decorator(func: Callable[..., Any]) -> Callable[..., Any]:
        @wraps(func)
        def sync_wrapper(*args: Any, **kwargs: Any) -> Any:
            if not tracer:
                return func(*args, **kwargs)

            with tracer.start_as_current_span(name) as span:
                try:
                    span.set_attribute("function.name", func.__name__)
                    result = func(*args, **kwargs)
                    span.set_status(trace.Status(trace.StatusCode.OK))
                    return result
                except Exception as e:
                    span.set_status(trace.Status(trace.StatusCode.ERROR, str(e)))
                    span.record_exception(e)
                    raise

        return sync_wrapper

    return decorator


def monitor_performance(operation_name: str) -> Callable[[Callable[..., Any]], Callable[..., Any]]:
    """Decorator to log duration and status of an operation."""
    def decorator(func: Callable[..., Any]) -> Callable[..., Any]:
        @wraps(func)
        def sync_wrapper(*args: Any, **kwargs: Any) -> Any:
            logger = get_logger(__name__)
            start_time = time.perf_counter()

            try:
                result = func(*args, **kwargs)
            except Exception as e:
                logger.error(
                    f"{operation_name} failed",
                    operation=operation_name,
                    duration=time.perf_counter() - start_time,
                    status="error",
                    error=str(e),
                )
                raise

            logger.info(
                f"{operation_name} completed",
                operation=operation_name,
                duration=time.perf_counter() - start_time,
                status="success",
            )
            return result

        return sync_wrapper

    return decorator


def init_observability(level: Optional[str] = None) -> None:
    """Initialize all observability components."""
    setup_logging(level)
    setup_tracing()

    logger = get_logger(__name__)
    logger.debug(
        "Observability initialized",
        metrics_enabled=settings.metrics_enabled,
        tracing_enabled=settings.tracing_enabled,
        log_level=level or settings.log_level,
    )
