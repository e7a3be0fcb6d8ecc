"""
Command-line entry point.

    critspec all --config run.json --out results --threads 4 --seed 0

Exit codes: 0 when no criterion reports instability evidence, 10 when some
does, 2 on invalid configuration or a failed stage.
"""

import argparse
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from pydantic import ValidationError

from critspec.core.config import settings
from critspec.core.exceptions import ConfigError, CritspecError
from critspec.core.observability import MetricsCollector, get_logger, init_observability
from critspec.models.schemas import RunConfig
from critspec.workers.pipeline import EXIT_ERROR, PipelineRunner, default_stages

logger = get_logger(__name__)

COMMANDS = {
    "spectrum": ["spectrum"],
    "summability": ["spectrum", "summability"],
    "measures": ["spectrum", "measures"],
    "ruelle-verify": ["ruelle"],
    "diagnose": ["spectrum", "diagnostics"],
    "render": ["render"],
    "all": None,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="critspec",
        description="Critical-orbit spectra, summability scans and stability diagnostics for rational maps",
    )
    parser.add_argument("command", choices=list(COMMANDS), help="Pipeline to run")
    parser.add_argument("--config", required=True, help="Run configuration (JSON)")
    parser.add_argument("--out", default=None, help="Output directory (default: config.output)")
    parser.add_argument("--threads", type=int, default=settings.threads, help="Worker threads")
    parser.add_argument("--seed", type=int, default=None, help="Override config.seed")
    parser.add_argument("--metrics", default=None, help="Write Prometheus metrics to this file")
    parser.add_argument("--log-level", default=None, help="Logging level (default: settings.log_level)")
    return parser


def load_config(path: str, seed: Optional[int] = None) -> RunConfig:
    """Read and validate a RunConfig; any problem becomes a ConfigError."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", {"path": path})
    try:
        config = RunConfig.model_validate_json(text)
    except ValidationError as exc:
        raise ConfigError("invalid run configuration", {"path": path, "errors": exc.errors(include_url=False)})
    if seed is not None:
        config = config.model_copy(update={"seed": seed})
    return config


def run(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    init_observability(args.log_level)

    try:
        config = load_config(args.config, args.seed)
        runner = PipelineRunner(config, Path(args.out) if args.out else None, threads=args.threads)
    except CritspecError as exc:
        logger.error("Run aborted", error=exc.code, message=exc.message, details=str(exc.details))
        print(f"critspec: {exc.message}", file=sys.stderr)
        return EXIT_ERROR

    stages: List[str] = COMMANDS[args.command] or default_stages(config)
    result = runner.run(stages)
    for error in result.errors:
        print(f"critspec: stage {error.stage} failed: {error.message}", file=sys.stderr)

    if args.metrics:
        Path(args.metrics).write_bytes(MetricsCollector.get_metrics())
    return result.exit_code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
