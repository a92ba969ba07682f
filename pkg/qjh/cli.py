#!/usr/bin/env python3
"""
QJH command line - main entry point

Subcommands write CSV/JSON (and optionally SVG) outputs plus a manifest,
print a summary JSON to standard output and exit with 0 on success, 2 on
configuration errors and 3 on runtime failures.
"""

import sys
import time
from typing import List, Optional

import click
from pydantic import ValidationError

from . import __version__
from .commands import COMMANDS
from .errors import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, QJHError
from .models.run_models import RunSummary
from .utils.logging import get_logger, setup_logging

logger = get_logger(__name__)

APP_NAME = "qjh"
APP_DESCRIPTION = "Density-matrix-preconditioned HMC and open-quantum-system numerics"


class RunState:
    """Per-invocation state shared by the subcommands"""

    def __init__(self):
        self.start_time = time.perf_counter()
        self.operation_count = 0
        self.command: Optional[str] = None
        self.last_summary: Optional[RunSummary] = None

    def increment_operations(self):
        """Increment operation counter"""
        self.operation_count += 1

    def get_elapsed_seconds(self) -> float:
        return time.perf_counter() - self.start_time

    def emit(self, summary: RunSummary) -> None:
        """Print the summary JSON to standard output"""
        summary.duration_seconds = round(self.get_elapsed_seconds(), 3)
        self.last_summary = summary
        click.echo(summary.model_dump_json(indent=2))


def build_cli(state: RunState) -> click.Group:
    """Create the click group and register every subcommand"""

    @click.group(name=APP_NAME, help=APP_DESCRIPTION)
    @click.version_option(__version__, prog_name=APP_NAME)
    @click.option(
        "--log-level",
        type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
        default=None,
        help="Override QJH_LOGGING__LEVEL",
    )
    @click.pass_context
    def cli(ctx: click.Context, log_level: Optional[str]) -> None:
        setup_logging(log_level)
        state.command = ctx.invoked_subcommand

    for command in COMMANDS.values():
        command.register(cli, state)
    return cli


def _report(state: RunState, message: str, code: int) -> int:
    click.echo(f"Error: {message}", err=True)
    state.emit(RunSummary.error_result(command=state.command or APP_NAME, error=message))
    return code


def run(argv: Optional[List[str]] = None) -> int:
    """
    Parse argv, run one subcommand and return the process exit code

    Args:
        argv: Arguments without the program name (default: sys.argv[1:])
    """
    state = RunState()
    cli = build_cli(state)
    try:
        rv = cli.main(args=argv, prog_name=APP_NAME, standalone_mode=False)
    except click.UsageError as e:
        e.show()
        return EXIT_CONFIG
    except click.ClickException as e:
        e.show()
        return EXIT_RUNTIME
    except click.Abort:
        click.echo("Aborted!", err=True)
        return EXIT_RUNTIME
    except QJHError as e:
        logger.error("Run failed", extra={"error": str(e), "exit_code": e.code, "data": e.data})
        return _report(state, str(e), e.code)
    except ValidationError as e:
        logger.error("Invalid numeric input", extra={"error": str(e)})
        return _report(state, str(e), EXIT_CONFIG)
    except Exception as e:
        logger.exception("Unexpected failure")
        return _report(state, f"{type(e).__name__}: {e}", EXIT_RUNTIME)
    return rv if isinstance(rv, int) else EXIT_OK


def main() -> None:
    """Main entry point"""
    sys.exit(run())


if __name__ == "__main__":
    main()
