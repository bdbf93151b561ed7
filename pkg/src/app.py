import logging
import sys
from typing import Annotated, Optional

from src.core.config import GRIDFEAT_LOG_LEVEL, GRIDFEAT_THREADS, applied_threads, apply_thread_limit, threads_from_argv

# BLAS reads its thread count when numpy is first imported
apply_thread_limit(threads_from_argv(sys.argv[1:]) or GRIDFEAT_THREADS)

import click  # noqa: E402
import typer  # noqa: E402

from src.commands import (  # noqa: E402
    answer_cmd,
    bench,
    extract,
    gen_data,
    pretrain_cmd,
    render_attn,
    selftest,
    sweep,
    train_vqa_cmd,
)
from src.core.errors import ConfigError, GridFeatError  # noqa: E402

logging.basicConfig(level=GRIDFEAT_LOG_LEVEL, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
logger = logging.getLogger(__name__)

USAGE_EXIT_CODE = 1
RUNTIME_EXIT_CODE = 3

app = typer.Typer(
    name="gridfeat",
    help="""
    Region vs grid visual features for VQA.

    Generate the synthetic shapes dataset, pretrain the toy detector, extract
    region or grid features, train and query the VQA head, and time or sweep
    the two pipelines. Every run logs its fully resolved configuration.
    """,
    no_args_is_help=True,
    add_completion=False,
    pretty_exceptions_enable=False,
)


# global options go before the subcommand
@app.callback()
def configure(
    threads: Annotated[Optional[int], typer.Option(
        "--threads", min=1, help="BLAS threads for this run; recorded in timing output.",
    )] = None,
) -> None:
    if threads is not None and threads != applied_threads():
        logger.warning(f"BLAS pools already run with {applied_threads()} threads; --threads {threads} ignored")


# Data
app.command("gen-data")(gen_data)

# Training
app.command("pretrain")(pretrain_cmd)
app.command("train-vqa")(train_vqa_cmd)

# Features and answers
app.command("extract")(extract)
app.command("answer")(answer_cmd)
app.command("render-attn")(render_attn)

# Benchmarks and checks
app.command("bench")(bench)
app.command("sweep")(sweep)
app.command("selftest")(selftest)


def main(argv: list[str] | None = None) -> int:
    """
    Run one subcommand and map failures to exit codes.

    Usage errors exit 1, configuration errors 2 and every other failure 3.
    Unexpected exceptions are logged with their traceback.
    """
    try:
        result = app(args=argv, prog_name="gridfeat", standalone_mode=False)
    except click.exceptions.Abort:
        typer.echo("Aborted.", err=True)
        return USAGE_EXIT_CODE
    except click.ClickException as e:
        e.show()
        return USAGE_EXIT_CODE
    except ConfigError as e:
        logger.error(f"Configuration error: {e.detail}")
        return e.exit_code
    except GridFeatError as e:
        logger.error(f"{type(e).__name__}: {e.detail}", exc_info=True)
        return e.exit_code
    except Exception as e:
        logger.exception(f"Unexpected failure: {e}")
        return RUNTIME_EXIT_CODE
    return result if isinstance(result, int) else 0
