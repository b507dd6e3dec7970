"""Run-configuration parsing, the initial-data expression language, and
reproducibility-stamped output files."""

from .expr import InitExpr, parse_expr, print_expr, eval_expr, eval_init
from .config import RunConfig, parse_config, canonical_digest
from .output import (
    OutputHeader,
    write_snapshot,
    read_snapshot,
    write_stats,
)

__all__ = [
    "InitExpr",
    "parse_expr",
    "print_expr",
    "eval_expr",
    "eval_init",
    "RunConfig",
    "parse_config",
    "canonical_digest",
    "OutputHeader",
    "write_snapshot",
    "read_snapshot",
    "write_stats",
]
