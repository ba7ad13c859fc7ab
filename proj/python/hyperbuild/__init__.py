"""Python access to the boundary-model checks."""

import json as _json

from ._core import (
    Error,
    ModelConstants,
    __version__,
    check_names,
    compute_constants,
    format_number,
    lemma5_ratio,
    path_modulus,
    polygon_side_length,
    report_csv,
)
from ._core import run_check as _run_check


def run_check(name, config=None):
    """Run one check; `config` is a dict of config overrides."""
    report = _run_check(name, _json.dumps(config or {}))
    report["values"] = _json.loads(report.pop("values_json"))
    return report


__all__ = [
    "Error",
    "ModelConstants",
    "__version__",
    "check_names",
    "compute_constants",
    "format_number",
    "lemma5_ratio",
    "path_modulus",
    "polygon_side_length",
    "report_csv",
    "run_check",
]
