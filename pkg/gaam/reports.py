"""

Reports for GAAM

Builds the structured summary documents emitted by the command line: check
reports of a verification suite, stationary-solution summaries and sweep
rows. Documents are plain dicts of builtin types written as YAML.

License: BSD 3-Clause

"""

#
# IMPORTS
#
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import yaml

from gaam.attractor_diag import CheckReport
from gaam.spectral_core import ModelParams, derived_constants, regime_report
from gaam.stationary import RegularityReport, SmallnessReport, StationarySolution


#
# PUBLIC
#
def to_plain(value: Any) -> Any:
    """Recursively convert numpy scalars/arrays and tuples into builtin types."""
    if isinstance(value, dict):
        return {str(k): to_plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_plain(value.tolist())
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


def params_summary(params: ModelParams) -> Dict[str, Any]:
    """Model parameters, derived constants and the regime classification."""
    k = derived_constants(params)
    regime = regime_report(params)
    return {
        "alpha": params.alpha, "beta": params.beta, "gamma": params.gamma,
        "delta": params.delta, "nu": params.nu, "dim": params.dim,
        "modes_per_axis": params.modes_per_axis, "box_length": params.box_length,
        "a": k.a, "b": k.b, "c": k.c, "d": k.d, "m_alpha": k.m_alpha, "M_alpha": k.M_alpha,
        "alpha_plus_beta": regime.alpha_plus_beta,
        "uniqueness_known": regime.uniqueness_known,
        "attractor": regime.attractor,
        "stationary_stability_applicable": regime.stationary_stability_applicable,
        "dimension_bound_applicable": regime.dimension_bound_applicable,
    }


def verify_document(
        suite: str,
        reports: List[CheckReport],
        params: ModelParams,
        config_name: Optional[str] = None) -> Dict[str, Any]:
    return to_plain({
        "suite": suite,
        "config": config_name,
        "passed": all(r.passed for r in reports),
        "params": params_summary(params),
        "checks": [r.to_dict() for r in reports],
    })


def stationary_document(
        solution: StationarySolution,
        smallness: SmallnessReport,
        regularity: RegularityReport,
        params: ModelParams,
        tol: float) -> Dict[str, Any]:
    return to_plain({
        "params": params_summary(params),
        "solution": {
            "residual_l2": solution.residual_l2,
            "energy_ratio": solution.energy_ratio,
            "iterations": solution.iterations,
            "tolerance": tol,
            "continuation_path": [[eps, res] for eps, res in solution.continuation_path],
        },
        "smallness": smallness.to_dict(),
        "regularity": {"ratio": regularity.ratio, "tail_fraction": regularity.tail_fraction},
    })


def failure_document(kind: str, message: str, **extra) -> Dict[str, Any]:
    """Document emitted when a command aborts (non-convergence, blow-up)."""
    return to_plain({"failed": kind, "message": message, **extra})


def write_report(document: Dict[str, Any], path: Union[str, Path], force: bool = False) -> Path:
    """Write a report document as YAML.

    Raises:
        FileExistsError: If the file exists and force is False.
    """
    path = Path(path)
    if path.exists() and not force:
        raise FileExistsError(f"File {path} already exists. Use force=True to overwrite.")
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as file:
        yaml.safe_dump(to_plain(document), file, sort_keys=False)
    return path


def read_report(path: Union[str, Path]) -> Dict[str, Any]:
    with open(path, "r") as file:
        return yaml.safe_load(file) or {}


def format_check_line(report: CheckReport) -> str:
    """One console line per check: status mark, name, violation and headline details."""
    mark = "✓" if report.passed else "✗"
    if report.skipped:
        return f"- {report.name}: skipped ({report.details.get('reason', '')})"
    headline = ", ".join(
        f"{key}={_short(value)}" for key, value in report.details.items()
        if isinstance(value, (int, float, np.floating, np.integer)) and not isinstance(value, bool))
    return f"{mark} {report.name}: max violation {_short(report.max_violation)}" + (f" ({headline})" if headline else "")


#
# INTERNAL
#
def _short(value: Any) -> str:
    value = float(value)
    if math.isinf(value) or math.isnan(value):
        return str(value)
    return f"{value:.6g}"
