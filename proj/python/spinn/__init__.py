"""Super-resolution of 2D turbulent flow from block-averaged observations.

Arrays are numpy float64. Velocity frames have shape (frames, 2, n, n) with
component index 0 for u_1 and 1 for u_2; node (i, j) of a component sits at
[..., j, i].
"""

import json

from ._core import (
    Config,
    DataError,
    Model,
    NumericalError,
    Observations,
    Snapshots,
    SpinnError,
    UsageError,
    baseline,
    cli,
    evaluate,
    feasibility,
    generate,
    observe,
    predict,
    solve_poisson,
)
from ._core import sweep as _sweep
from ._core import train as _train

__all__ = [
    "Config",
    "DataError",
    "Model",
    "NumericalError",
    "Observations",
    "Snapshots",
    "SpinnError",
    "UsageError",
    "baseline",
    "cli",
    "evaluate",
    "feasibility",
    "generate",
    "observe",
    "predict",
    "solve_poisson",
    "sweep",
    "train",
]


def train(config, observations):
    """Train on the training span. Returns (model, report dict)."""
    model, report = _train(config, observations)
    return model, json.loads(report)


def sweep(config, observations, reference=None):
    """Train one model per value in config.gammas.

    Returns (models, report dict, index of the selected model).
    """
    models, report, selected = _sweep(config, observations, reference)
    return models, json.loads(report), selected
