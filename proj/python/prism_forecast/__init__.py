"""Weekly claims nowcasting: seasonal decomposition plus discounted penalised regression.

Dates are ISO strings for week-ending Saturdays. Configuration is passed as the JSON of the
"prism" object of a run configuration; ``config()`` builds one from keyword overrides.
"""

import json

from ._prism import (
    PrismError,
    WeeklySeries,
    backtest,
    decompose,
    default_config,
    diebold_mariano,
    fit_penalized,
    forecast,
    lambda_max,
    naive_backtest,
    read_claims,
    relative_errors,
    synthetic,
    vintage,
)

__all__ = [
    "PrismError",
    "WeeklySeries",
    "backtest",
    "config",
    "decompose",
    "default_config",
    "diebold_mariano",
    "fit_penalized",
    "forecast",
    "lambda_max",
    "naive_backtest",
    "read_claims",
    "relative_errors",
    "synthetic",
    "vintage",
]

__version__ = "0.1.0"


def config(**overrides):
    """JSON for the forecasting config with the given top-level fields replaced.

    Nested sections (``stl``, ``penalty``) may be given as dicts and are merged.
    """
    cfg = json.loads(default_config())["prism"]
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(cfg.get(key), dict):
            cfg[key].update(value)
        else:
            cfg[key] = value
    return json.dumps(cfg)
