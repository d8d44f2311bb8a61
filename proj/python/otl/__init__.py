"""Transfer learning through optimal transport maps."""

import json as _json

from ._core import *  # noqa: F401,F403
from ._core import _run_classification, _run_rates


def run_rates(config: dict) -> dict:
    """Run an error-rate sweep described by a config dict (same schema as the CLI)."""
    return _json.loads(_run_rates(_json.dumps(config)))


def run_classification(config: dict) -> dict:
    """Run the synthetic classification sweep; the config needs a threshold."""
    return _json.loads(_run_classification(_json.dumps(config)))
