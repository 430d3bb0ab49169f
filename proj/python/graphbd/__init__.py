"""Explainability-guided backdoor attacks on graph neural networks.

Thin wrapper around the compiled extension: datasets, GNN training,
edge-mask and feature explainers, trigger generation, poisoning and the
experiment runner.
"""

from . import _graphbd as _core
from ._graphbd import *  # noqa: F401,F403

__version__ = "0.1.0"
__all__ = [name for name in dir(_core) if not name.startswith("_")]
