"""Hot loops behind the chain, Parzen, oracle and walkback code.

Two backends expose the same functions: ``numba`` (@njit, default) and
``numpy`` (pure numpy; Python loops where a step depends on the previous
one).  Set ``GDAE_DISABLE_NUMBA=1`` to force the numpy path; it is also used
when numba cannot be imported.  Both consume uniforms in the same layout, so
discrete results agree exactly and continuous ones to rounding.
"""
from __future__ import annotations

import os

from . import _numpy as numpy_backend

numba_backend = None
_disabled = os.environ.get("GDAE_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")
if not _disabled:
    try:
        from . import _jit as numba_backend
    except ImportError:  # pragma: no cover - numba missing
        numba_backend = None

active = numba_backend if numba_backend is not None else numpy_backend
BACKEND = active.NAME

discrete_chain = active.discrete_chain
parzen_chain = active.parzen_chain
parzen_log_prob_rows = active.parzen_log_prob_rows
parzen_log_prob_matrix = active.parzen_log_prob_matrix
power_iteration = active.power_iteration
discrete_walkback = active.discrete_walkback

__all__ = [
    "BACKEND",
    "discrete_chain",
    "discrete_walkback",
    "numba_backend",
    "numpy_backend",
    "parzen_chain",
    "parzen_log_prob_matrix",
    "parzen_log_prob_rows",
    "power_iteration",
]
