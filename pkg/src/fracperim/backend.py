"""Kernel backend selection.

The hot pair-statistics loops exist twice: a numba-compiled version and a
pure-numpy fallback.  The environment variable ``FRACPERIM_BACKEND``
("numba" or "numpy") selects one; unset, numba is used when importable.
Integer pair counts are bit-identical across backends, so indicator-based
energies do not depend on the choice.
"""

from __future__ import annotations

import os
import warnings

from . import _kernels_numpy
from .errors import ConfigError

ENV_VAR = "FRACPERIM_BACKEND"

try:
    from . import _kernels_numba

    _HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    _kernels_numba = None
    _HAS_NUMBA = False
    warnings.warn("numba unavailable; falling back to the numpy backend")


def available_backends() -> tuple[str, ...]:
    return ("numba", "numpy") if _HAS_NUMBA else ("numpy",)


def get_kernels(name: str | None = None):
    """Return the kernel module for ``name`` or the environment default."""
    if name is None:
        name = os.environ.get(ENV_VAR, "").strip().lower() or None
    if name is None:
        return _kernels_numba if _HAS_NUMBA else _kernels_numpy
    if name == "numpy":
        return _kernels_numpy
    if name == "numba":
        if not _HAS_NUMBA:
            warnings.warn("numba backend requested but not importable; using numpy")
            return _kernels_numpy
        return _kernels_numba
    raise ConfigError(f"unknown backend {name!r}; expected 'numba' or 'numpy'")
