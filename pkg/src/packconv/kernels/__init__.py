"""Backend selection for the hot loops.

Three ways to run a packed convolution:

``numba``   JIT-compiled uint64 kernels (default when numba imports).
``numpy``   Vectorized uint64 kernels, no compilation step.
``exact``   Pure-Python unbounded-integer path in the conv modules; the
            semantic reference, and the only valid route when a
            geometry's segment reads spill past 64 bits.

The environment variable ``PACKCONV_BACKEND`` overrides the default;
an explicit ``backend=`` argument on the conv functions overrides both.
"""

from __future__ import annotations

import os

from ..errors import PackConvError
from . import numpy_backend

try:
    from . import numba_backend

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is an install-time choice
    numba_backend = None
    HAS_NUMBA = False

__all__ = [
    "BACKENDS",
    "HAS_NUMBA",
    "available_backends",
    "default_backend",
    "resolve_backend",
    "get_module",
    "fits_uint64",
]

BACKENDS = ("numba", "numpy", "exact")

_ENV_VAR = "PACKCONV_BACKEND"


def available_backends():
    """Backends usable in this environment, fastest first."""
    names = ["numba"] if HAS_NUMBA else []
    return names + ["numpy", "exact"]


def default_backend():
    """Honor PACKCONV_BACKEND, else prefer numba, else numpy."""
    env = os.environ.get(_ENV_VAR)
    if env is not None:
        if env not in BACKENDS:
            raise PackConvError(
                f"{_ENV_VAR}={env!r} not recognized; choose from {BACKENDS}"
            )
        return env
    return "numba" if HAS_NUMBA else "numpy"


def resolve_backend(name=None):
    """Validate an explicit backend choice, or fall back to the default."""
    if name is None:
        name = default_backend()
    if name not in BACKENDS:
        raise PackConvError(f"unknown backend {name!r}; choose from {BACKENDS}")
    if name == "numba" and not HAS_NUMBA:
        raise PackConvError("numba backend requested but numba is not installed")
    return name


def get_module(name):
    """The kernel module for a word-level backend name."""
    if name == "numba":
        if not HAS_NUMBA:
            raise PackConvError("numba backend requested but numba is not installed")
        return numba_backend
    if name == "numpy":
        return numpy_backend
    raise PackConvError(f"backend {name!r} has no word-level kernels")


def fits_uint64(s, segments):
    """Whether every segment read of this geometry sits below bit 64."""
    return s * segments <= 64
