"""Numeric backend selection for the hot kernels.

The ray-cast renderer and the volume renderer exist twice: a numba ``@njit``
implementation and a pure-numpy vectorized fallback.  Selection order:

  1. ``SIMVS_BACKEND`` env var: ``numba`` | ``numpy`` | ``auto`` (default)
  2. ``auto`` uses numba when it imports, numpy otherwise.

``set_backend`` overrides the choice at runtime (used by tests and the
backend benchmark); pass ``None`` to return to the environment default.
"""

import os

_VALID = ("auto", "numba", "numpy")

_override = None


def _env_choice() -> str:
    choice = os.environ.get("SIMVS_BACKEND", "auto").strip().lower()
    if choice not in _VALID:
        raise ValueError(
            "SIMVS_BACKEND must be one of %s, got %r" % ("/".join(_VALID), choice)
        )
    return choice


def numba_available() -> bool:
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


def set_backend(name):
    """Force 'numba' or 'numpy', or None to restore the env-var default."""
    global _override
    if name is not None and name not in ("numba", "numpy"):
        raise ValueError("backend must be 'numba', 'numpy' or None")
    _override = name


def active_backend() -> str:
    """Resolved backend name for the current call."""
    if _override is not None:
        return _override
    choice = _env_choice()
    if choice == "auto":
        return "numba" if numba_available() else "numpy"
    if choice == "numba" and not numba_available():
        raise RuntimeError("SIMVS_BACKEND=numba but numba is not importable")
    return choice


def use_numba() -> bool:
    return active_backend() == "numba"
