"""Backend selection for the hot kernels.

The numba path is used when numba imports cleanly and the environment
variable ``NCLAB_BACKEND`` is unset or ``"numba"``.  Setting it to
``"numpy"`` forces the pure-numpy fallback everywhere.
"""

import os

BACKENDS = ("numba", "numpy")

try:
    import numba  # noqa: F401

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False


def _default_backend():
    requested = os.environ.get("NCLAB_BACKEND", "").strip().lower()
    if requested == "numpy":
        return "numpy"
    if requested not in ("", "numba"):
        raise ValueError(
            f"NCLAB_BACKEND must be one of {BACKENDS}, got {requested!r}"
        )
    return "numba" if HAS_NUMBA else "numpy"


DEFAULT_BACKEND = _default_backend()


def resolve_backend(backend=None):
    """Return the backend name to use for a call (``None`` means default)."""
    if backend is None:
        return DEFAULT_BACKEND
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "numba" and not HAS_NUMBA:
        raise RuntimeError("numba backend requested but numba is not installed")
    return backend


if HAS_NUMBA:
    from numba import njit
else:  # pragma: no cover

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f
