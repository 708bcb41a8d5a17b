"""Backend selection for the hot stencil and quadrature kernels.

The numba path is used when numba imports cleanly and the environment
variable ``SUPERLIOUVILLE_NUMBA`` is not set to ``0``.  The pure-numpy path
is always available and computes the same discrete quantities.

``SUPERLIOUVILLE_THREADS`` caps the number of numba worker threads.
"""
import os

# workqueue ships with numba; skips probing an external TBB
os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

_FALSY = {"0", "false", "no", "off"}

_state = {
    "backend": (
        "numba"
        if HAVE_NUMBA
        and os.environ.get("SUPERLIOUVILLE_NUMBA", "1").strip().lower() not in _FALSY
        else "numpy"
    )
}


def get_backend():
    return _state["backend"]


def set_backend(name):
    """Force ``"numba"`` or ``"numpy"``; returns the previous backend."""
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not importable")
    prev = _state["backend"]
    _state["backend"] = name
    return prev


def set_threads(n=None):
    """Cap numba threads at ``n`` (or at ``SUPERLIOUVILLE_THREADS``)."""
    if not HAVE_NUMBA:
        return 1
    if n is None:
        env = os.environ.get("SUPERLIOUVILLE_THREADS")
        if not env:
            return numba.get_num_threads()
        n = int(env)
    n = max(1, min(int(n), numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(n)
    return n


set_threads()
