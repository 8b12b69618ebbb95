"""Kernel backend selection.

The compiled extension is preferred; the pure-Python module is a drop-in
fallback with identical outputs. ``BACKEND`` records which one is active.
"""

from ftspan import _kernels_py

try:
    from ftspan import _kernels as _impl
except ImportError:  # pragma: no cover - depends on build environment
    _impl = _kernels_py

BACKEND = _impl.BACKEND

greedy_spanner = _impl.greedy_spanner
sssp = _impl.sssp
max_stretch = _impl.max_stretch


def get_backend(name: str):
    """Return a specific backend module ("compiled" or "python").

    Used by the kernel benchmark and by tests that compare both backends.
    Raises ImportError if the compiled backend was requested but not built.
    """
    if name == "python":
        return _kernels_py
    if name == "compiled":
        from ftspan import _kernels

        return _kernels
    raise ValueError(f"unknown kernel backend: {name!r}")
