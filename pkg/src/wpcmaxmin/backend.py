"""Selection between the compiled and pure-NumPy evaluation backends.

The compiled extension is preferred when importable; set the environment
variable ``WPCMAXMIN_BACKEND`` to ``python`` or ``compiled`` to force one.
An explicit request for the compiled backend fails loudly if the extension
is missing rather than silently falling back.
"""

from __future__ import annotations

import os

from . import _kernels_py

_FORCED = os.environ.get("WPCMAXMIN_BACKEND", "").strip().lower()


def _load():
    if _FORCED == "python":
        return _kernels_py
    try:
        from . import _kernels  # compiled extension
    except ImportError:
        if _FORCED == "compiled":
            raise ImportError(
                "WPCMAXMIN_BACKEND=compiled but the extension is not built; "
                "reinstall the package with a C toolchain available")
        return _kernels_py
    return _kernels


_impl = _load()

constraint_values = _impl.constraint_values
barrier_value = _impl.barrier_value
barrier_system = _impl.barrier_system


def backend_name() -> str:
    """Which kernel implementation is active: 'compiled' or 'python'."""
    return _impl.KERNELS_BACKEND


def get_backend(name: str):
    """Fetch a specific backend module by name (used by the benchmark)."""
    if name == "python":
        return _kernels_py
    if name == "compiled":
        from . import _kernels
        return _kernels
    raise ValueError(f"unknown backend {name!r}")
