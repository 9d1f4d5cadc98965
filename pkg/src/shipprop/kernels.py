"""Kernel backend selection.

The hot per-pixel loops (gradient mask, 3x3 morphology, component labeling,
windowed statistics) exist twice: a compiled Cython extension and a NumPy
fallback with identical semantics. The compiled backend is preferred when
importable; set ``SHIPPROP_KERNELS=numpy`` or ``SHIPPROP_KERNELS=c`` to force
one (forcing ``c`` raises if the extension was not built).

``benchmarks/bench_kernels.py`` compares the two backends.
"""

import os

from shipprop import _kernels_np

_requested = os.environ.get("SHIPPROP_KERNELS", "").strip().lower()

if _requested in ("", "c"):
    try:
        from shipprop import _kernels_c as _impl

        BACKEND = "c"
    except ImportError:
        if _requested == "c":
            raise ImportError(
                "SHIPPROP_KERNELS=c but the compiled extension is not built; "
                "run 'pip install -e .' or 'python setup.py build_ext --inplace'"
            )
        _impl = _kernels_np
        BACKEND = "numpy"
elif _requested == "numpy":
    _impl = _kernels_np
    BACKEND = "numpy"
else:
    raise ValueError(f"SHIPPROP_KERNELS must be 'c' or 'numpy', got {_requested!r}")

gradient_field = _impl.gradient_field
erode3 = _impl.erode3
dilate3 = _impl.dilate3
label_components = _impl.label_components
local_mean_sd = _impl.local_mean_sd


def available_backends() -> dict:
    """Map of backend name to its module, for benchmarks and tests."""
    backends = {"numpy": _kernels_np}
    try:
        from shipprop import _kernels_c

        backends["c"] = _kernels_c
    except ImportError:
        pass
    return backends
