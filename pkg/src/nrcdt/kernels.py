"""Backend selection for the compiled kernels.

Two kernels exist in both backends: ``radon_quantiles`` (projection, sorting
and quantile evaluation of a planar measure) and ``svm_subgradient`` (the
linear SVM training loop).

The compiled extension ``nrcdt._core`` is used when it is importable; set
``NRCDT_PURE_PYTHON=1`` to force the numpy fallback.
"""

import os

from . import _fallback

BACKEND = "python"
radon_quantiles = _fallback.radon_quantiles
svm_subgradient = _fallback.svm_subgradient

if os.environ.get("NRCDT_PURE_PYTHON", "") in ("", "0"):
    try:
        from . import _core
    except ImportError:
        pass
    else:
        BACKEND = "compiled"
        radon_quantiles = _core.radon_quantiles
        svm_subgradient = _core.svm_subgradient


def get_kernel(backend=None, name="radon_quantiles"):
    """Kernel ``name`` of ``backend`` ("compiled", "python", or None for the default)."""
    if backend is None:
        return globals()[name]
    if backend == "python":
        return getattr(_fallback, name)
    if backend == "compiled":
        from . import _core

        return getattr(_core, name)
    raise ValueError(f"unknown backend {backend!r}")
