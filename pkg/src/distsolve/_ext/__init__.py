"""Hot evaluation kernels.

Two interchangeable backends exist: the compiled ``_kernels`` extension
(Cython) and the NumPy implementation in :mod:`._kernels_py`. The compiled one
is used when importable unless ``DISTSOLVE_PURE_PYTHON`` is set to a truthy
value.
"""

import os

from . import _kernels_py

BACKEND = "python"

if os.environ.get("DISTSOLVE_PURE_PYTHON", "").lower() not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _kernels_py
else:
    _impl = _kernels_py

eval_terms = _impl.eval_terms
eval_two_sided = _impl.eval_two_sided
kernel_matrix = _impl.kernel_matrix

__all__ = ["BACKEND", "eval_terms", "eval_two_sided", "kernel_matrix"]
