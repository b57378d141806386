"""Backend selection for the hot susceptibility kernel.

The compiled Cython extension is used when it was built; otherwise the numpy
version is used. Set ``EITMEM_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _kernels_py

BACKEND = "python"
chi_channels = _kernels_py.chi_channels

if not os.environ.get("EITMEM_PURE_PYTHON"):
    try:
        from . import _kernels
    except ImportError:  # extension not built
        pass
    else:
        chi_channels = _kernels.chi_channels
        BACKEND = "cython"

__all__ = ["BACKEND", "chi_channels"]
