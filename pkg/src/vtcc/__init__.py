"""Contrastive image clustering engine, CPU-only, built on its own
tape-based tensor library.

The environment variable ``VTCC_THREADS`` (default 1) pins the BLAS
thread count for deterministic numerics; it must take effect before
numpy's first import, which this module guarantees as long as the
process imports ``vtcc`` before anything else that pulls in numpy.
"""

import os as _os

_threads = _os.environ.get("VTCC_THREADS", "1")
for _var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS",
             "NUMEXPR_NUM_THREADS"):
    _os.environ.setdefault(_var, _threads)

from . import tensor  # noqa: E402
from .errors import VtccError  # noqa: E402
from .tensor import Tensor, backward, no_grad  # noqa: E402

__all__ = ["Tensor", "VtccError", "backward", "no_grad", "tensor"]
__version__ = "0.1.0"
