"""Kernel backend selection.

The compiled extension is used when importable; set ``TCRA_PURE=1`` to force
the pure-Python fallback.
"""

from __future__ import annotations

import os

from . import _pykernels as pure

compiled = None
if not os.environ.get("TCRA_PURE"):
    try:
        from . import _kernels as compiled
    except ImportError:  # extension not built
        compiled = None

backend = compiled if compiled is not None else pure
BACKEND = "cython" if compiled is not None else "python"

ldpc_de = backend.ldpc_de
bec_de = backend.bec_de
map_de = backend.map_de
peel = backend.peel
count_independent = backend.count_independent
first_dependency = backend.first_dependency
