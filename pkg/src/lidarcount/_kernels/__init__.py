"""Backend dispatch for the clustering hot-path kernels.

At import time the compiled extension is preferred; the pure-numpy fallback
is selected when the extension is missing or when ``LIDARCOUNT_FORCE_NUMPY``
is set in the environment.  Both backends implement identical semantics (see
``_numpy_impl``), so the choice only affects speed.  ``BACKEND`` names the
active implementation; ``benchmarks/bench_kernels.py`` compares the two.
"""

from __future__ import annotations

import os

from . import _numpy_impl

if os.environ.get("LIDARCOUNT_FORCE_NUMPY"):
    _impl = _numpy_impl
else:
    try:
        from . import _native as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _numpy_impl

BACKEND: str = _impl.BACKEND_NAME
kth_nn_distances = _impl.kth_nn_distances
dbscan_labels = _impl.dbscan_labels

__all__ = ["BACKEND", "kth_nn_distances", "dbscan_labels"]
