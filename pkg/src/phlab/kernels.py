"""Backend selection for the hot loops.

The compiled extension is used when importable; set ``PHLAB_BACKEND=python``
to force the numpy fallback.
"""

import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("PHLAB_BACKEND", "").lower() != "python":
    try:
        from . import _ckernels as _impl  # noqa: F811
        BACKEND = "cython"
    except ImportError:
        pass

orbit_chunk = _impl.orbit_chunk
classify_z = _impl.classify_z
weyl_chunk = _impl.weyl_chunk


def get_backend(name):
    """Kernel module by name (``"python"`` or ``"cython"``), for tests and benchmarks."""
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels
        return _ckernels
    raise ValueError(f"unknown backend {name!r}")
