"""Chooses the compiled kernels when available; IMPLOSION_PURE=1 forces the fallback."""
import os

from . import _kernels_py

if os.environ.get("IMPLOSION_PURE") == "1":
    kernels = _kernels_py
    COMPILED = False
else:
    try:
        from . import _kernels as kernels
        COMPILED = True
    except ImportError:
        kernels = _kernels_py
        COMPILED = False

NAME = "cython" if COMPILED else "python"
