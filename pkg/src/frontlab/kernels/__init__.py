"""Stepping kernels: compiled extension when built, NumPy fallback otherwise.

Both kernels implement the same direct-solve IMEX step (see reference.py
for the scheme and for why it preserves nodewise ordering in floating
point); they agree to roundoff, not bitwise.  A single run always uses one
kernel throughout, so pipeline output stays deterministic either way.
"""

from . import reference
from .reference import KIND_CALLBACK, KIND_CUBIC, KIND_KPP

try:
    from . import _imex
except ImportError:  # extension not built; pure-python install
    _imex = None

HAVE_COMPILED = _imex is not None

__all__ = ["KIND_KPP", "KIND_CUBIC", "KIND_CALLBACK", "HAVE_COMPILED",
           "available", "resolve"]


def available():
    names = ["reference"]
    if HAVE_COMPILED:
        names.append("compiled")
    return names


def resolve(name: str = "auto"):
    """Map a kernel request ('auto', 'compiled', 'reference') to (tag, loop)."""
    if name == "auto":
        name = "compiled" if HAVE_COMPILED else "reference"
    if name == "compiled":
        if not HAVE_COMPILED:
            raise RuntimeError(
                "compiled kernel requested but the extension is not built; "
                "reinstall with Cython and a C compiler available")
        return "compiled", _imex.imex_loop
    if name == "reference":
        return "reference", reference.imex_loop
    raise ValueError(f"unknown kernel {name!r}; expected auto, compiled or reference")
