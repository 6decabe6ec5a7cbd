"""Kernel backend selection.

The compiled extension is preferred.  Set ``TCEMU_BACKEND=python`` to force
the numpy fallback, or ``TCEMU_BACKEND=compiled`` to fail loudly when the
extension is missing.
"""

import importlib
import os

from . import _fallback

_choice = os.environ.get("TCEMU_BACKEND", "auto").lower()


def load(name):
    """Return the kernel module called ``name`` ("compiled" or "python")."""
    if name == "python":
        return _fallback
    if name == "compiled":
        return importlib.import_module("tcemu._kernels")
    raise ValueError(f"unknown backend {name!r}")


def available():
    names = ["python"]
    try:
        load("compiled")
    except ImportError:
        pass
    else:
        names.insert(0, "compiled")
    return names


if _choice == "python":
    kernels = _fallback
elif _choice == "compiled":
    kernels = load("compiled")
else:
    try:
        kernels = load("compiled")
    except ImportError:
        kernels = _fallback

NAME = kernels.NAME
