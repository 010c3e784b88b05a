"""Selects the compiled polar kernel when available.

Set ``CURVEDQUAD_PURE_PYTHON=1`` to force the pure-Python implementation.
"""
from __future__ import annotations

import os

from . import _polar

_compiled = None
if os.environ.get("CURVEDQUAD_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _cpolar as _compiled
    except ImportError:  # pragma: no cover - depends on the build
        _compiled = None

BACKENDS = {"python": _polar.polar_points}
if _compiled is not None:
    BACKENDS["compiled"] = _compiled.polar_points

_active = "compiled" if _compiled is not None else "python"


def active() -> str:
    """Name of the backend used by :func:`polar_points`."""
    return _active


def use(name: str) -> None:
    """Switch backend (``"compiled"`` or ``"python"``)."""
    global _active
    if name not in BACKENDS:
        raise ValueError(f"backend {name!r} not available; have {sorted(BACKENDS)}")
    _active = name


def polar_points(*args, **kwargs):
    return BACKENDS[_active](*args, **kwargs)
