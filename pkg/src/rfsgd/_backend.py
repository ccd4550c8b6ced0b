"""Pick the compiled kernels when available, else the numpy fallback.

Set ``RFSGD_BACKEND=python`` to force the fallback.
"""
import os

from . import _fallback

try:
    from . import _core
except ImportError:  # extension not built
    _core = None

BACKENDS = {"python": _fallback}
if _core is not None:
    BACKENDS["compiled"] = _core


def get_backend(name=None):
    if name is None:
        name = os.environ.get("RFSGD_BACKEND") or ("compiled" if _core is not None else "python")
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} unavailable; have {sorted(BACKENDS)}") from None


impl = get_backend()
BACKEND = "compiled" if impl is _core and _core is not None else "python"
