"""Select the kernel core at import time.

The compiled extension is preferred.  Setting ``MDLSQ_PURE_PYTHON=1`` forces
the numpy fallback, which is also used when the extension is missing.
"""

import logging
import os

from . import _pycore

log = logging.getLogger(__name__)

_CORES = {"python": _pycore}

try:
    from . import _core as _compiled
except ImportError:  # pragma: no cover - depends on the build
    _compiled = None
else:
    _CORES["compiled"] = _compiled


def _self_check(core):
    # a compiler that reassociates floating point would break every EFT
    import numpy as np

    big = np.array([[2.0**53], [0.0]])
    one = np.array([[1.0], [0.0]])
    z, _ = core.ew("add", big, yr=one)
    return z[0, 0] == 2.0**53 and z[1, 0] == 1.0


def _pick():
    if os.environ.get("MDLSQ_PURE_PYTHON", "") not in ("", "0"):
        return _pycore
    if _compiled is None:
        log.info("compiled core unavailable, using the numpy fallback")
        return _pycore
    if not _self_check(_compiled):  # pragma: no cover
        log.warning("compiled core failed its self-check, using the numpy fallback")
        return _pycore
    return _compiled


core = _pick()


def available():
    """Names of the cores that can be loaded in this process."""
    return sorted(_CORES)


def get_core(name=None):
    """Return a core module by name, or the active one when name is None."""
    if name is None:
        return core
    try:
        return _CORES[name]
    except KeyError:
        raise ValueError(f"unknown or unavailable core {name!r}") from None
