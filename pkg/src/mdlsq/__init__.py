"""Multiple-double least squares: blocked Householder QR and tiled back substitution."""

from ._backend import available as available_cores, core as _active_core
from .md_arith import ComplexMultiDouble, MultiDouble, PRECISIONS

__version__ = "0.1.0"

CORE = _active_core.NAME

__all__ = ["ComplexMultiDouble", "MultiDouble", "PRECISIONS", "CORE", "available_cores"]
