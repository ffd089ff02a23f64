import pytest
from hypothesis import settings

from mdlsq import _backend

settings.register_profile("mdlsq", deadline=None, max_examples=60, derandomize=True)
settings.load_profile("mdlsq")

CORE_NAMES = _backend.available()


@pytest.fixture(params=CORE_NAMES)
def core(request):
    """Each available kernel core in turn."""
    return _backend.get_core(request.param)
