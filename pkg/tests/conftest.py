import pytest

from otlab import kernels


@pytest.fixture(params=sorted(kernels.available_backends()))
def backend(request):
    """Run a test once per available kernel backend."""
    previous = kernels.BACKEND
    kernels.set_backend(request.param)
    yield request.param
    kernels.set_backend(previous)
