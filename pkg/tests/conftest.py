import pytest

from abloom import kernels


def pytest_report_header(config):
    return f"abloom kernels backend: {kernels.backend_name()}"


@pytest.fixture
def restore_backend():
    """Let a test switch backends and put the original back afterwards."""
    prev = kernels.get_kernels().name
    yield
    kernels.set_backend(prev)
