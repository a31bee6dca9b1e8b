import pytest

from neurokdc import backends


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Compile the JIT kernels once so per-test timings stay honest."""
    mod = backends.active_backend()
    if hasattr(mod, "warmup"):
        mod.warmup()
