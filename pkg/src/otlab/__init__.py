"""otlab: 1-out-of-2 oblivious transfer from a flawed all-or-nothing OT."""

from otlab import kernels

__version__ = "0.1.0"
__all__ = ["backend", "__version__"]


def backend() -> str:
    """Name of the kernel backend currently in use (``cython`` or ``python``)."""
    return kernels.BACKEND
