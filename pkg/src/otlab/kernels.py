"""Kernel backend selection.

The compiled ``_ckernels`` extension is used when it imports; otherwise, or
when ``OTLAB_PURE_PYTHON=1`` is set, the numpy implementation in
``_pykernels`` is used. Both produce identical outputs, so transcripts do not
depend on the backend.
"""

from __future__ import annotations

import os
from types import ModuleType

from otlab import _pykernels

try:
    from otlab import _ckernels
except ImportError:  # pragma: no cover - depends on the build
    _ckernels = None

BACKENDS: dict[str, ModuleType] = {"python": _pykernels}
if _ckernels is not None:
    BACKENDS["cython"] = _ckernels

BACKEND = ""
transfer = _pykernels.transfer
select_top = _pykernels.select_top
ech_round = _pykernels.ech_round
splitmix_block = _pykernels.splitmix_block


def set_backend(name: str) -> None:
    """Rebind the kernel functions to backend ``name``."""
    global BACKEND, transfer, select_top, ech_round, splitmix_block
    try:
        impl = BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} unavailable; have {sorted(BACKENDS)}") from None
    BACKEND = name
    transfer = impl.transfer
    select_top = impl.select_top
    ech_round = impl.ech_round
    splitmix_block = impl.splitmix_block


def _default() -> str:
    if os.environ.get("OTLAB_PURE_PYTHON", "") not in ("", "0"):
        return "python"
    return "cython" if "cython" in BACKENDS else "python"


set_backend(_default())


def available_backends() -> tuple[str, ...]:
    return tuple(BACKENDS)
