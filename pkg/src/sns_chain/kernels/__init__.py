"""Hot loops: the Euler-Maruyama integrator and the commutator double sums.

The compiled extension ``_core`` is used when it imports; otherwise the numpy
fallback in ``_pure`` takes over. Setting ``SNS_CHAIN_PURE=1`` forces the
fallback. ``BACKEND`` names the active one.
"""
import os

from . import _pure

_NAMES = ("em_advance", "em_accumulate", "em_flow",
          "comm_antisym", "comm_c_antisym", "comm_doubly_antisym", "comm_first_row")

try:
    if os.environ.get("SNS_CHAIN_PURE", "") not in ("", "0"):
        raise ImportError("pure backend forced by SNS_CHAIN_PURE")
    from . import _core as _impl
    BACKEND = "compiled"
except ImportError:
    _impl = _pure
    BACKEND = "pure"

em_advance = _impl.em_advance
em_accumulate = _impl.em_accumulate
em_flow = _impl.em_flow
comm_antisym = _impl.comm_antisym
comm_c_antisym = _impl.comm_c_antisym
comm_doubly_antisym = _impl.comm_doubly_antisym
comm_first_row = _impl.comm_first_row


def backends():
    """Map backend name to module for every backend importable here."""
    out = {"pure": _pure}
    try:
        from . import _core
    except ImportError:
        pass
    else:
        out["compiled"] = _core
    return out


__all__ = ["BACKEND", "backends", *_NAMES]
