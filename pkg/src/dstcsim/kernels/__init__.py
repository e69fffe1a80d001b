"""Hot-kernel backend selection.

The compiled extension is preferred when it imported cleanly; the pure-numpy
fallback is always available.  Set the environment variable
``DSTCSIM_KERNELS=python`` (or ``compiled``) before import to force a
backend, or call :func:`set_backend` at runtime.  Both backends are
bit-compatible given identical noise inputs.
"""

import os

from . import _pykernels

_BACKENDS = {"python": _pykernels}
try:
    from . import _ckernels

    _BACKENDS["compiled"] = _ckernels
except ImportError:
    _ckernels = None

rx_rake = None
rx_mmse = None
tx_rake = None
_active = None


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


def get_backend() -> str:
    return _active


def set_backend(name: str) -> None:
    global rx_rake, rx_mmse, tx_rake, _active
    if name not in _BACKENDS:
        raise ValueError(f"unknown kernel backend {name!r}; available: {available_backends()}")
    module = _BACKENDS[name]
    rx_rake = module.rx_rake
    rx_mmse = module.rx_mmse
    tx_rake = module.tx_rake
    _active = name


_requested = os.environ.get("DSTCSIM_KERNELS", "auto")
if _requested == "auto":
    set_backend("compiled" if "compiled" in _BACKENDS else "python")
else:
    set_backend(_requested)
