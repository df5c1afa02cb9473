"""Kernel backend selection.

The compiled extension is preferred; the numpy fallback is used when it is
missing or when ``DISKTESS_FORCE_FALLBACK`` is set (handy for parity tests
and benchmarks).
"""

from __future__ import annotations

import os

if os.environ.get("DISKTESS_FORCE_FALLBACK"):
    from . import fallback as _impl

    BACKEND = "fallback"
else:
    try:
        from . import _core as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        from . import fallback as _impl

        BACKEND = "fallback"

jm_nearest_field = _impl.jm_nearest_field
union_disk_cover_count = _impl.union_disk_cover_count
wr_birth_death_chain = _impl.wr_birth_death_chain
clipped_length_in_disk = _impl.clipped_length_in_disk

__all__ = [
    "BACKEND",
    "jm_nearest_field",
    "union_disk_cover_count",
    "wr_birth_death_chain",
    "clipped_length_in_disk",
]
