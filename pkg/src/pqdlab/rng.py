"""Counter-based random streams keyed by ``(master_seed, path_index, component)``.

Each path and each latent component of a sampler owns a Philox generator whose
key is derived from the triple through ``SeedSequence``. Nothing is shared
between streams, so the numbers a path sees never depend on how many other
paths exist or on the order in which workers run them.
"""
from __future__ import annotations

import hashlib

import numpy as np

from .core_types import StreamId

# latent component labels; fixed forever, changing one changes every golden file
COMPONENT = {
    "marginal": 0,
    "common": 1,
    "idiosyncratic": 2,
    "flip": 3,
    "error_eps": 4,
    "error_delta": 5,
    "design": 6,
    "bootstrap": 7,
    "pairs": 8,
    "law_table": 9,
}

_MASK64 = (1 << 64) - 1


def substream(stream, component) -> np.random.Generator:
    """Generator for one latent component of one path.

    Parameters
    ----------
    stream : StreamId or tuple
        ``(master_seed, path_index)``; both are reduced modulo 2**64.
    component : str or int
        Name from :data:`COMPONENT` or a raw non-negative integer.
    """
    seed, index = StreamId(*stream)
    comp = COMPONENT[component] if isinstance(component, str) else int(component)
    ss = np.random.SeedSequence(entropy=int(seed) & _MASK64, spawn_key=(int(index) & _MASK64, comp))
    return np.random.Generator(np.random.Philox(ss))


def label_seed(*parts) -> int:
    """Stable 64-bit integer from arbitrary printable parts (for derived streams)."""
    text = "\x1f".join(str(p) for p in parts).encode()
    return int.from_bytes(hashlib.sha256(text).digest()[:8], "little")
