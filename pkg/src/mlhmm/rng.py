"""Reproducible, coordination-free random streams.

Every random draw in this package comes from a counter-based Philox generator
whose 128-bit key is derived from the root seed and a tuple of context parts
(for example ``("sim", scenario_id, iteration, subject)``). The derivation
hashes the parts with SHA-256 and XOR-folds the root seed into the digest, so

* the same (seed, parts) always yields the same stream, on any platform;
* distinct part tuples yield statistically independent streams;
* parallel workers need no shared state or hand-offs to stay reproducible.
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["derive_seed", "substream"]


def _digest(parts) -> bytes:
    h = hashlib.sha256()
    for p in parts:
        if isinstance(p, (bool, np.bool_)):
            p = int(p)
        if isinstance(p, (int, np.integer)):
            h.update(b"i" + int(p).to_bytes(16, "little", signed=True))
        elif isinstance(p, str):
            h.update(b"s" + p.encode("utf-8"))
        else:
            raise TypeError(f"stream parts must be int or str, got {type(p)!r}")
        h.update(b"\x00")
    return h.digest()


def derive_seed(root_seed: int, *parts) -> int:
    """A 63-bit integer seed deterministically derived from (root, parts)."""
    d = _digest(parts)
    word = int.from_bytes(d[:8], "little")
    return (word ^ (int(root_seed) & 0xFFFFFFFFFFFFFFFF)) >> 1


def substream(root_seed: int, *parts) -> np.random.Generator:
    """Independent Philox generator for the given context tuple."""
    d = _digest(parts)
    w0 = int.from_bytes(d[:8], "little") ^ (int(root_seed) & 0xFFFFFFFFFFFFFFFF)
    w1 = int.from_bytes(d[8:16], "little")
    key = np.array([w0, w1], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
