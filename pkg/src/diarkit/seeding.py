"""Deterministic, stateless randomness derived from BLAKE2b digests.

Every draw is a pure function of its key tuple, so generated corpora are
stable across runs, platforms, and Python versions, and extending a config
(more utterances, more conversations) never perturbs earlier draws.
"""

from __future__ import annotations

import hashlib

__all__ = ["stable_hash64", "unit_uniform", "uniform", "pick_index", "shuffled"]

_SCALE = float(2**64)


def _digest(parts: tuple) -> bytes:
    # Netstring-style framing so ("ab", "c") and ("a", "bc") never collide.
    h = hashlib.blake2b(digest_size=8)
    for part in parts:
        if isinstance(part, bool) or not isinstance(part, (int, str)):
            raise TypeError(f"unsupported key part {part!r}")
        raw = str(part).encode("utf-8")
        h.update(f"{type(part).__name__[0]}{len(raw)}:".encode("ascii"))
        h.update(raw)
    return h.digest()


def stable_hash64(*parts: int | str) -> int:
    """Map a key tuple to a stable unsigned 64-bit integer."""
    return int.from_bytes(_digest(parts), "big")


def unit_uniform(*parts: int | str) -> float:
    """Uniform draw in [0, 1) keyed entirely by the given parts."""
    return stable_hash64(*parts) / _SCALE


def uniform(lo: float, hi: float, *parts: int | str) -> float:
    """Uniform draw in [lo, hi) keyed by the given parts."""
    return lo + (hi - lo) * unit_uniform(*parts)


def pick_index(n: int, *parts: int | str) -> int:
    """Uniform index in range(n)."""
    if n <= 0:
        raise ValueError("cannot pick from an empty range")
    return int(unit_uniform(*parts) * n)


def shuffled(items: list, *parts: int | str) -> list:
    """Fisher-Yates shuffle driven by keyed draws; input is not mutated."""
    out = list(items)
    for i in range(len(out) - 1, 0, -1):
        j = pick_index(i + 1, *parts, i)
        out[i], out[j] = out[j], out[i]
    return out
