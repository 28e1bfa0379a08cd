"""Counter-style seed derivation so every stage can be re-run in isolation."""

from __future__ import annotations

import hashlib


def derive_seed(master: int, *parts) -> int:
    """Stable 63-bit seed derived from a master seed and a stage tag."""
    payload = repr((int(master),) + parts).encode("utf-8")
    digest = hashlib.sha256(payload).digest()
    return int.from_bytes(digest[:8], "big") >> 1
