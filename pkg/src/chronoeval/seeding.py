"""Deterministic seed derivation.

All randomness in an experiment flows from one base seed; every randomized
task (plan construction, per-element training) derives its own child seed by
hashing the base seed together with the task coordinates.  Results are
therefore independent of scheduling and parallelism.
"""

from __future__ import annotations

import hashlib


def derive_seed(*parts: object) -> int:
    """Stable 63-bit seed from a tuple of ints/strings."""
    key = "\x1f".join(repr(p) for p in parts)
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") >> 1
