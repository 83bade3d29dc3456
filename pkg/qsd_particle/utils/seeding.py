"""
Seeding Utilities
=================

Reproducibility helpers.

Responsibilities:
- Deterministic derivation of independent random streams from a
  (seed, path..., replica) tuple
- SHA-256 digests of canonical experiment configs, so artifacts can be
  matched with the config that produced them

Stream construction (documented, part of the reproducibility contract):
    SeedSequence(entropy=seed, spawn_key=(*path, replica_index))
    -> PCG64 bit generator -> numpy Generator
Distinct spawn keys give statistically independent streams; nothing
depends on wall-clock time or process identity.
"""

import hashlib
import json

import numpy as np

from qsd_particle.errors import UsageError

SEED_LIMIT = 2 ** 64

# Stream namespaces, the first element of every spawn key
SIMULATE_STREAMS = 1
CONVERGENCE_STREAMS = 2
UNIFORM_STREAMS = 3
QSD_STREAMS = 4
BOOTSTRAP_STREAMS = 99


# ============================================================
# RANDOM STREAMS
# ============================================================

def derive_rng_streams(seed: int, replica_index: int, *path: int) -> np.random.Generator:
    """
    Independent generator for one replica.

    Args:
        seed: 64-bit master seed
        replica_index: Replica number (last element of the spawn key)
        *path: Optional nonnegative integers namespacing the stream, e.g.
            (CONVERGENCE_STREAMS, N)

    Returns:
        numpy Generator backed by PCG64
    """
    if not 0 <= seed < SEED_LIMIT:
        raise UsageError(f"seed must be a 64-bit unsigned integer, got {seed}")
    key = tuple(int(k) for k in path) + (int(replica_index),)
    if any(k < 0 for k in key):
        raise UsageError(f"stream path must be nonnegative, got {key}")
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=key)
    return np.random.Generator(np.random.PCG64(sequence))


# ============================================================
# CONFIG SIGNATURES
# ============================================================

def canonical_json(data) -> str:
    """Key-sorted compact JSON; equal configs give equal strings."""
    return json.dumps(data, sort_keys=True, separators=(',', ':'))


def config_signature(config: dict) -> str:
    """
    SHA-256 digest of the canonical config.

    Returns:
        Hex-encoded digest; equal configs give equal digests
    """
    return hashlib.sha256(canonical_json(config).encode()).hexdigest()
