"""Deterministic RNG derivation.

Every random draw in a run comes from a generator spawned off the master
seed with a structured spawn key, so any stream can be reproduced in
isolation and no component's draws perturb another's. Delay draws in
particular never depend on model state, which keeps responder sets
monotone in the wait window.

Spawn key layout: (domain, *subkeys). Simulation streams use
(domain, epoch, participant).
"""

from __future__ import annotations

import numpy as np

# Stream domains. Values are part of the trace-determinism contract:
# changing them changes every seeded run.
DOMAIN_ORDER = 0  # per-epoch sweep permutations
DOMAIN_MASK = 1  # per-epoch privacy masks
DOMAIN_DELAY = 2  # per-epoch compute delays
DOMAIN_DATA = 3  # synthetic data generation
DOMAIN_SPLIT = 4  # train/test splits and folds
DOMAIN_TWAIT = 5  # wait-window calibration draws


def spawn_rng(master_seed: int, *key: int) -> np.random.Generator:
    """Return the generator for ``key`` under ``master_seed``.

    The same (seed, key) pair always yields the same stream; distinct
    keys yield statistically independent streams.
    """
    seq = np.random.SeedSequence(entropy=master_seed, spawn_key=tuple(key))
    return np.random.default_rng(seq)
