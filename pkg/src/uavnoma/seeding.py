"""Named random streams fanned out from one master seed.

Every consumer of randomness draws from its own stream so that changing,
say, the exploration policy never perturbs user mobility or fading.
"""

import numpy as np

STREAMS = {
    "placement": 0,
    "mobility": 1,
    "fading": 2,
    "cluster": 3,
    "init": 4,
    "policy": 5,
    "sampling": 6,
}


def stream(master_seed: int, name: str, *keys: int) -> np.random.Generator:
    """Return the generator for ``name`` (optionally per episode/agent via ``keys``)."""
    if name not in STREAMS:
        raise KeyError(f"unknown random stream {name!r}")
    seq = np.random.SeedSequence(int(master_seed), spawn_key=(STREAMS[name], *map(int, keys)))
    return np.random.default_rng(seq)
