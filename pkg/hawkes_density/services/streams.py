"""Seed splitting for reproducible, parallel-safe random streams.

Every random draw in the package comes from a PCG64 generator seeded by
``numpy.random.SeedSequence``. A replica's streams are identified by the
spawn key ``(replica, purpose)`` under the master seed, so a replica's result
depends only on (master seed, replica index) and never on which worker ran it
or in which order.
"""
import numpy as np

GRAPH_STREAM = 0
EVENT_STREAM = 1
PILOT_STREAM = 2
TOY_STREAM = 3


def derive_seed(master_seed: int, replica: int, purpose: int) -> int:
    """64-bit seed of stream ``purpose`` of replica ``replica``."""
    sequence = np.random.SeedSequence(entropy=master_seed, spawn_key=(replica, purpose))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def replica_generator(master_seed: int, replica: int, purpose: int) -> np.random.Generator:
    return generator(derive_seed(master_seed, replica, purpose))
