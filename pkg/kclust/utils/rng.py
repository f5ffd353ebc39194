import numpy as np


def derive_seed(master: int, *keys: int) -> int:
    """
    Derive an independent 63-bit seed from a master seed and a key path, e.g.
    ``derive_seed(seed, trial)``. Equal inputs always give equal seeds.

    Args:
        master: Non-negative master seed.
        keys: Non-negative integers naming the stream (trial index, ...).

    Returns:
        A non-negative integer usable with numpy.random.default_rng.
    """
    sequence = np.random.SeedSequence(entropy=int(master), spawn_key=tuple(int(k) for k in keys))
    state = sequence.generate_state(2, dtype=np.uint32)
    return int((int(state[0]) << 31) ^ int(state[1]))


def rng_for(master: int, *keys: int) -> np.random.Generator:
    """Generator seeded with derive_seed(master, *keys)."""
    return np.random.default_rng(derive_seed(master, *keys))
