from typing import List

import numpy as np


def make_rng(seed: int) -> np.random.Generator:
    """
    Create the project's random generator.

    Philox is a counter-based generator, so a given seed yields the same stream on
    every platform and numpy version that ships it.

    Args:
        seed (int): Non-negative integer seed.

    Returns:
        np.random.Generator: Generator backed by ``Philox(seed)``.
    """
    return np.random.Generator(np.random.Philox(seed))


def split_seeds(seed: int, n: int) -> List[int]:
    """Derive ``n`` independent child seeds from ``seed``."""
    children = np.random.SeedSequence(seed).spawn(n)
    return [int(child.generate_state(1, dtype=np.uint64)[0]) for child in children]
