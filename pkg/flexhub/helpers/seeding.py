"""
Master-seed fan-out. The order of the children is fixed: network init,
policy noise, buffer sampling, environment.
"""
from typing import NamedTuple

import numpy as np


class SeedBundle(NamedTuple):
    init: int
    noise: int
    buffer: int
    env: int


def spawn_seeds(master: int) -> SeedBundle:
    children = np.random.SeedSequence(master).spawn(len(SeedBundle._fields))
    return SeedBundle(*(int(child.generate_state(1)[0]) for child in children))
