""" Schedules for iterating through a range of values """
import numpy as np


def linear(start, end, steps):
    """Linear schedule from start to end in steps"""
    return np.linspace(start, end, steps)


def offsets(base, deltas):
    """Shift a base value by each delta, e.g. dual dimensions n + {2, 8, 14}"""
    return [int(base) + int(d) for d in deltas]
