import numpy as np
import pytest

from romes_closure.problems import LinearDiffusion2D, NonlinearReaction2D


@pytest.fixture(scope='session')
def linear_problem():
    return LinearDiffusion2D(m=6)


@pytest.fixture(scope='session')
def nonlinear_problem():
    return NonlinearReaction2D(m=6)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
