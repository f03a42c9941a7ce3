import numpy as np
import pytest

from tovlab.eos import HybridEos, Polytrope
from tovlab.tov import solve_steady_state


@pytest.fixture(scope="session")
def hybrid():
    """Causal default model: gamma = 5/3 core, linear branch with cs2 = 1."""
    return HybridEos(k=1.0, gamma=5.0 / 3.0)


@pytest.fixture(scope="session")
def soft_polytrope():
    return Polytrope(k=1.0, gamma=1.5)


@pytest.fixture(scope="session")
def star_half(hybrid):
    """Cached generic equilibrium on the stable branch (kappa = 0.5)."""
    return solve_steady_state(hybrid, 0.5)


@pytest.fixture(scope="session")
def star_deep(hybrid):
    """Cached equilibrium past the first mass maximum (kappa = 2)."""
    return solve_steady_state(hybrid, 2.0)
