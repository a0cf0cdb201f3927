import numpy as np
import pytest

import gbslab as gl
from gbslab.config import ExperimentConfig
from gbslab.experiment import build_gbs_state
from gbslab.gaussian import SqueezerSpec


@pytest.fixture(scope="session")
def twelve_mode_config() -> ExperimentConfig:
    """Three squeezed pairs, seeded Haar unitary, uniform 75% efficiency."""
    return ExperimentConfig(
        modes=12,
        squeezers=(
            SqueezerSpec(0, 1, 0.365),
            SqueezerSpec(2, 3, 0.363),
            SqueezerSpec(4, 5, 0.418),
        ),
        unitary_seed=12,
        unitary_file=None,
        efficiency=(0.75,) * 12,
        sector=3,
        samples=20000,
        seed=7,
    )


@pytest.fixture(scope="session")
def twelve_mode_state(twelve_mode_config) -> gl.GaussianState:
    return build_gbs_state(twelve_mode_config)


@pytest.fixture(scope="session")
def twelve_mode_distribution(twelve_mode_state) -> gl.ClickDistribution:
    return gl.exact_distribution(twelve_mode_state)


def random_symmetric_complex(n: int, rng: np.random.Generator) -> np.ndarray:
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (a + a.T) / 2


def random_graph(v: int, rng: np.random.Generator) -> gl.WeightedGraph:
    w = random_symmetric_complex(v, rng)
    np.fill_diagonal(w, 0)
    return gl.WeightedGraph(v, w)
