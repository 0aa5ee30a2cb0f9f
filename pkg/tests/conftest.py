import numpy as np
import pytest

from ds_consensus.dst import BodyOfEvidence, Frame


@pytest.fixture
def rng():
    return np.random.default_rng(20260808)


def random_general_boe(frame: Frame, rng) -> BodyOfEvidence:
    """Strictly positive mass on every non-empty subset."""
    m = np.zeros(frame.n_subsets)
    m[1:] = rng.gamma(shape=1.0, size=frame.n_subsets - 1) + 1e-6
    m /= m.sum()
    return BodyOfEvidence(frame, m)


def random_bayesian_boe(frame: Frame, rng) -> BodyOfEvidence:
    m = np.zeros(frame.n_subsets)
    draw = rng.gamma(shape=1.0, size=frame.size) + 1e-6
    draw /= draw.sum()
    for p in range(frame.size):
        m[1 << p] = draw[p]
    return BodyOfEvidence(frame, m)


def random_dirichlet_boe(frame: Frame, rng) -> BodyOfEvidence:
    m = np.zeros(frame.n_subsets)
    draw = rng.gamma(shape=1.0, size=frame.size + 1) + 1e-6
    draw /= draw.sum()
    for p in range(frame.size):
        m[1 << p] = draw[p]
    m[frame.full_set] = draw[frame.size]
    return BodyOfEvidence(frame, m)
