import math
from pathlib import Path

import numpy as np
import pytest

from gapgeom.config import SamplingPlan
from gapgeom.normed import NormedSpace, Subspace

SAMPLES = Path(__file__).resolve().parent.parent / "samples"


@pytest.fixture
def samples_dir() -> Path:
    return SAMPLES


@pytest.fixture
def r3() -> NormedSpace:
    return NormedSpace(3)


@pytest.fixture
def r4() -> NormedSpace:
    return NormedSpace(4)


@pytest.fixture
def plan() -> SamplingPlan:
    return SamplingPlan(budget=200, refine_steps=5, seed=7)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def span():
    """span(space, v1, v2, ...) with the vectors as columns."""

    def make(space, *vectors):
        if not vectors:
            return Subspace.zero(space)
        return Subspace.span(space, np.array(vectors, dtype=float).T)

    return make


@pytest.fixture
def rotation():
    def make(n, i, j, theta):
        G = np.eye(n)
        G[i, i] = G[j, j] = math.cos(theta)
        G[i, j] = -math.sin(theta)
        G[j, i] = math.sin(theta)
        return G

    return make


@pytest.fixture
def random_subspace():
    def make(space, k, rng):
        if k == 0:
            return Subspace.zero(space)
        return Subspace.from_basis(space, rng.standard_normal((space.dim, k)))

    return make
