"""
Pytest configuration and shared fixtures for heterodet tests.
"""

import os
import shutil
import tempfile
from dataclasses import replace

import numpy as np
import pytest

from models.schemas import SubspaceSpec
from services.experiments import preset
from services.signal_model import build_subspaces


def random_complex(rng, shape):
    """Standard complex normal array."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_hermitian_pd(rng, n, condition=10.0):
    """Random Hermitian PD matrix with eigenvalues spread over [1, condition]."""
    q, _ = np.linalg.qr(random_complex(rng, (n, n)))
    eigvals = np.geomspace(1.0, condition, n)
    m = (q * eigvals) @ q.conj().T
    return (m + m.conj().T) / 2


def random_hermitian(rng, n):
    """Random Hermitian matrix (not necessarily definite)."""
    a = random_complex(rng, (n, n))
    return (a + a.conj().T) / 2


@pytest.fixture
def rng():
    """Seeded generator, fresh for every test."""
    return np.random.default_rng(12345)


@pytest.fixture
def pd_factory(rng):
    """Factory for random Hermitian PD matrices."""
    def make(n, condition=10.0):
        return random_hermitian_pd(rng, n, condition)
    return make


@pytest.fixture
def default_spec():
    """N=5, p=2, t=1 as in the presets."""
    return SubspaceSpec(n=5, p=2, t=1)


@pytest.fixture
def default_subspaces(default_spec):
    """(H, B) of the default spec."""
    return build_subspaces(default_spec)


@pytest.fixture
def small_he_scenario():
    """HE preset shrunk to a handful of trials with K=100."""
    scenario = preset("HE")
    noise = replace(scenario.noise, group_sizes=(100,))
    return replace(scenario, noise=noise, trials=12, seed=7)


@pytest.fixture
def temp_out_dir():
    """Create a temporary output directory for result files."""
    out_dir = tempfile.mkdtemp(prefix="heterodet_")
    yield out_dir
    # Cleanup
    if os.path.exists(out_dir):
        shutil.rmtree(out_dir)
