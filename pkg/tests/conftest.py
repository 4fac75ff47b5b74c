"""
Shared fixtures
"""
import pytest

from cwlab.tools.measures import ModelParams, build_definetti
from cwlab.tools.samplers import RngStream


@pytest.fixture
def rng():
    """A fresh random stream with a fixed seed"""
    return RngStream(20240601)


@pytest.fixture(autouse=True)
def single_thread(monkeypatch):
    """Run every test serially unless it sets CWLAB_THREADS itself"""
    monkeypatch.delenv("CWLAB_THREADS", raising=False)


@pytest.fixture(scope="session")
def subcritical_mix():
    """Mixing law at n=64, beta=0.5"""
    params = ModelParams(n=64, beta=0.5)
    return params, build_definetti(params)


@pytest.fixture(scope="session")
def critical_mix():
    """Mixing law at n=400, beta=1"""
    params = ModelParams(n=400, beta=1.0)
    return params, build_definetti(params)


@pytest.fixture(scope="session")
def supercritical_mix():
    """Mixing law at n=200, beta=1.5"""
    params = ModelParams(n=200, beta=1.5)
    return params, build_definetti(params)
