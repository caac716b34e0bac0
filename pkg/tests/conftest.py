# conftest.py – shared contexts, providers and seeded states
from __future__ import annotations

import pytest
from hypothesis import HealthCheck, settings

from lax import random_state, rank1_state
from rmatrix import belavin_provider, scalar_provider
from specfun import elliptic, rational, trigonometric

settings.register_profile("laxtops", derandomize=True, deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("laxtops")

ETA = 0.37 + 0.11j


@pytest.fixture(scope="session")
def rat():
    return rational()


@pytest.fixture(scope="session")
def trig():
    return trigonometric()


@pytest.fixture(scope="session")
def ell():
    return elliptic(1j)


@pytest.fixture(scope="session", params=["rational", "trigonometric", "elliptic"])
def ctx(request, rat, trig, ell):
    return {"rational": rat, "trigonometric": trig, "elliptic": ell}[request.param]


@pytest.fixture(scope="session")
def scalar(ctx):
    return scalar_provider(ctx)


@pytest.fixture(scope="session")
def belavin2(ell):
    return belavin_provider(ell, 2)


@pytest.fixture
def state_n1(ctx):
    return random_state(1, 3, ETA, seed=11, ctx=ctx)


@pytest.fixture
def state_n2(ell):
    return random_state(2, 2, ETA, seed=5, ctx=ell)


@pytest.fixture
def rank1_n2(ell):
    return rank1_state(2, 3, ETA, seed=3, ctx=ell)
