import math

import pytest
from hypothesis import HealthCheck, settings

from cblelab.model import (
    BranchingSpec,
    EnvironmentSpec,
    EnvJump,
    ModelSpec,
    PointMass,
    PowerLaw,
    PureStable,
)

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

TWO_PI = 2 * math.pi


def stable_model(alpha=0.5, a_bar=1.0, b0=0.0, q0=1.0, A=0.0, y0=1.0, b1=0.0, b2=0.0,
                 beta=0.0, sigma=0.0, nu=()):
    return ModelSpec(
        BranchingSpec(b1, b2, PureStable(a_bar, alpha)),
        EnvironmentSpec(beta, sigma, tuple(nu)),
        PowerLaw(b0, q0, A),
        y0,
    )


def atom(z, rate):
    return EnvJump(rate, PointMass(z))


@pytest.fixture
def explosive():
    return stable_model(alpha=0.5, y0=10.0)


@pytest.fixture
def critical():
    return stable_model(alpha=0.5, b0=TWO_PI, q0=1.5, A=1.0)
