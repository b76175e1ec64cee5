import numpy as np
import pytest

from varfrac import GsVariant, OrderField, WeightSpec, assemble, build_mesh


@pytest.fixture(scope="session")
def step_field():
    return OrderField.step([([(0.0, 0.5)], 0.3), ([(0.5, 1.0)], 0.7)])


@pytest.fixture(scope="session")
def half_system():
    """s = 1/2, G = 1 on a 64 x 64 graded mesh with tau = 6."""
    mesh = build_mesh(1, 65, 65, 6.0, 2.0)
    return assemble(mesh, WeightSpec(OrderField.constant(0.5), GsVariant.POINTWISE))


@pytest.fixture(scope="session")
def small_step_system(step_field):
    mesh = build_mesh(1, 17, 17, 1.0, 2.0)
    return assemble(mesh, WeightSpec(step_field, GsVariant.POINTWISE))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
