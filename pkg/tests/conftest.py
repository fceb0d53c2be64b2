import pytest

import sps


@pytest.fixture(scope="session")
def ball9():
    return sps.build_grid(sps.DomainSpec.ball(1.0), 9)


@pytest.fixture(scope="session")
def ball17():
    return sps.build_grid(sps.DomainSpec.ball(1.0), 17)


@pytest.fixture(scope="session")
def ball33():
    return sps.build_grid(sps.DomainSpec.ball(1.0), 33)


@pytest.fixture(scope="session")
def box8():
    # half-width 1 at resolution 8: the interior is exactly a 6^3 block,
    # the smallest box the resolution precondition admits
    return sps.build_grid(sps.DomainSpec.box((1.0, 1.0, 1.0)), 8)


def random_field(grid, rng, scale=1.0):
    return sps.ScalarField(grid, scale * rng.standard_normal(grid.n_interior))
