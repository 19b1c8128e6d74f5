import numpy as np
import pytest

from akcy import structure as st


def make_twisted(resolution, epsilon=0.12, profile="sin_x1_cos_y2"):
    n = len(resolution) // 2
    chart = st.build_grid(n, list(resolution))
    recipe = st.StructureRecipe(
        kind="twisted",
        generator=st.default_generator(n),
        amplitude=epsilon,
        profile=profile,
    )
    return st.twisted_structure(chart, recipe)


def make_standard(resolution):
    return st.standard_structure(st.build_grid(len(resolution) // 2, list(resolution)))


@pytest.fixture(scope="session")
def s_std12():
    return make_standard([12, 12, 12, 12])


@pytest.fixture(scope="session")
def s_tw12():
    return make_twisted([12, 12, 12, 12])


@pytest.fixture(scope="session")
def s_tw16():
    return make_twisted([16, 16, 16, 16])


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
