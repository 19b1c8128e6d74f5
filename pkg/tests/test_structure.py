import numpy as np
import pytest

from akcy import structure as st
from akcy.errors import ConfigurationError, RecipeError

from conftest import make_twisted


def test_build_grid_rejects_surfaces():
    with pytest.raises(ConfigurationError):
        st.build_grid(1, [16, 16])


def test_build_grid_rejects_wrong_axis_count():
    with pytest.raises(ConfigurationError):
        st.build_grid(2, [16, 16, 16])


def test_build_grid_rejects_tiny_axes():
    with pytest.raises(ConfigurationError):
        st.build_grid(2, [8, 8, 8, 4])


def test_standard_structure_is_euclidean(s_std12):
    rep = st.validate_structure(s_std12)
    assert rep.passed
    assert rep.max_J_square_defect == 0.0
    assert rep.min_g_eigenvalue == pytest.approx(1.0, abs=1e-14)


def test_standard_J_squares_to_minus_identity():
    J = st.standard_J(3)
    assert np.array_equal(J @ J, -np.eye(6))


def test_omega_matrix_is_antisymmetric_and_unimodular():
    O = st.omega_matrix(2)
    assert np.array_equal(O.T, -O)
    assert np.linalg.det(O) == pytest.approx(1.0)


def test_default_generator_is_infinitesimally_symplectic():
    for n in (2, 3):
        S = st.default_generator(n)
        O = st.omega_matrix(n)
        assert np.abs(S.T @ O + O @ S).max() < 1e-14


def test_twisted_structure_passes_validation(s_tw12):
    rep = st.validate_structure(s_tw12)
    assert rep.passed
    assert rep.max_J_square_defect < 1e-12
    assert rep.max_omega_invariance_defect < 1e-12
    assert rep.min_g_eigenvalue > 0.0


def test_twisted_J_varies_in_space(s_tw12):
    J = s_tw12.J
    spread = J.reshape(J.shape[0], J.shape[1], -1)
    assert np.ptp(spread, axis=-1).max() > 1e-3


def test_J_at_matches_grid_values(s_tw12):
    chart = s_tw12.chart
    pts = chart.grid_points()[::4, ::4, ::4, ::4].reshape(-1, 4)
    J_pt = s_tw12.J_at(pts)
    full = np.broadcast_to(
        np.moveaxis(s_tw12.J, (0, 1), (-2, -1)), chart.shape + (4, 4)
    )
    ref = full[::4, ::4, ::4, ::4].reshape(-1, 4, 4)
    assert np.abs(J_pt - ref).max() < 1e-12


def test_recipe_rejects_non_symplectic_generator():
    bad = np.eye(4)
    recipe = st.StructureRecipe("twisted", bad, 0.1, "sin_x1")
    with pytest.raises(RecipeError):
        recipe.check(2)


def test_recipe_rejects_unknown_profile():
    recipe = st.StructureRecipe("twisted", st.default_generator(2), 0.1, "nope")
    with pytest.raises(RecipeError):
        recipe.check(2)


def test_zero_amplitude_twist_degenerates_to_standard():
    chart = st.build_grid(2, [12] * 4)
    recipe = st.StructureRecipe("twisted", st.default_generator(2), 0.0, "sin_x1")
    s = st.twisted_structure(chart, recipe)
    assert np.array_equal(
        np.moveaxis(s.J, (0, 1), (-2, -1)).reshape(-1, 4, 4)[0], st.standard_J(2)
    )


def test_metric_positive_definite_up_to_large_twist():
    s = make_twisted([12] * 4, epsilon=0.3)
    rep = st.validate_structure(s)
    assert rep.passed and rep.min_g_eigenvalue > 0.0


def test_diff_is_exact_on_resolved_waves(s_std12):
    chart = s_std12.chart
    x = chart.axis_coords(0)
    f = np.sin(2 * np.pi * x) + np.zeros(chart.shape)
    df = chart.diff(f, 0)
    h = chart.spacing[0]
    # centered difference of a pure wave scales by sin(2 pi h)/(2 pi h)
    factor = np.sin(2 * np.pi * h) / (2 * np.pi * h)
    expect = 2 * np.pi * factor * np.cos(2 * np.pi * x) + np.zeros(chart.shape)
    assert np.abs(df - expect).max() < 1e-12


def test_integrate_scalar_handles_broadcast_axes(s_std12):
    chart = s_std12.chart
    f = np.ones((1, 1, 1, 1))
    assert chart.integrate_scalar(f) == pytest.approx(1.0)
