import math

import numpy as np
import pytest

from kirchhoff.branches import solutions
from kirchhoff.constants import compute_thresholds
from kirchhoff.ground_state import closed_form_1d, find_ground_state
from kirchhoff.nonauto1d import (
    CoefficientSpec, Grid1D, assemble, branch_initial_guess, condition_checkers,
    energy_comparison, gradient_check, minimize_m1, nehari_project, radial_condition_integral,
)
from kirchhoff.fibering import on_nehari
from kirchhoff.params import DomainError, PreconditionError, ProblemParams

F = CoefficientSpec(1.0, "gaussian", 0.2, 1.0)


@pytest.fixture(scope="module")
def setup():
    base = F.params(3.0)
    gs = closed_form_1d(3.0)
    lam = compute_thresholds(base, gs).lambda_
    return base.with_a(lam / 2), gs


@pytest.fixture(scope="module")
def solved(setup):
    params, gs = setup
    grid = Grid1D(30.0, 3000)
    return minimize_m1(params, F, grid, S_p=gs.S_p), grid


def test_coefficient_validation():
    with pytest.raises(DomainError):
        CoefficientSpec(1.0, "triangle")
    with pytest.raises(DomainError):
        CoefficientSpec(1.0, "gaussian", eps=-1.5)
    assert F.f_max == pytest.approx(1.2) and F.f_min == 1.0
    assert F.boundary_gap(30.0) < 1e-300


def test_spline_derivative_matches_fd():
    f = CoefficientSpec(1.0, "spline", 0.3, 2.0, center=0.5)
    x = np.linspace(-3, 3, 101)
    h = 1e-6
    fd = (f.f(x + h) - f.f(x - h)) / (2 * h)
    assert np.max(np.abs(fd - f.df(x))) < 1e-6


def test_gradient_matches_central_differences(setup):
    params, _ = setup
    assert gradient_check(params, F, Grid1D(30.0, 600), n_samples=10, seed=1) < 1e-6


def test_projection_lands_on_nehari(setup):
    params, _ = setup
    grid = Grid1D(30.0, 800)
    fvals = F.f(grid.interior)
    u, _, _ = branch_initial_guess(params, grid)
    t = nehari_project(0.3 * u, grid, params, fvals)
    _, _, data = assemble(0.3 * t * u, grid, params, fvals)
    assert on_nehari(data, params, tol=1e-10)


def test_projection_without_root_raises():
    params = F.params(3.0, a=1e3)
    grid = Grid1D(30.0, 400)
    u, _, _ = branch_initial_guess(F.params(3.0), grid)
    with pytest.raises(PreconditionError) as exc:
        nehari_project(u, grid, params, F.f(grid.interior))
    assert exc.value.report.n_roots == 0


def test_minimiser_converges_with_bounds(solved):
    sol, _ = solved
    assert sol.converged and sol.kkt_residual < 1e-8
    assert sol.checks["norm_ok"] and sol.checks["energy_ok"]
    assert sol.checks["pohozaev_residual"] < 1e-4
    assert np.all(sol.u >= 0)


def test_energy_below_lemma_level(solved, setup):
    params, _ = setup
    sol, grid = solved
    m3, below = energy_comparison(sol, params, F, grid)
    assert below and m3.ordering_ok and m3.signs_ok


def test_constant_f_recovers_branch_solution():
    f = CoefficientSpec(1.0, "constant")
    params = f.params(3.0, a=1e-3)
    exact = solutions(params, closed_form_1d(3.0))[0]
    e = [minimize_m1(params, f, Grid1D(30.0, n)).energy for n in (3000, 6000)]
    # second-order scheme: Richardson extrapolation removes the h^2 term
    assert (4 * e[1] - e[0]) / 3 == pytest.approx(exact.energy, rel=1e-8)


def test_conditions_report():
    params = F.params(3.0)
    rep = condition_checkers(F, params, grid=Grid1D(30.0, 600))
    assert rep["D5_ok"] and rep["D4_ok"]
    assert rep["D2_boundary_gap"] < 1e-12


def test_radial_condition_integral_sign():
    gs = find_ground_state(3, 3.0)
    bump = lambda r: 1.0 + 0.1 * np.exp(-r * r)
    assert radial_condition_integral(3, 3.0, bump, 1.0, gs) > 0
    assert radial_condition_integral(3, 3.0, lambda r: np.ones_like(r), 1.0, gs) == 0.0


def test_only_one_dimension():
    with pytest.raises(DomainError):
        minimize_m1(ProblemParams(2, 3.0, a=1e-3), F)


def test_outputs(solved, tmp_path):
    sol, _ = solved
    sol.write_csv(tmp_path / "u.csv")
    sol.write_history(tmp_path / "h.csv")
    assert (tmp_path / "u.csv").read_text().startswith("x,u,f\n")
    assert (tmp_path / "h.csv").read_text().startswith("iter,energy,kkt_residual\n")
