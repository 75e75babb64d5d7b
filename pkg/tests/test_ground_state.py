import math

import numpy as np
import pytest

from kirchhoff.ground_state import (
    Shot, closed_form_1d, find_ground_state, integrals, shoot, soliton_residual, sphere_area,
)
from kirchhoff.params import DomainError

# independent oracle: scipy solve_bvp on [0, 30] with a Bessel-tail Robin condition,
# integrals by Simpson on 2e5 nodes (values frozen)
BVP_ORACLE = {
    (3, 3.0): (4.191682954435699, 130.98071014873608, 130.98071014873832, 261.96142029747506),
    (2, 3.5): (2.2880282468896116, 13.322547892490496, 17.763397190026666, 31.0859450825173),
    (5, 2.5): (14.772195930024461, 24727.759697240563, 24727.759697239355, 49455.51939447999),
}


def test_sphere_area():
    assert sphere_area(1) == pytest.approx(2.0)
    assert sphere_area(2) == pytest.approx(2 * math.pi)
    assert sphere_area(3) == pytest.approx(4 * math.pi)


def test_closed_form_soliton_integrals():
    # p = 3: w = 1.5 sech^2(x/2); int w^2 = 6, int w'^2 = 1.2, int w^3 = 7.2
    gs = closed_form_1d(3.0)
    assert gs.w0 == 1.5
    assert gs.M == pytest.approx(6.0, rel=1e-13)
    assert gs.G == pytest.approx(1.2, rel=1e-13)
    assert gs.P == pytest.approx(7.2, rel=1e-13)


@pytest.mark.parametrize("p", [2.25, 2.5, 3.0, 3.5, 3.9])
def test_closed_form_solves_ode(p):
    x = np.linspace(0, 20, 2001)
    w0 = (p / 2) ** (1 / (p - 2))
    assert np.max(np.abs(soliton_residual(p, 1.0, x))) <= 1e-12 * max(1.0, w0 ** (p - 1))


@pytest.mark.parametrize("p", [2.5, 3.5, 3.9])
def test_shooting_matches_closed_form_1d(p):
    exact = closed_form_1d(p)
    gs = find_ground_state(1, p)
    assert gs.w0 == pytest.approx(exact.w0, rel=1e-9)
    for k in ("G", "M", "P"):
        assert getattr(gs, k) == pytest.approx(getattr(exact, k), rel=1e-7)


@pytest.mark.parametrize("key", list(BVP_ORACLE))
def test_matches_bvp_oracle(key):
    w0, G, M, P = BVP_ORACLE[key]
    gs = find_ground_state(*key)
    assert gs.w0 == pytest.approx(w0, rel=1e-9)
    assert gs.G == pytest.approx(G, rel=1e-8)
    assert gs.M == pytest.approx(M, rel=1e-8)
    assert gs.P == pytest.approx(P, rel=1e-8)


@pytest.mark.parametrize("N,p", [(2, 3.0), (3, 3.5), (4, 3.5), (6, 2.25)])
def test_identities(N, p):
    gs = find_ground_state(N, p)
    assert gs.nehari_residual() < 1e-8
    assert gs.sobolev_residual() < 1e-12
    assert gs.pohozaev_residual() < 1e-8


def test_rescaling_in_f_inf():
    g1 = find_ground_state(3, 3.0)
    g2 = find_ground_state(3, 3.0, f_inf=2.0)
    assert g2.w0 == pytest.approx(g1.w0 / 2, rel=1e-14)
    assert g2.nehari_residual() < 1e-8
    # S_p does not depend on f_inf
    assert g2.S_p == pytest.approx(g1.S_p, rel=1e-12)


def test_shot_classification():
    w0 = find_ground_state(3, 3.0).w0
    assert shoot(3, 3.0, 1.0, w0 * 1.01).outcome is Shot.CROSSES
    assert shoot(3, 3.0, 1.0, w0 * 0.99).outcome is Shot.DIVERGES
    # at or below the rest state the shot rises immediately
    assert shoot(3, 3.0, 1.0, 0.5).outcome is Shot.DIVERGES


def test_determinism():
    g1 = find_ground_state(2, 3.0)
    g2 = find_ground_state(2, 3.0)
    assert (g1.w0, g1.G, g1.M, g1.P) == (g2.w0, g2.G, g2.M, g2.P)


def test_profile_decays_and_integrals_consistent(gs3):
    pr = gs3.profile
    assert np.all(pr.values >= 0)
    assert pr.values[-1] < 1e-6 * gs3.w0
    G, M, P, err = integrals(pr, 3, 3.0)
    assert (G, M, P) == pytest.approx((gs3.G, gs3.M, gs3.P), rel=1e-12)
    assert err < 1e-8


@pytest.mark.parametrize("N,p", [(3, 6.0), (4, 4.0), (1, 2.0), (5, 3.5)])
def test_exponent_domain(N, p):
    with pytest.raises(DomainError):
        find_ground_state(N, p)


def test_negative_amplitude_rejected():
    with pytest.raises(DomainError):
        shoot(3, 3.0, 1.0, -1.0)


@pytest.mark.parametrize("p", [2.5, 3.5])
def test_beta_integrals_against_quadrature(p):
    from scipy.integrate import quad

    A = (p / 2) ** (1 / (p - 2))
    q, bt = 2 / (p - 2), (p - 2) / 2
    w = lambda x: A / math.cosh(bt * x) ** q
    dw = lambda x: -w(x) * math.tanh(bt * x)
    gs = closed_form_1d(p)
    assert gs.M == pytest.approx(2 * quad(lambda x: w(x) ** 2, 0, 200, limit=200)[0], rel=1e-10)
    assert gs.G == pytest.approx(2 * quad(lambda x: dw(x) ** 2, 0, 200, limit=200)[0], rel=1e-10)
    assert gs.P == pytest.approx(2 * quad(lambda x: w(x) ** p, 0, 200, limit=200)[0], rel=1e-10)
