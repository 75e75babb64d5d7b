import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kirchhoff.constants import (
    a_bar, a_crit_high_dim, a_star_bracket, a_star_prefactor, compute_thresholds, d_of_p,
    d_p_margins, dilation_family, filtration_margin, gn_quotient, gn_sharp_constant,
    inflection_pair, inflection_residuals, lambda0, lambda_, lower_bound_radii,
    nonexistence_factor, nonexistence_threshold, theorem_t5_constants,
)
from kirchhoff.fibering import FunctionData, tangency_coupling
from kirchhoff.ground_state import find_ground_state
from kirchhoff.params import DomainError, PreconditionError, ProblemParams
from strategies import function_data

S3 = 2 ** (1 / 3)  # S_p with S_p^p = 2 at p = 3


def test_d_of_p_exact_rational():
    # ((4 - 5/2) / 2)^(1 / (1/2)) = (3/4)^2
    assert Fraction(d_of_p(2.5)).limit_denominator(1000) == Fraction(9, 16)
    assert d_of_p(3.0) == 0.5


def test_lambda_low_dim_oracle():
    pr = ProblemParams(3, 3.0)
    assert lambda_(pr, S3) == pytest.approx(1 / 288, rel=1e-14)
    assert lambda0(pr, S3) == pytest.approx(0.125, rel=1e-14)


def test_t5_constants_oracle():
    A0, A0b, _ = theorem_t5_constants(ProblemParams(3, 3.0), S3, 1.0)
    assert A0 == pytest.approx(24.0, rel=1e-14)
    assert A0b == pytest.approx(9 / 64, rel=1e-14)


def test_a_crit_oracle():
    assert a_crit_high_dim(5, 1.0, 1.0) == pytest.approx(2 * 3**-1.5, rel=1e-14)
    assert a_crit_high_dim(5, 1.0, 1.0) == pytest.approx(0.3849, abs=1e-4)
    assert a_crit_high_dim(6, 1.0, 1.0) == pytest.approx(0.25, rel=1e-14)
    with pytest.raises(DomainError):
        a_crit_high_dim(4, 1.0, 1.0)


def test_d4_violation_reported():
    pr = ProblemParams(3, 3.0, f_max=2.5)
    with pytest.raises(PreconditionError):
        lambda0(pr, S3)


@pytest.mark.parametrize("p", np.linspace(2.01, 3.99, 25))
def test_margins_positive(p):
    m1, m2, m3 = d_p_margins(p)
    assert m1 >= 0 and m2 > 0 and m3 > 0
    assert filtration_margin(p) > 0


def test_prefactor_equals_tangency_constant():
    for p in (2.3, 3.0, 3.7):
        data = FunctionData.from_integrals(1.3, 0.7, 2.1)
        A = a_bar(data.dir_sq, data.h1b_sq, data.fp, p)
        assert tangency_coupling(data, p) == pytest.approx(a_star_prefactor(p) * A, rel=1e-13)


@settings(max_examples=100, deadline=None)
@given(function_data(b=1.0), st.floats(2.2, 3.8))
def test_inflection_pair_is_double_root(dp, p):
    data, _ = dp
    pr = ProblemParams(3, p)
    r1, r2 = inflection_residuals(data, pr)
    assert r1 < 1e-10 and r2 < 1e-10
    _, a_u = inflection_pair(data, pr)
    A = a_bar(data.dir_sq, data.h1b_sq, data.fp, p)
    assert a_u / (a_star_prefactor(p) * A) == pytest.approx(nonexistence_factor(p), rel=1e-12)


@pytest.mark.parametrize("N,p", [(5, 2.5), (5, 3.0), (6, 2.25), (6, 2.75)])
def test_dilation_maximiser_closed_form(N, p):
    gs = find_ground_state(N, p)
    br = a_star_bracket(ProblemParams(N, p), gs)
    x = (4 - (N - 2) * (p - 2)) / ((N - 4) * (p - 2))
    lam = math.sqrt(x * gs.G / gs.M)
    assert br.lam_opt == pytest.approx(lam, rel=1e-5)
    assert br.lower <= br.upper * (1 + 1e-12)
    d, h, fp = dilation_family(gs, lam, 1.0)
    assert br.lower == pytest.approx(a_star_prefactor(p) * a_bar(d, h, fp, p), rel=1e-10)


def test_dilation_oracle_dense_scan(gs5):
    br = a_star_bracket(ProblemParams(5, 2.5), gs5)
    lams = np.geomspace(0.01, 100, 4001)
    vals = [a_bar(*dilation_family(gs5, l, 1.0), 2.5) for l in lams]
    assert a_star_prefactor(2.5) * max(vals) <= br.lower * (1 + 1e-12)
    assert a_star_prefactor(2.5) * max(vals) == pytest.approx(br.lower, rel=1e-5)


def test_n4_bracket_collapses(gs4):
    br = a_star_bracket(ProblemParams(4, 3.0), gs4)
    assert br.lower == pytest.approx(br.upper, rel=1e-9)
    assert br.lam_opt == math.inf


def test_low_dim_bracket_undefined(gs3):
    with pytest.raises(DomainError):
        a_star_bracket(ProblemParams(3, 3.0), gs3)


def test_gn_quotient_scale_invariant(gs5):
    N, p = 5, 2.5
    q0 = gn_quotient(gs5.G, gs5.M, gs5.P, N, p)
    s, l = 1.7, 0.6
    q1 = gn_quotient(s * s * l ** (N - 2) * gs5.G, s * s * l**N * gs5.M, s**p * l**N * gs5.P, N, p)
    assert q1 == pytest.approx(q0, rel=1e-13)
    assert gn_sharp_constant(gs5) ** p == pytest.approx(q0, rel=1e-13)


def test_nonexistence_threshold_scales_bracket():
    lo, hi = nonexistence_threshold((1.0, 2.0), 3.0)
    assert (lo, hi) == pytest.approx((9 / 8, 9 / 4))
    assert nonexistence_factor(3.0) > 1


@pytest.mark.parametrize("N,p", [(5, 2.5), (6, 2.25)])
def test_b_scaling_of_thresholds(N, p):
    gs = find_ground_state(N, p)
    t1 = compute_thresholds(ProblemParams(N, p), gs)
    t4 = compute_thresholds(ProblemParams(N, p, b=4.0), gs)
    s = 4.0 ** ((4 - N) / 2)
    for k in ("a_star_lower", "a_star_upper", "nonexist_upper", "lambda_", "A0_bar", "A0_star"):
        assert getattr(t4, k) == pytest.approx(s * getattr(t1, k), rel=1e-12), k
    # fold coupling matches the b-scaled root count directly
    assert t4.a_crit == pytest.approx(s * t1.a_crit, rel=1e-12)


@pytest.mark.parametrize("a", [1e-7, 1e-5, 1e-3])
def test_lower_bound_radii_enclose_negative_energy(gs5, a):
    N, p = 5, 2.5
    pr = ProblemParams(N, p, a=a)
    r_hat, R_a, R_hat = lower_bound_radii(pr, gs5.S_p, gn_sharp_constant(gs5))
    assert 0 < r_hat < R_hat and R_a > 0
    # J > 0 outside the annulus on amplitude/dilation copies of w0
    for lam in np.geomspace(1e-2, 1e2, 41):
        for s in np.geomspace(1e-4, 1e4, 81):
            d = s * s * lam ** (N - 2) * gs5.G
            m = s * s * lam**N * gs5.M
            fp = s**p * lam**N * gs5.P
            n2 = d + m
            if n2 < r_hat**2 or n2 >= R_hat**2:
                assert a / 4 * d * d + 0.5 * n2 - fp / p > 0


def test_lower_bound_radius_decreases_in_a(gs5):
    C = gn_sharp_constant(gs5)
    R = [lower_bound_radii(ProblemParams(5, 2.5, a=a), gs5.S_p, C)[1] for a in (1e-4, 1e-3, 1e-2)]
    assert R[0] > R[1] > R[2]


def test_lower_bound_radii_domain(gs5):
    pr = ProblemParams(5, 2.5, a=1e-6)
    with pytest.raises(DomainError):
        lower_bound_radii(pr, gs5.S_p, 1.0, beta=100.0)
    with pytest.raises(DomainError):
        lower_bound_radii(pr.with_a(0.0), gs5.S_p, 1.0)
    with pytest.raises(DomainError):
        lower_bound_radii(ProblemParams(4, 3.0, a=1.0), 1.0, 1.0)


def test_threshold_set_contents(gs5):
    ts = compute_thresholds(ProblemParams(5, 2.5), gs5)
    vals = ts.values()
    assert ts.lambda_ <= ts.a_star_lower
    assert ts.nonexist_lower > ts.a_star_lower
    assert set(vals) <= set(ts.as_dict()["provenance"])
