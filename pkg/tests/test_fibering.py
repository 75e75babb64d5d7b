import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from kirchhoff.fibering import (
    FunctionData, critical_points, d_of_p, fiber_derivatives, fiber_value, filtration_radii,
    filtration_split, g6_hypothesis, lemma_m3_roots, nehari_class, nehari_forms, on_nehari,
    sweep, t_f, tangency_coupling, tangency_scale,
)
from kirchhoff.params import DomainError, PreconditionError, ProblemParams
from strategies import fibering_case


def _fd_ok(fun, dfun, t, rel=1e-6):
    h = 1e-5 * t
    fd = (fun(t + h) - fun(t - h)) / (2 * h)
    return abs(fd - dfun(t)) <= rel * max(1.0, abs(dfun(t)))


def _scale(data, params, t):
    return t * data.h1b_sq + params.a * t**3 * data.dir_sq**2 + t ** (params.p - 1) * data.fp


@settings(max_examples=200, deadline=None)
@given(fibering_case(), st.floats(0.1, 10.0))
def test_derivatives_match_finite_differences(case, s):
    data, params = case
    t = s * t_f(data, params.p)
    h1, h2 = fiber_derivatives(t, data, params)
    dt = 1e-5 * t
    fd1 = (fiber_value(t + dt, data, params) - fiber_value(t - dt, data, params)) / (2 * dt)
    sc = _scale(data, params, t)
    assert abs(fd1 - h1) <= 1e-6 * sc
    g = lambda x: fiber_derivatives(x, data, params)[0]
    fd2 = (g(t + dt) - g(t - dt)) / (2 * dt)
    assert abs(fd2 - h2) <= 1e-6 * sc / t


@settings(max_examples=200, deadline=None)
@given(fibering_case())
def test_critical_points_are_nehari_points_with_right_class(case):
    data, params = case
    rep = critical_points(data, params)
    for name, cls in (("t_minus", "MINUS"), ("t_plus", "PLUS")):
        t = getattr(rep, name)
        if t is None or rep.tangent:
            continue
        scaled = data.scaled(t, params.p)
        assert on_nehari(scaled, params, tol=1e-8)
        assert rep.classes[name] == cls


@settings(max_examples=200, deadline=None)
@given(fibering_case())
def test_ordering_chain_under_g6_hypothesis(case):
    data, params = case
    assume(g6_hypothesis(data, params))
    rep = critical_points(data, params)
    assert rep.n_roots == 2
    assert rep.ordering_ok, rep.ordering
    assert rep.energies["t_plus"] < 0


@settings(max_examples=200, deadline=None)
@given(fibering_case(positive_a=False))
def test_semilinear_case_single_root_at_T_f(case):
    data, params = case
    rep = critical_points(data, params)
    assert rep.n_roots == 1
    assert rep.t_minus == pytest.approx(t_f(data, params.p), rel=1e-14)


@settings(max_examples=100, deadline=None)
@given(fibering_case())
def test_nehari_forms_agree_on_nehari(case):
    data, params = case
    rep = critical_points(data, params)
    assume(rep.t_minus is not None)
    scaled = data.scaled(rep.t_minus, params.p)
    a, b, c = nehari_forms(scaled, params)
    sc = scaled.h1b_sq + scaled.fp + params.a * scaled.dir_sq**2
    assert abs(a - b) <= 1e-8 * sc and abs(a - c) <= 1e-8 * sc


@settings(max_examples=100, deadline=None)
@given(fibering_case())
def test_tangency_coupling_is_double_zero(case):
    data, params = case
    a0 = tangency_coupling(data, params.p)
    t0 = tangency_scale(data, params.p, a0)
    pa = params.with_a(a0)
    sc = 0.5 * t0**2 * data.h1b_sq
    assert abs(fiber_value(t0, data, pa)) <= 1e-9 * sc
    h1, _ = fiber_derivatives(t0, data, pa)
    assert abs(h1) <= 1e-9 * t0 * data.h1b_sq


def test_fiber_value_closed_form():
    data = FunctionData.from_integrals(2.0, 3.0, 4.0, b=1.0)
    pr = ProblemParams(3, 3.0, a=0.5)
    # 0.5*4*5 + 0.125*16*4 - 8*4/3
    assert fiber_value(2.0, data, pr) == pytest.approx(10 + 8 - 32 / 3, rel=1e-15)


def test_d_of_p_values():
    assert d_of_p(2.5) == pytest.approx(0.5625, rel=1e-15)
    assert d_of_p(3.5) == 0.5
    with pytest.raises(DomainError):
        d_of_p(4.0)


def test_degenerate_data_rejected():
    with pytest.raises(DomainError):
        critical_points(FunctionData(1.0, 1.0, 0.0, 0.0), ProblemParams(3, 3.0, a=1.0))


def test_no_roots_for_large_a():
    data = FunctionData.from_integrals(1.0, 1.0, 1.0)
    pr = ProblemParams(3, 3.0, a=1e3)
    rep = critical_points(data, pr)
    assert rep.n_roots == 0
    assert nehari_class(data, pr) == "PLUS"


def test_tangent_case_detected():
    data = FunctionData.from_integrals(1.0, 1.0, 3.0)
    p = 3.0
    # m(t) minimum value -> tangency coupling for critical points
    Tf = t_f(data, p)
    tm = 2 ** (1 / (p - 2)) * Tf / (4 - p) ** (1 / (p - 2))
    m_min = tm**-2 * data.h1b_sq - tm ** (p - 4) * data.fp
    a = -m_min / data.dir_sq**2
    rep = critical_points(data, ProblemParams(3, p, a=a))
    assert rep.n_roots == 1 and rep.tangent
    assert rep.t_minus == pytest.approx(tm, rel=1e-6)


def test_filtration_split_small_solution_is_M1(gs3):
    from kirchhoff.constants import compute_thresholds

    p = 3.0
    pr = ProblemParams(3, p)
    pr = pr.with_a(compute_thresholds(pr, gs3).lambda_ / 2)
    data = FunctionData.from_integrals(gs3.G, gs3.M, gs3.P)
    rep = critical_points(data, pr)
    low = data.scaled(rep.t_minus, p)
    high = data.scaled(rep.t_plus, p)
    fr = filtration_split(low, pr, gs3.S_p)
    assert fr.membership == "M1" and fr.sandwich_ok
    assert filtration_split(high, pr, gs3.S_p).membership in ("M2", "OUTSIDE")


def test_filtration_requires_nehari_point(gs3):
    data = FunctionData.from_integrals(1.0, 1.0, 1.0)
    with pytest.raises(PreconditionError):
        filtration_split(data, ProblemParams(3, 3.0, a=1e-3), gs3.S_p)


def test_filtration_radii_collapse_for_large_a():
    with pytest.raises(PreconditionError):
        filtration_radii(ProblemParams(3, 3.0, a=1e6), 2 ** (1 / 3))


def test_lemma_m3_roots_ordering():
    data = FunctionData.from_integrals(1.2, 6.0, 8.1)
    m3 = lemma_m3_roots(data, ProblemParams(1, 3.0, a=1e-3))
    assert m3.ordering_ok and m3.signs_ok
    assert m3.t1 < m3.t2


def test_sweep_rows():
    data = FunctionData.from_integrals(1.0, 1.0, 1.0)
    rows = sweep(data, ProblemParams(3, 3.0, a=0.1), np.linspace(0.5, 2, 4))
    assert len(rows) == 4 and all(len(r) == 4 for r in rows)
    assert rows[0][1] == pytest.approx(fiber_value(0.5, data, ProblemParams(3, 3.0, a=0.1)))
