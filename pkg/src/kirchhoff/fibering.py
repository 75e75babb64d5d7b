"""Scalar fibering-map algebra t -> J_a(tu).

Everything here operates on the four integrals of a function u (see
:class:`FunctionData`), so the same code serves ground states, branch
solutions, grid functions and synthetic data.  Root finding is done in
log t because critical points spread over decades as a -> 0.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .params import DomainError, PreconditionError, ProblemParams

NEHARI_TOL = 1e-9
MERGE_TOL = 1e-7  # log-t gap below which two critical points are one tangency (~sqrt(eps))


def d_of_p(p: float) -> float:
    """Piecewise constant D(p) of condition (D4)."""
    if not (2.0 < p < 4.0):
        raise DomainError(f"D(p) needs 2 < p < 4, got {p}")
    if p <= 3.0:
        return ((4.0 - p) / 2.0) ** (1.0 / (p - 2.0))
    return 0.5


@dataclass(frozen=True)
class FunctionData:
    """Integrals driving the fibering map of a function u.

    h1b_sq = int(b|grad u|^2 + u^2), dir_sq = int|grad u|^2, mass = int u^2,
    fp = int f|u|^p.
    """

    h1b_sq: float
    dir_sq: float
    mass: float
    fp: float

    @classmethod
    def from_integrals(cls, dir_sq, mass, fp, b=1.0) -> "FunctionData":
        return cls(b * dir_sq + mass, dir_sq, mass, fp)

    def scaled(self, t: float, p: float) -> "FunctionData":
        """Integrals of t*u."""
        t2 = t * t
        return FunctionData(self.h1b_sq * t2, self.dir_sq * t2, self.mass * t2, self.fp * t**p)

    def consistent(self, b: float, rtol: float = 1e-12) -> bool:
        ref = b * self.dir_sq + self.mass
        return abs(self.h1b_sq - ref) <= rtol * max(abs(ref), 1e-300)

    @property
    def norm_h1(self) -> float:
        return math.sqrt(self.dir_sq + self.mass)

    def as_dict(self) -> dict:
        return asdict(self)


def _check_nontrivial(data: FunctionData) -> None:
    if not data.fp > 0:
        raise DomainError("degenerate data: int f|u|^p must be positive")
    if not data.h1b_sq > 0:
        raise DomainError("degenerate data: H^1 norm must be positive")


def fiber_value(t, data: FunctionData, params: ProblemParams):
    """J_a(tu) = t^2/2 |u|^2 + a t^4/4 (int|grad u|^2)^2 - t^p/p int f|u|^p."""
    t = np.asarray(t, dtype=float) if np.ndim(t) else np.float64(t)
    p, a = params.p, params.a
    return (
        0.5 * t**2 * data.h1b_sq
        + 0.25 * a * t**4 * data.dir_sq**2
        - t**p * data.fp / p
    )


def fiber_derivatives(t, data: FunctionData, params: ProblemParams):
    """First and second derivative of t -> J_a(tu)."""
    p, a = params.p, params.a
    d2 = data.dir_sq**2
    h1 = t * data.h1b_sq + a * t**3 * d2 - t ** (p - 1) * data.fp
    h2 = data.h1b_sq + 3.0 * a * t**2 * d2 - (p - 1) * t ** (p - 2) * data.fp
    return h1, h2


def nehari_forms(data: FunctionData, params: ProblemParams):
    """The three expressions for h''(1) that coincide on the Nehari set."""
    p, a = params.p, params.a
    d2 = data.dir_sq**2
    return (
        data.h1b_sq + 3 * a * d2 - (p - 1) * data.fp,
        -(p - 2) * data.h1b_sq + a * (4 - p) * d2,
        -2 * data.h1b_sq + (4 - p) * data.fp,
    )


def nehari_residual(data: FunctionData, params: ProblemParams) -> float:
    """Scale-free |h'(1)| / max(|u|^2, int f|u|^p)."""
    h1, _ = fiber_derivatives(1.0, data, params)
    return abs(h1) / max(data.h1b_sq, data.fp)


def on_nehari(data: FunctionData, params: ProblemParams, tol: float = NEHARI_TOL) -> bool:
    return nehari_residual(data, params) < tol


def nehari_class(data: FunctionData, params: ProblemParams, rtol: float = 1e-12) -> str:
    _, h2 = fiber_derivatives(1.0, data, params)
    if abs(h2) <= rtol * max(data.h1b_sq, data.fp):
        return "ZERO"
    return "MINUS" if h2 < 0 else "PLUS"


def t_f(data: FunctionData, p: float) -> float:
    """Semilinear Nehari scale T_f(u) = (|u|^2 / int f|u|^p)^{1/(p-2)}."""
    _check_nontrivial(data)
    return (data.h1b_sq / data.fp) ** (1.0 / (p - 2.0))


def m_map(t, data: FunctionData, p: float):
    """m(t) = t^-2 |u|^2 - t^{p-4} int f|u|^p; tu is Nehari iff m(t) + a d^2 = 0."""
    return t**-2.0 * data.h1b_sq - t ** (p - 4.0) * data.fp


def g_map(t, data: FunctionData, p: float):
    """g(t) = t^-2/2 |u|^2 - t^{p-4}/p int f|u|^p; J(tu) = 0 iff g(t) + a d^2/4 = 0."""
    return 0.5 * t**-2.0 * data.h1b_sq - t ** (p - 4.0) * data.fp / p


def _root_log(fun, s_lo, s_hi):
    return brentq(fun, s_lo, s_hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)


def _expand_up(fun, s, step=1.0, limit=200):
    # fun is negative at s and tends to a positive limit as s -> inf
    for _ in range(limit):
        s_next = s + step
        if fun(s_next) > 0:
            return s, s_next
        s, step = s_next, step * 2
    raise PreconditionError("could not bracket root from above")


def _two_roots(phi, u_min, u_left):
    """Roots of phi on either side of its minimiser u_min.

    phi is expressed in the log offset u = log(t / T_f) and is positive at
    u_left < u_min.  Returns (left, right, tangent) offsets, None if missing.
    """
    v_min = phi(u_min)
    if v_min > 0:
        return None, None, False
    if v_min == 0:
        return u_min, u_min, True
    left = _root_log(phi, u_left, u_min)
    lo, hi = _expand_up(phi, u_min)
    right = _root_log(phi, lo, hi)
    if right - left < MERGE_TOL:
        mid = 0.5 * (left + right)
        return mid, mid, True
    return left, right, False


@dataclass
class FiberingReport:
    a: float
    p: float
    T_f: float
    t_m_star: float  # minimiser of m
    t_minus: Optional[float] = None
    t_plus: Optional[float] = None
    tangent: bool = False
    t_hat_0: Optional[float] = None
    t_hat_1: Optional[float] = None
    t0_u: Optional[float] = None
    a0_u: Optional[float] = None
    hypothesis_ok: bool = False
    ordering: dict = field(default_factory=dict)
    ordering_ok: Optional[bool] = None
    energies: dict = field(default_factory=dict)
    classes: dict = field(default_factory=dict)
    log_offsets: dict = field(default_factory=dict)  # log(t / T_f) of the critical points

    @property
    def n_roots(self) -> int:
        if self.t_minus is None:
            return 0
        return 1 if (self.tangent or self.t_plus is None) else 2

    def as_dict(self) -> dict:
        d = asdict(self)
        d["n_roots"] = self.n_roots
        return d


def tangency_coupling(data: FunctionData, p: float) -> float:
    """a0(u): the coupling at which J(tu) touches zero tangentially."""
    _check_nontrivial(data)
    if not data.dir_sq > 0:
        raise DomainError("degenerate data: dir_sq must be positive")
    a_bar = data.fp ** (2 / (p - 2)) / (data.dir_sq**2 * data.h1b_sq ** ((4 - p) / (p - 2)))
    return 2 * (p - 2) * (4 - p) ** ((4 - p) / (p - 2)) / p ** (2 / (p - 2)) * a_bar


def tangency_scale(data: FunctionData, p: float, a: float) -> float:
    """t0(u) = (2(p-2) int f|u|^p / (a p d^2))^{1/(4-p)}."""
    return (2 * (p - 2) * data.fp / (a * p * data.dir_sq**2)) ** (1 / (4 - p))


def g6_hypothesis(data: FunctionData, params: ProblemParams) -> bool:
    """Sufficient condition for two ordered critical points.

    The norm must dominate the Dirichlet integral; with b < 1 the weighted
    norm does not, so the larger of the two is used.
    """
    p, a = params.p, params.a
    n2 = max(data.h1b_sq, data.dir_sq)
    rhs = p / (4 - p) * (2 * a * (4 - p) / (p - 2)) ** ((p - 2) / 2) * n2 ** (p / 2)
    return data.fp > rhs


def critical_points(data: FunctionData, params: ProblemParams) -> FiberingReport:
    """Critical points t_minus < t_plus of t -> J_a(tu) and the zero-energy scales."""
    _check_nontrivial(data)
    p, a = params.p, params.a
    c = a * data.dir_sq**2
    Tf = t_f(data, p)
    tm = (2 / (4 - p)) ** (1 / (p - 2)) * Tf
    rep = FiberingReport(a=a, p=p, T_f=Tf, t_m_star=tm)

    # both maps are written in u = log(t / T_f); k is the quartic weight in
    # those units, so roots next to T_f keep full relative precision
    k = c * Tf * Tf / data.h1b_sq
    u_m = math.log(2 / (4 - p)) / (p - 2)
    if c == 0:
        rep.t_minus = Tf
        rep.log_offsets["t_minus"] = 0.0
    else:
        phi_m = lambda u: k - math.exp(-2 * u) * math.expm1((p - 2) * u)
        left, right, tangent = _two_roots(phi_m, u_m, 0.0)
        if left is not None:
            rep.t_minus = Tf * math.exp(left)
            rep.t_plus = Tf * math.exp(right)
            rep.tangent = tangent
            rep.log_offsets.update(t_minus=left, t_plus=right)

    # zeros of J(tu): g(t) + a d^2/4 = 0, g minimal at (p/(4-p))^{1/(p-2)} T_f
    u_hat = math.log(p / 2) / (p - 2)
    u_g = math.log(p / (4 - p)) / (p - 2)
    if c == 0:
        rep.t_hat_1 = Tf * math.exp(u_hat)
    else:
        phi_g = lambda u: k / 4 - 0.5 * math.exp(-2 * u) * math.expm1((p - 2) * (u - u_hat))
        left, right, _ = _two_roots(phi_g, u_g, u_hat)
        if left is not None:
            rep.t_hat_1, rep.t_hat_0 = Tf * math.exp(left), Tf * math.exp(right)

    if data.dir_sq > 0:
        rep.a0_u = tangency_coupling(data, p)
        rep.t0_u = tangency_scale(data, p, rep.a0_u)

    rep.hypothesis_ok = g6_hypothesis(data, params)
    if rep.n_roots == 2:
        u_lo, u_hi = rep.log_offsets["t_minus"], rep.log_offsets["t_plus"]
        u_mid = 0.5 * math.log(d_of_p(p)) + u_m
        rep.ordering = {
            "T_f<t_minus": 0.0 < u_lo,
            "t_minus<sqrtD*t_m": u_lo < u_mid,
            "sqrtD*t_m<t_m": u_mid < u_m,
            "t_m<t_plus": u_m < u_hi,
        }
        rep.ordering_ok = all(rep.ordering.values())
    for name in ("T_f", "t_minus", "t_plus", "t_hat_0", "t_hat_1"):
        t = getattr(rep, name)
        if t is not None:
            rep.energies[name] = float(fiber_value(t, data, params))
    for name in ("t_minus", "t_plus"):
        t = getattr(rep, name)
        if t is not None:
            rep.classes[name] = nehari_class(data.scaled(t, p), params)
    return rep


@dataclass
class FiltrationReport:
    c_level: float
    D1: float
    D2: float
    norm: float
    energy: float
    membership: str  # M1 | M2 | OUTSIDE | GAP
    a_bound: float
    a_bound_ok: bool
    sandwich: dict

    @property
    def sandwich_ok(self) -> bool:
        return all(self.sandwich.values())

    def as_dict(self) -> dict:
        d = asdict(self)
        d["sandwich_ok"] = self.sandwich_ok
        return d


def filtration_bound(params: ProblemParams, S_p: float) -> float:
    """Coupling bound ((p-2)/(2(4-p))) ((4-p)/p)^{2/(p-2)} Lambda_0 of the split."""
    p = params.p
    D = d_of_p(p)
    lam0 = (1 - D * (params.f_max / params.f_inf) ** (2 / (p - 2))) * (
        params.f_inf / S_p**p
    ) ** (2 / (p - 2))
    return (p - 2) / (2 * (4 - p)) * ((4 - p) / p) ** (2 / (p - 2)) * lam0


def filtration_radii(params: ProblemParams, S_p: float):
    """Energy level c and the two positive roots D1 < D2 of the norm quartic."""
    p, a = params.p, params.a
    X = (2 * S_p**p / (params.f_inf * (4 - p))) ** (1 / (p - 2))
    c = d_of_p(p) * (p - 2) / (2 * p) * X**2
    # ((p-2)/(2p)) y - (a(4-p)/(4p)) y^2 = c in y = x^2
    B = (p - 2) / (2 * p)
    A = a * (4 - p) / (4 * p)
    disc = B * B - 4 * A * c
    if disc <= 0:
        raise PreconditionError(
            f"filtration quartic has no two positive roots (a={a} too large)"
        )
    y1 = 2 * c / (B + math.sqrt(disc))
    y2 = math.inf if A == 0 else c / (A * y1)
    return c, math.sqrt(y1), math.sqrt(y2), X


def filtration_split(data: FunctionData, params: ProblemParams, S_p: float) -> FiltrationReport:
    """Place a Nehari point in M^(1) (small norm) or M^(2) (large norm)."""
    if not on_nehari(data, params):
        raise PreconditionError(
            f"data not on the Nehari set (residual {nehari_residual(data, params):.3e})"
        )
    p = params.p
    c, D1, D2, X = filtration_radii(params, S_p)
    norm = math.sqrt(data.h1b_sq)
    energy = float(fiber_value(1.0, data, params))
    if energy >= c:
        member = "OUTSIDE"
    elif norm < D1:
        member = "M1"
    elif norm > D2:
        member = "M2"
    else:
        member = "GAP"
    bound = filtration_bound(params, S_p)
    Xmax = (2 * S_p**p / (params.f_max * (4 - p))) ** (1 / (p - 2))
    sandwich = {
        "sqrtD*X<D1": math.sqrt(d_of_p(p)) * X < D1,
        "D1<=Xmax": D1 <= Xmax,
        "sqrt2*X<D2": math.sqrt(2) * X < D2,
    }
    return FiltrationReport(
        c_level=c, D1=D1, D2=D2, norm=norm, energy=energy, membership=member,
        a_bound=bound, a_bound_ok=params.a < bound, sandwich=sandwich,
    )


@dataclass
class M3Roots:
    t1: float
    t2: float
    T_f: float
    t_m_star: float
    ordering_ok: bool
    signs_ok: bool
    energy_t1: float
    energy_t2: float

    def as_dict(self) -> dict:
        return asdict(self)


def lemma_m3_roots(data: FunctionData, params: ProblemParams) -> M3Roots:
    """Both critical scales t1 < t2 of a (possibly nonautonomous) function."""
    rep = critical_points(data, params)
    if rep.n_roots != 2:
        raise PreconditionError(f"expected two critical points, found {rep.n_roots}")
    t1, t2 = rep.t_minus, rep.t_plus
    ordering = rep.T_f < t1 < rep.t_m_star < t2
    _, h2_1 = fiber_derivatives(t1, data, params)
    _, h2_2 = fiber_derivatives(t2, data, params)
    return M3Roots(
        t1=t1, t2=t2, T_f=rep.T_f, t_m_star=rep.t_m_star,
        ordering_ok=bool(ordering), signs_ok=bool(h2_1 < 0 < h2_2),
        energy_t1=rep.energies["t_minus"], energy_t2=rep.energies["t_plus"],
    )


def sweep(data: FunctionData, params: ProblemParams, t_values) -> list:
    """Rows (t, h, h', h'') for plotting."""
    t = np.asarray(t_values, dtype=float)
    h = fiber_value(t, data, params)
    h1, h2 = fiber_derivatives(t, data, params)
    return [tuple(map(float, row)) for row in zip(t, h, h1, h2)]
