"""Positive radial ground state of -Lap w + w = f_inf |w|^{p-2} w by shooting.

The shot is parametrised by the peak value w(0).  Too large a peak overshoots
and the trajectory crosses zero; too small a peak undershoots and the
trajectory turns back up before reaching zero.  Bisection between the two
locates the decaying solution.  Only the f_inf = 1 solution is shot; other
f_inf follow from w_f = f_inf^{-1/(p-2)} w_1.
"""

from __future__ import annotations

import csv
import enum
import functools
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.special import beta as beta_fn
from scipy.special import gamma, kve

from .params import DomainError, SolverError, check_exponent

RTOL = 1e-10
ATOL = 1e-14
R0_SERIES = 1e-4
R_MAX = 40.0
W0_TOL = 1e-12


class Shot(enum.Enum):
    CROSSES = "CROSSES_ZERO"
    DIVERGES = "DIVERGES"
    DECAYS = "DECAYS"


@dataclass
class ShotResult:
    outcome: Shot
    r_event: float
    sol: object = None  # dense OdeSolution or None


def sphere_area(N: int) -> float:
    """omega_{N-1} = 2 pi^{N/2} / Gamma(N/2); equals 2 for N = 1."""
    return 2.0 * math.pi ** (N / 2) / gamma(N / 2)


def _rhs(N, p, f):
    c = N - 1.0

    def rhs(r, y):
        w, dw = y
        curv = c * dw / r if (c and r > 0) else 0.0
        return (dw, -curv + w - f * abs(w) ** (p - 2) * w)

    return rhs


def _start(N, p, f, w0):
    """Initial radius and state; series start avoids the (N-1)/r singularity."""
    if N == 1:
        return 0.0, [w0, 0.0]
    c = w0 - f * w0 ** (p - 1)
    r0 = R0_SERIES
    return r0, [w0 + c * r0 * r0 / (2 * N), c * r0 / N]


def shoot(N, p, f_inf, w0_init, r_max=R_MAX, tol=RTOL, method="DOP853", dense=False):
    """Integrate the radial ODE from w(0) = w0_init and classify the trajectory."""
    check_exponent(N, p)
    if not w0_init > 0:
        raise DomainError("w0_init must be positive")
    rest = f_inf ** (-1.0 / (p - 2))
    if w0_init <= rest:
        # w'' starts nonnegative: the trajectory rises and never reaches zero
        return ShotResult(Shot.DIVERGES, 0.0)
    r0, y0 = _start(N, p, f_inf, w0_init)

    def hit_zero(r, y):
        return y[0]

    hit_zero.terminal = True
    hit_zero.direction = -1

    def turn_up(r, y):
        return y[1]

    turn_up.terminal = True
    turn_up.direction = 1

    sol = solve_ivp(
        _rhs(N, p, f_inf), (r0, r_max), y0, method=method, rtol=tol, atol=ATOL,
        events=(hit_zero, turn_up), dense_output=dense,
    )
    if sol.status == -1:
        raise SolverError(f"integrator failure: {sol.message}", state=(sol.t[-1], sol.y[:, -1]))
    if sol.t_events[0].size:
        return ShotResult(Shot.CROSSES, float(sol.t_events[0][0]), sol.sol)
    if sol.t_events[1].size:
        return ShotResult(Shot.DIVERGES, float(sol.t_events[1][0]), sol.sol)
    return ShotResult(Shot.DECAYS, r_max, sol.sol)


@dataclass
class RadialProfile:
    nodes: np.ndarray
    values: np.ndarray
    derivatives: np.ndarray
    r_max: float
    integrator_tolerance: float
    r_cut: float = math.nan
    tail_constant: float = math.nan
    tail_residual: float = math.nan

    def scaled(self, s: float) -> "RadialProfile":
        return replace(
            self, values=self.values * s, derivatives=self.derivatives * s,
            tail_constant=self.tail_constant * s,
        )

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["r", "w", "w_prime"])
            for r, w, dw in zip(self.nodes, self.values, self.derivatives):
                wr.writerow([format(float(r), ".17g"), format(float(w), ".17g"), format(float(dw), ".17g")])


@dataclass
class GroundState:
    N: int
    p: float
    f_inf: float
    w0: float
    G: float
    M: float
    P: float
    profile: RadialProfile = field(repr=False)
    quad_error: float = 0.0
    w0_tol: float = W0_TOL

    @property
    def h1_sq(self) -> float:
        return self.G + self.M

    @property
    def S_p(self) -> float:
        """Best Sobolev constant from S_p^p = f_inf h1_sq^{(p-2)/2}."""
        return (self.f_inf * self.h1_sq ** ((self.p - 2) / 2)) ** (1 / self.p)

    @property
    def energy0(self) -> float:
        return (self.p - 2) / (2 * self.p) * self.h1_sq

    def nehari_residual(self) -> float:
        return abs(self.h1_sq - self.f_inf * self.P) / self.h1_sq

    def sobolev_residual(self) -> float:
        p = self.p
        back = (self.S_p**p / self.f_inf) ** (2 / (p - 2))
        return abs(self.h1_sq - back) / self.h1_sq

    def pohozaev_residual(self) -> float:
        N, p = self.N, self.p
        rhs = N / p * self.f_inf * self.P
        lhs = (N - 2) / 2 * self.G + N / 2 * self.M
        return abs(lhs - rhs) / rhs

    def rescaled(self, f_inf: float) -> "GroundState":
        """Ground state for another f_inf via w_f = (f_inf/f)^{-1/(p-2)} w."""
        s = (f_inf / self.f_inf) ** (-1.0 / (self.p - 2))
        return replace(
            self, f_inf=f_inf, w0=self.w0 * s, G=self.G * s * s, M=self.M * s * s,
            P=self.P * s**self.p, profile=self.profile.scaled(s),
        )

    def summary(self) -> dict:
        return {
            "N": self.N, "p": self.p, "f_inf": self.f_inf, "w0": self.w0,
            "G": self.G, "M": self.M, "P": self.P, "h1_sq": self.h1_sq,
            "S_p": self.S_p, "energy0": self.energy0,
            "residuals": {
                "nehari": self.nehari_residual(),
                "sobolev": self.sobolev_residual(),
                "pohozaev": self.pohozaev_residual(),
            },
            "tolerances": {
                "w0": self.w0_tol, "integrator_rtol": self.profile.integrator_tolerance,
                "quadrature": self.quad_error, "tail_residual": self.profile.tail_residual,
                "r_cut": self.profile.r_cut,
            },
        }


def _simpson(y, h):
    return h / 3.0 * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-1:2].sum())


def _linear_tail(N):
    """Decaying solution of the linearised equation and its derivative."""
    nu = (N - 2) / 2.0

    def w(r):
        return r ** (-nu) * kve(nu, r) * np.exp(-r)

    def dw(r):
        return -(r ** (-nu)) * kve(nu + 1, r) * np.exp(-r)

    return w, dw


def integrals(profile: RadialProfile, N: int, p: float, n_quad: int | None = None):
    """(G, M, P, relative error estimate) of a radial profile.

    Composite Simpson on the uniform part of the profile up to r_cut, plus the
    fitted linear tail beyond r_cut integrated by adaptive quadrature.
    """
    r, w, dw = profile.nodes, profile.values, profile.derivatives
    if not np.any(w):
        return 0.0, 0.0, 0.0, 0.0
    if not (np.all(np.isfinite(w)) and np.all(np.isfinite(dw))):
        raise SolverError("nonfinite profile values")
    inside = r <= profile.r_cut * (1 + 1e-14) if math.isfinite(profile.r_cut) else np.ones_like(r, bool)
    ri, wi, dwi = r[inside], w[inside], dw[inside]
    n = ri.size - 1
    if n % 4:
        raise ValueError("profile interior needs a multiple of 4 intervals")
    h = ri[1] - ri[0]
    wt = sphere_area(N) * ri ** (N - 1)
    ys = (wt * dwi**2, wt * wi**2, wt * np.abs(wi) ** p)
    fine = np.array([_simpson(y, h) for y in ys])
    coarse = np.array([_simpson(y[::2], 2 * h) for y in ys])
    err = float(np.max(np.abs(fine - coarse) / np.abs(fine)))
    if math.isfinite(profile.tail_constant) and profile.tail_constant:
        tw, tdw = _linear_tail(N)
        C = profile.tail_constant
        om = sphere_area(N)
        rc = profile.r_cut
        tails = [
            quad(lambda s: om * s ** (N - 1) * (C * tdw(s)) ** 2, rc, np.inf, epsabs=0, epsrel=1e-12, limit=200)[0],
            quad(lambda s: om * s ** (N - 1) * (C * tw(s)) ** 2, rc, np.inf, epsabs=0, epsrel=1e-12, limit=200)[0],
            quad(lambda s: om * s ** (N - 1) * abs(C * tw(s)) ** p, rc, np.inf, epsabs=0, epsrel=1e-12, limit=200)[0],
        ]
        fine = fine + np.array(tails)
    G, M, P = (float(v) for v in fine)
    return G, M, P, err


def _bisect_peak(N, p, r_max, tol, method):
    lo = 1.0  # rest state for f = 1 always undershoots
    hi = 2.0
    while shoot(N, p, 1.0, hi, r_max, method=method).outcome is not Shot.CROSSES:
        lo, hi = hi, 2 * hi
        if hi > 1e8:
            raise SolverError("bracket-not-found: no overshooting peak below 1e8")
    it = 0
    while True:
        mid = 0.5 * (lo + hi)
        if not (lo < mid < hi) or it > 200:
            break
        res = shoot(N, p, 1.0, mid, r_max, method=method)
        if res.outcome is Shot.DECAYS:
            return mid, mid, it
        if res.outcome is Shot.CROSSES:
            hi = mid
        else:
            lo = mid
        it += 1
    if hi - lo > tol:
        raise SolverError(f"tolerance-not-met: peak bracket width {hi - lo:.3e}")
    return lo, hi, it


def _build_profile(N, p, lo, hi, r_max, rtol, method, n_intervals, sep_tol=1e-3):
    s_lo = shoot(N, p, 1.0, lo, r_max, tol=rtol, method=method, dense=True)
    s_hi = shoot(N, p, 1.0, hi, r_max, tol=rtol, method=method, dense=True)
    r_end = min(s_lo.r_event, s_hi.r_event)
    r_start = 0.0 if N == 1 else R0_SERIES
    # locate where the two bracketing trajectories separate
    scan = np.linspace(r_start, r_end, 4001)
    a = s_lo.sol(scan)[0] if s_lo.sol is not None else np.full_like(scan, lo)
    b = s_hi.sol(scan)[0]
    avg = 0.5 * (a + b)
    bad = np.abs(a - b) > sep_tol * np.abs(avg)
    bad |= avg <= 0
    k = int(np.argmax(bad)) if bad.any() else scan.size - 1
    r_cut = float(scan[max(k - 1, 1)])

    grid = np.linspace(0.0, r_cut, n_intervals + 1)
    g_eval = np.clip(grid, r_start, None)

    def sample(s, r):
        if s.sol is None:
            return np.vstack([np.full_like(r, lo), np.zeros_like(r)])
        return s.sol(r)

    ya, yb = sample(s_lo, g_eval), sample(s_hi, g_eval)
    w = 0.5 * (ya[0] + yb[0])
    dw = 0.5 * (ya[1] + yb[1])
    if N > 1:
        # inside the series radius use the expansion itself
        w0 = 0.5 * (lo + hi)
        c = w0 - w0 ** (p - 1)
        small = grid < R0_SERIES
        w[small] = w0 + c * grid[small] ** 2 / (2 * N)
        dw[small] = c * grid[small] / N

    tw, _ = _linear_tail(N)
    C = w[-1] / tw(r_cut)
    window = grid >= r_cut - 2.0
    fit = C * tw(grid[window])
    tail_res = float(np.max(np.abs(w[window] - fit) / w[window]))

    r_tail = np.linspace(r_cut, r_max, 201)[1:]
    _, tdw = _linear_tail(N)
    nodes = np.concatenate([grid, r_tail])
    values = np.concatenate([w, C * tw(r_tail)])
    derivs = np.concatenate([dw, C * tdw(r_tail)])
    return RadialProfile(
        nodes=nodes, values=values, derivatives=derivs, r_max=r_max,
        integrator_tolerance=rtol, r_cut=r_cut, tail_constant=float(C), tail_residual=tail_res,
    )


@functools.lru_cache(maxsize=64)
def _unit_ground_state(N, p, tol, r_max, method, n_intervals):
    lo, hi, _ = _bisect_peak(N, p, r_max, tol, method)
    prof = _build_profile(N, p, lo, hi, r_max, RTOL, method, n_intervals)
    G, M, P, err = integrals(prof, N, p)
    return GroundState(
        N=N, p=p, f_inf=1.0, w0=0.5 * (lo + hi), G=G, M=M, P=P, profile=prof,
        quad_error=err, w0_tol=max(hi - lo, 0.0),
    )


def find_ground_state(N, p, f_inf=1.0, tol=W0_TOL, r_max=80.0, method="DOP853", n_intervals=8192):
    """Ground state of -Lap w + w = f_inf w^{p-1} in R^N (radial, positive)."""
    check_exponent(N, p)
    if not f_inf > 0:
        raise DomainError("f_inf must be positive")
    gs = _unit_ground_state(int(N), float(p), float(tol), float(r_max), method, int(n_intervals))
    return gs if f_inf == 1.0 else gs.rescaled(float(f_inf))


def closed_form_1d(p: float, f_inf: float = 1.0, L: float = 40.0, n: int = 8192) -> GroundState:
    """Exact 1D soliton A sech^{2/(p-2)}((p-2)x/2) with Beta-function integrals."""
    check_exponent(1, p)
    A = (p / (2 * f_inf)) ** (1 / (p - 2))
    q = 2 / (p - 2)
    bt = (p - 2) / 2
    x = np.linspace(0.0, L, n + 1)
    sech = 1 / np.cosh(bt * x)
    w = A * sech**q
    dw = -A * sech**q * np.tanh(bt * x)  # q * bt = 1
    M = A * A * beta_fn(q, 0.5) / bt
    G = A * A * (beta_fn(q, 0.5) - beta_fn(q + 1, 0.5)) / bt
    P = A**p * beta_fn(p * q / 2, 0.5) / bt
    prof = RadialProfile(x, w, dw, L, 0.0, r_cut=L)
    return GroundState(N=1, p=p, f_inf=f_inf, w0=A, G=float(G), M=float(M), P=float(P),
                       profile=prof, quad_error=0.0, w0_tol=0.0)


def soliton_residual(p: float, f_inf: float, x) -> np.ndarray:
    """Pointwise residual -w'' + w - f w^{p-1} of the closed-form soliton."""
    A = (p / (2 * f_inf)) ** (1 / (p - 2))
    q = 2 / (p - 2)
    bt = (p - 2) / 2
    s = 1 / np.cosh(bt * np.asarray(x, float))
    th = np.tanh(bt * np.asarray(x, float))
    w = A * s**q
    # w'' = A q bt^2 s^q (q th^2 - s^2) with q bt = 1
    d2 = A * bt * s**q * (q * th**2 - s**2)
    return -d2 + w - f_inf * w ** (p - 1)
