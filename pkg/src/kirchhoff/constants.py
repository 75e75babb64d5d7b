"""Closed-form constants and coupling thresholds.

Coupling thresholds are evaluated in the b = 1 normalisation and then mapped
to general b with :meth:`ProblemParams.coupling_scale`.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

from scipy.optimize import minimize_scalar

from .fibering import FunctionData, d_of_p, fiber_derivatives
from .params import DomainError, PreconditionError, ProblemParams

__all__ = [
    "d_of_p", "d_p_margins", "filtration_margin", "lambda0", "lambda_", "gn_quotient",
    "gn_sharp_constant", "a_star_prefactor", "a_star_bracket", "nonexistence_factor",
    "nonexistence_threshold", "a_bar", "inflection_pair", "theorem_t5_constants",
    "lower_bound_radii", "a_crit_high_dim", "ThresholdSet", "compute_thresholds",
]


def d_p_margins(p: float):
    """Margins of 1/2 <= D < e^{-1/2} and D (2/(4-p))^{2/(p-2)} > 1 (all should be >= 0 / > 0)."""
    D = d_of_p(p)
    return (D - 0.5, math.exp(-0.5) - D, D * (2 / (4 - p)) ** (2 / (p - 2)) - 1)


def filtration_margin(p: float) -> float:
    """LHS - RHS of the inequality linking the filtration bound to Lambda_0."""
    D = d_of_p(p)
    lhs = ((2 / (4 - p)) * D ** ((p - 2) / 2) - 1) / (D * (2 / (4 - p)) ** (2 / (p - 2)))
    rhs = (p - 2) / (2 * (4 - p)) * ((4 - p) / p) ** (2 / (p - 2))
    return lhs - rhs


def lambda0(params: ProblemParams, S_p: float) -> float:
    p = params.p
    if not S_p > 0:
        raise DomainError("S_p must be positive")
    D = d_of_p(p)
    bound = params.f_inf / D ** ((p - 2) / 2)
    if not params.f_max < bound:
        raise PreconditionError(
            f"(D4) violated: f_max={params.f_max} must be < f_inf/D(p)^((p-2)/2) = {bound}"
        )
    return (1 - D * (params.f_max / params.f_inf) ** (2 / (p - 2))) * (
        params.f_inf / S_p**p
    ) ** (2 / (p - 2))


def filtration_term(params: ProblemParams, S_p: float) -> float:
    p = params.p
    return (p - 2) / (2 * (4 - p)) * ((4 - p) / p) ** (2 / (p - 2)) * lambda0(params, S_p)


def lambda_(params: ProblemParams, S_p: float, a_star_lower: Optional[float] = None) -> float:
    """Lambda in the b = 1 normalisation; N >= 4 uses the lower end of the a* bracket."""
    p, N = params.p, params.N
    if N <= 3:
        return (4 - p) / 2 * (params.f_inf * (4 - p) / (2 * p * S_p**p)) ** (2 / (p - 2))
    if a_star_lower is None or not math.isfinite(a_star_lower):
        raise PreconditionError("N >= 4 needs a finite a* surrogate")
    return min(filtration_term(params, S_p), a_star_lower)


def gn_quotient(dir_sq, mass, pmom, N, p):
    """int|u|^p / (|grad u|_2^{N(p-2)/2} |u|_2^{p-N(p-2)/2}), invariant under u -> s u(x/l)."""
    if not (dir_sq > 0 and mass > 0 and pmom > 0):
        raise DomainError("Gagliardo-Nirenberg quotient needs positive integrals")
    return pmom / (dir_sq ** (N * (p - 2) / 4) * mass ** ((2 * p - N * (p - 2)) / 4))


def gn_sharp_constant(gs) -> float:
    """C_p with C_p^p the quotient evaluated on the ground state."""
    return gn_quotient(gs.G, gs.M, gs.P, gs.N, gs.p) ** (1 / gs.p)


def a_star_prefactor(p: float) -> float:
    return 2 * (p - 2) / (4 - p) * ((4 - p) / p) ** (2 / (p - 2))


def log_a_bar(dir_sq, h1_sq, fp, p):
    if not dir_sq > 0:
        raise DomainError("degenerate data: dir_sq = 0")
    return (2 * math.log(fp) - (4 - p) * math.log(h1_sq)) / (p - 2) - 2 * math.log(dir_sq)


def a_bar(dir_sq, h1_sq, fp, p):
    """0-homogeneous quotient fp^{2/(p-2)} / (dir^2 h1^{(4-p)/(p-2)}), evaluated in logs."""
    return math.exp(log_a_bar(dir_sq, h1_sq, fp, p))


def dilation_family(gs, lam, coeff):
    """(dir, h1, fp) of w0(x/lam) with int f|u|^p replaced by coeff * int|u|^p."""
    N = gs.N
    d = lam ** (N - 2) * gs.G
    m = lam**N * gs.M
    return d, d + m, coeff * lam**N * gs.P


def _dilation_sup(gs, coeff):
    """Sup of a_bar over u_lam = w0(x/lam); returns (value, maximising lam)."""
    N, p = gs.N, gs.p
    if N == 4:
        # a_bar increases in lam towards this limit
        return math.exp(log_a_bar(gs.G, gs.M, coeff * gs.P, p)), math.inf

    def neg_log(s):
        return -log_a_bar(*dilation_family(gs, math.exp(s), coeff), p)

    s0 = 0.5 * math.log(gs.G / gs.M)
    res = minimize_scalar(neg_log, bracket=(s0 - 3, s0 + 3), method="golden", tol=1e-12)
    lam = math.exp(res.x)
    return math.exp(-res.fun), lam


@dataclass
class AStarBracket:
    lower: float
    upper: float
    lam_opt: float
    under: Optional[float] = None
    under_upper: Optional[float] = None


def a_star_bracket(params: ProblemParams, gs) -> AStarBracket:
    """Bracket for a* (b = 1): dilation-family lower bound, Gagliardo-Nirenberg upper bound."""
    N, p = params.N, params.p
    if N <= 3:
        raise DomainError("a* is defined for N >= 4 only")
    pre = a_star_prefactor(p)
    Cpp = gn_sharp_constant(gs) ** p
    k = max((N - 4) * (p - 2), 2 * p - N * (p - 2)) / (2 * (4 - p))
    upper = pre * (params.f_max * Cpp) ** (2 / (p - 2)) * k ** ((4 - p) / (p - 2))
    sup, lam = _dilation_sup(gs, params.f_inf)
    lower = pre * sup
    under = under_up = None
    if N == 4:
        under = pre * _dilation_sup(gs, params.f_min)[0]
        under_up = pre * (params.f_min * Cpp) ** (2 / (p - 2))
    # the two ends coincide analytically at N = 4; suppress rounding inversions
    if lower > upper and lower - upper <= 1e-12 * upper:
        lower = upper
    if under is not None and under > under_up and under - under_up <= 1e-12 * under_up:
        under = under_up
    return AStarBracket(lower=lower, upper=upper, lam_opt=lam, under=under, under_upper=under_up)


def nonexistence_factor(p: float) -> float:
    return p ** (2 / (p - 2)) / 2 ** (p / (p - 2))


def nonexistence_threshold(bracket, p: float):
    lo, hi = (bracket.lower, bracket.upper) if isinstance(bracket, AStarBracket) else bracket
    c = nonexistence_factor(p)
    return c * lo, c * hi


def inflection_pair(data: FunctionData, params: ProblemParams):
    """(t_u, a_u) with h'(t_u) = h''(t_u) = 0 at coupling a_u."""
    p = params.p
    if not data.fp > 0:
        raise DomainError("degenerate data: fp must be positive")
    A = a_bar(data.dir_sq, data.h1b_sq, data.fp, p)
    t_u = (2 * data.h1b_sq / ((4 - p) * data.fp)) ** (1 / (p - 2))
    a_u = (p - 2) / (4 - p) * ((4 - p) / 2) ** (2 / (p - 2)) * A
    return t_u, a_u


def inflection_residuals(data: FunctionData, params: ProblemParams):
    """Relative (h', h'') at the inflection pair, for cross-checks."""
    t_u, a_u = inflection_pair(data, params)
    h1, h2 = fiber_derivatives(t_u, data, params.with_a(a_u))
    scale = max(data.h1b_sq, data.fp * t_u ** (params.p - 2))
    return abs(h1) / (t_u * scale), abs(h2) / scale


def theorem_t5_constants(params: ProblemParams, S_p: float, C_p: float):
    """(A0, A0_bar, A0_star) for f = f_inf."""
    p, f = params.p, params.f_inf
    Spp = S_p**p
    A0 = 3 * (p - 1) * (-p * p + 2 * p + 12) / (p * p * (p - 2)) * (Spp / f) ** (2 / (p - 2))
    A0_bar = p * p / 16 * (f / Spp) ** (2 / (p - 2))
    A0_star = (p - 2) / 2 * ((4 - p) / p) ** ((4 - p) / (p - 2)) * (f * C_p**p) ** (2 / (p - 2))
    return A0, A0_bar, A0_star


def default_beta(N: int, p: float) -> float:
    ts = 2 * N / (N - 2)
    return p * (ts - p) / (2 * (ts - 2))


def lower_bound_radii(params: ProblemParams, S_p: float, C_p: float, beta: Optional[float] = None):
    """(r_hat, R_a, R_hat_a) of the N >= 5 lower-boundedness argument."""
    N, p, a = params.N, params.p, params.a
    if N <= 4:
        raise DomainError("lower_bound_radii needs N >= 5")
    if not a > 0:
        raise DomainError("lower_bound_radii needs a > 0")
    ts = 2 * N / (N - 2)
    if beta is None:
        beta = default_beta(N, p)
    if not 0 < beta < p * (ts - p) / (ts - 2):
        raise DomainError(f"beta={beta} outside (0, p(2*-p)/(2*-2))")
    fmax = params.f_max
    r_hat = (p * S_p**p / (2 * fmax)) ** (1 / (p - 2))
    alpha = ts * (p - 2) / (p * (ts - 2))
    inner = fmax * C_p**p * beta ** (-(1 - alpha) * p / 2)
    R_a = ((4 * ts / (a * alpha * p * p)) * inner ** (ts / (alpha * p))) ** (1 / (4 - ts))
    # ||u||_D < R_a and mass above Q force J >= 0, so ||u||_H1^2 < R_a^2 + Q suffices
    Q = (2 * ts / (alpha * p)) * inner ** (ts / (alpha * p)) * R_a**ts / (
        0.5 - beta / ((1 - alpha) * p * p))
    R_hat = math.sqrt(R_a * R_a + Q)
    return r_hat, R_a, R_hat


def a_crit_high_dim(N: int, b: float, G: float) -> float:
    """Fold coupling of the N >= 5 branch equation."""
    if N <= 4:
        raise DomainError("a_crit is defined for N >= 5")
    if not (b > 0 and G > 0):
        raise DomainError("need b > 0 and G > 0")
    return ((N - 4) / (N - 2)) ** ((N - 2) / 2) * 2 / ((N - 4) * b ** ((N - 4) / 2) * G)


@dataclass
class ThresholdSet:
    N: int
    p: float
    b: float
    coupling_scale: float
    d_p: float
    S_p: float
    C_p: float
    lambda0: Optional[float] = None
    lambda_: Optional[float] = None
    a_star_lower: Optional[float] = None
    a_star_upper: Optional[float] = None
    a_star_under: Optional[float] = None
    nonexist_lower: Optional[float] = None
    nonexist_upper: Optional[float] = None
    A0: Optional[float] = None
    A0_bar: Optional[float] = None
    A0_star: Optional[float] = None
    a_crit: Optional[float] = None
    r_hat: Optional[float] = None
    R_a: Optional[float] = None
    R_hat_a: Optional[float] = None
    notes: dict = field(default_factory=dict)

    PROVENANCE = {
        "d_p": "closed-form", "S_p": "closed-form", "C_p": "closed-form",
        "lambda0": "closed-form", "lambda_": "closed-form",
        "a_star_lower": "dilation-family lower bound", "a_star_upper": "bracket",
        "a_star_under": "dilation-family lower bound",
        "nonexist_lower": "bracket", "nonexist_upper": "bracket",
        "A0": "closed-form", "A0_bar": "closed-form", "A0_star": "closed-form",
        "a_crit": "closed-form", "r_hat": "closed-form", "R_a": "closed-form",
        "R_hat_a": "closed-form",
    }

    def as_dict(self) -> dict:
        d = asdict(self)
        d["provenance"] = {k: v for k, v in self.PROVENANCE.items() if d.get(k) is not None}
        return d

    def values(self) -> dict:
        return {k: getattr(self, k) for k in self.PROVENANCE if getattr(self, k) is not None}


def compute_thresholds(params: ProblemParams, gs=None, beta=None) -> ThresholdSet:
    """Every named constant for (N, p, f bounds); coupling thresholds scaled to params.b."""
    from .ground_state import find_ground_state

    N, p = params.N, params.p
    if gs is None:
        gs = find_ground_state(N, p, params.f_inf)
    S_p = gs.S_p
    C_p = gn_sharp_constant(gs)
    cs = params.coupling_scale()
    ts = ThresholdSet(N=N, p=p, b=params.b, coupling_scale=cs, d_p=d_of_p(p), S_p=S_p, C_p=C_p)
    try:
        ts.lambda0 = lambda0(params, S_p)
    except PreconditionError as exc:
        ts.notes["lambda0"] = str(exc)
    A0, A0b, A0s = theorem_t5_constants(params, S_p, C_p)
    ts.A0, ts.A0_bar, ts.A0_star = A0, A0b * cs, A0s * cs
    ts.notes["A0"] = "compared with sqrt(a^2+4)+2/a in the b = 1 normalisation"
    a_low = None
    if N >= 4:
        br = a_star_bracket(params, gs)
        a_low = br.lower
        ts.a_star_lower, ts.a_star_upper = br.lower * cs, br.upper * cs
        if br.under is not None:
            ts.a_star_under = br.under * cs
        lo, hi = nonexistence_threshold(br, p)
        ts.nonexist_lower, ts.nonexist_upper = lo * cs, hi * cs
    if ts.lambda0 is not None:
        ts.lambda_ = lambda_(params, S_p, a_low) * cs
    if N >= 5:
        ts.a_crit = a_crit_high_dim(N, params.b, gs.G)
        if params.a > 0:
            ts.r_hat, ts.R_a, ts.R_hat_a = lower_bound_radii(params, S_p, C_p, beta)
        else:
            ts.r_hat = (p * S_p**p / (2 * params.f_max)) ** (1 / (p - 2))
            ts.notes["R_a"] = "needs a > 0"
    return ts
