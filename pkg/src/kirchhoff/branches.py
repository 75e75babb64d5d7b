"""Radial solutions of the autonomous Kirchhoff equation as dilations of w0.

v(x) = w0(x / sqrt(K)) solves -(a int|grad v|^2 + b) Lap v + v = f_inf v^{p-1}
exactly when K = b + a K^{(N-2)/2} G with G = int|grad w0|^2.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field

from scipy.optimize import brentq

from .fibering import FunctionData, fiber_value
from .params import ProblemParams

DOUBLE_ROOT_TOL = 1e-12
RESIDUAL_TOL = 1e-10


def _powK(K, e):
    # exp/log power guarded at K -> 0+
    return math.exp(e * math.log(K)) if K > 0 else 0.0


def branch_psi(K, a, b, G, N):
    """psi(K) = a G K^{(N-2)/2} - K + b; roots are the branch scales."""
    return a * G * _powK(K, (N - 2) / 2) - K + b


def solve_branch(params: ProblemParams, G: float):
    """Sorted list of (K, multiplicity) for the branch equation."""
    N, a, b = params.N, params.a, params.b
    if not G > 0:
        raise ValueError("G must be positive")
    if a == 0:
        return [(b, 1)]
    aG = a * G
    if N == 2:
        return [(b + aG, 1)]
    if N == 3:
        s = (aG + math.sqrt(aG * aG + 4 * b)) / 2
        return [(s * s, 1)]
    if N == 4:
        return [(b / (1 - aG), 1)] if aG < 1 else []
    if N == 1:
        fun = lambda K: K - b - aG / math.sqrt(K)
        hi = b + aG / math.sqrt(b)
        return [(brentq(fun, b, hi, xtol=1e-300, rtol=1e-15, maxiter=500), 1)]
    m = (N - 2) / 2
    psi = lambda K: branch_psi(K, a, b, G, N)
    K_min = (a * m * G) ** (-1 / (m - 1))
    v = psi(K_min)
    if abs(v) < DOUBLE_ROOT_TOL * max(b, K_min):
        return [(K_min, 2)]
    if v > 0:
        return []
    k1 = brentq(psi, b, K_min, xtol=1e-300, rtol=1e-15, maxiter=500)
    hi = 2 * K_min
    while psi(hi) <= 0:
        hi *= 2
    k2 = brentq(psi, K_min, hi, xtol=1e-300, rtol=1e-15, maxiter=500)
    return [(k1, 1), (k2, 1)]


def empirical_fold(params: ProblemParams, G: float, rtol: float = 1e-12):
    """Coupling where the N >= 5 branch loses its roots, by bisection on root count."""
    lo, hi = 0.0, 1.0 / G
    while solve_branch(params.with_a(hi), G):
        lo, hi = hi, 2 * hi
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if solve_branch(params.with_a(mid), G):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass
class BranchSolution:
    K: float
    multiplicity: int
    a: float
    dir_sq: float
    mass: float
    fp: float
    h1b_sq: float
    energy: float
    h_pp: float
    nehari_class: str
    norm_h1: float
    branch_residual: float
    nehari_residual: float

    @property
    def data(self) -> FunctionData:
        return FunctionData(self.h1b_sq, self.dir_sq, self.mass, self.fp)

    def as_dict(self) -> dict:
        return asdict(self)


class ParamsMismatch(ValueError):
    pass


def materialize(K: float, gs, params: ProblemParams, multiplicity: int = 1) -> BranchSolution:
    """Integrals, energy and Nehari class of v = w0(x/sqrt(K))."""
    N, p, a, b = params.N, params.p, params.a, params.b
    if gs.N != N or gs.p != p or abs(gs.f_inf - params.f_inf) > 1e-12 * params.f_inf:
        raise ParamsMismatch(
            f"ground state ({gs.N}, {gs.p}, {gs.f_inf}) does not match "
            f"({N}, {p}, {params.f_inf})"
        )
    d = _powK(K, (N - 2) / 2) * gs.G
    mass = _powK(K, N / 2) * gs.M
    fp = _powK(K, N / 2) * gs.f_inf * gs.P
    h1b = b * d + mass
    data = FunctionData(h1b, d, mass, fp)
    h_pp = -2 * h1b + (4 - p) * fp
    scale = max(h1b, fp)
    cls = "ZERO" if abs(h_pp) <= 1e-9 * scale else ("MINUS" if h_pp < 0 else "PLUS")
    return BranchSolution(
        K=K, multiplicity=multiplicity, a=a, dir_sq=d, mass=mass, fp=fp, h1b_sq=h1b,
        energy=float(fiber_value(1.0, data, params)), h_pp=h_pp, nehari_class=cls,
        norm_h1=math.sqrt(d + mass),
        branch_residual=abs(K - b - a * _powK(K, (N - 2) / 2) * gs.G) / K,
        nehari_residual=abs(h1b + a * d * d - fp) / scale,
    )


def solutions(params: ProblemParams, gs):
    return [materialize(K, gs, params, m) for K, m in solve_branch(params, gs.G)]


@dataclass
class BranchDiagram:
    rows: list
    fold_empirical: float | None = None
    fold_closed: float | None = None

    def write_csv(self, path) -> None:
        cols = ["a", "K_1", "K_2", "class_1", "class_2", "J_1", "J_2", "norm_1", "norm_2"]
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(cols)
            for row in self.rows:
                sols = row["solutions"]
                cells = [row["a"]]
                for key in ("K", "nehari_class", "energy", "norm_h1"):
                    for i in range(2):
                        cells.append(sols[i][key] if i < len(sols) else "")
                wr.writerow([_fmt(x) for x in cells])


def _fmt(x):
    return format(x, ".17g") if isinstance(x, float) else str(x)


def branch_diagram(params: ProblemParams, gs, a_grid) -> BranchDiagram:
    a_grid = [float(a) for a in a_grid]
    if any(y < x for x, y in zip(a_grid, a_grid[1:])):
        raise ValueError("a_grid must be monotone increasing")
    rows = []
    for a in a_grid:
        sols = solutions(params.with_a(a), gs)
        rows.append({"a": a, "n_roots": len(sols), "solutions": [s.as_dict() for s in sols]})
    diag = BranchDiagram(rows)
    if params.N >= 5:
        from .constants import a_crit_high_dim

        diag.fold_closed = a_crit_high_dim(params.N, params.b, gs.G)
        counts = [r["n_roots"] for r in rows]
        if counts and counts[0] and not counts[-1]:
            diag.fold_empirical = empirical_fold(params, gs.G)
    return diag


@dataclass
class T1Report:
    N: int
    a: float
    lam: float
    n_roots: int
    checks: dict = field(default_factory=dict)
    solutions: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def as_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d


def theorem_t1_checks(params: ProblemParams, gs, lam: float | None = None) -> T1Report:
    """Root count and the norm/energy separation of the two N >= 5 solutions."""
    from .constants import compute_thresholds

    if lam is None:
        lam = compute_thresholds(params.with_a(0.0), gs).lambda_
    sols = solutions(params, gs)
    rep = T1Report(N=params.N, a=params.a, lam=lam, n_roots=len(sols),
                   solutions=[s.as_dict() for s in sols])
    rep.checks["a<Lambda"] = params.a < lam
    p, f = params.p, params.f_inf
    X = (2 * gs.S_p**p / (f * (4 - p))) ** (1 / (p - 2))
    e_low = (p - 2) / (2 * p) * (gs.S_p**p / f) ** (2 / (p - 2))
    if params.N <= 4:
        rep.checks["one_root"] = len(sols) == 1
        if sols:
            rep.checks["energy>=semilinear_level"] = sols[0].energy >= e_low * (1 - 1e-12)
        return rep
    rep.checks["two_roots"] = len(sols) == 2
    if len(sols) == 2:
        vm, vp = sols
        rep.checks["norm_minus<X"] = vm.norm_h1 < X
        rep.checks["sqrt2*X<norm_plus"] = math.sqrt(2) * X < vp.norm_h1
        rep.checks["J_plus<0"] = vp.energy < 0
        rep.checks["J_minus>0"] = vm.energy > 0
        rep.checks["J_minus>semilinear_level"] = vm.energy > e_low
    return rep
