"""Numeric p-modulus of the descending-path family of an explicit finite tree.

For ``1 < p < inf`` the solver maximizes the smooth concave dual

    g(lam) = sum(lam) - (1/q) sum_e (p sigma_e)**(1-q) u_e**q,   u = A^T lam,

over path multipliers ``lam >= 0`` (``A`` is the path-by-edge incidence
matrix) with damped Newton steps.  The primal density is recovered as
``rho_e = (u_e / (p sigma_e))**(q-1)``.  Every iterate yields a certified
bracket: the energy of ``rho`` rescaled to admissibility is an upper bound,
``g(lam)`` and the unit-flow bound of ``lam / sum(lam)`` are lower bounds.

``p = 1`` is a linear program, handed to HiGHS through scipy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import linalg, optimize

from .errors import DegenerateExponent, IndexMismatch, TooLarge
from .tree import DescendingPath, FiniteTree, validate

DEFAULT_MAX_LEAVES = 4096


@dataclass(frozen=True)
class SolveOptions:
    p: float = 2.0
    feas_tol: float = 1e-8
    rel_tol: float = 1e-10
    max_iter: int = 200
    seed: int = 0
    max_leaves: int = DEFAULT_MAX_LEAVES

    def __post_init__(self):
        if not (self.p == 1 or 1 < self.p < math.inf):
            raise DegenerateExponent(f"solver needs p = 1 or 1 < p < inf, got {self.p!r}")
        if not (self.feas_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass(frozen=True)
class SolveReport:
    """Solver output.

    ``value`` is the energy of ``density``, which satisfies every path
    constraint up to ``max_violation``; ``lower_bound`` comes from a unit
    flow or dual multipliers and never exceeds the true modulus.
    """

    value: float
    density: np.ndarray
    iterations: int
    max_violation: float
    lower_bound: float
    p: float
    converged: bool = True
    canonical: bool = True
    diagnostics: dict = field(default_factory=dict)

    @property
    def relative_gap(self) -> float:
        return (self.value - self.lower_bound) / self.value if self.value else 0.0


def _check_density(tree: FiniteTree, density) -> np.ndarray:
    rho = np.asarray(density, dtype=float).reshape(-1)
    if rho.size != tree.n_edges:
        raise IndexMismatch(f"density has {rho.size} entries for {tree.n_edges} edges")
    return rho


def energy(tree: FiniteTree, density, p: float) -> float:
    rho = _check_density(tree, density)
    if math.isinf(p):
        return float(np.max(tree.weights * rho))
    return math.fsum(tree.weights * rho**p)


def rho_length(tree: FiniteTree, density, path: DescendingPath) -> float:
    rho = _check_density(tree, density)
    edges = list(path.edges if isinstance(path, DescendingPath) else path)
    if any(e < 0 or e >= tree.n_edges for e in edges):
        raise IndexMismatch("path refers to an edge outside the tree")
    return math.fsum(rho[edges])


def path_lengths(tree: FiniteTree, density) -> np.ndarray:
    """``l_rho`` of every leaf path, ordered like ``tree.leaves``."""
    rho = _check_density(tree, density)
    return rho[tree.path_matrix].sum(axis=1)


def flow_bound(tree: FiniteTree, flow, p: float) -> float:
    """Unit-flow lower bound; see :func:`modtree.dual.lower_bound`."""
    eta = np.asarray(flow, dtype=float)
    w = tree.weights
    if p == 1:
        return 1.0 / float(np.max(eta / w))
    if math.isinf(p):
        return 1.0 / math.fsum(eta / w)
    t = 1.0 / (p - 1.0)
    mask = eta > 0
    s = math.fsum(w[mask] ** (-t) * eta[mask] ** (p * t))
    return s ** (-(p - 1.0))


def solve_finite_modulus(tree: FiniteTree, opts: Optional[SolveOptions] = None) -> SolveReport:
    opts = opts or SolveOptions()
    validate(tree)
    if tree.leaves.size > opts.max_leaves:
        raise TooLarge(f"{tree.leaves.size} leaf paths exceed the cap of {opts.max_leaves}")
    if opts.p == 1:
        return _solve_lp(tree, opts)
    return _solve_newton(tree, opts)


def _solve_newton(tree: FiniteTree, opts: SolveOptions) -> SolveReport:
    p = float(opts.p)
    q = p / (p - 1.0)
    e = q - 1.0
    A = tree.incidence
    At = A.T.tocsr()
    sigma = tree.weights
    coef = (p * sigma) ** (1.0 - q)
    n_paths = A.shape[0]

    def primal(lam):
        u = At @ lam
        return u, (u / (p * sigma)) ** e

    def dual(lam, u):
        return math.fsum(lam) - math.fsum(coef * u**q) / q

    def dual_scale(lam, u):
        return math.fsum(lam) + math.fsum(coef * u**q) / q

    n_e = np.asarray(A.sum(axis=0)).reshape(-1)
    kappa = (n_paths / float(np.sum(coef * n_e**q))) ** (1.0 / e)
    lam = np.full(n_paths, kappa)

    best_upper = math.inf
    best_rho = None
    best_lower = 0.0
    converged = False
    it = 0
    for it in range(1, opts.max_iter + 1):
        u, rho = primal(lam)
        lengths = A @ rho
        shortest = float(lengths.min())
        upper = float(np.sum(sigma * rho**p)) / shortest**p
        if upper < best_upper:
            best_upper, best_rho = upper, rho / shortest
        g = dual(lam, u)
        eta = u / lam.sum()
        best_lower = max(best_lower, g, flow_bound(tree, eta, p))
        if best_upper - best_lower <= opts.rel_tol * best_upper:
            converged = True
            break

        grad = 1.0 - lengths
        D = e * rho / u
        M = (A.multiply(D) @ At).toarray()
        try:
            step = linalg.cho_solve(linalg.cho_factor(M), grad)
        except linalg.LinAlgError:
            M[np.diag_indices_from(M)] += 1e-14 * np.trace(M) / n_paths
            step = linalg.solve(M, grad, assume_a="sym")

        neg = step < 0
        t = 1.0
        if neg.any():
            t = min(1.0, 0.99 * float(np.min(-lam[neg] / step[neg])))
        slope = float(grad @ step)
        for _ in range(60):
            trial = lam + t * step
            # Near the optimum g changes by less than its rounding error.
            if dual(trial, At @ trial) >= g + 1e-4 * t * slope - 1e-14 * dual_scale(lam, u):
                break
            t *= 0.5
        lam = trial

    lengths = path_lengths(tree, best_rho)
    violation = max(0.0, 1.0 - float(lengths.min()))
    return SolveReport(
        value=best_upper,
        density=best_rho,
        iterations=it,
        max_violation=violation,
        lower_bound=min(best_lower, best_upper),
        p=p,
        converged=converged,
        diagnostics={"method": "newton-dual", "paths": n_paths},
    )


def _solve_lp(tree: FiniteTree, opts: SolveOptions) -> SolveReport:
    A = tree.incidence
    sigma = tree.weights
    res = optimize.linprog(
        sigma,
        A_ub=-A,
        b_ub=-np.ones(A.shape[0]),
        bounds=(0, None),
        method="highs",
    )
    if res.status != 0:
        raise RuntimeError(f"linear program failed: {res.message}")
    rho = np.clip(res.x, 0.0, None)
    lam = np.clip(-res.ineqlin.marginals, 0.0, None)
    lower = 0.0
    if lam.sum() > 0:
        lower = flow_bound(tree, A.T @ lam / lam.sum(), 1.0)
    value = float(sigma @ rho)
    canonical = False
    if tree.is_radially_symmetric():
        masses = [float(sigma[s].sum()) for s in tree.shells]
        k = int(np.argmin(masses))
        if masses[k] <= value * (1 + opts.rel_tol) + opts.feas_tol:
            rho = np.zeros(tree.n_edges)
            rho[tree.shells[k]] = 1.0
            value = masses[k]
            canonical = True
    lengths = path_lengths(tree, rho)
    return SolveReport(
        value=value,
        density=rho,
        iterations=int(getattr(res, "nit", 0)),
        max_violation=max(0.0, 1.0 - float(lengths.min())),
        lower_bound=min(lower, value),
        p=1.0,
        converged=True,
        canonical=canonical,
        diagnostics={"method": "highs-lp", "paths": int(A.shape[0])},
    )


def series_parallel_modulus(tree: FiniteTree, p: float) -> float:
    """Bottom-up series/parallel reduction; independent of the solver."""
    if not (1 < p < math.inf):
        raise DegenerateExponent(f"series-parallel reduction needs 1 < p < inf, got {p!r}")
    validate(tree)
    t = 1.0 / (p - 1.0)
    M = tree.weights.astype(float).copy()
    par = tree.parents
    gen = tree.generation
    for k in range(tree.depth, 1, -1):
        shell = np.flatnonzero(gen == k)
        below = np.bincount(par[shell], weights=M[shell], minlength=tree.n_edges)
        up = tree.shells[k - 2]
        M[up] = (tree.weights[up] ** (-t) + below[up] ** (-t)) ** (-1.0 / t)
    return math.fsum(M[tree.shells[0]])


@dataclass(frozen=True)
class SymmetryVerdict:
    ok: bool
    worst_shell: Optional[int]
    spread: float


def shell_average(tree: FiniteTree, density) -> np.ndarray:
    """Replace each entry by the weighted mean over its shell."""
    rho = _check_density(tree, density).copy()
    for shell in tree.shells:
        rho[shell] = rho[shell].mean()
    return rho


def symmetrize_check(tree: FiniteTree, report, tol: float = 1e-5) -> SymmetryVerdict:
    """Is the density constant on every shell to relative tolerance ``tol``?"""
    rho = report.density if isinstance(report, SolveReport) else np.asarray(report, dtype=float)
    rho = _check_density(tree, rho)
    worst, worst_k = 0.0, None
    for k, shell in enumerate(tree.shells, start=1):
        vals = rho[shell]
        top = float(np.max(np.abs(vals)))
        spread = float(vals.max() - vals.min()) / top if top > 0 else 0.0
        if spread > worst:
            worst, worst_k = spread, k
    return SymmetryVerdict(worst <= tol, worst_k if worst > tol else None, worst)
