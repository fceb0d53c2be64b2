"""The nonlocal sub-problem: -Lap phi = u^2 with phi = 0 on the boundary.

The discrete operator is an SPD M-matrix, so the solution exists, is
unique, and inherits the maximum principle: a nonnegative right-hand side
(u^2 always is) yields a nonnegative potential up to solver tolerance.
The solve is plain conjugate gradients with Jacobi preconditioning; on
this operator the diagonal is the constant 6/h^2, so Jacobi reduces to an
exact scalar rescaling and simply keeps the implementation uniform.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg as spla

from .errors import NoConvergenceError
from .grid import ScalarField

DEFAULT_TOL = 1e-10


@dataclass
class PoissonSolution:
    """Potential phi with its solve diagnostics."""

    phi: ScalarField
    residual_norm: float
    cg_iterations: int


def default_iteration_cap(n_interior):
    return max(500, int(10 * np.sqrt(n_interior)))


def solve_poisson(u, tol=DEFAULT_TOL, maxiter=None):
    """CG solution of (-Lap) phi = u^2 to relative residual <= tol."""
    if tol <= 0:
        raise ValueError("tol must be > 0")
    grid = u.grid
    rhs = u.values * u.values
    rhs_norm = np.linalg.norm(rhs)
    if rhs_norm == 0.0:
        return PoissonSolution(grid.zeros(), 0.0, 0)

    lap = grid.lap
    inv_diag = 1.0 / lap.diagonal()
    precond = spla.LinearOperator(lap.shape, matvec=lambda x: inv_diag * x)
    if maxiter is None:
        maxiter = default_iteration_cap(grid.n_interior)

    count = [0]

    def tick(_):
        count[0] += 1

    phi, info = spla.cg(lap, rhs, rtol=tol, atol=0.0, maxiter=maxiter, M=precond, callback=tick)
    residual = float(np.linalg.norm(lap @ phi - rhs) / rhs_norm)
    if info != 0 or residual > tol:
        raise NoConvergenceError(
            f"Poisson CG hit cap {maxiter} at relative residual {residual:.3e}",
            residual=residual,
            iterations=count[0],
        )
    return PoissonSolution(ScalarField(grid, phi), residual, count[0])


def coupling_term(u, phi):
    """h^3 sum phi_i u_i^2; nonnegative when phi solves the sub-problem."""
    if u.grid.token != phi.grid.token:
        from .errors import GridMismatchError

        raise GridMismatchError("u and phi live on different grids")
    return float(u.grid.h ** 3 * np.sum(phi.values * u.values * u.values))


class PhiCache:
    """Small per-worker cache of potentials keyed on field content.

    One minimization run owns one cache, so concurrent runs never share
    state and results cannot depend on scheduling.  ``seed`` lets the
    solver store the exactly rescaled potential of a ray-projected field
    (phi scales by t^2 when u scales by t, with unchanged relative
    residual), saving one CG solve per accepted step.
    """

    def __init__(self, capacity=8, tol=DEFAULT_TOL):
        self.capacity = capacity
        self.tol = tol
        self._store = {}

    def phi(self, u):
        key = u.content_key()
        hit = self._store.get(key)
        if hit is not None:
            return hit
        phi = solve_poisson(u, tol=self.tol).phi
        self._insert(key, phi)
        return phi

    def seed(self, u, phi):
        self._insert(u.content_key(), phi)

    def _insert(self, key, phi):
        if len(self._store) >= self.capacity:
            self._store.pop(next(iter(self._store)))
        self._store[key] = phi
