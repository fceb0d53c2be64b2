"""Critical-exponent toolkit: instantons, the best Sobolev constant, sweeps.

The critical problem (exponent 6 in 3D) has the explicit extremal family

    U_R(x - a) = (3 R^2)^(1/4) / (R^2 + |x - a|^2)^(1/2),

whose gradient energy and critical norm are conformally invariant in R.
The best Sobolev constant S is computed by 1D radial quadrature of this
closed form rather than by grid minimization: a grid minimizer
concentrates below resolution and systematically underestimates S, while
the quadrature route is exact up to 1D quadrature error.  The critical
ground-state level is m_star = S^(3/2) / 3.

Sweeps in p toward the critical exponent record, per exponent, the
coupled and uncoupled ground-state levels, the ray scaling onto the
critical manifold, and a concentration estimate.  Limit statements are
only checked as monotone trends at fixed resolution: true concentration
outruns any fixed grid.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace

import numpy as np

from ._util import parallel_map
from .energy import _lp_integral
from .errors import NotConvergedError, TailTooLargeError, ZeroFieldError
from .grid import ScalarField, h1_norm_sq, integrate_power
from .poisson import coupling_term, solve_poisson
from .solver import SolveOptions, find_ground_state


@dataclass(frozen=True)
class Instanton:
    """Extremal profile with scale R and center a (small R = concentrated)."""

    R: float
    a: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if self.R <= 0:
            raise ValueError("R must be > 0")


def instanton_profile(r, R):
    """Radial closed form (3 R^2)^(1/4) / (R^2 + r^2)^(1/2)."""
    return (3.0 * R * R) ** 0.25 / np.sqrt(R * R + np.asarray(r, dtype=float) ** 2)


def instanton_field(inst, grid):
    """Sample the instanton at interior nodes (no truncation correction).

    U is positive everywhere, so the Dirichlet masking introduces a
    boundary error that decays with the domain size; callers wanting a
    clean profile use a large box.
    """
    r = np.linalg.norm(grid.coords - np.asarray(inst.a), axis=1)
    return ScalarField(grid, instanton_profile(r, inst.R))


def sobolev_constant(quadrature_points=100_000, R=1.0, cut_ratio=1e9):
    """(S, grad_energy, crit_norm) by radial quadrature of the instanton.

    Substituting r = R tan(u) maps the half-line to [0, pi/2) and turns
    both integrands into bounded trigonometric profiles; composite Simpson
    with ``quadrature_points`` nodes then converges to machine precision.
    The cut at r = cut_ratio * R leaves analytic tails bounded by the
    leftover angular width; TailTooLarge fires if either bound exceeds
    1e-8 of its integral.  The result is R-independent (conformal
    invariance), which callers should and do check.
    """
    if quadrature_points < 1000:
        raise ValueError("quadrature_points must be >= 1000")
    n = int(quadrature_points)
    if n % 2 == 0:
        n += 1
    delta = math.atan(1.0 / cut_ratio)
    u_max = math.pi / 2.0 - delta
    u = np.linspace(0.0, u_max, n)
    r = R * np.tan(u)
    sec2 = 1.0 + np.tan(u) ** 2
    denom = (R * R + r * r) ** 3
    jac = 4.0 * math.pi * R * sec2
    f_grad = math.sqrt(3.0) * R * (r ** 4 / denom) * jac
    f_crit = (3.0 * R * R) ** 1.5 * (r ** 2 / denom) * jac

    w = np.ones(n)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    step = u_max / (n - 1)
    grad_energy = float(step / 3.0 * (w @ f_grad))
    crit_norm = float(step / 3.0 * (w @ f_crit))

    # tails: transformed integrands are 4 pi sqrt(3) sin^4 and
    # 12 pi sqrt(3) sin^2 cos^2; bound them on the leftover interval
    tail_grad = 4.0 * math.pi * math.sqrt(3.0) * delta
    tail_crit = 12.0 * math.pi * math.sqrt(3.0) * delta ** 3
    if tail_grad > 1e-8 * grad_energy or tail_crit > 1e-8 * crit_norm:
        raise TailTooLargeError(
            f"tail bounds {tail_grad:.2e}/{tail_crit:.2e} exceed 1e-8 of the integrals"
        )

    S = grad_energy / crit_norm ** (1.0 / 3.0)
    return S, grad_energy, crit_norm


def critical_level(quadrature_points=100_000):
    """m_star = S^(3/2) / 3, the critical ground-state level."""
    S, _, _ = sobolev_constant(quadrature_points)
    return S ** 1.5 / 3.0


def critical_energy(u):
    """(I_star, G_star) of the critical functional on the grid quadrature."""
    _, _, A = h1_norm_sq(u)
    B6 = integrate_power(u, 6.0)
    return A / 2.0 - B6 / 6.0, A - B6


def critical_ray_max(u):
    """max over t > 0 of I_star(t u) = (1/3) (A / B^(1/3))^(3/2)."""
    _, _, A = h1_norm_sq(u)
    B6 = integrate_power(u, 6.0)
    if B6 <= 0:
        raise ZeroFieldError("field has no critical-norm mass")
    return (A / B6 ** (1.0 / 3.0)) ** 1.5 / 3.0


def concentration_diagnostic(u):
    """(R_est, center, peak): best-fit instanton scale of a peaked field.

    Inverts the closed-form peak value peak = 3^(1/4) / sqrt(R), giving
    R_est = sqrt(3) / peak^2 (the family parameter: smaller R means
    sharper concentration).  Diagnostic only.
    """
    if not np.any(u.values):
        raise ZeroFieldError("cannot localize the zero field")
    i = int(np.argmax(u.values))
    peak = float(u.values[i])
    center = u.grid.coords[i].copy()
    r_est = math.sqrt(3.0) / (peak * peak)
    return r_est, center, peak


@dataclass
class SweepRecord:
    """One exponent's worth of sweep output (one CSV row)."""

    p: float
    lam: float
    resolution: int
    m_p: float
    m_tilde_p: float
    t_star_simple: float
    t_star_full: float
    R_est: float
    iterations: int
    converged: bool
    runtime_s: float
    norm_h1: float

    CSV_COLUMNS = (
        "p", "lambda", "resolution", "m_p", "m_tilde_p", "t_star_simple",
        "t_star_full", "R_est", "iterations", "converged", "runtime_s",
    )

    def csv_row(self):
        return [self.p, self.lam, self.resolution, self.m_p, self.m_tilde_p,
                self.t_star_simple, self.t_star_full, self.R_est,
                self.iterations, self.converged, self.runtime_s]


def _critical_scalings(u, params):
    """(t_simple, t_full): ray scalings of u onto the critical manifold.

    t_simple solves t^4 = ||u||^2 / |u|_6^6; t_full uses the equivalent
    on-manifold rewrite (P(u) - lam C(u)) / |u|_6^6.  The two agree up to
    the Nehari residual and both are recorded.
    """
    _, _, A = h1_norm_sq(u)
    B6 = integrate_power(u, 6.0)
    t_simple = (A / B6) ** 0.25
    lp = _lp_integral(u, params)
    coup = coupling_term(u, solve_poisson(u).phi) if params.lam != 0.0 else 0.0
    num = lp - params.lam * coup
    t_full = (num / B6) ** 0.25 if num > 0 else float("nan")
    return t_simple, t_full


def sweep_p(grid, params_base, p_list, opts=None):
    """Ground states along a list of exponents, coupled and uncoupled.

    Per exponent this runs find_ground_state twice (the configured lam and
    lam = 0).  Failures are recorded per entry and the sweep continues.
    Records come back sorted by p.
    """
    if any(not 4.0 < p < 6.0 for p in p_list):
        raise ValueError("all sweep exponents must lie in (4, 6)")
    opts = opts or SolveOptions()

    def one(p):
        start = time.perf_counter()
        params = replace(params_base, p=float(p))
        tilde_params = replace(params, lam=0.0)
        m_p = m_tilde = float("nan")
        t_simple = t_full = r_est = norm = float("nan")
        iterations = 0
        ok = False
        try:
            gs = find_ground_state(grid, params, opts)
            tilde = find_ground_state(grid, tilde_params, opts)
            m_p, m_tilde = gs.m, tilde.m
            iterations = gs.iterations
            t_simple, t_full = _critical_scalings(gs.u, params)
            r_est, _, _ = concentration_diagnostic(gs.u)
            _, _, norm2 = h1_norm_sq(gs.u)
            norm = math.sqrt(norm2)
            ok = gs.converged and tilde.converged
        except NotConvergedError:
            ok = False
        return SweepRecord(
            p=float(p), lam=params_base.lam, resolution=grid.resolution,
            m_p=m_p, m_tilde_p=m_tilde, t_star_simple=t_simple,
            t_star_full=t_full, R_est=r_est, iterations=iterations,
            converged=ok, runtime_s=time.perf_counter() - start, norm_h1=norm,
        )

    records = parallel_map(one, sorted(p_list))
    return records
