"""The free functional, its gradient, and the Nehari ray projection.

For coupling strength lam >= 0 and exponent p in (4, 6) the functional is

    I(u) = 1/2 ||u||^2 + lam/4 * C(u) - 1/p * P(u)

with ||u||^2 the squared H^1 norm, C(u) the nonlocal coupling integral of
the potential sourced by u^2, and P(u) the p-th power integral (of the
positive part when the positive-part variant is selected).  The constraint
G(u) = ||u||^2 + lam C(u) - P(u) cuts out the Nehari manifold, on which

    I(u) = (p-2)/(2p) ||u||^2 + lam (p-4)/(4p) C(u),

so the constrained energy is positive and coercive precisely because p > 4.

Along a ray t -> t*u the constraint reads t^2 * g(t) with

    g(t) = A + lam B t^2 - C t^(p-2),   A = ||u||^2, B = C(u), C = P(u),

and g(t)/t^2 is strictly decreasing for p > 4, which makes the projection
root unique and bracketing bisection provably correct.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DegenerateRayError
from .grid import ScalarField, h1_norm_sq
from .poisson import DEFAULT_TOL, coupling_term, solve_poisson

import numpy as np


@dataclass(frozen=True)
class ProblemParams:
    """Coupling lam, exponent p, and the nonlinearity variant.

    ``lam = 0`` selects the uncoupled comparison problem.  ``omega`` is
    part of the model but fixed to 1 here.  With ``positive_part`` the
    p-term uses (u+)^p, the variant whose minimizers are nonnegative; the
    signed variant remains available for identity tests.
    """

    lam: float
    p: float
    omega: float = 1.0
    positive_part: bool = True

    def __post_init__(self):
        if not 4.0 < self.p < 6.0:
            raise ValueError(f"p must lie in (4, 6), got {self.p}")
        if self.lam < 0:
            raise ValueError("lam must be >= 0")
        if self.omega != 1.0:
            raise ValueError("omega is fixed to 1")


@dataclass(frozen=True)
class EnergyBreakdown:
    """All scalar pieces of one energy evaluation."""

    h1: float
    coupling: float
    lp: float
    I: float
    G: float
    I_constrained: float


def signed_power(x, q):
    """sign(x) * |x|^q elementwise; |x| below 1e-300 maps to 0."""
    ax = np.abs(x)
    out = np.where(ax < 1e-300, 0.0, np.sign(x) * ax ** q)
    return out


def _lp_integral(u, params):
    if params.positive_part:
        vals = np.maximum(u.values, 0.0)
    else:
        vals = np.abs(u.values)
    return float(u.grid.h ** 3 * np.sum(vals ** params.p))


def _terms(u, params, cache=None, tol=DEFAULT_TOL):
    """(A, B, C, phi) = (h1 total, coupling, p-integral, potential)."""
    _, _, A = h1_norm_sq(u)
    C = _lp_integral(u, params)
    if params.lam == 0.0:
        return A, 0.0, C, None
    phi = cache.phi(u) if cache is not None else solve_poisson(u, tol=tol).phi
    B = coupling_term(u, phi)
    return A, B, C, phi


def ray_energy(t, A, B, C, params):
    """I(t*u) from the homogeneous pieces of u."""
    p = params.p
    return 0.5 * t ** 2 * A + 0.25 * params.lam * t ** 4 * B - (t ** p / p) * C


def _breakdown(A, B, C, params):
    p = params.p
    I = 0.5 * A + 0.25 * params.lam * B - C / p
    G = A + params.lam * B - C
    I_c = (p - 2.0) / (2.0 * p) * A + params.lam * (p - 4.0) / (4.0 * p) * B
    return EnergyBreakdown(h1=A, coupling=B, lp=C, I=I, G=G, I_constrained=I_c)


def evaluate(u, params, cache=None, tol=DEFAULT_TOL):
    """Full EnergyBreakdown of u (one internal Poisson solve)."""
    if not np.any(u.values):
        return EnergyBreakdown(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    A, B, C, _ = _terms(u, params, cache=cache, tol=tol)
    return _breakdown(A, B, C, params)


def gradient(u, params, cache=None, tol=DEFAULT_TOL):
    """Free gradient as a field: (-Lap)u + u + lam phi u - |u|^(p-2) u.

    The coupling differentiates to lam*phi*u exactly because the coupling
    integral is quartic in u and enters the functional with weight lam/4.
    With the positive-part variant the last term is -(u+)^(p-1).
    The pairing <gradient(u), v> h^3 is the directional derivative of I.
    """
    vals = u.values
    out = u.grid.lap @ vals + vals
    if params.lam != 0.0 and np.any(vals):
        phi = cache.phi(u) if cache is not None else solve_poisson(u, tol=tol).phi
        out = out + params.lam * phi.values * vals
    if params.positive_part:
        out = out - np.maximum(vals, 0.0) ** (params.p - 1.0)
    else:
        out = out - signed_power(vals, params.p - 1.0)
    return ScalarField(u.grid, out)


def ray_root(A, B, C, params):
    """Unique t > 0 with G(t*u) = 0 given the homogeneous pieces.

    Bisection on the strictly decreasing g(t)/t^2, then one Newton polish
    on g itself (quadratic convergence makes the result machine-accurate).
    """
    if C <= 0.0:
        raise DegenerateRayError("p-integral vanishes; the ray never crosses the manifold")
    lam, p = params.lam, params.p

    def g(t):
        return A + lam * B * t * t - C * t ** (p - 2.0)

    t_lo = 1e-8
    if g(t_lo) <= 0.0:
        # root below the standard bracket; walk down
        while g(t_lo) <= 0.0:
            t_lo *= 0.5
            if t_lo < 1e-300:
                raise DegenerateRayError("no positive crossing found")
    t_hi = 1.0
    doublings = 0
    while g(t_hi) > 0.0:
        t_hi *= 2.0
        doublings += 1
        if doublings > 64:
            raise DegenerateRayError("no sign change up to 2^64")
    if t_hi > 1.0:
        t_lo = max(t_lo, t_hi / 2.0)

    while (t_hi - t_lo) > 1e-12 * t_hi:
        mid = 0.5 * (t_lo + t_hi)
        if g(mid) > 0.0:
            t_lo = mid
        else:
            t_hi = mid
    t = 0.5 * (t_lo + t_hi)
    dg = 2.0 * lam * B * t - (p - 2.0) * C * t ** (p - 3.0)
    if dg != 0.0:
        t = t - g(t) / dg
    return float(t)


def nehari_project(u, params, cache=None, tol=DEFAULT_TOL):
    """Scale u onto the Nehari manifold: returns (t, t*u) with G(t*u) = 0."""
    if not np.any(u.values):
        raise DegenerateRayError("cannot project the zero field")
    A, B, C, _ = _terms(u, params, cache=cache, tol=tol)
    t = ray_root(A, B, C, params)
    return t, u * t


def ray_max_energy(u, params, cache=None, tol=DEFAULT_TOL):
    """max over t > 0 of I(t*u), attained at the Nehari crossing.

    The maximum property holds because dI(tu)/dt = G(tu)/t changes sign
    exactly once on the ray when p > 4.  Computed from the homogeneous
    pieces, so it is exactly invariant under ray rescaling.
    """
    if not np.any(u.values):
        raise DegenerateRayError("zero field has no ray")
    A, B, C, _ = _terms(u, params, cache=cache, tol=tol)
    t = ray_root(A, B, C, params)
    return ray_energy(t, A, B, C, params)
