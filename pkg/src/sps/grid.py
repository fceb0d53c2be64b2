"""Domains, uniform grids, the discrete Laplacian, and quadrature.

The domain Omega is a bounded region of R^3 containing the origin.  It is
discretized on a uniform cubic lattice spanning a cube that encloses Omega;
fields live on the *interior* nodes only (lattice points strictly inside
Omega).  The Dirichlet condition u = 0 on the boundary is imposed by
eliminating all non-interior nodes, which also realizes the trivial
extension of u by zero outside Omega.

The negative Laplacian is the 7-point stencil

    (-Lap u)_i = (6 u_i - sum_j u_j) / h^2

with missing neighbors contributing zero.  This operator is a symmetric
M-matrix, hence positive definite on the interior nodes, which is what the
discrete maximum principle and every positivity claim downstream rely on.
All integrals are mass-lumped node sums scaled by h^3, so summation by
parts (the discrete Green identity) holds exactly rather than up to
quadrature error.
"""

from __future__ import annotations

import hashlib
import itertools
import os
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import EmptyInteriorError, GridMismatchError, NonFiniteFieldError

_grid_counter = itertools.count(1)

#: Ljusternik-Schnirelmann category of the closure, supplied as metadata
#: per domain kind (never computed).  For a union of disjoint balls the
#: closure has one contractible component per ball.
CATEGORY_BY_KIND = {"ball": 1, "box": 1, "shell": 2}


@dataclass(frozen=True)
class DomainSpec:
    """Geometric description of the domain Omega (origin always inside).

    Exactly one parameter set is used depending on ``kind``:

    - ``ball``: ``radius``
    - ``box``: ``half_widths`` (three positive half-extents)
    - ``shell``: ``inner`` < ``outer`` (spherical shell radii)
    - ``ball_union``: ``balls`` as a tuple of ((cx, cy, cz), radius)
    """

    kind: str
    radius: float | None = None
    half_widths: tuple[float, float, float] | None = None
    inner: float | None = None
    outer: float | None = None
    balls: tuple[tuple[tuple[float, float, float], float], ...] | None = None

    def __post_init__(self):
        if self.kind == "ball":
            if self.radius is None or self.radius <= 0:
                raise ValueError("ball radius must be > 0")
        elif self.kind == "box":
            if self.half_widths is None or any(w <= 0 for w in self.half_widths):
                raise ValueError("box half-widths must all be > 0")
        elif self.kind == "shell":
            if self.inner is None or self.outer is None or not 0 < self.inner < self.outer:
                raise ValueError("shell requires 0 < inner < outer")
        elif self.kind == "ball_union":
            if not self.balls or any(r <= 0 for _, r in self.balls):
                raise ValueError("ball_union requires balls with radius > 0")
            if self.signed_distance(np.zeros((1, 3)))[0] >= 0:
                raise ValueError("ball_union must contain the origin")
        else:
            raise ValueError(f"unknown domain kind {self.kind!r}")

    @classmethod
    def ball(cls, radius):
        return cls("ball", radius=float(radius))

    @classmethod
    def box(cls, half_widths):
        return cls("box", half_widths=tuple(float(w) for w in half_widths))

    @classmethod
    def shell(cls, inner, outer):
        return cls("shell", inner=float(inner), outer=float(outer))

    @classmethod
    def ball_union(cls, balls):
        return cls(
            "ball_union",
            balls=tuple((tuple(float(c) for c in center), float(r)) for center, r in balls),
        )

    def signed_distance(self, points):
        """Signed distance to the boundary; negative inside Omega.

        Exact for ball, box and shell.  For a ball union the pointwise
        minimum of the member distances is exact outside and a lower bound
        on the depth inside overlap regions (conservative for membership
        tests).
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.kind == "ball":
            return np.linalg.norm(pts, axis=1) - self.radius
        if self.kind == "box":
            q = np.abs(pts) - np.asarray(self.half_widths)
            outside = np.linalg.norm(np.maximum(q, 0.0), axis=1)
            inside = np.minimum(q.max(axis=1), 0.0)
            return outside + inside
        if self.kind == "shell":
            r = np.linalg.norm(pts, axis=1)
            return np.maximum(r - self.outer, self.inner - r)
        sd = np.full(pts.shape[0], np.inf)
        for center, radius in self.balls:
            sd = np.minimum(sd, np.linalg.norm(pts - np.asarray(center), axis=1) - radius)
        return sd

    def contains(self, points):
        """Strict membership: signed distance < 0."""
        return self.signed_distance(points) < 0.0

    def classify(self, point, tol):
        """Deterministic three-way membership with boundary band ``tol``."""
        sd = float(self.signed_distance(point)[0])
        if abs(sd) <= tol:
            return "boundary"
        return "inside" if sd < 0 else "outside"

    def inradius(self):
        """Depth of the deepest interior point (largest ball fitting in Omega).

        For a ball union this is a lower bound (the deepest member ball),
        which keeps every membership precondition conservative.
        """
        if self.kind == "ball":
            return self.radius
        if self.kind == "box":
            return min(self.half_widths)
        if self.kind == "shell":
            return 0.5 * (self.outer - self.inner)
        origin_depth = -float(self.signed_distance(np.zeros((1, 3)))[0])
        return max(origin_depth, max(r for _, r in self.balls))

    def bounding_cube(self):
        """(lo, hi) of the smallest axis-aligned cube enclosing Omega.

        A cube (not a box) keeps the lattice spacing a single scalar h.
        """
        if self.kind == "ball":
            r = self.radius
            lo = np.array([-r, -r, -r])
            hi = np.array([r, r, r])
        elif self.kind == "box":
            w = max(self.half_widths)
            lo = np.array([-w, -w, -w])
            hi = np.array([w, w, w])
        elif self.kind == "shell":
            r = self.outer
            lo = np.array([-r, -r, -r])
            hi = np.array([r, r, r])
        else:
            centers = np.array([c for c, _ in self.balls])
            radii = np.array([r for _, r in self.balls])
            lo = (centers - radii[:, None]).min(axis=0)
            hi = (centers + radii[:, None]).max(axis=0)
            mid = 0.5 * (lo + hi)
            half = 0.5 * (hi - lo).max()
            lo = mid - half
            hi = mid + half
        return lo, hi

    def category(self):
        """cat of the closure (metadata, from the table; never computed)."""
        if self.kind == "ball_union":
            return len(self.balls)
        return CATEGORY_BY_KIND[self.kind]


class Grid:
    """Uniform lattice over the bounding cube with eliminated boundary.

    Immutable after construction.  Fields carry the grid's identity
    ``token`` and every binary operation checks it.  The assembled
    Laplacian is a CSR matrix; its matvec is sequential and therefore
    bitwise deterministic (reduction order is the CSR row order).
    """

    def __init__(self, domain, resolution):
        if resolution < 8:
            raise ValueError("resolution must be >= 8")
        self.domain = domain
        self.resolution = int(resolution)
        lo, hi = domain.bounding_cube()
        self.origin = lo
        self.h = float((hi[0] - lo[0]) / (resolution - 1))

        axes = [np.linspace(lo[d], hi[d], resolution) for d in range(3)]
        X, Y, Z = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=1)
        mask = domain.contains(pts).reshape(X.shape)
        n = int(mask.sum())
        if n == 0:
            raise EmptyInteriorError(f"no lattice point inside {domain.kind} at resolution {resolution}")
        # interior nodes never touch the lattice faces (the cube faces only
        # meet the closure of Omega), required by the embedding tricks below
        if mask[0].any() or mask[-1].any() or mask[:, 0].any() or mask[:, -1].any() \
                or mask[:, :, 0].any() or mask[:, :, -1].any():
            raise EmptyInteriorError("interior nodes touch the bounding cube faces")

        self.mask = mask
        self.index = np.full(mask.shape, -1, dtype=np.int64)
        self.index[mask] = np.arange(n)
        self.n_interior = n
        self.coords = pts[mask.ravel()]
        self.token = next(_grid_counter)
        self.lap = self._assemble_laplacian()

    def _assemble_laplacian(self):
        h2 = self.h * self.h
        idx = self.index
        rows, cols = [], []
        for axis in range(3):
            a = idx[tuple(slice(0, -1) if d == axis else slice(None) for d in range(3))]
            b = idx[tuple(slice(1, None) if d == axis else slice(None) for d in range(3))]
            both = (a >= 0) & (b >= 0)
            rows.append(a[both])
            cols.append(b[both])
        r = np.concatenate(rows)
        c = np.concatenate(cols)
        n = self.n_interior
        off = sp.coo_matrix((-np.ones(r.size) / h2, (r, c)), shape=(n, n))
        lap = sp.eye(n, format="coo") * (6.0 / h2) + off + off.T
        return lap.tocsr()

    def field(self, values):
        """Wrap an array of interior-node values as a ScalarField."""
        return ScalarField(self, np.asarray(values, dtype=float))

    def zeros(self):
        return ScalarField(self, np.zeros(self.n_interior))

    def sample(self, func):
        """Field from a callable evaluated at interior node coordinates."""
        return ScalarField(self, np.asarray(func(self.coords), dtype=float))

    def embed(self, values):
        """Full (res, res, res) lattice array with exterior nodes set to 0."""
        full = np.zeros(self.mask.shape)
        full[self.mask] = values
        return full

    def __repr__(self):
        return (f"Grid({self.domain.kind}, resolution={self.resolution}, "
                f"h={self.h:.6g}, interior={self.n_interior})")


class ScalarField:
    """Values on the interior nodes of one grid.

    Value semantics: arithmetic returns new fields and validates both
    finiteness and grid identity, so stale or mixed-grid data fails fast.
    """

    __slots__ = ("grid", "values")

    def __init__(self, grid, values):
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.n_interior,):
            raise ValueError(f"expected {grid.n_interior} values, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise NonFiniteFieldError("field contains NaN or Inf")
        self.grid = grid
        self.values = values

    def _check(self, other):
        if self.grid.token != other.grid.token:
            raise GridMismatchError("fields live on different grids")

    def __add__(self, other):
        self._check(other)
        return ScalarField(self.grid, self.values + other.values)

    def __sub__(self, other):
        self._check(other)
        return ScalarField(self.grid, self.values - other.values)

    def __mul__(self, scalar):
        return ScalarField(self.grid, self.values * float(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return ScalarField(self.grid, -self.values)

    def positive_part(self):
        return ScalarField(self.grid, np.maximum(self.values, 0.0))

    def l2_norm(self):
        """Discrete L2 norm sqrt(h^3 sum u_i^2)."""
        return float(np.sqrt(integrate_power(self, 2.0)))

    def content_key(self):
        """Content hash for caching; distinct grids never collide."""
        digest = hashlib.blake2b(self.values.tobytes(), digest_size=16).hexdigest()
        return (self.grid.token, digest)

    def copy(self):
        return ScalarField(self.grid, self.values.copy())

    def __repr__(self):
        return f"ScalarField(n={self.values.size}, max={self.values.max():.4g})"


def build_grid(domain, resolution):
    """Discretize ``domain`` at ``resolution`` nodes per axis."""
    return Grid(domain, resolution)


def apply_laplacian(u):
    """Discrete negative Laplacian with eliminated Dirichlet boundary."""
    return ScalarField(u.grid, u.grid.lap @ u.values)


def integrate_power(u, q):
    """Mass-lumped integral h^3 sum |u_i|^q over interior nodes."""
    if q < 1:
        raise ValueError("q must be >= 1")
    return float(u.grid.h ** 3 * np.sum(np.abs(u.values) ** q))


def h1_norm_sq(u):
    """Split squared H^1 norm: (dirichlet, mass, total).

    dirichlet = <(-Lap) u, u> h^3 is nonnegative by summation by parts;
    mass is the squared L2 norm; total their sum.
    """
    dirichlet = float(u.grid.h ** 3 * (u.values @ (u.grid.lap @ u.values)))
    mass = integrate_power(u, 2.0)
    return dirichlet, mass, dirichlet + mass


def write_vtk(u, path, name="u"):
    """Write a field as legacy VTK STRUCTURED_POINTS (ASCII, one SCALARS block).

    Exterior lattice nodes are written as 0 (the trivial extension).
    """
    grid = u.grid
    full = grid.embed(u.values)
    res = grid.resolution
    lines = [
        "# vtk DataFile Version 3.0",
        f"sps field {name}",
        "ASCII",
        "DATASET STRUCTURED_POINTS",
        f"DIMENSIONS {res} {res} {res}",
        f"ORIGIN {grid.origin[0]:.17g} {grid.origin[1]:.17g} {grid.origin[2]:.17g}",
        f"SPACING {grid.h:.17g} {grid.h:.17g} {grid.h:.17g}",
        f"POINT_DATA {res ** 3}",
        f"SCALARS {name} double 1",
        "LOOKUP_TABLE default",
    ]
    # VTK structured points order: x varies fastest
    flat = full.ravel(order="F")
    lines.extend(f"{v:.17g}" for v in flat)
    tmp = f"{path}.tmp"
    try:
        with open(tmp, "w") as fh:
            fh.write("\n".join(lines) + "\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
