"""Discretized torus models carrying a fixed symplectic form and a
compatible (possibly non-integrable) almost complex structure.

Conventions
-----------
Real dimension is ``2n`` with coordinates interleaved as
``(x_1, y_1, x_2, y_2, ..., x_n, y_n)`` on the periodic unit box.
The symplectic form is the constant ``omega = sum_a dx_a ^ dy_a``;
the reference complex structure ``J0`` sends ``d/dx_a -> d/dy_a`` and
``d/dy_a -> -d/dx_a``, so the derived metric ``g(X,Y) = omega(X, J Y)``
is Euclidean in the standard case.

Non-integrable structures are produced by symplectic conjugation
``J(p) = A(p) J0 A(p)^-1`` with ``A(p) = exp(eps * t(p) * S)`` for an
infinitesimally symplectic generator ``S`` and a periodic profile ``t``.
Conjugation by a symplectic matrix preserves omega-compatibility
identically, so compatibility never has to be repaired after the fact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import ConfigurationError, RecipeError, StructureError

__all__ = [
    "GridChart",
    "StructureRecipe",
    "CompatibleStructure",
    "ValidationReport",
    "build_grid",
    "standard_structure",
    "twisted_structure",
    "validate_structure",
    "omega_matrix",
    "standard_J",
    "default_generator",
    "PROFILES",
]

# Hard invariant tolerances for built structures.
ALGEBRA_TOL = 1e-12
VALIDATE_TOL = 1e-10


@dataclass(frozen=True)
class GridChart:
    """Periodic uniform lattice over the 2n-torus [0,1)^(2n).

    spacing is exactly 1/N per axis; all stencil arithmetic wraps.
    """

    half_dim: int
    resolution: tuple
    spacing: tuple = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "resolution", tuple(int(N) for N in self.resolution))
        object.__setattr__(self, "spacing", tuple(1.0 / N for N in self.resolution))

    @property
    def dim(self):
        return 2 * self.half_dim

    @property
    def shape(self):
        return self.resolution

    @property
    def num_points(self):
        return int(np.prod(self.resolution))

    def axis_coords(self, d):
        """Coordinates of axis d, shaped for broadcasting against grid fields."""
        N = self.resolution[d]
        x = np.arange(N) * self.spacing[d]
        shape = [1] * self.dim
        shape[d] = N
        return x.reshape(shape)

    def grid_points(self):
        """All grid points as an array of shape (*resolution, 2n). Dense; small grids only."""
        axes = [np.arange(N) * h for N, h in zip(self.resolution, self.spacing)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack(mesh, axis=-1)

    def index_to_point(self, idx):
        return np.asarray(idx, dtype=float) * np.asarray(self.spacing)

    def wrap_displacement(self, delta):
        """Minimum-image displacement on the unit torus."""
        return (np.asarray(delta) + 0.5) % 1.0 - 0.5

    def diff(self, f, d):
        """Centered second-order periodic difference along grid axis d.

        Grid axes are the trailing ``2n`` axes of ``f``; leading axes are
        component/batch axes.  Size-1 (broadcast) axes differentiate to zero,
        which is exact for fields constant along that axis.
        """
        f = np.asarray(f)
        axis = f.ndim - self.dim + d
        if f.shape[axis] == 1:
            return np.zeros_like(f)
        return (np.roll(f, -1, axis=axis) - np.roll(f, 1, axis=axis)) / (2.0 * self.spacing[d])

    def integrate_scalar(self, f):
        """Periodic quadrature of a grid scalar over the unit box (exact for constants)."""
        cell = float(np.prod(self.spacing))
        f = np.asarray(f)
        # Broadcast axes carry implicit multiplicity.
        mult = 1.0
        for d in range(self.dim):
            axis = f.ndim - self.dim + d
            if f.shape[axis] == 1:
                mult *= self.resolution[d]
        return float(np.sum(f) * mult * cell)


def build_grid(half_dim, resolution):
    """Build a periodic chart; rejects half_dim < 2 (surfaces are Kahler)."""
    half_dim = int(half_dim)
    if half_dim < 2:
        raise ConfigurationError(
            "half_dim must be >= 2 (complex dimension 1 has no non-integrable structures)"
        )
    resolution = list(resolution)
    if len(resolution) != 2 * half_dim:
        raise ConfigurationError(
            f"resolution must have length {2 * half_dim}, got {len(resolution)}"
        )
    for N in resolution:
        if int(N) < 8:
            raise ConfigurationError(f"each axis needs at least 8 points, got {N}")
    return GridChart(half_dim, tuple(resolution))


def omega_matrix(half_dim):
    """Coefficient matrix of omega: omega(X,Y) = X^T Omega Y, omega(dx,dy) = +1."""
    n = half_dim
    O = np.zeros((2 * n, 2 * n))
    for a in range(n):
        O[2 * a, 2 * a + 1] = 1.0
        O[2 * a + 1, 2 * a] = -1.0
    return O


def standard_J(half_dim):
    """Constant J0 with J0 dx_a = dy_a (as tangent map: column of dx maps to dy)."""
    n = half_dim
    J = np.zeros((2 * n, 2 * n))
    for a in range(n):
        J[2 * a + 1, 2 * a] = 1.0
        J[2 * a, 2 * a + 1] = -1.0
    return J


def default_generator(half_dim):
    """A generic infinitesimally symplectic S = Omega^-1 M (M symmetric) that
    does not commute with J0, so the conjugated structure is non-integrable."""
    n = half_dim
    M = np.zeros((2 * n, 2 * n))
    M[0, 0] = 0.5
    M[0, 2] = M[2, 0] = 1.0
    M[3, 3] = -0.3
    if 2 * n > 4:
        M[1, 4] = M[4, 1] = 0.7
    O = omega_matrix(n)
    return np.linalg.solve(O, M)


# ---------------------------------------------------------------------------
# Twist profiles: name -> (callable on points (...,2n), axes it depends on)

def _profile_sin(axis, freq=1):
    def f(x):
        return np.sin(2.0 * np.pi * freq * x[..., axis])
    return f


def _profile_cos(axis, freq=1):
    def f(x):
        return np.cos(2.0 * np.pi * freq * x[..., axis])
    return f


def _profile_sin_sum():
    def f(x):
        return np.sin(2.0 * np.pi * x[..., 0]) + 0.5 * np.cos(2.0 * np.pi * x[..., 3])
    return f


PROFILES = {
    "sin_x1": (_profile_sin(0), (0,)),
    "cos_x1": (_profile_cos(0), (0,)),
    "sin_y1": (_profile_sin(1), (1,)),
    "sin_x2": (_profile_sin(2), (2,)),
    "sin_x1_cos_y2": (_profile_sin_sum(), (0, 3)),
}


@dataclass(frozen=True)
class StructureRecipe:
    """Construction data for a compatible structure.

    kind is "standard" or "twisted"; generator is a constant matrix in the
    symplectic Lie algebra (S^T Omega + Omega S = 0); amplitude scales the
    twist; profile names a periodic scalar in PROFILES.
    """

    kind: str
    generator: np.ndarray = None
    amplitude: float = 0.0
    profile: str = "sin_x1"

    def check(self, half_dim):
        if self.kind not in ("standard", "twisted"):
            raise RecipeError(f"unknown recipe kind {self.kind!r}")
        if self.kind == "standard":
            return
        if self.profile not in PROFILES:
            raise RecipeError(f"unknown profile {self.profile!r}; choices: {sorted(PROFILES)}")
        S = np.asarray(self.generator, dtype=float)
        if S.shape != (2 * half_dim, 2 * half_dim):
            raise RecipeError(f"generator must be {2*half_dim}x{2*half_dim}, got {S.shape}")
        O = omega_matrix(half_dim)
        defect = np.max(np.abs(S.T @ O + O @ S))
        if defect > ALGEBRA_TOL:
            raise RecipeError(
                f"generator is not infinitesimally symplectic: |S^T Omega + Omega S| = {defect:.3e}"
            )


class _GeneratorExp:
    """Fast exp(c*S) over arrays of scalars c, via eigendecomposition when the
    generator is safely diagonalizable, scipy.linalg.expm otherwise."""

    def __init__(self, S):
        self.S = np.asarray(S, dtype=float)
        self._eig = None
        try:
            w, V = np.linalg.eig(self.S)
            Vinv = np.linalg.inv(V)
            recon = (V * w) @ Vinv
            scale = max(np.max(np.abs(self.S)), 1.0)
            if np.max(np.abs(recon - self.S)) < 1e-13 * scale and np.linalg.cond(V) < 1e7:
                self._eig = (w, V, Vinv)
        except np.linalg.LinAlgError:
            pass

    def __call__(self, c):
        c = np.asarray(c, dtype=float)
        if self._eig is not None:
            w, V, Vinv = self._eig
            E = np.exp(np.multiply.outer(c, w))  # (..., 2n)
            A = np.einsum("ij,...j,jk->...ik", V, E, Vinv)
            return np.ascontiguousarray(A.real)
        flat = c.reshape(-1)
        out = np.empty(flat.shape + self.S.shape)
        for i, ci in enumerate(flat):
            out[i] = scipy.linalg.expm(ci * self.S)
        return out.reshape(c.shape + self.S.shape)


class CompatibleStructure:
    """A chart plus pointwise J, constant omega, and derived metric g.

    ``J`` and ``g`` are stored with shape (2n, 2n, *bshape) where bshape is
    broadcastable to the grid (size-1 along axes the twist does not use).
    ``J_at``/``g_at`` evaluate the same structure at arbitrary points, which
    the boundary module uses for off-grid polydisk scans.
    """

    def __init__(self, chart, J, recipe, J_at):
        self.chart = chart
        self.J = J
        self.omega = omega_matrix(chart.half_dim)
        self.g = np.einsum("ij,jk...->ik...", self.omega, J)
        self.recipe = recipe
        self._J_at = J_at
        self._cache = {}

    @property
    def half_dim(self):
        return self.chart.half_dim

    @property
    def bshape(self):
        return self.J.shape[2:]

    @property
    def is_standard(self):
        return self.recipe.kind == "standard" or self.recipe.amplitude == 0.0

    def J_at(self, points):
        """J at arbitrary physical points, shape (..., 2n) -> (..., 2n, 2n)."""
        return self._J_at(np.asarray(points, dtype=float))

    def g_at(self, points):
        J = self.J_at(points)
        return np.einsum("ij,...jk->...ik", self.omega, J)

    def cache(self, key, builder):
        if key not in self._cache:
            self._cache[key] = builder()
        return self._cache[key]


def standard_structure(chart):
    """Flat Kahler torus: constant J0, Euclidean metric."""
    n = chart.half_dim
    J0 = standard_J(n)
    J = J0.reshape((2 * n, 2 * n) + (1,) * chart.dim)

    def J_at(points):
        return np.broadcast_to(J0, points.shape[:-1] + J0.shape).copy()

    return CompatibleStructure(chart, J, StructureRecipe("standard"), J_at)


def twisted_structure(chart, recipe):
    """Symplectically conjugated structure J = A J0 A^-1, A = exp(eps*t(p)*S)."""
    if recipe.kind != "twisted":
        raise RecipeError("twisted_structure requires a recipe with kind='twisted'")
    recipe.check(chart.half_dim)
    if recipe.amplitude == 0.0:
        return standard_structure(chart)
    n = chart.half_dim
    J0 = standard_J(n)
    prof, axes = PROFILES[recipe.profile]
    expS = _GeneratorExp(recipe.generator)
    eps = float(recipe.amplitude)

    # Profile sampled on the broadcast-reduced lattice only.
    bshape = tuple(chart.resolution[d] if d in axes else 1 for d in range(chart.dim))
    coords = np.zeros(bshape + (chart.dim,))
    for d in axes:
        coords[..., d] = np.broadcast_to(chart.axis_coords(d), bshape)
    t = prof(coords)
    A = expS(eps * t)                      # (*bshape, 2n, 2n)
    Ainv = expS(-eps * t)
    J = np.einsum("...ij,jk,...kl->il...", A, J0, Ainv)

    def J_at(points):
        tv = prof(points)
        Ap = expS(eps * tv)
        Am = expS(-eps * tv)
        return np.einsum("...ij,jk,...kl->...il", Ap, J0, Am)

    s = CompatibleStructure(chart, J, recipe, J_at)
    rep = validate_structure(s)
    if rep.min_g_eigenvalue <= 0.0:
        raise StructureError(
            f"derived metric not positive definite (min eigenvalue "
            f"{rep.min_g_eigenvalue:.3e}); reduce the twist amplitude",
            point=rep.worst_point,
        )
    return s


@dataclass
class ValidationReport:
    max_J_square_defect: float
    max_omega_invariance_defect: float
    max_g_symmetry_defect: float
    min_g_eigenvalue: float
    passed: bool
    worst_point: tuple = None

    def as_dict(self):
        return {
            "max_J_square_defect": self.max_J_square_defect,
            "max_omega_invariance_defect": self.max_omega_invariance_defect,
            "max_g_symmetry_defect": self.max_g_symmetry_defect,
            "min_g_eigenvalue": self.min_g_eigenvalue,
            "passed": self.passed,
            "worst_point": list(self.worst_point) if self.worst_point is not None else None,
        }


def validate_structure(s):
    """Scan every (broadcast-distinct) grid point for the compatibility identities."""
    n = s.half_dim
    J = np.moveaxis(s.J, (0, 1), (-2, -1))      # (*bshape, 2n, 2n)
    I = np.eye(2 * n)
    J2 = J @ J
    d_j2 = np.abs(J2 + I).max(axis=(-2, -1))

    O = s.omega
    d_om = np.abs(np.swapaxes(J, -2, -1) @ O @ J - O).max(axis=(-2, -1))

    g = np.moveaxis(s.g, (0, 1), (-2, -1))
    d_gs = np.abs(g - np.swapaxes(g, -2, -1)).max(axis=(-2, -1))

    gsym = 0.5 * (g + np.swapaxes(g, -2, -1))
    eigs = np.linalg.eigvalsh(gsym)
    min_eig = eigs[..., 0]

    defect = np.maximum(np.maximum(d_j2, d_om), d_gs)
    worst_flat = int(np.argmax(defect))
    worst = np.unravel_index(worst_flat, defect.shape) if defect.ndim else ()
    passed = bool(
        d_j2.max() <= VALIDATE_TOL
        and d_om.max() <= VALIDATE_TOL
        and d_gs.max() <= VALIDATE_TOL
        and min_eig.min() > 0.0
    )
    return ValidationReport(
        max_J_square_defect=float(d_j2.max()),
        max_omega_invariance_defect=float(d_om.max()),
        max_g_symmetry_defect=float(d_gs.max()),
        min_g_eigenvalue=float(min_eig.min()),
        passed=passed,
        worst_point=tuple(int(i) for i in worst),
    )
