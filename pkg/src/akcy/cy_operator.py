"""The deformed form omega(phi), its bidegree parts, the operators F_j and F,
taming margins, and the positivity amplitude.

The coordinate path computed here is authoritative; the frame module provides
an independent validation path.  F is always computed twice (direct top wedge
power versus the component sum over F_j) and any disagreement raises, since
that identity is the sharpest trap for sign or normalization errors.

Memory notes: all bidegree algebra runs on increasing-pair component storage
(never the full 2n x 2n matrix field), and tau wedge tau-bar is evaluated via
the real identity (Bm^Bm + JBm^JBm)/4, so fine 4D grids stay within budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import forms
from .errors import AmplitudeError, ConsistencyError, PreconditionError
from .frame import build_frame

__all__ = [
    "Potential",
    "HermitianField",
    "PotentialReport",
    "deformation_form",
    "deformed_form",
    "tau",
    "H_part",
    "h_form",
    "h_matrix",
    "min_eigenvalue_field",
    "F_components",
    "F_total",
    "taming_margin",
    "positivity_amplitude",
    "project_zero_mean",
    "analyze_potential",
    "TAMING_THRESHOLD",
    "F_CONSISTENCY_RTOL",
]

# A+ membership threshold: margin must clear the discretization noise floor.
TAMING_THRESHOLD = 1e-8
F_CONSISTENCY_RTOL = 1e-10
ZERO_MEAN_TOL = 1e-12


@dataclass
class Potential:
    """Real scalar potential on the grid; zero_mean flags membership in A."""

    chart: object
    values: np.ndarray
    zero_mean: bool = False

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)


def _values(phi):
    if isinstance(phi, Potential):
        return phi.values
    return np.asarray(phi, dtype=float)


@dataclass
class HermitianField:
    """Square matrix field (axes first): n x n complex frame coefficients of
    H(phi), or the 2n x 2n real symmetric coordinate matrix of h(phi)."""

    chart: object
    matrix: np.ndarray

    def hermitian_defect(self):
        return float(np.abs(self.matrix - np.conj(np.swapaxes(self.matrix, 0, 1))).max())

    def min_eigenvalue(self, chunk=1 << 19):
        return min_eigenvalue_field(self.matrix, chunk=chunk)


def min_eigenvalue_field(M, chunk=1 << 19):
    """(min eigenvalue over all points, flat argmin index) of a Hermitian
    matrix field with matrix axes first; processes points in chunks."""
    k = M.shape[0]
    flat = M.reshape(k, k, -1)
    npts = flat.shape[-1]
    best = np.inf
    best_idx = 0
    for start in range(0, npts, chunk):
        block = np.ascontiguousarray(np.moveaxis(flat[..., start : start + chunk], -1, 0))
        ev = np.linalg.eigvalsh(block)[:, 0]
        i = int(np.argmin(ev))
        if ev[i] < best:
            best = float(ev[i])
            best_idx = start + i
    return best, best_idx


def deformation_form(s, phi):
    """d(J d phi) as a real 2-form."""
    dphi = forms.d_scalar(s.chart, _values(phi))
    Jdphi = forms.apply_J_oneform(s, dphi)
    return forms.exterior_derivative(Jdphi)


def deformed_form(s, phi):
    """omega(phi) = omega + d(J d phi)."""
    return forms.omega_form(s) + deformation_form(s, phi)


def tau(s, phi):
    """(2,0)-part of omega(phi) (equals the (2,0)-part of dJdphi)."""
    return forms.bidegree_project(s, deformed_form(s, phi), 2, 0)


def H_part(s, phi, f=None):
    """(1,1)-part of omega(phi) as the Hermitian frame coefficient matrix
    M[a,b] with H = i M_ab theta^a wedge conj-theta^b; M(0) = identity."""
    from .frame import frame_hermitian_components

    if f is None:
        f = build_frame(s)
    H11 = forms.bidegree_project(s, deformed_form(s, phi), 1, 1)
    M = frame_hermitian_components(f, H11)
    return HermitianField(s.chart, M)


def h_matrix(s, comps):
    """Coordinate matrix of the symmetric form h associated with the real
    (1,1)-tamed 2-form B given in pair components: h = (B J - J^T B)/2.

    For B = omega this returns g exactly.
    """
    dim = s.chart.dim
    pos = forms.index_positions(dim, 2)
    J = s.J
    shape = np.broadcast_shapes(J.shape[2:], comps.shape[1:])
    h = np.zeros((dim, dim) + shape)
    for i in range(dim):
        for l in range(dim):
            acc = h[i, l]
            for j in range(dim):
                Bij = forms._signed_entry(comps, pos, i, j)
                if Bij is not None:
                    acc += 0.5 * (Bij * J[j, l])
                Bjl = forms._signed_entry(comps, pos, j, l)
                if Bjl is not None:
                    acc -= 0.5 * (J[j, i] * Bjl)
    return h


def h_form(s, phi):
    """Symmetric bilinear form h(phi) as a coordinate matrix field.

    Positive definiteness of h(phi) at every point is equivalent to
    omega(phi) taming J.
    """
    w = deformed_form(s, phi)
    return HermitianField(s.chart, h_matrix(s, w.comps))


def taming_margin(s, phi):
    """Grid-min over points of the smallest eigenvalue of h(phi)."""
    margin, _ = h_form(s, phi).min_eigenvalue()
    return margin


@dataclass
class PotentialReport:
    """Diagnostics of a single potential."""

    F_min: float
    F_max: float
    F_integral: float
    margin: float
    amplitude: float | None
    components: list = field(default_factory=list)

    def as_dict(self):
        return {
            "F_min": self.F_min,
            "F_max": self.F_max,
            "F_integral": self.F_integral,
            "margin": self.margin,
            "amplitude": self.amplitude,
            "components": self.components,
        }


def _wedge_power(w, k):
    acc = w
    for _ in range(k - 1):
        acc = forms.wedge(acc, w)
    return acc


def F_components(s, phi):
    """Fields F_0..F_{[n/2]} with F_j omega^n = c_j (tau^taubar)^j ^ H^{n-2j},
    c_j = n!/(j!^2 (n-2j)!).

    tau^taubar is evaluated through the real identity
    (Bm^Bm + mixed^mixed)/4 where Bm is the J-anti-invariant part of dJdphi
    and mixed = (J^T Bm + Bm J)/2, avoiding complex intermediates.
    """
    n = s.half_dim
    dim = s.chart.dim
    chart = s.chart
    B = deformation_form(s, phi).comps
    C = forms.j_conjugate_comps(s.J, B, dim)
    Bm = 0.5 * (B - C)
    C += B
    C *= 0.5                      # C now holds the (1,1) part P11(B)
    del B
    C += forms.omega_form(s).comps  # broadcast add; C is now H(phi)
    H = forms.FormField(chart, 2, C)
    mixed = 0.5 * forms.j_anticommutator_comps(s.J, Bm, dim)
    BmF = forms.FormField(chart, 2, Bm)
    mixedF = forms.FormField(chart, 2, mixed)
    ttbar = 0.25 * (forms.wedge(BmF, BmF) + forms.wedge(mixedF, mixedF))
    del Bm, mixed, BmF, mixedF

    out = []
    for j in range(n // 2 + 1):
        cj = math.factorial(n) / (math.factorial(j) ** 2 * math.factorial(n - 2 * j))
        top = None
        if j > 0:
            top = _wedge_power(ttbar, j)
        if n - 2 * j > 0:
            Hp = _wedge_power(H, n - 2 * j)
            top = Hp if top is None else forms.wedge(top, Hp)
        Fj = cj * forms.top_ratio(s, top).values
        out.append(Fj)
    return out


def F_total(s, phi, check=True, return_components=False):
    """F(phi) = omega(phi)^n / omega^n, dual-path checked against sum F_j."""
    n = s.half_dim
    w = deformed_form(s, phi)
    direct = forms.top_ratio(s, _wedge_power(w, n)).values
    del w
    comps = F_components(s, phi)
    total = comps[0]
    for c in comps[1:]:
        total = total + c
    if check:
        scale = max(1.0, float(np.abs(direct).max()))
        defect = float(np.abs(direct - total).max())
        if defect > F_CONSISTENCY_RTOL * scale:
            raise ConsistencyError(
                f"top-power and component-sum paths for F disagree by {defect:.3e} "
                f"(relative tolerance {F_CONSISTENCY_RTOL})"
            )
    if return_components:
        return direct, comps
    return direct


def _pencil_critical_scale(g, delta, chunk=1 << 18):
    """min over points of sup{s : g + s*delta positive definite}, inf if none.

    Whitens the pencil by the Cholesky factor of g; the critical scale per
    point is -1/lambda_min of the whitened delta when that eigenvalue is
    negative.
    """
    k = delta.shape[0]
    gb = np.broadcast_to(g, (k, k) + delta.shape[2:])
    gflat = gb.reshape(k, k, -1)
    dflat = delta.reshape(k, k, -1)
    npts = dflat.shape[-1]
    best = np.inf
    for start in range(0, npts, chunk):
        G = np.ascontiguousarray(np.moveaxis(gflat[..., start : start + chunk], -1, 0))
        D = np.ascontiguousarray(np.moveaxis(dflat[..., start : start + chunk], -1, 0))
        L = np.linalg.cholesky(G)
        A = np.linalg.solve(L, D)
        K = np.linalg.solve(L, np.swapaxes(A, -1, -2))
        lam = np.linalg.eigvalsh(0.5 * (K + np.swapaxes(K, -1, -2)))[:, 0]
        neg = lam < 0.0
        if np.any(neg):
            best = min(best, float((-1.0 / lam[neg]).min()))
    return best


def positivity_amplitude(s, phi, s_max=1e6, tol=1e-10):
    """a = sup{ s > 0 : h(s*phi) positive definite everywhere }, by bisection.

    h(s*phi) = g + s*Delta is affine in s per point, so the grid-min
    eigenvalue is concave in s and the positive set is an interval.  The
    bisection bracket is seeded from the closed-form critical scale of the
    symmetric pencil, which the bisection then certifies.
    """
    vals = _values(phi)
    if float(np.ptp(vals)) == 0.0:
        raise PreconditionError("positivity amplitude requires a non-constant potential")
    g = s.g
    delta = h_matrix(s, deformation_form(s, phi).comps)

    def margin(a):
        m, _ = min_eigenvalue_field(g + a * delta)
        return m

    guess = _pencil_critical_scale(g, delta)
    if not np.isfinite(guess) or guess > s_max:
        raise AmplitudeError(
            f"no taming sign change up to s_max={s_max:.1e}; amplitude unbounded"
        )
    lo = guess * (1.0 - 1e-9)
    hi = guess * (1.0 + 1e-9)
    if margin(lo) <= 0.0:
        lo = 0.0
    if margin(hi) > 0.0:
        hi = min(2.0 * guess + 1.0, s_max)
        if margin(hi) > 0.0:
            raise AmplitudeError(
                f"no taming sign change up to s_max={s_max:.1e}; amplitude unbounded"
            )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if margin(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def project_zero_mean(s, phi):
    """Subtract the omega^n-mean; idempotent; returns a flagged Potential."""
    vals = _values(phi)
    mean = forms.integrate(s, vals + np.zeros(s.chart.shape))
    out = vals - mean
    return Potential(s.chart, out + np.zeros(s.chart.shape), zero_mean=True)


def analyze_potential(s, phi, compute_amplitude=True):
    """Full diagnostic sweep of a potential: F bounds, margin, amplitude."""
    direct, comps = F_total(s, phi, return_components=True)
    margin = taming_margin(s, phi)
    amplitude = None
    if compute_amplitude:
        try:
            amplitude = positivity_amplitude(s, phi)
        except (AmplitudeError, PreconditionError):
            amplitude = None
    components = [
        {"j": j, "min": float(c.min()), "max": float(c.max())}
        for j, c in enumerate(comps)
    ]
    return PotentialReport(
        F_min=float(direct.min()),
        F_max=float(direct.max()),
        F_integral=float(forms.integrate(s, direct)),
        margin=margin,
        amplitude=amplitude,
        components=components,
    )
