"""Seed selection, the cut-off bump psi_R, and the boundary potential
phi_R = phi + a*psi_R whose deformed form degenerates exactly on the
boundary of the taming cone while F(phi_R) stays positive.

All bump derivatives are closed-form in chart coordinates and transported
through the pointwise analytic geometry (`LocalGeometry`), never finite
differenced: the inner bump feature scale 1/R^2 sits far below any feasible
uniform grid.  Grid sampling of psi_R therefore only ever uses *values*
(exact zeros outside the support); the strict 4-points-across resolution
precondition applies to the derivative-sampling entry point alone.

Chart convention: the polydisk chart around the basepoint p0 is
x(zeta) = p0 + rho * sum_a (zeta_a e_a + conj), with e_a the p0-frame rotated
so that H(phi)(p0) is diagonal; zeta lives in the unit polydisk and the
unscaled coordinates z = rho*zeta satisfy d/dz_a = e_a at p0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import cy_operator as cy
from . import forms
from .errors import (
    AmplitudeError,
    ConfigurationError,
    NoSeedError,
    PreconditionError,
    ResolutionError,
    SearchFailure,
    SeedSearchError,
)
from .frame import LocalGeometry, build_frame, frame_tau_components, nijenhuis_coordinate
from .potentials import AnalyticPotential, default_candidates

__all__ = [
    "SeedPotential",
    "BumpSpec",
    "BumpField",
    "BoundaryReport",
    "cutoff_eta",
    "cutoff_eta_d1",
    "cutoff_eta_d2",
    "bump_psi",
    "pseudo_holomorphic_defect",
    "nijenhuis_pairing",
    "select_seed",
    "boundary_potential",
    "tau12_lower_bound",
    "search_R",
    "frame_F",
]

NONINTEGRABILITY_THRESHOLD = 1e-6
SCAN_CHUNK = 50_000


# ---------------------------------------------------------------------------
# Cut-off function: 1 on [0,1/2], quintic smoothstep down to 0 at 1.

def cutoff_eta(r):
    r = np.asarray(r, dtype=float)
    u = np.clip(2.0 * r - 1.0, 0.0, 1.0)
    return 1.0 - u**3 * (10.0 - 15.0 * u + 6.0 * u**2)


def cutoff_eta_d1(r):
    r = np.asarray(r, dtype=float)
    u = np.clip(2.0 * r - 1.0, 0.0, 1.0)
    return -60.0 * u**2 * (1.0 - u) ** 2


def cutoff_eta_d2(r):
    r = np.asarray(r, dtype=float)
    u = np.clip(2.0 * r - 1.0, 0.0, 1.0)
    return -240.0 * u * (1.0 - u) * (1.0 - 2.0 * u)


def _safe_div(num, den, fill=0.0):
    out = np.full(np.broadcast_shapes(num.shape, den.shape), fill)
    mask = den != 0.0
    np.divide(num, den, out=out, where=mask)
    return out


# ---------------------------------------------------------------------------
# Bump geometry.

@dataclass
class BumpSpec:
    """Parameters of psi_R in the p0-adapted chart."""

    R: float
    center: np.ndarray          # (2n,) torus coordinates of p0
    frame: np.ndarray           # (n, 2n) complex: rotated frame e_a at p0
    lam: np.ndarray             # (n,) eigenvalues lambda_a(0) of H(phi)(p0)
    scale: float                # polydisk radius rho in torus units

    def __post_init__(self):
        if self.R <= 2.0:
            raise ConfigurationError(f"bump radius R must exceed 2, got {self.R}")
        self.center = np.asarray(self.center, dtype=float)
        self.frame = np.asarray(self.frame, dtype=complex)
        self.lam = np.asarray(self.lam, dtype=float)


class BumpField:
    """psi_R with closed-form chart and torus derivatives.

    Chart points are real interleaved coordinates w = (u_1,v_1,...,u_n,v_n)
    of zeta, shape (m, 2n); derivative arrays keep the point axis last.
    """

    def __init__(self, spec: BumpSpec):
        self.spec = spec
        n = spec.frame.shape[0]
        dim = 2 * n
        M = np.zeros((dim, dim))
        for a in range(n):
            M[:, 2 * a] = 2.0 * spec.scale * spec.frame[a].real
            M[:, 2 * a + 1] = -2.0 * spec.scale * spec.frame[a].imag
        self.M = M
        self.Minv = np.linalg.inv(M)
        self.half_dim = n

    # -- chart <-> torus -----------------------------------------------------
    def chart_to_torus(self, w):
        w = np.asarray(w, dtype=float)
        return np.mod(self.spec.center + w @ self.M.T, 1.0)

    def torus_to_chart(self, points):
        points = np.asarray(points, dtype=float)
        delta = np.mod(points - self.spec.center + 0.5, 1.0) - 0.5
        return delta @ self.Minv.T

    # -- radial pieces ---------------------------------------------------------
    def _phi_parts(self, w):
        """Phi_R = sum_{i<2} (lam_i/2) r_i^2 eta(R^2 r_i): value, f'(r)/r, f''-f'/r per pair."""
        spec = self.spec
        kap = spec.R**2
        vals, g1s, curvs = [], [], []
        for i in range(min(2, self.half_dim)):
            u = w[:, 2 * i]
            v = w[:, 2 * i + 1]
            r = np.hypot(u, v)
            eta = cutoff_eta(kap * r)
            d1 = kap * cutoff_eta_d1(kap * r)
            d2 = kap**2 * cutoff_eta_d2(kap * r)
            c = 0.5 * spec.lam[i]
            f = c * r**2 * eta
            g1 = c * (2.0 * eta + r * d1)            # f'(r)/r, finite at 0
            fpp = c * (2.0 * eta + 4.0 * r * d1 + r**2 * d2)
            vals.append(f)
            g1s.append(g1)
            curvs.append(fpp - g1)
        return vals, g1s, curvs

    def _eta_parts(self, w):
        """Per-pair factor q_a = eta(R r_a): value, q'(r)/r, q''-q'/r."""
        R = self.spec.R
        qs, g1s, curvs = [], [], []
        for a in range(self.half_dim):
            u = w[:, 2 * a]
            v = w[:, 2 * a + 1]
            r = np.hypot(u, v)
            q = cutoff_eta(R * r)
            d1 = R * cutoff_eta_d1(R * r)
            d2 = R**2 * cutoff_eta_d2(R * r)
            g1 = _safe_div(d1, r)                    # zero wherever d1 = 0
            qs.append(q)
            g1s.append(g1)
            curvs.append(d2 - g1)
        return qs, g1s, curvs

    def _leave_one_out(self, qs):
        n = len(qs)
        prods = []
        for a in range(n):
            p = None
            for b in range(n):
                if b == a:
                    continue
                p = qs[b] if p is None else p * qs[b]
            prods.append(p if p is not None else np.ones_like(qs[a]))
        return prods

    def chart_eval(self, w, order=2):
        """(value, grad (2n,m), hess (2n,2n,m)) of psi_R in chart coordinates."""
        w = np.asarray(w, dtype=float)
        m = w.shape[0]
        dim = 2 * self.half_dim
        vals, g1s, curvs = self._phi_parts(w)
        qs, qg1s, qcurvs = self._eta_parts(w)

        Phi = sum(vals)
        eta = qs[0]
        for q in qs[1:]:
            eta = eta * q

        gPhi = np.zeros((dim, m))
        for i, g1 in enumerate(g1s):
            gPhi[2 * i] = g1 * w[:, 2 * i]
            gPhi[2 * i + 1] = g1 * w[:, 2 * i + 1]

        loo = self._leave_one_out(qs)
        gEta = np.zeros((dim, m))
        for a in range(self.half_dim):
            gEta[2 * a] = loo[a] * qg1s[a] * w[:, 2 * a]
            gEta[2 * a + 1] = loo[a] * qg1s[a] * w[:, 2 * a + 1]

        psi = Phi * eta
        if order == 0:
            return psi, None, None
        grad = gPhi * eta + Phi * gEta
        if order == 1:
            return psi, grad, None

        r2 = [w[:, 2 * a] ** 2 + w[:, 2 * a + 1] ** 2 for a in range(self.half_dim)]

        HPhi = np.zeros((dim, dim, m))
        for i, (g1, curv) in enumerate(zip(g1s, curvs)):
            uu = w[:, 2 * i]
            vv = w[:, 2 * i + 1]
            frac = _safe_div(curv, r2[i])
            HPhi[2 * i, 2 * i] = g1 + frac * uu * uu
            HPhi[2 * i + 1, 2 * i + 1] = g1 + frac * vv * vv
            HPhi[2 * i, 2 * i + 1] = HPhi[2 * i + 1, 2 * i] = frac * uu * vv

        HEta = np.zeros((dim, dim, m))
        for a in range(self.half_dim):
            uu = w[:, 2 * a]
            vv = w[:, 2 * a + 1]
            frac = _safe_div(qcurvs[a], r2[a])
            HEta[2 * a, 2 * a] += loo[a] * (qg1s[a] + frac * uu * uu)
            HEta[2 * a + 1, 2 * a + 1] += loo[a] * (qg1s[a] + frac * vv * vv)
            block = loo[a] * frac * uu * vv
            HEta[2 * a, 2 * a + 1] += block
            HEta[2 * a + 1, 2 * a] += block
            for b in range(a + 1, self.half_dim):
                # product of the two leave-one radial gradients, remaining factors
                rest = np.ones(m)
                for cidx in range(self.half_dim):
                    if cidx not in (a, b):
                        rest = rest * qs[cidx]
                ga = qg1s[a]
                gb = qg1s[b]
                for (pa, wa) in ((2 * a, uu), (2 * a + 1, vv)):
                    for (pb, wb) in (
                        (2 * b, w[:, 2 * b]),
                        (2 * b + 1, w[:, 2 * b + 1]),
                    ):
                        val = rest * ga * gb * wa * wb
                        HEta[pa, pb] += val
                        HEta[pb, pa] += val

        hess = (
            HPhi * eta
            + gPhi[:, None, :] * gEta[None, :, :]
            + gEta[:, None, :] * gPhi[None, :, :]
            + Phi * HEta
        )
        return psi, grad, hess

    # -- torus-side evaluation -------------------------------------------------
    def torus_eval(self, points, order=2):
        """(value, coordinate grad (2n,m), coordinate hess (2n,2n,m)) at torus points."""
        w = self.torus_to_chart(points)
        psi, grad, hess = self.chart_eval(w, order=order)
        if grad is not None:
            grad = self.Minv.T @ grad
        if hess is not None:
            hess = np.einsum("ki,klm,lj->ijm", self.Minv, hess, self.Minv)
        return psi, grad, hess

    def support_mask(self, w):
        """psi_R support: some |zeta_i| <= 1/R^2 (i<2) and all |zeta_a| <= 1/R."""
        spec = self.spec
        r = [np.hypot(w[:, 2 * a], w[:, 2 * a + 1]) for a in range(self.half_dim)]
        inner = np.zeros(w.shape[0], dtype=bool)
        for i in range(min(2, self.half_dim)):
            inner |= r[i] <= 1.0 / spec.R**2
        outer = np.ones(w.shape[0], dtype=bool)
        for a in range(self.half_dim):
            outer &= r[a] <= 1.0 / spec.R
        return inner & outer

    def required_resolution(self):
        """Axis points needed for >= 4 grid cells across the inner 1/R^2 feature."""
        return int(np.ceil(2.0 * self.spec.R**2 / self.spec.scale))

    def values_on_grid(self, chart, chunk=1 << 20):
        """psi_R sampled at grid points (values only; exact zeros off-support)."""
        pts = chart.grid_points().reshape(-1, chart.dim)
        out = np.zeros(pts.shape[0])
        for start in range(0, pts.shape[0], chunk):
            block = pts[start : start + chunk]
            w = self.torus_to_chart(block)
            mask = self.support_mask(w)
            if np.any(mask):
                psi, _, _ = self.chart_eval(w[mask], order=0)
                out[start : start + chunk][mask] = psi
        return out.reshape(chart.shape)

    def sample_on_grid(self, chart):
        """Grid sampling for finite-difference use: enforces the resolution
        precondition (>= 4 points across the inner bump), then samples values."""
        needed = self.required_resolution()
        if min(chart.resolution) < needed:
            raise ResolutionError(
                f"grid resolution {min(chart.resolution)} cannot resolve the "
                f"1/R^2 bump core for R={self.spec.R}; need >= {needed} points per axis",
                required=needed,
            )
        return self.values_on_grid(chart)


def bump_psi(spec: BumpSpec) -> BumpField:
    """Construct psi_R with analytic first/second chart derivatives."""
    return BumpField(spec)


# ---------------------------------------------------------------------------
# Pseudo-holomorphic diagnostics.

def pseudo_holomorphic_defect(s, fvals, point=None):
    """|df o J - i df| per grid point (or at one grid index)."""
    fvals = np.asarray(fvals, dtype=complex)
    df = forms.d_scalar(s.chart, fvals)
    dfJ = forms.apply_J_oneform(s, df)
    defect = np.sqrt(np.sum(np.abs(dfJ.comps - 1j * df.comps) ** 2, axis=0))
    if point is not None:
        return float(defect[tuple(point)])
    return defect


def nijenhuis_pairing(s, fvals):
    """max over frame pairs (e_a, e_b) of |df(N(e_a, e_b))| per point."""
    fvals = np.asarray(fvals, dtype=complex)
    df = forms.d_scalar(s.chart, fvals)
    N = nijenhuis_coordinate(s)
    f = build_frame(s)
    pair = np.einsum(
        "k...,kij...,ai...,bj...->ab...", df.comps, N.astype(complex), f.e, f.e
    )
    return np.abs(pair).max(axis=(0, 1))


# ---------------------------------------------------------------------------
# Seed selection.

@dataclass
class SeedPotential:
    """Scaled candidate with certified nonvanishing tau_12 near p0."""

    potential: cy.Potential
    region: tuple                  # ((lo, hi) per axis) index box around p0
    epsilon1: float
    basepoint: tuple               # grid index of p0
    lam: np.ndarray                # eigenvalues of H(phi)(p0), ascending
    candidate: AnalyticPotential = None
    scale_c: float = 1.0
    pair: tuple = (0, 1)
    p0: np.ndarray = None          # torus coordinates of p0
    U: np.ndarray = None           # unitary diagonalizing H(phi)(p0)
    chart_scale: float = 0.1
    margin: float = 0.0

    def analytic_grad(self, points):
        return self.scale_c * self.candidate.grad(points)

    def analytic_hess(self, points):
        return self.scale_c * self.candidate.hess(points)


def _chart_scale_bound(frame):
    """(rho_max, reach): largest rho keeping the chart image inside a quarter
    period, and the per-unit-rho coordinate reach of the unit polydisk."""
    n = frame.shape[0]
    dim = 2 * n
    M = np.zeros((dim, dim))
    for a in range(n):
        M[:, 2 * a] = 2.0 * frame[a].real
        M[:, 2 * a + 1] = -2.0 * frame[a].imag
    reach = float(np.abs(M).sum(axis=1).max())
    return 0.25 / reach, reach


def _box_indices(chart, p0_idx, halfwidth):
    """Slices (as index arrays) of the coordinate box p0 +- halfwidth, wrapped."""
    sels = []
    for d in range(chart.dim):
        N = chart.resolution[d]
        radius = int(np.ceil(halfwidth * N))
        idx = (p0_idx[d] + np.arange(-radius, radius + 1)) % N
        sels.append(np.unique(idx))
    return sels


def select_seed(s, candidates=None, rng=None):
    """Pick the candidate, scaling, basepoint and polydisk maximizing the
    certified lower bound epsilon1 of |tau_12| near the basepoint."""
    from .frame import nijenhuis_max_norm

    if nijenhuis_max_norm(s) <= NONINTEGRABILITY_THRESHOLD:
        raise NoSeedError(
            "structure is integrable (Nijenhuis tensor vanishes): tau is "
            "identically zero and no seed potential exists"
        )
    n = s.half_dim
    chart = s.chart
    if candidates is None:
        candidates = default_candidates(n)
    if not candidates:
        raise SeedSearchError("empty candidate list")

    f = build_frame(s)
    rho_max, reach = _chart_scale_bound(f.e[(...,) + (0,) * chart.dim])

    best = None
    diagnostics = []
    for cand in candidates:
        vals = cand.value(chart.grid_points())
        try:
            amp = cy.positivity_amplitude(s, vals)
            c = 0.9 * amp
        except AmplitudeError:
            c = 1.0
        tc = frame_tau_components(f, cy.tau(s, vals))      # components of tau(vals)
        for a in range(n):
            for b in range(a + 1, n):
                mag = 2.0 * np.abs(c) * np.abs(tc[a, b])   # |tau_ab(c*vals)|
                mag = np.broadcast_to(mag, chart.shape)
                flat = int(np.argmax(mag))
                p0_idx = np.unravel_index(flat, chart.shape)
                peak = float(mag[p0_idx])
                if peak <= 1e-12:
                    continue
                options = []
                for frac in (1.0, 0.75, 0.5, 0.25):
                    rho_try = rho_max * frac
                    halfwidth = 1.05 * rho_try * reach
                    sels_try = _box_indices(chart, p0_idx, halfwidth)
                    e1 = float(mag[np.ix_(*sels_try)].min())
                    options.append((rho_try, e1, sels_try))
                    diagnostics.append((cand.name, (a, b), frac, e1))
                e1_best = max(e1 for _, e1, _ in options)
                # Largest polydisk whose certified bound stays comparable:
                # bigger rho eases grid/support resolution downstream.
                rho, eps1, sels = next(
                    opt for opt in options if opt[1] >= 0.25 * e1_best
                )
                score = eps1
                if best is None or score > best["eps1"]:
                    best = {
                        "cand": cand,
                        "c": c,
                        "pair": (a, b),
                        "p0_idx": tuple(int(i) for i in p0_idx),
                        "rho": rho,
                        "eps1": eps1,
                        "region": tuple(
                            (int(sel[0]), int(sel[-1])) for sel in sels
                        ),
                    }
    if best is None or best["eps1"] <= 1e-9:
        raise SeedSearchError(
            f"no candidate produced a usable tau component; tried {diagnostics}"
        )

    cand = best["cand"]
    c = best["c"]
    p0 = chart.index_to_point(best["p0_idx"])
    phi_vals = c * cand.value(chart.grid_points())
    margin = cy.taming_margin(s, phi_vals)
    if margin <= cy.TAMING_THRESHOLD:
        raise SeedSearchError(f"seed scaling failed to keep taming margin > 0 ({margin})")

    # H(phi)(p0) in the frame basis, via the exact pointwise path.
    lg = LocalGeometry(s, p0[None, :])
    _, _, pabar = lg.covariant_of(c * cand.grad(p0[None, :]), c * cand.hess(p0[None, :]))
    M0 = np.eye(n) - 2.0 * pabar[..., 0]
    lamvals, U = np.linalg.eigh(0.5 * (M0 + M0.conj().T))
    if lamvals.min() <= 0:
        raise SeedSearchError(f"H(phi)(p0) not positive definite: eigenvalues {lamvals}")

    pot = cy.Potential(chart, phi_vals, zero_mean=True)
    return SeedPotential(
        potential=pot,
        region=best["region"],
        epsilon1=best["eps1"],
        basepoint=best["p0_idx"],
        lam=lamvals,
        candidate=cand,
        scale_c=c,
        pair=best["pair"],
        p0=p0,
        U=U,
        chart_scale=best["rho"],
        margin=margin,
    )


# ---------------------------------------------------------------------------
# Pointwise F along the frame path (exact identity for n = 2).

def frame_F(M, tau12):
    """F = det(M) + |tau_12|^2 for n = 2 (pointwise frame identity)."""
    det = (M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]).real
    return det + np.abs(tau12) ** 2


def _h_from_B(J, B):
    """Symmetric form (B J - J^T B)/2 for coordinate deformation matrices."""
    return 0.5 * (
        np.einsum("ij...,jl...->il...", B, J) - np.einsum("ji...,jl...->il...", J, B)
    )


class _ScanGeometry:
    """Covariant data of seed and bump at a batch of scan points."""

    def __init__(self, s, seed, bump, points):
        self.points = points
        lg = LocalGeometry(s, points)
        self.lg = lg.rotate(seed.U)
        gphi = seed.analytic_grad(points)
        hphi = seed.analytic_hess(points)
        self.pa_phi, _, self.pabar_phi = self.lg.covariant_of(gphi, hphi)
        _, gpsi, hpsi = bump.torus_eval(points, order=2)
        self.pa_psi, _, self.pabar_psi = self.lg.covariant_of(gpsi, hpsi)

    def tau12(self, amp):
        c = self.lg.tau_of(self.pa_phi + amp * self.pa_psi)
        return 2.0 * c[0, 1]

    def hermitian(self, amp):
        return self.lg.hermitian_of(self.pabar_phi + amp * self.pabar_psi)

    def F(self, amp):
        return frame_F(self.hermitian(amp), self.tau12(amp))

    def h_pencil(self):
        """(base, delta): coordinate h(phi + s psi) = base + s * delta."""
        Bphi = self.lg.deformation_form(self.pa_phi, self.pabar_phi).real
        Bpsi = self.lg.deformation_form(self.pa_psi, self.pabar_psi).real
        base = self.lg.g + _h_from_B(self.lg.J, Bphi)
        delta = _h_from_B(self.lg.J, Bpsi)
        return base, delta


def _scan_lattice(bump, R, rng):
    """Chart-coordinate scan set: inner core, support slabs, mid lattice,
    random fill of the polydisk, and the center."""
    n = bump.half_dim
    dim = 2 * n
    pts = [np.zeros((1, dim))]

    def mesh(ranges):
        grids = np.meshgrid(*ranges, indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=-1)

    core = np.linspace(-1.1 / R**2, 1.1 / R**2, 7)
    mid = np.linspace(-1.05 / R, 1.05 / R, 9)
    pts.append(mesh([core] * dim))
    pts.append(mesh([mid] * dim))
    slab_core = np.linspace(-1.1 / R**2, 1.1 / R**2, 5)
    slab_mid = np.linspace(-1.05 / R, 1.05 / R, 7)
    for i in range(min(2, n)):
        ranges = []
        for a in range(n):
            ranges.extend([slab_core, slab_core] if a == i else [slab_mid, slab_mid])
        pts.append(mesh(ranges))
    rand = rng.uniform(-1.0 / R, 1.0 / R, size=(8000, dim))
    pts.append(rand)
    return np.concatenate(pts, axis=0)


def _grid_support_points(s, bump):
    """Torus grid points whose chart image lies in (a slight dilation of)
    the bump support."""
    chart = s.chart
    pts = chart.grid_points().reshape(-1, chart.dim)
    keep = []
    for start in range(0, pts.shape[0], 1 << 20):
        block = pts[start : start + (1 << 20)]
        w = bump.torus_to_chart(block)
        r = np.max(
            [np.hypot(w[:, 2 * a], w[:, 2 * a + 1]) for a in range(bump.half_dim)],
            axis=0,
        )
        keep.append(block[r <= 1.5 / bump.spec.R])
    return np.concatenate(keep, axis=0)


def _seed_grid_F(s, seed, chunk=SCAN_CHUNK):
    """F(phi) at every grid point via the exact pointwise path (cached)."""

    def _build():
        chart = s.chart
        pts = chart.grid_points().reshape(-1, chart.dim)
        out = np.empty(pts.shape[0])
        for start in range(0, pts.shape[0], chunk):
            block = pts[start : start + chunk]
            lg = LocalGeometry(s, block)
            pa, _, pabar = lg.covariant_of(
                seed.analytic_grad(block), seed.analytic_hess(block)
            )
            M = lg.hermitian_of(pabar)
            tau12 = 2.0 * lg.tau_of(pa)[0, 1]
            out[start : start + chunk] = frame_F(M, tau12)
        return out

    return s.cache(("seed_grid_F", id(seed)), _build)


@dataclass
class BoundaryReport:
    R0: float
    amplitude: float
    epsilon1: float
    margin: float
    minF: float
    minF1_near_p0: float
    p0: tuple
    lam: list
    min_eig_in_disk: bool = True
    amplitude_in_range: bool = True
    tau12_bound: float = None
    diagnostics: dict = field(default_factory=dict)

    def as_dict(self):
        return {
            "R0": self.R0,
            "amplitude": self.amplitude,
            "epsilon1": self.epsilon1,
            "margin": self.margin,
            "minF": self.minF,
            "minF1_near_p0": self.minF1_near_p0,
            "p0": list(self.p0),
            "lambda": [float(v) for v in self.lam],
            "min_eig_in_disk": self.min_eig_in_disk,
            "amplitude_in_range": self.amplitude_in_range,
            "tau12_bound": self.tau12_bound,
        }


def boundary_potential(s, seed, R, compute_F=True, bisect_tol=1e-12, rng_seed=7):
    """phi_R = phi + a*psi_R with a the positivity amplitude of the bump
    direction; returns the potential and a BoundaryReport.

    All certification (margin, minF, tau_12) runs on the analytic scan set,
    which contains every grid point inside the bump support; the uniform grid
    itself never needs to resolve the 1/R^2 core.
    """
    if s.half_dim != 2:
        raise PreconditionError("boundary construction implemented for n = 2")

    spec_frame = LocalGeometry(s, seed.p0[None, :]).rotate(seed.U).e[..., 0]
    spec = BumpSpec(R, seed.p0, spec_frame, seed.lam, seed.chart_scale)
    bump = bump_psi(spec)

    rng = np.random.default_rng(rng_seed)
    w_scan = _scan_lattice(bump, R, rng)
    scan_pts = bump.chart_to_torus(w_scan)
    support_pts = _grid_support_points(s, bump)
    all_pts = np.concatenate([scan_pts, support_pts], axis=0)

    geo = _ScanGeometry(s, seed, bump, all_pts)
    base, delta = geo.h_pencil()

    def margin_at(a):
        return cy.min_eigenvalue_field(base + a * delta)

    m0, _ = margin_at(0.0)
    if m0 <= cy.TAMING_THRESHOLD:
        raise PreconditionError(
            f"seed potential is not strictly taming on the scan set (margin {m0:.3e})"
        )

    lo, hi = 0.0, 1.0
    m_hi, _ = margin_at(hi)
    amplitude_in_range = True
    while m_hi > 0.0:
        lo = hi
        hi *= 2.0
        amplitude_in_range = False
        if hi > 1e6:
            raise AmplitudeError("bump direction never violates taming (unexpected)")
        m_hi, _ = margin_at(hi)
    while hi - lo > bisect_tol:
        mid = 0.5 * (lo + hi)
        if margin_at(mid)[0] > 0.0:
            lo = mid
        else:
            hi = mid
    a = 0.5 * (lo + hi)
    margin_final, loc = margin_at(a)
    w_loc = bump.torus_to_chart(all_pts[loc][None, :])[0]
    rmax = max(
        np.hypot(w_loc[2 * i], w_loc[2 * i + 1]) for i in range(bump.half_dim)
    )
    min_eig_in_disk = bool(rmax <= 1.0 / R + 1e-9)

    phi_R_vals = seed.potential.values + a * bump.values_on_grid(s.chart)
    phi_R = cy.project_zero_mean(s, phi_R_vals)

    minF = None
    minF1 = None
    if compute_F:
        F_scan = geo.F(a)
        grid_F = _seed_grid_F(s, seed)
        # On grid points outside the support psi vanishes identically, so
        # F(phi_R) = F(phi) there; inside, the scan geometry covers them.
        min_outside = np.inf
        pts_flat = s.chart.grid_points().reshape(-1, s.chart.dim)
        for start in range(0, pts_flat.shape[0], 1 << 20):
            block = pts_flat[start : start + (1 << 20)]
            outside = ~bump.support_mask(bump.torus_to_chart(block))
            if np.any(outside):
                min_outside = min(
                    min_outside, float(grid_F[start : start + (1 << 20)][outside].min())
                )
        minF = float(min(F_scan.min(), min_outside))
        near = np.max(np.abs(w_scan), axis=1) <= 1.2 / R**2
        tau12_near = geo.tau12(a)[: len(w_scan)][near]
        minF1 = float(np.min(np.abs(tau12_near) ** 2))

    # lower bound on |tau12| over s in [0,1] on the Delta_R image; tau12 is
    # affine in s so the sampled minimum is cheap on the existing geometry.
    w_all = bump.torus_to_chart(all_pts)
    r_all = np.max(
        [np.hypot(w_all[:, 2 * i], w_all[:, 2 * i + 1]) for i in range(bump.half_dim)],
        axis=0,
    )
    in_disk = r_all <= 1.0 / R + 1e-12
    c_phi = geo.tau12(0.0)[in_disk]
    c_psi = (geo.tau12(1.0) - geo.tau12(0.0))[in_disk]
    tau12_bound = min(
        float(np.abs(c_phi + sv * c_psi).min()) for sv in np.linspace(0.0, 1.0, 11)
    )

    report = BoundaryReport(
        R0=R,
        amplitude=a,
        epsilon1=seed.epsilon1,
        margin=margin_final,
        minF=minF,
        minF1_near_p0=minF1,
        p0=seed.basepoint,
        lam=list(seed.lam),
        min_eig_in_disk=min_eig_in_disk,
        amplitude_in_range=amplitude_in_range and a <= 1.0 + 1e-8,
        tau12_bound=tau12_bound,
        diagnostics={"scan_points": int(all_pts.shape[0])},
    )
    return phi_R, report


def tau12_lower_bound(s, seed, R, num_s=11, rng_seed=11):
    """min over s in [0,1] and the Delta_R scan set of |tau_12(phi + s psi_R)|."""
    spec_frame = LocalGeometry(s, seed.p0[None, :]).rotate(seed.U).e[..., 0]
    spec = BumpSpec(R, seed.p0, spec_frame, seed.lam, seed.chart_scale)
    bump = bump_psi(spec)
    rng = np.random.default_rng(rng_seed)
    w_scan = _scan_lattice(bump, R, rng)
    pts = bump.chart_to_torus(w_scan)
    geo = _ScanGeometry(s, seed, bump, pts)
    c_phi = 2.0 * geo.lg.tau_of(geo.pa_phi)[0, 1]
    c_psi = 2.0 * geo.lg.tau_of(geo.pa_psi)[0, 1]
    best = np.inf
    for sv in np.linspace(0.0, 1.0, num_s):
        best = min(best, float(np.abs(c_phi + sv * c_psi).min()))
    return best


def epsilon0_floor(seed, half_dim):
    """Acceptance floor mirroring the proof's bound 2^{-n} eps1^2 prod lam."""
    extra = 1.0
    for lam in seed.lam[2:]:
        extra *= lam
    return 0.5 * (seed.epsilon1 / 2.0) ** 2 * extra * 2.0 ** (-half_dim)


def witness_density(s, seed, R, amplitude, chunk=SCAN_CHUNK):
    """Pointwise F(phi + a psi_R) at every grid point, normalized to unit
    mass; the positive target density realized by a boundary potential."""
    spec_frame = LocalGeometry(s, seed.p0[None, :]).rotate(seed.U).e[..., 0]
    spec = BumpSpec(R, seed.p0, spec_frame, seed.lam, seed.chart_scale)
    bump = bump_psi(spec)
    chart = s.chart
    pts = chart.grid_points().reshape(-1, chart.dim)
    out = np.empty(pts.shape[0])
    for start in range(0, pts.shape[0], chunk):
        block = pts[start : start + chunk]
        geo = _ScanGeometry(s, seed, bump, block)
        out[start : start + chunk] = geo.F(amplitude)
    f = out.reshape(chart.shape)
    return f / forms.integrate(s, f)


def search_R(s, seed, R_list):
    """First R whose boundary potential has min F > 0 and F_1 above the floor."""
    if not R_list:
        raise ConfigurationError("empty R list")
    floor = epsilon0_floor(seed, s.half_dim)
    diagnostics = []
    for R in R_list:
        phi_R, report = boundary_potential(s, seed, R)
        entry = {
            "R": R,
            "minF": report.minF,
            "minF1_near_p0": report.minF1_near_p0,
            "margin": report.margin,
            "amplitude": report.amplitude,
            "tau12_bound": report.tau12_bound,
        }
        diagnostics.append(entry)
        if (
            report.minF > 0.0
            and report.minF1_near_p0 >= floor
            and report.tau12_bound >= seed.epsilon1 / 2.0
        ):
            report.diagnostics["sweep"] = diagnostics
            report.diagnostics["epsilon0_floor"] = floor
            return R, phi_R, report
    raise SearchFailure(
        f"no R in {list(R_list)} produced a positive-F boundary potential "
        f"(floor {floor:.3e})",
        diagnostics=diagnostics,
    )
