"""Analytic candidate potentials: periodic trigonometric fields with
closed-form gradients and Hessians.

Closed-form derivatives matter because the boundary construction evaluates
covariant Hessians at off-grid points far below the grid scale; everything
else (grid sampling, zero mean) is a convenience layer on top.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["TrigTerm", "AnalyticPotential", "default_candidates", "random_potential"]

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class TrigTerm:
    """amp * sin(2 pi k.x + phase); zero-mean whenever k != 0."""

    amp: float
    wave: tuple
    phase: float = 0.0


@dataclass
class AnalyticPotential:
    """Finite sum of plane-wave terms on the unit torus."""

    terms: list
    name: str = ""

    def value(self, points):
        points = np.asarray(points, dtype=float)
        out = np.zeros(points.shape[:-1])
        for t in self.terms:
            k = np.asarray(t.wave, dtype=float)
            out += t.amp * np.sin(TWO_PI * points @ k + t.phase)
        return out

    def grad(self, points):
        """Gradient with the coordinate axis first: shape (2n, *pts)."""
        points = np.asarray(points, dtype=float)
        dim = points.shape[-1]
        out = np.zeros((dim,) + points.shape[:-1])
        for t in self.terms:
            k = np.asarray(t.wave, dtype=float)
            c = t.amp * TWO_PI * np.cos(TWO_PI * points @ k + t.phase)
            out += k.reshape((dim,) + (1,) * c.ndim) * c
        return out

    def hess(self, points):
        """Hessian with matrix axes first: shape (2n, 2n, *pts)."""
        points = np.asarray(points, dtype=float)
        dim = points.shape[-1]
        out = np.zeros((dim, dim) + points.shape[:-1])
        for t in self.terms:
            k = np.asarray(t.wave, dtype=float)
            s = -t.amp * TWO_PI**2 * np.sin(TWO_PI * points @ k + t.phase)
            kk = np.outer(k, k).reshape((dim, dim) + (1,) * s.ndim)
            out += kk * s
        return out

    def sample(self, chart):
        return self.value(chart.grid_points())


def _axis_wave(dim, axis, other=None, sign=1):
    k = [0] * dim
    k[axis] = 1
    if other is not None:
        k[other] = sign
    return tuple(k)


def default_candidates(half_dim):
    """Twelve low-frequency zero-mean candidates mixing all coordinates."""
    dim = 2 * half_dim
    cands = []
    # single-axis waves on the first two coordinate pairs
    for axis in range(min(4, dim)):
        phase = 0.0 if axis % 2 == 0 else 0.5 * np.pi
        cands.append(
            AnalyticPotential(
                [TrigTerm(1.0, _axis_wave(dim, axis), phase)],
                name=f"wave_axis{axis}",
            )
        )
    # diagonal waves coupling pairs
    cands.append(AnalyticPotential([TrigTerm(1.0, _axis_wave(dim, 0, 1))], name="diag_x1y1"))
    cands.append(AnalyticPotential([TrigTerm(1.0, _axis_wave(dim, 0, 3))], name="diag_x1y2"))
    cands.append(AnalyticPotential([TrigTerm(1.0, _axis_wave(dim, 2, 1, -1))], name="diag_x2my1"))
    cands.append(AnalyticPotential([TrigTerm(1.0, _axis_wave(dim, 1, 2))], name="diag_y1x2"))
    # products sin*cos, written as two-wave sums
    cands.append(
        AnalyticPotential(
            [TrigTerm(0.5, _axis_wave(dim, 0, 3)), TrigTerm(0.5, _axis_wave(dim, 0, 3, -1))],
            name="prod_x1_y2",
        )
    )
    cands.append(
        AnalyticPotential(
            [TrigTerm(0.5, _axis_wave(dim, 2, 1)), TrigTerm(0.5, _axis_wave(dim, 2, 1, -1))],
            name="prod_x2_y1",
        )
    )
    # two-term mixes
    cands.append(
        AnalyticPotential(
            [TrigTerm(1.0, _axis_wave(dim, 0)), TrigTerm(0.5, _axis_wave(dim, 3), 0.5 * np.pi)],
            name="mix_x1_y2",
        )
    )
    cands.append(
        AnalyticPotential(
            [TrigTerm(0.7, _axis_wave(dim, 1)), TrigTerm(0.7, _axis_wave(dim, 2))],
            name="mix_y1_x2",
        )
    )
    return cands


def random_potential(half_dim, rng, num_terms=4, amp=1.0, max_wave=2):
    """Random zero-mean trigonometric potential (for property sampling)."""
    dim = 2 * half_dim
    terms = []
    for _ in range(num_terms):
        while True:
            k = rng.integers(-max_wave, max_wave + 1, size=dim)
            if np.any(k != 0):
                break
        terms.append(
            TrigTerm(
                float(amp * rng.uniform(0.3, 1.0)),
                tuple(int(v) for v in k),
                float(rng.uniform(0, TWO_PI)),
            )
        )
    return AnalyticPotential(terms, name="random")
