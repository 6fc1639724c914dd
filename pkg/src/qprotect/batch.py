"""Vectorized evaluation of the scheme over parameter arrays.

F and G do not depend on the ensemble phase, so everything here is computed
at ``phi = 0`` where all states are real vectors in the ``{|+>, |->}``
coordinates and the feedback rotation turns Bloch vectors inside the xz
plane.  For a fixed ``(alpha, p, p1, p2)`` the average fidelity splits into
one term per preweak outcome ``i``::

    F = sum_i  A_i + B_i cos(gamma_i) + C_i sin(gamma_i)

so the best feedback angles are ``atan2(C_i, B_i)``.  All functions broadcast
over numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .scheme import DEGENERATE_WEIGHT


@dataclass
class BranchTerms:
    """Per-outcome fidelity coefficients and per-input success probabilities."""

    g_plus: np.ndarray
    g_minus: np.ndarray
    # [outcome][input] arrays; outcome/input index 0 is '+', 1 is '-'
    weight: list
    overlap: list
    cross: list
    valid: np.ndarray

    def coefficients(self, s_plus):
        """``(A, B, C)`` lists indexed by outcome for priors ``s_plus``."""
        w = (np.divide(s_plus, self.g_plus, out=np.zeros_like(self.g_plus), where=self.valid),
             np.divide(1 - s_plus, self.g_minus, out=np.zeros_like(self.g_minus), where=self.valid))
        A, B, C = [], [], []
        for i in range(2):
            A.append(0.5 * (w[0] * self.weight[i][0] + w[1] * self.weight[i][1]))
            B.append(0.5 * (w[0] * self.overlap[i][0] + w[1] * self.overlap[i][1]))
            C.append(0.5 * (w[0] * self.cross[i][0] + w[1] * self.cross[i][1]))
        return A, B, C


def _branch_vectors(c0, c1, p, p1, p2, r, sqrt):
    """Kept path states in V coordinates, ``(plus paths, minus paths)``; each path is ``(v0, v1)``."""
    sp, sq = sqrt(p), sqrt(1 - p)
    sr, sk = sqrt(r), sqrt(1 - r)
    n1, n2 = sqrt(1 - p1), sqrt(1 - p2)
    plus = ((n1 * sp * c0, sk * sq * c1), (n1 * sr * sq * c1, 0.0))
    minus = ((sk * sq * c0, n2 * sp * c1), (0.0, n2 * sr * sq * c0))
    return plus, minus


def _terms(theta, r, alpha, p, p1, p2, sqrt, cos, sin):
    """``(g, weight, overlap, cross)``; the last three are indexed ``[outcome][input]``."""
    half_b = (alpha + math.pi / 2) / 2
    cb, sb = cos(half_b), sin(half_b)
    weight = [[0.0, 0.0], [0.0, 0.0]]
    overlap = [[0.0, 0.0], [0.0, 0.0]]
    cross = [[0.0, 0.0], [0.0, 0.0]]
    g = [0.0, 0.0]
    for s, sign in enumerate((1.0, -1.0)):
        th = sign * theta
        a, b = cos(th / 2), sin(th / 2)
        # V coordinates of psi: <V+|psi>, <V-|psi> (all real at phi = 0)
        c0 = a * cb + b * sb
        c1 = a * sb - b * cb
        ux, uz = sin(th), cos(th)
        for i, paths in enumerate(_branch_vectors(c0, c1, p, p1, p2, r, sqrt)):
            n = bx = bz = 0.0
            for v0, v1 in paths:
                # back to |+-> coordinates
                x = v0 * cb + v1 * sb
                y = v0 * sb - v1 * cb
                n = n + x * x + y * y
                bx = bx + 2 * x * y
                bz = bz + x * x - y * y
            weight[i][s] = n
            overlap[i][s] = ux * bx + uz * bz
            cross[i][s] = ux * bz - uz * bx
            g[s] = g[s] + n
    return g, weight, overlap, cross


def branch_terms(theta, r, alpha, p, p1, p2) -> BranchTerms:
    args = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (theta, r, alpha, p, p1, p2)))
    shape = args[0].shape
    g, weight, overlap, cross = _terms(*args, np.sqrt, np.cos, np.sin)
    full = lambda v: np.broadcast_to(v, shape)  # noqa: E731
    weight, overlap, cross = ([[full(v) for v in row] for row in t] for t in (weight, overlap, cross))
    g_plus, g_minus = full(g[0]), full(g[1])
    valid = (g_plus >= DEGENERATE_WEIGHT) & (g_minus >= DEGENERATE_WEIGHT)
    return BranchTerms(g_plus, g_minus, weight, overlap, cross, valid)


def evaluate(theta, s_plus, r, alpha, p, p1, p2, gamma_plus, gamma_minus):
    """Arrays ``(f_plus, f_minus, g_plus, g_minus, F, G)``; NaN where degenerate."""
    theta, s_plus, r, alpha, p, p1, p2, gamma_plus, gamma_minus = np.broadcast_arrays(
        *(np.asarray(v, dtype=float) for v in (theta, s_plus, r, alpha, p, p1, p2, gamma_plus, gamma_minus)))
    t = branch_terms(theta, r, alpha, p, p1, p2)
    gam = (gamma_plus, gamma_minus)
    f = []
    for s, g in enumerate((t.g_plus, t.g_minus)):
        acc = 0.0
        for i in range(2):
            acc = acc + t.weight[i][s] + np.cos(gam[i]) * t.overlap[i][s] + np.sin(gam[i]) * t.cross[i][s]
        f.append(np.divide(0.5 * acc, g, out=np.full_like(g, np.nan), where=t.valid))
    s_plus = np.asarray(s_plus, dtype=float)
    F = s_plus * f[0] + (1 - s_plus) * f[1]
    G = s_plus * t.g_plus + (1 - s_plus) * t.g_minus
    G = np.where(t.valid, G, np.nan)
    return f[0], f[1], t.g_plus, t.g_minus, F, G


def best_rotations(theta, s_plus, r, alpha, p, p1, p2):
    """Maximize F over both feedback angles in closed form.

    Returns ``(F_best, G, gamma_plus, gamma_minus)``; F is NaN where a
    candidate input has vanishing success probability.
    """
    t = branch_terms(theta, r, alpha, p, p1, p2)
    A, B, C = t.coefficients(np.asarray(s_plus, dtype=float))
    F = A[0] + A[1] + np.hypot(B[0], C[0]) + np.hypot(B[1], C[1])
    gp = np.arctan2(C[0], B[0])
    gm = np.arctan2(C[1], B[1])
    G = s_plus * t.g_plus + (1 - np.asarray(s_plus, dtype=float)) * t.g_minus
    F = np.where(t.valid, F, np.nan)
    G = np.where(t.valid, G, np.nan)
    return F, G, gp, gm


def best_rotations_scalar(theta, s_plus, r, alpha, p, p1, p2):
    """Scalar :func:`best_rotations` on plain floats; F is NaN when degenerate."""
    g, weight, overlap, cross = _terms(theta, r, alpha, p, p1, p2, math.sqrt, math.cos, math.sin)
    G = s_plus * g[0] + (1 - s_plus) * g[1]
    if g[0] < DEGENERATE_WEIGHT or g[1] < DEGENERATE_WEIGHT:
        return math.nan, G, 0.0, 0.0
    w = (s_plus / g[0], (1 - s_plus) / g[1])
    F, gam = 0.0, []
    for i in range(2):
        A = 0.5 * (w[0] * weight[i][0] + w[1] * weight[i][1])
        B = 0.5 * (w[0] * overlap[i][0] + w[1] * overlap[i][1])
        C = 0.5 * (w[0] * cross[i][0] + w[1] * cross[i][1])
        F += A + math.hypot(B, C)
        gam.append(math.atan2(C, B))
    return F, G, gam[0], gam[1]


def evaluate_scalar(theta, s_plus, r, alpha, p, p1, p2, gamma_plus, gamma_minus):
    """Scalar ``(F, G)`` at fixed feedback angles; F is NaN when degenerate."""
    g, weight, overlap, cross = _terms(theta, r, alpha, p, p1, p2, math.sqrt, math.cos, math.sin)
    G = s_plus * g[0] + (1 - s_plus) * g[1]
    if g[0] < DEGENERATE_WEIGHT or g[1] < DEGENERATE_WEIGHT:
        return math.nan, G
    cg = (math.cos(gamma_plus), math.cos(gamma_minus))
    sg = (math.sin(gamma_plus), math.sin(gamma_minus))
    f = [0.5 * sum(weight[i][s] + cg[i] * overlap[i][s] + sg[i] * cross[i][s] for i in range(2)) / g[s]
         for s in range(2)]
    return s_plus * f[0] + (1 - s_plus) * f[1], G
