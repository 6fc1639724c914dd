"""Brute-force ground truth for the protection map.

Nothing here goes through :mod:`qprotect.scheme` path products or the
closed-form coefficients in :mod:`qprotect.batch`.  Operators are rebuilt
from a basis matrix ``W = [V_+ V_-]`` and spectral forms, each kept preweak
branch is composed stage by stage as a 4x4 superoperator acting on
column-stacked density matrices (``vec(A rho B) = (B^T kron A) vec(rho)``),
and every routine broadcasts over leading array dimensions so the same code
backs the exhaustive grid searches.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .scheme import (
    DEGENERATE_WEIGHT,
    ControlParams,
    DegenerateRunError,
    Ensemble,
    ProtectionResult,
    check_noise,
)

_HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
_SWAP = np.array([[0, 1], [1, 0]], dtype=complex)
ANGLE_PARAMS = ("alpha", "gamma_plus", "gamma_minus")
PARAM_NAMES = ("alpha", "p", "p1", "p2", "gamma_plus", "gamma_minus")
CHUNK = 1 << 14


def vec(rho: np.ndarray) -> np.ndarray:
    """Column-stack the last two axes."""
    return np.swapaxes(rho, -1, -2).reshape(rho.shape[:-2] + (4,))


def unvec(v: np.ndarray) -> np.ndarray:
    return np.swapaxes(v.reshape(v.shape[:-1] + (2, 2)), -1, -2)


def superop(k: np.ndarray) -> np.ndarray:
    """``conj(K) kron K`` over leading dimensions, so ``vec(K rho K^+) = superop(K) vec(rho)``."""
    s = np.einsum("...ab,...cd->...acbd", k.conj(), k)
    return s.reshape(k.shape[:-2] + (4, 4))


def _adj(k):
    return np.swapaxes(k.conj(), -1, -2)


def _diag(a, b):
    a, b = np.broadcast_arrays(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))
    out = np.zeros(a.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = a
    out[..., 1, 1] = b
    return out


def _plane_frame(half, phase):
    """Logical-basis columns of ``cos h|+> + e s|->`` and ``s|+> - e c|->``."""
    half, phase = np.broadcast_arrays(np.asarray(half, dtype=float), np.asarray(phase, dtype=complex))
    c, s = np.cos(half), np.sin(half)
    m = np.empty(half.shape + (2, 2), dtype=complex)
    m[..., 0, 0] = c
    m[..., 1, 0] = phase * s
    m[..., 0, 1] = s
    m[..., 1, 1] = -phase * c
    return _HADAMARD @ m


def stage_operators(phi, r, alpha, p, p1, p2, gamma_plus, gamma_minus):
    """``(branches, kraus)`` where ``branches[i] = (M, U, N, R)`` for outcome ``+``, ``-``."""
    phase = np.exp(1j * np.asarray(phi, dtype=float))
    w = _plane_frame((np.asarray(alpha, dtype=float) + math.pi / 2) / 2, phase)
    wd = _adj(w)
    p = np.asarray(p, dtype=float)
    sp, sq = np.sqrt(p), np.sqrt(1 - p)
    m = (w @ _diag(sp, sq) @ wd, w @ _diag(sq, sp) @ wd)
    u = (wd, _SWAP @ wd)
    n = (w @ _diag(np.sqrt(1 - np.asarray(p1, dtype=float)), 1.0) @ wd,
         w @ _diag(1.0, np.sqrt(1 - np.asarray(p2, dtype=float))) @ wd)
    # spectral form: eigenvectors (|+> +- i e^{i phi}|->)/sqrt(2) of the generator
    eta = _plane_frame(math.pi / 4, 1j * phase)
    rot = tuple(eta @ _diag(np.exp(-0.5j * np.asarray(g, dtype=float)),
                            np.exp(0.5j * np.asarray(g, dtype=float))) @ _adj(eta)
                for g in (gamma_plus, gamma_minus))
    r = np.asarray(r, dtype=float)
    e1 = _diag(1.0, np.sqrt(1 - r))
    e2 = np.zeros(r.shape + (2, 2), dtype=complex)
    e2[..., 0, 1] = np.sqrt(r)
    return [(m[i], u[i], n[i], rot[i]) for i in range(2)], (e1, e2)


def conditional_superops(phi, r, alpha, p, p1, p2, gamma_plus, gamma_minus) -> np.ndarray:
    """Array ``(..., 2, 4, 4)``: the kept-branch map of each preweak outcome."""
    branches, (e1, e2) = stage_operators(phi, r, alpha, p, p1, p2, gamma_plus, gamma_minus)
    channel = superop(e1) + superop(e2)
    maps = []
    for m, u, n, rot in branches:
        s = superop(m)
        for stage in (superop(u), channel, superop(_adj(u)), superop(n), superop(rot)):
            s = stage @ s
        maps.append(s)
    return np.stack(np.broadcast_arrays(*maps), axis=-3)


@dataclass(frozen=True)
class ConditionalMap:
    """Completely positive, trace non-increasing map of one kept preweak branch."""

    matrix: np.ndarray

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        return unvec(self.matrix @ vec(rho))

    def choi(self) -> np.ndarray:
        """``sum_ij |i><j| kron E(|i><j|)``."""
        out = np.zeros((4, 4), dtype=complex)
        for i, j in itertools.product(range(2), repeat=2):
            unit = np.zeros((2, 2), dtype=complex)
            unit[i, j] = 1.0
            out[2 * i:2 * i + 2, 2 * j:2 * j + 2] = self(unit)
        return out

    def is_completely_positive(self, atol: float = 1e-10) -> bool:
        c = self.choi()
        return bool(np.allclose(c, c.conj().T, atol=atol) and np.linalg.eigvalsh(c).min() >= -atol)

    def is_trace_nonincreasing(self, atol: float = 1e-12) -> bool:
        """Dual map applied to the identity must stay below the identity."""
        # row vector vec(I)^T S gives the dual image of I (column stacking)
        dual = unvec(vec(np.eye(2, dtype=complex)) @ self.matrix).T
        dual = 0.5 * (dual + dual.conj().T)
        return bool(np.linalg.eigvalsh(np.eye(2) - dual).min() >= -atol)


def conditional_maps(e: Ensemble, c: ControlParams, r: float):
    s = conditional_superops(e.phi, check_noise(r), *c.as_tuple())
    return ConditionalMap(s[0]), ConditionalMap(s[1])


def _ket(theta, phi):
    theta, phi = np.broadcast_arrays(np.asarray(theta, dtype=float), np.asarray(phi, dtype=float))
    return _plane_frame(theta / 2, np.exp(1j * phi))[..., :, 0]


def evaluate_grid(theta, phi, s_plus, r, params):
    """Vectorized ``(f_plus, f_minus, g_plus, g_minus, F, G, rho_plus, rho_minus)``."""
    total = conditional_superops(phi, r, *params).sum(axis=-3)
    out = []
    for sign in (1.0, -1.0):
        psi = _ket(sign * np.asarray(theta, dtype=float), phi)
        rho_in = np.einsum("...a,...b->...ab", psi, psi.conj())
        rho = unvec(np.einsum("...ab,...b->...a", total, vec(rho_in)))
        g = np.real(rho[..., 0, 0] + rho[..., 1, 1])
        overlap = np.real(np.einsum("...a,...ab,...b->...", psi.conj(), rho, psi))
        with np.errstate(divide="ignore", invalid="ignore"):
            f = np.where(g >= DEGENERATE_WEIGHT, overlap / g, np.nan)
        out.append((f, g, rho))
    (f_p, g_p, rho_p), (f_m, g_m, rho_m) = out
    s_plus = np.asarray(s_plus, dtype=float)
    F = s_plus * f_p + (1 - s_plus) * f_m
    G = s_plus * g_p + (1 - s_plus) * g_m
    return f_p, f_m, g_p, g_m, F, G, rho_p, rho_m


def superoperator_protect(e: Ensemble, c: ControlParams, r: float) -> ProtectionResult:
    """Same contract as :func:`qprotect.scheme.protect`, via composed superoperators.

    The returned result carries no path records.
    """
    f_p, f_m, g_p, g_m, F, G, rho_p, rho_m = evaluate_grid(e.theta, e.phi, e.s_plus, check_noise(r), c.as_tuple())
    for g, label in ((g_p, "psi_plus"), (g_m, "psi_minus")):
        if not g >= DEGENERATE_WEIGHT:
            raise DegenerateRunError(f"success probability for {label} vanishes (g={float(g)!r})")
    clamp = lambda x: min(1.0, max(0.0, float(x)))  # noqa: E731
    f_p, f_m = clamp(f_p), clamp(f_m)
    return ProtectionResult(
        f_p, f_m, float(g_p), float(g_m),
        e.s_plus * f_p + e.s_minus * f_m, e.s_plus * float(g_p) + e.s_minus * float(g_m),
        rho_p / g_p, rho_m / g_m,
    )


def helstrom_success(e: Ensemble) -> float:
    """Optimal two-outcome discrimination probability for the ensemble."""
    overlap = abs(np.vdot(_ket(e.theta, e.phi), _ket(-e.theta, e.phi)))
    return 0.5 * (1 + math.sqrt(max(0.0, 1 - 4 * e.s_plus * e.s_minus * overlap ** 2)))


def discrimination_probability(e: Ensemble, alpha):
    """Success of guessing ``psi_+-`` from a projective measurement in the basis ``V_+-(alpha)``."""
    alpha = np.asarray(alpha, dtype=float)
    w = _plane_frame((alpha + math.pi / 2) / 2, np.exp(1j * e.phi))
    hit_p = np.abs(np.einsum("...a,a->...", w[..., :, 0].conj(), _ket(e.theta, e.phi))) ** 2
    hit_m = np.abs(np.einsum("...a,a->...", w[..., :, 1].conj(), _ket(-e.theta, e.phi))) ** 2
    return e.s_plus * hit_p + e.s_minus * hit_m


@dataclass(frozen=True)
class GridOptimum:
    params: ControlParams
    F: float
    G: float
    index: int


def _axis(name: str, step: float) -> np.ndarray:
    if name in ANGLE_PARAMS:
        n = int(math.floor(2 * math.pi / step + 1e-9))
        return -math.pi + step * np.arange(n)
    n = int(math.floor(1 / step + 1e-9))
    return step * np.arange(n + 1)


def exhaustive_argmax(
    e: Ensemble,
    r: float,
    pinned: Mapping[str, float],
    free: Sequence[str],
    step: float,
    objective: str = "F",
) -> GridOptimum:
    """True lattice argmax of ``F`` (or ``G``) over at most two free parameters.

    Angles range over ``[-pi, pi)`` and strengths over ``[0, 1]``; ties go to
    the lowest lattice index (first free parameter varies slowest).
    Unpinned, non-free parameters take the :class:`ControlParams` defaults.
    """
    if not 1 <= len(free) <= 2:
        raise ValueError("exhaustive_argmax supports one or two free parameters")
    if step < 1e-6:
        raise ValueError("step must be at least 1e-6")
    unknown = set(free) | set(pinned)
    unknown -= set(PARAM_NAMES)
    if unknown:
        raise ValueError(f"unknown parameters {sorted(unknown)}")
    base = {**ControlParams().__dict__, **pinned}
    axes = [_axis(name, step) for name in free]
    sizes = [len(a) for a in axes]
    total = int(np.prod(sizes))
    which = 4 if objective == "F" else 5
    best_val, best_idx = -np.inf, -1
    for start in range(0, total, CHUNK):
        idx = np.arange(start, min(total, start + CHUNK))
        coords = np.unravel_index(idx, sizes)
        values = dict(base)
        for name, axis, k in zip(free, axes, coords):
            values[name] = axis[k]
        vals = evaluate_grid(e.theta, e.phi, e.s_plus, r, [values[n] for n in PARAM_NAMES])[which]
        vals = np.where(np.isnan(vals), -np.inf, vals)
        j = int(np.argmax(vals))
        if vals[j] > best_val:
            best_val, best_idx = float(vals[j]), int(idx[j])
    coords = np.unravel_index(best_idx, sizes)
    values = dict(base)
    for name, axis, k in zip(free, axes, coords):
        values[name] = float(axis[k])
    params = ControlParams(**values)
    res = superoperator_protect(e, params, r)
    return GridOptimum(params, res.F, res.G, best_idx)
