"""The composite control pipeline.

A qubit prepared in one of two states ``|psi_+->`` (priors ``s_+``, ``s_-``)
goes through

    preweak measurement M_i -> feedforward U_i -> amplitude damping E_j
    -> reversal U_i^dagger -> postweak N_i -> feedback rotation R_i

and the abandoned postweak outcomes (``Nbar_i``) are discarded.  The output
for each input is the normalized mixture of the four kept paths ``(i, j)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, NamedTuple, Tuple

import numpy as np

from .qubit import (
    IDENTITY,
    KET_0,
    KET_1,
    KET_MINUS,
    KET_PLUS,
    PM_SIGMAS,
    dagger,
    fidelity_pure,
    ket_plane,
    outer,
    squared_norm,
)

DEGENERATE_WEIGHT = 1e-15
PLUS, MINUS = +1, -1


class DegenerateRunError(ValueError):
    """All probability for an input state was abandoned (``g`` vanishes)."""


def _check_range(name: str, value: float, lo: float, hi: float, closed_hi: bool = True) -> None:
    ok = math.isfinite(value) and lo <= value and (value <= hi if closed_hi else value < hi)
    if not ok:
        bracket = "]" if closed_hi else ")"
        raise ValueError(f"{name}={value!r} outside [{lo}, {hi}{bracket}")


def wrap_angle(x: float) -> float:
    """Map an angle into ``[-pi, pi)``; angles already there are returned unchanged."""
    if -math.pi <= x < math.pi:
        return x
    y = (x + math.pi) % (2 * math.pi) - math.pi
    return -math.pi if y >= math.pi else y


def check_noise(r: float) -> float:
    _check_range("r", r, 0.0, 1.0)
    return float(r)


@dataclass(frozen=True)
class Ensemble:
    theta: float
    phi: float
    s_plus: float

    def __post_init__(self):
        _check_range("theta", self.theta, 0.0, math.pi)
        if not math.isfinite(self.phi):
            raise ValueError(f"phi={self.phi!r} is not finite")
        _check_range("s_plus", self.s_plus, 0.0, 1.0)

    @property
    def s_minus(self) -> float:
        return 1.0 - self.s_plus

    @property
    def psi_plus(self) -> np.ndarray:
        return ket_plane(self.theta, self.phi)

    @property
    def psi_minus(self) -> np.ndarray:
        return ket_plane(-self.theta, self.phi)

    def mixed_state(self) -> np.ndarray:
        """Density matrix of the ensemble, ``s_+ |psi_+><psi_+| + s_- |psi_-><psi_-|``."""
        return self.s_plus * outer(self.psi_plus) + self.s_minus * outer(self.psi_minus)


@dataclass(frozen=True)
class ControlParams:
    alpha: float = 0.0
    p: float = 0.5
    p1: float = 0.0
    p2: float = 0.0
    gamma_plus: float = 0.0
    gamma_minus: float = 0.0

    def validate(self, paper_range: bool = False) -> "ControlParams":
        for name in ("alpha", "gamma_plus", "gamma_minus"):
            _check_range(name, getattr(self, name), -math.pi, math.pi, closed_hi=False)
        for name in ("p", "p1", "p2"):
            _check_range(name, getattr(self, name), 0.0, 1.0)
        if paper_range:
            _check_range("p", self.p, 0.0, 0.5)
        return self

    def as_tuple(self) -> Tuple[float, ...]:
        return (self.alpha, self.p, self.p1, self.p2, self.gamma_plus, self.gamma_minus)

    @classmethod
    def wrapped(cls, alpha, p, p1, p2, gamma_plus, gamma_minus) -> "ControlParams":
        """Build with angles wrapped into ``[-pi, pi)`` and strengths clipped to ``[0, 1]``."""
        clip = lambda v: min(1.0, max(0.0, float(v)))  # noqa: E731
        return cls(
            wrap_angle(float(alpha)), clip(p), clip(p1), clip(p2),
            wrap_angle(float(gamma_plus)), wrap_angle(float(gamma_minus)),
        )


class OperatorSet(NamedTuple):
    M_plus: np.ndarray
    M_minus: np.ndarray
    U_plus: np.ndarray
    U_minus: np.ndarray
    E1: np.ndarray
    E2: np.ndarray
    N_plus: np.ndarray
    Nbar_plus: np.ndarray
    N_minus: np.ndarray
    Nbar_minus: np.ndarray
    R_plus: np.ndarray
    R_minus: np.ndarray

    def branch(self, outcome: int):
        """``(M, U, N, R)`` for preweak outcome ``+1`` or ``-1``."""
        if outcome == PLUS:
            return self.M_plus, self.U_plus, self.N_plus, self.R_plus
        return self.M_minus, self.U_minus, self.N_minus, self.R_minus

    @property
    def kraus(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.E1, self.E2


def build_basis(alpha: float, phi: float) -> Tuple[np.ndarray, np.ndarray]:
    """Measurement basis ``|V_+->`` at half-angle ``(alpha + pi/2)/2`` in the |+-> frame."""
    half = (alpha + math.pi / 2) / 2
    c, s = math.cos(half), math.sin(half)
    e = complex(math.cos(phi), math.sin(phi))
    v_plus = c * KET_PLUS + e * s * KET_MINUS
    v_minus = s * KET_PLUS - e * c * KET_MINUS
    return v_plus, v_minus


def build_preweak(p: float, v_plus: np.ndarray, v_minus: np.ndarray):
    proj_p, proj_m = outer(v_plus), outer(v_minus)
    a, b = math.sqrt(p), math.sqrt(1.0 - p)
    return a * proj_p + b * proj_m, b * proj_p + a * proj_m


def build_feedforward(v_plus: np.ndarray, v_minus: np.ndarray):
    """``U_+`` sends ``V_+ -> |0>``, ``V_- -> |1>``; ``U_-`` swaps the targets."""
    u_plus = np.outer(KET_0, v_plus.conj()) + np.outer(KET_1, v_minus.conj())
    u_minus = np.outer(KET_1, v_plus.conj()) + np.outer(KET_0, v_minus.conj())
    return u_plus, u_minus


def build_ad_kraus(r: float):
    check_noise(r)
    e1 = np.array([[1.0, 0.0], [0.0, math.sqrt(1.0 - r)]], dtype=complex)
    e2 = np.array([[0.0, math.sqrt(r)], [0.0, 0.0]], dtype=complex)
    return e1, e2


def build_postweak(p1: float, p2: float, v_plus: np.ndarray, v_minus: np.ndarray):
    """Returns ``(N_+, Nbar_+, N_-, Nbar_-)``.

    ``Nbar_-`` carries ``sqrt(p2)``; that is the only choice that makes the
    minus-side pair a complete measurement.
    """
    proj_p, proj_m = outer(v_plus), outer(v_minus)
    n_plus = math.sqrt(1.0 - p1) * proj_p + proj_m
    nbar_plus = math.sqrt(p1) * proj_p
    n_minus = proj_p + math.sqrt(1.0 - p2) * proj_m
    nbar_minus = math.sqrt(p2) * proj_m
    return n_plus, nbar_plus, n_minus, nbar_minus


def rotation_axis(phi: float) -> np.ndarray:
    """Bloch vector of ``(|+> + i e^{i phi} |->)/sqrt(2)``: the normal of the ensemble plane."""
    return np.array([-math.sin(phi), math.cos(phi), 0.0])


def build_feedback(gamma: float, phi: float) -> np.ndarray:
    """Rotation by ``gamma`` about :func:`rotation_axis` (``det R = 1``)."""
    n = rotation_axis(phi)
    generator = sum(c * s for c, s in zip(n, PM_SIGMAS))
    return math.cos(gamma / 2) * IDENTITY - 1j * math.sin(gamma / 2) * generator


def build_operators(phi: float, c: ControlParams, r: float) -> OperatorSet:
    v_plus, v_minus = build_basis(c.alpha, phi)
    m_plus, m_minus = build_preweak(c.p, v_plus, v_minus)
    u_plus, u_minus = build_feedforward(v_plus, v_minus)
    e1, e2 = build_ad_kraus(r)
    n_plus, nbar_plus, n_minus, nbar_minus = build_postweak(c.p1, c.p2, v_plus, v_minus)
    return OperatorSet(
        m_plus, m_minus, u_plus, u_minus, e1, e2,
        n_plus, nbar_plus, n_minus, nbar_minus,
        build_feedback(c.gamma_plus, phi), build_feedback(c.gamma_minus, phi),
    )


@dataclass(frozen=True)
class PathRecord:
    preweak_outcome: int
    kraus_index: int
    final_state: np.ndarray
    weight: float


@dataclass(frozen=True)
class ProtectionResult:
    f_plus: float
    f_minus: float
    g_plus: float
    g_minus: float
    F: float
    G: float
    rho_out_plus: np.ndarray = field(repr=False)
    rho_out_minus: np.ndarray = field(repr=False)
    paths_plus: Tuple[PathRecord, ...] = field(default=(), repr=False)
    paths_minus: Tuple[PathRecord, ...] = field(default=(), repr=False)

    def summary(self) -> Tuple[float, float, float, float, float, float]:
        return (self.f_plus, self.f_minus, self.g_plus, self.g_minus, self.F, self.G)


def run_paths(psi: np.ndarray, ops: OperatorSet) -> List[PathRecord]:
    """Propagate ``psi`` along the four kept paths, without renormalizing."""
    n = squared_norm(psi)
    if abs(n - 1.0) > 1e-10:
        raise ValueError(f"input state is not normalized (squared norm {n!r})")
    records = []
    for outcome in (PLUS, MINUS):
        m, u, n_op, rot = ops.branch(outcome)
        for j, e in enumerate(ops.kraus, start=1):
            k = rot @ n_op @ dagger(u) @ e @ u @ m
            out = k @ psi
            records.append(PathRecord(outcome, j, out, squared_norm(out)))
    return records


def _output(psi: np.ndarray, ops: OperatorSet, label: str):
    paths = run_paths(psi, ops)
    g = sum(rec.weight for rec in paths)
    if g < DEGENERATE_WEIGHT:
        raise DegenerateRunError(f"success probability for {label} vanishes (g={g!r})")
    rho = sum(outer(rec.final_state) for rec in paths) / g
    return fidelity_pure(psi, rho), g, rho, tuple(paths)


def protect(e: Ensemble, c: ControlParams, r: float) -> ProtectionResult:
    """Run both candidate inputs through the scheme and average over the priors."""
    ops = build_operators(e.phi, c, r)
    f_p, g_p, rho_p, paths_p = _output(e.psi_plus, ops, "psi_plus")
    f_m, g_m, rho_m, paths_m = _output(e.psi_minus, ops, "psi_minus")
    F = e.s_plus * f_p + e.s_minus * f_m
    G = e.s_plus * g_p + e.s_minus * g_m
    return ProtectionResult(f_p, f_m, g_p, g_m, F, G, rho_p, rho_m, paths_p, paths_m)


@dataclass(frozen=True)
class EvolutionTrace:
    """Unnormalized states along one preweak branch; two-element tuples are indexed by ``j``."""

    input_state: np.ndarray
    after_preweak: np.ndarray
    after_feedforward: np.ndarray
    after_noise: Tuple[np.ndarray, np.ndarray]
    after_postweak: Tuple[np.ndarray, np.ndarray]
    final: Tuple[np.ndarray, np.ndarray]

    def stages(self):
        """``(name, j, state)`` rows in pipeline order; ``j`` is 0 before the noise."""
        rows = [
            ("input", 0, self.input_state),
            ("preweak", 0, self.after_preweak),
            ("feedforward", 0, self.after_feedforward),
        ]
        for name, pair in (("noise", self.after_noise), ("postweak", self.after_postweak),
                           ("feedback", self.final)):
            rows.extend((name, j, s) for j, s in enumerate(pair, start=1))
        return rows


def trace_evolution(which: int, outcome: int, e: Ensemble, c: ControlParams, r: float) -> EvolutionTrace:
    """Apply the pipeline one operator at a time for input ``psi_which`` and preweak ``outcome``."""
    ops = build_operators(e.phi, c, r)
    psi = e.psi_plus if which == PLUS else e.psi_minus
    m, u, n_op, rot = ops.branch(outcome)
    s1 = m @ psi
    s2 = u @ s1
    s3 = tuple(k @ s2 for k in ops.kraus)
    s4 = tuple(n_op @ (dagger(u) @ s) for s in s3)
    s5 = tuple(rot @ s for s in s4)
    return EvolutionTrace(psi, s1, s2, s3, s4, s5)
