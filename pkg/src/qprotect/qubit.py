"""Single-qubit linear algebra: states, operators, density matrices, Bloch vectors.

States are complex vectors of shape ``(2,)`` and operators complex arrays of
shape ``(2, 2)``, always expressed in the logical basis ``{|0>, |1>}``.  The
ensemble basis is fixed as ``|+-> = (|0> +- |1>)/sqrt(2)``.

Bloch coordinates use the representation whose poles are ``|+>`` (z = +1) and
``|->`` (z = -1); in that frame the protected states lie in a plane through
the z axis.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

SQRT_HALF = math.sqrt(0.5)

KET_0 = np.array([1.0, 0.0], dtype=complex)
KET_1 = np.array([0.0, 1.0], dtype=complex)
KET_PLUS = np.array([SQRT_HALF, SQRT_HALF], dtype=complex)
KET_MINUS = np.array([SQRT_HALF, -SQRT_HALF], dtype=complex)

IDENTITY = np.eye(2, dtype=complex)

# Logical-basis Pauli matrices.
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)

# Pauli matrices in the representation whose poles are |+> and |->.  They are
# the images of X, Y, Z under the Hadamard change of basis.
PM_SIGMA_1 = PAULI_Z.copy()
PM_SIGMA_2 = -PAULI_Y
PM_SIGMA_3 = PAULI_X.copy()
PM_SIGMAS = (PM_SIGMA_1, PM_SIGMA_2, PM_SIGMA_3)

STRUCTURAL_TOL = 1e-12


class BlochVector(NamedTuple):
    x: float
    y: float
    z: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


def ket(a0: complex, a1: complex) -> np.ndarray:
    """Build a (possibly unnormalized) state from its logical amplitudes."""
    return np.array([a0, a1], dtype=complex)


def ket_plane(theta: float, phi: float) -> np.ndarray:
    """Return ``cos(theta/2)|+> + exp(i phi) sin(theta/2)|->``."""
    theta = math.remainder(theta, 4 * math.pi)
    phi = math.remainder(phi, 2 * math.pi)
    c = math.cos(theta / 2)
    s = math.sin(theta / 2) * complex(math.cos(phi), math.sin(phi))
    return c * KET_PLUS + s * KET_MINUS


def apply(op: np.ndarray, state: np.ndarray) -> np.ndarray:
    return op @ state


def dagger(op: np.ndarray) -> np.ndarray:
    return op.conj().T


def compose(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product ``a @ b`` (``b`` acts first)."""
    return a @ b


def outer(state: np.ndarray) -> np.ndarray:
    return np.outer(state, state.conj())


def trace(rho: np.ndarray) -> complex:
    return complex(rho[0, 0] + rho[1, 1])


def squared_norm(state: np.ndarray) -> float:
    return float(np.vdot(state, state).real)


def inner(bra: np.ndarray, k: np.ndarray) -> complex:
    """``<bra|k>``, conjugating the first argument."""
    return complex(np.vdot(bra, k))


def fidelity_pure(psi: np.ndarray, rho: np.ndarray, atol: float = 1e-10) -> float:
    """Overlap ``<psi|rho|psi>`` of a unit ket with a unit-trace density matrix.

    Raises:
        ValueError: if ``psi`` is not normalized or ``rho`` does not have unit
            trace within ``atol``. Either points at a normalization bug upstream.
    """
    n = squared_norm(psi)
    if abs(n - 1.0) > atol:
        raise ValueError(f"state is not normalized (squared norm {n!r})")
    tr = trace(rho)
    if abs(tr - 1.0) > atol:
        raise ValueError(f"density matrix does not have unit trace (trace {tr!r})")
    value = float(np.vdot(psi, rho @ psi).real)
    return min(1.0, max(0.0, value))


def bloch(rho: np.ndarray) -> BlochVector:
    """Bloch vector ``(Tr rho s1, Tr rho s2, Tr rho s3)`` in the |+->-pole frame."""
    return BlochVector(*(float(np.trace(rho @ s).real) for s in PM_SIGMAS))


def from_bloch(vec, trace_value: float = 1.0) -> np.ndarray:
    """Inverse of :func:`bloch`: ``(t I + x s1 + y s2 + z s3) / 2``."""
    x, y, z = vec
    return 0.5 * (trace_value * IDENTITY + x * PM_SIGMA_1 + y * PM_SIGMA_2 + z * PM_SIGMA_3)


def is_unitary(op: np.ndarray, atol: float = STRUCTURAL_TOL) -> bool:
    return bool(np.allclose(op @ dagger(op), IDENTITY, rtol=0, atol=atol))


def is_hermitian(m: np.ndarray, atol: float = STRUCTURAL_TOL) -> bool:
    return bool(np.allclose(m, dagger(m), rtol=0, atol=atol))


def is_density_matrix(rho: np.ndarray, atol: float = STRUCTURAL_TOL) -> bool:
    """Hermitian, positive semidefinite and trace in ``[0, 1]`` within ``atol``."""
    if not is_hermitian(rho, atol):
        return False
    eigs = np.linalg.eigvalsh(0.5 * (rho + dagger(rho)))
    tr = trace(rho).real
    return bool(eigs.min() >= -atol and -atol <= tr <= 1 + atol)
