"""Complex 2x2 / 4x4 operator algebra and Bloch-vector conversions.

Operators are plain numpy complex arrays (dense, row-major); a qubit state
is either a density matrix rho or its real Bloch 3-vector n with
rho = (I + n.sigma)/2.  Dimensions never exceed 4, so everything is done
with closed forms where available and numpy.linalg otherwise.

Validation (hermiticity, trace, positivity) is explicit and runs at
checkpoints only; the arithmetic helpers themselves do not re-check their
inputs on every call.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidOperatorError, InvalidStateError

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
PAULI = (SIGMA_X, SIGMA_Y, SIGMA_Z)
I2 = np.eye(2, dtype=complex)
I4 = np.eye(4, dtype=complex)

# Tolerances used by the explicit validators.
HERM_TOL = 1e-12
TRACE_TOL = 1e-10
BLOCH_NORM_TOL = 1e-9
EIG_FLOOR = -1e-10


def is_hermitian(a: np.ndarray, tol: float = HERM_TOL) -> bool:
    return bool(np.max(np.abs(a - a.conj().T)) <= tol)


def require_finite(a: np.ndarray, what: str = "operator") -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if not np.all(np.isfinite(a)):
        raise InvalidOperatorError(f"{what} has non-finite entries")
    return a


def require_density(rho: np.ndarray, tol: float = TRACE_TOL) -> np.ndarray:
    """Check rho is Hermitian with unit trace (within tol); returns rho."""
    rho = require_finite(rho, "density matrix")
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise InvalidOperatorError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > tol or abs(np.trace(rho).imag) > tol:
        raise InvalidOperatorError("density matrix trace differs from 1")
    return rho


def bloch_to_density(n) -> np.ndarray:
    """rho = (I + n.sigma)/2 for a Bloch vector with |n| <= 1.

    Eigenvalues of the result are (1 +- |n|)/2, so the norm bound is
    exactly the positivity condition.
    """
    n = np.asarray(n, dtype=float)
    if n.shape != (3,) or not np.all(np.isfinite(n)):
        raise InvalidStateError("Bloch vector must be a finite real 3-vector")
    if np.linalg.norm(n) > 1.0 + BLOCH_NORM_TOL:
        raise InvalidStateError(
            f"Bloch vector norm {np.linalg.norm(n):.12g} exceeds 1"
        )
    return 0.5 * (I2 + n[0] * SIGMA_X + n[1] * SIGMA_Y + n[2] * SIGMA_Z)


def density_to_bloch(rho: np.ndarray) -> np.ndarray:
    """n_i = Tr(rho sigma_i); inverse of bloch_to_density."""
    rho = require_density(rho)
    return np.array(
        [np.trace(rho @ s).real for s in PAULI], dtype=float
    )


def tensor(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product (a tensor b)[2i+k, 2j+l] = a[i,j] b[k,l]."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def partial_trace(rho4: np.ndarray, keep: str) -> np.ndarray:
    """Trace out one qubit of a two-qubit density matrix.

    keep="A" returns Tr_B(rho), keep="B" returns Tr_A(rho).
    """
    if keep not in ("A", "B"):
        raise ValueError(f"keep must be 'A' or 'B', got {keep!r}")
    rho4 = require_density(np.asarray(rho4, dtype=complex))
    r = rho4.reshape(2, 2, 2, 2)  # [i, k, j, l] with A=(i,j), B=(k,l)
    if keep == "A":
        return np.einsum("ikjk->ij", r)
    return np.einsum("ikil->kl", r)


@dataclass(frozen=True)
class TwoQubitState:
    """Two-qubit state given by local Bloch vectors and correlation tensor.

    rho = (I(x)I + nA.sigma(x)I + I(x)nB.sigma + T_ij sigma_i(x)sigma_j)/4.
    Positivity of the reconstructed operator is checked at construction.
    """

    nA: np.ndarray
    nB: np.ndarray
    T: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "nA", np.asarray(self.nA, dtype=float))
        object.__setattr__(self, "nB", np.asarray(self.nB, dtype=float))
        object.__setattr__(self, "T", np.asarray(self.T, dtype=float))
        if self.nA.shape != (3,) or self.nB.shape != (3,) or self.T.shape != (3, 3):
            raise InvalidStateError("need nA, nB 3-vectors and a 3x3 tensor T")
        rho = _assemble_raw(self.nA, self.nB, self.T)
        w = np.linalg.eigvalsh(rho)
        if w[0] < EIG_FLOOR:
            raise InvalidStateError(
                f"two-qubit operator has eigenvalue {w[0]:.3e} < 0"
            )


def _assemble_raw(nA, nB, T) -> np.ndarray:
    rho = np.array(I4)
    for i in range(3):
        rho += nA[i] * tensor(PAULI[i], I2)
        rho += nB[i] * tensor(I2, PAULI[i])
        for j in range(3):
            rho += T[i, j] * tensor(PAULI[i], PAULI[j])
    return rho / 4.0


def two_qubit_assemble(state: TwoQubitState) -> np.ndarray:
    """Reconstruct the 4x4 density matrix of a TwoQubitState."""
    rho = _assemble_raw(state.nA, state.nB, state.T)
    w = np.linalg.eigvalsh(rho)
    if w[0] < EIG_FLOOR:
        raise InvalidStateError(
            f"assembled operator has eigenvalue {w[0]:.3e} < 0"
        )
    return rho


def correlation_tensor(rho4: np.ndarray) -> np.ndarray:
    """T_ij = Tr(rho sigma_i (x) sigma_j) of a two-qubit density matrix."""
    T = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            T[i, j] = np.trace(rho4 @ tensor(PAULI[i], PAULI[j])).real
    return T


def frobenius(a: np.ndarray) -> float:
    """Frobenius norm; the one residual norm used throughout."""
    return float(np.linalg.norm(np.asarray(a).ravel()))
