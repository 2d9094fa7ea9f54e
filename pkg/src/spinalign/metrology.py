"""Fisher information, alignment cost and the bounds it is measured against."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spin import SpinState, rotate, spin_operators

SINGULAR_THRESHOLD = 1e-9
DEFAULT_TOL = 1e-9


def target_variance(n_qubits: int) -> float:
    """Per-axis variance J(J+1)/3 = N(N+2)/12 of an anti-coherent state."""
    return n_qubits * (n_qubits + 2) / 12


def mean_spin(state: SpinState) -> np.ndarray:
    ops = spin_operators(state.n_qubits)
    psi = state.amplitudes
    return np.array([np.vdot(psi, op @ psi).real for op in ops.components])


def covariance_matrix(state: SpinState) -> np.ndarray:
    """Symmetrized spin covariance C_ik = <{J_i, J_k}>/2 - <J_i><J_k>."""
    ops = spin_operators(state.n_qubits).components
    psi = state.amplitudes
    vecs = [op @ psi for op in ops]
    # <J_i J_k> = <J_i psi | J_k psi> since J_i is Hermitian
    second = np.array([[np.vdot(a, b) for b in vecs] for a in vecs])
    mean = np.array([np.vdot(psi, v).real for v in vecs])
    cov = second.real - np.outer(mean, mean)
    return (cov + cov.T) / 2


def fisher_matrix(state: SpinState) -> np.ndarray:
    """Quantum Fisher matrix of exp(i theta.J)|psi> at theta = 0, i.e. 4 * covariance."""
    return 4 * covariance_matrix(state)


def fisher_from_derivatives(psi: np.ndarray, dpsi: np.ndarray) -> np.ndarray:
    """Pure-state Fisher matrix 4 Re(<d_i psi|d_j psi> - <d_i psi|psi><psi|d_j psi>)."""
    overlaps = dpsi.conj() @ dpsi.T
    proj = dpsi.conj() @ psi
    f = 4 * (overlaps - np.outer(proj, proj.conj())).real
    return (f + f.T) / 2


def fisher_matrix_fd(state: SpinState, step: float = 1e-3) -> np.ndarray:
    """Fisher matrix from finite-difference derivatives of ``rotate``.

    Five-point central stencil; an independent route to :func:`fisher_matrix`.
    """
    dpsi = np.empty((3, state.dim), dtype=complex)
    for i in range(3):
        e = np.zeros(3)
        e[i] = step
        # rotate() renormalizes; phases are untouched so derivatives stay consistent
        f = {s: rotate(state, s * e).amplitudes for s in (-2, -1, 1, 2)}
        dpsi[i] = (f[-2] - 8 * f[-1] + 8 * f[1] - f[2]) / (12 * step)
    return fisher_from_derivatives(state.amplitudes, dpsi)


def alignment_cost(state: SpinState, singular_threshold: float = SINGULAR_THRESHOLD) -> float:
    """Tr F^-1, or ``inf`` when some rotation axis is (numerically) undetectable."""
    return cost_from_fisher(fisher_matrix(state), singular_threshold)


def cost_from_fisher(f: np.ndarray, singular_threshold: float = SINGULAR_THRESHOLD) -> float:
    lam = np.linalg.eigvalsh(f)
    if lam[0] < singular_threshold:
        return math.inf
    return float(np.sum(1.0 / lam))


def lower_bound(n_qubits: int) -> float:
    """Smallest possible Tr F^-1 for N qubits: 9 / Tr F_max = 9 / (N(N+2)).

    Tr F = 4 * sum of variances <= 4 J(J+1) = N(N+2); the harmonic/arithmetic
    mean inequality then gives Tr F^-1 >= 9 / Tr F.
    """
    if n_qubits < 1:
        raise ValueError("n_qubits must be positive")
    return 9 / (n_qubits * (n_qubits + 2))


def imaginary_derivative_overlaps(state: SpinState) -> np.ndarray:
    """Im <d_i psi|d_j psi> at theta = 0, computed from the derivatives themselves."""
    ops = spin_operators(state.n_qubits).components
    dpsi = np.array([1j * (op @ state.amplitudes) for op in ops])
    return (dpsi.conj() @ dpsi.T).imag


def attainability_check(state: SpinState, tol: float = DEFAULT_TOL) -> tuple[bool, np.ndarray]:
    """Whether the multiparameter bound is attainable at theta = 0.

    Im<d_i psi|d_j psi> = eps_ijk <J_k> / 2, so the condition is a vanishing
    mean spin vector; returns the pass flag and that vector.
    """
    mean = mean_spin(state)
    return bool(np.all(np.abs(mean) < tol)), mean


@dataclass(frozen=True)
class AnticoherenceReport:
    n_qubits: int
    mean_vector: np.ndarray
    covariance: np.ndarray
    target_variance: float
    max_mean_deviation: float
    max_covariance_deviation: float
    tol: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "format": 1,
            "n": self.n_qubits,
            "mean_vector": [float(x) for x in self.mean_vector],
            "covariance": [float(x) for x in np.ravel(self.covariance)],
            "target_variance": self.target_variance,
            "max_mean_deviation": self.max_mean_deviation,
            "max_covariance_deviation": self.max_covariance_deviation,
            "tol": self.tol,
            "passed": self.passed,
        }


def anticoherence_check(state: SpinState, tol: float = DEFAULT_TOL) -> AnticoherenceReport:
    mean = mean_spin(state)
    cov = covariance_matrix(state)
    target = target_variance(state.n_qubits)
    mean_dev = float(np.max(np.abs(mean)))
    cov_dev = float(np.max(np.abs(cov - target * np.eye(3))))
    return AnticoherenceReport(
        n_qubits=state.n_qubits,
        mean_vector=mean,
        covariance=cov,
        target_variance=target,
        max_mean_deviation=mean_dev,
        max_covariance_deviation=cov_dev,
        tol=tol,
        passed=mean_dev < tol and cov_dev < tol,
    )
