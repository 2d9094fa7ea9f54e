"""Spin-J linear algebra on the symmetric subspace of N qubits.

Basis ordering is ascending in m: index ``k`` holds the amplitude of
``|J, m = k - J>``.  All arrays handed out by this module are read-only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence, Union

import numpy as np
from scipy.spatial.transform import Rotation

NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-12
IMAG_TOL = 1e-10

MValue = Union[int, float, Fraction]


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a)
    a.setflags(write=False)
    return a


def m_index(n_qubits: int, m: MValue) -> int:
    """Array index of magnetic number ``m`` for ``n_qubits`` qubits."""
    k2 = Fraction(m) * 2 + n_qubits
    if k2.denominator != 1 or k2.numerator % 2:
        raise ValueError(f"m={m} is not a valid magnetic number for N={n_qubits}")
    k = k2.numerator // 2
    if not 0 <= k <= n_qubits:
        raise ValueError(f"m={m} outside [-{n_qubits}/2, {n_qubits}/2]")
    return k


def m_values(n_qubits: int) -> np.ndarray:
    return np.arange(n_qubits + 1) - n_qubits / 2


@dataclass(frozen=True)
class SpinState:
    """Pure state of N qubits in the symmetric subspace (spin J = N/2)."""

    n_qubits: int
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be positive")
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.shape != (self.n_qubits + 1,):
            raise ValueError(
                f"expected {self.n_qubits + 1} amplitudes, got {amps.shape[0]}"
            )
        if not np.all(np.isfinite(amps)):
            raise ValueError("amplitudes must be finite")
        norm2 = float(np.vdot(amps, amps).real)
        if abs(norm2 - 1.0) > NORM_TOL:
            raise ValueError(f"state not normalized: |psi|^2 = {norm2!r}")
        object.__setattr__(self, "amplitudes", _frozen(amps))

    @classmethod
    def normalized(cls, n_qubits: int, amplitudes: Sequence[complex]) -> "SpinState":
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        norm = np.linalg.norm(amps)
        if norm == 0 or not np.isfinite(norm):
            raise ValueError("cannot normalize a zero or non-finite vector")
        return cls(n_qubits, amps / norm)

    @classmethod
    def basis(cls, n_qubits: int, m: MValue) -> "SpinState":
        """The Dicke state ``|N/2, m>``."""
        amps = np.zeros(n_qubits + 1, dtype=complex)
        amps[m_index(n_qubits, m)] = 1.0
        return cls(n_qubits, amps)

    @classmethod
    def from_components(cls, n_qubits: int, components: dict) -> "SpinState":
        """Build and normalize a state from a ``{m: amplitude}`` mapping."""
        amps = np.zeros(n_qubits + 1, dtype=complex)
        for m, a in components.items():
            amps[m_index(n_qubits, m)] += complex(a)
        return cls.normalized(n_qubits, amps)

    @property
    def spin(self) -> float:
        return self.n_qubits / 2

    @property
    def dim(self) -> int:
        return self.n_qubits + 1

    def amplitude(self, m: MValue) -> complex:
        return complex(self.amplitudes[m_index(self.n_qubits, m)])

    def overlap(self, other: "SpinState") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def fidelity(self, other: "SpinState") -> float:
        """|<self|other>|^2, the phase-insensitive comparison used everywhere."""
        if other.n_qubits != self.n_qubits:
            raise ValueError("states live in different spaces")
        return abs(self.overlap(other)) ** 2

    def gauge_fixed(self) -> "SpinState":
        """Same ray, global phase chosen so the largest amplitude is real positive."""
        k = int(np.argmax(np.abs(self.amplitudes)))
        phase = self.amplitudes[k] / abs(self.amplitudes[k])
        return SpinState.normalized(self.n_qubits, self.amplitudes / phase)


@dataclass(frozen=True)
class AngularMomentum:
    two_j: int
    jx: np.ndarray = field(repr=False)
    jy: np.ndarray = field(repr=False)
    jz: np.ndarray = field(repr=False)

    @property
    def spin(self) -> float:
        return self.two_j / 2

    @property
    def dim(self) -> int:
        return self.two_j + 1

    @property
    def components(self) -> tuple:
        return (self.jx, self.jy, self.jz)

    def raising(self) -> np.ndarray:
        return self.jx + 1j * self.jy

    def along(self, direction: Sequence[float]) -> np.ndarray:
        """The generator ``theta . J`` for a 3-vector ``direction``."""
        t = np.asarray(direction, dtype=float)
        return t[0] * self.jx + t[1] * self.jy + t[2] * self.jz


@lru_cache(maxsize=None)
def build_angular_momentum(two_j: int) -> AngularMomentum:
    """Spin-J matrices in the ascending-m basis.

    ``J+ |m> = sqrt(J(J+1) - m(m+1)) |m+1>`` sits on the sub-diagonal because
    index ``k+1`` is the state with one more unit of m.
    """
    if two_j < 0:
        raise ValueError("two_j must be nonnegative")
    j = two_j / 2
    m = np.arange(two_j + 1) - j
    ladder = np.sqrt(j * (j + 1) - m[:-1] * (m[:-1] + 1))
    jp = np.diag(ladder, k=-1).astype(complex)
    jm = jp.conj().T
    jx = (jp + jm) / 2
    jy = (jp - jm) / 2j
    jz = np.diag(m).astype(complex)
    return AngularMomentum(two_j, _frozen(jx), _frozen(jy), _frozen(jz))


def spin_operators(n_qubits: int) -> AngularMomentum:
    return build_angular_momentum(n_qubits)


def check_hermitian(op: np.ndarray, tol: float = HERMITIAN_TOL) -> None:
    op = np.asarray(op)
    if op.ndim != 2 or op.shape[0] != op.shape[1]:
        raise ValueError(f"observable must be square, got shape {op.shape}")
    dev = np.max(np.abs(op - op.conj().T)) if op.size else 0.0
    if dev > tol:
        raise ValueError(f"observable is not Hermitian (deviation {dev:.3g})")


def expectation(state: SpinState, observable: np.ndarray) -> float:
    """<psi|O|psi> for a Hermitian O; raises if the imaginary residue is not negligible."""
    observable = np.asarray(observable)
    if observable.shape != (state.dim, state.dim):
        raise ValueError(
            f"observable shape {observable.shape} does not match dimension {state.dim}"
        )
    check_hermitian(observable)
    value = np.vdot(state.amplitudes, observable @ state.amplitudes)
    scale = max(1.0, float(np.max(np.abs(observable))))
    if abs(value.imag) > IMAG_TOL * scale:
        raise ValueError(f"expectation has imaginary part {value.imag:.3g}")
    return float(value.real)


def _rotation_eig(n_qubits: int, theta: np.ndarray):
    gen = spin_operators(n_qubits).along(theta)
    return np.linalg.eigh(gen)


def rotation_operator(n_qubits: int, theta: Sequence[float]) -> np.ndarray:
    """The unitary ``exp(i theta . J)`` on the spin-N/2 space."""
    theta = _as_rotation_vector(theta)
    evals, evecs = _rotation_eig(n_qubits, theta)
    return (evecs * np.exp(1j * evals)) @ evecs.conj().T


def rotate(state: SpinState, theta: Sequence[float]) -> SpinState:
    """Apply ``exp(i theta . J)`` to ``state``."""
    u = rotation_operator(state.n_qubits, theta)
    return SpinState.normalized(state.n_qubits, u @ state.amplitudes)


def rotation_derivatives(state: SpinState, theta: Sequence[float]) -> np.ndarray:
    """Exact partial derivatives of ``exp(i theta . J)|psi>`` w.r.t. each theta_i.

    Returns a (3, dim) array.  Uses the divided-difference form of the
    derivative of a Hermitian matrix function in the eigenbasis of theta . J.
    """
    theta = _as_rotation_vector(theta)
    ops = spin_operators(state.n_qubits)
    lam, v = _rotation_eig(state.n_qubits, theta)
    e = np.exp(1j * lam)
    diff = lam[:, None] - lam[None, :]
    close = np.abs(diff) < 1e-12
    safe = np.where(close, 1.0, diff)
    kernel = np.where(close, 1j * e[:, None], (e[:, None] - e[None, :]) / safe)
    psi_eig = v.conj().T @ state.amplitudes
    out = np.empty((3, state.dim), dtype=complex)
    for i, op in enumerate(ops.components):
        k_eig = v.conj().T @ op @ v
        out[i] = v @ ((kernel * k_eig) @ psi_eig)
    return out


def rotation_matrix(theta: Sequence[float]) -> np.ndarray:
    """SO(3) matrix by which ``exp(i theta . J)`` moves Bloch/Majorana vectors.

    ``exp(i theta . J)`` is a rotation by angle ``-|theta|`` about ``theta``.
    """
    theta = _as_rotation_vector(theta)
    return Rotation.from_rotvec(-theta).as_matrix()


def _as_rotation_vector(theta) -> np.ndarray:
    t = np.asarray(theta, dtype=float).reshape(-1)
    if t.shape != (3,) or not np.all(np.isfinite(t)):
        raise ValueError("rotation vector must be 3 finite reals")
    return t


def random_state(n_qubits: int, rng: np.random.Generator) -> SpinState:
    """Haar-random pure state on the symmetric subspace."""
    z = rng.normal(size=n_qubits + 1) + 1j * rng.normal(size=n_qubits + 1)
    return SpinState.normalized(n_qubits, z)


def random_rotation_vector(rng: np.random.Generator, max_angle: float = math.pi) -> np.ndarray:
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    return axis * rng.uniform(0.0, max_angle)


def sqrt_binomials(n: int) -> np.ndarray:
    """sqrt(C(n, k)) for k = 0..n; exact integers up to n = 100, log-gamma beyond."""
    if n <= 100:
        return np.array([math.sqrt(math.comb(n, k)) for k in range(n + 1)])
    k = np.arange(n + 1)
    from scipy.special import gammaln

    return np.exp(0.5 * (gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)))
