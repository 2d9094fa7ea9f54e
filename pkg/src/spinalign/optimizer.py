"""Direct minimization of Tr F^-1 over pure symmetric states.

Needed for N where no anti-coherent state exists (N = 1, 2, 3, 5), and a
useful cross-check everywhere else.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize

from . import metrology
from .spin import SpinState, random_state, spin_operators

BARRIER_EPS = 1e-12


@dataclass(frozen=True)
class OptimizerConfig:
    restarts: int = 20
    max_iters: int = 2000
    tol: float = 1e-12
    seed: int = 0
    window: int = 20
    workers: int = 1


@dataclass(frozen=True)
class OptimizationResult:
    n_qubits: int
    best_state: SpinState
    best_cost: float
    bound: float
    gap: float
    restarts_used: int
    converged: bool
    infeasible: bool
    seed: int
    restart_costs: tuple = field(default=(), repr=False)

    def to_dict(self) -> dict:
        return {
            "format": 1,
            "n": self.n_qubits,
            "best_cost": _json_float(self.best_cost),
            "bound": self.bound,
            "gap": _json_float(self.gap),
            "restarts_used": self.restarts_used,
            "converged": self.converged,
            "infeasible": self.infeasible,
            "seed": self.seed,
            "restart_costs": [_json_float(c) for c in self.restart_costs],
        }


def _json_float(x: float):
    return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")


class _Objective:
    """Barrier-smoothed sum_i 1/(lambda_i(F) + eps) as a function of a real vector.

    The vector packs Re and Im of an unnormalized state; the value is
    invariant under rescaling, so the gradient is tangent to the sphere.
    """

    def __init__(self, n_qubits: int, eps: float = BARRIER_EPS):
        ops = spin_operators(n_qubits).components
        self.n = n_qubits
        self.dim = n_qubits + 1
        self.eps = eps
        self.ops = ops
        self.sym = [[(a @ b + b @ a) / 2 for b in ops] for a in ops]

    def unpack(self, x: np.ndarray) -> tuple[np.ndarray, float]:
        z = x[: self.dim] + 1j * x[self.dim :]
        r = np.linalg.norm(z)
        return z / r, r

    def __call__(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        psi, r = self.unpack(x)
        vecs = [op @ psi for op in self.ops]
        mean = np.array([np.vdot(psi, v).real for v in vecs])
        second = np.array([[np.vdot(a, b) for b in vecs] for a in vecs]).real
        cov = second - np.outer(mean, mean)
        fisher = 2 * (cov + cov.T)
        lam, vec = np.linalg.eigh(fisher)
        shifted = lam + self.eps
        if np.any(shifted <= 0):
            shifted = np.maximum(shifted, self.eps)
        value = float(np.sum(1 / shifted))
        # d value = -sum_ik W_ik dF_ik, W = V diag(1/shifted^2) V^T, F = 4 cov
        w = (vec / shifted**2) @ vec.T
        wm = w @ mean
        b = sum(w[i, k] * self.sym[i][k] for i in range(3) for k in range(3))
        b = b - 2 * sum(wm[i] * self.ops[i] for i in range(3))
        bpsi = b @ psi
        grad_c = -8 * (bpsi - np.vdot(psi, bpsi).real * psi)
        grad = np.concatenate([grad_c.real, grad_c.imag]) / r
        return value, grad


def _restart_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, index]))


def _descend(objective: _Objective, x0: np.ndarray, config: OptimizerConfig):
    history: list = []

    def track(xk):
        history.append(objective(xk)[0])

    res = minimize(
        objective,
        x0,
        jac=True,
        method="L-BFGS-B",
        callback=track,
        options={"maxiter": config.max_iters, "ftol": 1e-16, "gtol": 1e-13, "maxcor": 30},
    )
    psi, _ = objective.unpack(res.x)
    state = SpinState.normalized(objective.n, psi).gauge_fixed()
    cost = metrology.alignment_cost(state)
    converged = bool(res.success)
    if len(history) > config.window:
        old, new = history[-config.window - 1], history[-1]
        converged = converged or abs(old - new) <= config.tol * abs(new)
    return state, cost, converged


def minimize_cost(n_qubits: int, config: Optional[OptimizerConfig] = None, **overrides) -> OptimizationResult:
    """Multi-start minimization of the alignment cost for N qubits.

    Each restart starts from a Haar-random state drawn from
    ``SeedSequence([seed, restart])``, so the result depends only on the
    configuration, not on how restarts are scheduled.
    """
    if n_qubits < 1:
        raise ValueError("n_qubits must be positive")
    config = config or OptimizerConfig()
    if overrides:
        config = OptimizerConfig(**{**config.__dict__, **overrides})
    objective = _Objective(n_qubits)

    def run(index: int):
        start = random_state(n_qubits, _restart_rng(config.seed, index)).amplitudes
        return _descend(objective, np.concatenate([start.real, start.imag]), config)

    if config.workers > 1:
        with ThreadPoolExecutor(config.workers) as pool:
            outcomes = list(pool.map(run, range(config.restarts)))
    else:
        outcomes = [run(i) for i in range(config.restarts)]

    costs = tuple(c for _, c, _ in outcomes)
    best = min(range(len(outcomes)), key=lambda i: (costs[i], i))
    state, cost, converged = outcomes[best]
    bound = metrology.lower_bound(n_qubits)
    return OptimizationResult(
        n_qubits=n_qubits,
        best_state=state,
        best_cost=cost,
        bound=bound,
        gap=cost - bound,
        restarts_used=config.restarts,
        converged=converged,
        infeasible=all(math.isinf(c) for c in costs),
        seed=config.seed,
        restart_costs=costs,
    )


# ------------------------------------------------------------- brute force


def _batched_cost(amps: np.ndarray, n_qubits: int) -> np.ndarray:
    """Tr F^-1 for a batch of states (rows), via adjugate/determinant.

    Deliberately shares nothing with the metrology path: moments come from
    ladder-operator sums and the inverse trace from 3x3 minors.
    """
    j = n_qubits / 2
    m = np.arange(n_qubits + 1) - j
    p = np.abs(amps) ** 2
    mz = p @ m
    mz2 = p @ m**2
    # <J+> = sum_m conj(a_{m+1}) a_m c1(m),  <J+^2> = sum conj(a_{m+2}) a_m c1(m) c1(m+1)
    c1 = np.sqrt(j * (j + 1) - m[:-1] * (m[:-1] + 1))
    jp = np.sum(amps[:, 1:].conj() * amps[:, :-1] * c1, axis=1)
    c2 = c1[:-1] * c1[1:]
    jp2 = np.sum(amps[:, 2:].conj() * amps[:, :-2] * c2, axis=1) if n_qubits >= 2 else 0 * jp
    # <J+ Jz + Jz J+> = sum conj(a_{m+1}) a_m c1(m) (2m + 1)
    jpz = np.sum(amps[:, 1:].conj() * amps[:, :-1] * c1 * (2 * m[:-1] + 1), axis=1)
    casimir = j * (j + 1)
    mx, my = jp.real, jp.imag
    xx = (casimir - mz2 + jp2.real) / 2
    yy = (casimir - mz2 - jp2.real) / 2
    xy = jp2.imag / 2
    xz = jpz.real / 2
    yz = jpz.imag / 2
    c = np.empty((len(amps), 3, 3))
    c[:, 0, 0] = xx - mx**2
    c[:, 1, 1] = yy - my**2
    c[:, 2, 2] = mz2 - mz**2
    c[:, 0, 1] = c[:, 1, 0] = xy - mx * my
    c[:, 0, 2] = c[:, 2, 0] = xz - mx * mz
    c[:, 1, 2] = c[:, 2, 1] = yz - my * mz
    f = 4 * c
    det = np.linalg.det(f)
    minors = (
        f[:, 0, 0] * f[:, 1, 1] - f[:, 0, 1] ** 2
        + f[:, 0, 0] * f[:, 2, 2] - f[:, 0, 2] ** 2
        + f[:, 1, 1] * f[:, 2, 2] - f[:, 1, 2] ** 2
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        cost = minors / det
    bad = (det <= 0) | ~np.isfinite(cost) | (cost > 1 / metrology.SINGULAR_THRESHOLD)
    return np.where(bad, np.inf, cost)


def canonical_grid(n_qubits: int, resolution: float):
    """Yield batches of rotation-reduced canonical states on a regular angle grid.

    N=1: every state is a rotated |1/2, 1/2>, a single point.
    N=2: a|1> + b|-1>, a = cos t, b = sin t, t in [0, pi/2].
    N=3: a_{3/2} = 0 (one Majorana point at the south pole); a_{1/2}, a_{-1/2}
    real nonnegative (global phase and z-rotation); the phase chi of a_{-3/2}
    in [0, pi] (complex conjugation maps chi to -chi with the same cost).
    """
    if n_qubits == 1:
        yield np.array([[0.0, 1.0]], dtype=complex)
        return
    if n_qubits == 2:
        t = np.arange(0.0, np.pi / 2 + resolution / 2, resolution)
        amps = np.zeros((len(t), 3), dtype=complex)
        amps[:, 2] = np.cos(t)
        amps[:, 0] = np.sin(t)
        yield amps
        return
    if n_qubits != 3:
        raise ValueError("brute-force oracle supports N <= 3 only")
    u = np.arange(0.0, np.pi / 2 + resolution / 2, resolution)
    v = np.arange(0.0, np.pi / 2 + resolution / 2, resolution)
    chi = np.arange(0.0, np.pi + resolution / 2, resolution)
    vv, cc = np.meshgrid(v, chi, indexing="ij")
    vv, cc = vv.ravel(), cc.ravel()
    for uu in u:
        amps = np.zeros((len(vv), 4), dtype=complex)
        amps[:, 2] = np.cos(uu)
        amps[:, 1] = np.sin(uu) * np.cos(vv)
        amps[:, 0] = np.sin(uu) * np.sin(vv) * np.exp(1j * cc)
        yield amps


def brute_force_oracle(n_qubits: int, grid_resolution: float = 1e-2) -> float:
    """Smallest Tr F^-1 over a grid of canonical states; independent of :func:`minimize_cost`."""
    if not 1 <= n_qubits <= 3:
        raise ValueError("brute-force oracle supports 1 <= N <= 3")
    best = math.inf
    for batch in canonical_grid(n_qubits, grid_resolution):
        best = min(best, float(np.min(_batched_cost(batch, n_qubits))))
    return best


# ------------------------------------------------------------- certificate


class CertificationError(RuntimeError):
    pass


@dataclass(frozen=True)
class Certificate:
    n_qubits: int
    cost: float
    recomputed_cost: float
    bound: float
    gap: float
    bound_satisfied: bool
    anticoherent: bool
    attainable: bool
    optimal: bool
    fisher_disagreement: float

    def to_dict(self) -> dict:
        return {k: _json_float(v) if isinstance(v, float) else v for k, v in self.__dict__.items()}


def certify(result: OptimizationResult, tol: float = 1e-6, check_tol: float = 1e-6) -> Certificate:
    """Re-derive the Fisher matrix of the best state by finite differences and audit the result."""
    if not math.isfinite(result.best_cost):
        raise ValueError("cannot certify an infinite-cost result")
    state = result.best_state
    f_indep = metrology.fisher_matrix_fd(state)
    f_main = metrology.fisher_matrix(state)
    disagreement = float(np.max(np.abs(f_indep - f_main)))
    if disagreement > 1e-8 * max(1.0, float(np.max(np.abs(f_main)))):
        raise CertificationError(f"Fisher matrices disagree by {disagreement:.3g}")
    recomputed = metrology.cost_from_fisher(f_indep)
    bound = metrology.lower_bound(state.n_qubits)
    gap = recomputed - bound
    anticoherent = metrology.anticoherence_check(state, check_tol).passed
    attainable, _ = metrology.attainability_check(state, check_tol)
    return Certificate(
        n_qubits=state.n_qubits,
        cost=result.best_cost,
        recomputed_cost=recomputed,
        bound=bound,
        gap=gap,
        bound_satisfied=recomputed >= bound - 1e-9,
        anticoherent=anticoherent,
        attainable=attainable,
        optimal=gap < tol,
        fisher_disagreement=disagreement,
    )
