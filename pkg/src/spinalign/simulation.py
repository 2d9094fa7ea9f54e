"""Monte Carlo simulation of the alignment protocol.

A probe state is rotated by a small unknown ``theta``, measured shot by shot,
and ``theta`` is recovered by maximum likelihood.  Repeating this over many
independent trials gives an empirical mean squared error to set against the
classical and quantum Cramer-Rao predictions.

Randomness: trial ``t`` draws its shots from a Philox counter-based stream
keyed by ``SeedSequence([seed, t])``, shot ``s`` consuming the ``s``-th
uniform of that stream.  Results therefore do not depend on the order in
which trials are run.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from . import metrology
from .formats import jsonable
from .spin import SpinState, rotation_derivatives, rotation_operator, spin_operators

PROB_FLOOR = 1e-14
SCHEME_TOL = 1e-10
AXES = {"x": 0, "y": 1, "z": 2}


@dataclass(frozen=True)
class MeasurementScheme:
    """A POVM on the spin-N/2 space: one positive element per outcome label."""

    name: str
    n_qubits: int
    elements: np.ndarray = field(repr=False)
    labels: tuple = field(repr=False)
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        e = np.asarray(self.elements, dtype=complex)
        d = self.n_qubits + 1
        if e.ndim != 3 or e.shape[1:] != (d, d):
            raise ValueError(f"elements must have shape (k, {d}, {d})")
        if len(self.labels) != e.shape[0]:
            raise ValueError("one label per element required")
        if np.max(np.abs(e - e.conj().transpose(0, 2, 1))) > SCHEME_TOL:
            raise ValueError("measurement elements must be Hermitian")
        if np.min(np.linalg.eigvalsh(e)) < -SCHEME_TOL:
            raise ValueError("measurement elements must be positive")
        if np.max(np.abs(e.sum(axis=0) - np.eye(d))) > SCHEME_TOL:
            raise ValueError("measurement elements do not sum to the identity")
        e.setflags(write=False)
        object.__setattr__(self, "elements", e)

    @property
    def n_outcomes(self) -> int:
        return self.elements.shape[0]

    def probabilities(self, psi: np.ndarray) -> np.ndarray:
        p = np.einsum("i,kij,j->k", psi.conj(), self.elements, psi).real
        return np.clip(p, 0.0, None)

    def describe(self) -> dict:
        return {"name": self.name, **self.params}


def basis_z(n_qubits: int) -> MeasurementScheme:
    """Projective measurement of J_z."""
    d = n_qubits + 1
    elements = np.zeros((d, d, d), dtype=complex)
    elements[np.arange(d), np.arange(d), np.arange(d)] = 1.0
    labels = tuple(f"m={k - n_qubits / 2:g}" for k in range(d))
    return MeasurementScheme("basis_z", n_qubits, elements, labels)


def superposition_pair(n_qubits: int, m: float, phase: float = math.pi / 2) -> MeasurementScheme:
    """Projectors onto (|m> +- e^{i phase}|-m>)/sqrt(2) plus the complement.

    The default quarter-turn phase puts a real-amplitude pair such as
    (|m> + |-m>)/sqrt(2) at the steepest point of its fringe, where the
    outcome probabilities are 1/2 each.
    """
    from .spin import m_index

    if m == 0:
        raise ValueError("m must be nonzero")
    d = n_qubits + 1
    i, j = m_index(n_qubits, m), m_index(n_qubits, -m)
    elements = []
    for sign in (1, -1):
        v = np.zeros(d, dtype=complex)
        v[i] = 1 / math.sqrt(2)
        v[j] = sign * np.exp(1j * phase) / math.sqrt(2)
        elements.append(np.outer(v, v.conj()))
    rest = np.eye(d, dtype=complex)
    rest[i, i] = rest[j, j] = 0.0
    elements.append(rest)
    return MeasurementScheme(
        "superposition_pair",
        n_qubits,
        np.array(elements),
        ("+", "-", "other"),
        {"m": float(m), "phase": float(phase)},
    )


def axis_dispatch(n_qubits: int) -> MeasurementScheme:
    """Each shot measures J_x, J_y or J_z, chosen uniformly at random."""
    ops = spin_operators(n_qubits)
    elements, labels = [], []
    for name, op in zip("xyz", ops.components):
        vals, vecs = np.linalg.eigh(op)
        for val, vec in zip(vals, vecs.T):
            elements.append(np.outer(vec, vec.conj()) / 3)
            labels.append(f"{name}:{val:+.1f}")
    return MeasurementScheme("axis_dispatch", n_qubits, np.array(elements), tuple(labels))


def make_scheme(name: str, n_qubits: int, **params) -> MeasurementScheme:
    if name == "basis_z":
        return basis_z(n_qubits)
    if name == "superposition_pair":
        return superposition_pair(n_qubits, **params)
    if name == "axis_dispatch":
        return axis_dispatch(n_qubits)
    raise ValueError(f"unknown scheme {name!r}")


# ------------------------------------------------------------- Fisher information


def _axis_index(axis) -> int:
    if isinstance(axis, str):
        return AXES[axis.lower()]
    if axis in (0, 1, 2):
        return int(axis)
    raise ValueError(f"axis must be x, y, z or 0..2, got {axis!r}")


def probability_derivatives(
    state: SpinState, scheme: MeasurementScheme, theta: Sequence[float] = (0.0, 0.0, 0.0)
) -> tuple[np.ndarray, np.ndarray]:
    """Outcome probabilities at ``theta`` and their gradient (outcomes x 3)."""
    psi = rotation_operator(state.n_qubits, theta) @ state.amplitudes
    dpsi = rotation_derivatives(state, theta)
    p = scheme.probabilities(psi)
    # dp/dtheta_i = 2 Re <psi|E|d_i psi>
    dp = 2 * np.einsum("a,kab,ib->ki", psi.conj(), scheme.elements, dpsi).real
    return p, dp


def classical_fisher(
    state: SpinState,
    scheme: MeasurementScheme,
    axis=None,
    theta: Sequence[float] = (0.0, 0.0, 0.0),
) -> Union[float, np.ndarray]:
    """Fisher information of the outcome distribution of ``scheme``.

    Outcomes with probability below 1e-14 contribute zero: at such points the
    ratio dp^2/p is a removable singularity whose limit depends on the
    direction of approach.
    """
    if scheme.n_qubits != state.n_qubits:
        raise ValueError("scheme and state dimensions differ")
    p, dp = probability_derivatives(state, scheme, theta)
    keep = p > PROB_FLOOR
    f = (dp[keep].T / p[keep]) @ dp[keep]
    f = (f + f.T) / 2
    if axis is None:
        return f
    a = _axis_index(axis)
    return float(f[a, a])


# ------------------------------------------------------------- sampling


def _trial_generator(seed: int, trial: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, trial])))


def sample_counts(p: np.ndarray, n_shots: int, seed: int, trial: int) -> np.ndarray:
    """Outcome counts of ``n_shots`` shots by inverse-CDF sampling, one uniform per shot."""
    cdf = np.cumsum(p / p.sum())
    u = _trial_generator(seed, trial).random(n_shots)
    outcomes = np.minimum(np.searchsorted(cdf, u, side="right"), len(p) - 1)
    return np.bincount(outcomes, minlength=len(p))


def _neg_log_likelihood(counts: np.ndarray, p: np.ndarray) -> float:
    seen = counts > 0
    return float(-np.dot(counts[seen], np.log(np.maximum(p[seen], 1e-300))))


# ------------------------------------------------------------- reports


@dataclass
class SimulationReport:
    mode: str
    scheme: dict
    n_qubits: int
    n_shots: int
    n_trials: int
    theta_true: list
    seed: int
    estimate_mean: list
    estimate_cov: list
    empirical_cost: float
    empirical_cost_se: float
    crb_quantum: float
    crb_classical: float
    quantum_fisher: Union[float, list]
    classical_fisher: Union[float, list]
    axis: Optional[str] = None
    flags: list = field(default_factory=list)
    trial_estimates: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def scaled_cost(self) -> float:
        """n * MSE, directly comparable with 1/F."""
        return self.n_shots * self.empirical_cost

    @property
    def scaled_cost_se(self) -> float:
        return self.n_shots * self.empirical_cost_se

    def to_dict(self) -> dict:
        out = {
            "format": 1,
            "mode": self.mode,
            "scheme": self.scheme,
            "n": self.n_qubits,
            "n_shots": self.n_shots,
            "n_trials": self.n_trials,
            "theta_true": self.theta_true,
            "axis": self.axis,
            "seed": self.seed,
            "estimate_mean": self.estimate_mean,
            "estimate_cov": self.estimate_cov,
            "empirical_cost": self.empirical_cost,
            "empirical_cost_se": self.empirical_cost_se,
            "scaled_cost": self.scaled_cost,
            "crb_quantum": self.crb_quantum,
            "crb_classical": self.crb_classical,
            "quantum_fisher": self.quantum_fisher,
            "classical_fisher": self.classical_fisher,
            "flags": list(self.flags),
        }
        return jsonable(out)

    def write_trials_csv(self, path) -> None:
        if self.trial_estimates is None:
            raise ValueError("report carries no per-trial estimates")
        est = np.atleast_2d(self.trial_estimates.T).T
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["trial"] + [f"estimate_{i}" for i in range(est.shape[1])])
            for t, row in enumerate(est):
                writer.writerow([t] + [format(float(x), ".17g") for x in row])


def _summarize(estimates: np.ndarray, truth: np.ndarray):
    est = estimates.reshape(len(estimates), -1)
    err2 = np.sum((est - truth) ** 2, axis=1)
    mse = float(np.mean(err2))
    se = float(np.std(err2, ddof=1) / math.sqrt(len(err2))) if len(err2) > 1 else math.nan
    mean = est.mean(axis=0)
    cov = np.atleast_2d(np.cov(est, rowvar=False, ddof=1)) if len(est) > 1 else np.zeros((est.shape[1],) * 2)
    return mse, se, mean.tolist(), cov.tolist()


# ------------------------------------------------------------- single axis


def simulate_single_axis(
    state: SpinState,
    axis,
    theta_true: float,
    n_shots: int,
    scheme: MeasurementScheme,
    seed: int,
    n_trials: int = 200,
    search_range: float = 0.3,
) -> SimulationReport:
    """Estimate a rotation angle about one axis by maximum likelihood, trial after trial."""
    if abs(theta_true) > 0.1:
        raise ValueError("|theta_true| must not exceed 0.1 rad")
    if n_shots < 1 or n_trials < 1:
        raise ValueError("n_shots and n_trials must be positive")
    a = _axis_index(axis)
    e = np.zeros(3)
    e[a] = theta_true
    fq = float(metrology.fisher_matrix(state)[a, a])
    fc = classical_fisher(state, scheme, axis=a, theta=e)
    base = dict(
        mode="single_axis",
        scheme=scheme.describe(),
        n_qubits=state.n_qubits,
        n_shots=n_shots,
        n_trials=n_trials,
        theta_true=[float(theta_true)],
        seed=seed,
        axis="xyz"[a],
        quantum_fisher=fq,
        classical_fisher=fc,
        crb_quantum=1 / (n_shots * fq) if fq > 0 else math.inf,
        crb_classical=1 / (n_shots * fc) if fc > 0 else math.inf,
    )
    if fc < 1e-12:
        return SimulationReport(
            **base,
            estimate_mean=[math.nan],
            estimate_cov=[[math.nan]],
            empirical_cost=math.nan,
            empirical_cost_se=math.nan,
            flags=["uninformative"],
        )

    lam, vec = np.linalg.eigh(spin_operators(state.n_qubits).components[a])
    psi_eig = vec.conj().T @ state.amplitudes

    def probs(t: float) -> np.ndarray:
        return scheme.probabilities(vec @ (np.exp(1j * t * lam) * psi_eig))

    p_true = probs(theta_true)
    grid = np.linspace(-search_range, search_range, 61)
    grid_p = [probs(t) for t in grid]
    step = grid[1] - grid[0]

    estimates = np.empty(n_trials)
    for trial in range(n_trials):
        counts = sample_counts(p_true, n_shots, seed, trial)
        k = int(np.argmin([_neg_log_likelihood(counts, p) for p in grid_p]))
        lo = max(-search_range, grid[k] - step)
        hi = min(search_range, grid[k] + step)
        res = minimize_scalar(
            lambda t: _neg_log_likelihood(counts, probs(t)),
            bounds=(lo, hi),
            method="bounded",
            options={"xatol": 1e-12},
        )
        estimates[trial] = res.x

    mse, se, mean, cov = _summarize(estimates, np.array([theta_true]))
    return SimulationReport(
        **base,
        estimate_mean=mean,
        estimate_cov=cov,
        empirical_cost=mse,
        empirical_cost_se=se,
        trial_estimates=estimates,
    )


# ------------------------------------------------------------- three axes


def _line_search_ascent(nll, x0: np.ndarray, box: float):
    """Bounded Powell search: Brent line searches starting along the coordinate axes."""
    res = minimize(
        nll,
        x0,
        method="Powell",
        bounds=[(-box, box)] * 3,
        options={"xtol": 1e-10, "ftol": 1e-15, "maxfev": 20000},
    )
    return res.x, float(res.fun)


def simulate_cartesian(
    state: SpinState,
    theta_true: Sequence[float],
    n_shots: int,
    seed: int,
    n_trials: int = 200,
    box: float = 0.2,
    grid_points: int = 5,
) -> SimulationReport:
    """Joint estimation of all three rotation angles with the axis-dispatch scheme.

    ``n_shots`` is the total number of shots per trial, shared at random
    between the three measurement axes.
    """
    theta_true = np.asarray(theta_true, dtype=float)
    if theta_true.shape != (3,) or np.linalg.norm(theta_true) > 0.05:
        raise ValueError("theta_true must be a 3-vector of norm <= 0.05")
    if n_shots < 1 or n_trials < 1:
        raise ValueError("n_shots and n_trials must be positive")
    scheme = axis_dispatch(state.n_qubits)
    flags = []
    attainable, _ = metrology.attainability_check(state, 1e-9)
    if not attainable:
        warnings.warn("probe state has nonzero mean spin; the quantum bound is not attainable")
        flags.append("not_attainable")
    fq = metrology.fisher_matrix(state)
    fc = classical_fisher(state, scheme, theta=theta_true)
    crb_q = metrology.cost_from_fisher(fq) / n_shots
    crb_c = metrology.cost_from_fisher(fc) / n_shots
    if math.isinf(crb_q):
        flags.append("quantum_fisher_singular")
    base = dict(
        mode="cartesian",
        scheme=scheme.describe(),
        n_qubits=state.n_qubits,
        n_shots=n_shots,
        n_trials=n_trials,
        theta_true=theta_true.tolist(),
        seed=seed,
        quantum_fisher=fq.tolist(),
        classical_fisher=fc.tolist(),
        crb_quantum=crb_q,
        crb_classical=crb_c,
    )
    if math.isinf(crb_c):
        # the estimator still runs; it is just not covered by the classical bound
        flags.append("classical_fisher_singular")

    def probs(theta: np.ndarray) -> np.ndarray:
        return scheme.probabilities(rotation_operator(state.n_qubits, theta) @ state.amplitudes)

    p_true = probs(theta_true)
    axis_grid = np.linspace(-box, box, grid_points)
    grid = np.array(np.meshgrid(axis_grid, axis_grid, axis_grid, indexing="ij")).reshape(3, -1).T
    grid_p = [probs(g) for g in grid]

    estimates = np.empty((n_trials, 3))
    for trial in range(n_trials):
        counts = sample_counts(p_true, n_shots, seed, trial)

        def nll(theta, counts=counts):
            return _neg_log_likelihood(counts, probs(theta))

        starts = [np.zeros(3)]
        k = int(np.argmin([_neg_log_likelihood(counts, p) for p in grid_p]))
        if np.any(grid[k] != 0):
            starts.append(grid[k])
        best_x, best_v = None, math.inf
        for x0 in starts:
            x, v = _line_search_ascent(nll, x0, box)
            if v < best_v:
                best_x, best_v = x, v
        estimates[trial] = best_x

    mse, se, mean, cov = _summarize(estimates, theta_true)
    return SimulationReport(
        **base,
        estimate_mean=mean,
        estimate_cov=cov,
        empirical_cost=mse,
        empirical_cost_se=se,
        flags=flags,
        trial_estimates=estimates,
    )
