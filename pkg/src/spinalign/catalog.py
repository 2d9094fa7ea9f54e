"""Platonic vertex sets and the anti-coherent state families built from them.

Each family is a fixed pattern of m values ("support") scaling with N.  The
states as printed in the original table are available verbatim through
:func:`paper_literal_state`; :func:`family_state` returns a state verified to
be anti-coherent, re-solving the moment conditions on the same support when
the printed amplitudes do not satisfy them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Optional

import numpy as np
import sympy
from scipy.optimize import least_squares, linprog

from .majorana import PointSet, _minimal_rotation, points_to_state
from .metrology import anticoherence_check
from .spin import SpinState, m_index

GOLDEN = (1 + math.sqrt(5)) / 2


class InfeasibleSupportError(ValueError):
    """No nonnegative weights on the support meet the anti-coherence moments."""

    def __init__(self, moment: str, detail: str):
        self.moment = moment
        self.detail = detail
        super().__init__(f"{moment}: {detail}")

    @property
    def certificate(self) -> dict:
        return {"moment": self.moment, "detail": self.detail}


class CrossCoupledSupportError(InfeasibleSupportError):
    """Support has m pairs 1 or 2 apart whose cross moments cannot be cancelled."""


class InadmissibleError(ValueError):
    pass


class SolidKind(str, Enum):
    TETRAHEDRON = "tetrahedron"
    OCTAHEDRON = "octahedron"
    CUBE = "cube"
    ICOSAHEDRON = "icosahedron"
    DODECAHEDRON = "dodecahedron"


def _cyclic(v) -> list:
    x, y, z = v
    return [(x, y, z), (z, x, y), (y, z, x)]


def _signed(v) -> set:
    out = set()
    for sx in (1, -1):
        for sy in (1, -1):
            for sz in (1, -1):
                out.add((sx * v[0], sy * v[1], sz * v[2]))
    return out


def platonic_vertices(kind: SolidKind | str) -> PointSet:
    """Vertices of a Platonic solid in standard position, on the unit sphere."""
    kind = SolidKind(kind)
    cube = sorted(_signed((1.0, 1.0, 1.0)), reverse=True)
    if kind is SolidKind.TETRAHEDRON:
        verts = [v for v in cube if v[0] * v[1] * v[2] > 0]
    elif kind is SolidKind.OCTAHEDRON:
        verts = [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)]
    elif kind is SolidKind.CUBE:
        verts = cube
    elif kind is SolidKind.ICOSAHEDRON:
        verts = []
        for base in _cyclic((0.0, 1.0, GOLDEN)):
            verts.extend(sorted(_signed(base), reverse=True))
    else:
        verts = list(cube)
        for base in _cyclic((0.0, 1 / GOLDEN, GOLDEN)):
            verts.extend(sorted(_signed(base), reverse=True))
    pts = np.array(sorted(set(map(tuple, verts)), reverse=True), dtype=float)
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    return PointSet.of(pts)


# ---------------------------------------------------------------- families


@dataclass(frozen=True)
class FamilySpec:
    """One row of the family table.

    ``support(N)`` gives the m values, ``literal(N)`` the printed squared
    amplitudes (exact), ``pinned(N)`` the printed weights kept when the
    corrected system is underdetermined.
    """

    name: str
    admissible_rule: str
    admissible: Callable[[int], bool] = field(repr=False)
    support: Callable[[int], tuple] = field(repr=False)
    literal: Callable[[int], dict] = field(repr=False)
    pinned: Callable[[int], dict] = field(repr=False, default=lambda n: {})

    def check(self, n_qubits: int) -> None:
        if not self.admissible(n_qubits):
            raise InadmissibleError(
                f"N={n_qubits} not admissible for {self.name} ({self.admissible_rule})"
            )


F = Fraction


def _octahedron_m(n: int) -> Optional[int]:
    num = n * (n + 2)
    if num % 12:
        return None
    r = math.isqrt(num // 12)
    return r if r * r == num // 12 else None


def _tetra_literal(n):
    return {F(-n, 2): F(n + 2, 4 * n + 2), F(n + 2, 6): F(3 * n, 4 * n + 2)}


def _octa_literal(n):
    m = _octahedron_m(n)
    return {F(-m): F(1, 2), F(m): F(1, 2)}


def _cube_literal(n):
    w = F(n + 2, 6 * n)
    return {F(-n, 2): w, F(0): F(n - 1, n), F(n, 2): w}


def _icosa_literal(n):
    a2 = F(n * (n + 2), 6 * (n - 1) ** 2)
    m = F(n, 2) - 1
    return {-m: a2, F(0): 1 - a2, m: a2}


def _dodeca_literal(n):
    return {
        F(-n, 2): F(1, 4),
        F(-n, 4): F(2, n),
        F(0): F(n - 8, 2 * n),
        F(n, 4): F(2, n),
        F(n, 2): F(1, 4),
    }


FAMILIES: dict[str, FamilySpec] = {
    "tetrahedron": FamilySpec(
        "tetrahedron",
        "N mod 6 = 4, N >= 4",
        lambda n: n >= 4 and n % 6 == 4,
        lambda n: (F(-n, 2), F(n + 2, 6)),
        _tetra_literal,
    ),
    "octahedron": FamilySpec(
        "octahedron",
        "sqrt(N(N+2)/12) a positive integer, N >= 6",
        lambda n: n >= 6 and _octahedron_m(n) is not None,
        lambda n: (F(-_octahedron_m(n)), F(_octahedron_m(n))),
        _octa_literal,
    ),
    "cube": FamilySpec(
        "cube",
        "N even, N >= 8",
        lambda n: n >= 8 and n % 2 == 0,
        lambda n: (F(-n, 2), F(0), F(n, 2)),
        _cube_literal,
    ),
    "icosahedron": FamilySpec(
        "icosahedron",
        "N even, N >= 10",
        lambda n: n >= 10 and n % 2 == 0,
        lambda n: (1 - F(n, 2), F(0), F(n, 2) - 1),
        _icosa_literal,
    ),
    "dodecahedron": FamilySpec(
        "dodecahedron",
        "N mod 4 = 0, N >= 20",
        lambda n: n >= 20 and n % 4 == 0,
        lambda n: (F(-n, 2), F(-n, 4), F(0), F(n, 4), F(n, 2)),
        _dodeca_literal,
        pinned=lambda n: {F(-n, 4): F(2, n), F(n, 4): F(2, n)},
    ),
}


def get_family(name: str | FamilySpec) -> FamilySpec:
    if isinstance(name, FamilySpec):
        return name
    try:
        return FAMILIES[str(name).lower()]
    except KeyError:
        raise KeyError(f"unknown family {name!r}; choose from {sorted(FAMILIES)}") from None


# ------------------------------------------------------------- exact moments


def _cross_coupled_pairs(support: Iterable[Fraction]) -> list:
    ms = sorted(set(support))
    return [(a, b) for i, a in enumerate(ms) for b in ms[i + 1 :] if b - a in (1, 2)]


@dataclass(frozen=True)
class ExactMoments:
    """Second-order moments of a state with the given real nonnegative weights.

    Valid only when no two support points are 1 or 2 apart, so that all
    off-diagonal covariances and <J_x>, <J_y> vanish identically.
    """

    n_qubits: int
    norm_squared: Fraction
    mean_z: Fraction
    second_z: Fraction
    var_x: Fraction
    var_y: Fraction
    var_z: Fraction

    @property
    def target(self) -> Fraction:
        return F(self.n_qubits * (self.n_qubits + 2), 12)

    @property
    def anticoherent(self) -> bool:
        t = self.target
        return self.mean_z == 0 and self.var_x == t and self.var_y == t and self.var_z == t


def exact_moments(weights: Mapping, n_qubits: int) -> ExactMoments:
    """Moments after renormalizing ``weights``; ``norm_squared`` records the printed norm."""
    weights = {F(m): F(w) for m, w in weights.items() if w}
    if _cross_coupled_pairs(weights):
        raise ValueError("support has m pairs 1 or 2 apart; moments are phase dependent")
    total = sum(weights.values())
    mean = sum(m * w for m, w in weights.items()) / total
    second = sum(m * m * w for m, w in weights.items()) / total
    j = F(n_qubits, 2)
    transverse = (j * (j + 1) - second) / 2
    return ExactMoments(n_qubits, total, mean, second, transverse, transverse, second - mean**2)


# ------------------------------------------------------------- solver


@dataclass(frozen=True)
class SupportSolution:
    n_qubits: int
    weights: dict
    phases: dict = field(default_factory=dict)
    free_directions: tuple = ()
    parameter_range: tuple = ()
    pinned: dict = field(default_factory=dict)
    cross_coupled: bool = False

    def amplitudes(self) -> np.ndarray:
        amps = np.zeros(self.n_qubits + 1, dtype=complex)
        for m, w in self.weights.items():
            amps[m_index(self.n_qubits, m)] = math.sqrt(w) * np.exp(1j * self.phases.get(m, 0.0))
        return amps

    def state(self) -> SpinState:
        return SpinState.normalized(self.n_qubits, self.amplitudes())

    def residuals(self) -> dict:
        """Exact residuals of the three imposed moment equations."""
        j = F(self.n_qubits, 2)
        w = self.weights
        return {
            "normalization": sum(w.values()) - 1,
            "first_moment": sum(m * x for m, x in w.items()),
            "second_moment": sum(m * m * x for m, x in w.items()) - j * (j + 1) / 3,
        }

    def describe_family(self) -> str:
        if not self.free_directions:
            return "unique solution on this support"
        dirs = "; ".join(
            "{" + ", ".join(f"m={m}: {d}" for m, d in sorted(v.items())) + "}"
            for v in self.free_directions
        )
        rng = ""
        if self.parameter_range:
            rng = f", nonnegative for t in [{self.parameter_range[0]}, {self.parameter_range[1]}]"
        return f"{len(self.free_directions)}-parameter family w + t*d with d in {dirs}{rng}"


_MOMENT_NAMES = ("normalization", "first moment <J_z> = 0", "second moment <J_z^2> = J(J+1)/3")


def solve_support(
    support: Iterable,
    n_qubits: int,
    symmetric: bool = True,
    pinned: Optional[Mapping] = None,
) -> SupportSolution:
    """Nonnegative weights w_m on ``support`` with sum 1, mean 0 and <m^2> = J(J+1)/3.

    With ``symmetric`` the weights satisfy w_m = w_-m.  ``pinned`` fixes
    chosen weights.  Underdetermined systems with one free parameter return
    the midpoint of the exact nonnegativity interval.  Supports with m pairs
    1 or 2 apart additionally need vanishing <J_+> and <J_+^2> type cross
    moments; phases achieving this are searched numerically and
    :class:`CrossCoupledSupportError` is raised when none are found.
    """
    support = [F(m) for m in support]
    sup = sorted(set(support))
    if len(sup) != len(support):
        raise InfeasibleSupportError("support", "support has repeated m values")
    j = F(n_qubits, 2)
    for m in sup:
        try:
            m_index(n_qubits, m)
        except ValueError as exc:
            raise InfeasibleSupportError("support", str(exc)) from None
    pinned = {F(m): F(w) for m, w in (pinned or {}).items()}
    if symmetric and any(-m not in sup for m in sup):
        raise ValueError("symmetric solve requires a support closed under m -> -m")

    # unknowns: one per orbit {m, -m} when symmetric, else one per m
    if symmetric:
        orbits = sorted({abs(m) for m in sup})
        members = {o: [o] if o == 0 else [-o, o] for o in orbits}
    else:
        orbits = sup
        members = {o: [o] for o in orbits}
    for m, w in pinned.items():
        if symmetric and pinned.get(-m, w) != w:
            raise ValueError("pinned weights must respect the m -> -m symmetry")
    free = [o for o in orbits if o not in pinned and -o not in pinned]
    fixed = {o: pinned.get(o, pinned.get(-o)) for o in orbits if o not in free}

    def row(o, power):
        return sum(sympy.Rational(m.numerator, m.denominator) ** power for m in members[o])

    target = j * (j + 1) / 3
    rhs_full = [F(1), F(0), target]
    powers = (0, 1, 2)
    a_rows, b_rows = [], []
    for p, r in zip(powers, rhs_full):
        a_rows.append([row(o, p) for o in free])
        fixed_part = sum(F(str(row(o, p))) * w for o, w in fixed.items())
        b_rows.append(r - fixed_part)

    def _solve(k):
        a = sympy.Matrix(a_rows[:k]) if free else sympy.zeros(k, 0)
        b = sympy.Matrix([sympy.Rational(x.numerator, x.denominator) for x in b_rows[:k]])
        if not free:
            if any(x != 0 for x in b):
                raise ValueError("inconsistent")
            return sympy.zeros(0, 1), sympy.zeros(0, 1)
        return a.gauss_jordan_solve(b)

    try:
        sol, params = _solve(3)
    except ValueError:
        for k in (1, 2, 3):
            try:
                _solve(k)
            except ValueError:
                raise InfeasibleSupportError(
                    _MOMENT_NAMES[k - 1],
                    f"linear system on support {[str(m) for m in sup]} is inconsistent",
                ) from None
        raise  # pragma: no cover

    base = {o: F(str(sol[i].subs({t: 0 for t in params}))) for i, o in enumerate(free)}
    directions = []
    for t in params:
        directions.append(
            {o: F(str(sympy.diff(sol[i], t))) for i, o in enumerate(free)}
        )

    param_range: tuple = ()
    if not directions:
        chosen = base
    elif len(directions) == 1:
        d = directions[0]
        lo, hi = -math.inf, math.inf
        for o in free:
            if d[o] > 0:
                lo = max(lo, -base[o] / d[o])
            elif d[o] < 0:
                hi = min(hi, -base[o] / d[o])
            elif base[o] < 0:
                lo, hi = math.inf, -math.inf
        if lo > hi or lo == math.inf or hi == -math.inf:
            raise InfeasibleSupportError(
                _MOMENT_NAMES[2], "no nonnegative member of the solution family"
            )
        if lo == -math.inf or hi == math.inf:
            raise InfeasibleSupportError("family", "unbounded solution family")  # pragma: no cover
        param_range = (lo, hi)
        t0 = (lo + hi) / 2
        chosen = {o: base[o] + t0 * d[o] for o in free}
    else:
        chosen = _maximin_member(free, base, directions)

    negative = {o: w for o, w in chosen.items() if w < 0}
    if negative:
        shown = ", ".join(f"w[{o}]={w}" for o, w in negative.items())
        raise InfeasibleSupportError(
            _MOMENT_NAMES[2],
            f"target {target} forces negative weights ({shown}) on support {[str(m) for m in sup]}",
        )

    weights = {}
    for o in orbits:
        w = chosen[o] if o in chosen else fixed[o]
        if w < 0:
            raise InfeasibleSupportError("pinned", f"pinned weight for m={o} is negative")
        for m in members[o]:
            weights[m] = w

    free_dirs = tuple(
        {m: d[o] for o in free for m in members[o] if d[o] != 0} for d in directions
    )
    solution = SupportSolution(
        n_qubits=n_qubits,
        weights=weights,
        free_directions=free_dirs,
        parameter_range=param_range,
        pinned=pinned,
    )

    coupled = _cross_coupled_pairs(m for m, w in weights.items() if w > 0)
    if coupled:
        phases = _cancel_cross_moments(solution)
        if phases is None:
            pairs = ", ".join(f"({a}, {b})" for a, b in coupled)
            raise CrossCoupledSupportError(
                "cross moments <J_+>, <J_+^2>",
                f"m pairs {pairs} couple x/y covariances and no phase choice cancels them",
            )
        solution = SupportSolution(
            n_qubits=n_qubits,
            weights=weights,
            phases=phases,
            free_directions=free_dirs,
            parameter_range=param_range,
            pinned=pinned,
            cross_coupled=True,
        )
    return solution


def _maximin_member(free, base, directions) -> dict:
    """Member of a multi-parameter family maximizing its smallest weight."""
    k = len(directions)
    # variables: t_1..t_k, s ; maximize s subject to base + D t >= s
    a_ub = []
    b_ub = []
    for o in free:
        a_ub.append([-float(d[o]) for d in directions] + [1.0])
        b_ub.append(float(base[o]))
    res = linprog(
        c=[0.0] * k + [-1.0],
        A_ub=a_ub,
        b_ub=b_ub,
        bounds=[(None, None)] * k + [(None, 1.0)],
        method="highs",
    )
    if not res.success or res.x[-1] < 0:
        raise InfeasibleSupportError(_MOMENT_NAMES[2], "no nonnegative member of the solution family")
    ts = [F(x).limit_denominator(10**6) for x in res.x[:k]]
    return {o: base[o] + sum(t * d[o] for t, d in zip(ts, directions)) for o in free}


def _cancel_cross_moments(solution: SupportSolution, restarts: int = 8) -> Optional[dict]:
    ms = [m for m, w in sorted(solution.weights.items()) if w > 0]
    mags = np.array([math.sqrt(solution.weights[m]) for m in ms])
    idx = [m_index(solution.n_qubits, m) for m in ms]
    n = solution.n_qubits

    def residual(phis):
        amps = np.zeros(n + 1, dtype=complex)
        amps[idx] = mags * np.exp(1j * np.concatenate([[0.0], phis]))
        rep = anticoherence_check(SpinState.normalized(n, amps))
        cov = rep.covariance - rep.target_variance * np.eye(3)
        return np.concatenate([rep.mean_vector, cov[np.triu_indices(3)]])

    rng = np.random.default_rng(0)
    for _ in range(restarts):
        x0 = rng.uniform(0, 2 * np.pi, size=len(ms) - 1)
        fit = least_squares(residual, x0, xtol=1e-15, ftol=1e-15, gtol=1e-15)
        if np.max(np.abs(residual(fit.x))) < 1e-12:
            phases = np.concatenate([[0.0], fit.x])
            return {m: float(p) for m, p in zip(ms, phases)}
    return None


# ------------------------------------------------------------- states


@dataclass(frozen=True)
class CatalogState:
    state: SpinState
    weights: dict
    provenance: dict


def _literal_discrepancy(family: FamilySpec, n: int) -> tuple[ExactMoments, Optional[str]]:
    moments = exact_moments(family.literal(n), n)
    problems = []
    if moments.norm_squared != 1:
        problems.append(f"printed squared norm is {moments.norm_squared}, not 1")
    if moments.mean_z != 0:
        problems.append(f"<J_z> = {moments.mean_z} after renormalization")
    if moments.var_z != moments.target:
        problems.append(
            f"Var(J_z) = {moments.var_z} after renormalization vs target {moments.target}"
        )
    if moments.var_x != moments.target:
        problems.append(f"Var(J_x) = Var(J_y) = {moments.var_x}")
    return moments, "; ".join(problems) or None


def _state_from_weights(n: int, weights: Mapping) -> SpinState:
    amps = np.zeros(n + 1, dtype=complex)
    total = sum(weights.values())
    for m, w in weights.items():
        amps[m_index(n, m)] = math.sqrt(F(w) / total)
    return SpinState.normalized(n, amps)


def _fmt_weights(weights: Mapping) -> dict:
    return {str(m): str(w) for m, w in sorted(weights.items())}


def paper_literal_state(family: str | FamilySpec, n_qubits: int) -> CatalogState:
    """The state exactly as printed in the family table (renormalized if needed)."""
    family = get_family(family)
    family.check(n_qubits)
    printed = family.literal(n_qubits)
    moments, discrepancy = _literal_discrepancy(family, n_qubits)
    total = moments.norm_squared
    weights = {m: w / total for m, w in printed.items()}
    provenance = {
        "class": family.name,
        "n": n_qubits,
        "source": "paper",
        "renormalized": total != 1,
        "printed_weights": _fmt_weights(printed),
        "printed_norm_squared": str(total),
        "var_z": str(moments.var_z),
        "target_variance": str(moments.target),
        "discrepancy": discrepancy,
    }
    return CatalogState(_state_from_weights(n_qubits, printed), weights, provenance)


def family_state(family: str | FamilySpec, n_qubits: int, tol: float = 1e-9) -> CatalogState:
    """Anti-coherent member of a family: the printed state if it passes, else a re-solved one."""
    family = get_family(family)
    literal = paper_literal_state(family, n_qubits)
    if anticoherence_check(literal.state, tol).passed:
        return literal
    support = family.support(n_qubits)
    symmetric = all(-m in support for m in support)
    pinned = family.pinned(n_qubits)
    sol = solve_support(support, n_qubits, symmetric=symmetric, pinned=pinned)
    # the pinned member sits inside the family spanned without pins
    family_text = sol.describe_family()
    if pinned:
        family_text = solve_support(support, n_qubits, symmetric=symmetric).describe_family()
    provenance = {
        "class": family.name,
        "n": n_qubits,
        "source": "corrected",
        "discrepancy": literal.provenance["discrepancy"],
        "weights": _fmt_weights(sol.weights),
        "pinned": _fmt_weights(sol.pinned),
        "family": family_text,
    }
    if family.name == "dodecahedron" and n_qubits == 20:
        provenance["geometric_member"] = {
            str(m): w for m, w in sorted(geometric_dodecahedron_weights().items())
        }
    return CatalogState(sol.state(), dict(sol.weights), provenance)


def _nearest_half_odd(x: Fraction) -> Fraction:
    return F(math.floor(x), 1) + F(1, 2)


def odd_n_variant(family: str | FamilySpec, n_qubits: int, central: Fraction = F(1, 2)) -> CatalogState:
    """Odd-N analogue: the central |0> replaced by |central> (+1/2 or -1/2), weights re-solved."""
    family = get_family(family)
    if n_qubits % 2 == 0:
        raise InadmissibleError("odd_n_variant needs odd N")
    if family.name not in ("cube", "icosahedron", "dodecahedron"):
        raise InadmissibleError(f"no odd-N variant for {family.name}")
    central = F(central)
    if abs(central) != F(1, 2):
        raise ValueError("central element must be +1/2 or -1/2")
    half = F(n_qubits, 2)
    pinned: dict = {}
    if family.name == "cube":
        support = (-half, central, half)
    elif family.name == "icosahedron":
        support = (1 - half, central, half - 1)
    else:
        q = _nearest_half_odd(F(n_qubits, 4))
        support = (-half, -q, central, q, half)
        pinned = {-q: F(2, n_qubits), q: F(2, n_qubits)}
    sol = solve_support(support, n_qubits, symmetric=False, pinned=pinned)
    state = sol.state()
    provenance = {
        "class": family.name,
        "n": n_qubits,
        "source": "odd-variant",
        "support": [str(m) for m in sorted(set(support))],
        "weights": _fmt_weights(sol.weights),
        "family": sol.describe_family(),
    }
    return CatalogState(state, dict(sol.weights), provenance)


def geometric_dodecahedron_weights() -> dict:
    """|a_m|^2 of the regular dodecahedron state with a 5-fold axis along z."""
    verts = platonic_vertices(SolidKind.DODECAHEDRON)
    axis = np.array([0.0, GOLDEN, 1.0]) / math.sqrt(1 + GOLDEN**2)
    rot = _minimal_rotation(axis, np.array([0.0, 0.0, 1.0]))
    state = points_to_state(verts.rotated(rot))
    w = np.abs(state.amplitudes) ** 2
    return {F(k) - 10: float(x) for k, x in enumerate(w) if x > 1e-12}
