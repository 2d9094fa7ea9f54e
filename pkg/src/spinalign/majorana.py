"""Majorana (stellar) representation: symmetric states <-> N points on the sphere.

Convention, fixed here and nowhere else: the polynomial coefficient of
``z**k`` is ``(-1)**k * sqrt(C(N, k)) * a_{J-k}``, i.e. ``k`` counts spins
pointing down.  Its roots are the stereographic coordinates
``z = exp(-i phi) cot(theta/2)`` of the Majorana points, with missing degree
contributing points at infinity (the north pole).  Hence ``|J, m>`` has
``J + m`` points at the north pole and ``J - m`` at the south pole, and a
spin-coherent state pointing along ``n`` has all of its points at ``n``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .spin import SpinState, sqrt_binomials

UNIT_TOL = 1e-10
DEFLATION_THRESHOLD = 1e-12
RESIDUAL_TOL = 1e-8
NORTH = np.array([0.0, 0.0, 1.0])


class RootFindingError(RuntimeError):
    pass


@dataclass(frozen=True)
class PointSet:
    """Multiset of N unit vectors; row ``i`` of ``points`` is one point."""

    n_qubits: int
    points: np.ndarray = field(repr=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape != (self.n_qubits, 3):
            raise ValueError(f"expected {self.n_qubits} points of dimension 3, got {pts.shape}")
        norms = np.linalg.norm(pts, axis=1)
        bad = np.abs(norms - 1) > UNIT_TOL
        if np.any(bad):
            raise ValueError(f"non-unit point(s) at rows {np.flatnonzero(bad).tolist()}")
        pts = np.array(pts)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @classmethod
    def of(cls, points) -> "PointSet":
        pts = np.asarray(points, dtype=float)
        return cls(pts.shape[0], pts)

    def rotated(self, rotation: np.ndarray) -> "PointSet":
        pts = self.points @ np.asarray(rotation).T
        return PointSet(self.n_qubits, pts / np.linalg.norm(pts, axis=1, keepdims=True))

    def __len__(self) -> int:
        return self.n_qubits


def stereographic(points: np.ndarray) -> np.ndarray:
    """z = (x - i y) / (1 - z_c); the north pole maps to ``inf``."""
    pts = np.atleast_2d(points)
    x, y, zc = pts[:, 0], pts[:, 1], pts[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (x - 1j * y) / (1 - zc)
    out[zc >= 1.0] = complex(np.inf)
    return out


def inverse_stereographic(z: np.ndarray) -> np.ndarray:
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    r2 = np.abs(z) ** 2
    pts = np.column_stack(
        [2 * z.real / (1 + r2), -2 * z.imag / (1 + r2), (r2 - 1) / (r2 + 1)]
    )
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


def majorana_coefficients(state: SpinState) -> np.ndarray:
    """Coefficients c_0..c_N (ascending powers) of the Majorana polynomial."""
    n = state.n_qubits
    k = np.arange(n + 1)
    # a_{J-k} lives at array index n - k
    return (-1.0) ** k * sqrt_binomials(n) * state.amplitudes[::-1]


def _normalized_residual(coeffs: np.ndarray, root: complex) -> float:
    """|p(r)| / sum_k |c_k| |r|^k, evaluated in reversed form when |r| > 1."""
    if abs(root) > 1:
        coeffs, root = coeffs[::-1], 1 / root
    den = np.dot(np.abs(coeffs), np.abs(root) ** np.arange(len(coeffs)))
    if den == 0:
        return 0.0
    return float(abs(npoly.polyval(root, coeffs)) / den)


def _polish(coeffs: np.ndarray, root: complex, steps: int = 3) -> complex:
    deriv = npoly.polyder(coeffs)
    best, best_res = root, _normalized_residual(coeffs, root)
    r = root
    for _ in range(steps):
        d = npoly.polyval(r, deriv)
        if d == 0:
            break
        r = r - npoly.polyval(r, coeffs) / d
        res = _normalized_residual(coeffs, r)
        if not np.isfinite(res) or res >= best_res:
            break
        best, best_res = r, res
    return best


def polynomial_roots(coeffs: np.ndarray) -> tuple[np.ndarray, int]:
    """Finite roots of the (possibly degree-deficient) polynomial and the count at infinity."""
    coeffs = np.asarray(coeffs, dtype=complex)
    scale = np.max(np.abs(coeffs))
    if scale == 0:
        raise ValueError("zero state has no Majorana representation")
    nonzero = np.flatnonzero(np.abs(coeffs) >= DEFLATION_THRESHOLD * scale)
    degree = int(nonzero[-1])
    c = coeffs[: degree + 1] / scale
    c[np.abs(c) < DEFLATION_THRESHOLD] = 0
    if degree == 0:
        roots = np.empty(0, dtype=complex)
    else:
        # companion-matrix eigenvalues
        roots = np.array([_polish(c, r) for r in npoly.polyroots(c)], dtype=complex)
    for r in roots:
        res = _normalized_residual(c, r)
        if not res < RESIDUAL_TOL:
            raise RootFindingError(f"root {r} has normalized residual {res:.3g}")
    return roots, len(coeffs) - 1 - degree


def state_to_points(state: SpinState) -> PointSet:
    roots, at_infinity = polynomial_roots(majorana_coefficients(state))
    pts = inverse_stereographic(roots) if len(roots) else np.empty((0, 3))
    pts = np.vstack([pts, np.tile(NORTH, (at_infinity, 1))])
    return PointSet(state.n_qubits, pts)


def _spinors(points: np.ndarray) -> np.ndarray:
    """(up, down) components of the qubit state with Bloch vector ``n``."""
    x, y, z = points.T
    theta = np.arccos(np.clip(z, -1, 1))
    phi = np.arctan2(y, x)
    return np.column_stack([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)])


def points_to_state(points: PointSet) -> SpinState:
    """Symmetrized product state whose Majorana points are ``points``.

    Expands prod_i (up_i + down_i s) by repeated convolution; the
    coefficient of s**k is sqrt(C(N, k)) a_{J-k}.  Working with spinors
    instead of roots keeps north-pole points exact.
    """
    if not isinstance(points, PointSet):
        points = PointSet.of(points)
    poly = np.array([1.0 + 0j])
    for up, down in _spinors(points.points):
        poly = np.convolve(poly, [up, down])
    amps_desc = poly / sqrt_binomials(points.n_qubits)
    return SpinState.normalized(points.n_qubits, amps_desc[::-1])


def bottleneck_matching(a: np.ndarray, b: np.ndarray) -> tuple[float, np.ndarray]:
    """Permutation ``perm`` minimizing max_i |a_i - b_perm[i]| and that distance."""
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        raise ValueError("point sets differ in size")
    n = len(a)
    if n == 0:
        return 0.0, np.empty(0, dtype=int)
    dist = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2)
    levels = np.unique(dist)
    lo, hi = 0, len(levels) - 1
    best = None
    while lo <= hi:
        mid = (lo + hi) // 2
        graph = csr_matrix((dist <= levels[mid]).astype(np.int8))
        match = maximum_bipartite_matching(graph, perm_type="column")
        if np.all(match >= 0):
            best, hi = match, mid - 1
        else:
            lo = mid + 1
    return float(np.max(dist[np.arange(n), best])), best


def matched_distance(a: PointSet, b: PointSet) -> float:
    """Bottleneck distance between two point multisets without any rotation."""
    return bottleneck_matching(a.points, b.points)[0]


@dataclass(frozen=True)
class Alignment:
    rotation: np.ndarray
    distance: float
    permutation: np.ndarray


def _frame(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    e2 = v - np.dot(v, u) * u
    e2 /= np.linalg.norm(e2)
    return np.column_stack([u, e2, np.cross(u, e2)])


def _kabsch(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Proper rotation R minimizing sum |R a_i - b_i|^2."""
    u, _, vt = np.linalg.svd(b.T @ a)
    d = np.sign(np.linalg.det(u @ vt)) or 1.0
    return u @ np.diag([1.0, 1.0, d]) @ vt


def _minimal_rotation(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    axis = np.cross(u, v)
    s, c = np.linalg.norm(axis), float(np.dot(u, v))
    if s < 1e-15:
        if c > 0:
            return np.eye(3)
        perp = np.cross(u, [1.0, 0, 0])
        if np.linalg.norm(perp) < 1e-8:
            perp = np.cross(u, [0, 1.0, 0])
        perp /= np.linalg.norm(perp)
        return 2 * np.outer(perp, perp) - np.eye(3)
    k = axis / s
    kx = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + s * kx + (1 - c) * kx @ kx


def canonical_align(a: PointSet, b: PointSet, refine_steps: int = 8) -> Alignment:
    """Rotation R bringing ``a`` closest to ``b`` in bottleneck-matched distance.

    Candidate rotations map a fixed non-collinear pair of ``a`` onto every
    ordered pair of ``b`` with a compatible opening angle; each candidate is
    refined by alternating matching and Kabsch fits.
    """
    if a.n_qubits != b.n_qubits:
        raise ValueError("point sets must have equal size")
    pa, pb = a.points, b.points
    n = len(pa)
    if n == 0:
        return Alignment(np.eye(3), 0.0, np.empty(0, dtype=int))
    anchor = pa[0]
    cross = np.linalg.norm(np.cross(anchor, pa), axis=1)
    second = int(np.argmax(cross))

    candidates = []
    if cross[second] < 1e-6:
        candidates = [_minimal_rotation(anchor, q) for q in pb]
    else:
        angle_a = np.arccos(np.clip(np.dot(anchor, pa[second]), -1, 1))
        fa = _frame(anchor, pa[second])
        pairs = [
            (j, k)
            for j, k in permutations(range(n), 2)
            if np.linalg.norm(np.cross(pb[j], pb[k])) > 1e-6
        ]
        close = [
            (j, k)
            for j, k in pairs
            if abs(np.arccos(np.clip(np.dot(pb[j], pb[k]), -1, 1)) - angle_a) < 0.2
        ]
        for j, k in close or pairs:
            candidates.append(_frame(pb[j], pb[k]) @ fa.T)
        if not candidates:
            candidates = [_minimal_rotation(anchor, q) for q in pb]

    best = None
    for rot in candidates:
        dist, perm = bottleneck_matching(pa @ rot.T, pb)
        for _ in range(refine_steps):
            new_rot = _kabsch(pa, pb[perm])
            new_dist, new_perm = bottleneck_matching(pa @ new_rot.T, pb)
            if new_dist >= dist - 1e-15:
                break
            rot, dist, perm = new_rot, new_dist, new_perm
        if best is None or dist < best.distance:
            best = Alignment(rot, dist, perm)
    return best
