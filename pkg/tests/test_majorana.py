from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from spinalign import metrology
from spinalign.catalog import platonic_vertices
from spinalign.majorana import (
    PointSet,
    bottleneck_matching,
    canonical_align,
    inverse_stereographic,
    majorana_coefficients,
    matched_distance,
    points_to_state,
    polynomial_roots,
    state_to_points,
    stereographic,
    _normalized_residual,
)
from spinalign.spin import (
    SpinState,
    random_rotation_vector,
    random_state,
    rotate,
    rotation_matrix,
)

NORTH, SOUTH = np.array([0, 0, 1.0]), np.array([0, 0, -1.0])


def coherent_state(n, theta, phi):
    """Closed-form spin-coherent amplitudes, ascending m (all N spins along (theta, phi))."""
    j = n / 2
    amps = []
    for k in range(n + 1):
        m = k - j
        up, down = int(j + m), int(j - m)
        amps.append(
            math.sqrt(math.comb(n, down)) * math.cos(theta / 2) ** up * (np.exp(1j * phi) * math.sin(theta / 2)) ** down
        )
    return SpinState.normalized(n, amps)


def count_near(points, target, tol=1e-9):
    return int(np.sum(np.linalg.norm(points - target, axis=1) < tol))


class TestConvention:
    @pytest.mark.parametrize("n", [1, 2, 5, 8])
    def test_lowest_weight_is_all_south(self, n):
        pts = state_to_points(SpinState.basis(n, -n / 2)).points
        assert count_near(pts, SOUTH) == n

    @pytest.mark.parametrize("n", [2, 3, 6, 9])
    def test_dicke_states(self, n):
        for k in range(n + 1):
            m = k - n / 2
            pts = state_to_points(SpinState.basis(n, m)).points
            assert count_near(pts, NORTH) == round(n / 2 + m)
            assert count_near(pts, SOUTH) == round(n / 2 - m)

    def test_two_qubit_singlet_like(self):
        pts = state_to_points(SpinState.basis(2, 0)).points
        assert count_near(pts, NORTH) == 1 and count_near(pts, SOUTH) == 1

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_coherent_state_points_along_axis(self, n, rng):
        for _ in range(5):
            theta, phi = rng.uniform(0.1, math.pi - 0.1), rng.uniform(-math.pi, math.pi)
            axis = np.array([math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta)])
            pts = state_to_points(coherent_state(n, theta, phi)).points
            assert np.max(np.linalg.norm(pts - axis, axis=1)) < 1e-4

    def test_stereographic_poles(self):
        assert np.isinf(stereographic(NORTH)[0])
        assert stereographic(SOUTH)[0] == 0
        np.testing.assert_allclose(inverse_stereographic(0), [SOUTH])

    def test_stereographic_round_trip(self, rng):
        pts = rng.normal(size=(50, 3))
        pts /= np.linalg.norm(pts, axis=1, keepdims=True)
        np.testing.assert_allclose(inverse_stereographic(stereographic(pts)), pts, atol=1e-12)

    def test_coefficients_of_lowest_weight(self):
        c = majorana_coefficients(SpinState.basis(3, -1.5))
        np.testing.assert_allclose(c, [0, 0, 0, -1])


class TestPointsToState:
    def test_north_south_pair(self):
        s = points_to_state(PointSet.of([NORTH, SOUTH]))
        assert s.fidelity(SpinState.basis(2, 0)) == pytest.approx(1.0, abs=1e-15)

    def test_tetrahedron_cost(self):
        s = points_to_state(platonic_vertices("tetrahedron"))
        assert metrology.alignment_cost(s) == pytest.approx(3 / 8, abs=1e-9)

    def test_dodecahedron_anticoherent(self):
        s = points_to_state(platonic_vertices("dodecahedron"))
        assert metrology.anticoherence_check(s, 1e-8).passed

    def test_non_unit_point(self):
        with pytest.raises(ValueError):
            points_to_state(PointSet.of([[0, 0, 1.0], [0, 0, 1.1]]))

    def test_coherent_state(self, rng):
        theta, phi = 1.1, -0.4
        n = 7
        axis = [math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta)]
        s = points_to_state(PointSet.of([axis] * n))
        assert s.fidelity(coherent_state(n, theta, phi)) == pytest.approx(1.0, abs=1e-12)


class TestRoundTrip:
    @pytest.mark.parametrize("n", range(1, 13))
    def test_fidelity(self, n, rng):
        for _ in range(100):
            s = random_state(n, rng)
            assert points_to_state(state_to_points(s)).fidelity(s) >= 1 - 1e-8

    @settings(max_examples=50, deadline=None)
    @given(n=st.integers(2, 12), seed=st.integers(0, 2**32 - 1))
    def test_equivariance(self, n, seed):
        rng = np.random.default_rng(seed)
        s = random_state(n, rng)
        theta = random_rotation_vector(rng)
        moved = state_to_points(rotate(s, theta))
        expected = state_to_points(s).rotated(rotation_matrix(theta))
        assert matched_distance(moved, expected) < 1e-6

    def test_degenerate_leading_coefficients(self):
        # a_{-J} = a_{-J+1} = 0 drops the degree by two: exactly two north-pole points
        s = SpinState.from_components(4, {2: 0.6, 0: 0.8})
        pts = state_to_points(s).points
        assert count_near(pts, NORTH, tol=1e-300) == 2


class TestRoots:
    def test_residuals(self, rng):
        for deg in range(1, 15):
            c = rng.normal(size=deg + 1) + 1j * rng.normal(size=deg + 1)
            roots, at_inf = polynomial_roots(c)
            assert at_inf == 0 and len(roots) == deg
            assert all(_normalized_residual(c / np.max(np.abs(c)), r) < 1e-8 for r in roots)

    def test_deflation(self):
        roots, at_inf = polynomial_roots(np.array([1, 1, 1e-14]))
        assert at_inf == 1
        assert roots == pytest.approx([-1])

    def test_zero_polynomial(self):
        with pytest.raises(ValueError):
            polynomial_roots(np.zeros(4))

    def test_root_at_origin(self):
        roots, _ = polynomial_roots(np.array([0, 2.0, 1.0]))
        assert sorted(abs(roots)) == pytest.approx([0, 2])


class TestAlignment:
    def test_identical(self):
        pts = platonic_vertices("cube")
        assert canonical_align(pts, pts).distance < 1e-12

    @pytest.mark.parametrize("kind", ["tetrahedron", "octahedron", "cube", "icosahedron", "dodecahedron"])
    def test_rotated_solid(self, kind, rng):
        pts = platonic_vertices(kind)
        moved = pts.rotated(Rotation.random(random_state=rng).as_matrix())
        result = canonical_align(moved, pts)
        assert result.distance < 1e-8
        assert np.linalg.det(result.rotation) == pytest.approx(1.0)

    def test_random_cloud(self, rng):
        pts = rng.normal(size=(7, 3))
        a = PointSet.of(pts / np.linalg.norm(pts, axis=1, keepdims=True))
        b = a.rotated(Rotation.random(random_state=rng).as_matrix())
        assert canonical_align(a, b).distance < 1e-8

    def test_octahedron_state_points(self):
        s = SpinState.from_components(6, {2: 1 / math.sqrt(2), -2: 1 / math.sqrt(2)})
        assert canonical_align(state_to_points(s), platonic_vertices("octahedron")).distance < 1e-6

    def test_tetrahedron_is_not_octahedron(self):
        tetra = np.vstack([platonic_vertices("tetrahedron").points, [NORTH, NORTH]])
        assert canonical_align(PointSet.of(tetra), platonic_vertices("octahedron")).distance > 0.1

    def test_size_mismatch(self):
        with pytest.raises(ValueError):
            canonical_align(platonic_vertices("cube"), platonic_vertices("octahedron"))

    def test_bottleneck_matching_brute_force(self, rng):
        from itertools import permutations

        a, b = rng.normal(size=(5, 3)), rng.normal(size=(5, 3))
        dist, perm = bottleneck_matching(a, b)
        best = min(max(np.linalg.norm(a[i] - b[p[i]]) for i in range(5)) for p in permutations(range(5)))
        assert dist == pytest.approx(best)
        assert sorted(perm) == list(range(5))
