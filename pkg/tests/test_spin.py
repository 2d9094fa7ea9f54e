from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from spinalign.spin import (
    SpinState,
    build_angular_momentum,
    expectation,
    m_index,
    random_rotation_vector,
    random_state,
    rotate,
    rotation_derivatives,
    rotation_operator,
    sqrt_binomials,
)


def octahedron_state():
    return SpinState.from_components(6, {2: 1 / math.sqrt(2), -2: 1 / math.sqrt(2)})


class TestAngularMomentum:
    def test_spin_half_is_half_pauli(self):
        ops = build_angular_momentum(1)
        np.testing.assert_allclose(ops.jz, np.diag([-0.5, 0.5]))
        np.testing.assert_allclose(ops.jx, [[0, 0.5], [0.5, 0]])
        np.testing.assert_allclose(ops.jy, [[0, 0.5j], [-0.5j, 0]])

    def test_spin_one_ladder(self):
        jx = build_angular_momentum(2).jx
        off = 1 / math.sqrt(2)
        np.testing.assert_allclose(jx, [[0, off, 0], [off, 0, off], [0, off, 0]])

    @pytest.mark.parametrize("two_j", range(0, 41))
    def test_commutators_and_casimir(self, two_j):
        ops = build_angular_momentum(two_j)
        jx, jy, jz = ops.components
        j = two_j / 2
        for a, b, c in [(jx, jy, jz), (jy, jz, jx), (jz, jx, jy)]:
            assert np.max(np.abs(a @ b - b @ a - 1j * c), initial=0) < 1e-10
        casimir = jx @ jx + jy @ jy + jz @ jz
        assert np.max(np.abs(casimir - j * (j + 1) * np.eye(two_j + 1))) < 1e-10
        for op in ops.components:
            assert np.max(np.abs(op - op.conj().T), initial=0) < 1e-12

    def test_raising_moves_m_up(self):
        ops = build_angular_momentum(4)
        up = ops.raising() @ SpinState.basis(4, 0).amplitudes
        assert np.flatnonzero(np.abs(up) > 0).tolist() == [m_index(4, 1)]
        assert abs(up[m_index(4, 1)]) == pytest.approx(math.sqrt(6))

    def test_matrices_are_read_only(self):
        with pytest.raises(ValueError):
            build_angular_momentum(2).jx[0, 0] = 1


class TestSpinState:
    def test_rejects_wrong_length(self):
        with pytest.raises(ValueError):
            SpinState(2, [1, 0])

    def test_rejects_unnormalized(self):
        with pytest.raises(ValueError):
            SpinState(1, [1, 1])

    def test_half_integer_index(self):
        assert m_index(3, 0.5) == 2
        assert m_index(3, -1.5) == 0
        with pytest.raises(ValueError):
            m_index(3, 1)
        with pytest.raises(ValueError):
            m_index(2, 2)

    def test_fidelity_ignores_global_phase(self, rng):
        s = random_state(5, rng)
        t = SpinState(5, np.exp(0.7j) * s.amplitudes)
        assert s.fidelity(t) == pytest.approx(1.0)
        assert np.allclose(s.gauge_fixed().amplitudes, t.gauge_fixed().amplitudes)

    def test_large_n_binomials(self):
        b = sqrt_binomials(120)
        assert np.all(np.isfinite(b))
        assert b[60] ** 2 == pytest.approx(math.comb(120, 60), rel=1e-12)


class TestExpectation:
    @pytest.mark.parametrize("n", [1, 4, 7])
    def test_highest_weight(self, n):
        ops = build_angular_momentum(n)
        top = SpinState.basis(n, n / 2)
        assert expectation(top, ops.jz) == pytest.approx(n / 2)
        assert expectation(top, ops.jx) == pytest.approx(0.0)

    def test_octahedron_jz_squared(self):
        jz = build_angular_momentum(6).jz
        assert expectation(octahedron_state(), jz @ jz) == pytest.approx(4.0)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            expectation(SpinState.basis(2, 0), np.eye(2))

    def test_non_hermitian(self):
        with pytest.raises(ValueError):
            expectation(SpinState.basis(1, 0.5), np.array([[0, 1], [0, 0]]))

    def test_linear_in_observable(self, rng):
        s = random_state(4, rng)
        ops = build_angular_momentum(4)
        combo = 2 * ops.jx - 3 * ops.jz @ ops.jz
        expected = 2 * expectation(s, ops.jx) - 3 * expectation(s, ops.jz @ ops.jz)
        assert expectation(s, combo) == pytest.approx(expected)


class TestRotate:
    def test_identity(self, rng):
        s = random_state(5, rng)
        assert np.allclose(rotate(s, [0, 0, 0]).amplitudes, s.amplitudes)

    @pytest.mark.parametrize("m", [-1.5, -0.5, 0.5, 1.5])
    def test_z_rotation_phase(self, m):
        s = SpinState.basis(3, m)
        out = rotate(s, [0, 0, math.pi])
        np.testing.assert_allclose(out.amplitudes, np.exp(1j * math.pi * m) * s.amplitudes, atol=1e-12)

    @pytest.mark.parametrize("n", [1, 2, 5, 9])
    def test_matches_series_exponential(self, n, rng):
        theta = random_rotation_vector(rng)
        gen = build_angular_momentum(n).along(theta)
        np.testing.assert_allclose(rotation_operator(n, theta), expm(1j * gen), atol=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(
        n=st.integers(1, 10),
        a=st.floats(-6, 6),
        b=st.floats(-6, 6),
        seed=st.integers(0, 2**32 - 1),
    )
    def test_z_rotations_compose(self, n, a, b, seed):
        s = random_state(n, np.random.default_rng(seed))
        twice = rotate(rotate(s, [0, 0, a]), [0, 0, b])
        once = rotate(s, [0, 0, a + b])
        assert twice.fidelity(once) == pytest.approx(1.0, abs=1e-9)
        assert np.linalg.norm(twice.amplitudes) == pytest.approx(1.0, abs=1e-10)

    def test_rejects_bad_vector(self):
        with pytest.raises(ValueError):
            rotate(SpinState.basis(1, 0.5), [0, 0])
        with pytest.raises(ValueError):
            rotate(SpinState.basis(1, 0.5), [0, np.nan, 0])


class TestRotationDerivatives:
    @pytest.mark.parametrize("n", [1, 3, 6])
    def test_against_central_differences(self, n, rng):
        s = random_state(n, rng)
        theta = random_rotation_vector(rng, 1.0)
        exact = rotation_derivatives(s, theta)
        h = 1e-6
        for i in range(3):
            e = np.zeros(3)
            e[i] = h
            fd = (rotation_operator(n, theta + e) - rotation_operator(n, theta - e)) @ s.amplitudes / (2 * h)
            np.testing.assert_allclose(exact[i], fd, atol=1e-8)

    def test_at_origin_is_i_j_psi(self, rng):
        s = random_state(4, rng)
        ops = build_angular_momentum(4)
        d = rotation_derivatives(s, [0, 0, 0])
        for i, op in enumerate(ops.components):
            np.testing.assert_allclose(d[i], 1j * op @ s.amplitudes, atol=1e-13)
