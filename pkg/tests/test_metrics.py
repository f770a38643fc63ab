import numpy as np
import pytest
from numpy.testing import assert_allclose

from qmb import (SystemParams, choi_bounds, diamond_distance, diamond_norm,
                 ideal_channel, mixing_angle, nigg_girvin_channel,
                 partial_trace, trace_norm)
from qmb.channels import choi_from_pairs
from qmb.metrics import VALUE_FLOOR
from oracles import (diamond_lower_bruteforce, random_cp_choi, random_density,
                     random_unitary)


def identity_choi(d):
    return choi_from_pairs(np.array([[1.0]]), np.eye(d)[None, :, :])


def depolarizing_choi(d):
    # E(rho) = tr(rho) I / d  ->  J = (I/d) (x) I
    return np.kron(np.eye(d) / d, np.eye(d))


class TestTraceNorm:
    def test_identity(self):
        assert trace_norm(np.eye(4)) == pytest.approx(4.0)

    def test_rank_one(self):
        v = np.array([1.0, 2.0, -1.0, 0.5j])
        assert trace_norm(np.outer(v, v.conj())) == pytest.approx(
            np.linalg.norm(v) ** 2)

    def test_hermitian_matches_svd_path(self, rng):
        a = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
        h = (a + a.conj().T) / 2
        svd_oracle = np.linalg.svd(h, compute_uv=False).sum()
        assert trace_norm(h) == pytest.approx(svd_oracle, rel=1e-12)

    def test_unitary_invariance(self, rng):
        a = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
        u, v = random_unitary(6, rng), random_unitary(6, rng)
        assert trace_norm(u @ a @ v) == pytest.approx(trace_norm(a), rel=1e-12)

    def test_non_square_rejected(self):
        with pytest.raises(ValueError, match="square"):
            trace_norm(np.ones((3, 4)))

    def test_zero(self):
        assert trace_norm(np.zeros((4, 4))) == 0.0


class TestPartialTrace:
    def test_identity_channel_output_trace(self):
        assert_allclose(partial_trace(identity_choi(4), "output"), np.eye(4),
                        atol=1e-14)

    def test_kron_factors(self, rng):
        a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        b = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        j = np.kron(a, b)  # output factor first
        assert_allclose(partial_trace(j, "output"), np.trace(a) * b, atol=1e-12)
        assert_allclose(partial_trace(j, "input"), np.trace(b) * a, atol=1e-12)

    def test_trace_preserved(self, rng):
        j = random_cp_choi(4, 3, rng)
        for which in ("output", "input"):
            assert np.trace(partial_trace(j, which)) == pytest.approx(
                np.trace(j), rel=1e-13)

    def test_readout_outcome_pair_is_trace_preserving(self, fig2_params):
        jp = nigg_girvin_channel(fig2_params, +1).choi
        jm = nigg_girvin_channel(fig2_params, -1).choi
        assert np.abs(partial_trace(jp + jm, "output") - np.eye(4)).max() <= 1e-12

    def test_size_mismatch_rejected(self):
        with pytest.raises(ValueError, match="square"):
            partial_trace(np.ones((8, 6)))
        with pytest.raises(ValueError, match="perfect square"):
            partial_trace(np.ones((6, 6)))


class TestChoiBounds:
    def test_trace_preserving_cp_bracket(self, rng):
        k = [random_unitary(4, rng)]
        j = choi_from_pairs(np.eye(1), np.array(k))
        lo, hi = choi_bounds(j)
        assert lo == pytest.approx(1.0, rel=1e-12)
        assert hi == pytest.approx(4.0, rel=1e-12)

    def test_zero_map(self):
        assert choi_bounds(np.zeros((16, 16))) == (0.0, 0.0)

    def test_bracket_scales_linearly(self, fig2_params):
        j1 = nigg_girvin_channel(fig2_params, +1).choi \
            - ideal_channel(fig2_params, 0.0, +1, variant="diagonal").choi
        lo1, hi1 = choi_bounds(j1)
        lo2, hi2 = choi_bounds(0.125 * j1)
        assert lo2 == pytest.approx(lo1 / 8, rel=1e-12)
        assert hi2 == pytest.approx(hi1 / 8, rel=1e-12)


class TestDiamondNorm:
    def test_identity_channel(self):
        res = diamond_norm(identity_choi(4), tol=1e-7)
        assert res.status == "converged"
        assert res.value == pytest.approx(1.0, abs=1e-7)
        assert res.lower_cert <= res.value <= res.upper_cert

    def test_identity_vs_depolarizing_qubit(self):
        j = identity_choi(2) - depolarizing_choi(2)
        res = diamond_norm(j, tol=1e-7)
        assert res.value == pytest.approx(1.5, abs=1e-4)
        oracle = diamond_lower_bruteforce(j, 2, samples=2000, seed=3)
        assert oracle == pytest.approx(1.5, abs=1e-4)
        assert res.upper_cert >= oracle - 1e-9

    def test_cp_maps_match_marginal_spectral_norm(self, rng):
        for _ in range(6):
            j = random_cp_choi(4, 2, rng)
            res = diamond_norm(j, tol=1e-7)
            expected = np.linalg.norm(partial_trace(j, "output"), 2)
            assert res.value == pytest.approx(expected, abs=1e-7)
            assert res.status == "converged"

    def test_bracket_always_contains_value(self, rng):
        for _ in range(5):
            a = rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16))
            j = (a + a.conj().T) / 2
            res = diamond_norm(j, tol=1e-6)
            lo, hi = choi_bounds(j)
            assert lo - 1e-9 <= res.value <= hi + 1e-9
            assert res.lower_cert <= res.value <= res.upper_cert

    def test_bruteforce_oracle_on_channel_differences(self, rng):
        # qubit-channel differences: optimizer vs pure-state maximization
        for k in range(10):
            j = (random_cp_choi(2, 2, rng) - random_cp_choi(2, 2, rng)) / 4
            res = diamond_norm(j, tol=1e-7)
            oracle = diamond_lower_bruteforce(j, 2, samples=800, seed=100 + k)
            assert oracle <= res.upper_cert + 1e-9
            assert res.value == pytest.approx(oracle, abs=max(1e-7, 1e-4 * oracle))

    def test_tiny_difference_reports_bounds(self):
        j = np.zeros((16, 16))
        j[0, 0] = 1e-12
        res = diamond_norm(j, tol=1e-15)
        assert res.status == "bound_only"
        assert res.lower_cert == pytest.approx(1e-12 / 4)
        assert res.upper_cert == pytest.approx(1e-12)
        assert res.iterations == 0

    def test_zero_map(self):
        res = diamond_norm(np.zeros((16, 16)), tol=1e-7)
        assert res.value == 0.0
        assert res.status == "bound_only"  # below the floor: bracket only

    def test_floor_value(self):
        assert VALUE_FLOOR == 1e-9

    def test_non_hermitian_rejected(self):
        j = np.zeros((16, 16), dtype=complex)
        j[0, 1] = 1.0
        with pytest.raises(ValueError, match="Hermitian"):
            diamond_norm(j)

    def test_bad_shape_rejected(self):
        with pytest.raises(ValueError):
            diamond_norm(np.eye(6))  # 6 is not a perfect square
        with pytest.raises(ValueError):
            diamond_norm(np.ones((16, 12)))

    def test_deterministic(self, fig2_params):
        j = nigg_girvin_channel(fig2_params, +1).choi \
            - ideal_channel(fig2_params, 0.0, +1, variant="diagonal").choi
        a = diamond_norm(j, tol=1e-7)
        b = diamond_norm(j, tol=1e-7)
        assert a == b  # bitwise: solver and refinement are deterministic


class TestDiamondDistance:
    def test_identical_channels_give_zero(self, fig2_params):
        ch = nigg_girvin_channel(fig2_params, +1)
        res = diamond_distance(ch, ch, tol=1e-7)
        assert res.value <= 1e-7

    def test_symmetry(self, fig2_params):
        ng = nigg_girvin_channel(fig2_params, +1)
        ref = ideal_channel(fig2_params, 0.0, +1, variant="diagonal")
        d_ab = diamond_distance(ng, ref, tol=1e-9)
        d_ba = diamond_distance(ref, ng, tol=1e-9)
        assert d_ab.value == pytest.approx(d_ba.value, abs=1e-9)

    def test_unitary_conjugation_invariance(self, fig2_params, rng):
        ng = nigg_girvin_channel(fig2_params, +1).choi
        ref = ideal_channel(fig2_params, 0.0, +1, variant="diagonal").choi
        base = diamond_norm(ng - ref, tol=1e-9).value
        u = random_unitary(4, rng)
        uu = np.kron(u, np.eye(4))  # conjugate the output of both channels
        rotated = diamond_norm(uu @ (ng - ref) @ uu.conj().T, tol=1e-9).value
        assert rotated == pytest.approx(base, abs=1e-8)

    def test_pair_sum_bounded_by_two(self, fig2_params):
        # difference of two trace-non-increasing CP maps stays within [0, 2]
        ng = nigg_girvin_channel(fig2_params, +1)
        ref = ideal_channel(fig2_params, 0.01, +1, variant="literal")
        res = diamond_distance(ng, ref, tol=1e-7)
        assert 0.0 <= res.value <= 2.0

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValueError, match="mismatch"):
            diamond_distance(np.eye(16), np.eye(4))
