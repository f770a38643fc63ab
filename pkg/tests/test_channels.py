import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy.special import erf

from qmb import (SystemParams, TruncationWarning, apply, chi_matrix,
                 g_coefficient, g_coefficient_table, ideal_channel,
                 mixing_angle, nigg_girvin_channel, partial_trace, propagator)
from oracles import g_overlap_quadrature, random_density

FIG2 = SystemParams.from_delta0(102.0, 3.8, 5.0, alpha=2.0, n_max=40)


# ---------------------------------------------------------------------------
# phase-space overlap coefficients
# ---------------------------------------------------------------------------

class TestGCoefficient:
    def test_even_difference_has_no_offdiagonal(self):
        assert g_coefficient(1.3, +1, 0, 2, +1) == 0.0
        assert g_coefficient(1.3, +1, 1, 3, +1) == 0.0

    def test_magnitude_and_sign_of_first_offdiagonal(self):
        # frozen from the halfplane quadrature oracle: for outcome + with
        # positive shift the (n=0, m=1) element is -i e^{-1} / (2 sqrt(pi))
        got = g_coefficient(1.0, +1, 0, 1, +1)
        assert got.real == 0.0
        assert got.imag == pytest.approx(-0.1037768743551487, rel=1e-12)
        assert g_coefficient(1.0, +1, 1, 0, +1).imag == pytest.approx(
            +0.1037768743551487, rel=1e-12)

    @pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
    @pytest.mark.parametrize("x", [+1, -1])
    def test_quadrature_oracle(self, alpha, x):
        for n in range(7):
            for m in range(7):
                expected = g_overlap_quadrature(alpha, x, n, m, +1)
                got = g_coefficient(alpha, x, n, m, +1)
                assert abs(got - expected) <= 1e-8

    def test_halfplane_orientation_flips_with_shift_sign(self):
        for n, m in [(0, 1), (2, 3), (1, 4)]:
            assert g_coefficient(1.5, +1, n, m, -1) == pytest.approx(
                g_overlap_quadrature(1.5, +1, n, m, -1), abs=1e-10)
            assert g_coefficient(1.5, +1, n, m, -1) == \
                g_coefficient(1.5, -1, n, m, +1)

    def test_poisson_normalization(self):
        total = sum((g_coefficient(2.0, +1, n, n, +1)
                     + g_coefficient(2.0, -1, n, n, +1)).real
                    for n in range(41))
        assert total == pytest.approx(1.0, abs=1e-12)

    @given(st.sampled_from([0.5, 1.0, 2.0, 3.0]),
           st.integers(0, 12), st.integers(0, 12))
    @settings(max_examples=150, deadline=None)
    def test_hermitian_symmetry(self, alpha, n, m):
        assert g_coefficient(alpha, +1, n, m, +1) == pytest.approx(
            np.conj(g_coefficient(alpha, +1, m, n, +1)), rel=1e-12, abs=1e-300)

    def test_table_matches_scalar(self):
        table = g_coefficient_table(1.7, -1, 8, +1)
        for n in range(9):
            for m in range(9):
                assert table[n, m] == pytest.approx(
                    g_coefficient(1.7, -1, n, m, +1), rel=1e-12, abs=1e-300)

    def test_table_exactly_hermitian(self):
        table = g_coefficient_table(2.0, +1, 40, +1)
        assert np.array_equal(table, table.conj().T)

    def test_large_arguments_stay_finite(self):
        table = g_coefficient_table(3.0, +1, 400, +1)
        assert np.isfinite(table).all()

    def test_zero_amplitude_is_fair_coin(self):
        table = g_coefficient_table(0.0, +1, 5, +1)
        expected = np.zeros_like(table)
        expected[0, 0] = 0.5
        assert_allclose(table, expected)


# ---------------------------------------------------------------------------
# finite-SNR process matrix
# ---------------------------------------------------------------------------

class TestChiMatrix:
    def test_zero_amplitude(self):
        assert_allclose(chi_matrix(0.0, +1), 0.25 * np.ones((2, 2)) * 2)

    def test_reference_values(self):
        w = chi_matrix(2.0, +1)
        assert w[0, 0] == pytest.approx(0.5 * (1 + erf(2.0)), rel=1e-14)
        assert w[1, 1] == pytest.approx(0.5 * (1 - erf(2.0)), rel=1e-14)
        assert w[0, 1] == pytest.approx(1.6773131395125593e-4, rel=1e-10)

    def test_large_amplitude_limit(self):
        assert_allclose(chi_matrix(30.0, +1), np.diag([1.0, 0.0]), atol=1e-15)

    @given(st.floats(0.0, 5.0))
    @settings(max_examples=60, deadline=None)
    def test_outcome_completeness(self, alpha):
        total = chi_matrix(alpha, +1) + chi_matrix(alpha, -1)
        assert total[0, 0] == pytest.approx(1.0)
        assert total[1, 1] == pytest.approx(1.0)
        assert total[0, 1] == pytest.approx(math.exp(-2 * alpha ** 2), rel=1e-12)

    @given(st.floats(0.0, 5.0), st.sampled_from([+1, -1]))
    @settings(max_examples=60, deadline=None)
    def test_positive_semidefinite(self, alpha, x):
        assert np.linalg.eigvalsh(chi_matrix(alpha, x)).min() >= -1e-15


# ---------------------------------------------------------------------------
# readout channel
# ---------------------------------------------------------------------------

class TestNiggGirvinChannel:
    def test_completeness_and_positivity(self):
        jp = nigg_girvin_channel(FIG2, +1).choi
        jm = nigg_girvin_channel(FIG2, -1).choi
        marg = partial_trace(jp + jm, "output")
        assert np.abs(marg - np.eye(4)).max() <= 1e-12
        assert np.linalg.eigvalsh(jp).min() >= -1e-10
        assert np.linalg.eigvalsh(jm).min() >= -1e-10

    def test_choi_hermitian(self):
        j = nigg_girvin_channel(FIG2, +1).choi
        assert np.abs(j - j.conj().T).max() <= 1e-12

    def test_zero_amplitude_fair_coin(self):
        p = SystemParams.from_delta0(102.0, 3.8, 5.0, alpha=0.0, n_max=5)
        ch = nigg_girvin_channel(p, +1)
        rho = np.eye(4) / 4
        out = apply(ch, rho)
        q0 = propagator(p, 0.0, p.t_m)
        assert_allclose(out, 0.5 * q0 @ rho @ q0.conj().T, atol=1e-14)
        assert np.trace(out).real == pytest.approx(0.5)

    def test_truncation_warning(self):
        p = SystemParams.from_delta0(102.0, 3.8, 5.0, alpha=2.0, n_max=12)
        with pytest.warns(TruncationWarning):
            nigg_girvin_channel(p, +1)

    def test_uncoupled_factorizes_through_free_evolution(self):
        # J = 0: the channel equals the finite-SNR bare reference exactly
        p = SystemParams.from_delta0(102.0, 0.0, 5.0, alpha=2.0, n_max=40)
        ng = nigg_girvin_channel(p, +1)
        ref = ideal_channel(p, 0.0, +1, variant="diagonal", snr="finite")
        assert np.abs(ng.choi - ref.choi).max() <= 1e-12

    def test_uncoupled_factorizes_negative_shift(self):
        p = SystemParams.from_delta0(102.0, 0.0, -5.0, alpha=2.0, n_max=40)
        ng = nigg_girvin_channel(p, +1)
        ref = ideal_channel(p, 0.0, +1, variant="diagonal", snr="finite")
        assert np.abs(ng.choi - ref.choi).max() <= 1e-12

    def test_gauge_shift_conjugates_choi(self):
        shifted = FIG2.shifted(77.0)
        j0 = nigg_girvin_channel(FIG2, +1).choi
        j1 = nigg_girvin_channel(shifted, +1).choi
        phase = np.exp(1j * 77.0 * FIG2.t_m)
        v = np.diag([phase, 1.0, 1.0, phase.conjugate()])
        vv = np.kron(v, np.eye(4))
        assert np.abs(j1 - vv @ j0 @ vv.conj().T).max() <= 1e-12

    def test_outcome_label_validated(self):
        with pytest.raises(ValueError, match="outcome"):
            nigg_girvin_channel(FIG2, 0)


class TestIdealChannel:
    def test_variants_coincide_at_dressed_angle(self):
        g0 = mixing_angle(FIG2, 0.0)
        a = ideal_channel(FIG2, g0, +1, variant="diagonal", snr="perfect")
        b = ideal_channel(FIG2, g0, +1, variant="literal", snr="perfect")
        assert np.abs(a.choi - b.choi).max() <= 1e-12

    def test_bare_limit_is_projector_after_free_phases(self):
        # gamma = 0, perfect SNR: project qubit 1 after free qubit evolution
        ch = ideal_channel(FIG2, 0.0, +1, variant="diagonal", snr="perfect")
        u0 = np.diag(np.exp(1j * FIG2.t_m / 2 * np.array(
            [FIG2.omega1 + FIG2.omega2, FIG2.omega1 - FIG2.omega2,
             FIG2.omega2 - FIG2.omega1, -(FIG2.omega1 + FIG2.omega2)])))
        p0 = np.diag([1.0, 1.0, 0.0, 0.0])
        rng = np.random.default_rng(5)
        for _ in range(5):
            rho = random_density(4, rng)
            expected = p0 @ u0 @ rho @ u0.conj().T @ p0
            assert_allclose(apply(ch, rho), expected, atol=1e-12)

    def test_literal_rejected_at_bare_angle(self):
        with pytest.raises(ValueError, match="n\\(gamma\\) diverges"):
            ideal_channel(FIG2, 0.0, +1, variant="literal")

    def test_eigenstate_outcome_probability(self):
        # the gamma-rotated |01>-like state lands in the + block: p = (1+erf a)/2
        gamma = 0.011
        ch = ideal_channel(FIG2, gamma, +1, variant="literal", snr="finite")
        rot = np.array([[1, 0, 0, 0],
                        [0, math.cos(gamma), -math.sin(gamma), 0],
                        [0, math.sin(gamma), math.cos(gamma), 0],
                        [0, 0, 0, 1.0]])
        state = rot @ np.array([0.0, 1.0, 0.0, 0.0])
        rho = np.outer(state, state)
        prob = np.trace(apply(ch, rho)).real
        assert prob == pytest.approx(0.5 * (1 + erf(2.0)), rel=1e-12)

    def test_snr_weights_sum_to_trace_preserving_pair(self):
        ch_p = ideal_channel(FIG2, 0.009, +1, variant="literal", snr="finite")
        ch_m = ideal_channel(FIG2, 0.009, -1, variant="literal", snr="finite")
        marg = partial_trace(ch_p.choi + ch_m.choi, "output")
        assert np.abs(marg - np.eye(4)).max() <= 1e-12

    def test_unknown_variant_rejected(self):
        with pytest.raises(ValueError, match="variant"):
            ideal_channel(FIG2, 0.01, +1, variant="exact")


class TestApply:
    def test_outcome_pair_preserves_trace(self):
        rng = np.random.default_rng(17)
        rho = random_density(4, rng)
        total = sum(np.trace(apply(nigg_girvin_channel(FIG2, x), rho)).real
                    for x in (+1, -1))
        assert total == pytest.approx(1.0, abs=1e-12)

    def test_outcome_probability_in_unit_interval(self):
        rng = np.random.default_rng(3)
        ch = nigg_girvin_channel(FIG2, +1)
        for _ in range(5):
            rho = random_density(4, rng)
            out = apply(ch, rho)
            tr = np.trace(out).real
            assert -1e-12 <= tr <= 1.0 + 1e-12
            assert np.linalg.eigvalsh((out + out.conj().T) / 2).min() >= -1e-10

    def test_pair_and_choi_paths_agree(self):
        rng = np.random.default_rng(99)
        channels = [nigg_girvin_channel(FIG2, +1),
                    ideal_channel(FIG2, 0.012, +1, variant="literal", snr="finite")]
        for ch in channels:
            for _ in range(10):
                rho = random_density(4, rng)
                assert_allclose(apply(ch, rho, via="pairs"),
                                apply(ch, rho, via="choi"), atol=1e-12)

    def test_non_density_rejected(self):
        ch = nigg_girvin_channel(FIG2, +1)
        with pytest.raises(ValueError, match="Hermitian"):
            apply(ch, np.array([[1.0, 1.0], [0.0, 0.0]]).repeat(2, 0).repeat(2, 1))
        with pytest.raises(ValueError, match="trace"):
            apply(ch, np.eye(4))
        with pytest.raises(ValueError, match="positive"):
            apply(ch, np.diag([1.5, -0.5, 0.0, 0.0]))


class TestTruncationConvergence:
    def test_distance_stable_under_deeper_cutoff(self):
        from qmb import diamond_distance

        for n_max in (40, 50):
            p = SystemParams.from_delta0(102.0, 3.8, 5.0, alpha=2.0, n_max=n_max)
            ng = nigg_girvin_channel(p, +1)
            ref = ideal_channel(p, mixing_angle(p, 0.0), +1,
                                variant="literal", snr="perfect")
            d = diamond_distance(ng, ref, tol=1e-9).value
            if n_max == 40:
                base = d
        assert abs(d - base) <= 1e-8
