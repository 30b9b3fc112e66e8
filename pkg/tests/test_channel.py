"""Channel model tests: attenuation law, flip statistics, gain models."""

import numpy as np
import pytest

from qsdcsim.channel import (
    ChannelParams,
    EveGainModel,
    eve_rate_for,
    eve_reception_rate,
    reception_rate,
    transmit,
    transmit_symbolic,
)
from qsdcsim.quantum import Basis, LOST_PHOTON, LostPhotonError, prepare


def ideal(**overrides) -> ChannelParams:
    base = dict(length_km=0.0, attenuation_db_per_km=0.2, flip_prob_z=0.0, flip_prob_x=0.0)
    base.update(overrides)
    return ChannelParams(**base)


class TestReceptionRates:
    def test_identity_channel(self):
        assert reception_rate(ideal()) == 1.0

    def test_attenuation_law_100km(self):
        # 0.2 dB/km * 100 km = 20 dB -> 10^-2.
        assert reception_rate(ideal(length_km=100.0)) == pytest.approx(0.01, abs=1e-12)

    def test_detector_efficiency_multiplies(self):
        assert reception_rate(ideal(detector_efficiency=0.5)) == pytest.approx(0.5)

    def test_equal_reception_gain(self):
        params = ideal(length_km=37.0, eve_gain=EveGainModel(mode="equal"))
        assert eve_reception_rate(params) == reception_rate(params)

    def test_collecting_worst_case_caps_at_one(self):
        params = ideal(length_km=50.0)  # q_bob = 0.1
        assert reception_rate(params) == pytest.approx(0.1, abs=1e-12)
        assert eve_reception_rate(params) == 1.0

    def test_explicit_gain(self):
        assert eve_rate_for(0.3, EveGainModel(g=2.0)) == pytest.approx(0.6)

    def test_explicit_gain_above_unity_rejected(self):
        with pytest.raises(ValueError):
            eve_rate_for(0.6, EveGainModel(g=2.0))

    def test_gain_model_validation(self):
        with pytest.raises(ValueError):
            EveGainModel(g=0.5)
        with pytest.raises(ValueError):
            EveGainModel(mode="equal", g=2.0)
        with pytest.raises(ValueError):
            EveGainModel(mode="sideways")


class TestScalarTransmit:
    def test_identity_channel_is_lossless_and_exact(self):
        rng = np.random.default_rng(0)
        photon = prepare(Basis.X, 1)
        for _ in range(200):
            out = transmit(photon, ideal(), rng)
            assert not out.photon.lost
            assert out.photon == photon
            assert not out.flipped_z and not out.flipped_x

    def test_loss_is_absorbing(self):
        rng = np.random.default_rng(1)
        with pytest.raises(LostPhotonError):
            transmit(LOST_PHOTON, ideal(), rng)

    def test_lost_photons_carry_no_flip_flags(self):
        rng = np.random.default_rng(2)
        params = ideal(length_km=100.0, flip_prob_z=0.5, flip_prob_x=0.5)
        saw_loss = False
        for _ in range(500):
            out = transmit(prepare(Basis.Z, 0), params, rng)
            if out.photon.lost:
                saw_loss = True
                assert not out.flipped_z and not out.flipped_x
        assert saw_loss

    def test_scalar_flip_statistics(self):
        rng = np.random.default_rng(3)
        params = ideal(flip_prob_z=0.2)
        flips = sum(
            transmit(prepare(Basis.Z, 0), params, rng).photon.bit for _ in range(20_000)
        )
        assert flips / 20_000 == pytest.approx(0.2, abs=0.01)


class TestVectorizedTransmit:
    def test_empirical_arrival_rate_50km(self):
        # Closed-form attenuation: 0.2 dB/km * 50 km -> survival 0.1.
        rng = np.random.default_rng(4)
        n = 100_000
        params = ideal(length_km=50.0)
        bases = np.zeros(n, dtype=np.int8)
        bits = np.zeros(n, dtype=np.int8)
        arrived, _, _, _ = transmit_symbolic(bases, bits, params, rng)
        assert arrived.mean() == pytest.approx(0.1, abs=0.005)

    def test_arrival_within_3_sigma(self):
        rng = np.random.default_rng(5)
        n = 100_000
        for length in (10.0, 30.0):
            params = ideal(length_km=length)
            p = reception_rate(params)
            bases = np.zeros(n, dtype=np.int8)
            arrived, _, _, _ = transmit_symbolic(bases, np.zeros(n, dtype=np.int8), params, rng)
            sigma = np.sqrt(p * (1 - p) / n)
            assert abs(arrived.mean() - p) < 3 * sigma + 1e-9

    def test_z_flip_rate_tracks_flip_prob_z(self):
        rng = np.random.default_rng(6)
        n = 100_000
        params = ideal(flip_prob_z=0.05)
        bases = np.zeros(n, dtype=np.int8)  # all Z
        bits = np.zeros(n, dtype=np.int8)
        arrived, bits_out, _, _ = transmit_symbolic(bases, bits, params, rng)
        assert bits_out[arrived].mean() == pytest.approx(0.05, abs=0.005)

    def test_phase_errors_invisible_in_z_basis(self):
        # flip_prob_x drives sigma_z errors, which do not move Z-basis bits.
        rng = np.random.default_rng(7)
        n = 100_000
        params = ideal(flip_prob_z=0.05, flip_prob_x=0.4)
        bases = np.zeros(n, dtype=np.int8)
        bits = np.zeros(n, dtype=np.int8)
        arrived, bits_out, _, _ = transmit_symbolic(bases, bits, params, rng)
        assert bits_out[arrived].mean() == pytest.approx(0.05, abs=0.005)

    def test_x_flip_rate_tracks_flip_prob_x(self):
        rng = np.random.default_rng(8)
        n = 100_000
        params = ideal(flip_prob_z=0.4, flip_prob_x=0.03)
        bases = np.full(n, int(Basis.X), dtype=np.int8)
        bits = np.zeros(n, dtype=np.int8)
        arrived, bits_out, _, _ = transmit_symbolic(bases, bits, params, rng)
        assert bits_out[arrived].mean() == pytest.approx(0.03, abs=0.005)

    def test_y_basis_flips_under_either_error(self):
        # A sigma_x or sigma_z error flips a Y eigenstate; both together do not.
        rng = np.random.default_rng(9)
        n = 200_000
        fz, fx = 0.1, 0.2
        params = ideal(flip_prob_z=fz, flip_prob_x=fx)
        bases = np.full(n, int(Basis.Y), dtype=np.int8)
        bits = np.zeros(n, dtype=np.int8)
        arrived, bits_out, _, _ = transmit_symbolic(bases, bits, params, rng)
        expected = fz * (1 - fx) + fx * (1 - fz)
        assert bits_out[arrived].mean() == pytest.approx(expected, abs=0.005)

    def test_scalar_and_vector_paths_agree_statistically(self):
        params = ideal(flip_prob_z=0.15, flip_prob_x=0.1, length_km=5.0)
        rng1 = np.random.default_rng(10)
        n = 40_000
        scalar_lost = 0
        scalar_flipped = 0
        arrived_count = 0
        for _ in range(n):
            out = transmit(prepare(Basis.Z, 0), params, rng1)
            if out.photon.lost:
                scalar_lost += 1
            else:
                arrived_count += 1
                scalar_flipped += out.photon.bit
        rng2 = np.random.default_rng(11)
        arrived, bits_out, _, _ = transmit_symbolic(
            np.zeros(n, dtype=np.int8), np.zeros(n, dtype=np.int8), params, rng2
        )
        assert scalar_lost / n == pytest.approx(1 - arrived.mean(), abs=0.01)
        assert scalar_flipped / arrived_count == pytest.approx(
            bits_out[arrived].mean(), abs=0.01
        )


class TestValidation:
    def test_parameter_ranges(self):
        with pytest.raises(ValueError):
            ChannelParams(length_km=-1.0)
        with pytest.raises(ValueError):
            ChannelParams(flip_prob_z=0.6)
        with pytest.raises(ValueError):
            ChannelParams(detector_efficiency=0.0)
        with pytest.raises(ValueError):
            ChannelParams(attenuation_db_per_km=-0.1)

    def test_survival_underflow_rejected(self):
        with pytest.raises(ValueError):
            ChannelParams(length_km=1e6, attenuation_db_per_km=10.0)
