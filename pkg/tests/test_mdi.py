"""Relay-protocol tests: honest/dishonest relay, teleportation fidelity,
Bell-outcome consistency table."""

import numpy as np
import pytest

from qsdcsim.channel import ChannelParams
from qsdcsim.dl04 import E_DECISION, E_ENCODING, MessageCapacityError
from qsdcsim.eavesdrop import InterceptResend
from qsdcsim.mdi import CONSISTENT_OUTCOMES, MdiConfig, consistent_outcomes, run_mdi_dl04
from qsdcsim.quantum import Basis, KETS, make_bell


def clean_channel(**overrides) -> ChannelParams:
    base = dict(length_km=0.0, flip_prob_z=0.0, flip_prob_x=0.0)
    base.update(overrides)
    return ChannelParams(**base)


class TestConsistencyTable:
    def test_table_matches_linear_algebra(self):
        # Oracle: expand each matched-basis product state in the Bell basis;
        # outcomes with nonzero weight must equal the table entry.
        for basis in (Basis.Z, Basis.X):
            for va in (0, 1):
                for vb in (0, 1):
                    joint = np.kron(KETS[basis][va], KETS[basis][vb])
                    support = {
                        i
                        for i in range(1, 5)
                        if abs(np.vdot(make_bell(i), joint)) ** 2 > 1e-12
                    }
                    assert support == set(consistent_outcomes(basis, va == vb))

    def test_supported_outcomes_are_equiprobable(self):
        for (basis, equal), outcomes in CONSISTENT_OUTCOMES.items():
            va, vb = (0, 0) if equal else (0, 1)
            joint = np.kron(KETS[basis][va], KETS[basis][vb])
            for i in outcomes:
                weight = abs(np.vdot(make_bell(i), joint)) ** 2
                assert weight == pytest.approx(0.5, abs=1e-12)


class TestHonestRelay:
    def test_ideal_run_recovers_message_exactly(self):
        rng = np.random.default_rng(0)
        msg = rng.integers(0, 2, size=128, dtype=np.int8)
        cfg = MdiConfig(n_rounds=2500, channel_alice=clean_channel())
        transcript = run_mdi_dl04(cfg, msg, charlie_honest=True, rng=rng)
        assert not transcript.aborted
        assert transcript.fidelity == 1.0 and transcript.complete
        assert transcript.dber.eps_x == 0.0 and transcript.dber.eps_z == 0.0
        assert transcript.dber.e == 0.0

    def test_detection_precedes_encoding(self):
        rng = np.random.default_rng(1)
        cfg = MdiConfig(n_rounds=1500, channel_alice=clean_channel())
        transcript = run_mdi_dl04(cfg, "1010", charlie_honest=True, rng=rng)
        assert transcript.events.index(E_DECISION) < transcript.events.index(E_ENCODING)

    def test_channel_noise_shows_in_detection_rounds(self):
        rng = np.random.default_rng(2)
        cfg = MdiConfig(
            n_rounds=8000,
            channel_alice=clean_channel(flip_prob_z=0.04),
            detection_abort_threshold=0.4,
        )
        transcript = run_mdi_dl04(cfg, "1010", charlie_honest=True, rng=rng)
        # A bit flip on either incoming photon breaks the expected
        # correlation class; each leg contributes its flip rate.
        assert transcript.dber.eps_z == pytest.approx(0.08, abs=0.02)

    def test_lossy_legs_still_deliver(self):
        rng = np.random.default_rng(3)
        cfg = MdiConfig(n_rounds=30_000, channel_alice=clean_channel(length_km=5.0))
        transcript = run_mdi_dl04(cfg, "10" * 16, charlie_honest=True, rng=rng)
        assert not transcript.aborted
        assert transcript.fidelity == 1.0

    def test_message_capacity_error(self):
        rng = np.random.default_rng(4)
        with pytest.warns(UserWarning):
            cfg = MdiConfig(n_rounds=60, channel_alice=clean_channel())
        with pytest.raises(MessageCapacityError):
            run_mdi_dl04(cfg, "1" * 200, charlie_honest=True, rng=rng)


class TestDishonestRelay:
    def test_random_announcements_break_correlations(self):
        rng = np.random.default_rng(5)
        cfg = MdiConfig(n_rounds=4000, channel_alice=clean_channel())
        transcript = run_mdi_dl04(cfg, "1010", charlie_honest=False, rng=rng)
        assert transcript.aborted
        assert transcript.abort_reason == "dber_above_threshold"
        # Uniform announcements land in the consistent set half the time.
        assert transcript.dber.pooled == pytest.approx(0.5, abs=0.05)

    def test_detection_probability_over_sessions(self):
        rng = np.random.default_rng(6)
        cfg = MdiConfig(n_rounds=1200, channel_alice=clean_channel())
        aborts = sum(
            run_mdi_dl04(cfg, "1010", charlie_honest=False, rng=rng).aborted
            for _ in range(25)
        )
        assert aborts == 25


class TestEavesdropperOnLegs:
    def test_full_interception_is_detected(self):
        rng = np.random.default_rng(7)
        eve = InterceptResend("random_zx", fraction=1.0)
        cfg = MdiConfig(n_rounds=4000, channel_alice=clean_channel())
        transcript = run_mdi_dl04(cfg, "1010", eve=eve, charlie_honest=True, rng=rng)
        assert transcript.dber.pooled > 0.12
        assert transcript.aborted
