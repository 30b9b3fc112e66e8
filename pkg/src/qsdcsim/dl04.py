"""Two-way single-photon protocol engine.

One session runs four phases over a quantum channel with an optional live
eavesdropper:

1. Initialization: the receiver (Bob) prepares N photons in random Z/X
   eigenstates and sends them forward.
2. Eavesdropping detection: the sender (Alice) measures a random sample of
   the arrived photons in random bases and both parties compare notes over
   the classical channel, estimating the per-basis detected bit error rates.
   The session aborts here if either rate exceeds its threshold; no message
   bit is ever encoded before this decision.
3. Encoding: Alice encodes bits on the retained photons, identity for 0 and
   iY for 1, interleaving known check bits at a fixed interval.  In masked
   mode she first XORs the message with a local random pad.
4. Return and integrity: photons travel back, Bob measures each in its
   original preparation basis and decodes the flip, the check bits give the
   post-encoding error rate, and the session aborts if it is too high.  In
   masked mode Bob first announces which photons arrived and Alice reveals
   the pad bits only for those positions, so bits carried by photons that
   never arrived stay uniformly random to everyone else.

The engine is fully vectorized over photons; per-round data is kept in
columnar numpy arrays.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .bits import as_bit_array, bits_to_string, random_bits
from .channel import ChannelParams, EveGainModel, eve_rate_for, transmit_symbolic
from .eavesdrop import EveStrategy, intercept_symbolic
from .quantum import Basis
from .security import CapacityReport, DberEstimate, secrecy_capacity

# Ordered protocol events recorded in every transcript.  Tests assert that
# E_DECISION precedes E_ENCODING: detection happens before any message bit
# touches a photon.
E_INIT = "initialization"
E_FORWARD = "forward_transmission"
E_DETECTION = "detection"
E_DECISION = "detection_decision"
E_ENCODING = "encoding"
E_BACKWARD = "backward_transmission"
E_MEASUREMENT = "measurement"
E_ARRIVAL_ANNOUNCE = "arrival_announcement"
E_PAD_ANNOUNCE = "pad_announcement"
E_INTEGRITY = "integrity_check"
E_ABORT = "abort"
E_COMPLETE = "complete"


class MessageCapacityError(ValueError):
    """Message longer than the retained photons can carry."""


@dataclass(frozen=True)
class Dl04Config:
    """Session parameters for one two-way run."""

    n_photons: int
    channel: ChannelParams
    backward_channel: ChannelParams | None = None  # defaults to the forward leg
    check_fraction: float = 0.1
    dber_abort_threshold: float = 0.12
    qber_abort_threshold: float = 0.12
    incum: bool = False
    check_bit_interval: int = 10  # every k-th encoded slot carries a known bit
    capacity_mode: str = "two_basis"

    def __post_init__(self):
        if self.n_photons < 1:
            raise ValueError("n_photons must be >= 1")
        if not 0.0 < self.check_fraction < 1.0:
            raise ValueError("check_fraction must be in (0, 1)")
        for name in ("dber_abort_threshold", "qber_abort_threshold"):
            t = getattr(self, name)
            if not 0.0 < t < 0.5:
                raise ValueError(f"{name} must be in (0, 0.5)")
        if self.check_bit_interval < 2:
            raise ValueError("check_bit_interval must be >= 2")
        if self.check_fraction * self.n_photons < 100:
            warnings.warn(
                "fewer than 100 expected detection rounds; DBER estimates will be unstable",
                stacklevel=2,
            )

    @property
    def backward(self) -> ChannelParams:
        return self.backward_channel if self.backward_channel is not None else self.channel


@dataclass
class SessionTranscript:
    """Everything observable about one protocol session."""

    protocol: str
    n_photons: int
    sent_bits: np.ndarray
    received_bits: np.ndarray
    received_slots: np.ndarray  # message indices the received bits belong to
    dber: DberEstimate
    capacity: CapacityReport | None
    aborted: bool
    abort_reason: str | None
    events: list[str]
    rounds: dict[str, np.ndarray] | None
    n_encoded: int = 0
    n_encoded_arrived: int = 0

    @property
    def fidelity(self) -> float | None:
        """Fraction of received bits matching the sent bits at their slots."""
        if len(self.received_bits) == 0:
            return None
        return float(
            np.mean(self.received_bits == self.sent_bits[self.received_slots])
        )

    @property
    def complete(self) -> bool:
        """True when every message bit made the round trip unharmed."""
        return (
            not self.aborted
            and len(self.received_bits) == len(self.sent_bits)
            and self.fidelity == 1.0
        )

    def to_json_dict(self, include_rounds: bool = True) -> dict:
        doc = {
            "protocol": self.protocol,
            "n_photons": self.n_photons,
            "aborted": self.aborted,
            "abort_reason": self.abort_reason,
            "events": list(self.events),
            "sent_bits": bits_to_string(self.sent_bits),
            "received_bits": bits_to_string(self.received_bits),
            "received_slots": [int(s) for s in self.received_slots],
            "fidelity": self.fidelity,
            "n_encoded": self.n_encoded,
            "n_encoded_arrived": self.n_encoded_arrived,
            "dber": {
                "eps_x": self.dber.eps_x,
                "eps_z": self.dber.eps_z,
                "e": self.dber.e,
                "n_x": self.dber.n_x,
                "n_z": self.dber.n_z,
                "n_e": self.dber.n_e,
            },
            "capacity": None
            if self.capacity is None
            else {
                "q_bob": self.capacity.q_bob,
                "q_eve": self.capacity.q_eve,
                "g": self.capacity.g,
                "e": self.capacity.e,
                "eps_x": self.capacity.eps_x,
                "eps_z": self.capacity.eps_z,
                "c_m": self.capacity.c_m,
                "c_w": self.capacity.c_w,
                "c_s": self.capacity.c_s,
                "c_s_clamped": self.capacity.c_s_clamped,
                "mode": self.capacity.mode,
            },
        }
        if include_rounds and self.rounds is not None:
            doc["rounds"] = {k: v.tolist() for k, v in self.rounds.items()}
        return doc


def slots_needed(message_len: int, check_interval: int) -> int:
    """Smallest slot count whose non-check slots fit the message.

    Slot j carries a check bit when j % check_interval == 0.
    """
    total = message_len
    while True:
        checks = -(-total // check_interval)  # ceil
        if total - checks >= message_len:
            return total
        total = message_len + checks


def check_pattern(n_checks: int) -> np.ndarray:
    """The publicly known check-bit values: alternating 0, 1, 0, 1, ..."""
    return (np.arange(n_checks) % 2).astype(np.int8)


def estimate_dber(
    prep_basis: np.ndarray,
    prep_bit: np.ndarray,
    meas_basis: np.ndarray,
    meas_outcome: np.ndarray,
) -> DberEstimate:
    """Per-basis detected bit error rates from the detection-round log.

    Only rounds where the measurement basis matched the preparation basis
    contribute; a basis with no matched rounds is left with count zero
    (unavailable).
    """
    matched = meas_basis == prep_basis
    errors = matched & (meas_outcome != prep_bit)
    is_z = prep_basis == Basis.Z
    n_z = int(np.sum(matched & is_z))
    n_x = int(np.sum(matched & ~is_z))
    eps_z = float(np.sum(errors & is_z) / n_z) if n_z else 0.0
    eps_x = float(np.sum(errors & ~is_z) / n_x) if n_x else 0.0
    # Small samples can land above 1/2; clamp to the estimate's domain (any
    # rate past 1/2 is equally damning for the abort comparison).
    return DberEstimate(eps_x=min(eps_x, 0.5), eps_z=min(eps_z, 0.5), n_x=n_x, n_z=n_z)


def _measured_capacity(
    dber: DberEstimate, q_bob: float, gain: EveGainModel, mode: str
) -> CapacityReport | None:
    """Capacity report from a session's own measurements, None if the error
    rates needed for the chosen mode were never measured."""
    if not dber.has_e or not dber.has_z or (mode == "two_basis" and not dber.has_x):
        return None
    q_eve = eve_rate_for(q_bob, gain)
    return secrecy_capacity(
        q_bob=q_bob,
        q_eve=q_eve,
        e=dber.e,
        eps_x=dber.eps_x,
        eps_z=dber.eps_z,
        mode=mode,
    )


def run_dl04(
    cfg: Dl04Config,
    message,
    eve: EveStrategy = None,
    rng: np.random.Generator | None = None,
) -> SessionTranscript:
    """Execute one session carrying ``message`` (a bit string or array).

    Aborts (eavesdropper suspected, or integrity check failed) are recorded
    in the transcript, not raised; a message that cannot fit on the retained
    photons raises MessageCapacityError.
    """
    if rng is None:
        rng = np.random.default_rng()
    message = as_bit_array(message)
    n = cfg.n_photons
    events: list[str] = []

    # (1) Initialization: Z/X bases and bits, uniformly at random.
    prep_basis = rng.integers(0, 2, size=n, dtype=np.int8)
    prep_bit = random_bits(n, rng)
    events.append(E_INIT)

    # Forward leg: eavesdropper first, then the lossy/noisy fiber.
    fwd_basis, fwd_bit, _ = intercept_symbolic(prep_basis, prep_bit, eve, rng)
    arrived, alice_bit, _, _ = transmit_symbolic(fwd_basis, fwd_bit, cfg.channel, rng)
    events.append(E_FORWARD)

    # (2) Detection: sample arrived photons, measure in random bases.
    checked = arrived & (rng.random(n) < cfg.check_fraction)
    idx_check = np.flatnonzero(checked)
    meas_basis = np.full(n, -1, dtype=np.int8)
    meas_outcome = np.full(n, -1, dtype=np.int8)
    alice_basis = rng.integers(0, 2, size=len(idx_check), dtype=np.int8)
    coin = random_bits(len(idx_check), rng)
    same = alice_basis == fwd_basis[idx_check]
    outcome = np.where(same, alice_bit[idx_check], coin).astype(np.int8)
    meas_basis[idx_check] = alice_basis
    meas_outcome[idx_check] = outcome
    events.append(E_DETECTION)

    dber = estimate_dber(
        prep_basis[idx_check], prep_bit[idx_check], alice_basis, outcome
    )
    events.append(E_DECISION)

    rounds = {
        "prep_basis": prep_basis,
        "prep_bit": prep_bit,
        "fwd_arrived": arrived,
        "checked": checked,
        "meas_basis": meas_basis,
        "meas_outcome": meas_outcome,
    }

    def _transcript(**kw) -> SessionTranscript:
        return SessionTranscript(
            protocol="dl04_incum" if cfg.incum else "dl04",
            n_photons=n,
            sent_bits=message,
            dber=kw.pop("dber", dber),
            events=events,
            rounds=rounds,
            **kw,
        )

    threshold = cfg.dber_abort_threshold
    dber_bad = (dber.has_z and dber.eps_z > threshold) or (
        dber.has_x and dber.eps_x > threshold
    )
    if dber_bad:
        events.append(E_ABORT)
        return _transcript(
            received_bits=np.zeros(0, dtype=np.int8),
            received_slots=np.zeros(0, dtype=np.int64),
            capacity=None,
            aborted=True,
            abort_reason="dber_above_threshold",
        )

    # (3) Encoding on retained photons; iY flips the bit in both bases.
    retained = np.flatnonzero(arrived & ~checked)
    n_slots = slots_needed(len(message), cfg.check_bit_interval)
    if n_slots > len(retained):
        raise MessageCapacityError(
            f"message of {len(message)} bits needs {n_slots} photons, "
            f"only {len(retained)} retained"
        )
    enc_idx = retained[:n_slots]
    slot_is_check = np.arange(n_slots) % cfg.check_bit_interval == 0
    payload = np.zeros(n_slots, dtype=np.int8)
    payload[slot_is_check] = check_pattern(int(slot_is_check.sum()))
    payload[~slot_is_check] = message
    pad = random_bits(n_slots, rng) if cfg.incum else np.zeros(n_slots, dtype=np.int8)
    wire = payload ^ pad
    enc_basis = fwd_basis[enc_idx]
    enc_bit = (alice_bit[enc_idx] ^ wire).astype(np.int8)
    events.append(E_ENCODING)
    rounds["encoded_slot"] = _slot_map(n, enc_idx)
    rounds["wire_bit"] = _padded(n, enc_idx, wire)

    # (4) Return leg and integrity detection.
    bwd_basis, bwd_bit, _ = intercept_symbolic(enc_basis, enc_bit, eve, rng)
    arrived2, bob_bit, _, _ = transmit_symbolic(bwd_basis, bwd_bit, cfg.backward, rng)
    events.append(E_BACKWARD)

    orig_basis = prep_basis[enc_idx]
    orig_bit = prep_bit[enc_idx]
    coin2 = random_bits(n_slots, rng)
    bob_outcome = np.where(bwd_basis == orig_basis, bob_bit, coin2).astype(np.int8)
    decoded_wire = (bob_outcome ^ orig_bit).astype(np.int8)
    events.append(E_MEASUREMENT)

    if cfg.incum:
        # Bob announces arrivals; Alice reveals the pad only at those slots.
        events.append(E_ARRIVAL_ANNOUNCE)
        events.append(E_PAD_ANNOUNCE)
        decoded = (decoded_wire ^ pad).astype(np.int8)
    else:
        decoded = decoded_wire

    check_arrived = arrived2 & slot_is_check
    expected = np.zeros(n_slots, dtype=np.int8)
    expected[slot_is_check] = check_pattern(int(slot_is_check.sum()))
    n_e = int(check_arrived.sum())
    e_rate = float(np.sum(decoded[check_arrived] != expected[check_arrived]) / n_e) if n_e else 0.0
    dber = replace(dber, e=min(e_rate, 0.5), n_e=n_e)
    events.append(E_INTEGRITY)

    data_arrived = arrived2 & ~slot_is_check
    slot_of_data = np.cumsum(~slot_is_check) - 1  # slot -> message index
    received_bits = decoded[data_arrived].astype(np.int8)
    received_slots = slot_of_data[data_arrived].astype(np.int64)

    rounds["bwd_arrived"] = _padded_bool(n, enc_idx, arrived2)
    rounds["decoded_bit"] = _padded(n, enc_idx, decoded)

    q_bob_measured = float(arrived2.sum() / n_slots) if n_slots else 0.0
    # Masking denies the eavesdropper the lost photons, pinning her rate to
    # the receiver's regardless of the channel's configured gain model.
    gain = EveGainModel(mode="equal") if cfg.incum else cfg.channel.eve_gain
    capacity = _measured_capacity(dber, q_bob_measured, gain, cfg.capacity_mode)

    aborted = e_rate > cfg.qber_abort_threshold
    events.append(E_ABORT if aborted else E_COMPLETE)
    return _transcript(
        received_bits=received_bits,
        received_slots=received_slots,
        dber=dber,
        capacity=capacity,
        aborted=aborted,
        abort_reason="qber_above_threshold" if aborted else None,
        n_encoded=n_slots,
        n_encoded_arrived=int(arrived2.sum()),
    )


def _slot_map(n: int, enc_idx: np.ndarray) -> np.ndarray:
    out = np.full(n, -1, dtype=np.int64)
    out[enc_idx] = np.arange(len(enc_idx))
    return out


def _padded(n: int, enc_idx: np.ndarray, values: np.ndarray) -> np.ndarray:
    out = np.full(n, -1, dtype=np.int8)
    out[enc_idx] = values
    return out


def _padded_bool(n: int, enc_idx: np.ndarray, values: np.ndarray) -> np.ndarray:
    out = np.zeros(n, dtype=bool)
    out[enc_idx] = values
    return out
