"""Measurement-device-independent variant: all detectors live with an
untrusted relay (Charlie).

Round structure.  Bob always sends a single photon to the relay.  Alice
randomly either sends a single photon too (a detection round) or creates an
entangled pair, keeps one half and sends the other (a transfer round).  The
relay Bell-measures the two incoming photons and announces the outcome.

* Detection rounds where both parties happened to prepare in the same basis
  have a strict consistency rule between the prepared bits and the announced
  Bell outcome (see CONSISTENT_OUTCOMES); the violation rate is the detected
  bit error rate.  A relay that invents outcomes is wrong half the time.
* Transfer rounds teleport Bob's photon onto Alice's retained half, up to a
  Pauli correction determined by the announced outcome.

After the detection decision Alice encodes bits on her retained photons
(identity for 0, iY for 1, known check bits interleaved) and sends them back
to the relay, which measures each in the basis Bob then announces; Bob
decodes the flip relative to his original bit.  Check-bit errors give the
integrity error rate.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .bits import as_bit_array
from .channel import ChannelParams, transmit, transmit_entangled
from .dl04 import (
    E_ABORT,
    E_BACKWARD,
    E_COMPLETE,
    E_DECISION,
    E_DETECTION,
    E_ENCODING,
    E_FORWARD,
    E_INIT,
    E_INTEGRITY,
    E_MEASUREMENT,
    MessageCapacityError,
    SessionTranscript,
    _measured_capacity,
    check_pattern,
    slots_needed,
)
from .eavesdrop import EveStrategy, intercept_photon
from .quantum import (
    Basis,
    PAULI_MATRICES,
    PauliOp,
    PhotonState,
    TELEPORT_CORRECTIONS,
    bell_measure,
    bell_project_pair,
    make_bell,
    measure,
    measure_qubit,
    prepare,
)
from .security import DberEstimate

# Bell outcomes consistent with a matched-basis detection round, keyed by
# (preparation basis, bits equal?).  Derived once from the package Bell
# indexing (1: Phi+, 2: Phi-, 3: Psi+, 4: Psi-):
#   Z-basis pair:  |00>,|11> live in span{1,2};  |01>,|10> in span{3,4}
#   X-basis pair:  |++>,|--> live in span{1,3};  |+->,|-+> in span{2,4}
CONSISTENT_OUTCOMES = {
    (Basis.Z, True): frozenset({1, 2}),
    (Basis.Z, False): frozenset({3, 4}),
    (Basis.X, True): frozenset({1, 3}),
    (Basis.X, False): frozenset({2, 4}),
}


def consistent_outcomes(basis: Basis, bits_equal: bool) -> frozenset:
    """Announced Bell outcomes compatible with an honest relay."""
    return CONSISTENT_OUTCOMES[(basis, bits_equal)]


@dataclass(frozen=True)
class MdiConfig:
    """Session parameters for one relay-mediated run."""

    n_rounds: int
    channel_alice: ChannelParams
    channel_bob: ChannelParams | None = None  # defaults to Alice's leg
    epr_fraction: float = 0.5
    detection_abort_threshold: float = 0.12
    qber_abort_threshold: float = 0.12
    check_bit_interval: int = 10
    capacity_mode: str = "two_basis"

    def __post_init__(self):
        if self.n_rounds < 1:
            raise ValueError("n_rounds must be >= 1")
        if not 0.0 < self.epr_fraction < 1.0:
            raise ValueError("epr_fraction must be in (0, 1)")
        for name in ("detection_abort_threshold", "qber_abort_threshold"):
            t = getattr(self, name)
            if not 0.0 < t < 0.5:
                raise ValueError(f"{name} must be in (0, 0.5)")
        if self.check_bit_interval < 2:
            raise ValueError("check_bit_interval must be >= 2")
        # Half of the single-single rounds are matched-basis.
        expected = self.n_rounds * (1.0 - self.epr_fraction) * 0.5
        if expected < 100:
            warnings.warn(
                "fewer than 100 expected detection rounds; DBER estimates will be unstable",
                stacklevel=2,
            )

    @property
    def bob_leg(self) -> ChannelParams:
        return self.channel_bob if self.channel_bob is not None else self.channel_alice


def run_mdi_dl04(
    cfg: MdiConfig,
    message,
    eve: EveStrategy = None,
    charlie_honest: bool = True,
    rng: np.random.Generator | None = None,
) -> SessionTranscript:
    """Execute one relay-mediated session carrying ``message``.

    A dishonest relay announces uniformly random Bell outcomes; the
    detection rounds catch it.  Aborts are recorded in the transcript;
    a message that cannot fit on the successful transfer rounds raises
    MessageCapacityError.
    """
    if rng is None:
        rng = np.random.default_rng()
    message = as_bit_array(message)
    n = cfg.n_rounds
    events: list[str] = [E_INIT]

    round_kind = np.zeros(n, dtype=np.int8)  # 0 detection, 1 transfer
    bob_basis = np.full(n, -1, dtype=np.int8)
    bob_bit = np.full(n, -1, dtype=np.int8)
    alice_basis = np.full(n, -1, dtype=np.int8)
    alice_bit = np.full(n, -1, dtype=np.int8)
    announced = np.zeros(n, dtype=np.int8)  # 0 = no click
    clicked = np.zeros(n, dtype=bool)

    retained: list[PhotonState | None] = [None] * n  # corrected halves, transfer rounds

    for r in range(n):
        b_basis = Basis(int(rng.integers(0, 2)))
        b_bit = int(rng.integers(0, 2))
        bob_basis[r], bob_bit[r] = b_basis, b_bit
        bob_photon = intercept_photon(prepare(b_basis, b_bit), eve, rng)
        bob_out = transmit(bob_photon, cfg.bob_leg, rng)

        if rng.random() < cfg.epr_fraction:
            round_kind[r] = 1
            resource = make_bell(1)  # (port, output); port travels to the relay
            if eve is not None and rng.random() < eve.fraction:
                # Intercepting the travelling half collapses the pair.
                eve_basis = Basis.Z if rng.random() < 0.5 else Basis.X
                outcome, output_state = measure_qubit(resource, 0, eve_basis, rng)
                resource = np.kron(prepare(eve_basis, outcome).to_vector(), output_state)
            port_arrived, resource = transmit_entangled(resource, 0, cfg.channel_alice, rng)
            if not (port_arrived and not bob_out.photon.lost):
                if not charlie_honest:
                    announced[r] = int(rng.integers(1, 5))
                    clicked[r] = True
                continue
            joint = np.kron(bob_out.photon.to_vector(), resource)
            probs, branches = bell_project_pair(joint)
            true_outcome = int(rng.choice(4, p=probs)) + 1
            said = true_outcome if charlie_honest else int(rng.integers(1, 5))
            announced[r] = said
            clicked[r] = True
            correction = PAULI_MATRICES[TELEPORT_CORRECTIONS[said]]
            retained[r] = PhotonState(vector=correction @ branches[true_outcome - 1])
        else:
            a_basis = Basis(int(rng.integers(0, 2)))
            a_bit = int(rng.integers(0, 2))
            alice_basis[r], alice_bit[r] = a_basis, a_bit
            alice_photon = intercept_photon(prepare(a_basis, a_bit), eve, rng)
            alice_out = transmit(alice_photon, cfg.channel_alice, rng)
            if alice_out.photon.lost or bob_out.photon.lost:
                if not charlie_honest:
                    announced[r] = int(rng.integers(1, 5))
                    clicked[r] = True
                continue
            if charlie_honest:
                joint = np.kron(alice_out.photon.to_vector(), bob_out.photon.to_vector())
                announced[r] = bell_measure(joint, rng)
            else:
                announced[r] = int(rng.integers(1, 5))
            clicked[r] = True
    events.append(E_FORWARD)

    # Detection statistics: matched-basis single-single rounds with a click.
    detect = (round_kind == 0) & clicked & (alice_basis == bob_basis) & (alice_basis >= 0)
    err_flags = np.zeros(n, dtype=bool)
    for r in np.flatnonzero(detect):
        ok = announced[r] in consistent_outcomes(
            Basis(int(alice_basis[r])), bool(alice_bit[r] == bob_bit[r])
        )
        err_flags[r] = not ok
    is_z = alice_basis == Basis.Z
    n_z = int(np.sum(detect & is_z))
    n_x = int(np.sum(detect & ~is_z))
    eps_z = float(np.sum(err_flags & is_z) / n_z) if n_z else 0.0
    eps_x = float(np.sum(err_flags & ~is_z) / n_x) if n_x else 0.0
    dber = DberEstimate(eps_x=min(eps_x, 0.5), eps_z=min(eps_z, 0.5), n_x=n_x, n_z=n_z)
    events.append(E_DETECTION)
    events.append(E_DECISION)

    rounds = {
        "round_kind": round_kind,
        "bob_basis": bob_basis,
        "bob_bit": bob_bit,
        "alice_basis": alice_basis,
        "alice_bit": alice_bit,
        "announced": announced,
        "detect_round": detect,
        "detect_error": err_flags,
    }

    def _transcript(**kw) -> SessionTranscript:
        return SessionTranscript(
            protocol="mdi_dl04",
            n_photons=n,
            sent_bits=message,
            dber=kw.pop("dber", dber),
            events=events,
            rounds=rounds,
            **kw,
        )

    threshold = cfg.detection_abort_threshold
    if (dber.has_z and dber.eps_z > threshold) or (dber.has_x and dber.eps_x > threshold):
        events.append(E_ABORT)
        return _transcript(
            received_bits=np.zeros(0, dtype=np.int8),
            received_slots=np.zeros(0, dtype=np.int64),
            capacity=None,
            aborted=True,
            abort_reason="dber_above_threshold",
        )

    # Encoding on the successfully transferred photons.
    transfer_rounds = [r for r in range(n) if retained[r] is not None]
    n_slots = slots_needed(len(message), cfg.check_bit_interval)
    if n_slots > len(transfer_rounds):
        raise MessageCapacityError(
            f"message of {len(message)} bits needs {n_slots} transfer rounds, "
            f"only {len(transfer_rounds)} succeeded"
        )
    slot_rounds = transfer_rounds[:n_slots]
    slot_is_check = np.arange(n_slots) % cfg.check_bit_interval == 0
    payload = np.zeros(n_slots, dtype=np.int8)
    payload[slot_is_check] = check_pattern(int(slot_is_check.sum()))
    payload[~slot_is_check] = message
    events.append(E_ENCODING)

    # Return leg: encoded photon to the relay, measured in Bob's basis.
    decoded = np.full(n_slots, -1, dtype=np.int8)
    arrived2 = np.zeros(n_slots, dtype=bool)
    for j, r in enumerate(slot_rounds):
        photon = retained[r]
        if payload[j]:
            photon = PhotonState(vector=PAULI_MATRICES[PauliOp.IY] @ photon.vector)
        photon = intercept_photon(photon, eve, rng)
        out = transmit(photon, cfg.channel_alice, rng)
        if out.photon.lost:
            continue
        arrived2[j] = True
        if charlie_honest:
            outcome = measure(out.photon, Basis(int(bob_basis[r])), rng)
        else:
            outcome = int(rng.integers(0, 2))
        decoded[j] = outcome ^ int(bob_bit[r])
    events.append(E_BACKWARD)
    events.append(E_MEASUREMENT)

    expected = np.zeros(n_slots, dtype=np.int8)
    expected[slot_is_check] = check_pattern(int(slot_is_check.sum()))
    check_arrived = arrived2 & slot_is_check
    n_e = int(check_arrived.sum())
    e_rate = float(np.sum(decoded[check_arrived] != expected[check_arrived]) / n_e) if n_e else 0.0
    dber = replace(dber, e=min(e_rate, 0.5), n_e=n_e)
    events.append(E_INTEGRITY)

    data_arrived = arrived2 & ~slot_is_check
    slot_of_data = np.cumsum(~slot_is_check) - 1
    received_bits = decoded[data_arrived].astype(np.int8)
    received_slots = slot_of_data[data_arrived].astype(np.int64)
    rounds["slot_round"] = np.asarray(slot_rounds, dtype=np.int64)
    rounds["slot_decoded"] = decoded

    q_bob_measured = float(arrived2.sum() / n_slots) if n_slots else 0.0
    capacity = _measured_capacity(dber, q_bob_measured, cfg.channel_alice.eve_gain, cfg.capacity_mode)

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
