"""Lossy, noisy quantum channel model.

A transmission is a cascade of an erasure channel (distance-dependent photon
loss plus detector inefficiency) and two independent Bernoulli Pauli-error
processes: a bit-flip error visible in the Z basis (sigma_x) and a phase
error visible in the X basis (sigma_z).  Default attenuation is 0.2 dB/km,
standard telecom fiber.

The module also knows how to turn a channel configuration into reception
rates for the receiver and for an eavesdropper under two gain models:

* ``equal``: the eavesdropper receives exactly what the receiver does
  (the masking regime, gain factor 1).
* ``collecting``: the eavesdropper collects photons the receiver loses.
  With an explicit gain g, her rate is g times the receiver's; without one,
  the worst case is assumed and she captures every photon (rate capped at 1).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .quantum import Basis, PauliOp, PhotonState, LOST_PHOTON, LostPhotonError, apply_pauli

EVE_GAIN_MODES = ("collecting", "equal")


@dataclass(frozen=True)
class EveGainModel:
    """How the eavesdropper's reception rate relates to the receiver's."""

    mode: str = "collecting"
    g: float | None = None  # explicit gain >= 1; None means worst case (rate 1)

    def __post_init__(self):
        if self.mode not in EVE_GAIN_MODES:
            raise ValueError(f"eve gain mode must be one of {EVE_GAIN_MODES}, got {self.mode!r}")
        if self.mode == "equal" and self.g not in (None, 1, 1.0):
            raise ValueError("equal-reception model fixes g = 1")
        if self.g is not None and self.g < 1.0:
            raise ValueError(f"explicit eavesdropper gain must be >= 1, got {self.g!r}")


@dataclass(frozen=True)
class ChannelParams:
    """One quantum channel leg: fiber length, attenuation, noise, detection."""

    length_km: float = 50.0
    attenuation_db_per_km: float = 0.2
    flip_prob_z: float = 0.0
    flip_prob_x: float = 0.0
    detector_efficiency: float = 1.0
    eve_gain: EveGainModel = field(default_factory=EveGainModel)

    def __post_init__(self):
        if self.length_km < 0:
            raise ValueError("length_km must be >= 0")
        if self.attenuation_db_per_km < 0:
            raise ValueError("attenuation_db_per_km must be >= 0")
        for name in ("flip_prob_z", "flip_prob_x"):
            p = getattr(self, name)
            if not 0.0 <= p <= 0.5:
                raise ValueError(f"{name} must be in [0, 0.5], got {p!r}")
        if not 0.0 < self.detector_efficiency <= 1.0:
            raise ValueError("detector_efficiency must be in (0, 1]")
        if self.survival_probability <= 0.0:
            raise ValueError("channel survival probability underflowed to 0")

    @property
    def survival_probability(self) -> float:
        """Probability that a photon arrives and is detected."""
        loss = 10.0 ** (-self.attenuation_db_per_km * self.length_km / 10.0)
        return loss * self.detector_efficiency


@dataclass(frozen=True)
class TransmissionOutcome:
    """Result of pushing one photon through a channel leg.

    Flip flags are recorded only for photons that arrived; a lost photon has
    both flags False.
    """

    photon: PhotonState
    flipped_z: bool = False
    flipped_x: bool = False


def transmit(
    photon: PhotonState, params: ChannelParams, rng: np.random.Generator
) -> TransmissionOutcome:
    """Send a single photon through the channel.

    Loss is absorbing (a lost input stays lost and is rejected here because
    re-transmitting a lost photon is a protocol bug).  Survivors pick up a
    sigma_x error with flip_prob_z and a sigma_z error with flip_prob_x,
    independently.
    """
    if photon.lost:
        raise LostPhotonError("cannot transmit a photon that is already lost")
    if rng.random() >= params.survival_probability:
        return TransmissionOutcome(photon=LOST_PHOTON)
    flipped_z = rng.random() < params.flip_prob_z
    flipped_x = rng.random() < params.flip_prob_x
    out = photon
    if flipped_z:
        out = apply_pauli(PauliOp.X, out)
    if flipped_x:
        out = apply_pauli(PauliOp.Z, out)
    return TransmissionOutcome(photon=out, flipped_z=flipped_z, flipped_x=flipped_x)


def transmit_symbolic(
    bases: np.ndarray,
    bits: np.ndarray,
    params: ChannelParams,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized channel for symbolic (basis, bit) photon batches.

    Returns (arrived, bits_out, flipped_z, flipped_x) arrays.  The Pauli
    error bookkeeping matches the scalar path: a sigma_x error flips Z- and
    Y-basis bits, a sigma_z error flips X- and Y-basis bits; bit values at
    positions that did not arrive are carried through unchanged but must be
    ignored by the caller.
    """
    n = len(bases)
    arrived = rng.random(n) < params.survival_probability
    flipped_z = (rng.random(n) < params.flip_prob_z) & arrived
    flipped_x = (rng.random(n) < params.flip_prob_x) & arrived
    flips = np.where(
        bases == Basis.Z,
        flipped_z,
        np.where(bases == Basis.X, flipped_x, flipped_z ^ flipped_x),
    )
    bits_out = np.where(flips, bits ^ 1, bits).astype(np.int8)
    return arrived, bits_out, flipped_z, flipped_x


def transmit_entangled(
    state: np.ndarray, qubit: int, params: ChannelParams, rng: np.random.Generator
) -> tuple[bool, np.ndarray]:
    """Channel action on one qubit of an entangled state vector.

    Returns (arrived, new_state).  On loss the joint state is returned
    untouched; the caller decides what happens to the surviving halves.
    """
    if rng.random() >= params.survival_probability:
        return False, state
    from .quantum import apply_pauli_to_qubit

    out = state
    if rng.random() < params.flip_prob_z:
        out = apply_pauli_to_qubit(out, qubit, PauliOp.X)
    if rng.random() < params.flip_prob_x:
        out = apply_pauli_to_qubit(out, qubit, PauliOp.Z)
    return True, out


def reception_rate(params: ChannelParams) -> float:
    """Deterministic per-use reception rate of the legitimate receiver."""
    return params.survival_probability


def eve_rate_for(q_bob: float, model: EveGainModel) -> float:
    """Eavesdropper reception rate implied by a receiver rate and gain model."""
    if model.mode == "equal":
        return q_bob
    if model.g is None:
        # Worst case: every photon the receiver loses is collected by Eve.
        return 1.0
    q_eve = model.g * q_bob
    if q_eve > 1.0:
        raise ValueError(
            f"configured gain {model.g} gives eavesdropper rate {q_eve:.6g} > 1"
        )
    return q_eve


def eve_reception_rate(params: ChannelParams) -> float:
    """Eavesdropper reception rate under the configured gain model."""
    return eve_rate_for(reception_rate(params), params.eve_gain)
