"""Eavesdropper strategies.

Only intercept-resend variants are simulated as live adversaries: Eve
measures a fraction of the photons in flight in a basis of her choosing and
resends her measurement result.  Collective attacks are handled analytically
by the capacity oracle in :mod:`qsdcsim.security`, not as simulated agents.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quantum import Basis, PhotonState, measure, prepare

BASIS_POLICIES = ("random_zx", "fixed_z", "fixed_x")


@dataclass(frozen=True)
class InterceptResend:
    """Measure-and-resend attack on a fraction of in-flight photons."""

    basis_policy: str = "random_zx"
    fraction: float = 1.0

    def __post_init__(self):
        if self.basis_policy not in BASIS_POLICIES:
            raise ValueError(
                f"basis_policy must be one of {BASIS_POLICIES}, got {self.basis_policy!r}"
            )
        if not 0.0 <= self.fraction <= 1.0:
            raise ValueError(f"fraction must be in [0, 1], got {self.fraction!r}")


#: an eavesdropper strategy is either None (no adversary) or InterceptResend
EveStrategy = InterceptResend | None


def _policy_bases(
    policy: str, n: int, rng: np.random.Generator
) -> np.ndarray:
    if policy == "fixed_z":
        return np.full(n, int(Basis.Z), dtype=np.int8)
    if policy == "fixed_x":
        return np.full(n, int(Basis.X), dtype=np.int8)
    return rng.integers(0, 2, size=n, dtype=np.int8)  # Z=0, X=1


def intercept_symbolic(
    bases: np.ndarray,
    bits: np.ndarray,
    strategy: EveStrategy,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized intercept-resend on a batch of symbolic photons.

    An intercepted photon is re-prepared in Eve's measurement basis with her
    outcome: identical when she guessed the basis, a fair coin otherwise.
    Returns (bases_out, bits_out, intercepted mask); fraction 0 or strategy
    None leave the batch untouched.
    """
    n = len(bases)
    if strategy is None or strategy.fraction == 0.0:
        return bases, bits, np.zeros(n, dtype=bool)
    intercepted = rng.random(n) < strategy.fraction
    eve_bases = _policy_bases(strategy.basis_policy, n, rng)
    guessed = eve_bases == bases
    outcomes = np.where(guessed, bits, rng.integers(0, 2, size=n, dtype=np.int8))
    bases_out = np.where(intercepted, eve_bases, bases).astype(np.int8)
    bits_out = np.where(intercepted, outcomes, bits).astype(np.int8)
    return bases_out, bits_out, intercepted


def intercept_photon(
    photon: PhotonState, strategy: EveStrategy, rng: np.random.Generator
) -> PhotonState:
    """Scalar intercept-resend on one photon (used by the relay protocol)."""
    if strategy is None or photon.lost or rng.random() >= strategy.fraction:
        return photon
    basis = Basis(int(_policy_bases(strategy.basis_policy, 1, rng)[0]))
    outcome = measure(photon, basis, rng)
    return prepare(basis, outcome)
