"""Quantum-memory-free frame pipeline.

No photon is ever stored: the message is encrypted with pool keys, precoded
with an outer FEC, and shipped in frames whose secure-coding rate is
admitted against the capacities measured on the *previous* frame's own
transmission.  Every successfully delivered frame is also distilled into
fresh key material, so the pool that encrypted this message refills for the
next one.

Session loop:

1. Bootstrap. While the key pool holds fewer bits than the message needs,
   send frames of random bits; each one deposits a distilled key.
2. Encrypt: Y = M xor K, with K drawn from the pool (every key bit is
   consumed exactly once).
3. Precode: X = outer_encode(Y), cached.
4. Slice X into frames.  Frame i carries k_i cache bits inside an
   n_ci-bit inner codeword, where k_i / n_ci must not exceed the inner rate
   minus the previous frame's wiretap capacity, and the inner rate must stay
   below the previous main capacity (the admission rule).  Random-bit frames
   are inserted when the pool drops below its reserve.
5. Each frame rides its own masked two-way protocol session; that session's
   detection statistics price the next frame.
6. After the last frame: decode the outer code and decrypt with the same K.

A decode failure triggers bounded retransmission of the same frame; an
inadmissible frame or an empty distillation budget eventually fails the
session (the channel is too bad to price any rate).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bits import as_bit_array, random_bits
from .channel import ChannelParams, reception_rate
from .dl04 import Dl04Config, MessageCapacityError, run_dl04, slots_needed
from .fec import DecodeFailure, FecCode
from .quantum import binary_entropy
from .security import DberEstimate, main_capacity


class KeyPoolUnderflow(RuntimeError):
    """Attempted to consume more key bits than the pool holds."""


class QmfSessionError(RuntimeError):
    """The session could not be completed (inadmissible frames, decode
    failures beyond the retry budget, or a pool that cannot grow)."""


class KeyPool:
    """FIFO store of distilled key bits with strict consume-once accounting."""

    def __init__(self):
        self._buffer = np.zeros(0, dtype=np.int8)
        self.total_deposited = 0
        self.total_consumed = 0

    @property
    def available(self) -> int:
        return len(self._buffer)

    def deposit(self, bits: np.ndarray) -> None:
        bits = as_bit_array(bits)
        self._buffer = np.concatenate([self._buffer, bits])
        self.total_deposited += len(bits)

    def consume(self, n: int) -> np.ndarray:
        if n > self.available:
            raise KeyPoolUnderflow(
                f"pool holds {self.available} bits, {n} requested"
            )
        out = self._buffer[:n].copy()
        self._buffer = self._buffer[n:]
        self.total_consumed += n
        return out


def xor_encrypt(message, key) -> np.ndarray:
    """Elementwise XOR; applying it twice with the same key is the identity."""
    m = as_bit_array(message)
    k = as_bit_array(key)
    if len(m) != len(k):
        raise ValueError(f"message ({len(m)} bits) and key ({len(k)} bits) differ")
    return (m ^ k).astype(np.int8)


def admit_frame(k_i: int, n_ci: int, r_i: float, c_w_prev: float, c_m_prev: float) -> bool:
    """Rate-admission rule: k_i/n_ci <= R_i - C_W_prev and R_i < C_M_prev."""
    return (k_i / n_ci) <= (r_i - c_w_prev) and r_i < c_m_prev


def distill_key(codeword_bits, c_s: float, margin: float, seed: int = 0) -> np.ndarray:
    """Compress a delivered codeword into floor(|c| * C_S * (1 - margin))
    fresh key bits with a seeded Toeplitz (universal) hash.

    Both parties hold identical codewords and the seed is public, so they
    derive identical keys.  A non-positive secrecy capacity yields no key.
    """
    c = as_bit_array(codeword_bits)
    if c_s <= 0.0:
        return np.zeros(0, dtype=np.int8)
    out_len = math.floor(len(c) * c_s * (1.0 - margin))
    if out_len <= 0:
        return np.zeros(0, dtype=np.int8)
    rng = np.random.default_rng(seed)
    diagonals = rng.integers(0, 2, size=len(c) + out_len - 1, dtype=np.int64)
    conv = np.convolve(diagonals, c.astype(np.int64))
    return (conv[len(c) - 1 : len(c) - 1 + out_len] % 2).astype(np.int8)


# ---------------------------------------------------------------------------
# Frame transport
# ---------------------------------------------------------------------------


@dataclass
class FrameChannelResult:
    """What one frame's quantum transmission delivered to the receiver."""

    bits: np.ndarray  # received codeword bits; values at erased slots are 0
    erased: np.ndarray  # True where the photon never completed the round trip
    dber: DberEstimate
    q_bob: float  # measured fraction of encoded bits that arrived
    aborted: bool = False


class Dl04Transport:
    """Sends one frame per masked two-way protocol session.

    Photon count is sized from the channel's survival probability with slack
    and grows on the rare occasion a session comes up short of retained
    photons.
    """

    def __init__(
        self,
        channel: ChannelParams,
        check_fraction: float = 0.15,
        dber_abort_threshold: float = 0.12,
        qber_abort_threshold: float = 0.12,
        check_bit_interval: int = 10,
        sizing_slack: float = 1.25,
    ):
        self.channel = channel
        self.check_fraction = check_fraction
        self.dber_abort_threshold = dber_abort_threshold
        self.qber_abort_threshold = qber_abort_threshold
        self.check_bit_interval = check_bit_interval
        self.sizing_slack = sizing_slack

    def __call__(self, codeword_bits: np.ndarray, rng: np.random.Generator) -> FrameChannelResult:
        codeword_bits = as_bit_array(codeword_bits)
        slots = slots_needed(len(codeword_bits), self.check_bit_interval)
        q_fwd = reception_rate(self.channel)
        sized = int(slots / (q_fwd * (1.0 - self.check_fraction)) * self.sizing_slack) + 50
        # Floor the photon count so each frame gets roughly 800 detection
        # rounds (~400 basis-matched).  The next frame's admission hinges on
        # this frame's measured DBER; with fewer rounds the estimate
        # fluctuates enough to push h(2*eps) past the secure-coding rate and
        # dead-end an otherwise healthy session.
        n_photons = max(sized, int(800 / (self.check_fraction * q_fwd)) + 1)
        for _ in range(4):
            cfg = Dl04Config(
                n_photons=n_photons,
                channel=self.channel,
                check_fraction=self.check_fraction,
                dber_abort_threshold=self.dber_abort_threshold,
                qber_abort_threshold=self.qber_abort_threshold,
                incum=True,
                check_bit_interval=self.check_bit_interval,
            )
            try:
                transcript = run_dl04(cfg, codeword_bits, eve=None, rng=rng)
            except MessageCapacityError:
                n_photons *= 2
                continue
            if transcript.aborted and transcript.n_encoded == 0:
                return FrameChannelResult(
                    bits=np.zeros(len(codeword_bits), dtype=np.int8),
                    erased=np.ones(len(codeword_bits), dtype=bool),
                    dber=transcript.dber,
                    q_bob=0.0,
                    aborted=True,
                )
            bits = np.zeros(len(codeword_bits), dtype=np.int8)
            erased = np.ones(len(codeword_bits), dtype=bool)
            bits[transcript.received_slots] = transcript.received_bits
            erased[transcript.received_slots] = False
            q_bob = (
                transcript.n_encoded_arrived / transcript.n_encoded
                if transcript.n_encoded
                else 0.0
            )
            return FrameChannelResult(
                bits=bits,
                erased=erased,
                dber=transcript.dber,
                q_bob=q_bob,
                aborted=transcript.aborted,
            )
        raise QmfSessionError("could not size a protocol session for the frame")


# ---------------------------------------------------------------------------
# Session loop
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QmfSessionConfig:
    """Static parameters of a frame-pipelined session.

    The outer (precode) object fixes the message length (its information
    length) and precode rate; the inner code fixes the frame length and the
    secure-coding rate.
    """

    precode: FecCode
    inner_code: FecCode
    channel: ChannelParams
    g: float = 1.0  # gain estimate; masked transport pins it to 1
    margin: float = 0.1
    initial_dber: float = 0.02
    initial_qber: float = 0.02
    retry_budget: int = 3
    pool_reserve_bits: int = 0
    max_frames: int = 200

    def __post_init__(self):
        if self.g < 1.0:
            raise ValueError("gain estimate must be >= 1")
        if not 0.0 <= self.margin < 1.0:
            raise ValueError("margin must be in [0, 1)")
        if self.retry_budget < 0:
            raise ValueError("retry_budget must be >= 0")

    @property
    def message_length(self) -> int:
        return self.precode.k

    @property
    def frame_length(self) -> int:
        return self.inner_code.n


@dataclass
class FrameRecord:
    """Audit row for one transmitted frame."""

    index: int
    payload_kind: str  # "message" or "random"
    k_i: int
    n_ci: int
    rate: float
    c_w_prev: float
    c_m_prev: float
    admission_slack: float
    q_bob: float = 0.0
    eps: float = 0.0
    e: float = 0.0
    c_m: float = 0.0
    c_w: float = 0.0
    c_s: float = 0.0
    distilled_bits: int = 0
    retries: int = 0

    def to_json_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class QmfSessionResult:
    received: np.ndarray
    frames: list[FrameRecord] = field(default_factory=list)
    pool_deposited: int = 0
    pool_consumed: int = 0
    bootstrap_frames: int = 0
    random_frames_mid_session: int = 0


def _frame_capacities(
    cfg: QmfSessionConfig, result: FrameChannelResult
) -> tuple[float, float, float]:
    """Capacities measured on one frame's own transmission: main capacity
    from the integrity error rate, wiretap capacity g * Q * h(2 eps) from
    the pooled detection error rate."""
    e = result.dber.e if result.dber.has_e else cfg.initial_qber
    eps = result.dber.pooled
    c_m = main_capacity(result.q_bob, min(e, 0.5))
    c_w = cfg.g * result.q_bob * binary_entropy(min(2.0 * eps, 1.0))
    return c_m, c_w, c_m - c_w


def run_qmf_session(
    cfg: QmfSessionConfig,
    message,
    transport=None,
    rng: np.random.Generator | None = None,
) -> QmfSessionResult:
    """Run the full frame-pipelined session for one message.

    ``transport`` maps (codeword bits, rng) to a FrameChannelResult; by
    default a masked two-way protocol session over cfg.channel.  Raises
    QmfSessionError when no admissible frame can be formed or a frame keeps
    failing past the retry budget.
    """
    if rng is None:
        rng = np.random.default_rng()
    if transport is None:
        transport = Dl04Transport(cfg.channel)
    message = as_bit_array(message)
    if len(message) != cfg.message_length:
        raise ValueError(
            f"message must be {cfg.message_length} bits (the precode's "
            f"information length), got {len(message)}"
        )

    pool = KeyPool()
    frames: list[FrameRecord] = []
    inner = cfg.inner_code
    n_ci, r_i = inner.n, inner.rate

    # Frame 1 is priced from configured priors; afterwards each frame is
    # priced from its predecessor's own measurements.
    q_prior = reception_rate(cfg.channel) ** 2  # round trip
    c_m_prev = main_capacity(q_prior, cfg.initial_qber)
    c_w_prev = cfg.g * q_prior * binary_entropy(min(2.0 * cfg.initial_dber, 1.0))

    def send_frame(kind: str, payload: np.ndarray) -> np.ndarray:
        nonlocal c_m_prev, c_w_prev
        k_i = len(payload)
        slack = (r_i - c_w_prev) - k_i / n_ci
        if not admit_frame(k_i, n_ci, r_i, c_w_prev, c_m_prev):
            raise QmfSessionError(
                f"frame {len(frames)} inadmissible: rate {r_i:.4f}, "
                f"previous C_W {c_w_prev:.4f}, C_M {c_m_prev:.4f}"
            )
        record = FrameRecord(
            index=len(frames),
            payload_kind=kind,
            k_i=k_i,
            n_ci=n_ci,
            rate=r_i,
            c_w_prev=c_w_prev,
            c_m_prev=c_m_prev,
            admission_slack=slack,
        )
        fill = random_bits(inner.k - k_i, rng)
        info = np.concatenate([payload, fill])
        last_error = "no attempt"
        for attempt in range(cfg.retry_budget + 1):
            record.retries = attempt
            codeword = inner.encode(info)
            result = transport(codeword, rng)
            if result.aborted:
                last_error = "transport aborted"
                continue
            crossover = result.dber.e if result.dber.has_e else cfg.initial_qber
            decoded = inner.decode_hard(result.bits, max(crossover, 1e-3), result.erased)
            if isinstance(decoded, DecodeFailure):
                last_error = f"decode failure ({decoded.unsatisfied_checks} checks)"
                continue
            delivered = inner.encode(decoded)  # receiver's reconstruction of the codeword
            c_m, c_w, c_s = _frame_capacities(cfg, result)
            key = distill_key(delivered, c_s, cfg.margin, seed=record.index)
            pool.deposit(key)
            record.q_bob = result.q_bob
            record.eps = result.dber.pooled
            record.e = result.dber.e
            record.c_m, record.c_w, record.c_s = c_m, c_w, c_s
            record.distilled_bits = len(key)
            frames.append(record)
            c_m_prev, c_w_prev = c_m, c_w
            return decoded[:k_i]
        raise QmfSessionError(
            f"frame {record.index} failed after {cfg.retry_budget + 1} attempts: {last_error}"
        )

    def max_payload() -> int:
        k = min(inner.k, math.floor(n_ci * (r_i - c_w_prev)))
        # Guard against float rounding right at the floor boundary.
        while k > 0 and k / n_ci > r_i - c_w_prev:
            k -= 1
        return k

    # Bootstrap: random frames until the pool can cover the message key.
    bootstrap = 0
    while pool.available < len(message):
        if len(frames) >= cfg.max_frames:
            raise QmfSessionError("key pool is not growing; channel too bad")
        k_i = max(max_payload(), 0)
        if k_i == 0:
            raise QmfSessionError("no admissible frame size; channel too bad")
        send_frame("random", random_bits(k_i, rng))
        bootstrap += 1

    # Encrypt and precode.
    key = pool.consume(len(message))
    ciphertext = xor_encrypt(message, key)
    cache = cfg.precode.encode(ciphertext)

    # Slice the cache into admitted frames.
    mid_session_random = 0
    parts: list[np.ndarray] = []
    pos = 0
    while pos < len(cache):
        if len(frames) >= cfg.max_frames:
            raise QmfSessionError("frame budget exhausted before cache drained")
        k_max = max_payload()
        if k_max < 1:
            raise QmfSessionError("no admissible frame size mid-session")
        if pool.available < cfg.pool_reserve_bits:
            send_frame("random", random_bits(k_max, rng))
            mid_session_random += 1
            continue
        k_i = min(k_max, len(cache) - pos)
        parts.append(send_frame("message", cache[pos : pos + k_i]))
        pos += k_i

    # Outer decode and final decrypt.
    received_cache = np.concatenate(parts) if parts else np.zeros(0, dtype=np.int8)
    decoded = cfg.precode.decode_hard(received_cache, crossover=1e-3)
    if isinstance(decoded, DecodeFailure):
        raise QmfSessionError("outer decode failed after all frames delivered")
    received = xor_encrypt(decoded, key)
    return QmfSessionResult(
        received=received,
        frames=frames,
        pool_deposited=pool.total_deposited,
        pool_consumed=pool.total_consumed,
        bootstrap_frames=bootstrap,
        random_frames_mid_session=mid_session_random,
    )
