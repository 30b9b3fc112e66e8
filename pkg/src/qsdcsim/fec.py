"""Binary LDPC forward error correction.

The default code is a regular (3, 6) rate-1/2 parity-check ensemble built by
random stub matching with duplicate-edge repair, decoded with normalized
min-sum message passing.  Erased positions enter the decoder as zero LLRs,
which min-sum handles like a peeling decoder.  The construction is seeded
and deterministic.

Parity-check matrices can be exchanged in a plain-text sparse format, one
line per check: the check index followed by the variable indices it touches.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bits import as_bit_array

_LLR_CLIP = 30.0


@dataclass(frozen=True)
class DecodeFailure:
    """Decoder gave up: the remaining error pattern is outside its reach."""

    iterations: int
    unsatisfied_checks: int


class FecCode:
    """A binary linear code described by its parity-check adjacency.

    Encoding is systematic: information bits appear verbatim at the
    ``info_positions`` of the codeword, parity bits fill the ``pivot``
    positions chosen by Gaussian elimination.
    """

    def __init__(self, check_rows: list[list[int]], n: int, max_iterations: int = 50):
        if n < 2:
            raise ValueError("code length must be >= 2")
        self.n = int(n)
        self.m = len(check_rows)
        self.max_iterations = int(max_iterations)
        self.check_rows = [sorted(set(int(v) for v in row)) for row in check_rows]
        for row in self.check_rows:
            if row and (row[0] < 0 or row[-1] >= n):
                raise ValueError("variable index out of range in parity-check rows")

        # Edge arrays in check-major order plus a padded (m, dmax) gather map.
        e_check, e_var = [], []
        for c, row in enumerate(self.check_rows):
            for v in row:
                e_check.append(c)
                e_var.append(v)
        self.e_check = np.asarray(e_check, dtype=np.int64)
        self.e_var = np.asarray(e_var, dtype=np.int64)
        self.n_edges = len(self.e_var)
        degrees = np.asarray([len(row) for row in self.check_rows], dtype=np.int64)
        dmax = int(degrees.max()) if self.m else 0
        self._edge_slot = np.full((self.m, dmax), -1, dtype=np.int64)
        pos = 0
        for c, deg in enumerate(degrees):
            self._edge_slot[c, :deg] = np.arange(pos, pos + deg)
            pos += deg
        self._slot_valid = self._edge_slot >= 0

        self._build_encoder()

    # -- construction ------------------------------------------------------

    @classmethod
    def from_regular(
        cls, n: int, dv: int = 3, dc: int = 6, seed: int = 0, max_iterations: int = 50
    ) -> "FecCode":
        """Random regular code: every variable in dv checks, every check of
        weight dc.  Requires dc | n * dv.  Retries the seed until the parity
        matrix has full rank, so the rate is exactly 1 - dv/dc."""
        if (n * dv) % dc != 0:
            raise ValueError("n * dv must be divisible by dc")
        m = n * dv // dc
        for attempt in range(50):
            rng = np.random.default_rng([seed, attempt])
            e_var = np.repeat(np.arange(n), dv)
            e_var = rng.permutation(e_var)
            e_check = np.repeat(np.arange(m), dc)
            e_var = _repair_duplicates(e_check, e_var, rng)
            rows: list[list[int]] = [[] for _ in range(m)]
            for c, v in zip(e_check, e_var):
                rows[c].append(int(v))
            code = cls(rows, n, max_iterations=max_iterations)
            if code.k == n - m:
                return code
        raise RuntimeError("could not draw a full-rank regular code")

    @classmethod
    def from_text(cls, text: str, n: int, max_iterations: int = 50) -> "FecCode":
        """Parse the sparse text format (check index, then variable indices)."""
        rows_by_idx: dict[int, list[int]] = {}
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = [int(tok) for tok in line.split()]
            rows_by_idx[parts[0]] = parts[1:]
        if not rows_by_idx:
            raise ValueError("no parity-check rows in text")
        m = max(rows_by_idx) + 1
        rows = [rows_by_idx.get(i, []) for i in range(m)]
        return cls(rows, n, max_iterations=max_iterations)

    def to_text(self) -> str:
        lines = [f"{c} " + " ".join(str(v) for v in row) for c, row in enumerate(self.check_rows)]
        return "\n".join(lines) + "\n"

    def _build_encoder(self) -> None:
        """Gaussian elimination over GF(2); pivot columns become parity."""
        h = np.zeros((self.m, self.n), dtype=np.uint8)
        for c, row in enumerate(self.check_rows):
            h[c, row] = 1
        pivots: list[int] = []
        r = 0
        for col in range(self.n):
            rows_with_one = np.flatnonzero(h[r:, col]) + r
            if len(rows_with_one) == 0:
                continue
            pivot_row = rows_with_one[0]
            h[[r, pivot_row]] = h[[pivot_row, r]]
            others = np.flatnonzero(h[:, col])
            others = others[others != r]
            h[others] ^= h[r]
            pivots.append(col)
            r += 1
            if r == self.m:
                break
        self.pivot_positions = np.asarray(pivots, dtype=np.int64)
        mask = np.ones(self.n, dtype=bool)
        mask[self.pivot_positions] = False
        self.info_positions = np.flatnonzero(mask)
        self.k = len(self.info_positions)
        # Row i of the reduced matrix reads c[pivot_i] = sum of info bits.
        self._parity_map = h[: len(pivots)][:, self.info_positions]

    # -- properties --------------------------------------------------------

    @property
    def rate(self) -> float:
        return self.k / self.n

    # -- encode / decode ---------------------------------------------------

    def encode(self, info_bits) -> np.ndarray:
        """Systematic encoding; info bits land at ``info_positions``."""
        u = as_bit_array(info_bits)
        if len(u) != self.k:
            raise ValueError(f"expected {self.k} information bits, got {len(u)}")
        codeword = np.zeros(self.n, dtype=np.int8)
        codeword[self.info_positions] = u
        codeword[self.pivot_positions] = (self._parity_map @ u.astype(np.int64)) % 2
        return codeword

    def extract_info(self, codeword: np.ndarray) -> np.ndarray:
        return np.asarray(codeword, dtype=np.int8)[self.info_positions]

    def syndrome_weight(self, bits: np.ndarray) -> int:
        parity = np.bincount(self.e_check, weights=bits[self.e_var], minlength=self.m)
        return int(np.sum(parity.astype(np.int64) % 2 != 0))

    def decode_llr(self, llr) -> np.ndarray | DecodeFailure:
        """Normalized min-sum decoding from channel LLRs (log P0/P1).

        Returns the information bits of the corrected codeword, or a
        DecodeFailure value when the syndrome never clears within the
        iteration limit.
        """
        llr = np.clip(np.asarray(llr, dtype=np.float64), -_LLR_CLIP, _LLR_CLIP)
        if llr.shape != (self.n,):
            raise ValueError(f"expected {self.n} LLRs, got shape {llr.shape}")
        c2v = np.zeros(self.n_edges, dtype=np.float64)
        hard = (llr < 0).astype(np.int8)
        if self.syndrome_weight(hard) == 0:
            return self.extract_info(hard)
        alpha = 0.8
        iterations = 0
        for iterations in range(1, self.max_iterations + 1):
            var_totals = np.bincount(self.e_var, weights=c2v, minlength=self.n)
            v2c = llr[self.e_var] + var_totals[self.e_var] - c2v

            padded = np.where(self._slot_valid, v2c[self._edge_slot], np.inf)
            mags = np.abs(padded)
            signs = np.where(padded < 0, -1.0, 1.0)
            sign_prod = np.prod(np.where(self._slot_valid, signs, 1.0), axis=1)
            part = np.partition(mags, 1, axis=1) if mags.shape[1] > 1 else mags
            min1 = part[:, 0][:, None]
            min2 = part[:, 1][:, None] if mags.shape[1] > 1 else min1
            excl_mag = np.where(mags > min1, min1, min2)
            excl_sign = sign_prod[:, None] * signs
            new_c2v = alpha * excl_sign * excl_mag
            c2v = new_c2v[self._slot_valid]

            posterior = llr + np.bincount(self.e_var, weights=c2v, minlength=self.n)
            hard = (posterior < 0).astype(np.int8)
            if self.syndrome_weight(hard) == 0:
                return self.extract_info(hard)
        return DecodeFailure(
            iterations=iterations, unsatisfied_checks=self.syndrome_weight(hard)
        )

    def decode_hard(
        self, received, crossover: float, erasures: np.ndarray | None = None
    ) -> np.ndarray | DecodeFailure:
        """Decode hard bits from a flip channel, optionally with erasures.

        ``crossover`` is the assumed flip probability of the received bits;
        erased positions contribute nothing.
        """
        received = np.asarray(received, dtype=np.int8)
        p = min(max(crossover, 1e-6), 0.5 - 1e-9)
        magnitude = float(np.log((1.0 - p) / p))
        llr = (1 - 2 * received.astype(np.float64)) * magnitude
        if erasures is not None:
            llr = np.where(erasures, 0.0, llr)
        return self.decode_llr(llr)


def _repair_duplicates(
    e_check: np.ndarray, e_var: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """Swap variable endpoints until no (check, variable) pair repeats."""
    e_var = e_var.copy()
    for _ in range(200):
        pairs = e_check * (e_var.max() + 1) + e_var
        order = np.argsort(pairs, kind="stable")
        dup_mask = np.zeros(len(pairs), dtype=bool)
        sorted_pairs = pairs[order]
        dup_sorted = np.flatnonzero(sorted_pairs[1:] == sorted_pairs[:-1]) + 1
        dup_mask[order[dup_sorted]] = True
        if not dup_mask.any():
            return e_var
        for e in np.flatnonzero(dup_mask):
            f = int(rng.integers(0, len(e_var)))
            e_var[e], e_var[f] = e_var[f], e_var[e]
    raise RuntimeError("failed to remove duplicate edges")


def fec_encode(info_bits, code: FecCode) -> np.ndarray:
    """Module-level convenience wrapper around FecCode.encode."""
    return code.encode(info_bits)


def fec_decode(
    received, code: FecCode, crossover: float = 0.02, erasures: np.ndarray | None = None
) -> np.ndarray | DecodeFailure:
    """Module-level convenience wrapper around FecCode.decode_hard."""
    return code.decode_hard(received, crossover, erasures)
