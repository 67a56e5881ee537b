"""Rate-1/2 convolutional code: encoder, soft Viterbi, log-MAP BCJR, block interleaver.

LLR convention throughout: positive means bit 0. A coded bit ``c`` with LLR ``L``
contributes ``L * (1 - 2c) / 2`` to a path's log-weight.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numba
import numpy as np

from .errors import ParameterError


@dataclass(frozen=True)
class ConvCode:
    """Feedforward rate-1/2 convolutional code with zero-tail termination."""

    generators: tuple[int, int] = (0o171, 0o133)
    constraint_length: int = 7

    def __post_init__(self):
        if len(self.generators) != 2:
            raise ParameterError("only rate-1/2 codes (two generators) are supported")
        if self.constraint_length < 2:
            raise ParameterError("constraint_length must be >= 2")
        top = 1 << (self.constraint_length - 1)
        for g in self.generators:
            if g <= 0 or g >= (top << 1):
                raise ParameterError(f"generator {oct(g)} does not fit in {self.constraint_length} bits")
            if not (g & 1 and g & top):
                raise ParameterError(f"generator {oct(g)} needs nonzero leading and constant terms")

    @property
    def memory(self) -> int:
        return self.constraint_length - 1

    @property
    def tail(self) -> int:
        return self.memory

    @property
    def n_states(self) -> int:
        return 1 << self.memory

    @property
    def rate(self) -> float:
        return 0.5

    def coded_length(self, n_msg: int) -> int:
        return 2 * (n_msg + self.tail)

    def message_length(self, n_coded: int) -> int:
        """Inverse of :meth:`coded_length`; raises if ``n_coded`` is not a terminated block size."""
        if n_coded % 2 or n_coded // 2 < self.tail:
            raise ParameterError(f"{n_coded} coded bits is not a terminated block for this code")
        return n_coded // 2 - self.tail

    @cached_property
    def trellis(self) -> "Trellis":
        return Trellis.from_code(self)


@dataclass(frozen=True, eq=False)
class Trellis:
    """State-transition tables.

    The state holds the previous ``memory`` input bits with the newest at the MSB.
    Feeding bit ``b`` into state ``s`` forms the register ``(b << memory) | s``;
    outputs are the parities of the register masked by each generator.
    """

    next_state: np.ndarray  # (S, 2)
    outputs: np.ndarray  # (S, 2, 2) coded bit pair per (state, input)
    prev_state: np.ndarray  # (S, 2) predecessors, ordered by their dropped LSB
    memory: int

    @classmethod
    def from_code(cls, code: ConvCode) -> "Trellis":
        m = code.memory
        S = 1 << m
        nxt = np.zeros((S, 2), dtype=np.int64)
        out = np.zeros((S, 2, 2), dtype=np.int64)
        for s in range(S):
            for b in (0, 1):
                reg = (b << m) | s
                nxt[s, b] = reg >> 1
                for j, g in enumerate(code.generators):
                    out[s, b, j] = bin(reg & g).count("1") & 1
        prev = np.zeros((S, 2), dtype=np.int64)
        for t in range(S):
            # predecessors of t: drop-bit 0 or 1 at LSB; shared input bit is t's MSB
            base = (t << 1) & (S - 1)
            prev[t, 0] = base
            prev[t, 1] = base | 1
        return cls(nxt, out, prev, m)

    @property
    def n_states(self) -> int:
        return self.next_state.shape[0]

    @cached_property
    def labels(self) -> np.ndarray:
        """Output pair per (state, input) packed as ``2*c0 + c1``."""
        return 2 * self.outputs[:, :, 0] + self.outputs[:, :, 1]

    def input_bit(self, state: int) -> int:
        """Input bit that leads *into* ``state``."""
        return state >> (self.memory - 1)


def conv_encode(bits, code: ConvCode = ConvCode()) -> np.ndarray:
    """Encode ``bits`` and append ``code.tail`` zero bits; returns ``2*(len+tail)`` coded bits."""
    bits = np.asarray(bits, dtype=np.int64).ravel()
    if bits.size and (bits.min() < 0 or bits.max() > 1):
        raise ParameterError("bits must be 0/1")
    tr = code.trellis
    msg = np.concatenate([bits, np.zeros(code.tail, dtype=np.int64)])
    return _encode_kernel(msg, tr.next_state, tr.outputs)


@numba.njit(cache=True)
def _encode_kernel(msg, next_state, outputs):
    out = np.empty(2 * msg.size, dtype=np.int8)
    s = 0
    for t in range(msg.size):
        b = msg[t]
        out[2 * t] = outputs[s, b, 0]
        out[2 * t + 1] = outputs[s, b, 1]
        s = next_state[s, b]
    return out


def encoder_final_state(bits, code: ConvCode = ConvCode()) -> int:
    """State of the encoder after the tail has been flushed (always 0 for a terminated code)."""
    tr = code.trellis
    s = 0
    for b in list(np.asarray(bits, dtype=np.int64)) + [0] * code.tail:
        s = int(tr.next_state[s, b])
    return s


def _check_llrs(llrs, code: ConvCode) -> np.ndarray:
    llrs = np.asarray(llrs, dtype=np.float64).ravel()
    if llrs.size % 2:
        raise ParameterError(f"LLR count {llrs.size} is not a multiple of 2")
    code.message_length(llrs.size)
    if not np.all(np.isfinite(llrs)):
        raise ParameterError("non-finite LLR in decoder input")
    return llrs


# ---------------------------------------------------------------------------
# Viterbi


@numba.njit(cache=True)
def _viterbi_kernel(llrs, prev_state, labels, memory, n_msg):
    S = prev_state.shape[0]
    T = llrs.size // 2
    neg = -np.inf
    pm = np.full(S, neg)
    pm[0] = 0.0
    new = np.empty(S)
    bm = np.empty(4)
    choice = np.zeros((T, S), dtype=np.int8)
    for t in range(T):
        l0 = 0.5 * llrs[2 * t]
        l1 = 0.5 * llrs[2 * t + 1]
        # label = 2*c0 + c1
        bm[0] = l0 + l1
        bm[1] = l0 - l1
        bm[2] = -l0 + l1
        bm[3] = -l0 - l1
        for ns in range(S):
            b = ns >> (memory - 1)
            p0 = prev_state[ns, 0]
            p1 = prev_state[ns, 1]
            m0 = pm[p0] + bm[labels[p0, b]]
            m1 = pm[p1] + bm[labels[p1, b]]
            # ties keep the path whose dropped input bit is 0
            if m1 > m0:
                new[ns] = m1
                choice[t, ns] = 1
            else:
                new[ns] = m0
                choice[t, ns] = 0
        for s in range(S):
            pm[s] = new[s]
    bits = np.empty(T, dtype=np.int8)
    s = 0
    for t in range(T - 1, -1, -1):
        bits[t] = s >> (memory - 1)
        s = prev_state[s, choice[t, s]]
    return bits[:n_msg], pm[0]


def viterbi_decode(llrs, code: ConvCode = ConvCode(), hard: bool = False) -> np.ndarray:
    """Soft-decision maximum-likelihood sequence estimate over terminated codewords.

    With ``hard=True`` the LLRs are first sliced to +-1, giving a hard-input decoder.
    Returns the message bits (tail stripped) as ``int8``.
    """
    llrs = _check_llrs(llrs, code)
    if hard:
        llrs = np.where(llrs < 0, -1.0, 1.0)
    tr = code.trellis
    bits, _ = _viterbi_kernel(llrs, tr.prev_state, tr.labels, tr.memory, code.message_length(llrs.size))
    return bits


def viterbi_metric(llrs, code: ConvCode = ConvCode()) -> float:
    """Best terminated path metric, ``max_c sum llr_i (1 - 2 c_i) / 2``."""
    llrs = _check_llrs(llrs, code)
    tr = code.trellis
    _, m = _viterbi_kernel(llrs, tr.prev_state, tr.labels, tr.memory, code.message_length(llrs.size))
    return float(m)


# ---------------------------------------------------------------------------
# BCJR (exact log-MAP)


_FLOOR = -1e300  # stands in for log(0); stays finite so max* needs no special cases


@numba.njit(cache=True, inline="always")
def _maxstar(a, b):
    m = max(a, b)
    return m + math.log1p(math.exp(-abs(a - b)))


@numba.njit(cache=True)
def _bcjr_kernel(llrs, next_state, prev_state, labels, memory, n_msg):
    S = next_state.shape[0]
    T = llrs.size // 2
    # metric of each 2-bit output label per step; label = 2*c0 + c1
    gam = np.empty((T, 4))
    for t in range(T):
        l0 = 0.5 * llrs[2 * t]
        l1 = 0.5 * llrs[2 * t + 1]
        gam[t, 0] = l0 + l1
        gam[t, 1] = l0 - l1
        gam[t, 2] = -l0 + l1
        gam[t, 3] = -l0 - l1
    alpha = np.full((T + 1, S), _FLOOR)
    alpha[0, 0] = 0.0
    for t in range(T):
        g = gam[t]
        a = alpha[t]
        for ns in range(S):
            b = ns >> (memory - 1)
            if b and t >= n_msg:
                continue
            p0 = prev_state[ns, 0]
            p1 = prev_state[ns, 1]
            alpha[t + 1, ns] = _maxstar(a[p0] + g[labels[p0, b]], a[p1] + g[labels[p1, b]])
    beta = np.full((T + 1, S), _FLOOR)
    beta[T, 0] = 0.0
    for t in range(T - 1, -1, -1):
        g = gam[t]
        bn = beta[t + 1]
        if t < n_msg:
            for s in range(S):
                beta[t, s] = _maxstar(g[labels[s, 0]] + bn[next_state[s, 0]],
                                      g[labels[s, 1]] + bn[next_state[s, 1]])
        else:
            for s in range(S):
                beta[t, s] = g[labels[s, 0]] + bn[next_state[s, 0]]
    post = np.empty(n_msg)
    for t in range(n_msg):
        g = gam[t]
        a = alpha[t]
        bn = beta[t + 1]
        p0 = _FLOOR
        p1 = _FLOOR
        for s in range(S):
            p0 = _maxstar(p0, a[s] + g[labels[s, 0]] + bn[next_state[s, 0]])
            p1 = _maxstar(p1, a[s] + g[labels[s, 1]] + bn[next_state[s, 1]])
        post[t] = p0 - p1
    return post


# Largest per-step |l0| + |l1| for which the scaled probability-domain recursion
# is used. Every state is reachable from the step's best state within `memory`
# steps, so no state falls more than about 2 * memory * 50 = 600 nats below the
# step maximum and nothing underflows; larger inputs use the log-domain kernel.
_PROB_DOMAIN_LIMIT = 100.0


@numba.njit(cache=True)
def _bcjr_kernel_prob(llrs, next_state, prev_state, labels, memory, n_msg):
    S = next_state.shape[0]
    T = llrs.size // 2
    gam = np.empty((T, 4))
    for t in range(T):
        l0 = 0.5 * llrs[2 * t]
        l1 = 0.5 * llrs[2 * t + 1]
        top = abs(l0) + abs(l1)
        gam[t, 0] = math.exp(l0 + l1 - top)
        gam[t, 1] = math.exp(l0 - l1 - top)
        gam[t, 2] = math.exp(-l0 + l1 - top)
        gam[t, 3] = math.exp(-l0 - l1 - top)
    alpha = np.zeros((T + 1, S))
    alpha[0, 0] = 1.0
    for t in range(T):
        g = gam[t]
        a = alpha[t]
        norm = 0.0
        for ns in range(S):
            b = ns >> (memory - 1)
            if b and t >= n_msg:
                continue
            p0 = prev_state[ns, 0]
            p1 = prev_state[ns, 1]
            v = a[p0] * g[labels[p0, b]] + a[p1] * g[labels[p1, b]]
            alpha[t + 1, ns] = v
            norm = max(norm, v)
        for ns in range(S):
            alpha[t + 1, ns] /= norm
    beta = np.zeros((T + 1, S))
    beta[T, 0] = 1.0
    for t in range(T - 1, -1, -1):
        g = gam[t]
        bn = beta[t + 1]
        norm = 0.0
        for s in range(S):
            v = g[labels[s, 0]] * bn[next_state[s, 0]]
            if t < n_msg:
                v += g[labels[s, 1]] * bn[next_state[s, 1]]
            beta[t, s] = v
            norm = max(norm, v)
        for s in range(S):
            beta[t, s] /= norm
    post = np.empty(n_msg)
    for t in range(n_msg):
        g = gam[t]
        a = alpha[t]
        bn = beta[t + 1]
        p0 = 0.0
        p1 = 0.0
        for s in range(S):
            p0 += a[s] * g[labels[s, 0]] * bn[next_state[s, 0]]
            p1 += a[s] * g[labels[s, 1]] * bn[next_state[s, 1]]
        post[t] = math.log(p0) - math.log(p1)
    return post


@numba.njit(cache=True)
def _bcjr_posteriors(llrs, next_state, prev_state, labels, memory, n_msg):
    spread = 0.0
    for t in range(llrs.size // 2):
        spread = max(spread, abs(llrs[2 * t]) + abs(llrs[2 * t + 1]))
    if spread <= _PROB_DOMAIN_LIMIT:
        return _bcjr_kernel_prob(llrs, next_state, prev_state, labels, memory, n_msg)
    return _bcjr_kernel(llrs, next_state, prev_state, labels, memory, n_msg)


@numba.njit(cache=True)
def _bcjr_error_counts(base_llrs, scales, ref_bits, next_state, prev_state, labels, memory, n_msg, stop_at_zero):
    out = np.full(scales.size, -1, dtype=np.int64)
    for i in range(scales.size):
        post = _bcjr_posteriors(base_llrs * scales[i], next_state, prev_state, labels, memory, n_msg)
        e = 0
        for t in range(n_msg):
            if (post[t] < 0) != (ref_bits[t] == 1):
                e += 1
        out[i] = e
        if stop_at_zero and e == 0:
            break
    return out


def bcjr_decode(llrs, code: ConvCode = ConvCode()) -> tuple[np.ndarray, np.ndarray]:
    """Exact log-MAP forward/backward decoding.

    Returns ``(bits, posterior_llrs)`` for the message bits. A zero posterior
    decides bit 0.
    """
    llrs = _check_llrs(llrs, code)
    tr = code.trellis
    post = _bcjr_posteriors(llrs, tr.next_state, tr.prev_state, tr.labels, tr.memory, code.message_length(llrs.size))
    return (post < 0).astype(np.int8), post


def bcjr_error_counts(llrs, scales, ref_bits, code: ConvCode = ConvCode(),
                      stop_at_zero: bool = False) -> np.ndarray:
    """Bit errors of ``bcjr_decode(llrs * scale)`` against ``ref_bits`` for every scale.

    With ``stop_at_zero`` the scan ends at the first error-free scale and the
    remaining entries are -1.
    """
    llrs = _check_llrs(llrs, code)
    tr = code.trellis
    ref = np.asarray(ref_bits, dtype=np.int64)
    n_msg = code.message_length(llrs.size)
    if ref.size != n_msg:
        raise ParameterError(f"reference has {ref.size} bits, block carries {n_msg}")
    return _bcjr_error_counts(llrs, np.asarray(scales, dtype=np.float64), ref, tr.next_state, tr.prev_state,
                              tr.labels, tr.memory, n_msg, stop_at_zero)


# ---------------------------------------------------------------------------
# Interleaver


@dataclass(frozen=True)
class BlockInterleaver:
    """Write row-wise into a ``rows x cols`` array, read column-wise.

    Sequences shorter than ``rows * cols`` are treated as zero-padded; the
    padding positions are dropped from the output, so the permutation acts on
    the actual sequence length.
    """

    rows: int = 8
    cols: int = 25
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ParameterError("interleaver rows and cols must be positive")

    @classmethod
    def for_length(cls, length: int, rows: int = 8) -> "BlockInterleaver":
        return cls(rows, max(1, -(-length // rows)))

    @property
    def size(self) -> int:
        return self.rows * self.cols

    def permutation(self, length: int) -> np.ndarray:
        """``out[i] = seq[perm[i]]`` for a sequence of ``length`` elements."""
        if length > self.size:
            raise ParameterError(f"sequence of {length} exceeds interleaver size {self.size}")
        perm = self._cache.get(length)
        if perm is None:
            full = np.arange(self.size).reshape(self.rows, self.cols).T.ravel()
            perm = full[full < length]
            self._cache[length] = perm
        return perm


def interleave(seq, pi: BlockInterleaver) -> np.ndarray:
    seq = np.asarray(seq)
    return seq[pi.permutation(seq.shape[-1])]


def deinterleave(seq, pi: BlockInterleaver) -> np.ndarray:
    seq = np.asarray(seq)
    out = np.empty_like(seq)
    out[pi.permutation(seq.shape[-1])] = seq
    return out
