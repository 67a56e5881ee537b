"""QPSK mapping, pilot books and frame assembly.

The alphabet is the unnormalized set {+-1 +- j}, so every symbol has energy 2.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import FramingError, ParameterError
from .fec import BlockInterleaver, ConvCode, conv_encode, interleave

PilotMode = Literal["coded-preamble", "orthogonal"]


def qpsk_modulate(bits) -> np.ndarray:
    """Map bit pairs ``(b_I, b_Q)`` to ``(1 - 2 b_I) + j (1 - 2 b_Q)``."""
    bits = np.asarray(bits, dtype=np.int64).ravel()
    if bits.size % 2:
        raise FramingError(f"QPSK needs an even bit count, got {bits.size}")
    pairs = bits.reshape(-1, 2)
    return (1 - 2 * pairs[:, 0]) + 1j * (1 - 2 * pairs[:, 1])


def qpsk_soft_demap(y, gain=1.0, noise_var=1.0) -> np.ndarray:
    """Bit LLRs for ``y = gain * x + z`` with ``E|z|^2 = noise_var``.

    Returns an interleaved ``[llr_I0, llr_Q0, llr_I1, ...]`` array (scalar input
    gives a length-2 array). Positive means bit 0.
    """
    if not noise_var > 0:
        raise ParameterError(f"noise_var must be positive, got {noise_var}")
    r = np.conj(gain) * np.atleast_1d(np.asarray(y, dtype=np.complex128))
    out = np.empty(2 * r.size)
    out[0::2] = 4.0 * r.real / noise_var
    out[1::2] = 4.0 * r.imag / noise_var
    return out


def qpsk_hard_demap(y, gain=1.0) -> np.ndarray:
    """Quadrant decisions; exact zeros decide bit 0. Returns interleaved I/Q bits."""
    r = np.conj(gain) * np.atleast_1d(np.asarray(y, dtype=np.complex128))
    out = np.empty(2 * r.size, dtype=np.int8)
    out[0::2] = r.real < 0
    out[1::2] = r.imag < 0
    return out


def sign_matrix(order: int) -> np.ndarray:
    """Sylvester-Hadamard matrix of size ``order`` (a power of two)."""
    h = np.ones((1, 1), dtype=np.int64)
    while h.shape[0] < order:
        h = np.block([[h, h], [h, -h]])
    return h


@dataclass(frozen=True)
class PilotBook:
    mode: str
    bits: np.ndarray  # (K, n_pilot_bits)
    symbols: np.ndarray  # (K, N_p) complex

    @property
    def n_users(self) -> int:
        return self.symbols.shape[0]

    @property
    def n_pilot(self) -> int:
        return self.symbols.shape[1]


def pilot_message_length(n_pilot: int, code: ConvCode) -> int:
    n = code.message_length(2 * n_pilot) if n_pilot > code.tail else -1
    if n < 1:
        raise ParameterError(f"coded preamble needs more than {code.tail} pilot symbols, got {n_pilot}")
    return n


def make_pilot_book(n_users: int, n_pilot: int, mode: PilotMode = "coded-preamble",
                    code: ConvCode | None = None, seed: int = 0) -> PilotBook:
    """Per-user training sequences.

    ``coded-preamble``: user k transmits the encoded image of a bit pattern drawn
    from a generator seeded by ``(seed, k)``; patterns are redrawn until all users
    differ. ``orthogonal``: rows of a Sylvester sign matrix tiled to ``n_pilot``
    and scaled by ``1 + j``; pairwise cross-correlations vanish when ``n_pilot`` is
    a multiple of the matrix order.
    """
    if n_users < 1 or n_pilot < 1:
        raise ParameterError("n_users and n_pilot must be >= 1")
    if mode == "orthogonal":
        order = 1 << int(np.ceil(np.log2(n_users))) if n_users > 1 else 1
        signs = sign_matrix(order)[:n_users]
        reps = -(-n_pilot // order)
        signs = np.tile(signs, reps)[:, :n_pilot]
        sym_bits = (signs < 0).astype(np.int8)
        bits = np.repeat(sym_bits, 2, axis=1)
        symbols = signs * (1 + 1j)
        return PilotBook(mode, bits, symbols)
    if mode != "coded-preamble":
        raise ParameterError(f"unknown pilot mode {mode!r}")
    code = code or ConvCode()
    n_bits = pilot_message_length(n_pilot, code)
    rows = []
    for k in range(n_users):
        rng = np.random.default_rng([seed, k])
        while True:
            b = rng.integers(0, 2, n_bits, dtype=np.int8)
            if not any(np.array_equal(b, r) for r in rows):
                break
        rows.append(b)
    bits = np.array(rows, dtype=np.int8)
    symbols = np.array([qpsk_modulate(conv_encode(b, code)) for b in bits])
    return PilotBook(mode, bits, symbols)


@dataclass(frozen=True)
class Frame:
    pilot: np.ndarray
    info: np.ndarray
    pilot_bits: np.ndarray
    info_bits: np.ndarray

    @property
    def symbols(self) -> np.ndarray:
        return np.concatenate([self.pilot, self.info])

    def __len__(self):
        return self.pilot.size + self.info.size


def info_bits_per_frame(n_info: int, code: ConvCode | None) -> int:
    """Payload bits carried by ``n_info`` QPSK symbols (tail bits excluded)."""
    if code is None:
        return 2 * n_info
    return code.message_length(2 * n_info)


def encode_info(info_bits, code: ConvCode | None, interleaver: BlockInterleaver | None) -> np.ndarray:
    """Payload bits to info-block symbols: encode, interleave, modulate."""
    coded = np.asarray(info_bits, dtype=np.int8) if code is None else conv_encode(info_bits, code)
    if interleaver is not None:
        coded = interleave(coded, interleaver)
    return qpsk_modulate(coded)


def build_frame(info_bits, pilot_seq, code: ConvCode | None, interleaver: BlockInterleaver | None,
                n_info: int | None = None, pilot_bits=None) -> Frame:
    info_bits = np.asarray(info_bits, dtype=np.int8)
    pilot_seq = np.asarray(pilot_seq, dtype=np.complex128)
    if n_info is not None and info_bits.size != info_bits_per_frame(n_info, code):
        raise FramingError(
            f"{info_bits.size} payload bits given, frame of {n_info} symbols carries "
            f"{info_bits_per_frame(n_info, code)}")
    info = encode_info(info_bits, code, interleaver)
    if n_info is not None and info.size != n_info:
        raise FramingError(f"payload maps to {info.size} symbols, expected {n_info}")
    pb = np.empty(0, dtype=np.int8) if pilot_bits is None else np.asarray(pilot_bits, dtype=np.int8)
    return Frame(pilot_seq.copy(), info, pb, info_bits.copy())
