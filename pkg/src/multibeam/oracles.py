"""Brute-force reference computations.

These deliberately avoid the trellis tables in :mod:`multibeam.fec`: codewords
come from direct GF(2) convolution with the generator taps, and decoding
enumerates every message.
"""
from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.special import logsumexp


def generator_taps(g: int, constraint_length: int) -> np.ndarray:
    """Tap vector of an octal generator, most significant tap first (applies to the newest bit)."""
    return np.array([(g >> (constraint_length - 1 - i)) & 1 for i in range(constraint_length)])


def convolve_encode(bits, generators=(0o171, 0o133), constraint_length=7) -> np.ndarray:
    """Zero-tail encoding by polynomial multiplication over GF(2)."""
    msg = np.concatenate([np.asarray(bits, dtype=np.int64), np.zeros(constraint_length - 1, dtype=np.int64)])
    streams = [np.convolve(msg, generator_taps(g, constraint_length))[: msg.size] % 2 for g in generators]
    return np.ravel(np.column_stack(streams)).astype(np.int8)


def all_codewords(n_msg: int, generators=(0o171, 0o133), constraint_length=7):
    msgs = np.array(list(itertools.product((0, 1), repeat=n_msg)), dtype=np.int8).reshape(-1, n_msg)
    words = np.array([convolve_encode(m, generators, constraint_length) for m in msgs])
    return msgs, words


def path_metrics(llrs, words) -> np.ndarray:
    """``sum_i llr_i (1 - 2 c_i) / 2`` for every codeword row."""
    return 0.5 * (1 - 2 * words.astype(float)) @ np.asarray(llrs, dtype=float)


def ml_decode(llrs, n_msg: int, generators=(0o171, 0o133), constraint_length=7):
    """Exhaustive maximum-likelihood message and its metric."""
    msgs, words = all_codewords(n_msg, generators, constraint_length)
    m = path_metrics(llrs, words)
    best = int(np.argmax(m))
    return msgs[best], float(m[best])


def map_posteriors(llrs, n_msg: int, generators=(0o171, 0o133), constraint_length=7) -> np.ndarray:
    """Exact per-bit posterior LLRs by summing over all ``2**n_msg`` codewords."""
    msgs, words = all_codewords(n_msg, generators, constraint_length)
    m = path_metrics(llrs, words)
    return np.array([logsumexp(m[msgs[:, t] == 0]) - logsumexp(m[msgs[:, t] == 1]) for t in range(n_msg)])


def q_function(x: float) -> float:
    return 0.5 * math.erfc(x / math.sqrt(2))
