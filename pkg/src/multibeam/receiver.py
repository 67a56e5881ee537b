"""Multistage successive-interference-cancellation detector.

Each stage visits the users in a fixed order. For user k it cancels the other
users' regenerated symbols from beam k, optionally folds in user k's energy
leaked into the other beams, decodes, and regenerates user k's symbol row.
After the stage, the coupling matrix is re-estimated from all regenerated rows.

Indexing: ``h_hat[k, i]`` estimates the gain of user i in beam k.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .channel import ebno_to_n0
from .errors import DegeneratePilotError, FramingError, ParameterError, UnsupportedModeError
from .fec import BlockInterleaver, ConvCode, bcjr_decode, bcjr_error_counts, deinterleave, viterbi_decode
from .modem import PilotBook, encode_info, info_bits_per_frame, qpsk_hard_demap, qpsk_soft_demap

log = logging.getLogger(__name__)

DECODERS = ("viterbi", "bcjr", "none")
USER_ORDERS = ("index", "estimated-power")
CHANNEL_ESTIMATORS = ("least-squares", "correlation")


@dataclass(frozen=True)
class DetectorConfig:
    stages: int = 3
    decoder: str = "viterbi"
    combining: bool = True
    snr_min_db: float = -5.0
    snr_max_db: float = 20.0
    snr_step_db: float = 0.5
    user_order: str = "index"
    hard_decision: bool = False
    channel_estimator: str = "least-squares"

    def __post_init__(self):
        if self.stages < 1:
            raise ParameterError("stages must be >= 1")
        if self.decoder not in DECODERS:
            raise ParameterError(f"decoder must be one of {DECODERS}, got {self.decoder!r}")
        if self.user_order not in USER_ORDERS:
            raise ParameterError(f"user_order must be one of {USER_ORDERS}, got {self.user_order!r}")
        if self.channel_estimator not in CHANNEL_ESTIMATORS:
            raise ParameterError(f"channel_estimator must be one of {CHANNEL_ESTIMATORS}, "
                                 f"got {self.channel_estimator!r}")
        if not self.snr_min_db < self.snr_max_db:
            raise ParameterError("snr_min_db must be below snr_max_db")
        if not self.snr_step_db > 0:
            raise ParameterError("snr_step_db must be positive")

    def snr_grid(self) -> np.ndarray:
        n = int(np.floor((self.snr_max_db - self.snr_min_db) / self.snr_step_db + 1e-9)) + 1
        return self.snr_min_db + self.snr_step_db * np.arange(n)


@dataclass
class StageState:
    x_hat: np.ndarray  # (K, N) regenerated symbols
    h_hat: np.ndarray  # (K, K) channel estimate produced at the end of this stage
    phase: np.ndarray  # (K,)
    snr_db: np.ndarray  # (K,), NaN where not estimated
    decoded_bits: np.ndarray | None = None  # (K, n_msg)
    residual_energy: np.ndarray | None = None  # (K,)


@dataclass
class DetectionReport:
    initial: StageState
    stages: list[StageState] = field(default_factory=list)
    order: list[int] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def decoded_bits(self) -> np.ndarray:
        """Final-stage decisions."""
        return self.stages[-1].decoded_bits


# ---------------------------------------------------------------------------
# Building blocks


def estimate_phase(y_pilot, pilot) -> float:
    """Carrier phase from pilot correlation, wrapped to ``[0, 2 pi)``."""
    y_pilot = np.asarray(y_pilot)
    pilot = np.asarray(pilot)
    if y_pilot.size < 1 or y_pilot.shape != pilot.shape:
        raise ParameterError("pilot block and received samples must have equal non-zero length")
    c = np.sum(y_pilot * np.conj(pilot))
    if c == 0:
        raise DegeneratePilotError("pilot correlation is zero")
    return float(np.angle(c) % (2 * np.pi))


def snr_noise_var(snr_db, gain, code_rate: float = 0.5):
    """Noise variance implied by Eb/N0 hypotheses (dB, scalar or array) for a signal received with ``gain``."""
    return abs(gain) ** 2 * ebno_to_n0(0.0, code_rate) / 10 ** (np.asarray(snr_db) / 10)


def estimate_snr(y_pilot, pilot_bits, code: ConvCode, grid, gain=1.0, tie_ref: float | None = None,
                 mode: str = "coded-preamble") -> float:
    """Pick the Eb/N0 hypothesis whose BCJR decode of the pilot block makes the fewest bit errors.

    Among equally good hypotheses the one nearest ``tie_ref`` wins (grid median
    when ``tie_ref`` is None); remaining ties go to the lower value. Candidates
    are visited in that preference order, so the scan can stop at the first
    error-free one.
    """
    if mode != "coded-preamble":
        raise UnsupportedModeError("SNR search needs coded-preamble pilots")
    grid = np.asarray(grid, dtype=float).ravel()
    if grid.size == 0:
        raise ParameterError("empty SNR grid")
    if grid.size == 1:
        return float(grid[0])
    ref = float(np.median(grid)) if tie_ref is None else tie_ref
    pref = np.lexsort((grid, np.abs(grid - ref)))
    cand = grid[pref]
    base = qpsk_soft_demap(y_pilot, gain, 1.0)
    scales = 1.0 / snr_noise_var(cand, gain) if abs(gain) > 0 else np.ones(cand.size)
    errs = bcjr_error_counts(base, scales, pilot_bits, code, stop_at_zero=True)
    errs = np.where(errs < 0, np.iinfo(np.int64).max, errs)
    return float(cand[np.argmin(errs)])


def cancel_interference(y_k, h_row, x_fresh, x_prev, k: int, done=None) -> np.ndarray:
    """Remove every other user's contribution from beam k.

    Users flagged in ``done`` (already processed this stage) are cancelled with
    their fresh estimates ``x_fresh``; the rest with ``x_prev``. ``h_row`` is row
    k of the previous-stage estimate; NaN entries (absent coefficients) are skipped.
    """
    K = len(h_row)
    h = np.where(np.isfinite(h_row), h_row, 0)
    done = np.zeros(K, dtype=bool) if done is None else np.asarray(done, dtype=bool)
    x = np.where(done[:, None], x_fresh, x_prev)
    mask = np.ones(K, dtype=bool)
    mask[k] = False
    return np.asarray(y_k) - h[mask] @ x[mask]


def combine(Y, h_hat, x_prev, k: int, cancelled_k) -> tuple[np.ndarray, complex]:
    """Fold user k's leakage in the other beams into beam k.

    Every other beam is cleaned of all users except k using the previous-stage
    estimates, weighted by the conjugate of k's leakage coefficient into it, and
    the sum is rotated onto the phase of k's own coefficient so that it adds
    coherently. Returns the combined samples and their effective gain
    ``h_kk + e^{j arg h_kk} * sum |h_k'k|^2``.
    """
    H = np.where(np.isfinite(h_hat), h_hat, 0)
    K = H.shape[0]
    hkk = H[k, k]
    rot = hkk / abs(hkk) if abs(hkk) > 0 else 1.0
    others = [m for m in range(K) if m != k]
    if not others:
        return np.asarray(cancelled_k).copy(), complex(hkk)
    Y = np.asarray(Y)
    leak = H[others, k]
    resid = Y[others] - H[others] @ x_prev + leak[:, None] * x_prev[k][None, :]
    R = rot * (np.conj(leak) @ resid)
    gain = hkk + rot * np.sum(np.abs(leak) ** 2)
    return cancelled_k + R, complex(gain)


def estimate_channel(Y, x_hat, n_cols: int | None = None) -> np.ndarray:
    """Correlation estimate ``h[k, i] = sum_j y_k(j) conj(x_i(j)) / (2 n)`` over the first ``n_cols`` symbols.

    The factor 2 is the QPSK symbol energy. Users whose estimate row is all zero
    get NaN coefficients.
    """
    Y = np.asarray(Y)
    X = np.asarray(x_hat)
    n = Y.shape[1] if n_cols is None else n_cols
    H = Y[:, :n] @ np.conj(X[:, :n]).T / (2.0 * n)
    absent = ~np.any(X[:, :n] != 0, axis=1)
    H[:, absent] = np.nan
    return H


def estimate_channel_ls(Y, x_hat, n_cols: int | None = None) -> np.ndarray:
    """Correlation estimate decorrelated by the Gram matrix of the symbol rows.

    Equals :func:`estimate_channel` whenever the rows of ``x_hat`` are
    orthogonal; otherwise removes the cross-talk between users' symbol streams
    (least squares fit of ``Y ~ H x_hat``). Falls back to the plain correlation
    estimate if the Gram matrix is singular.
    """
    Y = np.asarray(Y)
    X = np.asarray(x_hat)
    n = Y.shape[1] if n_cols is None else n_cols
    Xn = X[:, :n]
    present = np.any(Xn != 0, axis=1)
    H = np.full((Y.shape[0], X.shape[0]), np.nan, dtype=np.complex128)
    Xp = Xn[present]
    corr = Y[:, :n] @ np.conj(Xp).T / (2.0 * n)
    gram = Xp @ np.conj(Xp).T / (2.0 * n)
    try:
        H[:, present] = np.linalg.solve(gram.T, corr.T).T
    except np.linalg.LinAlgError:
        H[:, present] = corr
    return H


def estimate_channel_row(y_k, x_hat, n_cols: int | None = None) -> np.ndarray:
    return estimate_channel(np.atleast_2d(y_k), x_hat, n_cols)[0]


def regenerate(decoded_bits, pilot_symbols, code: ConvCode | None, interleaver: BlockInterleaver | None,
               n_info: int | None = None) -> np.ndarray:
    """Re-encode, re-interleave and re-modulate decisions behind the known pilots."""
    bits = np.asarray(decoded_bits, dtype=np.int8)
    if n_info is not None and bits.size != info_bits_per_frame(n_info, code):
        raise FramingError(f"{bits.size} decoded bits do not fill {n_info} info symbols")
    return np.concatenate([np.asarray(pilot_symbols, dtype=np.complex128), encode_info(bits, code, interleaver)])


# ---------------------------------------------------------------------------
# Detector


def _decode_user(y_info, gain, noise_var, config: DetectorConfig, code, interleaver):
    if config.decoder == "none":
        return qpsk_hard_demap(y_info, gain)
    llr = qpsk_soft_demap(y_info, gain, noise_var)
    if interleaver is not None:
        llr = deinterleave(llr, interleaver)
    if config.decoder == "viterbi":
        return viterbi_decode(llr, code, hard=config.hard_decision)
    bits, _ = bcjr_decode(llr, code)
    return bits


def run_detector(Y, pilots: PilotBook, config: DetectorConfig, code: ConvCode | None,
                 interleaver: BlockInterleaver | None) -> DetectionReport:
    """Run ``config.stages`` SIC stages over one received frame ``Y`` (K x (N_p + N_i)).

    With ``config.decoder == "none"`` the payload is taken as uncoded and
    ``code``/``interleaver`` only matter for the pilot book.
    """
    Y = np.asarray(Y, dtype=np.complex128)
    K, N = Y.shape
    Np = pilots.n_pilot
    if pilots.n_users != K or N <= Np:
        raise ParameterError(f"received block {Y.shape} inconsistent with pilot book "
                             f"({pilots.n_users} users x {Np} symbols)")
    n_info = N - Np
    coded = config.decoder != "none"
    if coded and code is None:
        raise ParameterError(f"decoder {config.decoder!r} needs a convolutional code")
    payload_code = code if coded else None
    payload_pi = interleaver if coded else None
    code_rate = code.rate if coded else 1.0
    n_msg = info_bits_per_frame(n_info, payload_code)
    estimate = estimate_channel_ls if config.channel_estimator == "least-squares" else estimate_channel
    grid = config.snr_grid()

    report = DetectionReport(initial=None)
    x_hat = np.zeros((K, N), dtype=np.complex128)
    x_hat[:, :Np] = pilots.symbols
    phase = np.zeros(K)
    for k in range(K):
        try:
            phase[k] = estimate_phase(Y[k, :Np], pilots.symbols[k])
        except DegeneratePilotError:
            report.warnings.append(f"user {k}: degenerate pilot correlation, phase set to 0")
    h_hat = estimate(Y, x_hat, Np)
    snr = np.full(K, np.nan)
    report.initial = StageState(x_hat.copy(), h_hat.copy(), phase.copy(), snr.copy())

    if config.user_order == "estimated-power":
        order = [int(k) for k in np.argsort(-np.abs(np.nan_to_num(np.diag(h_hat))), kind="stable")]
    else:
        order = list(range(K))
    report.order = order

    decoded = np.zeros((K, n_msg), dtype=np.int8)
    for stage in range(config.stages):
        h_prev = h_hat
        x_prev = x_hat.copy()
        snr_prev = snr.copy()
        done = np.zeros(K, dtype=bool)
        resid = np.zeros(K)
        for k in order:
            cancelled = cancel_interference(Y[k], h_prev[k], x_hat, x_prev, k, done)
            hkk = h_prev[k, k]
            if not np.isfinite(hkk) or hkk == 0:
                hkk = np.exp(1j * phase[k])
            y_k, gain = cancelled, hkk
            # stage 1 has no payload estimates yet; combining would add whole users back in
            if config.combining and stage > 0:
                y_k, gain = combine(Y, h_prev, x_prev, k, cancelled)
            noise_var = 1.0
            if config.decoder == "bcjr":
                tie = None if np.isnan(snr_prev[k]) else float(snr_prev[k])
                snr[k] = estimate_snr(y_k[:Np], pilots.bits[k], code, grid, gain, tie, pilots.mode)
                noise_var = snr_noise_var(snr[k], gain, code_rate)
            try:
                bits = _decode_user(y_k[Np:], gain, noise_var, config, payload_code, payload_pi)
                x_hat[k] = regenerate(bits, pilots.symbols[k], payload_code, payload_pi, n_info)
                decoded[k] = bits
            except (ParameterError, FramingError) as exc:
                report.warnings.append(f"user {k}: decode failed ({exc}); keeping previous estimate")
            done[k] = True
            resid[k] = np.mean(np.abs(cancelled - hkk * x_hat[k]) ** 2)
        h_hat = estimate(Y, x_hat)
        report.stages.append(StageState(x_hat.copy(), h_hat.copy(), phase.copy(), snr.copy(),
                                        decoded.copy(), resid))
    return report
