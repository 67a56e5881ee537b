"""Fast self-checks behind ``multibeam validate``. Each check returns ``(ok, detail)``."""
from __future__ import annotations

import numpy as np

from . import fec, modem, oracles, receiver
from .channel import transmit, uniform_cci_matrix
from .montecarlo import Scenario, StopRule, qpsk_theoretical_ber, run_point, simulate_frame

SEED = 20240611


def check_round_trips():
    rng = np.random.default_rng(SEED)
    bits = rng.integers(0, 2, 200)
    if not np.array_equal(modem.qpsk_hard_demap(modem.qpsk_modulate(bits)), bits):
        return False, "QPSK map/demap"
    code = fec.ConvCode()
    msg = bits[:94]
    llr = 4.0 * (1 - 2 * fec.conv_encode(msg, code).astype(float))
    if not np.array_equal(fec.viterbi_decode(llr, code), msg):
        return False, "Viterbi on a noiseless codeword"
    if not np.array_equal(fec.bcjr_decode(llr, code)[0], msg):
        return False, "BCJR on a noiseless codeword"
    pi = fec.BlockInterleaver.for_length(200)
    if not np.array_equal(fec.deinterleave(fec.interleave(bits, pi), pi), bits):
        return False, "interleaver"
    errors = simulate_frame(Scenario(seed=SEED), 0.0, 0)
    if errors[-1] != 0:
        return False, f"noiseless reference scenario left {errors[-1]} bit errors"
    return True, ""


def check_bcjr_oracle(n_blocks: int = 20, n_msg: int = 6, tol: float = 1e-9):
    rng = np.random.default_rng(SEED + 1)
    code = fec.ConvCode()
    worst = 0.0
    for _ in range(n_blocks):
        msg = rng.integers(0, 2, n_msg)
        c = oracles.convolve_encode(msg)
        llr = 2.0 * (1 - 2 * c) + rng.normal(0, 2.0, c.size)
        _, post = fec.bcjr_decode(llr, code)
        worst = max(worst, float(np.max(np.abs(post - oracles.map_posteriors(llr, n_msg)))))
    return worst < tol, f"max posterior deviation {worst:.3e}"


def check_uncoded_qpsk(ebno_db: float = 4.0, rel_tol: float = 0.10):
    sc = Scenario(k_users=1, zeta=0.0, seed=SEED, detector=receiver.DetectorConfig(decoder="none", stages=2))
    rec = run_point(sc, ebno_db, StopRule(min_errors=500, max_frames=100000))[-1]
    ref = qpsk_theoretical_ber(ebno_db)
    dev = abs(rec.ber - ref) / ref
    return dev <= rel_tol, f"BER {rec.ber:.4e} vs {ref:.4e} ({100 * dev:.1f}% off)"


def check_combining_gain(zeta: float = 0.25):
    rng = np.random.default_rng(SEED + 2)
    H = uniform_cci_matrix(2, zeta)
    x = modem.qpsk_modulate(rng.integers(0, 2, (2, 64)).ravel()).reshape(2, 32)
    Y = transmit(H, x, 0.0, rng)
    cancelled = receiver.cancel_interference(Y[0], H.h[0], x, x, 0)
    y_t, gain = receiver.combine(Y, H.h, x, 0, cancelled)
    want = 1 + zeta ** 2
    ok = np.allclose(y_t, want * x[0], atol=1e-12) and abs(gain - want) < 1e-12
    return ok, f"combined gain {gain:.6f}, expected {want:.6f}"


CHECKS = [
    ("noiseless round trips", check_round_trips),
    ("BCJR matches exhaustive MAP", check_bcjr_oracle),
    ("uncoded QPSK BER at 4 dB", check_uncoded_qpsk),
    ("combining gain", check_combining_gain),
]


def run_checks():
    out = []
    for name, fn in CHECKS:
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashing check is a failed check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append((name, bool(ok), detail))
    return out
