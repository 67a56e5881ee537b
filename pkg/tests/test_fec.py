import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from multibeam import fec, oracles
from multibeam.errors import ParameterError
from multibeam.fec import BlockInterleaver, ConvCode, bcjr_decode, conv_encode, viterbi_decode

CODE = ConvCode()
bit_lists = st.lists(st.integers(0, 1), min_size=0, max_size=40)


def bpsk_llr(coded, amp=1.0):
    return amp * (1 - 2 * np.asarray(coded, dtype=float))


# --- code and trellis ------------------------------------------------------


def test_default_code_is_171_133_k7():
    assert CODE.generators == (0o171, 0o133)
    assert CODE.n_states == 64 and CODE.tail == 6


@pytest.mark.parametrize("gens,k", [((0o171, 0o133), 8), ((0o170, 0o133), 7), ((0o71, 0o133), 7), ((0o171,), 7)])
def test_bad_generators_rejected(gens, k):
    with pytest.raises(ParameterError):
        ConvCode(gens, k)


def test_trellis_two_in_two_out():
    tr = CODE.trellis
    incoming = np.bincount(tr.next_state.ravel(), minlength=64)
    assert np.all(incoming == 2)
    for t in range(64):
        for p in tr.prev_state[t]:
            assert t in tr.next_state[p]


# --- encoder ---------------------------------------------------------------


def test_impulse_response():
    out = conv_encode([1]).reshape(-1, 2)
    assert out.tolist() == [[1, 1], [1, 0], [1, 1], [1, 1], [0, 0], [0, 1], [1, 1]]


def test_zero_input_gives_zero_codeword():
    out = conv_encode(np.zeros(10, dtype=int))
    assert out.size == 32 and not out.any()


@given(bit_lists)
def test_encoder_matches_polynomial_convolution(bits):
    assert np.array_equal(conv_encode(bits), oracles.convolve_encode(bits))


@given(st.integers(0, 2**30), st.integers(1, 60))
def test_encoder_linear(seed, n):
    rng = np.random.default_rng(seed)
    a, b = rng.integers(0, 2, (2, n))
    assert np.array_equal(conv_encode(a ^ b), conv_encode(a) ^ conv_encode(b))


@given(bit_lists)
def test_encoder_terminates_in_zero_state(bits):
    assert fec.encoder_final_state(bits) == 0
    assert conv_encode(bits).size == 2 * (len(bits) + 6)


# --- Viterbi ---------------------------------------------------------------


@given(st.integers(0, 2**30), st.integers(1, 80), st.floats(0.01, 1e3))
def test_viterbi_noiseless(seed, n, amp):
    m = np.random.default_rng(seed).integers(0, 2, n)
    assert np.array_equal(viterbi_decode(bpsk_llr(conv_encode(m), amp)), m)


def test_viterbi_all_zero_llrs_deterministic():
    a = viterbi_decode(np.zeros(40))
    b = viterbi_decode(np.zeros(40))
    assert np.array_equal(a, b)
    # every branch ties; bit-0 preference yields the zero message
    assert not a.any()


@pytest.mark.parametrize("seed", range(10))
def test_viterbi_corrects_single_flip(seed):
    rng = np.random.default_rng(seed)
    m = rng.integers(0, 2, 12)
    llr = bpsk_llr(conv_encode(m))
    llr[rng.integers(llr.size)] *= -1
    assert np.array_equal(viterbi_decode(llr), m)
    ml, _ = oracles.ml_decode(llr, 12)
    assert np.array_equal(ml, m)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**30), st.integers(1, 10))
def test_viterbi_metric_is_exhaustive_maximum(seed, n):
    rng = np.random.default_rng(seed)
    llr = rng.normal(0, 2, 2 * (n + 6))
    _, best = oracles.ml_decode(llr, n)
    assert fec.viterbi_metric(llr) == pytest.approx(best, abs=1e-9)
    # the decoded message attains that metric
    dec = viterbi_decode(llr)
    assert oracles.path_metrics(llr, conv_encode(dec)[None, :])[0] == pytest.approx(best, abs=1e-9)


def test_viterbi_hard_input_option():
    rng = np.random.default_rng(3)
    m = rng.integers(0, 2, 30)
    llr = bpsk_llr(conv_encode(m)) * rng.uniform(0.1, 5, 72)
    assert np.array_equal(viterbi_decode(llr, hard=True), m)


@pytest.mark.parametrize("n", [3, 13])
def test_viterbi_rejects_bad_length(n):
    with pytest.raises(ParameterError):
        viterbi_decode(np.zeros(n))


# --- BCJR ------------------------------------------------------------------


def test_bcjr_saturated_input():
    m = np.random.default_rng(1).integers(0, 2, 50)
    bits, post = bcjr_decode(bpsk_llr(conv_encode(m), 100.0))
    assert np.array_equal(bits, m)
    assert np.all(np.abs(post) > 50) and np.all(np.isfinite(post))


def test_bcjr_zero_llrs_give_zero_posteriors():
    _, post = bcjr_decode(np.zeros(2 * (20 + 6)))
    assert np.allclose(post, 0.0, atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**30), st.integers(1, 8), st.floats(0.05, 8.0))
def test_bcjr_matches_exhaustive_map(seed, n, sigma):
    rng = np.random.default_rng(seed)
    m = rng.integers(0, 2, n)
    llr = 2.0 * bpsk_llr(conv_encode(m)) + rng.normal(0, sigma, 2 * (n + 6))
    _, post = bcjr_decode(llr)
    assert np.max(np.abs(post - oracles.map_posteriors(llr, n))) < 1e-9


@pytest.mark.parametrize("scale", [0.01, 1.0, 10.0, 30.0, 300.0])
def test_bcjr_kernels_agree(scale):
    tr = CODE.trellis
    llr = np.random.default_rng(7).normal(0.5, 1.0, 2 * 60) * scale
    args = (tr.next_state, tr.prev_state, tr.labels, tr.memory, 54)
    ref = fec._bcjr_kernel(llr, *args)
    assert np.all(np.isfinite(ref))
    spread = np.max(np.abs(llr[::2]) + np.abs(llr[1::2]))
    if spread <= fec._PROB_DOMAIN_LIMIT:
        assert np.allclose(fec._bcjr_kernel_prob(llr, *args), ref, atol=1e-9, rtol=0)
    # the dispatcher always reproduces the log-domain result
    assert np.allclose(fec._bcjr_posteriors(llr, *args), ref, atol=1e-9, rtol=0)


def test_bcjr_large_llrs_stay_finite():
    rng = np.random.default_rng(5)
    llr = rng.normal(0, 1, 2 * 40) * 1e4
    _, post = bcjr_decode(llr)
    assert np.all(np.isfinite(post))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**30), st.integers(1, 60))
def test_bcjr_agrees_with_viterbi_when_saturated(seed, n):
    m = np.random.default_rng(seed).integers(0, 2, n)
    llr = bpsk_llr(conv_encode(m), 60.0)
    assert np.array_equal(bcjr_decode(llr)[0], viterbi_decode(llr))


def test_bcjr_rejects_non_finite():
    llr = np.zeros(14)
    llr[3] = np.nan
    with pytest.raises(ParameterError):
        bcjr_decode(llr)


def test_error_counts_match_individual_decodes():
    rng = np.random.default_rng(11)
    m = rng.integers(0, 2, 24)
    llr = bpsk_llr(conv_encode(m)) + rng.normal(0, 1.2, 60)
    scales = np.array([0.1, 0.5, 1.0, 4.0, 50.0])
    counts = fec.bcjr_error_counts(llr, scales, m)
    want = [np.count_nonzero(bcjr_decode(llr * s)[0] != m) for s in scales]
    assert counts.tolist() == want


# --- interleaver -----------------------------------------------------------


def test_single_row_is_identity():
    pi = BlockInterleaver(1, 9)
    assert np.array_equal(fec.interleave(np.arange(9), pi), np.arange(9))


def test_row_write_column_read():
    pi = BlockInterleaver(2, 3)
    assert list(fec.interleave(list("abcdef"), pi)) == list("adbecf")


@given(st.integers(1, 12), st.integers(1, 12), st.data())
def test_interleaver_round_trip(rows, cols, data):
    n = data.draw(st.integers(0, rows * cols))
    seq = np.arange(n)
    pi = BlockInterleaver(rows, cols)
    out = fec.interleave(seq, pi)
    assert sorted(out) == list(seq)
    assert np.array_equal(fec.deinterleave(out, pi), seq)


def test_interleaver_oversize_rejected():
    with pytest.raises(ParameterError):
        fec.interleave(np.arange(7), BlockInterleaver(2, 3))


def test_default_interleaver_shape():
    pi = BlockInterleaver.for_length(200)
    assert (pi.rows, pi.cols) == (8, 25)
