import math

import numpy as np
import pytest

from multibeam.channel import ebno_to_n0
from multibeam.errors import ParameterError
from multibeam.montecarlo import (BerRecord, Scenario, StopRule, frame_rng, qpsk_theoretical_ber, run_point,
                                  simulate_frame, sweep, with_detector)


def test_defaults_reproduce_reference_scenario():
    s = Scenario()
    assert (s.k_users, s.n_info, s.n_pilot, s.zeta) == (5, 100, 30, 0.25)
    assert s.amplitudes is None and s.phase_mode == "random"
    assert s.info_bits == 94 and s.code_rate == 0.5
    assert (s.interleaver.rows, s.interleaver.cols) == (8, 25)


def test_uncoded_scenario_uses_all_payload_bits():
    s = with_detector(Scenario(k_users=1, zeta=0.0), decoder="none")
    assert s.uncoded and s.info_bits == 200 and s.code_rate == 1.0 and s.interleaver is None


@pytest.mark.parametrize("kw", [dict(k_users=0), dict(amplitudes=(1.0,)), dict(phase_mode="fixed"),
                                dict(phase_mode=(0.0, 1.0)), dict(zeta=-0.1)])
def test_bad_scenarios(kw):
    with pytest.raises(ParameterError):
        Scenario(**kw)


def test_stop_rule_bounds():
    with pytest.raises(ParameterError):
        StopRule(min_errors=0)
    with pytest.raises(ParameterError):
        StopRule(max_frames=0)


@pytest.mark.parametrize("ebno,want", [(0.0, 7.8650e-2), (4.0, 1.2501e-2), (math.inf, 0.0), (-math.inf, 0.5)])
def test_qpsk_theory(ebno, want):
    assert qpsk_theoretical_ber(ebno) == pytest.approx(want, rel=1e-4, abs=1e-12)


def test_frame_rng_depends_on_seed_and_index():
    draw = lambda s, f: frame_rng(s, f).integers(0, 2**62)
    assert draw(0, 3) == draw(0, 3)
    assert len({draw(0, 0), draw(0, 1), draw(1, 0)}) == 3


def test_record_ber():
    r = BerRecord(2.0, 1, "viterbi", True, frames=2, bits=940, bit_errors=47)
    assert r.ber == 0.05
    assert BerRecord(2.0, 1, "viterbi", True, 0, 0, 0).ber == 0.0


def test_noiseless_point_runs_to_max_frames():
    recs = run_point(Scenario(), math.inf, StopRule(min_errors=1, max_frames=6))
    assert len(recs) == 3 and [r.stage for r in recs] == [1, 2, 3]
    final = recs[-1]
    assert final.bit_errors == 0 and final.frames == 6 and final.low_confidence
    assert all(r.bits == 6 * 5 * 94 for r in recs)


def test_same_seed_gives_identical_records():
    s = Scenario(seed=9)
    stop = StopRule(min_errors=40, max_frames=200)
    assert run_point(s, 1.0, stop) == run_point(s, 1.0, stop)


def test_error_accounting_matches_frame_sum():
    s = Scenario(seed=4)
    recs = run_point(s, 1.0, StopRule(min_errors=30, max_frames=500))
    n0 = ebno_to_n0(1.0, s.code_rate)
    per_frame = np.array([simulate_frame(s, n0, f) for f in range(recs[0].frames)])
    assert [r.bit_errors for r in recs] == per_frame.sum(axis=0).tolist()
    # the stopping frame is the first one that reaches the target
    assert per_frame[:-1, -1].sum() < 30 <= per_frame[:, -1].sum()


def test_worker_count_does_not_change_records():
    s = Scenario(seed=2)
    stop = StopRule(min_errors=25, max_frames=300)
    assert run_point(s, 1.5, stop, workers=1) == run_point(s, 1.5, stop, workers=2)


def test_batch_size_does_not_change_records():
    s = Scenario(seed=2)
    stop = StopRule(min_errors=25, max_frames=300)
    assert run_point(s, 1.5, stop, batch=1) == run_point(s, 1.5, stop, batch=7)


def test_empty_sweep():
    assert sweep(Scenario(), [], StopRule()) == []


def test_duplicate_grid_points_repeat_exactly():
    recs = sweep(Scenario(seed=5), [1.0, 1.0], StopRule(min_errors=20, max_frames=100))
    assert recs[:3] == recs[3:]


def test_sweep_order_and_progress():
    seen = []
    recs = sweep(Scenario(seed=1), [3.0, 1.0], StopRule(min_errors=5, max_frames=20), progress=seen.append)
    assert [(r.ebno_db, r.stage) for r in recs] == [(3.0, 1), (3.0, 2), (3.0, 3), (1.0, 1), (1.0, 2), (1.0, 3)]
    assert len(seen) == 2


@pytest.mark.slow
def test_sweep_final_stage_ber_falls_with_ebno():
    recs = sweep(Scenario(), [0, 2, 4], StopRule(min_errors=100, max_frames=200000))
    final = [r for r in recs if r.stage == 3]
    assert len(recs) == 9 and not any(r.low_confidence for r in final)
    bers = [r.ber for r in final]
    assert bers[0] >= bers[1] >= bers[2]


def test_fixed_phase_mode_is_used():
    s = Scenario(k_users=2, phase_mode=(0.0, 0.0), seed=3)
    errors, H, *_ = simulate_frame(s, 0.0, 0, return_report=True)
    assert np.allclose(H.h, [[1, 0.25], [0.25, 1]])
    assert errors.tolist() == [0, 0, 0]
