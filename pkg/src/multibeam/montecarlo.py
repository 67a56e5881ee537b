"""Seeded Monte Carlo BER estimation over Eb/N0 grids."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from .channel import ebno_to_n0, transmit, uniform_cci_matrix
from .errors import ParameterError
from .fec import BlockInterleaver, ConvCode
from .modem import build_frame, info_bits_per_frame, make_pilot_book
from .receiver import DetectorConfig, run_detector


@dataclass(frozen=True)
class Scenario:
    k_users: int = 5
    n_info: int = 100
    n_pilot: int = 30
    zeta: float = 0.25
    amplitudes: tuple[float, ...] | None = None
    phase_mode: str | tuple[float, ...] = "random"
    pilot_mode: str = "coded-preamble"
    generators: tuple[int, int] = (0o171, 0o133)
    constraint_length: int = 7
    interleaver_rows: int = 8
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    seed: int = 0

    def __post_init__(self):
        if self.k_users < 1 or self.n_info < 1 or self.n_pilot < 1:
            raise ParameterError("k_users, n_info and n_pilot must be >= 1")
        if not 0.0 <= self.zeta < 1.0:
            raise ParameterError(f"zeta must lie in [0, 1), got {self.zeta}")
        if self.amplitudes is not None:
            if len(self.amplitudes) != self.k_users:
                raise ParameterError("need one amplitude per user")
            if not all(a > 0 and math.isfinite(a) for a in self.amplitudes):
                raise ParameterError("amplitudes must be positive and finite")
        if not isinstance(self.phase_mode, str):
            if len(self.phase_mode) != self.k_users:
                raise ParameterError("fixed phase list needs one phase per user")
        elif self.phase_mode != "random":
            raise ParameterError(f"phase_mode must be 'random' or a list of phases, got {self.phase_mode!r}")

    @property
    def uncoded(self) -> bool:
        return self.detector.decoder == "none"

    @cached_property
    def code(self) -> ConvCode:
        return ConvCode(tuple(self.generators), self.constraint_length)

    @property
    def payload_code(self) -> ConvCode | None:
        return None if self.uncoded else self.code

    @cached_property
    def interleaver(self) -> BlockInterleaver | None:
        if self.uncoded:
            return None
        return BlockInterleaver.for_length(2 * self.n_info, self.interleaver_rows)

    @cached_property
    def pilots(self):
        return make_pilot_book(self.k_users, self.n_pilot, self.pilot_mode, self.code, self.seed)

    @property
    def code_rate(self) -> float:
        return 1.0 if self.uncoded else self.code.rate

    @property
    def info_bits(self) -> int:
        return info_bits_per_frame(self.n_info, self.payload_code)


@dataclass(frozen=True)
class StopRule:
    min_errors: int = 100
    max_frames: int = 20000

    def __post_init__(self):
        if self.min_errors < 1 or self.max_frames < 1:
            raise ParameterError("min_errors and max_frames must be >= 1")


@dataclass(frozen=True)
class BerRecord:
    ebno_db: float
    stage: int
    decoder: str
    combining: bool
    frames: int
    bits: int
    bit_errors: int
    low_confidence: bool = False

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits if self.bits else 0.0


def frame_rng(seed: int, frame_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(frame_index,)))


def simulate_frame(scenario: Scenario, n0: float, frame_index: int, return_report: bool = False):
    """One frame through channel and detector; returns bit errors per stage (and the truth/report)."""
    rng = frame_rng(scenario.seed, frame_index)
    K = scenario.k_users
    if scenario.phase_mode == "random":
        phases = rng.uniform(0, 2 * np.pi, K)
    else:
        phases = np.asarray(scenario.phase_mode, dtype=float)
    H = uniform_cci_matrix(K, scenario.zeta, scenario.amplitudes, phases)
    pilots = scenario.pilots
    info = rng.integers(0, 2, (K, scenario.info_bits), dtype=np.int8)
    X = np.array([build_frame(info[k], pilots.symbols[k], scenario.payload_code, scenario.interleaver,
                              scenario.n_info).symbols for k in range(K)])
    Y = transmit(H, X, n0, rng)
    report = run_detector(Y, pilots, scenario.detector, scenario.code, scenario.interleaver)
    errors = np.array([int(np.count_nonzero(st.decoded_bits != info)) for st in report.stages], dtype=np.int64)
    if return_report:
        return errors, H, X, info, report
    return errors


def _frame_batch(args):
    scenario, n0, start, stop = args
    return np.array([simulate_frame(scenario, n0, f) for f in range(start, stop)])


def run_point(scenario: Scenario, ebno_db: float, stop: StopRule = StopRule(), workers: int = 1,
              batch: int = 16) -> list[BerRecord]:
    """Accumulate per-stage errors until the final stage reaches ``min_errors`` or frames run out.

    Frame f always uses the generator seeded by ``(scenario.seed, f)`` and the
    stopping frame is found by scanning frames in index order, so the records do
    not depend on ``workers``.
    """
    n0 = ebno_to_n0(ebno_db, scenario.code_rate)
    stages = scenario.detector.stages
    totals = np.zeros(stages, dtype=np.int64)
    frames = 0
    pool = ProcessPoolExecutor(workers) if workers > 1 else None
    try:
        done = False
        while not done and frames < stop.max_frames:
            chunk = batch * max(1, workers)
            hi = min(stop.max_frames, frames + chunk)
            bounds = list(range(frames, hi, batch)) + [hi]
            jobs = [(scenario, n0, a, b) for a, b in zip(bounds[:-1], bounds[1:])]
            results = pool.map(_frame_batch, jobs) if pool else map(_frame_batch, jobs)
            for errs in (e for r in results for e in r):
                totals += errs
                frames += 1
                if totals[-1] >= stop.min_errors:
                    done = True
                    break
    finally:
        if pool:
            pool.shutdown(cancel_futures=True)
    bits = frames * scenario.k_users * scenario.info_bits
    low = bool(totals[-1] < stop.min_errors)
    return [BerRecord(float(ebno_db), s + 1, scenario.detector.decoder, scenario.detector.combining,
                      frames, bits, int(totals[s]), low) for s in range(stages)]


def sweep(scenario: Scenario, ebno_grid, stop: StopRule = StopRule(), workers: int = 1,
          progress=None) -> list[BerRecord]:
    records = []
    for ebno in ebno_grid:
        recs = run_point(scenario, float(ebno), stop, workers)
        if progress is not None:
            progress(recs)
        records.extend(recs)
    return records


def qpsk_theoretical_ber(ebno_db: float) -> float:
    """Uncoded Gray QPSK over AWGN: ``Q(sqrt(2 Eb/N0))``."""
    if ebno_db == math.inf:
        return 0.0
    if ebno_db == -math.inf:
        return 0.5
    return 0.5 * math.erfc(math.sqrt(10 ** (ebno_db / 10)))


def with_detector(scenario: Scenario, **changes) -> Scenario:
    return replace(scenario, detector=replace(scenario.detector, **changes))
