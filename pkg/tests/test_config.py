import math

import pytest
import yaml

from multibeam.config import SCHEMA, ConfigError, build_config, flatten, load_config, parse_override, to_tree
from multibeam.montecarlo import Scenario, StopRule

DOCUMENTED_KEYS = {
    "scenario.k_users", "scenario.n_info", "scenario.n_pilot", "scenario.zeta", "scenario.amplitudes",
    "scenario.phase_mode", "scenario.pilot_mode", "scenario.seed", "code.generators_octal",
    "code.constraint_length", "interleaver.rows", "detector.stages", "detector.decoder", "detector.combining",
    "detector.snr_min_db", "detector.snr_max_db", "detector.snr_step_db", "detector.user_order",
    "sweep.ebno_db", "stop.min_errors", "stop.max_frames", "output.csv_path",
}


def test_every_documented_key_is_accepted():
    assert DOCUMENTED_KEYS <= set(SCHEMA)


def test_defaults_match_reference_scenario():
    cfg = load_config(None)
    s = cfg.scenario
    assert (s.k_users, s.n_info, s.n_pilot, s.zeta) == (5, 100, 30, 0.25)
    assert s.amplitudes is None and s.phase_mode == "random"
    assert s.generators == (0o171, 0o133) and s.constraint_length == 7
    assert s.detector.decoder == "viterbi" and s.detector.combining
    assert cfg.ebno_db == (0.0, 2.0, 4.0, 6.0)
    assert cfg.stop == StopRule(100, 20000)


def test_empty_file_is_all_defaults(tmp_path):
    p = tmp_path / "empty.yaml"
    p.write_text("")
    assert load_config(str(p)) == load_config(None)


def test_file_and_overrides(tmp_path):
    p = tmp_path / "run.yaml"
    p.write_text(yaml.safe_dump({
        "scenario": {"k_users": 3, "phase_mode": [0, 1, 2], "amplitudes": [1, 0.5, 2]},
        "code": {"generators_octal": [171, 133]},
        "detector": {"decoder": "bcjr", "combining": False},
        "sweep": {"ebno_db": [1, 3]},
    }))
    cfg = load_config(str(p), ["detector.stages=2", "sweep.ebno_db=[5]", "output.csv_path=x.csv"])
    s = cfg.scenario
    assert s.k_users == 3 and s.phase_mode == (0.0, 1.0, 2.0) and s.amplitudes == (1.0, 0.5, 2.0)
    assert s.generators == (0o171, 0o133)
    assert s.detector.decoder == "bcjr" and not s.detector.combining and s.detector.stages == 2
    assert cfg.ebno_db == (5.0,) and cfg.csv_path == "x.csv"


@pytest.mark.parametrize("text,want", [("stop.min_errors=7", ("stop.min_errors", 7)),
                                       ("detector.combining=false", ("detector.combining", False)),
                                       ("sweep.ebno_db=[0, 2.5]", ("sweep.ebno_db", [0, 2.5])),
                                       ("output.csv_path=a=b.csv", ("output.csv_path", "a=b.csv"))])
def test_parse_override(text, want):
    assert parse_override(text) == want


def test_infinite_ebno_allowed():
    assert load_config(None, ["sweep.ebno_db=[inf]"]).ebno_db == (math.inf,)


@pytest.mark.parametrize("override,key", [
    ("scenario.bogus=1", "scenario.bogus"),
    ("detector.decoder=turbo", "detector.decoder"),
    ("detector.stages=zero", "detector.stages"),
    ("detector.stages=0", "detector.stages"),
    ("stop.min_errors=0", "stop.min_errors"),
    ("scenario.zeta=1.5", "scenario.zeta"),
    ("code.generators_octal=[178, 133]", "code.generators_octal"),
    ("detector.combining=maybe", "detector.combining"),
    ("noequals", "noequals"),
])
def test_bad_values_name_the_key(override, key):
    with pytest.raises(ConfigError) as info:
        load_config(None, [override])
    assert info.value.key == key


def test_non_mapping_content():
    with pytest.raises(ConfigError):
        flatten([1, 2])
    with pytest.raises(ConfigError) as info:
        build_config(flatten({"scenario": 3}))
    assert info.value.key == "scenario"


def test_missing_file_raises_oserror(tmp_path):
    with pytest.raises(OSError):
        load_config(str(tmp_path / "nope.yaml"))


def test_tree_round_trip(tmp_path):
    cfg = load_config(None, ["scenario.phase_mode=[0.1, 0.2, 0.3, 0.4, 0.5]", "detector.decoder=bcjr"])
    p = tmp_path / "dump.yaml"
    p.write_text(yaml.safe_dump(to_tree(cfg)))
    assert load_config(str(p)) == cfg


def test_scenario_rejects_bad_amplitudes():
    from multibeam.errors import ParameterError

    with pytest.raises(ParameterError):
        Scenario(k_users=2, amplitudes=(1.0, -1.0))
