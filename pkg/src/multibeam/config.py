"""Run configuration: YAML key/value tree with dotted-key overrides."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import yaml

from .errors import ParameterError
from .montecarlo import Scenario, StopRule
from .receiver import DetectorConfig


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class RunConfig:
    scenario: Scenario = field(default_factory=Scenario)
    ebno_db: tuple[float, ...] = (0.0, 2.0, 4.0, 6.0)
    stop: StopRule = field(default_factory=StopRule)
    csv_path: str = "ber.csv"


def _octal(v) -> int:
    return int(str(v), 8)


def _float(v) -> float:
    if isinstance(v, str) and v.strip().lower() in ("inf", "+inf", "infinity"):
        return math.inf
    return float(v)


def _bool(v) -> bool:
    if isinstance(v, bool):
        return v
    if isinstance(v, str) and v.lower() in ("true", "false", "yes", "no", "on", "off"):
        return v.lower() in ("true", "yes", "on")
    raise ValueError(f"expected a boolean, got {v!r}")


def _phase_mode(v):
    if isinstance(v, str):
        return v
    return tuple(float(x) for x in v)


def _amplitudes(v):
    return None if v is None else tuple(float(x) for x in v)


def _float_list(v):
    if not isinstance(v, (list, tuple)):
        v = [v]
    return tuple(_float(x) for x in v)


# dotted key -> (destination, converter)
SCHEMA = {
    "scenario.k_users": ("scenario", "k_users", int),
    "scenario.n_info": ("scenario", "n_info", int),
    "scenario.n_pilot": ("scenario", "n_pilot", int),
    "scenario.zeta": ("scenario", "zeta", float),
    "scenario.amplitudes": ("scenario", "amplitudes", _amplitudes),
    "scenario.phase_mode": ("scenario", "phase_mode", _phase_mode),
    "scenario.pilot_mode": ("scenario", "pilot_mode", str),
    "scenario.seed": ("scenario", "seed", int),
    "code.generators_octal": ("scenario", "generators", lambda v: tuple(_octal(x) for x in v)),
    "code.constraint_length": ("scenario", "constraint_length", int),
    "interleaver.rows": ("scenario", "interleaver_rows", int),
    "detector.stages": ("detector", "stages", int),
    "detector.decoder": ("detector", "decoder", str),
    "detector.combining": ("detector", "combining", _bool),
    "detector.snr_min_db": ("detector", "snr_min_db", float),
    "detector.snr_max_db": ("detector", "snr_max_db", float),
    "detector.snr_step_db": ("detector", "snr_step_db", float),
    "detector.user_order": ("detector", "user_order", str),
    "detector.hard_decision": ("detector", "hard_decision", _bool),
    "detector.channel_estimator": ("detector", "channel_estimator", str),
    "sweep.ebno_db": ("run", "ebno_db", _float_list),
    "stop.min_errors": ("stop", "min_errors", int),
    "stop.max_frames": ("stop", "max_frames", int),
    "output.csv_path": ("run", "csv_path", str),
}


def flatten(tree, prefix="") -> dict:
    if tree is None:
        return {}
    if not isinstance(tree, dict):
        raise ConfigError(prefix or "<root>", "expected a mapping")
    out = {}
    for k, v in tree.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(flatten(v, key + "."))
        else:
            out[key] = v
    return out


def parse_override(text: str) -> tuple[str, object]:
    if "=" not in text:
        raise ConfigError(text, "override must look like section.key=value")
    key, raw = text.split("=", 1)
    return key.strip(), yaml.safe_load(raw) if raw.strip() else ""


def build_config(values: dict) -> RunConfig:
    """Turn a flat ``{dotted key: value}`` mapping into a validated RunConfig."""
    parts = {"scenario": {}, "detector": {}, "stop": {}, "run": {}}
    for key, raw in values.items():
        if key not in SCHEMA:
            raise ConfigError(key, "unknown key")
        dest, name, conv = SCHEMA[key]
        try:
            parts[dest][name] = conv(raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(key, f"bad value {raw!r} ({exc})") from None
    try:
        detector = DetectorConfig(**parts["detector"])
    except ParameterError as exc:
        raise ConfigError(_guess_key("detector", parts["detector"], exc), str(exc)) from None
    try:
        scenario = Scenario(detector=detector, **parts["scenario"])
        scenario.code
        scenario.pilots
    except ParameterError as exc:
        raise ConfigError(_guess_key("scenario", parts["scenario"], exc), str(exc)) from None
    try:
        stop = StopRule(**parts["stop"])
    except ParameterError as exc:
        raise ConfigError(_guess_key("stop", parts["stop"], exc), str(exc)) from None
    return RunConfig(scenario, stop=stop, **parts["run"])


def _guess_key(section: str, given: dict, exc: Exception) -> str:
    msg = str(exc)
    for key, (dest, name, _) in SCHEMA.items():
        if dest == section and name in given and name.split("_")[0] in msg:
            return key
    return section


def load_config(path: str | None, overrides=()) -> RunConfig:
    """Read ``path`` (YAML; None or empty means all defaults) and apply ``key=value`` overrides.

    Raises ConfigError for malformed content and OSError for unreadable files.
    """
    values = {}
    if path is not None:
        with open(path) as fh:
            text = fh.read()
        try:
            tree = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError("<file>", f"not valid YAML ({exc})") from None
        values = flatten(tree)
    for item in overrides:
        key, val = parse_override(item)
        values[key] = val
    return build_config(values)


def to_tree(cfg: RunConfig) -> dict:
    s = cfg.scenario
    d = asdict(s.detector)
    return {
        "scenario": {
            "k_users": s.k_users, "n_info": s.n_info, "n_pilot": s.n_pilot, "zeta": s.zeta,
            "amplitudes": None if s.amplitudes is None else list(s.amplitudes),
            "phase_mode": s.phase_mode if isinstance(s.phase_mode, str) else list(s.phase_mode),
            "pilot_mode": s.pilot_mode, "seed": s.seed,
        },
        "code": {"generators_octal": [int(oct(g)[2:]) for g in s.generators],
                 "constraint_length": s.constraint_length},
        "interleaver": {"rows": s.interleaver_rows},
        "detector": d,
        "sweep": {"ebno_db": list(cfg.ebno_db)},
        "stop": {"min_errors": cfg.stop.min_errors, "max_frames": cfg.stop.max_frames},
        "output": {"csv_path": cfg.csv_path},
    }
