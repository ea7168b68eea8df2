"""Experiment configuration: YAML in, validated ExperimentConfig out.

The file format is nested key-value YAML. Unknown keys anywhere are
rejected with their full field path so typos never silently fall back to a
default.
"""

from dataclasses import dataclass, field

import yaml

from .device import DeviceParams, device_preset
from .errors import ConfigError, DomainError

EXPERIMENTS = (
    "spin_transport",
    "wsl_scan",
    "thermal_transport",
    "spin_current",
    "decoherence_check",
)

# Methods convention: single-qubit observables average 6 groups x 100 shots;
# the two-setting correlator experiments use 10 groups x 200 shots total.
PAPER_SHOTS_SINGLE = (600, 6)
PAPER_SHOTS_TWO_SETTING = (2000, 10)

DEFAULT_SCAN_GRID_MHZ = (5.0, 7.5, 10.0, 12.5, 15.0)

_DEFAULT_INITIAL = {
    "spin_transport": "10000",
    "wsl_scan": "10000",
    "thermal_transport": "X+X+000",
    "spin_current": "10000",
    "decoherence_check": "10000",
}

_TWO_SETTING = {"thermal_transport", "spin_current"}


@dataclass(frozen=True)
class ShotPlan:
    n_shots: int
    n_groups: int
    seed: int

    def __post_init__(self):
        if self.n_shots < 1 or self.n_groups < 1:
            raise ConfigError("shots: counts must be positive")
        if self.n_shots % self.n_groups != 0:
            raise ConfigError(
                f"shots: {self.n_shots} not divisible by {self.n_groups} groups"
            )


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    device: DeviceParams
    gradients_mhz: tuple
    initial_state: str
    t_max_ns: float
    dt_sample_ns: float
    noise: str
    dephasing: str
    shots: ShotPlan | None
    readout: tuple | None  # per-qubit (f0, f1), None = perfect
    readout_correction: bool
    output_dir: str
    preset_name: str | None = field(default=None)

    def normalized(self):
        """Plain-dict echo of the effective configuration (summary record)."""
        return {
            "experiment": self.experiment,
            "device": {
                "preset": self.preset_name,
                "n_qubits": self.device.n_qubits,
                "coupling_mhz": list(self.device.coupling_mhz),
                "anharmonicity_mhz": list(self.device.anharmonicity_mhz),
                "t1_us": list(self.device.t1_us),
                "t2star_us": list(self.device.t2star_us),
            },
            "F": list(self.gradients_mhz),
            "initial_state": self.initial_state,
            "t_max": self.t_max_ns,
            "dt_sample": self.dt_sample_ns,
            "noise": self.noise,
            "dephasing": self.dephasing,
            "shots": None if self.shots is None else {
                "n_shots": self.shots.n_shots,
                "n_groups": self.shots.n_groups,
                "seed": self.shots.seed,
            },
            "readout": "perfect" if self.readout is None else [
                {"f0": f0, "f1": f1} for f0, f1 in self.readout
            ],
            "readout_correction": self.readout_correction,
            "output_dir": self.output_dir,
        }


def _reject_unknown(mapping, allowed, path):
    unknown = sorted(set(mapping) - set(allowed))
    if unknown:
        raise ConfigError(
            f"{path}: unknown keys {unknown}; allowed: {sorted(allowed)}"
        )


def _require(cond, path, msg):
    if not cond:
        raise ConfigError(f"{path}: {msg}")


def _as_number(value, path, positive=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    v = float(value)
    if positive and v <= 0:
        raise ConfigError(f"{path}: must be positive, got {v}")
    return v


def _parse_device(raw, path="device"):
    if raw is None:
        return device_preset("paper-device"), "paper-device"
    if isinstance(raw, str):
        try:
            return device_preset(raw), raw
        except DomainError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: expected a preset name or a mapping")
    allowed = {
        "preset", "n_qubits", "coupling_mhz", "anharmonicity_mhz",
        "t1_us", "t2star_us", "readout_f0", "readout_f1",
    }
    _reject_unknown(raw, allowed, path)
    preset = raw.get("preset")
    if preset is not None:
        try:
            base = device_preset(preset)
        except DomainError as exc:
            raise ConfigError(f"{path}.preset: {exc}") from None
        overrides = {k: v for k, v in raw.items() if k != "preset"}
        if "n_qubits" in overrides:
            raise ConfigError(f"{path}.n_qubits: fixed by the preset")
        try:
            return base.replace(**overrides), preset
        except Exception as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    _require("n_qubits" in raw, path, "needs n_qubits (or a preset)")
    _require("coupling_mhz" in raw, path, "needs coupling_mhz (or a preset)")
    n = raw["n_qubits"]
    kwargs = {k: v for k, v in raw.items() if k != "n_qubits"}
    base = DeviceParams.uniform(n)
    try:
        return base.replace(**kwargs), None
    except Exception as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _parse_shots(raw, experiment, path="shots"):
    if raw is None or raw == "none":
        return None
    if raw == "paper":
        n, groups = (PAPER_SHOTS_TWO_SETTING if experiment in _TWO_SETTING
                     else PAPER_SHOTS_SINGLE)
        return ShotPlan(n_shots=n, n_groups=groups, seed=0)
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: expected 'none', 'paper', or a mapping")
    _reject_unknown(raw, {"n_shots", "n_groups", "seed"}, path)
    defaults = (PAPER_SHOTS_TWO_SETTING if experiment in _TWO_SETTING
                else PAPER_SHOTS_SINGLE)
    n = raw.get("n_shots", defaults[0])
    groups = raw.get("n_groups", defaults[1])
    seed = raw.get("seed", 0)
    for name, v in (("n_shots", n), ("n_groups", groups), ("seed", seed)):
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(f"{path}.{name}: expected an integer, got {v!r}")
    return ShotPlan(n_shots=n, n_groups=groups, seed=seed)


def _parse_readout(raw, device, path="readout"):
    if raw is None or raw == "perfect":
        return None
    if raw == "table-s1":
        _require(device.n_qubits == 5, path,
                 "the tabulated readout set is for the 5-qubit device")
        return tuple(zip(device.readout_f0, device.readout_f1))
    if isinstance(raw, list):
        _require(len(raw) == device.n_qubits, path,
                 f"need {device.n_qubits} per-qubit entries")
        out = []
        for q, entry in enumerate(raw):
            p = f"{path}[{q}]"
            if not isinstance(entry, dict):
                raise ConfigError(f"{p}: expected a mapping with f0, f1")
            _reject_unknown(entry, {"f0", "f1"}, p)
            _require("f0" in entry and "f1" in entry, p, "needs f0 and f1")
            f0 = _as_number(entry["f0"], f"{p}.f0")
            f1 = _as_number(entry["f1"], f"{p}.f1")
            for name, v in (("f0", f0), ("f1", f1)):
                _require(0.0 <= v <= 1.0, f"{p}.{name}", f"must be in [0, 1], got {v}")
            out.append((f0, f1))
        return tuple(out)
    raise ConfigError(f"{path}: expected 'perfect', 'table-s1', or a list")


_TOP_KEYS = {
    "experiment", "device", "F", "initial_state", "t_max", "dt_sample",
    "noise", "dephasing", "shots", "readout", "readout_correction",
    "output_dir",
}


def parse_config(raw, default_experiment=None):
    """Validate a raw mapping into an ExperimentConfig with defaults filled."""
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    _reject_unknown(raw, _TOP_KEYS, "config")
    experiment = raw.get("experiment", default_experiment)
    _require(experiment is not None, "experiment", "missing (no subcommand default)")
    _require(experiment in EXPERIMENTS, "experiment",
             f"unknown {experiment!r}; one of {list(EXPERIMENTS)}")
    device, preset_name = _parse_device(raw.get("device"))

    f_raw = raw.get("F")
    if f_raw is None:
        gradients = (DEFAULT_SCAN_GRID_MHZ if experiment == "wsl_scan"
                     else (15.0,))
    elif isinstance(f_raw, (int, float)) and not isinstance(f_raw, bool):
        gradients = (float(f_raw),)
    elif isinstance(f_raw, list) and f_raw:
        gradients = tuple(_as_number(v, f"F[{i}]") for i, v in enumerate(f_raw))
    else:
        raise ConfigError("F: expected a number or a non-empty list of MHz values")
    for i, f in enumerate(gradients):
        _require(f >= 0, f"F[{i}]", "gradient magnitudes must be >= 0")

    initial = raw.get("initial_state", _DEFAULT_INITIAL[experiment])
    _require(isinstance(initial, str), "initial_state", "expected a string")

    t_max = _as_number(raw.get("t_max", 300.0), "t_max", positive=True)
    dt = _as_number(raw.get("dt_sample", 2.0), "dt_sample", positive=True)
    _require(dt <= t_max, "dt_sample", "must not exceed t_max")

    noise = raw.get("noise", "ideal")
    _require(noise in ("ideal", "lindblad"), "noise",
             f"expected 'ideal' or 'lindblad', got {noise!r}")
    dephasing = raw.get("dephasing", "as-given")
    _require(dephasing in ("as-given", "pure"), "dephasing",
             f"expected 'as-given' or 'pure', got {dephasing!r}")

    shots_raw = raw.get("shots", "none" if noise == "ideal" else "paper")
    shots = _parse_shots(shots_raw, experiment)
    if experiment == "decoherence_check" and shots is not None:
        raise ConfigError(
            "shots: decoherence_check compares exact expectations; set 'none'"
        )

    readout = _parse_readout(raw.get("readout"), device)
    correction = raw.get("readout_correction", False)
    if not isinstance(correction, bool):
        raise ConfigError("readout_correction: expected true/false")
    output_dir = raw.get("output_dir", "runs")
    _require(isinstance(output_dir, str) and output_dir, "output_dir",
             "expected a non-empty path")

    return ExperimentConfig(
        experiment=experiment,
        device=device,
        gradients_mhz=gradients,
        initial_state=initial,
        t_max_ns=t_max,
        dt_sample_ns=dt,
        noise=noise,
        dephasing=dephasing,
        shots=shots,
        readout=readout,
        readout_correction=correction,
        output_dir=output_dir,
        preset_name=preset_name,
    )


def load_config(path, default_experiment=None):
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"config parse error in {path}: {exc}") from exc
    return parse_config(raw, default_experiment=default_experiment)
