"""Experiment configuration: INI files with per-scenario sections, CLI
overrides, and validation.

One file describes one scenario run.  Sections:

    [experiment]   scenario, seed, out, trials, threads, figures
    [waveform]     slot/pulse/carrier parameters (mode-detect)
    [detector]     thresholds and conventions (mode-detect)
    [sweep]        swept variable and grid (mode-detect)
    [channel]      THz channel grid and absorption table
    [classify]     schemes, SNR grid, trials, EM controls
    [predict]      chain file, initial state, steps

Anything omitted falls back to the published simulation setup.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

__all__ = ["ExperimentConfig", "ConfigError", "load_config", "SCENARIOS"]

SCENARIOS = ("channel-response", "mode-detect", "classify", "predict")

OUTPUT_DIR_ENV = "THZRX_OUT"


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


def default_data_path(name: str) -> Path:
    """Path of a bundled data file (absorption table, chain, templates)."""
    return Path(str(resources.files("thzrx").joinpath("data", name)))


def _floats(text: str) -> list[float]:
    try:
        return [float(part) for part in text.replace(",", " ").split()]
    except ValueError as exc:
        raise ConfigError(f"expected numbers, got {text!r}") from exc


def _grid(start: float, stop: float, points: int) -> list[float]:
    if points < 1:
        raise ConfigError("sweep needs at least one point")
    if points == 1:
        return [start]
    if not stop > start:
        raise ConfigError("sweep stop must exceed start")
    step = (stop - start) / (points - 1)
    return [start + i * step for i in range(points)]


@dataclass
class ExperimentConfig:
    """Fully resolved scenario configuration."""

    scenario: str
    seed: int = 12345
    out_dir: Path = field(default_factory=lambda: Path("thzrx-runs"))
    threads: int = 1
    figures: bool = True

    # waveform (published setup: alpha=0.8, T=1 ps, To=3T, sigma_p=20 fs,
    # a=1, N=40 per slot, f_c=5 THz, OOK + BPSK)
    slot_period_s: float = 1e-12
    samples_per_slot: int = 40
    slots: int = 3
    carrier_hz: float = 5e12
    carrier_phase: float = 0.0
    pulse_amplitude: float = 1.0
    pulse_center_s: float | None = None  # None -> mid slot
    pulse_spread_s: float = 20e-15
    rc_alpha: float = 0.8
    pbm_bits: list[int] = field(default_factory=lambda: [1, 1, 1])
    cbm_symbols: list[float] = field(default_factory=lambda: [-1.0, 1.0, -1.0])

    # detector / mode-detect sweep
    etas: list[float] = field(default_factory=lambda: [0.05, 0.1, 0.2])
    snrs_db: list[float] = field(default_factory=lambda: [5.23, 3.98, 3.01])
    snr_convention: str = "figure"
    signal_scaling: str = "noise-matched"
    sweep_variable: str = "snr"
    sweep_grid: list[float] = field(default_factory=lambda: _grid(0.5, 12.0, 47))
    mc_trials: int = 100_000

    # channel
    distance_m: float = 1e-3
    f0_hz: float = 1.6e12
    nfft: int = 1024
    channel_sample_period_s: float = 25e-15
    absorption_csv: Path | None = None  # None -> bundled table
    pressure_atm: float = 1.0
    temperature_k: float = 273.15
    probe_pulse_spread_s: float = 42.5e-15  # "100 fs long" pulse
    probe_pulse_center_s: float = 800e-15

    # classify
    schemes: list[str] = field(
        default_factory=lambda: ["BPSK", "QPSK", "8-PSK", "16-QAM"]
    )
    classify_snrs_db: list[float] = field(
        default_factory=lambda: [0.0, 4.0, 8.0, 12.0, 14.0]
    )
    classify_trials: int = 2000
    samples_per_trial: int = 384
    classify_channel: str = "awgn"
    em_max_iterations: int = 40
    em_epsilon: float = 2e-2
    taps_order: int = 3
    training_symbols: int = 32
    deconv_epsilon: float = 1e-8
    em_error_stds: list[float] = field(
        default_factory=lambda: [0.0, 0.02, 0.05, 0.1, 0.15, 0.2]
    )

    # predict
    chain_file: Path | None = None  # None -> bundled chain
    initial_state: list[float] = field(
        default_factory=lambda: [0.2, 0.2, 0.2, 0.2, 0.2]
    )
    predict_steps: int = 10

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(
                f"unknown scenario {self.scenario!r}; expected one of {SCENARIOS}"
            )
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if not self.sweep_grid:
            raise ConfigError("sweep grid must be non-empty")
        if any(b - a <= 0 for a, b in zip(self.sweep_grid, self.sweep_grid[1:])):
            raise ConfigError("sweep grid must be strictly increasing")
        if self.sweep_variable not in ("snr", "eta"):
            raise ConfigError("sweep variable must be 'snr' or 'eta'")
        if self.mc_trials < 0:
            raise ConfigError("mc_trials must be >= 0")
        if self.classify_trials < 1:
            raise ConfigError("classify trials must be >= 1")
        if self.classify_channel not in ("awgn", "thz"):
            raise ConfigError("classify channel must be 'awgn' or 'thz'")
        if len(self.pbm_bits) != self.slots or len(self.cbm_symbols) != self.slots:
            raise ConfigError("pbm_bits and cbm_symbols must have one entry per slot")
        if len(self.initial_state) != 5:
            raise ConfigError("initial_state needs 5 probabilities")
        if self.predict_steps < 1:
            raise ConfigError("predict steps must be >= 1")
        self.out_dir = Path(self.out_dir)

    @property
    def pulse_center(self) -> float:
        if self.pulse_center_s is None:
            return self.slot_period_s / 2.0
        return self.pulse_center_s

    def absorption_path(self) -> Path:
        path = self.absorption_csv or default_data_path("absorption_vivo.csv")
        if not Path(path).is_file():
            raise ConfigError(f"absorption table not found: {path}")
        return Path(path)

    def chain_path(self) -> Path:
        path = self.chain_file or default_data_path("cqi_chain.txt")
        if not Path(path).is_file():
            raise ConfigError(f"Markov chain file not found: {path}")
        return Path(path)

    def resolved(self) -> dict:
        """JSON-ready view of every field (the metadata sidecar body)."""
        out = {}
        for key, value in self.__dict__.items():
            if isinstance(value, Path):
                value = str(value)
            out[key] = value
        return out


_SECTION_FIELDS = {
    "experiment": {
        "scenario": ("scenario", str),
        "seed": ("seed", int),
        "out": ("out_dir", Path),
        "threads": ("threads", int),
        "figures": ("figures", None),
        "trials": (None, None),  # scenario-dependent alias, handled below
    },
    "waveform": {
        "slot_period_s": ("slot_period_s", float),
        "samples_per_slot": ("samples_per_slot", int),
        "slots": ("slots", int),
        "carrier_hz": ("carrier_hz", float),
        "carrier_phase": ("carrier_phase", float),
        "pulse_amplitude": ("pulse_amplitude", float),
        "pulse_center_s": ("pulse_center_s", float),
        "pulse_spread_s": ("pulse_spread_s", float),
        "rc_alpha": ("rc_alpha", float),
        "pbm_bits": ("pbm_bits", "int_list"),
        "cbm_symbols": ("cbm_symbols", "float_list"),
    },
    "detector": {
        "eta": ("etas", "float_list"),
        "snr_db": ("snrs_db", "float_list"),
        "snr_convention": ("snr_convention", str),
        "signal_scaling": ("signal_scaling", str),
        "mc_trials": ("mc_trials", int),
    },
    "sweep": {
        "variable": ("sweep_variable", str),
        "grid": ("sweep_grid", "float_list"),
    },
    "channel": {
        "distance_m": ("distance_m", float),
        "f0_hz": ("f0_hz", float),
        "nfft": ("nfft", int),
        "sample_period_s": ("channel_sample_period_s", float),
        "absorption_csv": ("absorption_csv", Path),
        "pressure_atm": ("pressure_atm", float),
        "temperature_k": ("temperature_k", float),
        "probe_pulse_spread_s": ("probe_pulse_spread_s", float),
        "probe_pulse_center_s": ("probe_pulse_center_s", float),
    },
    "classify": {
        "schemes": ("schemes", "str_list"),
        "snr_db": ("classify_snrs_db", "float_list"),
        "trials": ("classify_trials", int),
        "samples_per_trial": ("samples_per_trial", int),
        "channel": ("classify_channel", str),
        "em_max_iterations": ("em_max_iterations", int),
        "em_epsilon": ("em_epsilon", float),
        "taps_order": ("taps_order", int),
        "training_symbols": ("training_symbols", int),
        "deconv_epsilon": ("deconv_epsilon", float),
        "em_error_stds": ("em_error_stds", "float_list"),
    },
    "predict": {
        "chain_file": ("chain_file", Path),
        "initial_state": ("initial_state", "float_list"),
        "steps": ("predict_steps", int),
    },
}


def _convert(raw: str, kind):
    if kind is Path:
        return Path(raw)
    if kind == "float_list":
        return _floats(raw)
    if kind == "int_list":
        return [int(v) for v in _floats(raw)]
    if kind == "str_list":
        return [part.strip() for part in raw.replace(",", " ").split()]
    return kind(raw)


def load_config(
    path=None,
    *,
    scenario: str | None = None,
    overrides: dict | None = None,
) -> ExperimentConfig:
    """Build an ExperimentConfig from an INI file plus CLI overrides.

    ``overrides`` maps ExperimentConfig field names to values and wins
    over the file; ``scenario`` wins over the file's [experiment] entry.
    """
    values: dict = {}
    if path is not None:
        parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        found = parser.read(path)
        if not found:
            raise ConfigError(f"config file not found: {path}")
        for section in parser.sections():
            if section not in _SECTION_FIELDS:
                raise ConfigError(f"unknown config section [{section}]")
            known = _SECTION_FIELDS[section]
            for key, raw in parser.items(section):
                if key not in known:
                    raise ConfigError(f"unknown option {key!r} in [{section}]")
                target, kind = known[key]
                if target is None:
                    # [experiment] trials: route by scenario later
                    values["_trials_alias"] = raw
                    continue
                try:
                    values[target] = _convert(raw, kind)
                except (TypeError, ValueError) as exc:
                    raise ConfigError(f"bad value for {section}.{key}: {raw!r}") from exc
    if scenario is not None:
        values["scenario"] = scenario
    if "scenario" not in values:
        raise ConfigError("no scenario given (config [experiment] or CLI)")
    trials_alias = values.pop("_trials_alias", None)
    if overrides:
        values.update({k: v for k, v in overrides.items() if v is not None})
    if "out_dir" not in values:
        env_root = os.environ.get(OUTPUT_DIR_ENV)
        root = Path(env_root) if env_root else Path("thzrx-runs")
        values["out_dir"] = root / values["scenario"]
    trials_override = values.pop("trials", None)
    try:
        config = ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    for trials in (trials_alias, trials_override):
        if trials is None:
            continue
        trials = int(trials)
        if config.scenario == "classify":
            config.classify_trials = trials
        else:
            config.mc_trials = trials
    if config.classify_trials < 1:
        raise ConfigError("classify trials must be >= 1")
    return config
