"""Experiment configuration: flat ``key = value`` files plus command-line overrides.

A configuration file holds one ``key = value`` pair per line; ``#`` starts a
comment. Lists are comma separated. Every key has a per-scenario default, so
an empty file (or none at all) is a valid configuration.
"""

import dataclasses
from dataclasses import dataclass

SCENARIOS = ("ser_sweep", "learning_curve", "tracking")
METHODS = ("none", "rect", "max_sinr", "max_avg_sinr", "adaptive", "ground_truth")


class ConfigError(ValueError):
    """Invalid configuration key or value."""


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str = "ser_sweep"
    n: int = 16
    l: int = 3
    pdp_decay: float = 1.0
    f_d: float = 0.01
    doppler_norm: str = "block"
    n_sinusoids: int = 32
    # tracking: Doppler after the jump and the first block that uses it (0 = no jump)
    f_d_after: float = 0.005
    jump_block: int = 0
    snr_grid_db: tuple = (0.0, 10.0, 20.0, 30.0)
    k: int = 3
    epsilon: float = 0.1
    lambda_ff: float = 0.999
    gamma_coef: float = 1.0
    gamma_n_power: float = 4.0
    gamma_m_power: float = 1.0
    n_blocks: int = 2000
    n_trials: int = 50
    burn_in: int = 500
    csi: str = "perfect"
    sigma_o2: float = 0.01
    doppler_err_max: float = 0.01
    # channel handed to the equalizer: the true one or the erroneous estimate
    eq_csi: str = "true"
    ensemble_size: int = 500
    # the per-realisation baseline is redesigned every this many blocks
    max_sinr_every: int = 1
    methods: tuple = ("none", "max_sinr", "max_avg_sinr", "adaptive")
    record_every: int = 1
    first_passage_threshold: float = 0.05
    floor_window: int = 1000
    seed: int = 0

    def __post_init__(self):
        for key in _TUPLE_TYPES:
            value = getattr(self, key)
            if isinstance(value, (str, int, float)):
                value = (value,)
            object.__setattr__(self, key, tuple(_TUPLE_TYPES[key](x) for x in value))
        validate(self)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def as_items(self):
        """``(key, value)`` pairs in declaration order, formatted as a config file would."""
        out = []
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(_fmt(x) for x in v)
            else:
                v = _fmt(v)
            out.append((f.name, v))
        return out


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


SCENARIO_DEFAULTS = {
    "ser_sweep": dict(
        n_blocks=2000, n_trials=50, snr_grid_db=(0.0, 10.0, 20.0, 30.0), lambda_ff=0.999,
        methods=("none", "max_sinr", "max_avg_sinr", "adaptive"), jump_block=0,
    ),
    "learning_curve": dict(
        n_blocks=8000, n_trials=100, snr_grid_db=(15.0, 30.0), lambda_ff=0.999,
        methods=("adaptive",), jump_block=0,
    ),
    "tracking": dict(
        n_blocks=10000, n_trials=100, snr_grid_db=(30.0,), lambda_ff=0.98,
        f_d=0.001, f_d_after=0.005, jump_block=6000, methods=("adaptive",),
    ),
}

# long-run settings selected by --paper-scale
PAPER_SCALE = {
    "ser_sweep": dict(n_blocks=15000, n_trials=20),
    "learning_curve": dict(n_trials=1000),
    "tracking": dict(n_trials=1000),
}

_TUPLE_TYPES = {"snr_grid_db": float, "methods": str}


def _field_types():
    return {f.name: f.type for f in dataclasses.fields(ExperimentConfig)}


def coerce(key, raw):
    """Convert the string ``raw`` to the type of config key ``key``."""
    types = _field_types()
    if key not in types:
        raise ConfigError(f"unknown config key {key!r}")
    raw = raw.strip()
    try:
        if key in _TUPLE_TYPES:
            items = [s.strip() for s in raw.split(",") if s.strip()]
            return tuple(_TUPLE_TYPES[key](s) for s in items)
        kind = types[key]
        if kind is int or kind == "int":
            value = float(raw)
            if value != int(value):
                raise ValueError
            return int(value)
        if kind is float or kind == "float":
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"cannot parse {key}={raw!r}") from None


def parse_lines(lines, source="<config>"):
    """Parse ``key = value`` lines into a dict of typed values."""
    values = {}
    for lineno, line in enumerate(lines, 1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise ConfigError(f"{source}:{lineno}: expected key = value, got {line.strip()!r}")
        key, raw = (s.strip() for s in text.split("=", 1))
        try:
            values[key] = coerce(key, raw)
        except ConfigError as exc:
            raise ConfigError(f"{source}:{lineno}: {exc}") from None
    return values


def load_file(path):
    try:
        with open(path) as fh:
            return parse_lines(fh, str(path))
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from None


def parse_overrides(pairs):
    return parse_lines(pairs, "--set")


def make_config(scenario, file_values=None, overrides=None, paper_scale=False, **explicit):
    """Layer scenario defaults, paper-scale settings, file values, ``--set`` pairs and flags."""
    if scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {scenario!r}")
    values = dict(SCENARIO_DEFAULTS[scenario])
    if paper_scale:
        values.update(PAPER_SCALE[scenario])
    values.update(file_values or {})
    values.update(overrides or {})
    values.update({k: v for k, v in explicit.items() if v is not None})
    values["scenario"] = scenario
    try:
        return ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def validate(cfg):
    def need(cond, msg):
        if not cond:
            raise ConfigError(msg)

    need(cfg.scenario in SCENARIOS, f"scenario must be one of {SCENARIOS}")
    need(cfg.n >= 2, "n must be >= 2")
    need(1 <= cfg.l <= cfg.n, "l must satisfy 1 <= l <= n")
    need(cfg.k % 2 == 1 and 1 <= cfg.k <= 2 * cfg.n - 1, "k must be odd with 1 <= k <= 2n - 1")
    need(cfg.pdp_decay >= 0, "pdp_decay must be non-negative")
    need(0 <= cfg.f_d < 0.5 and 0 <= cfg.f_d_after < 0.5, "Doppler values must lie in [0, 0.5)")
    need(cfg.doppler_norm in ("block", "sample"), "doppler_norm must be block or sample")
    need(cfg.n_sinusoids >= 1, "n_sinusoids must be >= 1")
    need(cfg.epsilon > 0, "epsilon must be positive")
    need(0 < cfg.lambda_ff <= 1, "lambda_ff must lie in (0, 1]")
    need(cfg.gamma_coef > 0, "gamma_coef must be positive")
    need(cfg.n_blocks >= 1, "n_blocks must be >= 1")
    need(cfg.n_trials >= 1, "n_trials must be >= 1")
    need(0 <= cfg.jump_block < cfg.n_blocks, "jump_block must lie inside the run")
    need(cfg.csi in ("perfect", "imperfect"), "csi must be perfect or imperfect")
    need(cfg.eq_csi in ("true", "estimated"), "eq_csi must be true or estimated")
    need(cfg.sigma_o2 >= 0 and cfg.doppler_err_max >= 0, "CSI error parameters must be non-negative")
    need(cfg.ensemble_size >= 1, "ensemble_size must be >= 1")
    need(cfg.max_sinr_every >= 1, "max_sinr_every must be >= 1")
    need(len(cfg.snr_grid_db) >= 1, "snr_grid_db must not be empty")
    need(len(cfg.methods) >= 1, "methods must not be empty")
    bad = [m for m in cfg.methods if m not in METHODS]
    need(not bad, f"unknown methods {bad}; choose from {METHODS}")
    need(cfg.record_every >= 1, "record_every must be >= 1")
    need(cfg.floor_window >= 1, "floor_window must be >= 1")
    need(0 < cfg.first_passage_threshold < 1, "first_passage_threshold must lie in (0, 1)")
    if cfg.scenario != "ser_sweep":
        need(cfg.methods == ("adaptive",), "learning-curve and tracking scenarios trace the adaptive method only")
    if cfg.scenario == "ser_sweep":
        need(cfg.burn_in < cfg.n_blocks, "burn_in must be shorter than the run")
