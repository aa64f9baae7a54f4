"""Flat ``key = value`` configuration files.

One entry per line, ``#`` starts a comment, lists are comma separated.
Keys mirror the field names of :class:`~d2dcache.params.SystemParams`
and :class:`~d2dcache.experiments.ExperimentSpec`; ``lambda`` is the
per-cluster arrival rate.  Keys left out take the reference-cell value
of :func:`~d2dcache.params.reference_params`.  Rates are bits/sec and sizes
bits, so ``rate_d2d = 120e6``.

Recognized keys
---------------
System
    K, F, m0, N, U, M, lambda, beta, mean_size, rate_d2d, rate_cell,
    rate_backhaul
Rates
    rate_model (mean_field_shared | fixed_effective),
    effective_cell_rate, effective_backhaul_rate
Placement
    placement (cpf | rc | gca | path to a 0/1 CSV), placement_seed
Experiment
    sweep (beta | N | lambda), values, schemes (cpf, gca, rc),
    cooperation (with_intercluster | without_intercluster), simulate,
    horizon, warmup_fraction, seed, rc_replications, output, workers
Checks
    trials
"""
from __future__ import annotations

from pathlib import Path

from .errors import ConfigError, D2DCacheError
from .params import reference_params
from .queueing import RateModel

INT_KEYS = {"K", "F", "m0", "N", "U", "M", "horizon", "seed", "rc_replications",
            "placement_seed", "trials", "workers"}
FLOAT_KEYS = {"beta", "mean_size", "rate_d2d", "rate_cell", "rate_backhaul",
              "effective_cell_rate", "effective_backhaul_rate", "warmup_fraction"}
LIST_KEYS = {"lambda", "values", "schemes"}
BOOL_KEYS = {"simulate"}
STR_KEYS = {"rate_model", "placement", "sweep", "cooperation", "output"}
KNOWN_KEYS = INT_KEYS | FLOAT_KEYS | LIST_KEYS | BOOL_KEYS | STR_KEYS
PARAM_KEYS = {"K", "F", "m0", "N", "U", "M", "lambda", "beta", "mean_size",
              "rate_d2d", "rate_cell", "rate_backhaul"}


class Config(dict):
    """Parsed entries, remembering the line each key came from."""

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.lines = {}

    def line_of(self, key):
        return self.lines.get(key)


def _convert(key, raw, line):
    try:
        if key in INT_KEYS:
            value = float(raw)
            if not value.is_integer():
                raise ValueError
            return int(value)
        if key in FLOAT_KEYS:
            return float(raw)
        if key in BOOL_KEYS:
            low = raw.lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError
        if key in LIST_KEYS:
            items = [x.strip() for x in raw.split(",") if x.strip()]
            if not items:
                raise ValueError
            if key == "schemes":
                return [x.lower() for x in items]
            return [float(x) for x in items]
        return raw
    except ValueError:
        raise ConfigError(f"cannot parse value {raw!r}", field=key, line=line) from None


def parse_config(text: str) -> Config:
    """Parse config text into a :class:`Config`."""
    cfg = Config()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", line=lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigError("unknown key", field=key, line=lineno)
        if key in cfg:
            raise ConfigError("duplicate key", field=key, line=lineno)
        cfg[key] = _convert(key, value, lineno)
        cfg.lines[key] = lineno
    return cfg


def load_config(path) -> Config:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from None
    return parse_config(text)


def apply_overrides(cfg: Config, pairs) -> Config:
    """Apply ``key=value`` strings (e.g. from ``--set``) on top of ``cfg``."""
    for pair in pairs or ():
        if "=" not in pair:
            raise ConfigError(f"override {pair!r} is not key=value")
        key, value = (part.strip() for part in pair.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigError("unknown key", field=key)
        cfg[key] = _convert(key, value, None)
        cfg.lines.pop(key, None)
    return cfg


def _wrap(cfg, fn, *args, **kwargs):
    """Call ``fn`` and attach the config line to any ConfigError."""
    try:
        return fn(*args, **kwargs)
    except ConfigError as exc:
        if exc.field is not None and exc.line is None and cfg.line_of(exc.field):
            raise ConfigError(str(exc).split(": ", 1)[-1], field=exc.field,
                              line=cfg.line_of(exc.field)) from None
        raise
    except D2DCacheError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def params_from_config(cfg: Config):
    kwargs = {}
    for key in PARAM_KEYS & cfg.keys():
        kwargs["lam" if key == "lambda" else key] = cfg[key]
    if "lam" in kwargs and len(kwargs["lam"]) == 1:
        kwargs["lam"] = kwargs["lam"][0]
    return _wrap(cfg, reference_params, **kwargs)


def rate_model_from_config(cfg: Config) -> RateModel:
    mode = cfg.get("rate_model", "mean_field_shared")
    return _wrap(
        cfg, RateModel, mode, cfg.get("effective_cell_rate"), cfg.get("effective_backhaul_rate")
    )


def cooperation_from_config(cfg: Config) -> bool:
    value = cfg.get("cooperation", "with_intercluster")
    if value not in ("with_intercluster", "without_intercluster"):
        raise ConfigError(
            "must be with_intercluster or without_intercluster",
            field="cooperation", line=cfg.line_of("cooperation"),
        )
    return value == "with_intercluster"


def spec_from_config(cfg: Config):
    """Build an :class:`~d2dcache.experiments.ExperimentSpec`."""
    from .experiments import ExperimentSpec

    for key in ("sweep", "values"):
        if key not in cfg:
            raise ConfigError("required for a sweep", field=key)
    params = params_from_config(cfg)
    kwargs = dict(
        params=params,
        sweep=cfg["sweep"],
        values=tuple(cfg["values"]),
        rate_model=rate_model_from_config(cfg),
        cooperation=cooperation_from_config(cfg),
    )
    for key in ("schemes",):
        if key in cfg:
            kwargs[key] = tuple(cfg[key])
    for key in ("simulate", "horizon", "warmup_fraction", "seed", "rc_replications", "output",
                "workers"):
        if key in cfg:
            kwargs[key] = cfg[key]
    return _wrap(cfg, ExperimentSpec, **kwargs)
