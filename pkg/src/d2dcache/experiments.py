"""Parameter sweeps comparing caching schemes.

A sweep varies one of ``beta``, ``N`` or ``lambda`` over a list of values
and, at each value, builds the popular-file (``cpf``), greedy (``gca``)
and random (``rc``) placements, evaluates their analytic delay and
optionally simulates them.  Random placements are averaged over
``rc_replications`` independent draws.  All seeds derive from
``spec.seed`` and the point's position in the sweep, so every row is
reproducible on its own and independent of worker scheduling.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from ._csvutil import write_rows
from .errors import ConfigError
from .optimizer import greedy_caching
from .params import MBIT, SystemParams, reference_params
from .placement import cpf_placement, random_placement
from .popularity import build_popularity
from .queueing import RateModel, network_delay
from .simulator import SimConfig, simulate

__all__ = [
    "SWEEPS",
    "SCHEMES",
    "ExperimentSpec",
    "run_experiment",
    "cooperation_gain",
    "gain",
    "ROW_HEADER",
    "GAIN_HEADER",
    "analytic_check_specs",
    "gain_vs_cache_size_spec",
    "schemes_vs_arrival_rate_spec",
    "schemes_vs_beta_spec",
]

SWEEPS = ("beta", "N", "lambda")
SCHEMES = ("cpf", "gca", "rc")

ROW_HEADER = (
    "sweep", "value", "scheme", "cooperation", "analytic_delay", "simulated_delay",
    "halfwidth", "rho_max", "n_a", "n_b", "stable", "replications",
)
GAIN_HEADER = ("sweep", "value", "scheme", "delay_with", "delay_without", "gain")


@dataclass(frozen=True)
class ExperimentSpec:
    """One sweep.

    ``cooperation`` selects whether requests missing the local cache may
    be served by other clusters (True) or always go to the backhaul.
    ``workers > 1`` evaluates sweep points in a process pool.
    """

    params: SystemParams
    sweep: str
    values: tuple
    schemes: tuple = ("cpf",)
    rate_model: RateModel = RateModel()
    cooperation: bool = True
    simulate: bool = False
    horizon: int = 10**6
    warmup_fraction: float = 0.1
    rc_replications: int = 20
    seed: int = 0
    output: Optional[str] = None
    workers: int = 1

    def __post_init__(self):
        if self.sweep not in SWEEPS:
            raise ConfigError(f"must be one of {', '.join(SWEEPS)}", field="sweep")
        values = tuple(float(v) for v in self.values)
        if not values:
            raise ConfigError("must not be empty", field="values")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ConfigError("must be strictly increasing", field="values")
        if self.sweep == "N" and any(not v.is_integer() for v in values):
            raise ConfigError("cache sizes must be integers", field="values")
        object.__setattr__(self, "values", values)
        schemes = tuple(self.schemes)
        bad = [s for s in schemes if s not in SCHEMES]
        if bad or not schemes or len(set(schemes)) != len(schemes):
            raise ConfigError(f"must be distinct names from {', '.join(SCHEMES)}", field="schemes")
        object.__setattr__(self, "schemes", schemes)
        if "rc" in schemes and self.rc_replications < 1:
            raise ConfigError("must be >= 1", field="rc_replications")
        # fail on the first bad sweep value now rather than mid-run
        for v in values:
            self.point_params(v)
        self.rate_model.check(self.params)

    def point_params(self, value) -> SystemParams:
        if self.sweep == "beta":
            return self.params.replace(beta=value)
        if self.sweep == "N":
            return self.params.replace(N=int(value))
        return self.params.replace(lam=value)


def _seed(*parts) -> int:
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1, np.uint64)[0])


def _placements(spec, params, pop, scheme, i_value):
    if scheme == "cpf":
        return [cpf_placement(params)]
    if scheme == "gca":
        return [greedy_caching(params, pop, spec.rate_model).final]
    i_scheme = SCHEMES.index(scheme)
    return [
        random_placement(params, _seed(spec.seed, i_value, i_scheme, r))
        for r in range(spec.rc_replications)
    ]


def _evaluate(spec, i_value, value, scheme, cooperations):
    """Rows for one sweep point, one per cooperation setting."""
    params = spec.point_params(value)
    pop = build_popularity(params)
    placements = _placements(spec, params, pop, scheme, i_value)
    rows = []
    for coop in cooperations:
        reports = [network_delay(p, pop, params, spec.rate_model, coop) for p in placements]
        stable = all(r.stable for r in reports)
        row = dict(
            sweep=spec.sweep,
            value=value,
            scheme=scheme,
            cooperation="with_intercluster" if coop else "without_intercluster",
            analytic_delay=float(np.mean([r.network_delay for r in reports])) if stable else math.inf,
            rho_max=max(r.rho_max for r in reports),
            n_a=float(np.mean([r.n_a_mean for r in reports])),
            n_b=float(np.mean([r.n_b_mean for r in reports])),
            stable=stable,
            replications=len(placements),
        )
        if spec.simulate and stable:
            sims = [
                simulate(
                    SimConfig(
                        params, p, spec.rate_model, spec.horizon, spec.warmup_fraction,
                        seed=_seed(spec.seed, i_value, SCHEMES.index(scheme), r, 1),
                        cooperation=coop,
                    ),
                    pop,
                )
                for r, p in enumerate(placements)
            ]
            row["simulated_delay"] = float(np.mean([s.network_mean_delay for s in sims]))
            row["halfwidth"] = math.sqrt(sum(s.confidence_halfwidth**2 for s in sims)) / len(sims)
        rows.append(row)
    return rows


def _run_points(spec, cooperations):
    points = [
        (spec, i, v, s, cooperations)
        for i, v in enumerate(spec.values)
        for s in spec.schemes
    ]
    if spec.workers > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            return list(pool.map(_evaluate_star, points))
    return [_evaluate(*pt) for pt in points]


def _evaluate_star(args):
    return _evaluate(*args)


def run_experiment(spec: ExperimentSpec) -> list:
    """Evaluate every (value, scheme) pair and return the CSV rows as dicts.

    Rows come in sweep order, schemes in the order given.  They are also
    written to ``spec.output`` when set.
    """
    rows = [r[0] for r in _run_points(spec, (spec.cooperation,))]
    if spec.output:
        write_rows(ROW_HEADER, rows, spec.output)
    return rows


def gain(delay_with: float, delay_without: float) -> Optional[float]:
    """Relative delay reduction from cooperation, None when undefined."""
    if not (math.isfinite(delay_with) and math.isfinite(delay_without)) or delay_without <= 0:
        return None
    return 1.0 - delay_with / delay_without


def cooperation_gain(spec: ExperimentSpec) -> list:
    """Delay with and without inter-cluster cooperation at every sweep point.

    The same placement is evaluated twice; without cooperation, requests
    that miss the local cache are re-routed to the backhaul.  ``gain`` is
    None (blank in CSV) when either setting is unstable.
    """
    spec = replace(spec, simulate=False)
    rows = []
    for with_row, without_row in _run_points(spec, (True, False)):
        dw, dwo = with_row["analytic_delay"], without_row["analytic_delay"]
        rows.append(dict(
            sweep=spec.sweep, value=with_row["value"], scheme=with_row["scheme"],
            delay_with=dw, delay_without=dwo, gain=gain(dw, dwo),
        ))
    if spec.output:
        write_rows(GAIN_HEADER, rows, spec.output)
    return rows


# Ready-made sweeps on the reference cell.  The grids are defaults, override
# ``values`` as needed.

def analytic_check_specs(horizon: int = 10**6, simulate: bool = True, seed: int = 0) -> list:
    """Delay vs beta under popular-file caching, one spec per cache size."""
    return [
        ExperimentSpec(
            reference_params(N=N), "beta", (0.5, 1.0, 1.5, 2.0), ("cpf",),
            simulate=simulate, horizon=horizon, seed=seed,
        )
        for N in (10, 20)
    ]


def gain_vs_cache_size_spec(values=(15, 20, 25, 30, 35, 40)) -> ExperimentSpec:
    """Delay and cooperation gain vs cache size, popular-file caching, beta 0.5.

    Below N = 15 the non-cooperative system is unstable at this beta, so
    its delay (and the gain) is undefined.
    """
    return ExperimentSpec(reference_params(beta=0.5), "N", tuple(values), ("cpf",))


def _slow_link_params(**overrides):
    return reference_params(
        rate_d2d=50 * MBIT, rate_cell=15 * MBIT, rate_backhaul=10 * MBIT, **overrides
    )


SLOW_LINK_RATES = RateModel.fixed(15 * MBIT, 10 * MBIT)


def schemes_vs_arrival_rate_spec(values=tuple(np.round(np.arange(0.1, 1.01, 0.1), 10)), replications=20, seed=0):
    """Delay vs arrival rate for all three schemes at beta 0.5, fixed rates."""
    return ExperimentSpec(
        _slow_link_params(beta=0.5), "lambda", tuple(values), SCHEMES, SLOW_LINK_RATES,
        rc_replications=replications, seed=seed,
    )


def schemes_vs_beta_spec(values=(0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0), replications=20, seed=0):
    """Delay vs beta for all three schemes at 0.5 req/s, fixed rates."""
    return ExperimentSpec(
        _slow_link_params(lam=0.5), "beta", tuple(values), SCHEMES, SLOW_LINK_RATES,
        rc_replications=replications, seed=seed,
    )
