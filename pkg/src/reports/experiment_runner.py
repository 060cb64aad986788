"""
Experiment Runner Module

This module turns a configuration file into report files:
- Loads and validates the JSON configuration (unknown keys are errors)
- Applies environment and command-line overrides
- Runs each command and hands tables and figures to the report writer

Every command validates the drift model first. Row values depend only on the
configuration and the master seed; per-task generators are derived from
(master seed, task index).
"""

import copy
import functools
import hashlib
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from dotenv import load_dotenv

from ..drift.drift_model import DriftModel, validate_assumption_E
from ..dynamics.dynamics_sim import SimulationPlan, simulate_replicas, simulate_stationary
from ..errors import ConfigurationError, LaplaceDomainError, NumericalError
from ..numerics.estimators import mc_laplace_marginal, mc_laplace_pair
from ..stationary.finite_stationary import (
    FiniteLaw,
    laplace_I_all,
    laplace_L1n,
    laplace_L2n,
    sample_finite,
)
from ..stationary.nonlinear_stationary import (
    NonlinearLaw,
    laplace_L_infinity,
    phi,
    sample_nonlinear,
)
from ..transport.empirical_sample import EmpiricalSample, SampleProvenance
from ..transport.transport_metrics import bootstrap_band, wq_1d_vs_quantile, wq_kd_assignment
from .plots import fitted_slope, loglog_svg
from .report_writer import ReportWriter

logger = logging.getLogger(__name__)

DEFAULT_CONFIG: Dict[str, Any] = {
    'model': {'kind': 'linear', 'c': 2.0, 'sigma2': 2.0},
    'seed': 20240101,
    'output_dir': 'reports',
    'strict': False,
    'workers': 1,
    'laplace': {
        'n_ladder': [2, 10, 100, 1000, 10000],
        'grid': [[0.3, -0.2], [0.0, 0.0], [0.5, 0.0], [-0.4, 0.3], [0.2, 0.2]],
        'rank_resolved': False,
    },
    'sample': {
        'n': 2,
        'count': 1000000,
        'draws': 'finite',
        'gate_t': [0.3, -0.25],
        'gate_sigmas': 3.0,
    },
    'simulate': {
        'n': 50,
        'h': 0.001,
        'horizon': 2000.0,
        'burn_in': None,
        'thinning': None,
        'replicas': 1,
        't_grid': [-0.5, -0.25, 0.25, 0.5],
        'ess_floor': 100.0,
        'batches': 50,
        'error_sigmas': 4.0,
        'check_halving': False,
        'dump_states': False,
    },
    'wasserstein': {
        'n_ladder': [2, 10, 100, 1000],
        'count': 100000,
        'q_list': [1, 2],
        'bootstrap': 20,
        'joint_k2': False,
        'joint_count': 512,
    },
    'moments': {
        'rho': 0.5,
        'n_ladder': [10, 100, 1000, 10000],
    },
}

ENVIRONMENT_OVERRIDES = {
    'RANKLAB_SEED': ('seed', int),
    'RANKLAB_OUT_DIR': ('output_dir', str),
    'RANKLAB_WORKERS': ('workers', int),
}


@dataclass
class CommandResult:
    exit_code: int
    summary: str
    files: List[str] = field(default_factory=list)


@dataclass
class ExperimentConfig:
    """
    Validated configuration of a run
    """

    model: DriftModel
    seed: int
    output_dir: str
    strict: bool
    workers: int
    laplace: Dict[str, Any]
    sample: Dict[str, Any]
    simulate: Dict[str, Any]
    wasserstein: Dict[str, Any]
    moments: Dict[str, Any]
    resolved: Dict[str, Any]

    @property
    def config_hash(self) -> str:
        # output location and worker count do not change any table value
        hashed = {k: v for k, v in self.resolved.items() if k not in ('output_dir', 'workers')}
        payload = json.dumps(hashed, sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    def rng(self, *index: int) -> np.random.Generator:
        """
        Generator for the task identified by index, derived from the master seed
        """
        return np.random.default_rng(np.random.SeedSequence([self.seed, *index]))


# ----------------------------------------------------------------------
# configuration parsing

def _merge(location: str, defaults: Dict[str, Any], given: Any) -> Dict[str, Any]:
    if not isinstance(given, dict):
        raise ConfigurationError(f"expected an object, got {type(given).__name__}", location=location)
    unknown = sorted(set(given) - set(defaults))
    if unknown:
        raise ConfigurationError(f"unknown keys {unknown}", location=location)
    merged = copy.deepcopy(defaults)
    merged.update(copy.deepcopy(given))
    return merged


def _require(condition: bool, message: str, location: str) -> None:
    if not condition:
        raise ConfigurationError(message, location=location)


def _is_int(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _is_real(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)


def _check_ladder(value: Any, location: str) -> None:
    _require(isinstance(value, list) and len(value) > 0, "must be a non-empty list", location)
    _require(all(_is_int(n) and n >= 2 for n in value), "entries must be integers >= 2", location)
    _require(all(a < b for a, b in zip(value, value[1:])), "must be strictly increasing", location)


def _check_reals(value: Any, location: str) -> None:
    _require(isinstance(value, list) and all(_is_real(x) for x in value), "must be a list of reals", location)


def _check_positive_int(value: Any, location: str, minimum: int = 1) -> None:
    _require(_is_int(value) and value >= minimum, f"must be an integer >= {minimum}, got {value!r}", location)


def _check_positive_real(value: Any, location: str) -> None:
    _require(_is_real(value) and value > 0, f"must be a positive real, got {value!r}", location)


def _validate_blocks(config: Dict[str, Any]) -> None:
    _require(_is_int(config['seed']) and config['seed'] >= 0, "must be a nonnegative integer", 'seed')
    _require(isinstance(config['output_dir'], str) and config['output_dir'], "must be a path", 'output_dir')
    _require(isinstance(config['strict'], bool), "must be true or false", 'strict')
    _check_positive_int(config['workers'], 'workers')

    laplace = config['laplace']
    _check_ladder(laplace['n_ladder'], 'laplace.n_ladder')
    _require(isinstance(laplace['grid'], list)
             and all(isinstance(p, list) and len(p) == 2 and all(_is_real(x) for x in p) for p in laplace['grid']),
             "must be a list of [s, t] pairs", 'laplace.grid')
    _require(isinstance(laplace['rank_resolved'], bool), "must be true or false", 'laplace.rank_resolved')

    sample = config['sample']
    _check_positive_int(sample['n'], 'sample.n', minimum=2)
    _check_positive_int(sample['count'], 'sample.count')
    _require(sample['draws'] in ('finite', 'nonlinear', 'both'),
             f"must be finite, nonlinear or both, got {sample['draws']!r}", 'sample.draws')
    _check_reals(sample['gate_t'], 'sample.gate_t')
    _check_positive_real(sample['gate_sigmas'], 'sample.gate_sigmas')

    simulate = config['simulate']
    _check_positive_int(simulate['n'], 'simulate.n', minimum=2)
    _check_positive_real(simulate['h'], 'simulate.h')
    _check_positive_real(simulate['horizon'], 'simulate.horizon')
    _require(simulate['burn_in'] is None or _is_real(simulate['burn_in']), "must be a real or null",
             'simulate.burn_in')
    _require(simulate['thinning'] is None or _is_int(simulate['thinning']), "must be an integer or null",
             'simulate.thinning')
    _check_positive_int(simulate['replicas'], 'simulate.replicas')
    _check_reals(simulate['t_grid'], 'simulate.t_grid')
    _require(_is_real(simulate['ess_floor']) and simulate['ess_floor'] >= 0, "must be a nonnegative real",
             'simulate.ess_floor')
    _check_positive_int(simulate['batches'], 'simulate.batches', minimum=2)
    _check_positive_real(simulate['error_sigmas'], 'simulate.error_sigmas')
    for key in ('check_halving', 'dump_states'):
        _require(isinstance(simulate[key], bool), "must be true or false", f'simulate.{key}')

    wasserstein = config['wasserstein']
    _check_ladder(wasserstein['n_ladder'], 'wasserstein.n_ladder')
    _check_positive_int(wasserstein['count'], 'wasserstein.count')
    _require(isinstance(wasserstein['q_list'], list) and wasserstein['q_list']
             and all(_is_real(q) and q >= 1 for q in wasserstein['q_list']),
             "must be a non-empty list of reals >= 1", 'wasserstein.q_list')
    _check_positive_int(wasserstein['bootstrap'], 'wasserstein.bootstrap', minimum=2)
    _require(isinstance(wasserstein['joint_k2'], bool), "must be true or false", 'wasserstein.joint_k2')
    _check_positive_int(wasserstein['joint_count'], 'wasserstein.joint_count')
    _require(wasserstein['joint_count'] <= 4096, "must be at most 4096", 'wasserstein.joint_count')

    moments = config['moments']
    _check_positive_real(moments['rho'], 'moments.rho')
    _check_ladder(moments['n_ladder'], 'moments.n_ladder')


def build_config(raw: Dict[str, Any], overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
    """
    Validate a raw configuration dict and apply overrides

    Args:
        raw (Dict[str, Any]): Parsed configuration
        overrides (Optional[Dict[str, Any]]): Top-level values that win over the file

    Returns:
        ExperimentConfig: Validated configuration
    """
    config = _merge('config', DEFAULT_CONFIG, raw)
    for name in ('laplace', 'sample', 'simulate', 'wasserstein', 'moments'):
        config[name] = _merge(name, DEFAULT_CONFIG[name], config[name])
    if not isinstance(config['model'], dict):
        raise ConfigurationError("expected an object", location='model')

    for key, value in (overrides or {}).items():
        if value is not None:
            config[key] = value

    _validate_blocks(config)
    model = DriftModel.from_config(config['model'])
    resolved = dict(config, model=model.describe())
    return ExperimentConfig(
        model=model,
        seed=config['seed'],
        output_dir=config['output_dir'],
        strict=config['strict'],
        workers=config['workers'],
        laplace=config['laplace'],
        sample=config['sample'],
        simulate=config['simulate'],
        wasserstein=config['wasserstein'],
        moments=config['moments'],
        resolved=resolved,
    )


def load_config(config_path: str, overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
    """
    Load configuration from a JSON file, then environment and command-line overrides

    Args:
        config_path (str): Path to configuration file
        overrides (Optional[Dict[str, Any]]): Command-line values (None entries are ignored)

    Returns:
        ExperimentConfig: Validated configuration
    """
    load_dotenv()
    try:
        with open(config_path, 'r') as f:
            raw = json.load(f)
    except FileNotFoundError:
        raise ConfigurationError("configuration file not found", location=config_path)
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"malformed JSON at line {e.lineno}, column {e.colno}: {e.msg}",
                                 location=config_path)

    merged: Dict[str, Any] = {}
    for variable, (key, cast) in ENVIRONMENT_OVERRIDES.items():
        value = os.getenv(variable)
        if value:
            try:
                merged[key] = cast(value)
            except ValueError:
                raise ConfigurationError(f"cannot parse {variable}={value!r}", location=key)
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})

    config = build_config(raw, merged)
    logger.info(f"Configuration loaded from {config_path} (hash {config.config_hash})")
    return config


# ----------------------------------------------------------------------
# shared helpers

def _parallel_map(fn: Callable, items: Sequence, workers: int) -> List:
    """
    Ordered map, over worker processes when workers > 1
    """
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _require_valid_model(config: ExperimentConfig) -> None:
    report = validate_assumption_E(config.model)
    if not report.passed:
        raise ConfigurationError(f"drift model fails Assumption (E): {report.message}", location='model')


def _limit_values(law: NonlinearLaw, points: Sequence[float]) -> Dict[float, float]:
    values = {}
    for r in sorted(set(points)):
        values[r] = laplace_L_infinity(law, r) if law.domain.contains(r) else math.nan
    return values


def _checked_grid(config: ExperimentConfig, law: NonlinearLaw,
                  grid: Sequence[Sequence[float]]) -> List[Tuple[float, float, bool]]:
    """
    (s, t, inside V2) per grid point; strict mode rejects points outside V2
    """
    checked = []
    for s, t in grid:
        inside = law.domain.contains_pair(s, t)
        if not inside:
            message = f"grid point ({s}, {t}) lies outside V2 = {law.domain}"
            if config.strict:
                raise LaplaceDomainError(message)
            logger.warning(f"{message}; rows are tagged outside-V2")
        checked.append((float(s), float(t), inside))
    return checked


def _safe(fn: Callable[[], float]) -> float:
    try:
        return fn()
    except LaplaceDomainError:
        return math.nan


def laplace_rows(model: DriftModel, grid: Sequence[Tuple[float, float, bool]],
                 limits: Dict[float, float], strict: bool, n: int) -> List[Dict[str, Any]]:
    """
    Laplace table rows for one n over the whole grid
    """
    law = FiniteLaw(model, n)
    rows = []
    for s, t, inside in grid:
        certificate = law.feasibility(s, t)
        if not certificate.feasible and strict:
            raise LaplaceDomainError(f"Laplace products diverge at n={n}, (s,t)=({s},{t}) (k={certificate.argmin})",
                                     k=certificate.argmin)
        L2n = laplace_L2n(law, s, t) if certificate.feasible else math.nan
        linf_s, linf_t = limits[s], limits[t]
        status = 'ok' if inside else 'outside-V2'
        if not certificate.feasible:
            status = 'infeasible'
        rows.append({
            'n': n,
            's': s,
            't': t,
            'L2n': L2n,
            'L1n_s': _safe(lambda: laplace_L1n(law, s)),
            'L1n_t': _safe(lambda: laplace_L1n(law, t)),
            'Linf_s': linf_s,
            'Linf_t': linf_t,
            'abs_error': abs(L2n - linf_s * linf_t),
            'min_denominator': certificate.min_denominator,
            'status': status,
        })
    logger.debug(f"laplace rows done for n={n}")
    return rows


def _laplace_table(config: ExperimentConfig, ladder: Sequence[int]) -> Tuple[List[Dict[str, Any]], NonlinearLaw]:
    law = NonlinearLaw(config.model)
    grid = _checked_grid(config, law, config.laplace['grid'])
    limits = _limit_values(law, [r for s, t, _ in grid for r in (s, t)])
    task = functools.partial(laplace_rows, config.model, grid, limits, config.strict)
    rows = [row for block in _parallel_map(task, list(ladder), config.workers) for row in block]
    return rows, law


# ----------------------------------------------------------------------
# commands

def cmd_validate(config: ExperimentConfig) -> CommandResult:
    """
    Check the equilibrium assumption and print the check table

    Returns:
        CommandResult: exit code 0 when every check passes, 2 otherwise
    """
    report = validate_assumption_E(config.model)
    table = report.to_frame().to_string(index=False)
    text = f"{config.model!r}\n{table}\n{report.message}"
    return CommandResult(0 if report.passed else 2, text)


def cmd_laplace_table(config: ExperimentConfig) -> CommandResult:
    """
    Table of L2n, L1n and the limit transforms over the n-ladder and the grid
    """
    _require_valid_model(config)
    writer = ReportWriter(config.output_dir, 'laplace-table', config.config_hash)
    rows, _ = _laplace_table(config, config.laplace['n_ladder'])
    writer.write_table('laplace_table.csv', rows)

    if config.laplace['rank_resolved']:
        resolved = []
        for n in config.laplace['n_ladder']:
            law = FiniteLaw(config.model, n)
            for t in sorted({r for pair in config.laplace['grid'] for r in pair}):
                try:
                    values = laplace_I_all(law, t)
                except LaplaceDomainError as e:
                    logger.warning(f"rank-resolved transform skipped at n={n}, t={t}: {e}")
                    continue
                resolved.extend({'n': n, 't': t, 'i': i + 1, 'I': v} for i, v in enumerate(values))
        writer.write_table('laplace_rank_resolved.csv', resolved)

    writer.write_metadata({'seed': config.seed})
    flagged = sum(row['status'] != 'ok' for row in rows)
    return CommandResult(0, f"{len(rows)} rows ({flagged} flagged)", writer.files)


def cmd_chaoticity_scan(config: ExperimentConfig) -> CommandResult:
    """
    |L2n - L(s)L(t)| along the n-ladder with a log-log figure, plus the moment bound scan
    """
    _require_valid_model(config)
    writer = ReportWriter(config.output_dir, 'chaoticity-scan', config.config_hash)
    ladder = config.laplace['n_ladder']
    rows, law = _laplace_table(config, ladder)

    frame = writer.write_table('chaoticity_scan.csv', rows)
    series, slopes = [], []
    for s, t in config.laplace['grid']:
        block = frame[(frame['s'] == s) & (frame['t'] == t)]
        series.append((f"(s,t)=({s:g},{t:g})", block['n'].to_numpy(), block['abs_error'].to_numpy()))
        slope = fitted_slope(block['n'].to_numpy(), block['abs_error'].to_numpy())
        slopes.append({'s': s, 't': t, 'fitted_slope': slope,
                       'first_error': block['abs_error'].iloc[0], 'last_error': block['abs_error'].iloc[-1]})
    writer.write_table('chaoticity_slopes.csv', slopes)
    writer.register(loglog_svg(writer.path('chaoticity_scan.svg'), series, 'n', '|L2n - Linf(s) Linf(t)|',
                               'Distance to the product limit'))

    rho = config.moments['rho']
    law.domain.check(-rho)
    law.domain.check(rho)
    limit_sum = laplace_L_infinity(law, -rho) + laplace_L_infinity(law, rho)
    bounds = []
    for n in config.moments['n_ladder']:
        finite = FiniteLaw(config.model, n)
        minus, plus = _safe(lambda: laplace_L2n(finite, -rho, 0.0)), _safe(lambda: laplace_L2n(finite, rho, 0.0))
        bounds.append({'n': n, 'rho': rho, 'L2n_minus': minus, 'L2n_plus': plus,
                       'bound_sum': minus + plus, 'limit_sum': limit_sum, 'ratio': (minus + plus) / limit_sum})
    writer.write_table('moment_bound.csv', bounds)

    writer.write_metadata({'seed': config.seed})
    return CommandResult(0, f"{len(rows)} scan rows, slopes {[round(s['fitted_slope'], 3) for s in slopes]}",
                         writer.files)


def _sample_frame(sample: EmpiricalSample, prefix: str) -> pd.DataFrame:
    columns = [f"{prefix}_{i + 1}" for i in range(sample.dimension)]
    return pd.DataFrame(sample.draws, columns=columns)


def cmd_sample(config: ExperimentConfig) -> CommandResult:
    """
    Draw from the finite and/or limit stationary law; the finite sampler is gated
    against the closed-form one-coordinate transform
    """
    _require_valid_model(config)
    settings = config.sample
    writer = ReportWriter(config.output_dir, 'sample', config.config_hash)
    n, count = settings['n'], settings['count']
    gate_rows = []

    if settings['draws'] in ('finite', 'both'):
        law = FiniteLaw(config.model, n)
        sample = sample_finite(law, config.rng(0), count, seed=config.seed)
        if count < 2:
            logger.warning("a single draw has no standard error; the sampler gate is skipped")
        for t in (settings['gate_t'] if count >= 2 else []):
            exact = laplace_L1n(law, t)
            estimate = mc_laplace_marginal(sample, t)
            gate_rows.append({'n': n, 'count': count, 't': t, 'estimate': estimate.value,
                              'standard_error': estimate.standard_error, 'L1n': exact,
                              'passed': estimate.within(exact, settings['gate_sigmas'])})
        header = {'sampler': sample.provenance.sampler, 'seed': config.seed, 'n': n,
                  'model_hash': config.model.model_hash()}
        writer.write_dump('finite_samples.csv', _sample_frame(sample, 'z'), header)
        writer.write_table('sample_gate.csv', gate_rows)

    if settings['draws'] in ('nonlinear', 'both'):
        limit = NonlinearLaw(config.model)
        sample = sample_nonlinear(limit, config.rng(1), count, seed=config.seed)
        header = {'sampler': sample.provenance.sampler, 'seed': config.seed,
                  'model_hash': config.model.model_hash()}
        writer.write_dump('nonlinear_samples.csv', _sample_frame(sample, 'x'), header)

    writer.write_metadata({'seed': config.seed})
    failed = [row for row in gate_rows if not row['passed']]
    if failed:
        raise NumericalError(f"sampler gate failed at t={[row['t'] for row in failed]}: "
                             f"estimates outside {settings['gate_sigmas']} standard errors")
    return CommandResult(0, f"{count} draws written, gate passed at {len(gate_rows)} points", writer.files)


def _simulation_plan(config: ExperimentConfig) -> SimulationPlan:
    settings = config.simulate
    return SimulationPlan(h=settings['h'], horizon=settings['horizon'], burn_in=settings['burn_in'],
                          thinning=settings['thinning'], seed=config.seed, replicas=settings['replicas'])


def _run_simulation(config: ExperimentConfig, plan: SimulationPlan) -> EmpiricalSample:
    n = config.simulate['n']
    if plan.replicas == 1:
        return simulate_stationary(config.model, n, plan)
    runs = simulate_replicas(config.model, n, plan, workers=config.workers)
    return EmpiricalSample(np.vstack([run.draws for run in runs]),
                           SampleProvenance('euler-maruyama', plan.seed, n, sum(run.count for run in runs)),
                           effective_sample_size=sum(run.effective_sample_size for run in runs))


def cmd_simulate(config: ExperimentConfig) -> CommandResult:
    """
    Long-run simulation of the projected system compared with L1n on the t-grid
    """
    _require_valid_model(config)
    settings = config.simulate
    writer = ReportWriter(config.output_dir, 'simulate', config.config_hash)
    n, plan = settings['n'], _simulation_plan(config)
    law = FiniteLaw(config.model, n)

    sample = _run_simulation(config, plan)
    halved = _run_simulation(config, plan.halved()) if settings['check_halving'] else None

    rows = []
    for t in settings['t_grid']:
        estimate = mc_laplace_marginal(sample, t, pooled=True, batches=settings['batches'])
        exact = _safe(lambda: laplace_L1n(law, t))
        row = {'n': n, 'h': plan.h, 'horizon': plan.horizon, 't': t, 'estimate': estimate.value,
               'standard_error': estimate.standard_error, 'L1n': exact,
               'z_score': (estimate.value - exact) / estimate.standard_error,
               'within': estimate.within(exact, settings['error_sigmas']),
               'ess': sample.effective_sample_size}
        if halved is not None:
            rerun = mc_laplace_marginal(halved, t, pooled=True, batches=settings['batches'])
            row.update({'estimate_half_h': rerun.value, 'shift': abs(rerun.value - estimate.value),
                        'shift_within_error': abs(rerun.value - estimate.value) < estimate.standard_error})
        rows.append(row)
    writer.write_table('simulate.csv', rows)

    if settings['dump_states']:
        frame = _sample_frame(sample, 'z')
        if sample.times is not None:
            frame.insert(0, 't', sample.times)
        writer.write_dump('simulated_states.csv', frame,
                          {'seed': config.seed, 'h': plan.h, 'model_hash': config.model.model_hash()})

    writer.write_metadata({'seed': config.seed, 'effective_sample_size': sample.effective_sample_size})
    if sample.effective_sample_size < settings['ess_floor']:
        raise NumericalError(f"effective sample size {sample.effective_sample_size:.1f} "
                             f"is below the floor {settings['ess_floor']}")
    return CommandResult(0, f"{sample.count} states retained, ESS {sample.effective_sample_size:.0f}",
                         writer.files)


def wasserstein_rows(model: DriftModel, settings: Dict[str, Any], seed: int,
                     task: Tuple[int, int]) -> List[Dict[str, Any]]:
    """
    Distance rows for one n: k=1 against the limit quantile, optionally k=2 against product draws
    """
    index, n = task
    rng = np.random.default_rng(np.random.SeedSequence([seed, 2, index]))
    law, limit = FiniteLaw(model, n), NonlinearLaw(model)

    def quantile(levels):
        return phi(limit, levels)

    marginal = sample_finite(law, rng, settings['count'], seed=seed, coordinates=1)
    rows = []
    for q in settings['q_list']:
        result = wq_1d_vs_quantile(marginal, quantile, q)
        lower, upper = bootstrap_band(lambda s: wq_1d_vs_quantile(s, quantile, q), marginal,
                                      settings['bootstrap'], rng)
        rows.append({'n': n, 'k': 1, 'q': q, 'N': marginal.count, 'distance': result.distance,
                     'band_lower': lower, 'band_upper': upper, 'method': result.method, 'seed': seed})

    if settings['joint_k2']:
        count = settings['joint_count']
        pairs = sample_finite(law, rng, count, seed=seed, coordinates=2)
        product = EmpiricalSample(sample_nonlinear(limit, rng, 2 * count).values().reshape(count, 2),
                                  SampleProvenance('nonlinear-product', seed, None, count))
        for q in settings['q_list']:
            result = wq_kd_assignment(pairs, product, q)
            lower, upper = bootstrap_band(lambda s: wq_kd_assignment(s, product, q), pairs,
                                          settings['bootstrap'], rng)
            rows.append({'n': n, 'k': 2, 'q': q, 'N': count, 'distance': result.distance,
                         'band_lower': lower, 'band_upper': upper, 'method': result.method, 'seed': seed})
    logger.debug(f"wasserstein rows done for n={n}")
    return rows


def cmd_wasserstein_report(config: ExperimentConfig) -> CommandResult:
    """
    W_q between finite-law marginals and the limit law along the n-ladder
    """
    _require_valid_model(config)
    settings = config.wasserstein
    writer = ReportWriter(config.output_dir, 'wasserstein-report', config.config_hash)
    task = functools.partial(wasserstein_rows, config.model, settings, config.seed)
    blocks = _parallel_map(task, list(enumerate(settings['n_ladder'])), config.workers)
    rows = [row for block in blocks for row in block]
    frame = writer.write_table('wasserstein.csv', rows)

    series, bands = [], []
    for k in sorted(frame['k'].unique()):
        for q in settings['q_list']:
            block = frame[(frame['k'] == k) & (frame['q'] == q)]
            series.append((f"k={k}, q={q:g}", block['n'].to_numpy(), block['distance'].to_numpy()))
            bands.append((block['band_lower'].to_numpy(), block['band_upper'].to_numpy()))
    writer.register(loglog_svg(writer.path('wasserstein.svg'), series, 'n', 'W_q distance',
                               'Distance of finite-n marginals to the limit law', bands=bands))

    writer.write_metadata({'seed': config.seed})
    return CommandResult(0, f"{len(rows)} distance rows", writer.files)


def estimate_pair_gate(law: FiniteLaw, sample: EmpiricalSample, points: Sequence[Tuple[float, float]],
                       sigmas: float) -> List[Dict[str, Any]]:
    """
    Compare Monte Carlo E[exp(s z1 + t z2)] with L2n at each (s, t)
    """
    rows = []
    for s, t in points:
        exact = laplace_L2n(law, s, t)
        estimate = mc_laplace_pair(sample, s, t)
        rows.append({'n': law.n, 's': s, 't': t, 'estimate': estimate.value,
                     'standard_error': estimate.standard_error, 'L2n': exact,
                     'passed': estimate.within(exact, sigmas)})
    return rows


COMMANDS: Dict[str, Callable[[ExperimentConfig], CommandResult]] = {
    'validate': cmd_validate,
    'laplace-table': cmd_laplace_table,
    'chaoticity-scan': cmd_chaoticity_scan,
    'sample': cmd_sample,
    'simulate': cmd_simulate,
    'wasserstein-report': cmd_wasserstein_report,
}
