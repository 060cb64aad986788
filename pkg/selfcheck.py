"""
Self-check Module

This module runs the oracle suite against the library:
- Closed forms of the logistic model (limit transform, quantile, moments)
- Exact identities and direct quadrature over M_2 and M_3
- Exact assignment against permutation enumeration
- The exact sampler against closed-form transforms
- a-priori n0 plans against the exact feasibility test

The suite uses the same code paths as the report commands, but only on
inputs for which an independent answer is known.
"""

import logging
import math
import os
import sys
from typing import Callable, List, NamedTuple

import numpy as np
import pandas as pd
from scipy.integrate import dblquad, quad
from scipy.special import logsumexp

sys.path.append(os.path.join(os.path.dirname(__file__), 'src'))

from src.drift.drift_model import DriftModel, make_linear_drift
from src.reports.experiment_runner import CommandResult, ExperimentConfig, estimate_pair_gate
from src.reports.report_writer import ReportWriter
from src.stationary.finite_stationary import (
    FiniteLaw,
    feasibility,
    laplace_L1n,
    laplace_L2n,
    plan_epsilon_delta,
    sample_finite,
)
from src.stationary.nonlinear_stationary import (
    NonlinearLaw,
    absolute_moment,
    check_centering,
    laplace_L_infinity,
    phi,
)
from src.transport.transport_metrics import brute_force_assignment, wq_1d_pair, wq_kd_assignment


class CheckResult(NamedTuple):
    name: str
    value: float
    reference: float
    tolerance: float
    passed: bool


def quadrature_oracle_n2(model: DriftModel, s: float, t: float) -> float:
    """
    E[exp(s z1 + t z2)] under the n=2 stationary law by quadrature over z = (a, -a)
    """
    weights = model.rank_weights(2)
    scale = 2.0 / model.sigma2

    def log_density(a: float) -> float:
        low, high = min(a, -a), max(a, -a)
        return scale * (weights[0] * low + weights[1] * high)

    def integral(f: Callable[[float], float]) -> float:
        left, _ = quad(f, -np.inf, 0.0, epsabs=0.0, epsrel=1e-12, limit=200)
        right, _ = quad(f, 0.0, np.inf, epsabs=0.0, epsrel=1e-12, limit=200)
        return left + right

    numerator = integral(lambda a: math.exp((s - t) * a + log_density(a)))
    return numerator / integral(lambda a: math.exp(log_density(a)))


def quadrature_oracle_n3(model: DriftModel, s: float, t: float) -> float:
    """
    E[exp(s z1 + t z2)] under the n=3 stationary law by 2-D quadrature.

    The density is integrated over the ordered sector z_(1) = a <= z_(2) = b <= z_(3) = -a-b,
    and the exponential is averaged over the six ordered rank pairs, which is the
    symmetrisation of the integrand over all of M_3.
    """
    weights = model.rank_weights(3)
    scale = 2.0 / model.sigma2
    pairs = [(i, j) for i in range(3) for j in range(3) if i != j]

    def log_density(a: float, b: float) -> float:
        return scale * (weights[0] * a + weights[1] * b + weights[2] * (-a - b))

    def averaged(b: float, a: float) -> float:
        z = (a, b, -a - b)
        exponents = [s * z[i] + t * z[j] for i, j in pairs]
        return math.exp(logsumexp(exponents) - math.log(len(pairs)) + log_density(a, b))

    def mass(b: float, a: float) -> float:
        return math.exp(log_density(a, b))

    options = dict(epsabs=0.0, epsrel=1e-11)
    numerator, _ = dblquad(averaged, -np.inf, 0.0, lambda a: a, lambda a: -0.5 * a, **options)
    normaliser, _ = dblquad(mass, -np.inf, 0.0, lambda a: a, lambda a: -0.5 * a, **options)
    return numerator / normaliser


class SelfCheck:
    """
    Oracle suite over the logistic model and the configured model
    """

    def __init__(self, config: ExperimentConfig, mc_count: int = 200000):
        """
        Args:
            config (ExperimentConfig): Run configuration (seed, output directory, model)
            mc_count (int): Draws used by the sampler checks
        """
        self.config = config
        self.mc_count = mc_count
        self.logger = logging.getLogger(__name__)
        self.logistic = make_linear_drift(2.0, sigma2=2.0)
        self.results: List[CheckResult] = []

    def record(self, name: str, value: float, reference: float, tolerance: float,
               relative: bool = False) -> None:
        """
        Record a comparison of value against reference
        """
        gap = abs(value - reference)
        if relative:
            gap /= abs(reference)
        passed = bool(gap <= tolerance)
        self.results.append(CheckResult(name, value, reference, tolerance, passed))
        level = logging.DEBUG if passed else logging.WARNING
        self.logger.log(level, f"{name}: {value!r} vs {reference!r} ({'pass' if passed else 'FAIL'})")

    def check_logistic_closed_forms(self) -> None:
        law = NonlinearLaw(self.logistic)
        for r in (-0.9, -0.5, -0.1, 0.1, 0.5, 0.9):
            self.record(f"L_inf({r}) = pi r / sin(pi r)", laplace_L_infinity(law, r),
                        math.pi * r / math.sin(math.pi * r), 1e-8, relative=True)

        u = self.config.rng(90).uniform(1e-6, 1.0 - 1e-6, size=1000)
        worst = float(np.max(np.abs(phi(law, u) - np.log(u / (1.0 - u)))))
        self.record("max |Phi(u) - logit(u)|", worst, 0.0, 1e-9)
        self.record("centering integral", check_centering(law), 0.0, 1e-10)
        self.record("second moment = pi^2/3", absolute_moment(law, 2.0), math.pi ** 2 / 3.0, 1e-8,
                    relative=True)

    def check_small_n_identities(self) -> None:
        law = FiniteLaw(self.logistic, 2)
        self.record("n=2 L1n(0.5) = 4/3", laplace_L1n(law, 0.5), 4.0 / 3.0, 1e-12)
        self.record("n=2 L2n(0.3,-0.2) = 4/3", laplace_L2n(law, 0.3, -0.2), 4.0 / 3.0, 1e-12)

        for model_name, model in (('logistic', self.logistic), ('configured', self.config.model)):
            two, three = FiniteLaw(model, 2), FiniteLaw(model, 3)
            for s, t in ((0.3, -0.2), (0.2, 0.1)):
                if not (feasibility(model, 2, s, t).feasible and feasibility(model, 3, s, t).feasible):
                    continue
                self.record(f"{model_name} n=2 L2n({s},{t}) vs quadrature", laplace_L2n(two, s, t),
                            quadrature_oracle_n2(model, s, t), 1e-8, relative=True)
                self.record(f"{model_name} n=3 L2n({s},{t}) vs quadrature", laplace_L2n(three, s, t),
                            quadrature_oracle_n3(model, s, t), 1e-6, relative=True)

    def check_assignment(self, instances: int = 30) -> None:
        rng = self.config.rng(91)
        worst = 0.0
        for _ in range(instances):
            count, dimension = int(rng.integers(1, 7)), int(rng.integers(1, 4))
            q = float(rng.choice([1.0, 2.0]))
            X, Y = rng.normal(size=(count, dimension)), rng.normal(size=(count, dimension))
            worst = max(worst, abs(wq_kd_assignment(X, Y, q).distance - brute_force_assignment(X, Y, q).distance))
        self.record("assignment vs enumeration", worst, 0.0, 1e-10)

        x, y = rng.normal(size=50), rng.normal(size=50)
        self.record("assignment vs sorted coupling (1-D)", wq_kd_assignment(x, y, 2.0).distance,
                    wq_1d_pair(x, y, 2.0).distance, 1e-12)

    def check_sampler(self) -> None:
        points = [(0.2, -0.1), (0.0, 0.0), (0.2, 0.2), (-0.2, 0.1), (0.1, -0.2)]
        for n in (2, 10):
            law = FiniteLaw(self.logistic, n)
            sample = sample_finite(law, self.config.rng(92, n), self.mc_count, coordinates=2)
            rows = estimate_pair_gate(law, sample, points, sigmas=4.0)
            z = max(abs(row['estimate'] - row['L2n']) / max(row['standard_error'], 1e-300)
                    for row in rows if row['standard_error'] > 0)
            self.record(f"n={n} sampler vs L2n (max |z|)", z, 0.0, 4.0)

    def check_plans(self, draws: int = 20) -> None:
        rng = self.config.rng(93)
        worst = math.inf
        for _ in range(draws):
            s, t = rng.uniform(-0.9, 0.9, size=2)
            if abs(s + t) >= 0.9:
                continue
            plan = plan_epsilon_delta(self.logistic, s, t)
            for n in (plan.n0, 2 * plan.n0, 10 * plan.n0):
                margin = feasibility(self.logistic, n, s, t).min_denominator - (1.0 - plan.alpha_bar)
                worst = min(worst, margin)
        # only a shortfall below 1 - alpha_bar counts
        self.record("min denominator - (1 - alpha_bar)", min(worst, 0.0), 0.0, 1e-12)

    def run(self) -> pd.DataFrame:
        """
        Run every check, returning one row per comparison
        """
        self.logger.info("Running self-check suite")
        for check in (self.check_logistic_closed_forms, self.check_small_n_identities,
                      self.check_assignment, self.check_sampler, self.check_plans):
            try:
                check()
            except Exception as e:
                self.logger.error(f"Error in {check.__name__}: {e}")
                self.results.append(CheckResult(check.__name__, math.nan, math.nan, 0.0, False))
        return pd.DataFrame([r._asdict() for r in self.results])


def cmd_selfcheck(config: ExperimentConfig) -> CommandResult:
    """
    Run the oracle suite, print the pass/fail table, exit 4 on any failure
    """
    suite = SelfCheck(config)
    table = suite.run()
    writer = ReportWriter(config.output_dir, 'selfcheck', config.config_hash)
    writer.write_table('selfcheck.csv', table.to_dict('records'))
    writer.write_metadata({'seed': config.seed})
    failed = int((~table['passed']).sum())
    summary = table.to_string(index=False) + f"\n{len(table) - failed} passed, {failed} failed"
    return CommandResult(0 if failed == 0 else 4, summary, writer.files)
