"""Monte Carlo utility estimation over replicated executions."""
from __future__ import annotations

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from ..economics import (ExternalityModel, FixedPerBlock, UtilityKind, compute_cost,
                         compute_rewards, profile_label, utility_gradient)
from ..execution import ExecutionConfig, derive_seed, run_execution
from ..infractions import InfractionKind, eval_infraction
from ..ledger import observer_output
from ..strategies import parse_descriptor

TRACKED = (InfractionKind.Conf, InfractionKind.Abs, InfractionKind.BC, InfractionKind.Self)
DEFAULT_CONFIDENCE = 0.99


def z_value(confidence: float) -> float:
    return float(norm.ppf(0.5 + confidence / 2))


def max_workers() -> int:
    cap = os.environ.get("COMPLIANCE_LAB_THREADS")
    n = os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            pass
    return n


@dataclass
class RunSamples:
    """Per-run features, shape (runs, parties)."""
    reward: np.ndarray
    cost: np.ndarray
    external: np.ndarray
    flags: np.ndarray  # (runs, parties, len(TRACKED)) infraction bits
    seeds: np.ndarray

    def features(self, party: int) -> np.ndarray:
        """(runs, 4) array of reward, cost, external reward and total reward."""
        return np.column_stack([self.reward[:, party], self.cost[:, party],
                                self.external[:, party], self.reward.sum(axis=1)])


def _one_run(args):
    config, profile, seed, externality = args
    trace = run_execution(config, profile, seed)
    counts = observer_output(trace).counts
    scheme = config.scheme if config.scheme is not None else FixedPerBlock(1.0)
    rew = compute_rewards(scheme, trace, counts)
    cost = compute_cost(trace, config.query_cost)
    n = config.n_parties
    ext = np.zeros(n)
    if externality is not None:
        ext = np.array([externality.external(trace, i) for i in range(n)])
    flags = np.array([[eval_infraction(k, trace, i) for k in TRACKED] for i in range(n)], dtype=bool)
    return rew, cost, ext, flags


def _run_chunk(args):
    config, profile, seeds, externality = args
    return [_one_run((config, profile, s, externality)) for s in seeds]


def simulate_runs(config: ExecutionConfig, profile, runs: int, seed: int,
                  externality: ExternalityModel | None = None, workers: int | None = None,
                  start: int = 0) -> RunSamples:
    """Run replicas start..start+runs-1 under derived seeds; fold in replica order."""
    profile = tuple(parse_descriptor(d) for d in profile)
    seeds = [derive_seed(seed, j) for j in range(start, start + runs)]
    workers = max_workers() if workers is None else min(workers, max_workers())
    if workers > 1 and runs >= 4 * workers:
        chunks = [seeds[i::workers] for i in range(workers)]
        with ProcessPoolExecutor(workers) as pool:
            parts = list(pool.map(_run_chunk, [(config, profile, c, externality) for c in chunks]))
        results = [None] * runs
        for w, part in enumerate(parts):
            results[w::workers] = part
    else:
        results = [_one_run((config, profile, s, externality)) for s in seeds]
    rew, cost, ext, flags = (np.array(x) for x in zip(*results))
    return RunSamples(rew.reshape(runs, -1), cost.reshape(runs, -1), ext.reshape(runs, -1),
                      flags.reshape(runs, config.n_parties, len(TRACKED)), np.array(seeds, dtype=np.uint64))


def _concat(a: RunSamples, b: RunSamples) -> RunSamples:
    return RunSamples(*(np.concatenate([getattr(a, f), getattr(b, f)])
                        for f in ("reward", "cost", "external", "flags", "seeds")))


def _stat(features: np.ndarray, grad: np.ndarray) -> float:
    n = features.shape[0]
    if n < 2:
        return 0.0
    cov = np.cov(features, rowvar=False)
    var = float(grad @ cov @ grad) / n
    return float(np.sqrt(max(var, 0.0)))


@dataclass
class UtilityReport:
    config_digest: str
    seed: int
    runs: int
    profile: tuple
    kind: UtilityKind
    exchange_rate: float
    confidence: float
    samples: RunSamples = field(repr=False)

    @property
    def n_parties(self) -> int:
        return self.samples.reward.shape[1]

    def _value(self, party: int) -> tuple[float, float]:
        f = self.samples.features(party)
        val, grad = utility_gradient(self.kind, f.mean(axis=0), self.exchange_rate)
        return float(val), _stat(f, grad)

    @property
    def reward_mean(self) -> np.ndarray:
        return self.samples.reward.mean(axis=0)

    @property
    def cost_mean(self) -> np.ndarray:
        return self.samples.cost.mean(axis=0)

    def _se(self, arr: np.ndarray) -> np.ndarray:
        if self.runs < 2:
            return np.zeros(arr.shape[1])
        return arr.std(axis=0, ddof=1) / np.sqrt(self.runs)

    @property
    def reward_stderr(self) -> np.ndarray:
        return self._se(self.samples.reward)

    @property
    def cost_stderr(self) -> np.ndarray:
        return self._se(self.samples.cost)

    @property
    def utility(self) -> np.ndarray:
        return np.array([self._value(i)[0] for i in range(self.n_parties)])

    @property
    def utility_stderr(self) -> np.ndarray:
        return np.array([self._value(i)[1] for i in range(self.n_parties)])

    @property
    def z(self) -> float:
        return z_value(self.confidence)

    @property
    def utility_ci(self) -> np.ndarray:
        return self.z * self.utility_stderr

    def infraction_rate(self, kind: InfractionKind) -> np.ndarray:
        return self.samples.flags[:, :, TRACKED.index(kind)].mean(axis=0)

    def first_witness(self, kind: InfractionKind) -> tuple[int, int] | None:
        """(party, seed) of the first replica where `kind` fired, if any."""
        bits = self.samples.flags[:, :, TRACKED.index(kind)]
        hits = np.argwhere(bits)
        if len(hits) == 0:
            return None
        run, party = hits[0]
        return int(party), int(self.samples.seeds[run])

    def to_json(self) -> dict:
        u, use = self.utility, self.utility_stderr
        rci = self.z * self.reward_stderr
        return {
            "config": self.config_digest, "seed": self.seed, "runs": self.runs,
            "profile": [str(d) for d in self.profile], "utility_kind": self.kind.value,
            "confidence": self.confidence,
            "parties": [{"reward_mean": float(self.reward_mean[i]), "reward_ci": float(rci[i]),
                         "cost_mean": float(self.cost_mean[i]), "utility": float(u[i]),
                         "utility_ci": float(self.z * use[i]), "samples": self.runs}
                        for i in range(self.n_parties)],
        }

    def csv_rows(self) -> list[list]:
        u, use = self.utility, self.utility_stderr
        rci = self.z * self.reward_stderr
        label = profile_label(self.profile)
        return [[label, i, repr(float(self.reward_mean[i])), repr(float(rci[i])),
                 repr(float(self.cost_mean[i])), repr(float(u[i])), repr(float(self.z * use[i])), self.runs]
                for i in range(self.n_parties)]


CSV_HEADER = ["profile", "party", "reward_mean", "reward_ci", "cost_mean", "utility", "utility_ci", "samples"]


def estimate_utility(config: ExecutionConfig, profile, utility_kind=None, runs: int = 100,
                     seed: int = 0, externality: ExternalityModel | None = None,
                     confidence: float = DEFAULT_CONFIDENCE, workers: int | None = None) -> UtilityReport:
    """Sample mean and normal-approximation CI of each party's utility.

    Replica j runs with seed derive_seed(seed, j), so two profiles estimated
    under the same master seed see the same oracle coins, schedules and
    router coins wherever their actions coincide.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    kind = UtilityKind(utility_kind or config.utility)
    profile = tuple(parse_descriptor(d) for d in profile)
    samples = simulate_runs(config, profile, runs, seed, externality, workers)
    x = externality.rate(profile) if externality is not None else 1.0
    return UtilityReport(config.digest(), seed, runs, profile, kind, x, confidence, samples)


def extend_report(config: ExecutionConfig, report: UtilityReport, runs: int,
                  externality: ExternalityModel | None = None, workers: int | None = None) -> UtilityReport:
    """Grow a report to `runs` replicas, reusing the replicas already simulated."""
    if runs <= report.runs:
        return report
    more = simulate_runs(config, report.profile, runs - report.runs, report.seed, externality,
                         workers, start=report.runs)
    return UtilityReport(report.config_digest, report.seed, runs, report.profile, report.kind,
                         report.exchange_rate, report.confidence, _concat(report.samples, more))


def paired_difference(a: UtilityReport, b: UtilityReport, party: int) -> tuple[float, float]:
    """U_party(a) - U_party(b) and its standard error, pairing replicas by seed."""
    runs = min(a.runs, b.runs)
    fa = a.samples.features(party)[:runs]
    fb = b.samples.features(party)[:runs]
    va, ga = utility_gradient(a.kind, fa.mean(axis=0), a.exchange_rate)
    vb, gb = utility_gradient(b.kind, fb.mean(axis=0), b.exchange_rate)
    se = _stat(np.hstack([fa, fb]), np.concatenate([ga, -gb]))
    return float(va - vb), se


def report_json(report: UtilityReport) -> str:
    return json.dumps(report.to_json(), indent=2, sort_keys=False)
