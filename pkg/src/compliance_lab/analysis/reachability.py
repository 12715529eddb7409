"""Statistical best responses, direct reachability and cone exploration."""
from __future__ import annotations

import csv
import io
import math
from collections import deque
from dataclasses import dataclass, field

from ..economics import ExternalityModel, UtilityKind, profile_label
from ..errors import DepthExceeded, EmptyCandidateSet
from ..execution import ExecutionConfig
from ..infractions import InfractionKind
from ..strategies import HONEST, StrategyDescriptor, parse_descriptor
from .montecarlo import (DEFAULT_CONFIDENCE, TRACKED, UtilityReport, estimate_utility,
                         extend_report, paired_difference, z_value)

ESCALATION = 4


class Estimator:
    """Caches utility reports per profile under one master seed.

    All reports share replica seeds, so any two of them can be compared
    with paired differences.
    """

    def __init__(self, config: ExecutionConfig, utility_kind=None, runs: int = 200, seed: int = 0,
                 confidence: float = DEFAULT_CONFIDENCE, max_runs: int | None = None,
                 externality: ExternalityModel | None = None, workers: int | None = None):
        self.config = config
        self.kind = UtilityKind(utility_kind or config.utility)
        self.runs = runs
        self.seed = seed
        self.confidence = confidence
        self.z = z_value(confidence)
        self.max_runs = max_runs if max_runs is not None else runs * ESCALATION ** 2
        self.externality = externality
        self.workers = workers
        self.cache: dict[tuple, UtilityReport] = {}

    def get(self, profile, runs: int | None = None) -> UtilityReport:
        profile = tuple(parse_descriptor(d) for d in profile)
        runs = runs or self.runs
        rep = self.cache.get(profile)
        if rep is None:
            rep = estimate_utility(self.config, profile, self.kind, runs, self.seed,
                                   self.externality, self.confidence, self.workers)
        elif rep.runs < runs:
            rep = extend_report(self.config, rep, runs, self.externality, self.workers)
        self.cache[profile] = rep
        return rep

    def diff(self, a, b, party: int, runs: int) -> tuple[float, float]:
        return paired_difference(self.get(a, runs), self.get(b, runs), party)


def _replace(profile, party: int, d: StrategyDescriptor) -> tuple:
    p = list(profile)
    p[party] = d
    return tuple(p)


@dataclass
class BestResponse:
    descriptor: StrategyDescriptor
    utility: float
    tied: tuple
    runs: int
    ambiguous: bool


def _best_response(est: Estimator, profile, party: int, candidates) -> BestResponse:
    profile = tuple(parse_descriptor(d) for d in profile)
    current = profile[party]
    cands = {parse_descriptor(c) for c in candidates} | {current}
    cands = sorted(cands, key=lambda d: d.sort_key())
    runs = est.runs
    while True:
        utils = {c: est.get(_replace(profile, party, c), runs).utility[party] for c in cands}
        best = max(utils.values())
        top = next(c for c in ([current] + cands) if utils[c] == best)
        tied, ambiguous = [], False
        for c in cands:
            if c == top:
                tied.append(c)
                continue
            diff, se = est.diff(_replace(profile, party, c), _replace(profile, party, top), party, runs)
            if diff + est.z * se >= 0:
                tied.append(c)
                ambiguous = ambiguous or se > 0
        if ambiguous and runs * ESCALATION <= est.max_runs:
            runs *= ESCALATION
            continue
        choice = current if current in tied else min(tied, key=lambda d: d.sort_key())
        return BestResponse(choice, utils[choice], tuple(tied), runs, ambiguous)


def best_response(config: ExecutionConfig, profile, party: int, candidates, utility_kind=None,
                  runs: int = 200, seed: int = 0, confidence: float = DEFAULT_CONFIDENCE,
                  max_runs: int | None = None, estimator: Estimator | None = None):
    """Best response of `party` among `candidates`, others fixed.

    Candidates whose utility is not CI-separated from the leader count as
    ties; ties go to the current strategy, then to the lowest ordinal.
    Overlapping noisy candidates trigger x4 more replicas up to `max_runs`.
    Returns (descriptor, estimated utility).
    """
    if not candidates:
        raise EmptyCandidateSet("candidate set is empty")
    est = estimator or Estimator(config, utility_kind, runs, seed, confidence, max_runs)
    br = _best_response(est, profile, party, candidates)
    return br.descriptor, br.utility


@dataclass
class Reachability:
    reachable: bool
    party: int | None
    gain: float = 0.0
    stderr: float = 0.0
    indeterminate: bool = False


def _reachability(est: Estimator, sigma, sigma2, eps: float, candidates=None) -> Reachability:
    sigma = tuple(parse_descriptor(d) for d in sigma)
    sigma2 = tuple(parse_descriptor(d) for d in sigma2)
    diffs = [i for i, (a, b) in enumerate(zip(sigma, sigma2)) if a != b]
    if len(sigma) != len(sigma2) or len(diffs) != 1:
        return Reachability(False, None)
    i = diffs[0]
    if math.isinf(eps) and eps > 0:
        return Reachability(False, i)
    runs = est.runs
    while True:
        gain, se = est.diff(sigma2, sigma, i, runs)
        lo, hi = gain - est.z * se, gain + est.z * se
        if lo > eps or hi <= eps:
            break
        if runs * ESCALATION > est.max_runs:
            return Reachability(False, i, gain, se, indeterminate=True)
        runs *= ESCALATION
    if lo <= eps:
        return Reachability(False, i, gain, se)
    cands = set(candidates or ()) | {sigma[i], sigma2[i]}
    br = _best_response(est, sigma, i, cands)
    return Reachability(br.descriptor == sigma2[i], i, gain, se)


def directly_reachable(config: ExecutionConfig, sigma, sigma2, eps: float, utility_kind=None,
                       runs: int = 200, candidates=None, seed: int = 0,
                       confidence: float = DEFAULT_CONFIDENCE, max_runs: int | None = None,
                       estimator: Estimator | None = None) -> bool:
    """True iff sigma2 is a unilateral best-response deviation gaining more than eps.

    The gain must be CI-separated from eps; an unresolved comparison at the
    replica cap counts as not reachable.
    """
    est = estimator or Estimator(config, utility_kind, runs, seed, confidence, max_runs)
    return _reachability(est, sigma, sigma2, eps, candidates).reachable


@dataclass
class ConeEntry:
    utility: tuple
    path: tuple  # profiles from the all-honest profile to this one, inclusive


@dataclass
class ConeResult:
    profiles: dict
    non_compliant_found: list  # (profile, kind, party, seed)
    verdicts: dict  # kind -> (label, witness path or None)
    epsilon: float
    depth_exceeded: bool = False
    indeterminate: list = field(default_factory=list)
    config_digest: str = ""
    seed: int = 0

    @property
    def partial(self) -> bool:
        return self.depth_exceeded or bool(self.indeterminate)

    def to_json(self) -> dict:
        return {
            "config": self.config_digest, "seed": self.seed,
            "epsilon": None if math.isinf(self.epsilon) else self.epsilon,
            "depth_exceeded": self.depth_exceeded,
            "indeterminate": [[profile_label(a), profile_label(b)] for a, b in self.indeterminate],
            "profiles": [{"profile": profile_label(p), "utility": list(e.utility),
                          "path": [profile_label(q) for q in e.path]}
                         for p, e in self.profiles.items()],
            "non_compliant": [{"profile": profile_label(p), "kind": k.value, "party": party, "seed": s}
                              for p, k, party, s in self.non_compliant_found],
            "verdicts": {k.value: {"verdict": v, "witness_path": None if w is None else
                                   [profile_label(q) for q in w]} for k, (v, w) in self.verdicts.items()},
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["profile", "depth", "utility", "path"])
        for p, e in self.profiles.items():
            w.writerow([profile_label(p), len(e.path) - 1, " ".join(repr(float(u)) for u in e.utility),
                        " -> ".join(profile_label(q) for q in e.path)])
        return buf.getvalue()


def explore_cone(config: ExecutionConfig, candidates, eps: float, utility_kind=None, runs: int = 200,
                 max_depth: int = 3, seed: int = 0,
                 kinds=(InfractionKind.Conf, InfractionKind.Abs, InfractionKind.Self),
                 confidence: float = DEFAULT_CONFIDENCE, max_runs: int | None = None,
                 externality: ExternalityModel | None = None, strict: bool = False,
                 estimator: Estimator | None = None) -> ConeResult:
    """Breadth-first search of the eps-cone of the all-honest profile over `candidates`.

    From each profile every party's best response is tried; the edge exists
    when the gain is CI-separated above eps. Discovered profiles are flagged
    with the infractions seen in their sampled traces.
    """
    candidates = [parse_descriptor(c) for c in candidates]
    if not candidates:
        raise EmptyCandidateSet("candidate set is empty")
    est = estimator or Estimator(config, utility_kind, runs, seed, confidence, max_runs, externality)
    kinds = tuple(InfractionKind(k) for k in kinds)
    root = tuple([HONEST] * config.n_parties)
    profiles = {root: ConeEntry(tuple(float(u) for u in est.get(root).utility), (root,))}
    queue = deque([root])
    exceeded = False
    indeterminate = []
    while queue:
        p = queue.popleft()
        depth = len(profiles[p].path) - 1
        if math.isinf(eps) and eps > 0:
            break
        for i in range(config.n_parties):
            br = _best_response(est, p, i, candidates)
            if br.descriptor == p[i]:
                continue
            q = _replace(p, i, br.descriptor)
            if q in profiles:
                continue
            r = _reachability(est, p, q, eps, candidates)
            if r.indeterminate:
                indeterminate.append((p, q))
            if not r.reachable:
                continue
            if depth + 1 > max_depth:
                exceeded = True
                continue
            profiles[q] = ConeEntry(tuple(float(u) for u in est.get(q).utility), profiles[p].path + (q,))
            queue.append(q)
    found = []
    verdicts = {}
    for k in kinds:
        witness = None
        for p, e in profiles.items():
            if k not in TRACKED:
                continue
            w = est.get(p).first_witness(k)
            if w is not None:
                found.append((p, k, w[0], w[1]))
                if witness is None:
                    witness = e.path
        verdicts[k] = ("CompliantOnCandidates", None) if witness is None else ("NonCompliant", witness)
    result = ConeResult(profiles, found, verdicts, eps, exceeded, indeterminate, config.digest(), seed)
    if strict and exceeded:
        raise DepthExceeded(f"cone deeper than {max_depth}", partial=result)
    return result
