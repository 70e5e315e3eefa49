"""
Monte Carlo harness: synthetic trial generation, SNR calibration, and
probability-of-correct-model-selection (PCMS) sweeps.

Every random draw comes from a Philox stream keyed by (seed, trial, role),
so a trial's data depends only on those three values. Results are therefore
identical for any worker count or scheduling order.
"""

from __future__ import annotations

import csv
import dataclasses
import enum
import hashlib
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .core import Dataset, Support
from .criteria import CriterionSpec
from .errors import ConfigError, NoSuchCardinality, SparseSelError
from .selectors import CandidatePath, PathSource, default_k_max, run_selector, select_many

_ROLES = {"A": 0, "e": 1, "I": 2, "chi2": 3, "gauss": 4}


def stream(seed: int, trial: int, role: str) -> np.random.Generator:
    """Counter-based generator for one (seed, trial, role) triple."""
    key = np.random.SeedSequence([int(seed) & (2**64 - 1), int(trial), _ROLES[role]]).generate_state(2, np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


class Axis(str, enum.Enum):
    SNR_DB = "snr_db"
    N = "n"


@dataclass(frozen=True)
class GeneratorConfig:
    """
    Parameters of the synthetic regression model y = A_S x_S + e.

    Exactly one of ``p`` (fixed dimension) and ``d`` (p = round(n**d)) is
    set. ``sigma2`` fixes the noise variance directly and overrides
    ``snr_db``; ``noiseless`` drops the noise entirely. ``y_scale``
    multiplies the response after generation.
    """

    n: int
    x_s: Tuple[float, ...]
    snr_db: float = 0.0
    p: Optional[int] = None
    d: Optional[float] = None
    seed: int = 0
    noiseless: bool = False
    sigma2: Optional[float] = None
    y_scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "x_s", tuple(float(v) for v in self.x_s))
        if (self.p is None) == (self.d is None):
            raise ConfigError("exactly one of p and d must be given")
        if self.n < 1 or self.k0 < 1:
            raise ConfigError("n and the number of true coefficients must be positive")
        if self.k0 > self.n:
            raise ConfigError(f"k0={self.k0} exceeds n={self.n}")
        if self.dim < self.k0:
            raise ConfigError(f"p={self.dim} is smaller than k0={self.k0}")
        if not math.isfinite(self.snr_db):
            raise ConfigError("snr_db must be finite; use noiseless=true for the noise-free limit")
        if self.sigma2 is not None and not (self.sigma2 >= 0 and math.isfinite(self.sigma2)):
            raise ConfigError("sigma2 must be finite and non-negative")
        if not (self.y_scale > 0 and math.isfinite(self.y_scale)):
            raise ConfigError("y_scale must be positive")

    @property
    def k0(self) -> int:
        return len(self.x_s)

    @property
    def dim(self) -> int:
        if self.p is not None:
            return int(self.p)
        return int(round(self.n ** self.d))

    @property
    def true_support(self) -> Support:
        return tuple(range(self.k0))

    def at(self, axis: Axis, value: float) -> "GeneratorConfig":
        if Axis(axis) is Axis.SNR_DB:
            return dataclasses.replace(self, snr_db=float(value))
        return dataclasses.replace(self, n=int(value))


@dataclass(frozen=True)
class Trial:
    dataset: Dataset
    support: Support
    signal: np.ndarray
    signal_power: float
    noise_var: float


def draw_trial(config: GeneratorConfig, trial: int) -> Trial:
    """Generate one trial with its ground truth and noise calibration."""
    n, p, k0 = config.n, config.dim, config.k0
    a = stream(config.seed, trial, "A").standard_normal((n, p))
    signal = a[:, :k0] @ np.asarray(config.x_s)
    signal_power = float(signal @ signal) / n
    if config.noiseless:
        noise_var = 0.0
        y = signal.copy()
    else:
        if config.sigma2 is not None:
            noise_var = float(config.sigma2)
        else:
            noise_var = signal_power / 10.0 ** (config.snr_db / 10.0)
        e = math.sqrt(noise_var) * stream(config.seed, trial, "e").standard_normal(n)
        y = signal + e
    if config.y_scale != 1.0:
        y = y * config.y_scale
    return Trial(Dataset(a, y), config.true_support, signal, signal_power, noise_var)


def generate_trial(config: GeneratorConfig, trial: int) -> Tuple[Dataset, Support]:
    t = draw_trial(config, trial)
    return t.dataset, t.support


def oracle_select(dataset: Dataset, path: CandidatePath, k0: int, true_support: Support) -> Support:
    """
    Path entry of cardinality ``k0``. If several entries have that size (a
    LASSO path with drop events), the one matching ``true_support`` wins,
    otherwise the first.
    """
    hits = [s for s in path.supports if len(s) == k0]
    if not hits:
        raise NoSuchCardinality(f"path never reaches cardinality {k0}")
    target = set(true_support)
    for s in hits:
        if set(s) == target:
            return s
    return hits[0]


ORACLE = "oracle"


@dataclass(frozen=True)
class TrialRecord:
    axis_value: float
    trial_index: int
    criterion: str
    tuning: Optional[float]
    chosen: Optional[Support]
    correct: bool
    seed_used: int
    failed: bool = False


@dataclass
class SweepResult:
    """
    PCMS table for one sweep.

    ``correct[i, j]`` counts correct trials for row ``labels[i]`` at
    ``axis_values[j]``; the last row is always the oracle.
    """

    axis: Axis
    axis_values: List[float]
    criteria: List[CriterionSpec]
    correct: np.ndarray
    failures: List[int]
    trials: int
    digest: str
    records: List[TrialRecord] = field(default_factory=list, repr=False)

    @property
    def labels(self) -> List[str]:
        return [c.label for c in self.criteria] + [ORACLE]

    @property
    def pcms(self) -> np.ndarray:
        return self.correct / self.trials

    def curve(self, label: str) -> np.ndarray:
        return self.pcms[self.labels.index(label)]

    def standard_error(self, label: str) -> np.ndarray:
        q = self.curve(label)
        return np.sqrt(q * (1 - q) / self.trials)

    def rows(self):
        for j, v in enumerate(self.axis_values):
            for i, spec in enumerate(self.criteria):
                yield v, spec.kind.value, spec.tuning, int(self.correct[i, j])
            yield v, ORACLE, None, int(self.correct[-1, j])

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["axis_value", "criterion", "tuning", "trials", "correct_count", "pcms"])
        for v, name, tuning, count in self.rows():
            writer.writerow([_fmt_axis(self.axis, v), name, "" if tuning is None else repr(tuning),
                             self.trials, count, repr(count / self.trials)])
        return buf.getvalue()

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(self.to_csv())


def _fmt_axis(axis: Axis, v: float) -> str:
    if axis is Axis.N:
        return str(int(v))
    return repr(float(v))


def config_digest(config: GeneratorConfig, axis, axis_values, criteria, selector, trials, k_max) -> str:
    payload = {
        "generator": dataclasses.asdict(config),
        "axis": Axis(axis).value,
        "axis_values": [float(v) for v in axis_values],
        "criteria": [[c.kind.value, c.tuning] for c in criteria],
        "selector": PathSource(selector).value,
        "k_max": k_max,
        "trials": trials,
    }
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _trial_outcomes(config: GeneratorConfig, trial: int, criteria, selector, k_max):
    """Chosen supports (one per criterion) and the oracle pick for one trial."""
    ds, support = generate_trial(config, trial)
    km = default_k_max(ds.n) if k_max is None else min(int(k_max), ds.n - 1)
    try:
        path = run_selector(ds, selector, km)
        results = select_many(ds, path, criteria)
    except SparseSelError:
        return None, None
    try:
        oracle = oracle_select(ds, path, config.k0, support)
    except NoSuchCardinality:
        oracle = None
    return [r.chosen for r in results], oracle


def _run_chunk(args):
    config, axis, values, chunk, criteria, selector, k_max = args
    out = []
    for j, trial in chunk:
        cfg = config.at(axis, values[j])
        out.append((j, trial) + _trial_outcomes(cfg, trial, criteria, selector, k_max))
    return out


def run_sweep(config: GeneratorConfig, axis, axis_values: Sequence[float], criteria: Sequence[CriterionSpec],
              selector="omp", trials: int = 1000, workers: int = 1, k_max: Optional[int] = None,
              keep_records: bool = True, progress: Optional[Callable[[str], None]] = None) -> SweepResult:
    """
    Estimate PCMS for every criterion at every axis point.

    Each trial draws data, runs the selector once and lets every criterion
    pick from the shared candidate path. A trial whose selector fails counts
    as incorrect for every criterion and is tallied in ``failures``.
    """
    axis = Axis(axis)
    selector = PathSource(selector)
    values = [float(v) for v in axis_values]
    criteria = list(criteria)
    if trials < 1:
        raise ConfigError("trials must be at least 1")
    if not values:
        raise ConfigError("axis values must be non-empty")
    if values != sorted(values):
        raise ConfigError("axis values must be sorted")
    if not criteria:
        raise ConfigError("at least one criterion is required")
    for v in values:
        config.at(axis, v)  # validates every axis point up front

    work = [(j, t) for j in range(len(values)) for t in range(trials)]
    workers = max(1, int(workers))
    n_chunks = max(1, min(len(work), workers * 8))
    size = -(-len(work) // n_chunks)
    chunks = [work[i:i + size] for i in range(0, len(work), size)]
    jobs = [(config, axis, values, c, criteria, selector, k_max) for c in chunks]

    outcomes = []
    if workers == 1:
        for i, job in enumerate(jobs):
            outcomes.extend(_run_chunk(job))
            if progress:
                progress(f"chunk {i + 1}/{len(jobs)}")
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for i, res in enumerate(pool.map(_run_chunk, jobs)):
                outcomes.extend(res)
                if progress:
                    progress(f"chunk {i + 1}/{len(jobs)}")
    outcomes.sort(key=lambda o: (o[0], o[1]))

    truth = set(config.true_support)
    n_rows = len(criteria) + 1
    correct = np.zeros((n_rows, len(values)), dtype=np.int64)
    failures = [0] * len(values)
    records: List[TrialRecord] = []
    for j, trial, chosen, oracle in outcomes:
        v = values[j]
        if chosen is None:
            failures[j] += 1
        for i, spec in enumerate(criteria):
            pick = None if chosen is None else chosen[i]
            ok = pick is not None and set(pick) == truth
            correct[i, j] += ok
            if keep_records:
                records.append(TrialRecord(v, trial, spec.label, spec.tuning, pick, ok, config.seed, chosen is None))
        ok = oracle is not None and set(oracle) == truth
        correct[-1, j] += ok
        if keep_records:
            records.append(TrialRecord(v, trial, ORACLE, None, oracle, ok, config.seed, chosen is None))

    if np.any(correct[:-1] > correct[-1]):
        raise AssertionError("a criterion beat the oracle; candidate paths are inconsistent")
    digest = config_digest(config, axis, values, criteria, selector, trials, k_max)
    return SweepResult(axis, values, criteria, correct, failures, trials, digest, records)


def _stderr_progress(msg: str) -> None:
    print(msg, file=sys.stderr, flush=True)
