"""
Monte Carlo audits of the distributional facts behind EBIC_R consistency:
moments of the null and overfitted variance estimates, tail bounds for
maxima of chi-square and Gaussian variables, and strict positivity of
misfit signal energy.

Each audit returns a report dataclass with a ``passed`` flag and a
``to_dict`` method for the JSON audit log.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np
from scipy import stats

from .core import Dataset, ols_fit
from .simlab import GeneratorConfig, draw_trial, stream

MISFIT_FLOOR = 1e-8


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


class _Report:
    def to_dict(self):
        return _jsonable(dataclasses.asdict(self))


# ---------------------------------------------------------------------------
# tail bounds for maxima
# ---------------------------------------------------------------------------

def chi2_max_bound(m: int, k: int, psi: float) -> float:
    """k + 2 sqrt(k psi ln m) + 2 psi ln m."""
    lm = math.log(m)
    return k + 2.0 * math.sqrt(k * psi * lm) + 2.0 * psi * lm


def gauss_max_bound(m: int) -> float:
    return math.sqrt(2.0 * math.log(m))


def _batch_maxima(dist, m: int, trials: int, rng: np.random.Generator, exact: bool, chunk: int = 2_000_000):
    """
    Maxima of ``trials`` batches of ``m`` i.i.d. draws from ``dist``.

    With ``exact`` the maxima are sampled from their own distribution
    (CDF F^m) by inversion, which is cheap for any m; otherwise every
    batch is drawn in full.
    """
    if exact:
        u = rng.random(trials)
        # upper-tail probability of the max is 1 - (1 - q)^m; solve for q stably
        q = -np.expm1(np.log1p(-u) / m)
        return dist.isf(q)
    out = np.empty(trials)
    per = max(1, chunk // m)
    for start in range(0, trials, per):
        stop = min(trials, start + per)
        out[start:stop] = dist.rvs(size=(stop - start, m), random_state=rng).max(axis=1)
    return out


@dataclass
class TailBoundReport(_Report):
    m: int
    k: int
    psi: float
    trials: int
    chi2_bound: float
    gauss_bound: float
    chi2_violation: float
    gauss_violation: float
    chi2_union_bound: float
    gauss_union_bound: float


def tail_bound_audit(m: int, k: int, psi: float, trials: int, seed: int, exact: bool = True) -> TailBoundReport:
    """
    Fraction of batches whose maximum of ``m`` chi-square(k) draws exceeds
    the chi-square max bound, and likewise for ``m`` standard normals
    against sqrt(2 ln m).
    """
    if psi <= 1:
        raise ValueError("psi must exceed 1")
    if m < 2:
        raise ValueError("m must be at least 2")
    zmax = _batch_maxima(stats.chi2(k), m, trials, stream(seed, m, "chi2"), exact)
    xmax = _batch_maxima(stats.norm(), m, trials, stream(seed, m, "gauss"), exact)
    cb, gb = chi2_max_bound(m, k, psi), gauss_max_bound(m)
    return TailBoundReport(
        m=m, k=k, psi=psi, trials=trials,
        chi2_bound=cb, gauss_bound=gb,
        chi2_violation=float(np.mean(zmax > cb)),
        gauss_violation=float(np.mean(xmax > gb)),
        chi2_union_bound=float(m ** (1.0 - psi)),
        gauss_union_bound=float(1.0 / (2.0 * math.sqrt(math.pi * math.log(m)))),
    )


@dataclass
class TailTrendReport(_Report):
    points: List[TailBoundReport]
    chi2_limit: float
    gauss_limit: float
    limit_m: int
    trend_checked: bool
    limit_checked: bool
    chi2_decreasing: bool
    gauss_decreasing: bool
    chi2_ok: bool
    gauss_ok: bool
    slack_se: float = 0.0
    notice: str = ""

    @property
    def passed(self) -> bool:
        return self.chi2_ok and self.gauss_ok and self.chi2_decreasing and self.gauss_decreasing


def _non_increasing(fracs: Sequence[float], trials: int, slack_se: float) -> bool:
    """Each fraction at most the previous one plus ``slack_se`` binomial standard errors."""
    for a, b in zip(fracs, fracs[1:]):
        se = math.sqrt((a * (1 - a) + b * (1 - b)) / trials)
        if b > a + slack_se * se:
            return False
    return True


def tail_bound_trend(ms: Sequence[int], k: int = 3, psi: float = 1.2, trials: int = 20000, seed: int = 0,
                     chi2_limit: float = 0.05, gauss_limit: float = 0.4, exact: bool = True,
                     limit_m: int = 10_000, slack_se: float = 0.0) -> TailTrendReport:
    """
    Run :func:`tail_bound_audit` over increasing ``ms``.

    Both violation fractions must be non-increasing in m; ``slack_se``
    tolerates an uptick of that many standard errors between neighbours.
    The absolute limits apply at every m >= ``limit_m``. Checks that have
    no applicable points are skipped (and pass) with a notice.
    """
    ms = sorted(int(m) for m in ms)
    points = [tail_bound_audit(m, k, psi, trials, seed, exact) for m in ms]
    chi = [pt.chi2_violation for pt in points]
    gau = [pt.gauss_violation for pt in points]
    big = [pt for pt in points if pt.m >= limit_m]
    notes = []
    if len(points) < 2:
        notes.append("trend check skipped: fewer than two values of m")
    if not big:
        notes.append(f"limit check skipped: no m >= {limit_m}")
    return TailTrendReport(
        points=points, chi2_limit=chi2_limit, gauss_limit=gauss_limit, limit_m=limit_m,
        trend_checked=len(points) >= 2, limit_checked=bool(big),
        chi2_decreasing=_non_increasing(chi, trials, slack_se),
        gauss_decreasing=_non_increasing(gau, trials, slack_se),
        chi2_ok=all(pt.chi2_violation <= chi2_limit for pt in big),
        gauss_ok=all(pt.gauss_violation <= gauss_limit for pt in big),
        slack_se=slack_se,
        notice="; ".join(notes),
    )


# ---------------------------------------------------------------------------
# null variance
# ---------------------------------------------------------------------------

@dataclass
class NullVarianceReport(_Report):
    n_values: List[int]
    trials: int
    mean_offset: List[float]
    mean_offset_se: List[float]
    var_offset: List[float]
    var_offset_se: List[float]
    sample_variance: List[float]
    n_se: float
    mean_ok: bool
    var_formula_ok: bool
    variance_decreasing: bool

    @property
    def passed(self) -> bool:
        return self.mean_ok and self.var_formula_ok and self.variance_decreasing


def null_variance_audit(config: GeneratorConfig, n_values: Sequence[int], trials: int, n_se: float = 3.0) -> NullVarianceReport:
    """
    Check the moments of sigma2_0 = ||y||^2 / N.

    Given the design, E[sigma2_0] = sigma^2 + ||A_S x_S||^2/N and
    Var[sigma2_0] = 2 sigma^4/N + 4 sigma^2 ||A_S x_S||^2/N^2. Per trial the
    centred value and its squared deviation minus the conditional variance
    both have mean zero; the pooled means must lie within ``n_se`` standard
    errors of zero. The plain sample variance of sigma2_0 must also
    decrease along ``n_values``.
    """
    means, mean_se, voff, voff_se, svar = [], [], [], [], []
    for n in n_values:
        cfg = dataclasses.replace(config, n=int(n))
        est = np.empty(trials)
        centred = np.empty(trials)
        dev2 = np.empty(trials)
        for t in range(trials):
            tr = draw_trial(cfg, t)
            s0 = float(tr.dataset.y @ tr.dataset.y) / n
            mu = tr.noise_var + tr.signal_power
            var = 2 * tr.noise_var**2 / n + 4 * tr.noise_var * tr.signal_power / n
            est[t] = s0
            centred[t] = s0 - mu
            dev2[t] = (s0 - mu) ** 2 - var
        means.append(float(centred.mean()))
        mean_se.append(float(centred.std(ddof=1) / math.sqrt(trials)))
        voff.append(float(dev2.mean()))
        voff_se.append(float(dev2.std(ddof=1) / math.sqrt(trials)))
        svar.append(float(est.var(ddof=1)))
    return NullVarianceReport(
        n_values=[int(n) for n in n_values], trials=trials,
        mean_offset=means, mean_offset_se=mean_se, var_offset=voff, var_offset_se=voff_se,
        sample_variance=svar, n_se=n_se,
        mean_ok=all(abs(m) <= n_se * s for m, s in zip(means, mean_se)),
        var_formula_ok=all(abs(m) <= n_se * s for m, s in zip(voff, voff_se)),
        variance_decreasing=all(b < a for a, b in zip(svar, svar[1:])),
    )


# ---------------------------------------------------------------------------
# overfitted variance and misfit energy
# ---------------------------------------------------------------------------

@dataclass
class OverfitVarianceReport(_Report):
    n: int
    k: int
    trials: int
    mean: float
    mean_target: float
    mean_se: float
    variance: float
    variance_target: float
    variance_se: float
    n_se: float

    @property
    def passed(self) -> bool:
        return (abs(self.mean - self.mean_target) <= self.n_se * self.mean_se
                and abs(self.variance - self.variance_target) <= self.n_se * self.variance_se)


def _superset(rng, k0: int, p: int, k: int):
    extra = rng.choice(np.arange(k0, p), size=k - k0, replace=False)
    return tuple(range(k0)) + tuple(int(i) for i in extra)


def overfit_variance_audit(config: GeneratorConfig, trials: int, k: int, n_se: float = 3.0) -> OverfitVarianceReport:
    """
    For random supersets I of the true support with |I| = k, the statistic
    (N / sigma^2) * sigma2_I is chi-square with N - k degrees of freedom.
    Its sample mean and variance are compared with N - k and 2(N - k).
    """
    n, p, k0 = config.n, config.dim, config.k0
    if not k0 <= k < n or k > p:
        raise ValueError(f"need k0 <= k < n and k <= p, got k={k}")
    stat = np.empty(trials)
    for t in range(trials):
        tr = draw_trial(config, t)
        if tr.noise_var <= 0:
            raise ValueError("overfit variance audit needs a noisy configuration")
        support = _superset(stream(config.seed, t, "I"), k0, p, k)
        fit = ols_fit(tr.dataset, support)
        stat[t] = n * fit.sigma2_hat / tr.noise_var
    nu = n - k
    # sample-variance standard error from the chi-square fourth central moment
    mu4 = 12.0 * nu**2 + 48.0 * nu
    return OverfitVarianceReport(
        n=n, k=k, trials=trials,
        mean=float(stat.mean()), mean_target=float(nu), mean_se=math.sqrt(2.0 * nu / trials),
        variance=float(stat.var(ddof=1)), variance_target=2.0 * nu,
        variance_se=math.sqrt((mu4 - (2.0 * nu) ** 2) / trials), n_se=n_se,
    )


@dataclass
class MisfitEnergyReport(_Report):
    n: int
    trials: int
    floor: float
    min_energy: float
    argmin_trial: int
    min_support: List[int] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.min_energy > self.floor


def _misfit(rng, k0: int, p: int):
    """Random support of size <= k0 that misses at least one true index."""
    k = int(rng.integers(1, k0 + 1))
    keep = int(rng.integers(0, min(k, k0 - 1) + 1))
    true_part = rng.choice(k0, size=keep, replace=False)
    rest = rng.choice(np.arange(k0, p), size=k - keep, replace=False)
    return tuple(int(i) for i in np.concatenate([true_part, rest]))


def misfit_energy_audit(config: GeneratorConfig, trials: int, floor: float = MISFIT_FLOOR,
                        swap_one: bool = False) -> MisfitEnergyReport:
    """
    Minimum over trials of ||(I - P_I) A_S x_S||^2 / N for random misfitted
    supports I. With ``swap_one`` every I replaces exactly one true index
    by a random null index; otherwise size and overlap are random.
    """
    n, p, k0 = config.n, config.dim, config.k0
    best, best_t, best_s = math.inf, -1, ()
    for t in range(trials):
        tr = draw_trial(config, t)
        rng = stream(config.seed, t, "I")
        if swap_one:
            drop = int(rng.integers(0, k0))
            add = int(rng.integers(k0, p))
            support = tuple(i for i in range(k0) if i != drop) + (add,)
        else:
            support = _misfit(rng, k0, p)
        energy = ols_fit(Dataset(tr.dataset.a, tr.signal), support).rss / n
        if energy < best:
            best, best_t, best_s = energy, t, support
    return MisfitEnergyReport(n=n, trials=trials, floor=floor, min_energy=float(best),
                              argmin_trial=best_t, min_support=list(best_s))


@dataclass
class IdentifiabilityReport(_Report):
    misfit: MisfitEnergyReport
    overfit: OverfitVarianceReport

    @property
    def passed(self) -> bool:
        return self.misfit.passed and self.overfit.passed


def identifiability_audit(config: GeneratorConfig, trials: int, overfit_k: int | None = None) -> IdentifiabilityReport:
    """Misfit-energy positivity and overfit variance moments on one configuration."""
    k = config.k0 + 2 if overfit_k is None else overfit_k
    return IdentifiabilityReport(misfit_energy_audit(config, trials), overfit_variance_audit(config, trials, k))
