"""
Information criteria for scoring a fitted support: BIC, EBIC, EFIC and the
scale-invariant EBIC_R.

Every score is "smaller is better". Variances enter only through logarithms
and are clamped below at ``EPS_VAR`` so that noiseless problems (zero
residual) still produce finite scores.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from scipy.special import gammaln

from .core import Dataset, FitResult, Support, null_variance, ols_fit
from .errors import DegenerateResidual

EPS_VAR = 1e-300


class CriterionKind(str, enum.Enum):
    BIC = "bic"
    EBIC = "ebic"
    EFIC = "efic"
    EBIC_R = "ebic_r"

    @classmethod
    def parse(cls, name: str) -> "CriterionKind":
        key = name.strip().lower().replace("-", "_")
        if key == "ebicr":
            key = "ebic_r"
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown criterion {name!r}; expected one of bic, ebic, efic, ebic_r") from None


@dataclass(frozen=True)
class CriterionSpec:
    """A criterion together with its tuning value (gamma, c or zeta; unused for BIC)."""

    kind: CriterionKind
    tuning: float = 0.0

    def __post_init__(self):
        kind = self.kind if isinstance(self.kind, CriterionKind) else CriterionKind.parse(self.kind)
        object.__setattr__(self, "kind", kind)
        tuning = float(self.tuning)
        if not math.isfinite(tuning) or tuning < 0:
            raise ValueError(f"tuning must be finite and non-negative, got {self.tuning!r}")
        object.__setattr__(self, "tuning", tuning)

    @property
    def label(self) -> str:
        if self.kind is CriterionKind.BIC:
            return "bic"
        return f"{self.kind.value}({self.tuning:g})"


@dataclass(frozen=True)
class CriterionScore:
    spec: CriterionSpec
    support: Support
    score: float


def _log(v: float) -> float:
    return math.log(max(v, EPS_VAR))


def log_binomial(p: int, k: int) -> float:
    """ln C(p, k) through log-gamma."""
    if k < 0 or k > p:
        raise ValueError(f"need 0 <= k <= p, got k={k}, p={p}")
    return float(gammaln(p + 1) - gammaln(k + 1) - gammaln(p - k + 1))


def score_bic(fit: FitResult, n: int) -> float:
    return n * _log(fit.sigma2_hat) + fit.k * math.log(n)


def score_ebic(fit: FitResult, n: int, p: int, gamma: float) -> float:
    return score_bic(fit, n) + 2.0 * gamma * log_binomial(p, fit.k)


def score_efic(fit: FitResult, gram_logdet: float, n: int, p: int, c: float) -> float:
    """
    EFIC works on the raw residual energy, not the variance, and carries the
    data-dependent term -(k+2) ln rss, which has no meaning at zero residual.
    """
    if fit.rss <= EPS_VAR:
        raise DegenerateResidual(f"support {fit.support} has zero residual energy")
    k = fit.k
    log_rss = math.log(fit.rss)
    return n * log_rss + k * math.log(n) + gram_logdet - (k + 2) * log_rss + 2.0 * c * k * math.log(p)


def score_ebic_r(fit: FitResult, sigma2_0: float, n: int, p: int, zeta: float) -> float:
    k = fit.k
    log_var = _log(fit.sigma2_hat)
    log_ratio = _log(sigma2_0) - log_var
    return (n * log_var
            + k * math.log(n / (2.0 * math.pi))
            + (k + 2) * log_ratio
            + 2.0 * k * zeta * math.log(p))


def score(spec: CriterionSpec, fit: FitResult, n: int, p: int, sigma2_0: float) -> float:
    """Dispatch to the scoring function named by ``spec``."""
    kind = spec.kind
    if kind is CriterionKind.BIC:
        return score_bic(fit, n)
    if kind is CriterionKind.EBIC:
        return score_ebic(fit, n, p, spec.tuning)
    if kind is CriterionKind.EFIC:
        return score_efic(fit, fit.gram_logdet, n, p, spec.tuning)
    return score_ebic_r(fit, sigma2_0, n, p, spec.tuning)


def score_support(spec: CriterionSpec, dataset: Dataset, support) -> float:
    """Fit ``support`` and score it in one call."""
    fit = ols_fit(dataset, support)
    return score(spec, fit, dataset.n, dataset.p, null_variance(dataset).sigma2_0)


def score_difference(spec: CriterionSpec, dataset: Dataset, i, s) -> float:
    """
    score(I) - score(S) written as a single closed-form difference.

    This path never calls the per-support scoring functions, so it can be
    used to cross-check them. Residual-ratio terms are grouped exactly as in
    the usual derivation of each criterion's pairwise difference.
    """
    fit_i = ols_fit(dataset, i)
    fit_s = ols_fit(dataset, s)
    n, p = dataset.n, dataset.p
    k, k0 = fit_i.k, fit_s.k
    delta = k - k0
    kind = spec.kind
    if kind is CriterionKind.EFIC:
        if fit_i.rss <= EPS_VAR or fit_s.rss <= EPS_VAR:
            raise DegenerateResidual("zero residual energy in EFIC difference")
        li, ls = math.log(fit_i.rss), math.log(fit_s.rss)
        return ((n - 2) * (li - ls)
                + (fit_i.gram_logdet - fit_s.gram_logdet)
                - k * li + k0 * ls
                + delta * (math.log(n) + 2.0 * spec.tuning * math.log(p)))
    li, ls = _log(fit_i.sigma2_hat), _log(fit_s.sigma2_hat)
    if kind is CriterionKind.EBIC_R:
        l0 = _log(null_variance(dataset).sigma2_0)
        return ((n - 2) * (li - ls)
                - k * li + k0 * ls
                + delta * l0
                + delta * (math.log(n / (2.0 * math.pi)) + 2.0 * spec.tuning * math.log(p)))
    diff = n * (li - ls) + delta * math.log(n)
    if kind is CriterionKind.EBIC:
        diff += 2.0 * spec.tuning * (log_binomial(p, k) - log_binomial(p, k0))
    return diff
