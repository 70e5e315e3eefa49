"""
Candidate-path generation and argmin model selection.

A selector turns a dataset into a short list of candidate supports; a
criterion then picks one of them. OMP gives a strictly nested path, the
LASSO homotopy gives the supports at each breakpoint of the L1 path, and the
exhaustive enumerator exists for small oracle checks.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from .core import Dataset, FitResult, Support, _factor, null_variance, ols_fit
from .criteria import CriterionScore, CriterionSpec, score
from .errors import AllCandidatesFailed, DataError, DegenerateResidual, RankDeficient, TooLarge

ZERO_RESIDUAL_RTOL = 1e-12
TIE_TOL = 1e-12
EXHAUSTIVE_LIMIT = 10**6
K_MAX_CAP = 30

_EPS = np.finfo(float).eps


class PathSource(str, enum.Enum):
    OMP = "omp"
    LARS = "lars"
    EXHAUSTIVE = "exhaustive"


@dataclass
class CandidatePath:
    """
    Ordered candidate supports produced by one selector run.

    ``flags`` records early termination or degeneracy events
    (``zero_residual``, ``rank_deficient``, ``degenerate_tie``, ``lambda_zero``).
    For LASSO paths, ``lambdas[i]`` is the breakpoint at which ``supports[i]``
    became active and ``coefs[i]`` the solution there, in unit-norm column
    coordinates.
    """

    supports: List[Support]
    source: PathSource
    flags: List[str] = field(default_factory=list)
    lambdas: Optional[List[float]] = None
    coefs: Optional[List[np.ndarray]] = None

    def __len__(self):
        return len(self.supports)


@dataclass
class SelectionResult:
    chosen: Support
    scores: List[CriterionScore]
    path: CandidatePath
    fit: Optional[FitResult] = None
    skipped: List[Tuple[Support, str]] = field(default_factory=list)


def default_k_max(n: int) -> int:
    """floor(n/2) capped at 30, and at least 1."""
    return max(1, min(n // 2, K_MAX_CAP))


def _check_k_max(dataset: Dataset, k_max: int) -> int:
    k_max = int(k_max)
    if not 1 <= k_max < dataset.n:
        raise DataError(f"k_max must satisfy 1 <= k_max < n={dataset.n}, got {k_max}")
    return min(k_max, dataset.p)


def _unit_columns(a: np.ndarray):
    norms = np.linalg.norm(a, axis=0)
    safe = np.where(norms > 0, norms, 1.0)
    return a / safe, norms


def omp_path(dataset: Dataset, k_max: int) -> CandidatePath:
    """
    Orthogonal matching pursuit for at most ``k_max`` iterations.

    Column choice uses unit-normalized columns, ties going to the smallest
    index. After every step the residual is recomputed as the projection of
    the full response onto the orthogonal complement of the selected columns.
    """
    k_max = _check_k_max(dataset, k_max)
    a, y = dataset.a, dataset.y
    n = dataset.n
    an, norms = _unit_columns(a)
    y_norm = float(np.linalg.norm(y))

    path = CandidatePath([], PathSource.OMP)
    q = np.empty((n, 0))
    selected: List[int] = []
    mask = np.zeros(dataset.p, dtype=bool)
    r = y.copy()
    max_norm = 0.0
    for _ in range(k_max):
        if np.linalg.norm(r) <= ZERO_RESIDUAL_RTOL * y_norm:
            path.flags.append("zero_residual")
            break
        corr = np.abs(an.T @ r)
        corr[mask] = -1.0
        j = int(np.argmax(corr))
        # two passes of classical Gram-Schmidt keep Q orthonormal to working precision
        v = a[:, j].copy()
        for _ in range(2):
            v -= q @ (q.T @ v)
        max_norm = max(max_norm, norms[j])
        if np.linalg.norm(v) <= max_norm * max(n, len(selected) + 1) * _EPS:
            path.flags.append("rank_deficient")
            break
        q = np.column_stack([q, v / np.linalg.norm(v)])
        selected.append(j)
        mask[j] = True
        r = y - q @ (q.T @ y)
        path.supports.append(tuple(selected))
    return path


def lars_path(dataset: Dataset, k_max: int) -> CandidatePath:
    """
    Exact LASSO regularization path by homotopy (LARS with the lasso
    modification), for the objective (1/2N)||y - Ax||^2 + lambda ||x||_1 on
    unit-norm columns.

    Starting from lambda_max = max_j |a_j^T y| / N, the active set changes at
    each breakpoint either by a variable entering (its correlation reaches
    lambda) or leaving (its coefficient crosses zero). The support after
    every change is recorded; the run stops once the active set first
    reaches ``k_max`` variables.
    """
    k_max = _check_k_max(dataset, k_max)
    n, p = dataset.n, dataset.p
    x, _ = _unit_columns(dataset.a)
    y = dataset.y

    path = CandidatePath([], PathSource.LARS, lambdas=[], coefs=[])
    c = x.T @ y
    lam = float(np.max(np.abs(c)))
    if lam <= ZERO_RESIDUAL_RTOL * float(np.linalg.norm(y)) or lam == 0.0:
        path.flags.append("zero_residual")
        return path
    lam_scale = lam

    beta = np.zeros(p)
    active: List[int] = []
    signs: List[float] = []

    first = _pick(np.abs(c), lam, lam_scale, path)
    active.append(first)
    signs.append(float(np.sign(c[first])))
    _record(path, active, lam / n, beta)

    just_dropped = -1
    max_iter = 50 * k_max + 100
    for _ in range(max_iter):
        if len(active) >= k_max:
            break
        xa = x[:, active]
        try:
            _, r, perm = _factor(xa, tuple(active))
        except RankDeficient:
            path.flags.append("rank_deficient")
            break
        s = np.asarray(signs)
        z = scipy.linalg.solve_triangular(r, s[perm], trans="T")
        z = scipy.linalg.solve_triangular(r, z)
        w = np.empty(len(active))
        w[perm] = z
        u = xa @ w
        av = x.T @ u

        inactive = np.ones(p, dtype=bool)
        inactive[active] = False
        if 0 <= just_dropped:
            inactive[just_dropped] = False
        t_add = np.full(p, np.inf)
        with np.errstate(divide="ignore", invalid="ignore"):
            d1 = 1.0 - av
            d2 = 1.0 + av
            t1 = np.where(d1 > 1e-15, (lam - c) / d1, np.inf)
            t2 = np.where(d2 > 1e-15, (lam + c) / d2, np.inf)
        t1[t1 < 0] = np.inf
        t2[t2 < 0] = np.inf
        t_add[inactive] = np.minimum(t1, t2)[inactive]

        beta_a = beta[active]
        with np.errstate(divide="ignore", invalid="ignore"):
            t_drop = np.where(w != 0, -beta_a / w, np.inf)
        t_drop[~(t_drop > 0)] = np.inf

        t_star = min(float(np.min(t_add)), float(np.min(t_drop)))
        if t_star >= lam - TIE_TOL * lam_scale:
            # no further breakpoint before lambda reaches zero
            path.flags.append("lambda_zero")
            break

        events = [(int(j), "add") for j in np.flatnonzero(t_add <= t_star + TIE_TOL * lam_scale)]
        events += [(active[pos], "drop") for pos in np.flatnonzero(t_drop <= t_star + TIE_TOL * lam_scale)]
        if len(events) > 1 and "degenerate_tie" not in path.flags:
            path.flags.append("degenerate_tie")

        beta[active] = beta_a + t_star * w
        lam -= t_star
        c = x.T @ (y - x[:, active] @ beta[active])

        j, kind = min(events)
        if kind == "add":
            active.append(j)
            signs.append(float(np.sign(c[j])) or 1.0)
            just_dropped = -1
        else:
            pos = active.index(j)
            active.pop(pos)
            signs.pop(pos)
            beta[j] = 0.0
            just_dropped = j
        _record(path, active, lam / n, beta)
    else:
        path.flags.append("max_iter")
    return path


def _pick(abs_c, lam, lam_scale, path):
    ties = np.flatnonzero(abs_c >= lam - TIE_TOL * lam_scale)
    if len(ties) > 1:
        path.flags.append("degenerate_tie")
    return int(ties[0])


def _record(path, active, lam, beta):
    path.supports.append(tuple(active))
    path.lambdas.append(float(lam))
    path.coefs.append(beta.copy())


def exhaustive_path(dataset: Dataset, k_max: int) -> CandidatePath:
    """Every support of size 1..k_max, in size-then-lexicographic order."""
    k_max = _check_k_max(dataset, k_max)
    p = dataset.p
    total = sum(math.comb(p, k) for k in range(1, k_max + 1))
    if total > EXHAUSTIVE_LIMIT:
        raise TooLarge(f"{total} candidate supports exceeds limit {EXHAUSTIVE_LIMIT}")
    supports = [s for k in range(1, k_max + 1) for s in itertools.combinations(range(p), k)]
    return CandidatePath(supports, PathSource.EXHAUSTIVE)


def _tie_key(value: float, support: Support):
    return (value, len(support), tuple(sorted(support)))


def fit_candidates(dataset: Dataset, path: CandidatePath):
    """
    Fit the empty support plus every path entry.

    Returns ``(fits, skipped)`` where rank-deficient candidates are left out
    of ``fits`` and listed in ``skipped``.
    """
    fits: List[FitResult] = []
    skipped: List[Tuple[Support, str]] = []
    for support in [()] + list(path.supports):
        try:
            fits.append(ols_fit(dataset, support))
        except RankDeficient as exc:
            skipped.append((tuple(support), str(exc)))
    return fits, skipped


def select_from_fits(dataset: Dataset, fits: Sequence[FitResult], path: CandidatePath,
                     spec: CriterionSpec, skipped=()) -> SelectionResult:
    n, p = dataset.n, dataset.p
    sigma2_0 = null_variance(dataset).sigma2_0
    scores: List[CriterionScore] = []
    skipped = list(skipped)
    best = None
    best_fit = None
    for fit in fits:
        try:
            value = score(spec, fit, n, p, sigma2_0)
        except DegenerateResidual as exc:
            skipped.append((fit.support, str(exc)))
            continue
        scores.append(CriterionScore(spec, fit.support, value))
        key = _tie_key(value, fit.support)
        if best is None or key < best:
            best, best_fit = key, fit
    if best_fit is None:
        raise AllCandidatesFailed(f"no candidate could be scored under {spec.label}")
    return SelectionResult(best_fit.support, scores, path, best_fit, skipped)


def select(dataset: Dataset, path: CandidatePath, spec: CriterionSpec) -> SelectionResult:
    """
    Score the empty support and every support on ``path`` under ``spec`` and
    return the minimizer. Ties go to the smaller support, then to the
    lexicographically smaller sorted index tuple. Rank-deficient candidates
    are skipped and listed in ``SelectionResult.skipped``.
    """
    fits, skipped = fit_candidates(dataset, path)
    return select_from_fits(dataset, fits, path, spec, skipped)


def select_many(dataset: Dataset, path: CandidatePath, specs: Sequence[CriterionSpec]):
    """Like :func:`select` for several criteria, fitting each candidate once."""
    fits, skipped = fit_candidates(dataset, path)
    return [select_from_fits(dataset, fits, path, spec, skipped) for spec in specs]


def run_selector(dataset: Dataset, kind, k_max: int) -> CandidatePath:
    kind = PathSource(kind)
    if kind is PathSource.OMP:
        return omp_path(dataset, k_max)
    if kind is PathSource.LARS:
        return lars_path(dataset, k_max)
    return exhaustive_path(dataset, k_max)
