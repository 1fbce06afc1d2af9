"""Consistency-based hyperparameter selection for the one-class models.

A candidate (lambda, sigma) pair is scored by cross-validated target
rejection: the model is fit on target-only training folds and the validation
error is the fraction of held-out target samples it labels as outliers. A
candidate is *consistent* when that error stays below a threshold derived
from the expected number of rejections plus a few standard deviations of the
corresponding binomial. The search walks candidates from most complex
(smallest sigma, then largest lambda) to least complex and returns the first
consistent one.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import IllConditionedError, InsufficientDataError, InvalidInputError
from .gram_window import RegGramState
from .kernel import KernelSpec, pairwise_distance_range
from .models import fit_boundary, fit_reconstruction

FRAMEWORKS = ("boundary", "reconstruction")


def lambda_grid() -> list[float]:
    """The 17 decade values 1e-8 .. 1e8, ascending."""
    return [float(f"1e{e}") for e in range(-8, 9)]


def sigma_grid(X, count: int = 20) -> list[float]:
    """``count`` kernel widths linearly spaced between the smallest and
    largest pairwise distance in ``X`` (endpoints included).

    Collapses to a single value if all pairwise distances are equal.
    """
    if count < 1:
        raise InvalidInputError(f"count must be >= 1, got {count}")
    dmin, dmax = pairwise_distance_range(X)
    if dmin == dmax or count == 1:
        return [dmin]
    return list(np.linspace(dmin, dmax, count))


def consistency_threshold(M: int, eta: float, sigma_thr: float) -> float:
    """Largest acceptable validation rejection fraction.

    eta + sigma_thr * sqrt(eta * (1 - eta) / M): the expected rejection rate
    plus ``sigma_thr`` standard deviations of the rejection count, per
    validation sample.
    """
    if M < 1:
        raise InvalidInputError(f"M must be >= 1, got {M}")
    if not 0.0 <= eta <= 1.0:
        raise InvalidInputError(f"eta must lie in [0, 1], got {eta!r}")
    if sigma_thr < 0:
        raise InvalidInputError(f"sigma_thr must be >= 0, got {sigma_thr!r}")
    return eta + sigma_thr * math.sqrt(eta * (1.0 - eta) / M)


@dataclass
class SelectionConfig:
    folds: int = 5
    sigma_thr: float = 2.0
    eta: float = 0.05
    lambdas: list[float] = field(default_factory=lambda_grid)
    sigmas: list[float] | None = None  # None: derive from the data via sigma_grid

    def validate(self) -> None:
        if self.folds < 2:
            raise InvalidInputError(f"folds must be >= 2, got {self.folds}")
        if not self.lambdas or any(l <= 0 for l in self.lambdas):
            raise InvalidInputError("lambdas must be a non-empty list of positive reals")
        if self.sigmas is not None and (not self.sigmas or any(s <= 0 for s in self.sigmas)):
            raise InvalidInputError("sigmas must be a non-empty list of positive reals")


@dataclass
class SelectionResult:
    lam: float
    sigma: float
    cv_error: float
    e_thr: float
    consistent: bool

    def to_json_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "sigma": self.sigma,
            "cv_error": self.cv_error,
            "e_thr": self.e_thr,
            "consistent": self.consistent,
        }


def _default_workers() -> int:
    raw = os.environ.get("OKC_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _cv_error(X: np.ndarray, folds: list[np.ndarray], framework: str,
              lam: float, sigma: float, eta: float) -> float:
    """Mean held-out target rejection across folds; inf if any fold's
    regularized Gram is numerically unusable."""
    kernel = KernelSpec(sigma=sigma)
    errors = []
    for i, held_out in enumerate(folds):
        train_idx = np.concatenate([f for j, f in enumerate(folds) if j != i])
        try:
            state = RegGramState(X[train_idx], lam, kernel)
            if framework == "boundary":
                model = fit_boundary(state, eta)
            else:
                model = fit_reconstruction(state, eta)
        except IllConditionedError:
            return float("inf")
        labels = model.labels_for(model.scores(X[held_out]))
        errors.append(float(np.mean(labels == -1)))
    return float(np.mean(errors))


def select(X, framework: str = "boundary", cfg: SelectionConfig | None = None,
           seed: int = 0, workers: int | None = None) -> SelectionResult:
    """Pick (lambda, sigma) for target-only data ``X`` by consistency.

    Candidates are evaluated in complexity order and the first one whose
    cross-validated rejection stays below the consistency threshold is
    returned. If none qualifies the minimum-error candidate is returned with
    ``consistent=False``.

    ``workers`` > 1 evaluates candidates in parallel batches; the outcome is
    identical to the sequential scan. Defaults to the OKC_THREADS env var.
    """
    if framework not in FRAMEWORKS:
        raise InvalidInputError(f"framework must be one of {FRAMEWORKS}, got {framework!r}")
    cfg = cfg or SelectionConfig()
    cfg.validate()
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    N = X.shape[0]
    if N < 2 * cfg.folds:
        raise InsufficientDataError(f"need at least {2 * cfg.folds} samples for {cfg.folds} folds, got {N}")

    rng = np.random.default_rng(seed)
    order = rng.permutation(N)
    folds = np.array_split(order, cfg.folds)
    e_thr = consistency_threshold(N // cfg.folds, cfg.eta, cfg.sigma_thr)

    sigmas = cfg.sigmas if cfg.sigmas is not None else sigma_grid(X)
    # most complex first: tightest kernel, then weakest regularization
    candidates = [(lam, s) for s in sorted(sigmas) for lam in sorted(cfg.lambdas, reverse=True)]

    workers = workers if workers is not None else _default_workers()

    def evaluate(cand: tuple[float, float]) -> float:
        return _cv_error(X, folds, framework, cand[0], cand[1], cfg.eta)

    best: SelectionResult | None = None
    if workers <= 1:
        scored = ((c, evaluate(c)) for c in candidates)
    else:
        pool = ThreadPoolExecutor(max_workers=workers)
        scored = zip(candidates, pool.map(evaluate, candidates))
    try:
        for (lam, sigma), err in scored:
            if err <= e_thr:
                return SelectionResult(float(lam), float(sigma), float(err), float(e_thr), True)
            if best is None or err < best.cv_error:
                best = SelectionResult(float(lam), float(sigma), float(err), float(e_thr), False)
    finally:
        if workers > 1:
            pool.shutdown(wait=False, cancel_futures=True)
    if best is None or not np.isfinite(best.cv_error):
        raise IllConditionedError("every candidate's regularized Gram was numerically unusable")
    return best
