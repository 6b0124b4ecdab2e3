"""Bootstrap distributions of the ATT and score-decile stratified estimates.

Resampling is stratified by arm so every replicate keeps both arms at
their original sizes; each replicate draws from its own spawned RNG
stream, making the estimates vector independent of execution order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AttDiagError, BootstrapError, ValidationError
from .estimators import MatchSpec, att_match
from .ingest import Dataset
from .propensity import PropensityModel, TrimRule, fit_logistic, score_dataset, trim


@dataclass(frozen=True)
class BootstrapSummary:
    """Replicate estimates with summary statistics.

    estimates holds the successful replicates; failures are excluded and
    counted in n_failed (b_requested = len(estimates) + n_failed).
    """

    estimates: tuple[float, ...]
    mean: float
    sd: float
    q025: float
    q50: float
    q975: float
    design_tag: str
    seed: int
    b_requested: int
    n_failed: int


@dataclass(frozen=True)
class DecileRow:
    decile: int  # 1..10
    n_treated: int
    n_control: int
    att: float | None
    se: float | None
    dropped: bool


@dataclass(frozen=True)
class DecileReport:
    rows: tuple[DecileRow, ...]
    score_boundaries: tuple[float, ...]  # realized decile score cut points


def _replicate_rng(seed: int, r: int) -> np.random.Generator:
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(r),))
    return np.random.Generator(np.random.Philox(seq))


def stratified_indices(rng: np.random.Generator, treated: np.ndarray) -> np.ndarray:
    """With-replacement resample preserving each arm's size exactly."""
    idx_t = np.flatnonzero(treated)
    idx_c = np.flatnonzero(~treated)
    draw_t = rng.choice(idx_t, size=len(idx_t), replace=True)
    draw_c = rng.choice(idx_c, size=len(idx_c), replace=True)
    return np.concatenate([draw_t, draw_c])


def bootstrap_att(data: Dataset, model_fit_per_replicate: bool,
                  estimator_spec: MatchSpec, b: int, seed: int, *,
                  covariates=None, model: PropensityModel | None = None,
                  ridge: float = 1e-8, tol: float = 1e-8, max_iter: int = 100,
                  trim_rule: TrimRule | None = None,
                  design_tag: str | None = None) -> BootstrapSummary:
    """Stratified bootstrap of the matching ATT.

    When model_fit_per_replicate is true the propensity model is refit on
    each replicate (covariates required); otherwise `model` scores every
    replicate. trim_rule, when given, is applied inside each replicate
    after (re)fitting. More than 20% failed replicates aborts.
    """
    if b < 1:
        raise ValidationError("b must be >= 1")
    data.require_both_arms("bootstrap_att")
    if model_fit_per_replicate:
        if covariates is None:
            raise ValidationError("per-replicate refit needs covariate names")
    elif model is None:
        raise ValidationError("model required when model_fit_per_replicate is false")

    estimates = []
    n_failed = 0
    last_error = None
    for r in range(b):
        rng = _replicate_rng(seed, r)
        replicate = data.take_with_fresh_ids(stratified_indices(rng, data.treated))
        try:
            rep_model = (
                fit_logistic(replicate, covariates, ridge=ridge, tol=tol,
                             max_iter=max_iter)
                if model_fit_per_replicate else model
            )
            sample = trim(replicate, rep_model, trim_rule) if trim_rule else replicate
            estimates.append(att_match(sample, rep_model, estimator_spec).tau_hat)
        except AttDiagError as exc:
            n_failed += 1
            last_error = exc
    if n_failed > 0.2 * b:
        raise BootstrapError(
            f"{n_failed}/{b} bootstrap replicates failed (last: {last_error})"
        )
    values = np.asarray(estimates)
    q025, q50, q975 = np.percentile(values, [2.5, 50.0, 97.5])
    return BootstrapSummary(
        estimates=tuple(float(v) for v in values),
        mean=float(np.mean(values)),
        sd=float(np.std(values, ddof=1)) if len(values) > 1 else 0.0,
        q025=float(q025), q50=float(q50), q975=float(q975),
        design_tag=design_tag or estimator_spec.design_tag,
        seed=seed, b_requested=b, n_failed=n_failed,
    )


def decile_att(data: Dataset, model: PropensityModel, min_per_arm: int = 5) -> DecileReport:
    """Arm-mean contrasts within propensity-score deciles.

    Units sort by (score, unit_id) and split into ten near-equal groups; a
    decile is dropped (att/se None) when either arm has fewer than
    min_per_arm units. Dropped deciles are data, not errors.
    """
    scores = score_dataset(model, data)
    order = np.lexsort((data.unit_ids, scores))
    groups = np.array_split(order, 10)
    rows = []
    boundaries = [float(scores[order[0]])] if len(order) else []
    for g, idx in enumerate(groups, start=1):
        if len(idx):
            boundaries.append(float(scores[idx[-1]]))
        treated = data.treated[idx]
        outcome = data.outcome[idx]
        n_t = int(treated.sum())
        n_c = int(len(idx) - n_t)
        if n_t < min_per_arm or n_c < min_per_arm:
            rows.append(DecileRow(g, n_t, n_c, None, None, dropped=True))
            continue
        yt, yc = outcome[treated], outcome[~treated]
        var_t = float(np.var(yt, ddof=1)) / n_t if n_t > 1 else 0.0
        var_c = float(np.var(yc, ddof=1)) / n_c if n_c > 1 else 0.0
        rows.append(DecileRow(
            g, n_t, n_c,
            att=float(np.mean(yt) - np.mean(yc)),
            se=float(np.sqrt(var_t + var_c)),
            dropped=False,
        ))
    return DecileReport(rows=tuple(rows), score_boundaries=tuple(boundaries))
