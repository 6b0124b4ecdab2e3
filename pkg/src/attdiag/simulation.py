"""Synthetic experiments: outcome-dependent selection on a four-type binary
population, and a paired-DGP witness showing that one observed law is
compatible with materially different ATT values.

All randomness flows through the Philox counter-based generator with
per-stage spawn keys, so draws are reproducible and independent of
evaluation order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ValidationError, WitnessError
from .identification import Interval, fixed_radius_sets, massi_from_intervals
from .ingest import Dataset

# latent type -> (y1, y0)
TYPE_POTENTIALS = {"A": (1, 0), "B": (0, 1), "C": (1, 1), "D": (0, 0)}
TYPE_NAMES = ("A", "B", "C", "D")

# stage ids for stream splitting
_STAGE_TYPES = 0
_STAGE_TREAT = 1
_STAGE_SELECT = 2
_STAGE_WITNESS = 3


def _stage_rng(seed: int, *stage) -> np.random.Generator:
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(s) for s in stage))
    return np.random.Generator(np.random.Philox(seq))


@dataclass(frozen=True)
class SimConfig:
    """Knobs for the selection experiment."""

    seed: int
    n: int = 100_000
    type_proportions: tuple[float, float, float, float] = (0.3, 0.2, 0.4, 0.1)
    treat_prob: float = 0.5
    delta_grid: tuple[float, ...] = (0.0, 0.5, 1.0, 1.5, 2.0)
    epsilon: float = 0.3

    def __post_init__(self):
        object.__setattr__(self, "type_proportions", tuple(float(p) for p in self.type_proportions))
        object.__setattr__(self, "delta_grid", tuple(float(d) for d in self.delta_grid))
        if self.n < 1:
            raise ValidationError("n must be >= 1")
        if len(self.type_proportions) != 4 or any(p < 0 for p in self.type_proportions):
            raise ValidationError("type_proportions must be four non-negative reals")
        if abs(sum(self.type_proportions) - 1.0) > 1e-12:
            raise ValidationError("type_proportions must sum to 1")
        if not (0.0 < self.treat_prob < 1.0):
            raise ValidationError("treat_prob must be in (0, 1)")
        if self.epsilon < 0:
            raise ValidationError("epsilon must be >= 0")


@dataclass(frozen=True)
class SimUnit:
    """One simulated unit; selection status applies to a particular draw."""

    latent_type: str
    y1: int
    y0: int
    d: int
    y_observed: int
    selected: bool = False


class Population:
    """Pre-selection population stored as arrays; indexes like a sequence
    of SimUnit."""

    __slots__ = ("type_codes", "y1", "y0", "d", "y_observed")

    def __init__(self, type_codes, y1, y0, d):
        self.type_codes = type_codes
        self.y1 = y1
        self.y0 = y0
        self.d = d
        self.y_observed = d * y1 + (1 - d) * y0

    def __len__(self) -> int:
        return len(self.type_codes)

    def __getitem__(self, i: int) -> SimUnit:
        return SimUnit(
            latent_type=TYPE_NAMES[self.type_codes[i]],
            y1=int(self.y1[i]), y0=int(self.y0[i]),
            d=int(self.d[i]), y_observed=int(self.y_observed[i]),
        )

    def true_ate(self) -> float:
        return float(np.mean(self.y1 - self.y0))

    def type_frequencies(self) -> np.ndarray:
        return np.bincount(self.type_codes, minlength=4) / len(self)


def generate_population(config: SimConfig) -> Population:
    """Draw latent types and randomized treatment; deterministic per seed."""
    rng_types = _stage_rng(config.seed, _STAGE_TYPES)
    rng_treat = _stage_rng(config.seed, _STAGE_TREAT)
    codes = rng_types.choice(4, size=config.n, p=config.type_proportions).astype(np.int8)
    potentials = np.array([TYPE_POTENTIALS[t] for t in TYPE_NAMES], dtype=np.int8)
    y1 = potentials[codes, 0]
    y0 = potentials[codes, 1]
    d = (rng_treat.random(config.n) < config.treat_prob).astype(np.int8)
    return Population(codes, y1, y0, d)


def apply_selection(pop: Population, delta: float, seed: int) -> Dataset:
    """Keep each unit with probability logistic(delta * observed outcome).

    delta=0 keeps everyone with probability one half (selection ignores the
    outcome); growing delta favors high observed outcomes. Returns the
    selected units as a covariate-free Dataset.
    """
    if not (delta >= 0):  # also catches NaN
        raise DomainError("delta must be >= 0")
    rng = _stage_rng(seed, _STAGE_SELECT)
    p_select = 1.0 / (1.0 + np.exp(-delta * pop.y_observed.astype(float)))
    selected = rng.random(len(pop)) < p_select
    return Dataset(
        treated=pop.d[selected].astype(bool),
        outcome=pop.y_observed[selected].astype(float),
        covariates=None,
        unit_ids=np.flatnonzero(selected),
        provenance=f"sim_selected[delta={delta:g}]",
    )


@dataclass(frozen=True)
class SimSweepResult:
    deltas: tuple[float, ...]
    observed_ates: tuple[float, ...]
    sets: tuple[Interval, ...]
    massi: float
    seed: int


def run_sweep(config: SimConfig) -> SimSweepResult:
    """Observed difference in arm means per selection strength, with the
    fixed-radius identified set around each."""
    pop = generate_population(config)
    ates = []
    for i, delta in enumerate(config.delta_grid):
        child_seed = int(
            np.random.SeedSequence(entropy=config.seed, spawn_key=(_STAGE_SELECT, i))
            .generate_state(1)[0]
        )
        selected = apply_selection(pop, delta, child_seed)
        selected.require_both_arms("run_sweep")
        yt = selected.outcome[selected.treated]
        yc = selected.outcome[~selected.treated]
        ates.append(float(np.mean(yt) - np.mean(yc)))
    sets = fixed_radius_sets(ates, config.epsilon)
    return SimSweepResult(
        deltas=config.delta_grid,
        observed_ates=tuple(ates),
        sets=tuple(sets),
        massi=massi_from_intervals(config.delta_grid, sets),
        seed=config.seed,
    )


@dataclass(frozen=True)
class WitnessResult:
    """Two DGPs, one observed law: frequency tables over (d, y) cells plus
    each DGP's true ATT."""

    digest_ignorable: dict
    digest_threshold: dict
    att_ignorable: float
    att_threshold: float
    tv_distance: float
    selection_rate: float


def _freq_table(d: np.ndarray, y: np.ndarray) -> dict:
    n = len(d)
    table = {}
    for dv in (0, 1):
        for yv in (0, 1):
            table[(dv, yv)] = float(np.sum((d == dv) & (y == yv)) / n)
    return table


def total_variation(table_a: dict, table_b: dict) -> float:
    cells = set(table_a) | set(table_b)
    return 0.5 * sum(abs(table_a.get(c, 0.0) - table_b.get(c, 0.0)) for c in cells)


def nonid_witness(threshold_c: float = 0.5, seed: int = 0, n: int = 100_000,
                  type_proportions=(0.3, 0.2, 0.4, 0.1),
                  treat_prob: float = 0.5) -> WitnessResult:
    """Construct two DGPs that induce the same observed (d, y) law but
    different true ATTs.

    The first samples ignorably (a constant selection rate) from a
    population whose (d, y) law equals the second DGP's observed law; its
    true ATT is therefore the naive contrast of that observed law. The
    second selects units by thresholding the control potential outcome
    (keep iff y0 > threshold_c), so its true ATT stays at the population
    contrast while its observed law is distorted. Empirical frequency
    tables are returned as the digests.
    """
    pa, pb, pc, pd = (float(p) for p in type_proportions)
    if abs(pa + pb + pc + pd - 1.0) > 1e-12 or min(pa, pb, pc, pd) < 0:
        raise ValidationError("type_proportions must be a distribution")
    p_y1 = pa + pc  # P(y1 = 1)
    p_y0 = pb + pc  # P(y0 = 1)
    att_threshold = pa - pb  # randomized treatment: ATT = ATE

    # Analytic observed law of the threshold DGP over (d, y).
    if threshold_c >= 1.0:
        raise WitnessError(
            "threshold selects nobody (all y0 <= c); observed law undefined: "
            f"c={threshold_c}, P(y0=1)={p_y0}"
        )
    if threshold_c < 0.0:
        # Vacuous threshold: everyone selected; observed law = population law
        # and the two DGPs coincide, so their ATTs are the same number.
        selection_rate = 1.0
        p_y1_obs, p_y0_obs = p_y1, p_y0
        att_ignorable = att_threshold
    else:
        # Selected iff y0 = 1 (types B and C).
        selection_rate = p_y0
        if selection_rate <= 0.0:
            raise WitnessError(
                "threshold selects nobody (P(y0=1)=0); observed law undefined"
            )
        p_y1_obs = pc / p_y0  # treated show y1; y1=1 among {B,C} only for C
        p_y0_obs = 1.0        # controls show y0, which is 1 by selection
        att_ignorable = p_y1_obs - p_y0_obs

    # Monte Carlo draw of the threshold DGP.
    rng = _stage_rng(seed, _STAGE_WITNESS, 0)
    codes = rng.choice(4, size=n, p=[pa, pb, pc, pd])
    potentials = np.array([TYPE_POTENTIALS[t] for t in TYPE_NAMES], dtype=np.int8)
    y1 = potentials[codes, 0]
    y0 = potentials[codes, 1]
    d = (rng.random(n) < treat_prob).astype(np.int8)
    y_obs = d * y1 + (1 - d) * y0
    keep = y0 > threshold_c
    if not np.any(keep):
        raise WitnessError("threshold selected no units in the Monte Carlo draw")
    digest_threshold = _freq_table(d[keep], y_obs[keep])

    # Monte Carlo draw of the ignorable DGP: population (d, y) law equals the
    # threshold DGP's observed law; selection is an independent coin.
    rng2 = _stage_rng(seed, _STAGE_WITNESS, 1)
    d2 = (rng2.random(n) < treat_prob).astype(np.int8)
    p_one = np.where(d2 == 1, p_y1_obs, p_y0_obs)
    y2 = (rng2.random(n) < p_one).astype(np.int8)
    keep2 = rng2.random(n) < selection_rate
    if not np.any(keep2):
        raise WitnessError("ignorable selection kept no units in the Monte Carlo draw")
    digest_ignorable = _freq_table(d2[keep2], y2[keep2])

    return WitnessResult(
        digest_ignorable=digest_ignorable,
        digest_threshold=digest_threshold,
        att_ignorable=att_ignorable,
        att_threshold=att_threshold,
        tv_distance=total_variation(digest_ignorable, digest_threshold),
        selection_rate=selection_rate,
    )
