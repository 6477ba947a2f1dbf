"""Information numbers, ladder probabilities, and detection delay bounds.

For a false alarm budget gamma the policy threshold is A = log(gamma). The
worst-case expected detection delay is bracketed by

  lower:  log(gamma) / max I over affected size-m subsets,
  upper:  max A / J over affected sampled units, plus second-order terms,

where I is the information number (Kullback-Leibler divergence of the true
post-change local law against the pre-change law) and J is the post-change
drift of the mixture log likelihood ratio. The explicit second-order terms
charge one restart cost at the affected units and the expected passage time
through the unaffected ones, via ladder escape probabilities of the local
random walks.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .gaussian import GaussianLocal, gaussian_kl
from .model import ChangePointModel, LocalDistribution, PostChangeHypothesis, Unit, affected_units

__all__ = [
    "DegenerateBoundError",
    "Estimate",
    "UnitStatistics",
    "NonAsymptoticBound",
    "BoundsReport",
    "OptimalityClass",
    "info_number",
    "drift_post",
    "drift_pre",
    "llr_second_moment",
    "ladder_prob_no_descend",
    "ladder_prob_no_ascend",
    "lower_bound_first_order",
    "upper_bound_first_order",
    "are_upper_bound",
    "classify_optimality",
    "nonasymptotic_upper_bound",
    "compute_unit_statistics",
    "bounds_report",
]

_MIN_LADDER_HORIZON = 1_000
_MIN_LADDER_REPS = 10_000
_MIN_DRIFT_REPS = 10_000


class DegenerateBoundError(RuntimeError):
    """An estimated escape probability is zero, so a bound degenerates to infinity."""


@dataclass(frozen=True)
class Estimate:
    """A scalar with its Monte Carlo standard error; stderr 0 marks a closed form."""

    value: float
    stderr: float = 0.0
    note: str | None = None


@dataclass(frozen=True)
class UnitStatistics:
    """Everything the delay bounds need about one unit.

    Post-change quantities (``drift_post``, ``second_moment``, ``q_no_descend``)
    are None for units the hypothesis does not affect. ``q_no_ascend`` is the
    probability that the pre-change random walk of the unit never becomes
    positive; ``q_no_descend`` that the post-change walk never becomes negative.
    """

    unit: Unit
    info_number: Estimate
    drift_pre: Estimate
    q_no_ascend: Estimate
    drift_post: Estimate | None = None
    second_moment: Estimate | None = None
    q_no_descend: Estimate | None = None


def _rng(seed, *salt) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, *salt))))


def _plain_llr(f: LocalDistribution, g: LocalDistribution, x: np.ndarray) -> np.ndarray:
    return np.asarray(g.logpdf(x)) - np.asarray(f.logpdf(x))


def info_number(
    model: ChangePointModel,
    hypothesis: PostChangeHypothesis,
    unit: Unit,
    method: str = "closed_form",
    reps: int = 100_000,
    seed: int = 0,
) -> Estimate:
    """Information number of the unit: KL of its true post-change law against
    its pre-change law. Returns 0 with a note when the unit is not affected.
    """
    if unit not in set(model.units):
        raise ValueError(f"unit {unit} is not sampled by this model")
    if not hypothesis.is_affected(unit):
        return Estimate(0.0, 0.0, note="not affected")
    f = model.pre_local[unit]
    g = hypothesis.local_post[unit]
    if method == "closed_form":
        if not (isinstance(f, GaussianLocal) and isinstance(g, GaussianLocal)):
            raise ValueError("closed form requires Gaussian local laws; use method='monte_carlo'")
        return Estimate(gaussian_kl(g, f), 0.0)
    if method == "monte_carlo":
        rng = _rng(seed, 0x1F0)
        vals = _plain_llr(f, g, g.sample(rng, reps))
        return Estimate(float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(reps)))
    raise ValueError(f"unknown method {method!r}, expected 'closed_form' or 'monte_carlo'")


def drift_post(
    model: ChangePointModel,
    hypothesis: PostChangeHypothesis,
    unit: Unit,
    reps: int = 100_000,
    seed: int = 0,
) -> Estimate:
    """Post-change mean of the mixture log likelihood ratio of an affected unit.

    When the family is a singleton this equals the information number; the
    closed form, when available, is cross-checked and a disagreement beyond
    three standard errors is flagged in the note.
    """
    if reps < _MIN_DRIFT_REPS:
        raise ValueError(f"reps must be at least {_MIN_DRIFT_REPS}, got {reps}")
    if not hypothesis.is_affected(unit):
        raise ValueError(f"unit {unit} is not affected under {hypothesis.label}")
    g = hypothesis.local_post[unit]
    rng = _rng(seed, 0x2F0)
    vals = np.asarray(model.mixture_llr(unit, g.sample(rng, reps)))
    est = Estimate(float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(reps)))
    f = model.pre_local[unit]
    if (
        len(model.post_family[unit]) == 1
        and isinstance(f, GaussianLocal)
        and isinstance(g, GaussianLocal)
    ):
        exact = gaussian_kl(g, f)
        if abs(est.value - exact) > 3.0 * max(est.stderr, 1e-15):
            return Estimate(est.value, est.stderr, note=f"singleton cross-check failed: closed form {exact:.6g}")
    return est


def drift_pre(
    model: ChangePointModel,
    unit: Unit,
    reps: int = 100_000,
    seed: int = 0,
) -> Estimate:
    """Pre-change mean of the negated mixture log likelihood ratio.

    This is the KL divergence of the pre-change law against the mixture and
    must be positive for the policy to leave unaffected units. A value not
    clearing zero by three standard errors is flagged, not raised.
    """
    if reps < _MIN_DRIFT_REPS:
        raise ValueError(f"reps must be at least {_MIN_DRIFT_REPS}, got {reps}")
    f = model.pre_local[unit]
    rng = _rng(seed, 0x3F0)
    vals = -np.asarray(model.mixture_llr(unit, f.sample(rng, reps)))
    mean = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(reps))
    note = None if mean > 3.0 * se else "drift sign not resolved at three standard errors"
    return Estimate(mean, se, note=note)


def llr_second_moment(
    model: ChangePointModel,
    hypothesis: PostChangeHypothesis,
    unit: Unit,
    reps: int = 100_000,
    seed: int = 0,
) -> Estimate:
    """Post-change variance of the mixture log likelihood ratio of an affected unit."""
    if reps < _MIN_DRIFT_REPS:
        raise ValueError(f"reps must be at least {_MIN_DRIFT_REPS}, got {reps}")
    if not hypothesis.is_affected(unit):
        raise ValueError(f"unit {unit} is not affected under {hypothesis.label}")
    g = hypothesis.local_post[unit]
    rng = _rng(seed, 0x4F0)
    vals = np.asarray(model.mixture_llr(unit, g.sample(rng, reps)))
    var = float(vals.var(ddof=1))
    # standard error of the sample variance via the fourth central moment
    centered = vals - vals.mean()
    m4 = float((centered**4).mean())
    se = math.sqrt(max(m4 - var * var, 0.0) / reps)
    return Estimate(var, se)


def _escape_probability(
    draw: Callable[[np.random.Generator, int], np.ndarray],
    rng: np.random.Generator,
    horizon: int,
    reps: int,
    descend: bool,
) -> Estimate:
    """Fraction of random walks that never cross zero within the horizon.

    ``descend=True`` estimates the probability of never going strictly below 0
    (the post-change case); ``descend=False`` of never going strictly above 0.
    The finite horizon biases both estimates upward.
    """
    chunk = 128
    alive = reps
    carry = np.zeros(reps)
    done = 0
    while done < horizon and alive > 0:
        w = min(chunk, horizon - done)
        inc = draw(rng, alive * w).reshape(alive, w)
        path = carry[:alive, None] + np.cumsum(inc, axis=1)
        if descend:
            dead = (path < 0.0).any(axis=1)
        else:
            dead = (path > 0.0).any(axis=1)
        keep = ~dead
        carry = path[keep, -1]
        alive = int(keep.sum())
        done += w
        chunk = min(2 * chunk, 2048)
    p = alive / reps
    return Estimate(p, math.sqrt(p * (1.0 - p) / reps))


def _unit_increment_sampler(
    model: ChangePointModel, unit: Unit, law: LocalDistribution
) -> Callable[[np.random.Generator, int], np.ndarray]:
    def draw(rng: np.random.Generator, n: int) -> np.ndarray:
        return np.asarray(model.mixture_llr(unit, law.sample(rng, n)), dtype=float)

    return draw


def ladder_prob_no_descend(
    model: ChangePointModel,
    hypothesis: PostChangeHypothesis,
    unit: Unit,
    horizon: int = _MIN_LADDER_HORIZON,
    reps: int = 2 * _MIN_LADDER_REPS,
    seed: int = 0,
) -> Estimate:
    """Probability that the post-change random walk of an affected unit never
    drops below zero, estimated over a finite horizon (which biases it upward).
    """
    if horizon < _MIN_LADDER_HORIZON:
        raise ValueError(f"horizon must be at least {_MIN_LADDER_HORIZON}, got {horizon}")
    if reps < _MIN_LADDER_REPS:
        raise ValueError(f"reps must be at least {_MIN_LADDER_REPS}, got {reps}")
    if not hypothesis.is_affected(unit):
        raise ValueError(f"unit {unit} is not affected under {hypothesis.label}")
    draw = _unit_increment_sampler(model, unit, hypothesis.local_post[unit])
    return _escape_probability(draw, _rng(seed, 0x5F0), horizon, reps, descend=True)


def ladder_prob_no_ascend(
    model: ChangePointModel,
    unit: Unit,
    horizon: int = _MIN_LADDER_HORIZON,
    reps: int = 2 * _MIN_LADDER_REPS,
    seed: int = 0,
) -> Estimate:
    """Probability that the pre-change random walk of a unit never exceeds zero,
    estimated over a finite horizon (which biases it upward).
    """
    if horizon < _MIN_LADDER_HORIZON:
        raise ValueError(f"horizon must be at least {_MIN_LADDER_HORIZON}, got {horizon}")
    if reps < _MIN_LADDER_REPS:
        raise ValueError(f"reps must be at least {_MIN_LADDER_REPS}, got {reps}")
    draw = _unit_increment_sampler(model, unit, model.pre_local[unit])
    return _escape_probability(draw, _rng(seed, 0x6F0), horizon, reps, descend=False)


def _law_key(dist: LocalDistribution):
    if isinstance(dist, GaussianLocal):
        return ("gauss", dist.mean.tobytes(), dist.cov.tobytes())
    return ("obj", id(dist))


def _stats_key(model: ChangePointModel, unit: Unit, post: LocalDistribution | None):
    return (
        _law_key(model.pre_local[unit]),
        tuple(_law_key(c) for c in model.post_family[unit]),
        None if post is None else _law_key(post),
    )


def compute_unit_statistics(
    model: ChangePointModel,
    hypothesis: PostChangeHypothesis,
    reps: int = 100_000,
    ladder_reps: int = 2 * _MIN_LADDER_REPS,
    horizon: int = _MIN_LADDER_HORIZON,
    seed: int = 0,
) -> dict[Unit, UnitStatistics]:
    """Per-unit statistics for the delay bounds, computed once per equivalence
    class of units (same pre-change law, same family, same post-change law)
    and shared across the class.

    Ladder probabilities are refined by doubling the horizon until two
    successive estimates agree within twice their pooled standard error.
    """
    cache: dict = {}
    out: dict[Unit, UnitStatistics] = {}
    for E in model.units:
        is_affected = hypothesis.is_affected(E)
        post = hypothesis.local_post[E] if is_affected else None
        key = _stats_key(model, E, post)
        if key not in cache:
            idx = len(cache)
            stats = dict(
                info_number=info_number(
                    model, hypothesis, E,
                    method="closed_form" if _gaussian_pair(model, hypothesis, E) else "monte_carlo",
                    reps=reps, seed=_salted(seed, idx, 1),
                ) if is_affected else Estimate(0.0, 0.0, note="not affected"),
                drift_pre=drift_pre(model, E, reps=reps, seed=_salted(seed, idx, 2)),
                q_no_ascend=_stabilized_ladder(
                    model, None, E, horizon, ladder_reps, _salted(seed, idx, 3)
                ),
            )
            if is_affected:
                stats["drift_post"] = drift_post(model, hypothesis, E, reps=reps, seed=_salted(seed, idx, 4))
                stats["second_moment"] = llr_second_moment(
                    model, hypothesis, E, reps=reps, seed=_salted(seed, idx, 5)
                )
                stats["q_no_descend"] = _stabilized_ladder(
                    model, hypothesis, E, horizon, ladder_reps, _salted(seed, idx, 6)
                )
            cache[key] = stats
        out[E] = UnitStatistics(unit=E, **cache[key])
    return out


def _gaussian_pair(model: ChangePointModel, hypothesis: PostChangeHypothesis, unit: Unit) -> bool:
    return isinstance(model.pre_local[unit], GaussianLocal) and isinstance(
        hypothesis.local_post[unit], GaussianLocal
    )


def _salted(seed: int, *salt: int) -> int:
    return int(np.random.SeedSequence((seed, *salt)).generate_state(1)[0])


def _stabilized_ladder(
    model: ChangePointModel,
    hypothesis: PostChangeHypothesis | None,
    unit: Unit,
    horizon: int,
    reps: int,
    seed: int,
    max_doublings: int = 3,
) -> Estimate:
    """Ladder probability with the horizon doubled until the estimate settles.

    Two successive horizons must agree within twice the pooled standard error;
    the longer-horizon estimate is returned. A note records failure to settle.
    """
    def run(h: int, s: int) -> Estimate:
        if hypothesis is None:
            return ladder_prob_no_ascend(model, unit, horizon=h, reps=reps, seed=s)
        return ladder_prob_no_descend(model, hypothesis, unit, horizon=h, reps=reps, seed=s)

    prev = run(horizon, _salted(seed, 0))
    h = horizon
    for i in range(1, max_doublings + 1):
        h *= 2
        cur = run(h, _salted(seed, i))
        tol = 2.0 * math.hypot(prev.stderr, cur.stderr)
        if abs(cur.value - prev.value) <= tol:
            return cur
        prev = cur
    return Estimate(prev.value, prev.stderr, note=f"horizon doubling did not settle by {h}")


def _max_info(
    model: ChangePointModel,
    hypothesis: PostChangeHypothesis,
    reps: int = 100_000,
    seed: int = 0,
) -> tuple[float, bool]:
    """Largest information number over affected subsets, and whether the
    maximum had to be restricted to the sampled units.

    The hypothesis may carry the unrestricted maximum in closed form. Without
    it, the maximum over the sampled affected units is exact when the model
    samples every size-m subset, and restricted otherwise.
    """
    if hypothesis.info_number_max is not None:
        return float(hypothesis.info_number_max), False
    affected = affected_units(model, hypothesis)
    if not affected:
        raise ValueError("the hypothesis affects no sampled unit; no information to detect")
    vals = []
    for E in sorted(affected):
        method = "closed_form" if _gaussian_pair(model, hypothesis, E) else "monte_carlo"
        vals.append(info_number(model, hypothesis, E, method=method, reps=reps, seed=seed).value)
    restricted = len(model.units) < math.comb(model.K, model.m)
    return max(vals), restricted


def _min_drift(
    model: ChangePointModel,
    hypothesis: PostChangeHypothesis,
    reps: int = 100_000,
    seed: int = 0,
) -> float:
    """Smallest post-change drift of the mixture log likelihood ratio over the
    affected sampled units. Closed form for singleton Gaussian families, Monte
    Carlo otherwise."""
    affected = affected_units(model, hypothesis)
    if not affected:
        raise ValueError("the hypothesis affects no sampled unit; no information to detect")
    vals = []
    seen = set()
    for E in sorted(affected):
        key = _stats_key(model, E, hypothesis.local_post[E])
        if key in seen:
            continue
        seen.add(key)
        if len(model.post_family[E]) == 1 and _gaussian_pair(model, hypothesis, E):
            vals.append(gaussian_kl(hypothesis.local_post[E], model.pre_local[E]))
        else:
            vals.append(drift_post(model, hypothesis, E, reps=max(reps, _MIN_DRIFT_REPS), seed=seed).value)
    return min(vals)


def lower_bound_first_order(
    gamma: float,
    model: ChangePointModel,
    hypothesis: PostChangeHypothesis,
    reps: int = 100_000,
    seed: int = 0,
) -> float:
    """First-order lower bound on the worst-case expected detection delay of
    any policy with false alarm budget gamma: log(gamma) over the largest
    information number of an affected subset. Vanishing-correction factors of
    order (1 + o(1)) are dropped."""
    if not gamma > 1.0:
        raise ValueError(f"gamma must exceed 1, got {gamma}")
    top, _ = _max_info(model, hypothesis, reps=reps, seed=seed)
    if top <= 0.0:
        raise ValueError("lower bound undefined: no affected subset carries information")
    return math.log(gamma) / top


def upper_bound_first_order(
    A: float,
    model: ChangePointModel,
    hypothesis: PostChangeHypothesis,
    reps: int = 100_000,
    seed: int = 0,
) -> float:
    """First-order upper bound on the worst-case expected detection delay of
    the round-robin policy at threshold A: the largest A / J over affected
    sampled units, dropping o(A) terms."""
    if not A > 0.0:
        raise ValueError(f"threshold must be positive, got {A}")
    j = _min_drift(model, hypothesis, reps=reps, seed=seed)
    if j <= 0.0:
        raise ValueError(f"upper bound degenerate: smallest post-change drift is {j:.4g}")
    return A / j


def are_upper_bound(
    model: ChangePointModel,
    hypothesis: PostChangeHypothesis,
    reps: int = 100_000,
    seed: int = 0,
) -> float:
    """Upper bound on the asymptotic relative efficiency: largest information
    number over affected subsets divided by smallest post-change drift over
    affected sampled units. At least 1 up to Monte Carlo error."""
    top, _ = _max_info(model, hypothesis, reps=reps, seed=seed)
    j = _min_drift(model, hypothesis, reps=reps, seed=seed)
    if j <= 0.0 or top <= 0.0:
        raise ValueError("efficiency ratio undefined: nonpositive drift or information")
    return top / j


class OptimalityClass(enum.Enum):
    ASYMPTOTICALLY_OPTIMAL = "asymptotically_optimal"
    BOUNDED_ARE = "bounded_are"
    INDETERMINATE = "indeterminate"


def classify_optimality(
    model: ChangePointModel,
    hypothesis: PostChangeHypothesis,
    rel_tol: float = 1e-9,
) -> OptimalityClass:
    """Best optimality guarantee for the policy under the hypothesis.

    ASYMPTOTICALLY_OPTIMAL requires a singleton family at every affected
    sampled unit together with a verified match between the largest affected
    information number and the smallest one over affected sampled units; the
    match is only certified on closed forms, never on Monte Carlo estimates.
    BOUNDED_ARE is returned when every affected family is a singleton (the
    equality being unverifiable), or when the mixture increment mean is known
    to be invariant across each affected family. Everything else, in
    particular a hypothesis that affects no sampled unit, is INDETERMINATE.
    """
    affected = affected_units(model, hypothesis)
    if not affected:
        return OptimalityClass.INDETERMINATE
    singleton = all(len(model.post_family[E]) == 1 for E in affected)
    if singleton:
        if all(_gaussian_pair(model, hypothesis, E) for E in affected):
            infos = [gaussian_kl(hypothesis.local_post[E], model.pre_local[E]) for E in sorted(affected)]
            full = len(model.units) == math.comb(model.K, model.m)
            if hypothesis.info_number_max is not None:
                top = hypothesis.info_number_max
            elif full:
                top = max(infos)
            else:
                top = None
            if top is not None and top <= min(infos) * (1.0 + rel_tol):
                return OptimalityClass.ASYMPTOTICALLY_OPTIMAL
        return OptimalityClass.BOUNDED_ARE
    if hypothesis.mixture_mean_invariant:
        return OptimalityClass.BOUNDED_ARE
    return OptimalityClass.INDETERMINATE


@dataclass(frozen=True)
class NonAsymptoticBound:
    """Explicit upper bound on the worst-case expected detection delay,
    valid for every large enough threshold.

    ``total`` adds the first-order term, the expected passage time through
    unaffected units, the restart and overshoot cost at the affected units,
    and a user-supplied additive constant that the analysis leaves unspecified.
    ``coarse_total`` replaces the passage term with a simpler bound built from
    the worst escape probabilities alone; evaluated on the same estimates it
    always dominates ``total``.
    """

    threshold: float
    first_order: float
    unaffected_passage: float
    affected_overshoot: float
    additive_constant: float
    coarse_unaffected_passage: float

    @property
    def total(self) -> float:
        return self.first_order + self.unaffected_passage + self.affected_overshoot + self.additive_constant

    @property
    def coarse_total(self) -> float:
        return (
            self.first_order
            + self.coarse_unaffected_passage
            + self.affected_overshoot
            + self.additive_constant
        )


def nonasymptotic_upper_bound(
    A: float,
    model: ChangePointModel,
    hypothesis: PostChangeHypothesis,
    unit_stats: Mapping[Unit, UnitStatistics],
    additive_constant: float = 0.0,
) -> NonAsymptoticBound:
    """Evaluate the explicit delay bound from precomputed unit statistics.

    Raises DegenerateBoundError when an unaffected unit has an estimated zero
    escape probability or every affected unit has an estimated zero
    no-descend probability, since the bound is then infinite.
    """
    if not A > 0.0:
        raise ValueError(f"threshold must be positive, got {A}")
    affected = sorted(affected_units(model, hypothesis))
    if not affected:
        raise ValueError("the hypothesis affects no sampled unit; no finite delay bound exists")
    missing = [E for E in model.units if E not in unit_stats]
    if missing:
        raise ValueError(f"unit statistics missing for {missing[:3]}")
    for E in affected:
        st = unit_stats[E]
        if st.drift_post is None or st.second_moment is None or st.q_no_descend is None:
            raise ValueError(f"unit statistics for affected unit {E} lack post-change entries")

    j = {E: unit_stats[E].drift_post.value for E in affected}
    if min(j.values()) <= 0.0:
        raise DegenerateBoundError("estimated post-change drift is nonpositive for some affected unit")
    first_order = max(A / j[E] for E in affected)

    overshoot = 0.0
    for E in affected:
        st = unit_stats[E]
        q = st.q_no_descend.value
        if q <= 0.0:
            raise DegenerateBoundError(f"no-descend probability of {E} estimated as zero")
        overshoot = max(overshoot, (1.0 / q) * (1.0 + st.second_moment.value / j[E] ** 2))

    unaffected = [E for E in model.units if E not in set(affected)]
    if unaffected:
        stall = 1.0
        for E in affected:
            stall *= 1.0 - unit_stats[E].q_no_descend.value
        if stall >= 1.0:
            raise DegenerateBoundError("every affected unit has no-descend probability zero")
        inv_sum = 0.0
        for E in unaffected:
            q = unit_stats[E].q_no_ascend.value
            if q <= 0.0:
                raise DegenerateBoundError(f"no-ascend probability of {E} estimated as zero")
            inv_sum += 1.0 / q
        passage = inv_sum / (1.0 - stall)
        p_minus = min(unit_stats[E].q_no_descend.value for E in affected)
        p_plus = min(unit_stats[E].q_no_ascend.value for E in model.units)
        if p_plus <= 0.0:
            raise DegenerateBoundError("smallest no-ascend probability estimated as zero")
        coarse = (len(unaffected) / p_plus) / (1.0 - (1.0 - p_minus) ** len(affected))
    else:
        passage = 0.0
        coarse = 0.0

    return NonAsymptoticBound(
        threshold=A,
        first_order=first_order,
        unaffected_passage=passage,
        affected_overshoot=overshoot,
        additive_constant=float(additive_constant),
        coarse_unaffected_passage=coarse,
    )


@dataclass(frozen=True)
class BoundsReport:
    """All bound-related quantities for one model and hypothesis."""

    gamma: float
    threshold: float
    seed: int
    lower_bound: float
    lower_bound_restricted: bool
    upper_bound_first_order: float
    are_bound: float
    optimality: OptimalityClass
    unit_stats: Mapping[Unit, UnitStatistics]
    nonasymptotic: NonAsymptoticBound | None = None
    degenerate: str | None = None

    def to_flat_dict(self) -> dict[str, object]:
        out: dict[str, object] = {
            "gamma": self.gamma,
            "threshold": self.threshold,
            "seed": self.seed,
            "lower_bound": self.lower_bound,
            "lower_bound_restricted": self.lower_bound_restricted,
            "upper_bound_first_order": self.upper_bound_first_order,
            "are_bound": self.are_bound,
            "optimality": self.optimality.value,
        }
        if self.nonasymptotic is not None:
            b = self.nonasymptotic
            out["upper_bound_total"] = b.total
            out["upper_bound_coarse"] = b.coarse_total
            out["upper_bound_unaffected_passage"] = b.unaffected_passage
            out["upper_bound_affected_overshoot"] = b.affected_overshoot
            out["upper_bound_additive_constant"] = b.additive_constant
        if self.degenerate is not None:
            out["upper_bound_total"] = math.inf
            out["upper_bound_coarse"] = math.inf
            out["degenerate"] = self.degenerate
        for E in sorted(self.unit_stats):
            st = self.unit_stats[E]
            tag = "unit." + "-".join(str(k) for k in E.sources)
            out[f"{tag}.info_number"] = st.info_number.value
            out[f"{tag}.info_number.se"] = st.info_number.stderr
            out[f"{tag}.drift_pre"] = st.drift_pre.value
            out[f"{tag}.drift_pre.se"] = st.drift_pre.stderr
            out[f"{tag}.q_no_ascend"] = st.q_no_ascend.value
            out[f"{tag}.q_no_ascend.se"] = st.q_no_ascend.stderr
            if st.drift_post is not None:
                out[f"{tag}.drift_post"] = st.drift_post.value
                out[f"{tag}.drift_post.se"] = st.drift_post.stderr
                out[f"{tag}.second_moment"] = st.second_moment.value
                out[f"{tag}.second_moment.se"] = st.second_moment.stderr
                out[f"{tag}.q_no_descend"] = st.q_no_descend.value
                out[f"{tag}.q_no_descend.se"] = st.q_no_descend.stderr
        return out


def bounds_report(
    model: ChangePointModel,
    hypothesis: PostChangeHypothesis,
    gamma: float,
    reps: int = 100_000,
    ladder_reps: int = 2 * _MIN_LADDER_REPS,
    horizon: int = _MIN_LADDER_HORIZON,
    seed: int = 0,
    additive_constant: float = 0.0,
) -> BoundsReport:
    """Compute every bound for the model and hypothesis at threshold log(gamma)."""
    if not gamma > 1.0:
        raise ValueError(f"gamma must exceed 1, got {gamma}")
    A = math.log(gamma)
    stats = compute_unit_statistics(
        model, hypothesis, reps=reps, ladder_reps=ladder_reps, horizon=horizon, seed=seed
    )
    _, restricted = _max_info(model, hypothesis, reps=reps, seed=seed)
    lower = lower_bound_first_order(gamma, model, hypothesis, reps=reps, seed=seed)
    upper1 = upper_bound_first_order(A, model, hypothesis, reps=reps, seed=seed)
    are = are_upper_bound(model, hypothesis, reps=reps, seed=seed)
    optimality = classify_optimality(model, hypothesis)
    nonasym = None
    degenerate = None
    try:
        nonasym = nonasymptotic_upper_bound(A, model, hypothesis, stats, additive_constant)
    except DegenerateBoundError as exc:
        degenerate = str(exc)
    return BoundsReport(
        gamma=gamma,
        threshold=A,
        seed=seed,
        lower_bound=lower,
        lower_bound_restricted=restricted,
        upper_bound_first_order=upper1,
        are_bound=are,
        optimality=optimality,
        unit_stats=stats,
        nonasymptotic=nonasym,
        degenerate=degenerate,
    )
