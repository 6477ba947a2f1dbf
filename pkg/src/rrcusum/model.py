"""Core types for change detection in K dependent sources under a sampling budget.

At each time only m of the K sources can be observed. A unit is a size-m subset
of sources, and the observed data at each step is the restriction of the full
K-dimensional vector to the chosen unit. Before the change every unit E follows
a known local law F^E. After the change, the local law of an affected unit
belongs to a known finite family, and the detection statistic for E uses the
log likelihood ratio of the uniform mixture over that family against F^E.
"""

from __future__ import annotations

import abc
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np
from scipy.special import logsumexp

__all__ = [
    "LocalDistribution",
    "Unit",
    "MixtureLikelihood",
    "PostChangeHypothesis",
    "ChangePointModel",
    "ValidationReport",
    "UnitValidation",
    "affected_units",
    "validate_model",
]


class LocalDistribution(abc.ABC):
    """Law of a single observation of one unit, a vector in R^dim.

    Implementations must provide a vectorised log density and a batch sampler.
    ``logpdf`` accepts arrays of shape (dim,) or (n, dim) and returns a float
    or an array of shape (n,). ``sample`` returns an array of shape (n, dim).
    """

    dim: int

    @abc.abstractmethod
    def logpdf(self, x: np.ndarray) -> np.ndarray | float:
        raise NotImplementedError

    @abc.abstractmethod
    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True, order=True)
class Unit:
    """A subset of source indices observed together, stored sorted ascending.

    Source indices are 1-based and must be distinct.
    """

    sources: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.sources:
            raise ValueError("a unit must contain at least one source")
        for k in self.sources:
            if not isinstance(k, int) or k < 1:
                raise ValueError(f"source indices are 1-based integers, got {k!r}")
        if any(a >= b for a, b in zip(self.sources, self.sources[1:])):
            raise ValueError(f"unit sources must be strictly increasing, got {self.sources}")

    @property
    def size(self) -> int:
        return len(self.sources)

    def __str__(self) -> str:
        return "{" + ",".join(str(k) for k in self.sources) + "}"


def unit(*sources: int) -> Unit:
    """Convenience constructor, ``unit(9, 10) == Unit((9, 10))``."""
    return Unit(tuple(sorted(sources)))


@dataclass(frozen=True)
class MixtureLikelihood:
    """Uniform mixture over the finite family of candidate post-change laws of a unit."""

    unit: Unit
    components: tuple[LocalDistribution, ...]

    def __post_init__(self) -> None:
        if not self.components:
            raise ValueError(f"empty post-change family for unit {self.unit}")

    @property
    def weight(self) -> float:
        """Common mixture weight, 1 over the number of components."""
        return 1.0 / len(self.components)

    def logpdf(self, x: np.ndarray) -> np.ndarray | float:
        if len(self.components) == 1:
            return self.components[0].logpdf(x)
        stacked = np.stack([np.asarray(c.logpdf(x)) for c in self.components])
        return logsumexp(stacked, axis=0) - math.log(len(self.components))


@dataclass(frozen=True)
class PostChangeHypothesis:
    """One candidate global post-change distribution, seen through the sampled units.

    ``affected_units`` holds the units whose local law changes, and ``local_post``
    gives the true post-change local law of each of those units. ``joint_post``
    optionally carries the full K-dimensional law for callers that want to draw
    complete vectors; the run loops only ever sample local laws.

    ``info_number_max`` may record the largest information number over all
    affected size-m subsets of sources, including subsets that are never
    sampled. Scenario builders fill it in when a closed form is available;
    detection delay lower bounds fall back to the sampled units otherwise.

    ``mixture_mean_invariant`` asserts that for every affected unit the mixture
    log likelihood ratio has the same mean under each member of the family.
    This is the hook used to certify a bounded efficiency ratio when the family
    is not a singleton. Leave it None when unknown.
    """

    label: str
    affected_units: frozenset[Unit]
    local_post: Mapping[Unit, LocalDistribution]
    joint_post: LocalDistribution | None = None
    info_number_max: float | None = None
    mixture_mean_invariant: bool | None = None

    def __post_init__(self) -> None:
        if not self.affected_units:
            raise ValueError("a post-change hypothesis must affect at least one unit")
        missing = [E for E in self.affected_units if E not in self.local_post]
        if missing:
            raise ValueError(f"no post-change local law given for affected units {sorted(missing)}")

    def is_affected(self, unit: Unit) -> bool:
        return unit in self.affected_units


@dataclass(frozen=True)
class ChangePointModel:
    """Problem instance: K sources, sampling budget m, and the sampled units.

    ``units`` is the fixed permutation in which the policy cycles through
    units; it is set at construction and never reordered by the model.
    ``pre_local`` maps each unit to its pre-change law and ``post_family``
    to the finite family of candidate post-change laws.
    """

    K: int
    m: int
    units: tuple[Unit, ...]
    pre_local: Mapping[Unit, LocalDistribution]
    post_family: Mapping[Unit, tuple[LocalDistribution, ...]]
    hypotheses: tuple[PostChangeHypothesis, ...] = ()
    _mixtures: dict = field(init=False, repr=False, compare=False, default_factory=dict)

    def __post_init__(self) -> None:
        if self.K < 1:
            raise ValueError(f"K must be positive, got {self.K}")
        if not 1 <= self.m <= self.K:
            raise ValueError(f"m must lie in [1, K], got m={self.m}, K={self.K}")
        if not self.units:
            raise ValueError("the model must sample at least one unit")
        if len(set(self.units)) != len(self.units):
            raise ValueError("units must be distinct")
        for E in self.units:
            if E.size != self.m:
                raise ValueError(f"unit {E} has size {E.size}, expected m={self.m}")
            if E.sources[-1] > self.K:
                raise ValueError(f"unit {E} references a source above K={self.K}")
            if E not in self.pre_local:
                raise ValueError(f"missing pre-change law for unit {E}")
            if self.pre_local[E].dim != self.m:
                raise ValueError(f"pre-change law of {E} has dim {self.pre_local[E].dim}, expected {self.m}")
            family = self.post_family.get(E)
            if not family:
                raise ValueError(f"missing or empty post-change family for unit {E}")
            for g in family:
                if g.dim != self.m:
                    raise ValueError(f"post-change law of {E} has dim {g.dim}, expected {self.m}")
            self._mixtures[E] = MixtureLikelihood(E, tuple(family))

    def mixture(self, unit: Unit) -> MixtureLikelihood:
        try:
            return self._mixtures[unit]
        except KeyError:
            raise ValueError(f"unit {unit} is not sampled by this model") from None

    def mixture_llr(self, unit: Unit, x: np.ndarray) -> np.ndarray | float:
        """Log likelihood ratio of the mixture against the pre-change law at x.

        Accepts a single observation of shape (m,) or a batch of shape (n, m).
        """
        mix = self.mixture(unit)
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.m:
            raise ValueError(f"observation has dimension {x.shape[-1]}, expected m={self.m}")
        return mix.logpdf(x) - self.pre_local[unit].logpdf(x)


def mixture_llr(model: ChangePointModel, unit: Unit, x: np.ndarray) -> np.ndarray | float:
    return model.mixture_llr(unit, x)


def affected_units(model: ChangePointModel, hypothesis: PostChangeHypothesis) -> frozenset[Unit]:
    """Sampled units whose local law changes under the hypothesis.

    May be empty (the hypothesis is then invisible to the policy); emptiness
    is reported by validate_model rather than raised here.
    """
    return hypothesis.affected_units & frozenset(model.units)


@dataclass(frozen=True)
class UnitValidation:
    unit: Unit
    family_size: int
    singleton: bool
    pre_drift: float
    pre_drift_stderr: float
    pre_drift_ok: bool
    post_drift: float | None = None
    post_drift_stderr: float | None = None
    post_drift_ok: bool | None = None


@dataclass(frozen=True)
class ValidationReport:
    per_unit: tuple[UnitValidation, ...]
    affected_nonempty: bool | None
    mc_budget: int
    seed: int

    @property
    def ok(self) -> bool:
        for u in self.per_unit:
            if not u.pre_drift_ok:
                return False
            if u.post_drift_ok is False:
                return False
        return self.affected_nonempty is not False

    def lines(self) -> list[str]:
        out = []
        for u in self.per_unit:
            parts = [
                f"unit {u.unit}: family={u.family_size}",
                "singleton" if u.singleton else "mixture",
                f"pre-drift {u.pre_drift:+.4f} (se {u.pre_drift_stderr:.4f}) {'ok' if u.pre_drift_ok else 'FAIL'}",
            ]
            if u.post_drift is not None:
                parts.append(
                    f"post-drift {u.post_drift:+.4f} (se {u.post_drift_stderr:.4f}) "
                    f"{'ok' if u.post_drift_ok else 'FAIL'}"
                )
            out.append("  ".join(parts))
        if self.affected_nonempty is not None:
            out.append(
                "affected sampled units: "
                + ("present" if self.affected_nonempty else "NONE (hypothesis invisible to the policy)")
            )
        out.append(f"overall: {'ok' if self.ok else 'FAIL'}")
        return out


def validate_model(
    model: ChangePointModel,
    hypothesis: PostChangeHypothesis | None = None,
    mc_budget: int = 10_000,
    seed: int = 0,
) -> ValidationReport:
    """Monte Carlo sign checks of the drift assumptions behind the delay bounds.

    For every sampled unit the mixture log likelihood ratio must drift down
    before the change; for every affected unit it must drift up after. Each
    check passes when the estimated mean clears zero by three standard errors,
    so a pass is wrong with probability about 1e-3 per unit.
    """
    if mc_budget < 1_000:
        raise ValueError(f"mc_budget must be at least 1000, got {mc_budget}")
    root = np.random.SeedSequence((seed, 0xD81F))
    affected = affected_units(model, hypothesis) if hypothesis is not None else frozenset()
    rows = []
    for E, child in zip(model.units, root.spawn(len(model.units))):
        rng = np.random.Generator(np.random.PCG64(child))
        family = model.post_family[E]
        x = model.pre_local[E].sample(rng, mc_budget)
        llr = np.asarray(model.mixture_llr(E, x))
        pre_mean = float(-llr.mean())
        pre_se = float(llr.std(ddof=1) / math.sqrt(mc_budget))
        row = dict(
            unit=E,
            family_size=len(family),
            singleton=len(family) == 1,
            pre_drift=pre_mean,
            pre_drift_stderr=pre_se,
            pre_drift_ok=pre_mean > 3.0 * pre_se,
        )
        if hypothesis is not None and E in affected:
            y = hypothesis.local_post[E].sample(rng, mc_budget)
            post = np.asarray(model.mixture_llr(E, y))
            post_mean = float(post.mean())
            post_se = float(post.std(ddof=1) / math.sqrt(mc_budget))
            row.update(
                post_drift=post_mean,
                post_drift_stderr=post_se,
                post_drift_ok=post_mean > 3.0 * post_se,
            )
        rows.append(UnitValidation(**row))
    return ValidationReport(
        per_unit=tuple(rows),
        affected_nonempty=(len(affected) > 0) if hypothesis is not None else None,
        mc_budget=mc_budget,
        seed=seed,
    )
