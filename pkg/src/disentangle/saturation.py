"""Saturation predicates, greedy countable covers, and the two standard lifts.

On a finite space a family saturates iff every atom of positive mass lies in
the support of some member; the greedy cover makes that explicit by picking
members one at a time by uncovered mass.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import (
    InstanceError,
    MeasureSpace,
    ProblemInstance,
    SaturationError,
    WeightFamily,
)

AGGREGATE_KEY = "aggregate"
DUMMY_KEY = "one"


def _covered_atoms(space: MeasureSpace, family: WeightFamily) -> np.ndarray:
    if family.n_atoms != space.n_atoms:
        raise InstanceError("family and space disagree on the atom count", "E_DIMENSION")
    return np.any(family.values > 0, axis=0)


def check_saturation(space: MeasureSpace, family: WeightFamily) -> bool:
    covered = _covered_atoms(space, family)
    return bool(np.all(covered[space.support]))


def check_strong_saturation(space: MeasureSpace, family: WeightFamily) -> str | None:
    """First key whose weight is positive on every atom of positive mass, else None."""
    if family.n_atoms != space.n_atoms:
        raise InstanceError("family and space disagree on the atom count", "E_DIMENSION")
    sup = space.support
    for key, row in zip(family.keys, family.values):
        if np.all(row[sup] > 0):
            return key
    return None


@dataclass(frozen=True)
class CoverResult:
    chosen: tuple[str, ...]
    chosen_index: tuple[int, ...]
    gains: tuple[float, ...]
    covers: bool
    residual_mass: float


def greedy_cover(space: MeasureSpace, family: WeightFamily) -> CoverResult:
    """Greedy countable cover by supports of the family's weights.

    Each step takes the key capturing the most uncovered mass (which meets the
    one-half rule trivially); ties go to the lowest key index.  Stops once no
    key captures positive mass.
    """
    supports = (family.values > 0) & space.support
    if family.n_atoms != space.n_atoms:
        raise InstanceError("family and space disagree on the atom count", "E_DIMENSION")
    mass = space.mass
    covered = np.zeros(space.n_atoms, dtype=bool)
    chosen, gains = [], []
    while True:
        gain = (supports & ~covered) @ mass
        best = gain.max()
        if best <= 0:
            break
        k = int(np.flatnonzero(gain >= best * (1 - 1e-12))[0])
        chosen.append(k)
        gains.append(float(gain[k]))
        covered |= supports[k]
    residual = float(mass[space.support & ~covered].sum())
    return CoverResult(
        chosen=tuple(family.keys[k] for k in chosen),
        chosen_index=tuple(chosen),
        gains=tuple(gains),
        covers=bool(np.all(covered[space.support])),
        residual_mass=residual,
    )


@dataclass(frozen=True)
class UpgradeResult:
    nu: MeasureSpace
    w: np.ndarray
    augmented: tuple[WeightFamily, ...]
    aggregate_keys: tuple[str, ...]
    aggregates: tuple[np.ndarray, ...]


def _fresh_key(keys: Sequence[str], base: str) -> str:
    key, n = base, 1
    while key in keys:
        key = f"{base}_{n}"
        n += 1
    return key


def upgrade_to_probability(space: MeasureSpace, families: Sequence[WeightFamily]) -> UpgradeResult:
    """Probability measure ``nu = w mu`` and strongly saturating families ``V_j``.

    ``w = 1/(M mu)`` on the support (``M`` atoms of positive mass), so ``nu``
    is uniform there.  For each slot the greedy cover order gives
    ``u_j = sum_n 2**-n u_{j,n}`` which is positive on the support, and
    ``V_j = {u_{j,k}/w} + {u_j/w}``.  Atoms of mass zero keep ``w = 1``.
    """
    for j, fam in enumerate(families):
        if not check_saturation(space, fam):
            raise SaturationError(f"family {j} does not saturate the space", slot=j)
    sup = space.support
    n_sup = int(sup.sum())
    w = np.ones(space.n_atoms)
    w[sup] = 1.0 / (n_sup * space.mass[sup])
    nu = MeasureSpace(space.atoms, np.where(sup, w * space.mass, 0.0))
    augmented, agg_keys, aggregates = [], [], []
    for fam in families:
        cover = greedy_cover(space, fam)
        agg = np.zeros(space.n_atoms)
        for n, k in enumerate(cover.chosen_index, start=1):
            agg += 2.0 ** -n * fam.values[k]
        key = _fresh_key(fam.keys, AGGREGATE_KEY)
        values = np.vstack([fam.values / w, agg / w])
        augmented.append(WeightFamily(fam.keys + (key,), values))
        agg_keys.append(key)
        aggregates.append(agg)
    w.setflags(write=False)
    return UpgradeResult(nu, w, tuple(augmented), tuple(agg_keys), tuple(aggregates))


def upgrade_instance(instance: ProblemInstance) -> tuple[ProblemInstance, UpgradeResult]:
    res = upgrade_to_probability(instance.space, instance.families)
    return ProblemInstance(res.nu, res.augmented, instance.theta, instance.q), res


def dummy_lift(instance: ProblemInstance) -> ProblemInstance:
    """Rewrite an exponent-``q`` instance as a ``(d+1)``-slot instance at ``q = 1``.

    The extra slot carries the constant function 1 with weight ``1 - q``; the
    original weights become ``theta_j * q``.
    """
    q = instance.q
    if q >= 1:
        raise InstanceError("dummy lift needs q < 1; nothing to lift at q = 1", "E_Q_RANGE")
    theta = np.append(instance.theta * q, 1.0 - q)
    one = WeightFamily((DUMMY_KEY,), np.ones((1, instance.space.n_atoms)))
    return ProblemInstance(instance.space, instance.families + (one,), theta, 1.0)


def _default_combine(stack: np.ndarray) -> np.ndarray:
    return np.prod(stack, axis=0)


def composite_support_check(
    space: MeasureSpace,
    families: Sequence[WeightFamily],
    selector: Sequence[Sequence[int]] | None = None,
    combine: Callable[[np.ndarray], np.ndarray] | None = None,
) -> bool:
    """Does ``{v(u_{1,k_1}, ..., u_{d,k_d})}`` over all key combinations saturate?

    ``selector`` optionally restricts each slot to a subset of key indices and
    ``combine`` is the map ``v`` applied atomwise to the stacked ``(d, atoms)``
    values; it defaults to the plain product, whose support is the same as
    that of any weighted product of powers.
    """
    combine = combine or _default_combine
    if selector is None:
        selector = [range(f.n_keys) for f in families]
    covered = np.zeros(space.n_atoms, dtype=bool)
    for combo in itertools.product(*selector):
        stack = np.array([fam.values[k] for fam, k in zip(families, combo)])
        covered |= np.asarray(combine(stack)) != 0
    return bool(np.all(covered[space.support]))
