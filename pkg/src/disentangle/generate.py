"""Seeded random instances for property checks and demos."""

from __future__ import annotations

import numpy as np

from .core import MeasureSpace, ProblemInstance, WeightFamily

Q_CHOICES = (0.3, 0.5, 0.7, 0.9)


def random_family(rng: np.random.Generator, n_atoms: int, n_keys: int,
                  support: np.ndarray | None = None, p_zero: float = 0.4,
                  saturating: bool = True) -> WeightFamily:
    """Non-negative weights with random zeros; patched to cover ``support`` if asked."""
    values = rng.uniform(0.1, 3.0, size=(n_keys, n_atoms))
    values[rng.random((n_keys, n_atoms)) < p_zero] = 0.0
    if saturating:
        need = np.ones(n_atoms, dtype=bool) if support is None else support
        for a in np.flatnonzero(need & ~np.any(values > 0, axis=0)):
            values[rng.integers(n_keys), a] = rng.uniform(0.1, 3.0)
    return WeightFamily.from_rows(values)


def random_instance(rng: np.random.Generator, *, max_atoms: int = 4, max_keys: int = 3,
                    d_choices=(2, 3), q_choices=Q_CHOICES, probability: bool = False,
                    p_null: float = 0.0) -> ProblemInstance:
    """A saturating instance; ``p_null`` is the chance each atom gets mass zero."""
    n = int(rng.integers(1, max_atoms + 1))
    mass = rng.uniform(0.2, 2.0, size=n)
    mass[rng.random(n) < p_null] = 0.0
    if not np.any(mass > 0):
        mass[0] = 1.0
    if probability:
        mass = mass / mass.sum()
    space = MeasureSpace.from_masses(mass)
    d = int(rng.choice(d_choices))
    families = tuple(
        random_family(rng, n, int(rng.integers(1, max_keys + 1)), space.support)
        for _ in range(d))
    theta = rng.dirichlet(np.full(d, 2.0))
    theta = np.clip(theta, 0.05, None)
    theta = theta / theta.sum()
    q = float(rng.choice(q_choices))
    return ProblemInstance(space, families, theta, q)


def random_instances(count: int, seed: int = 0, **kwargs) -> list[ProblemInstance]:
    rng = np.random.default_rng(seed)
    return [random_instance(rng, **kwargs) for _ in range(count)]
