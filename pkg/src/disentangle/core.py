"""Discrete measure spaces, weight families and problem instances.

Everything here is finite: a measure space is a list of atoms with
non-negative masses, a weight family is a finite list of non-negative
atom-vectors, and integrals are weighted sums.  Atoms of mass zero are kept
in the data but skipped by every integral and every "almost everywhere"
check.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

THETA_ADMISSION_TOL = 1e-12


class InstanceError(ValueError):
    """Malformed or inconsistent input.

    ``code`` is a short machine-readable tag used by the command line front
    end (``E_DIMENSION``, ``E_SATURATION`` ...).
    """

    def __init__(self, message: str, code: str = "E_INSTANCE"):
        super().__init__(message)
        self.code = code


class SaturationError(InstanceError):
    def __init__(self, message: str, slot: int):
        super().__init__(message, code="E_SATURATION")
        self.slot = slot


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


def safe_log(x) -> np.ndarray:
    """Natural log with ``log(0) = -inf`` and no warnings."""
    with np.errstate(divide="ignore"):
        return np.log(np.asarray(x, dtype=float))


def logsumexp(a: np.ndarray, axis: int = -1) -> np.ndarray:
    """``log(sum(exp(a)))`` along ``axis``; all ``-inf`` slices give ``-inf``."""
    a = np.asarray(a, dtype=float)
    m = np.max(a, axis=axis, keepdims=True)
    finite = np.isfinite(m)
    shift = np.where(finite, m, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(a - shift), axis=axis, keepdims=True)) + shift
    out = np.where(finite, out, m)
    return np.squeeze(out, axis=axis)


@dataclass(frozen=True)
class MeasureSpace:
    atoms: tuple[str, ...]
    mass: np.ndarray

    def __post_init__(self):
        atoms = tuple(str(a) for a in self.atoms)
        mass = _frozen(self.mass)
        if mass.ndim != 1 or mass.size != len(atoms):
            raise InstanceError(
                f"{len(atoms)} atoms but {mass.size} masses", "E_DIMENSION")
        if len(set(atoms)) != len(atoms):
            raise InstanceError("atom identifiers must be unique", "E_SCHEMA")
        if not np.all(np.isfinite(mass)) or np.any(mass < 0):
            raise InstanceError("masses must be finite and non-negative", "E_SCHEMA")
        if not mass.sum() > 0:
            raise InstanceError("total mass must be positive", "E_SCHEMA")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "mass", mass)

    @classmethod
    def from_masses(cls, mass, prefix: str = "w") -> "MeasureSpace":
        mass = list(mass)
        return cls(tuple(f"{prefix}{i}" for i in range(len(mass))), mass)

    @property
    def n_atoms(self) -> int:
        return len(self.atoms)

    @property
    def support(self) -> np.ndarray:
        """Boolean mask of atoms with positive mass."""
        return self.mass > 0

    @property
    def total_mass(self) -> float:
        return float(self.mass.sum())

    def is_probability(self, tol: float = 1e-12) -> bool:
        return abs(self.total_mass - 1.0) <= tol


@dataclass(frozen=True)
class WeightFamily:
    """Finite family ``{u_k}`` of non-negative atom-vectors, one row per key."""

    keys: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        keys = tuple(str(k) for k in self.keys)
        values = _frozen(self.values)
        if values.ndim == 1:
            values = _frozen(values[None, :])
        if len(keys) == 0:
            raise InstanceError("a weight family needs at least one key", "E_SCHEMA")
        if values.ndim != 2 or values.shape[0] != len(keys):
            raise InstanceError(
                f"{len(keys)} keys but values of shape {values.shape}", "E_DIMENSION")
        if len(set(keys)) != len(keys):
            raise InstanceError("weight keys must be unique within a family", "E_SCHEMA")
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise InstanceError("weights must be finite and non-negative", "E_SCHEMA")
        object.__setattr__(self, "keys", keys)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_rows(cls, rows, prefix: str = "k") -> "WeightFamily":
        rows = [list(r) for r in rows]
        return cls(tuple(f"{prefix}{i}" for i in range(len(rows))), rows)

    @property
    def n_keys(self) -> int:
        return len(self.keys)

    @property
    def n_atoms(self) -> int:
        return self.values.shape[1]


def conjugate_exponent(q: float) -> float:
    """``q/(q-1)`` for ``q`` in (0, 1); ``-inf`` at ``q = 1``."""
    if not 0 < q <= 1:
        raise InstanceError(f"q must lie in (0, 1], got {q}", "E_Q_RANGE")
    if q == 1:
        return -math.inf
    return q / (q - 1)


def normalize_theta(theta: Sequence[float]) -> np.ndarray:
    th = np.asarray(theta, dtype=float)
    if th.ndim != 1 or th.size == 0:
        raise InstanceError("theta must be a non-empty list", "E_THETA")
    if not np.all(np.isfinite(th)) or np.any(th <= 0) or np.any(th >= 1):
        raise InstanceError("every theta_j must lie in (0, 1)", "E_THETA")
    if abs(th.sum() - 1.0) > THETA_ADMISSION_TOL:
        raise InstanceError(f"theta sums to {th.sum()!r}, not 1", "E_THETA")
    if math.fsum(th) != 1.0:
        th = th / math.fsum(th)
        # push the last rounding error into the largest weight so the float
        # sum is exactly 1 and renormalising again is the identity
        big = int(np.argmax(th))
        for _ in range(4):
            err = 1.0 - math.fsum(th)
            if err == 0:
                break
            th[big] += err
    return _frozen(th)


@dataclass(frozen=True)
class ProblemInstance:
    """Data of the inequality: space, ``d`` families, weights ``theta``, exponent ``q``.

    Saturation is not enforced here; solvers that need it check it and raise
    :class:`SaturationError` so that non-saturating data can still be
    inspected.
    """

    space: MeasureSpace
    families: tuple[WeightFamily, ...]
    theta: np.ndarray
    q: float

    def __post_init__(self):
        families = tuple(self.families)
        if len(families) < 2:
            raise InstanceError("need at least two weight families", "E_DIMENSION")
        theta = normalize_theta(self.theta)
        if theta.size != len(families):
            raise InstanceError(
                f"{len(families)} families but {theta.size} weights", "E_DIMENSION")
        for j, fam in enumerate(families):
            if fam.n_atoms != self.space.n_atoms:
                raise InstanceError(
                    f"family {j} has {fam.n_atoms} atom values, space has "
                    f"{self.space.n_atoms} atoms", "E_DIMENSION")
        q = float(self.q)
        conjugate_exponent(q)
        object.__setattr__(self, "families", families)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "q", q)

    @property
    def d(self) -> int:
        return len(self.families)

    @property
    def conjugate(self) -> float:
        return conjugate_exponent(self.q)

    @property
    def exponents(self) -> np.ndarray:
        """Per-slot powers ``theta_j * q`` appearing in the functional."""
        return self.theta * self.q

    def with_q(self, q: float) -> "ProblemInstance":
        return replace(self, q=q)

    def zero_coefficients(self) -> list[np.ndarray]:
        return [np.zeros(f.n_keys) for f in self.families]


def check_coefficients(instance: ProblemInstance, coefficients) -> list[np.ndarray]:
    coefficients = list(coefficients)
    if len(coefficients) != instance.d:
        raise InstanceError(
            f"expected {instance.d} coefficient vectors, got {len(coefficients)}",
            "E_DIMENSION")
    out = []
    for j, (fam, a) in enumerate(zip(instance.families, coefficients)):
        a = np.asarray(a, dtype=float)
        if a.shape != (fam.n_keys,):
            raise InstanceError(
                f"slot {j}: {fam.n_keys} keys but coefficients of shape {a.shape}",
                "E_DIMENSION")
        if np.any(a < 0) or not np.all(np.isfinite(a)):
            raise InstanceError(f"slot {j}: coefficients must be finite and >= 0",
                                "E_SCHEMA")
        out.append(a)
    return out


# --------------------------------------------------------------------------
# elementary evaluations

def apply_operator(family: WeightFamily, alpha) -> np.ndarray:
    """Non-negative combination ``sum_k alpha_k u_k`` as an atom-vector."""
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != (family.n_keys,):
        raise InstanceError(
            f"{family.n_keys} keys but alpha of shape {alpha.shape}", "E_DIMENSION")
    if np.any(alpha < 0):
        raise InstanceError("alpha must be non-negative", "E_SCHEMA")
    return alpha @ family.values


def log_geometric_mean(phi, theta) -> np.ndarray:
    """Atomwise ``log prod_j phi_j**theta_j``; ``-inf`` flags a zero factor."""
    logs = safe_log(np.asarray(phi, dtype=float))
    theta = np.asarray(theta, dtype=float)
    # an explicit zero flag avoids 0 * -inf
    zero = np.any(np.isneginf(logs), axis=0)
    out = np.einsum("j,jw->w", theta, np.where(np.isneginf(logs), 0.0, logs))
    return np.where(zero, -np.inf, out)


def geometric_mean_integral(space: MeasureSpace, phi, theta, q: float) -> float:
    """Left side of the geometric-mean conclusion.

    For ``q < 1`` this is ``sum_w mu(w) * (prod_j phi_j(w)**theta_j)**q'`` with
    ``q' = q/(q-1) < 0``; a vanishing factor on an atom of positive mass makes
    it ``+inf``.  For ``q = 1`` it is the essential infimum of
    ``prod_j phi_j**theta_j``.
    """
    phi = np.asarray(phi, dtype=float)
    if phi.ndim != 2 or phi.shape[1] != space.n_atoms:
        raise InstanceError(f"phi of shape {phi.shape} does not match the space",
                            "E_DIMENSION")
    theta = np.asarray(theta, dtype=float)
    if theta.size != phi.shape[0]:
        raise InstanceError("one weight per phi_j is required", "E_DIMENSION")
    sup = space.support
    lg = log_geometric_mean(phi[:, sup], theta)
    qc = conjugate_exponent(q)
    if q == 1:
        return float(np.exp(lg.min()))
    if np.any(np.isneginf(lg)):
        return math.inf
    return float(np.sum(space.mass[sup] * np.exp(qc * lg)))


def componentwise_integrals(space: MeasureSpace, family: WeightFamily, phi_j) -> np.ndarray:
    """``int u_k phi_j dmu`` for every key ``k`` of ``family``."""
    phi_j = np.asarray(phi_j, dtype=float)
    if phi_j.shape != (space.n_atoms,):
        raise InstanceError(f"phi_j of shape {phi_j.shape} does not match the space",
                            "E_DIMENSION")
    if family.n_atoms != space.n_atoms:
        raise InstanceError("family and space disagree on the atom count", "E_DIMENSION")
    sup = space.support
    return family.values[:, sup] @ (space.mass[sup] * phi_j[sup])


# --------------------------------------------------------------------------
# JSON interchange

def instance_to_dict(instance: ProblemInstance) -> dict:
    sp = instance.space
    return {
        "atoms": [{"id": a, "mu": float(m)} for a, m in zip(sp.atoms, sp.mass)],
        "theta": [float(t) for t in instance.theta],
        "q": float(instance.q),
        "families": [
            [{"key": k, "values": [float(x) for x in row]}
             for k, row in zip(fam.keys, fam.values)]
            for fam in instance.families
        ],
    }


def _number(x, what: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise InstanceError(f"{what} must be a number, got {x!r}", "E_SCHEMA")
    x = float(x)
    if not math.isfinite(x):
        raise InstanceError(f"{what} must be finite", "E_SCHEMA")
    return x


def instance_from_dict(data: dict) -> ProblemInstance:
    try:
        atoms = data["atoms"]
        theta = data["theta"]
        q = data["q"]
        families = data["families"]
    except (KeyError, TypeError) as exc:
        raise InstanceError(f"missing field {exc}", "E_SCHEMA") from None
    if not isinstance(atoms, list) or not isinstance(families, list):
        raise InstanceError("atoms and families must be lists", "E_SCHEMA")
    try:
        ids = [str(a["id"]) for a in atoms]
        mass = [_number(a["mu"], "mu") for a in atoms]
        fams = []
        for j, fam in enumerate(families):
            keys = [str(e["key"]) for e in fam]
            rows = [[_number(x, f"family {j} value") for x in e["values"]] for e in fam]
            if any(len(r) != len(ids) for r in rows):
                raise InstanceError(
                    f"family {j}: every weight needs one value per atom", "E_DIMENSION")
            fams.append(WeightFamily(tuple(keys), np.array(rows, dtype=float).reshape(len(rows), len(ids))))
    except (KeyError, TypeError) as exc:
        raise InstanceError(f"malformed atom or family entry: {exc}", "E_SCHEMA") from None
    if not isinstance(theta, list):
        raise InstanceError("theta must be a list of numbers", "E_SCHEMA")
    theta = [_number(t, "theta") for t in theta]
    return ProblemInstance(MeasureSpace(tuple(ids), mass), tuple(fams), theta,
                           _number(q, "q"))


def dumps_canonical(obj, pretty: bool = False) -> str:
    if pretty:
        return json.dumps(obj, sort_keys=True, indent=2) + "\n"
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"


def load_instance(path) -> ProblemInstance:
    with open(path) as fh:
        return instance_from_dict(json.load(fh))
