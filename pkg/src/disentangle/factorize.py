"""Factorisations built from maximisers, their verification, and q -> 1 sweeps."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    InstanceError,
    ProblemInstance,
    componentwise_integrals,
    geometric_mean_integral,
)
from .optimize import Extremizer, SolveConfig, maximize
from .saturation import UpgradeResult, upgrade_instance

DEFAULT_TOL = 1e-8


class PositivityError(InstanceError):
    def __init__(self, message: str, slot: int, atom: str):
        super().__init__(message, code="E_POSITIVITY")
        self.slot = slot
        self.atom = atom


@dataclass(frozen=True)
class Factorisation:
    phi: tuple[np.ndarray, ...]
    constant: float
    q: float
    log_phi: tuple[np.ndarray, ...] | None = None

    def scaled(self, factor: float, constant: float | None = None, q: float | None = None):
        return Factorisation(
            phi=tuple(p * factor for p in self.phi),
            constant=self.constant if constant is None else constant,
            q=self.q if q is None else q,
            log_phi=None if self.log_phi is None
            else tuple(lp + math.log(factor) for lp in self.log_phi),
        )


@dataclass(frozen=True)
class VerificationReport:
    geometric_bound: float
    componentwise: tuple[np.ndarray, ...]
    constant: float
    passed: bool
    tolerance: float
    q: float
    geometric_ok: bool
    failures: tuple[tuple[int, str], ...] = ()

    @property
    def worst_componentwise_ratio(self) -> float:
        top = max(float(c.max()) for c in self.componentwise)
        return top / self.constant if self.constant > 0 else math.inf


def _check_positive(ext: Extremizer, instance: ProblemInstance) -> None:
    sup = instance.space.support
    for j, lt in enumerate(ext.log_transformed):
        bad = np.flatnonzero(sup & np.isneginf(lt))
        if bad.size:
            atom = instance.space.atoms[bad[0]]
            raise PositivityError(
                f"T_{j} g_{j} vanishes at atom {atom!r} of positive mass; the point "
                f"is not a maximiser or family {j} does not saturate", slot=j, atom=atom)


def build_factorisation(ext: Extremizer, instance: ProblemInstance) -> Factorisation:
    """``phi_i = prod_j (T_j g_j)**(theta_j q) / T_i g_i``, evaluated in logs.

    Requires ``q < 1`` and ``T_j g_j > 0`` on every atom of positive mass.
    On atoms of mass zero where the formula breaks down ``phi`` is set to 0.
    """
    if instance.q >= 1:
        raise InstanceError("the factorisation formula needs q < 1", "E_Q_RANGE")
    _check_positive(ext, instance)
    s = instance.exponents
    ell = np.array(ext.log_transformed)
    with np.errstate(invalid="ignore"):
        L = np.einsum("j,jw->w", s, np.where(np.isneginf(ell), 0.0, ell))
        L = np.where(np.any(np.isneginf(ell), axis=0), -np.inf, L)
        log_phi = L[None, :] - ell
    log_phi = np.where(np.isfinite(log_phi), log_phi, -np.inf)
    phi = np.exp(log_phi)
    return Factorisation(tuple(phi), float(ext.value), instance.q, tuple(log_phi))


def verify_factorisation(instance: ProblemInstance, fac: Factorisation,
                         tol: float = DEFAULT_TOL) -> VerificationReport:
    """Check both conclusions against ``fac.constant`` with relative slack ``tol``.

    For ``q < 1``: ``int (prod phi_j**theta_j)**q' <= A`` and
    ``int u_{j,k} phi_j <= A``.  For ``q = 1`` the first condition becomes
    ``essinf prod phi_j**theta_j >= 1``.
    """
    A = float(fac.constant)
    phi = np.array(fac.phi, dtype=float)
    if phi.shape != (instance.d, instance.space.n_atoms):
        raise InstanceError(f"phi of shape {phi.shape} does not match the instance",
                            "E_DIMENSION")
    sup = instance.space.support
    if not np.all(np.isfinite(phi[:, sup])) or np.any(phi[:, sup] < 0):
        raise InstanceError("phi must be finite and non-negative on the support",
                            "E_SCHEMA")
    gb = geometric_mean_integral(instance.space, phi, instance.theta, instance.q)
    if instance.q == 1:
        geometric_ok = gb >= 1.0 - tol
    else:
        geometric_ok = gb <= A * (1.0 + tol)
    comp, failures = [], []
    for j, fam in enumerate(instance.families):
        c = componentwise_integrals(instance.space, fam, phi[j])
        comp.append(c)
        for k in np.flatnonzero(c > A * (1.0 + tol)):
            failures.append((j, fam.keys[k]))
    return VerificationReport(
        geometric_bound=float(gb),
        componentwise=tuple(comp),
        constant=A,
        passed=bool(geometric_ok and not failures),
        tolerance=tol,
        q=instance.q,
        geometric_ok=bool(geometric_ok),
        failures=tuple(failures),
    )


def identity_check(ext: Extremizer, instance: ProblemInstance) -> float:
    """Max relative gap between ``(prod phi_i**theta_i)**q'`` and ``prod (T_j g_j)**(theta_j q)``.

    The left side is computed from the built ``phi`` and the right side
    straight from ``T_j g_j``; they agree at any strictly positive point.
    """
    fac = build_factorisation(ext, instance)
    sup = instance.space.support
    theta, s, qc = instance.theta, instance.exponents, instance.conjugate
    phi = np.array(fac.phi)[:, sup]
    T = np.array(ext.transformed)[:, sup]
    with np.errstate(over="ignore", under="ignore", divide="ignore"):
        lhs = np.prod(phi ** theta[:, None], axis=0) ** qc
        rhs = np.prod(T ** s[:, None], axis=0)
    ok = np.isfinite(lhs) & np.isfinite(rhs) & (lhs > 0) & (rhs > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.abs(lhs / rhs - 1.0)
    if not np.all(ok):
        # doubles overflow here; compare the logs instead
        llhs = qc * (theta @ np.array(fac.log_phi)[:, sup])
        lrhs = s @ np.array(ext.log_transformed)[:, sup]
        rel = np.where(ok, rel, np.abs(np.expm1(llhs - lrhs)))
    return float(rel.max()) if rel.size else 0.0


def transfer_to_exponent(fac: Factorisation, q_to: float) -> Factorisation:
    """Rescale a factorisation at ``fac.q`` into a candidate at a smaller ``q_to``.

    With ``A`` the constant at ``q = fac.q``, ``phi * A**((q_to - q)/q)``
    satisfies both conclusions at ``q_to`` with constant ``A**(q_to/q)``
    whenever ``mu`` is a probability measure (Jensen's inequality), and that
    constant dominates the least one at ``q_to``.
    """
    q_from = fac.q
    if not 0 < q_to <= q_from < 1:
        raise InstanceError("transfer needs 0 < q_to <= q_from < 1", "E_Q_RANGE")
    A = fac.constant
    return fac.scaled(A ** ((q_to - q_from) / q_from), constant=A ** (q_to / q_from), q=q_to)


# --------------------------------------------------------------------------
# sweeps towards q = 1

def default_schedule(m_first: int = 1, m_last: int = 12) -> list[float]:
    return [1.0 - 2.0 ** -m for m in range(m_first, m_last + 1)]


@dataclass(frozen=True)
class SweepPoint:
    q: float
    extremizer: Extremizer
    factorisation: Factorisation
    normalized_phi: tuple[np.ndarray, ...]
    report: VerificationReport


@dataclass(frozen=True)
class MonotonicityCheck:
    q_factorisation: float
    q_checked: float
    report: VerificationReport


@dataclass(frozen=True)
class SweepResult:
    schedule: tuple[float, ...]
    points: tuple[SweepPoint, ...]
    monotonicity: tuple[MonotonicityCheck, ...]
    limit_estimate: tuple[np.ndarray, ...]
    instance: ProblemInstance
    upgrade: UpgradeResult | None = None

    @property
    def monotone(self) -> bool:
        return all(m.report.passed for m in self.monotonicity)

    @property
    def passed(self) -> bool:
        return self.monotone and all(p.report.passed for p in self.points)


def q_sweep(instance: ProblemInstance, schedule=None, config: SolveConfig | None = None,
            tol: float = DEFAULT_TOL, upgrade: bool | None = None) -> SweepResult:
    """Solve, build and verify along an increasing schedule of ``q`` in (0, 1).

    ``mu`` must be a probability measure for the monotonicity checks to mean
    anything; with ``upgrade=None`` the instance is upgraded only when it is
    not one already.  Every factorisation is also transferred to each earlier
    exponent of the schedule and verified there.
    """
    schedule = tuple(default_schedule() if schedule is None else schedule)
    if not schedule:
        raise InstanceError("empty schedule", "E_Q_RANGE")
    if any(not 0 < q < 1 for q in schedule) or any(
            b <= a for a, b in zip(schedule, schedule[1:])):
        raise InstanceError("schedule must be strictly increasing inside (0, 1)",
                            "E_Q_RANGE")
    up = None
    if upgrade or (upgrade is None and not instance.space.is_probability()):
        instance, up = upgrade_instance(instance)
    points = []
    checks = []
    for q in schedule:
        inst_q = instance.with_q(q)
        ext = maximize(inst_q, config, warm_start=points[-1].extremizer if points else None)
        fac = build_factorisation(ext, inst_q)
        rep = verify_factorisation(inst_q, fac, tol)
        normalized = tuple(p / fac.constant for p in fac.phi)
        for earlier in points:
            moved = transfer_to_exponent(fac, earlier.q)
            checks.append(MonotonicityCheck(
                q, earlier.q, verify_factorisation(instance.with_q(earlier.q), moved, tol)))
        points.append(SweepPoint(q, ext, fac, normalized, rep))
    return SweepResult(
        schedule=schedule,
        points=tuple(points),
        monotonicity=tuple(checks),
        limit_estimate=points[-1].normalized_phi,
        instance=instance,
        upgrade=up,
    )


def limit_certificate(instance: ProblemInstance, limit_phi, constant: float,
                      tol: float = DEFAULT_TOL) -> VerificationReport:
    """Check the ``q = 1`` conclusions for ``constant * limit_phi``.

    ``limit_phi`` is a normalised sweep limit (componentwise integrals at most
    1); scaling by the ``q = 1`` constant gives the exact-factorisation form.
    """
    fac = Factorisation(tuple(constant * np.asarray(p) for p in limit_phi), constant, 1.0)
    return verify_factorisation(instance.with_q(1.0), fac, tol)
