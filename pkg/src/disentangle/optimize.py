"""The functional I, its maximisation over products of simplices, and a grid oracle.

``I(g) = sum_w mu(w) prod_j (T_j g_j)(w) ** (theta_j q)`` is jointly concave
in ``g`` (a weighted geometric mean composed with ``t -> t**q``), so every
KKT point on the product of unit simplices is a global maximiser.

The solver runs multistart projected gradient ascent with Armijo
backtracking and then polishes the winner by Newton's method on the KKT
system written in log-coefficients.  Working in logs matters near ``q = 1``,
where maximisers can carry coefficients far below the smallest double.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np

from .core import (
    InstanceError,
    ProblemInstance,
    SaturationError,
    check_coefficients,
    logsumexp,
    safe_log,
)
from .saturation import check_saturation

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolveConfig:
    restarts: int = 16
    max_iters: int = 5000
    step_init: float = 1.0
    armijo_beta: float = 0.5
    tol_grad: float = 1e-10
    tol_value: float = 1e-12
    seed: int = 0
    positivity_floor: float = 1e-14
    polish_tol: float = 1e-12
    polish_max_iters: int = 200

    def __post_init__(self):
        if self.restarts < 1 or self.max_iters < 1 or self.polish_max_iters < 0:
            raise ValueError("restarts and max_iters must be positive")
        if not 0 < self.armijo_beta < 1:
            raise ValueError("armijo_beta must lie in (0, 1)")
        for name in ("step_init", "tol_grad", "tol_value", "positivity_floor", "polish_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


@dataclass(frozen=True)
class Extremizer:
    """A point of the product of simplices together with its transforms.

    ``g`` holds the coefficients as doubles; ``log_g`` keeps the same point in
    log form, which is the authoritative copy when a coefficient underflows.
    ``transformed``/``log_transformed`` are ``T_j g_j`` on every atom.
    """

    g: tuple[np.ndarray, ...]
    log_g: tuple[np.ndarray, ...]
    value: float
    transformed: tuple[np.ndarray, ...]
    log_transformed: tuple[np.ndarray, ...]
    q: float
    flags: tuple[tuple[int, str], ...] = ()
    log_positivity_margin: float = 0.0
    kkt_gap: float = math.nan
    restart: int = -1
    iterations: int = 0
    converged: bool = False

    @property
    def positivity_margin(self) -> float:
        """min over slots of ``min T_j g_j / max T_j g_j`` on the support."""
        return float(np.exp(self.log_positivity_margin))


# --------------------------------------------------------------------------
# shared atomwise machinery

class _Functional:
    """Support-restricted data of an instance with log-domain evaluations."""

    def __init__(self, instance: ProblemInstance):
        sup = instance.space.support
        self.instance = instance
        self.mu = instance.space.mass[sup]
        self.log_mu = np.log(self.mu)
        self.u = [f.values[:, sup] for f in instance.families]
        self.log_u = [safe_log(u) for u in self.u]
        self.s = np.asarray(instance.exponents)
        self.d = instance.d
        self.sizes = [f.n_keys for f in instance.families]
        # a key is essential when some support atom sees no other key of its slot
        self.essential = []
        for u in self.u:
            pos = u > 0
            alone = pos & (pos.sum(axis=0) == 1)
            self.essential.append(np.any(alone, axis=1))

    # linear-domain value, used in the ascent loop
    def value(self, g) -> float:
        L = np.zeros(self.mu.size)
        with np.errstate(divide="ignore"):
            for s, gj, u in zip(self.s, g, self.u):
                L += s * np.log(gj @ u)
        return float(self.mu @ np.exp(L))

    def state(self, log_g) -> dict:
        """All atomwise logs at a point given by log-coefficients."""
        ell = [logsumexp(lg[:, None] + lu, axis=0) for lg, lu in zip(log_g, self.log_u)]
        terms = [s * e for s, e in zip(self.s, ell)]
        L = np.sum(terms, axis=0)
        log_I = float(logsumexp(self.log_mu + L))
        log_phi, log_comp = [], []
        for j in range(self.d):
            others = np.sum([t for i, t in enumerate(terms) if i != j], axis=0) \
                if self.d > 1 else np.zeros_like(L)
            with np.errstate(invalid="ignore"):
                own = (self.s[j] - 1.0) * ell[j]
                lp = np.where(np.isneginf(others), -np.inf, others + own)
            log_phi.append(lp)
            lu = self.log_u[j]
            with np.errstate(invalid="ignore"):
                a = np.where(np.isneginf(lu), -np.inf, lu + lp)
            log_comp.append(logsumexp(a + self.log_mu, axis=1))
        return {"ell": ell, "L": L, "log_I": log_I, "log_phi": log_phi,
                "log_comp": log_comp}

    def gradient(self, g) -> list[np.ndarray]:
        """Gradient of I; keys able to lift a vanishing ``T_j g_j`` get ``+inf``.

        Where two slots vanish on the same atom every partial derivative there
        is zero although ``I`` grows like ``t**q`` along the joint direction, so
        the plain gradient would leave the ascent stuck on the boundary.
        """
        st = self.state([safe_log(gj) for gj in g])
        out = []
        for s, lc, e, u in zip(self.s, st["log_comp"], st["ell"], self.u):
            gr = s * np.exp(lc)
            hole = np.isneginf(e)
            if hole.any():
                gr = np.where(np.any(u[:, hole] > 0, axis=1), np.inf, gr)
            out.append(gr)
        return out

    def kkt_gap(self, st) -> float:
        """Concavity bound ``sum_j s_j (max_k comp_jk - I) >= I* - I``."""
        log_I = st["log_I"]
        if not np.isfinite(log_I) or not all(np.all(np.isfinite(e)) for e in st["ell"]):
            return math.inf
        gap = 0.0
        for s, lc in zip(self.s, st["log_comp"]):
            gap += s * math.expm1(max(float(lc.max()) - log_I, 0.0))
        return math.exp(log_I) * gap


def _normalize_log(lg: np.ndarray) -> np.ndarray:
    return lg - logsumexp(lg)


def project_simplex(v) -> np.ndarray:
    """Euclidean projection onto the unit simplex (sort-and-threshold)."""
    v = np.asarray(v, dtype=float)
    n = v.size
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, n + 1)
    rho = np.flatnonzero(u - css / idx > 0)[-1]
    tau = css[rho] / (rho + 1.0)
    return np.maximum(v - tau, 0.0)


# --------------------------------------------------------------------------
# evaluation

def evaluate_functional(instance: ProblemInstance, coefficients) -> float:
    """``I(alpha) = sum_w mu(w) prod_j (T_j alpha_j)(w) ** (theta_j q)``.

    Any slot vanishing at an atom zeroes that atom's contribution.  Works at
    ``q = 1`` as well, where the exponents are just ``theta_j``.
    """
    coefficients = check_coefficients(instance, coefficients)
    return _Functional(instance).value(coefficients)


def _require_solvable(instance: ProblemInstance) -> None:
    if instance.q >= 1:
        raise InstanceError(
            "direct maximisation is only defined for q < 1; use q_sweep to reach q = 1",
            "E_Q_RANGE")
    for j, fam in enumerate(instance.families):
        if not check_saturation(instance.space, fam):
            raise SaturationError(f"family {j} does not saturate the space", slot=j)


# --------------------------------------------------------------------------
# phase 1: projected gradient ascent

def _finite_gradient(grad):
    finite = [gr[np.isfinite(gr)] for gr in grad]
    top = max([float(f.max()) for f in finite if f.size] + [1.0])
    return [np.where(np.isfinite(gr), gr, 1e6 * top) for gr in grad]


def _ascend(fn: _Functional, g, config: SolveConfig):
    beta, sigma = config.armijo_beta, 1e-4
    f = fn.value(g)
    t = config.step_init
    it = 0
    for it in range(1, config.max_iters + 1):
        grad = _finite_gradient(fn.gradient(g))
        while True:
            g_new = [project_simplex(gj + t * dj) for gj, dj in zip(g, grad)]
            f_new = fn.value(g_new)
            rise = sum(float(dj @ (gn - gj)) for dj, gn, gj in zip(grad, g_new, g))
            if f_new >= f + sigma * rise:
                break
            t *= beta
            if t < 1e-30:
                return g, f, it
        step = math.sqrt(sum(float(np.sum((gn - gj) ** 2)) for gn, gj in zip(g_new, g)))
        gain = f_new - f
        g, f = g_new, f_new
        if step / t < config.tol_grad or gain < config.tol_value * max(1.0, abs(f)):
            break
        t = min(t / beta, 1e12)
    return g, f, it


# --------------------------------------------------------------------------
# phase 2: Newton on the KKT system in log-coefficients

def _jacobian(fn: _Functional, log_g, st, active):
    """d r_{jk} / d z_{im} over active keys, r = log comp - log I, g = softmax(z)."""
    d, s = fn.d, fn.s
    resp = []
    for lg, lu, e in zip(log_g, fn.log_u, st["ell"]):
        with np.errstate(invalid="ignore"):
            p = np.exp(np.where(np.isneginf(lu) | np.isneginf(lg)[:, None], -np.inf,
                                lg[:, None] + lu - e[None, :]))
        resp.append(np.nan_to_num(p))
    v = np.exp(fn.log_mu + st["L"] - st["log_I"])
    W = []
    for j in range(d):
        lu = fn.log_u[j]
        with np.errstate(invalid="ignore"):
            a = np.where(np.isneginf(lu), -np.inf,
                         lu + st["log_phi"][j] + fn.log_mu - st["log_comp"][j][:, None])
        W.append(np.nan_to_num(np.exp(a)))
    blocks = []
    for j in range(d):
        row = []
        for i in range(d):
            Jy = (s[i] - (i == j)) * (W[j] @ resp[i].T) - s[i] * (v @ resp[i].T)[None, :]
            if i == j:
                Jy = Jy + np.exp(log_g[i])[None, :]
            row.append(Jy[np.ix_(active[j], active[i])])
        blocks.append(row)
    return np.block(blocks), resp


def _residuals(fn, st):
    return [lc - st["log_I"] for lc in st["log_comp"]]


def _covers(fn: _Functional, j: int, active: np.ndarray) -> bool:
    return bool(np.all(np.any(fn.u[j][active] > 0, axis=0)))


def _set_active(log_g, j, k, on: bool):
    lg = log_g[j].copy()
    if on:
        lg[k] = lg[np.isfinite(lg)].max() + math.log(1e-8)
    else:
        lg[k] = -np.inf
    log_g[j] = _normalize_log(lg)


STALL_ITERS = 15


def _polish(fn: _Functional, log_g, config: SolveConfig, keep_support: bool = False):
    """Newton on ``log comp_jk = log I`` for active keys; inactive keys need
    ``comp_jk <= I``.  Returns (log_g, converged, iterations).

    The active set always covers the support in every slot.  Keys are dropped
    when Newton cannot take a full step (most negative residual first) and
    re-added when their inequality fails at a solution of the reduced system.
    With ``keep_support`` every key carrying weight starts active (warm
    starts); otherwise keys below ``1e-10`` of their slot's largest weight
    start inactive unless their residual is nearly zero.
    """
    tol = config.polish_tol
    log_g = [np.asarray(lg, dtype=float).copy() for lg in log_g]
    st = fn.state(log_g)
    r = _residuals(fn, st)
    active = []
    for j in range(fn.d):
        lg = log_g[j]
        rel = lg - lg[np.isfinite(lg)].max() if np.any(np.isfinite(lg)) else lg
        floor = -np.inf if keep_support else math.log(1e-10)
        a = fn.essential[j] | (np.nan_to_num(r[j], nan=np.inf) >= -1e-3) | (rel > floor)
        pos = fn.u[j] > 0
        while not _covers(fn, j, a):
            hole = ~np.any(pos[a], axis=0)
            cand = np.flatnonzero(np.any(pos[:, hole], axis=1) & ~a)
            score = np.nan_to_num(r[j][cand], nan=np.inf)
            a[cand[int(np.argmax(score))]] = True
        lg = log_g[j].copy()
        fin = a & np.isfinite(lg)
        top = lg[fin].max() if fin.any() else 0.0
        lg[a & ~np.isfinite(lg)] = top + math.log(1e-12)
        lg[~a] = -np.inf
        log_g[j] = _normalize_log(lg)
        active.append(a)

    def merit(res):
        return float(sum(np.sum(rj[a] ** 2) for rj, a in zip(res, active)))

    def droppable(res):
        out = []
        for j in range(fn.d):
            for k in np.flatnonzero(active[j]):
                if res[j][k] < -tol:
                    trial = active[j].copy()
                    trial[k] = False
                    if _covers(fn, j, trial):
                        out.append((res[j][k], j, k))
        return out

    budget = 4 * sum(fn.sizes)
    fresh = None  # last re-added key, shielded until a full Newton step
    best_merit, best_it = math.inf, 0
    it = 0
    for it in range(1, config.polish_max_iters + 1):
        st = fn.state(log_g)
        if not all(np.all(np.isfinite(e)) for e in st["ell"]):
            return log_g, False, it
        r = _residuals(fn, st)
        m_all = merit(r) + sum(float(np.sum(np.maximum(rj[~a], 0.0) ** 2))
                               for rj, a in zip(r, active))
        if m_all < 0.99 * best_merit:
            best_merit, best_it = m_all, it
        elif it - best_it > STALL_ITERS:
            return log_g, False, it
        worst_active = max(float(np.max(np.abs(rj[a]), initial=0.0)) for rj, a in zip(r, active))
        viol = [np.where(~a, np.maximum(rj, 0.0), 0.0) for rj, a in zip(r, active)]
        worst_inactive = max(float(v.max()) for v in viol)
        if worst_active <= tol and worst_inactive <= tol:
            return log_g, True, it
        if worst_active <= tol:
            if budget <= 0:
                return log_g, False, it
            j = int(np.argmax([v.max() for v in viol]))
            k = int(np.argmax(viol[j]))
            active[j][k] = True
            _set_active(log_g, j, k, True)
            fresh = (j, k)
            budget -= 1
            continue
        J, resp = _jacobian(fn, log_g, st, active)
        rvec = np.concatenate([rj[a] for rj, a in zip(r, active)])
        # each slot is invariant under z_j -> z_j + c; pin its largest active key
        free = []
        for lg, a in zip(log_g, active):
            f = np.ones(int(a.sum()), dtype=bool)
            f[int(np.argmax(lg[a]))] = False
            free.append(f)
        free = np.concatenate(free)
        dz = np.zeros(J.shape[1])
        dz[free] = np.linalg.lstsq(J[:, free], -rvec, rcond=None)[0]
        m0 = merit(r)
        # trust region on log-coefficients, proportional to their current spread
        spread = max(float(np.ptp(lg[a])) for lg, a in zip(log_g, active))
        radius = max(10.0, 2.0 * spread)
        big = float(np.max(np.abs(dz), initial=0.0))
        t0 = 1.0 if big <= radius else radius / big

        def trial_at(t):
            out, pos = [], 0
            for lg, a in zip(log_g, active):
                lg = lg.copy()
                n = int(a.sum())
                lg[a] = lg[a] + t * dz[pos:pos + n]
                pos += n
                out.append(_normalize_log(lg))
            return out, merit(_residuals(fn, fn.state(out)))

        trial, m_t = trial_at(t0)
        t, accepted = t0, bool(np.isfinite(m_t) and m_t <= (1.0 - 1e-4 * t0) * m0)
        if not accepted:
            # flat residuals (a key entering with tiny weight) defeat plain
            # backtracking; take the best point of the whole halving sequence
            best = (m0, None, 0.0)
            for i in range(1, 41):
                cand, m_c = trial_at(t0 * 0.5 ** i)
                if np.isfinite(m_c) and m_c < best[0]:
                    best = (m_c, cand, t0 * 0.5 ** i)
            if best[1] is not None:
                _, trial, t = best
                accepted = True
        if accepted:
            log_g = trial
        r = _residuals(fn, fn.state(log_g))
        # keys sliding to zero: negative residual and negligible share everywhere
        faded = [(rr, j, k) for rr, j, k in droppable(r) if resp[j][k].max() < 1e-10]
        for _, j, k in faded:
            trial_active = active[j].copy()
            trial_active[k] = False
            if _covers(fn, j, trial_active):
                active[j][k] = False
                _set_active(log_g, j, k, False)
        if faded:
            continue
        if accepted and t == t0:
            if t0 == 1.0:
                fresh = None
        else:
            # a damped step usually means some active key has no root
            cand = [c for c in droppable(r) if (c[1], c[2]) != fresh]
            if cand:
                _, j, k = min(cand)
                active[j][k] = False
                _set_active(log_g, j, k, False)
            elif not accepted:
                return log_g, False, it
    return log_g, False, it


# --------------------------------------------------------------------------

def extremizer_at(instance: ProblemInstance, coefficients=None, *, log_coefficients=None,
                  positivity_floor: float = 1e-14, **extra) -> Extremizer:
    """Package a point (normalised onto the simplices) as an :class:`Extremizer`.

    Useful for evaluating the factorisation formula away from maximisers.
    """
    if log_coefficients is None:
        coefficients = check_coefficients(instance, coefficients)
        log_coefficients = [safe_log(c) for c in coefficients]
    log_g = []
    for j, lg in enumerate(log_coefficients):
        lg = np.asarray(lg, dtype=float)
        if not np.any(np.isfinite(lg)):
            raise InstanceError(f"slot {j}: coefficients are all zero", "E_SCHEMA")
        log_g.append(_normalize_log(lg))
    fn = _Functional(instance)
    st = fn.state(log_g)
    sup = instance.space.support
    log_T = []
    for lg, fam in zip(log_g, instance.families):
        log_T.append(logsumexp(lg[:, None] + safe_log(fam.values), axis=0))
    flags = []
    margin = 0.0
    log_floor = math.log(positivity_floor)
    for j, lt in enumerate(log_T):
        ls = lt[sup]
        for a in np.flatnonzero(sup)[ls <= log_floor]:
            flags.append((j, instance.space.atoms[a]))
        margin = min(margin, float(ls.min() - ls.max()))
    for v in log_g:
        v.setflags(write=False)
    g = tuple(np.exp(v) for v in log_g)
    return Extremizer(
        g=g,
        log_g=tuple(log_g),
        value=float(math.exp(st["log_I"])) if np.isfinite(st["log_I"]) else 0.0,
        transformed=tuple(np.exp(lt) for lt in log_T),
        log_transformed=tuple(log_T),
        q=instance.q,
        flags=tuple(flags),
        log_positivity_margin=margin,
        kkt_gap=fn.kkt_gap(st),
        **extra,
    )


def _starts(instance: ProblemInstance, config: SolveConfig):
    seeds = np.random.SeedSequence(config.seed).spawn(config.restarts)
    for ss in seeds:
        rng = np.random.default_rng(ss)
        start = []
        for fam in instance.families:
            n = fam.n_keys
            # strictly interior: mix a Dirichlet draw with the barycentre
            start.append(0.5 * rng.dirichlet(np.ones(n)) + 0.5 / n)
        yield start


ANCHOR_Q = 0.5
MIN_STEP_RATIO = 0.999


def _extrapolate(log_g, q_from: float, q_to: float):
    """Rescale log-coefficients for a move from ``q_from`` to ``q_to``.

    Near ``q = 1`` the log-ratios of maximiser coefficients grow roughly like
    ``1/(1 - q)``, which makes this a good Newton start along a continuation.
    """
    factor = (1.0 - q_from) / (1.0 - q_to)
    out = []
    for lg in log_g:
        lg = np.asarray(lg, dtype=float)
        top = lg[np.isfinite(lg)].max()
        out.append(_normalize_log(np.where(np.isfinite(lg), (lg - top) * factor, -np.inf)))
    return out


def _continuation(instance: ProblemInstance, log_g, q_from: float, config: SolveConfig):
    """Follow a maximiser from ``q_from`` up to ``instance.q``.

    Steps halve ``1 - q``; a step whose polish fails is shortened (in
    ``log(1 - q)``) until it succeeds or becomes negligibly small.
    """
    q_to = instance.q
    q, total = q_from, 0
    while q < q_to:
        q_next = min(q_to, 1.0 - (1.0 - q) / 2.0)
        while True:
            fn = _Functional(instance.with_q(q_next))
            new, ok, its = _polish(fn, _extrapolate(log_g, q, q_next), config, True)
            total += its
            if not ok:
                new, ok, its = _polish(fn, log_g, config, True)
                total += its
            if ok:
                break
            ratio = math.sqrt((1.0 - q_next) / (1.0 - q))
            if ratio > MIN_STEP_RATIO:
                return None, total
            q_next = 1.0 - (1.0 - q) * ratio
        log_g, q = new, q_next
    return log_g, total


def _package(instance, log_g, config, **extra) -> Extremizer:
    return extremizer_at(instance, log_coefficients=log_g,
                         positivity_floor=config.positivity_floor, **extra)


def maximize(instance: ProblemInstance, config: SolveConfig | None = None,
             warm_start: Extremizer | None = None) -> Extremizer:
    """Maximise ``I`` over the product of unit simplices (``q < 1`` only).

    Best restart wins (ties go to the lowest restart index); the winner is
    then polished.  A converged polish is a KKT point and hence, by
    concavity, a global maximiser.  When it fails and ``q`` is large the
    maximiser at ``q = 1/2`` is followed up to ``q`` instead.

    ``warm_start`` (a maximiser of the same families at another exponent,
    ``restart = -1`` in the result) skips the multistart when its
    continuation converges.  The returned point flags every support atom
    where some ``T_j g_j`` falls below ``config.positivity_floor``.
    """
    config = config or SolveConfig()
    _require_solvable(instance)
    q = instance.q
    if warm_start is not None:
        start = [np.asarray(lg) for lg in warm_start.log_g]
        if warm_start.q < q:
            lg, its = _continuation(instance, start, warm_start.q, config)
        else:
            lg, ok, its = _polish(_Functional(instance), start, config, True)
            lg = lg if ok else None
        if lg is not None:
            return _package(instance, lg, config, restart=-1, iterations=its, converged=True)
    fn = _Functional(instance)
    best = None
    for idx, start in enumerate(_starts(instance, config)):
        g, f, its = _ascend(fn, start, config)
        if best is None or f > best[1]:
            best = (g, f, its, idx)
    g, f, its, idx = best
    log_g, ok, pits = _polish(fn, [safe_log(x) for x in g], config)
    polished = _package(instance, log_g, config, restart=idx, iterations=its + pits,
                        converged=ok)
    if ok:
        return polished
    if q > ANCHOR_Q:
        anchor = maximize(instance.with_q(ANCHOR_Q), config)
        if anchor.converged:
            lg, cits = _continuation(instance, anchor.log_g, ANCHOR_Q, config)
            if lg is not None:
                return _package(instance, lg, config, restart=anchor.restart,
                                iterations=anchor.iterations + cits, converged=True)
    log.warning("Newton polish did not converge (restart %d); KKT gap %.3g",
                idx, polished.kkt_gap)
    raw = extremizer_at(instance, g, positivity_floor=config.positivity_floor,
                        restart=idx, iterations=its, converged=False)
    return polished if polished.kkt_gap <= raw.kkt_gap else raw


# --------------------------------------------------------------------------
# exhaustive grid oracle

@dataclass(frozen=True)
class OracleConfig:
    resolution: int | None = None
    budget: int = 4_000_000
    max_points: int = 10 ** 8
    default_resolution: int = 200

    def __post_init__(self):
        if self.resolution is not None and self.resolution < 2:
            raise InstanceError("grid resolution must be at least 2", "E_GRID")


@dataclass(frozen=True)
class OracleResult:
    value: float
    g: tuple[np.ndarray, ...]
    resolutions: tuple[int, ...]
    n_points: int
    grid_bound: float
    holder_bound: float
    concavity_bound: float


def simplex_grid_size(n: int, resolution: int) -> int:
    return math.comb(resolution + n - 1, n - 1)


def simplex_grid(n: int, resolution: int) -> np.ndarray:
    """All points of the unit simplex in R^n with coordinates in (1/R)Z."""
    if n == 1:
        return np.ones((1, 1))
    bars = np.array(list(itertools.combinations(range(resolution + n - 1), n - 1)))
    edges = np.hstack([np.full((len(bars), 1), -1), bars,
                       np.full((len(bars), 1), resolution + n - 1)])
    return (np.diff(edges, axis=1) - 1) / resolution


def _choose_resolutions(instance: ProblemInstance, config: OracleConfig) -> tuple[int, ...]:
    sizes = [f.n_keys for f in instance.families]

    def total(R):
        return math.prod(simplex_grid_size(n, R) for n in sizes)

    if config.resolution is not None:
        R = config.resolution
    else:
        R = config.default_resolution
        while R > 2 and total(R) > config.budget:
            R -= 1 if R <= 20 else max(1, R // 10)
    n_points = total(R)
    if n_points > config.max_points:
        raise InstanceError(
            f"grid of {n_points} points exceeds the guard of {config.max_points}", "E_GRID")
    return tuple(R if n > 1 else 1 for n in sizes)


def _holder_bound(value: float, instance: ProblemInstance, resolutions) -> float:
    total = 0.0
    for fam, R, s in zip(instance.families, resolutions, instance.exponents):
        n = fam.n_keys
        if n > 1:
            total += (2 * (n // 2) / R) ** s
    if total == 0:
        return 0.0
    if total >= 1:
        return math.inf
    return value * total / (1 - total)


def brute_force_search(instance: ProblemInstance, config: OracleConfig | None = None,
                       top: int = 16) -> OracleResult:
    """Exhaustive maximum of ``I`` over a rational grid on each simplex.

    ``grid_bound`` bounds ``max I - value`` from above: the smaller of the
    Hoelder-type continuity estimate and, at the best grid points where ``I``
    is differentiable, the concavity (Frank-Wolfe) gap.
    """
    config = config or OracleConfig()
    resolutions = _choose_resolutions(instance, config)
    fn = _Functional(instance)
    grids = [simplex_grid(f.n_keys, R) for f, R in zip(instance.families, resolutions)]
    with np.errstate(divide="ignore"):
        logT = [np.log(G @ u) for G, u in zip(grids, fn.u)]
    d = fn.d
    rest_shape = tuple(len(G) for G in grids[1:])
    rest = np.zeros(rest_shape + (fn.mu.size,))
    for j in range(1, d):
        shape = [1] * (d - 1) + [fn.mu.size]
        shape[j - 1] = len(grids[j])
        rest = rest + fn.s[j] * logT[j].reshape(shape)
    rest_size = max(1, math.prod(rest_shape))
    chunk = max(1, 2_000_000 // (rest_size * fn.mu.size))
    cand_vals, cand_idx = [], []
    for start in range(0, len(grids[0]), chunk):
        block = fn.s[0] * logT[0][start:start + chunk]
        L = block.reshape((-1,) + (1,) * (d - 1) + (fn.mu.size,)) + rest[None]
        vals = np.exp(L) @ fn.mu
        flat = vals.reshape(-1)
        k = min(top, flat.size)
        sel = np.argpartition(flat, flat.size - k)[flat.size - k:]
        cand_vals.append(flat[sel])
        cand_idx.append(sel + start * rest_size)
    cand_vals = np.concatenate(cand_vals)
    cand_idx = np.concatenate(cand_idx)
    order = np.lexsort((cand_idx, -cand_vals))[:top]
    shape = tuple(len(G) for G in grids)

    def point(flat_index):
        multi = np.unravel_index(flat_index, shape)
        return [G[m] for G, m in zip(grids, multi)]

    best_val = float(cand_vals[order[0]])
    best_g = point(cand_idx[order[0]])
    holder = _holder_bound(best_val, instance, resolutions)
    upper = math.inf
    for o in order:
        g = point(cand_idx[o])
        st = fn.state([safe_log(x) for x in g])
        if all(np.all(np.isfinite(e)) for e in st["ell"]):
            upper = min(upper, math.exp(st["log_I"]) + fn.kkt_gap(st))
    concavity = max(upper - best_val, 0.0)
    return OracleResult(
        value=best_val,
        g=tuple(best_g),
        resolutions=resolutions,
        n_points=math.prod(shape),
        grid_bound=min(holder, concavity),
        holder_bound=holder,
        concavity_bound=concavity,
    )


def brute_force_constant(instance: ProblemInstance, config: OracleConfig | None = None) -> float:
    """Grid estimate of the least constant ``A`` (see :func:`brute_force_search`)."""
    return brute_force_search(instance, config).value
