import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_e1, single_atom
from disentangle import (
    InstanceError,
    MeasureSpace,
    OracleConfig,
    ProblemInstance,
    SaturationError,
    SolveConfig,
    WeightFamily,
    brute_force_constant,
    brute_force_search,
    dummy_lift,
    evaluate_functional,
    extremizer_at,
    maximize,
    project_simplex,
)
from disentangle.generate import random_instance
from disentangle.optimize import simplex_grid, simplex_grid_size

E2_SPACE = MeasureSpace(("a", "b", "c"), [1, 1, 2])
E2_FIRST = WeightFamily.from_rows([[1, 2, 0], [0, 1, 3]])


def e2(second):
    return ProblemInstance(E2_SPACE, (E2_FIRST, WeightFamily.from_rows(second)), [0.4, 0.6], 0.7)


def seeds():
    return st.integers(0, 2 ** 32 - 1)


# --- the functional ----------------------------------------------------------

def test_functional_e1(e1):
    assert evaluate_functional(e1, [[0.75, 0.25], [0.75, 0.25]]) == pytest.approx(2, rel=1e-14)


def test_functional_zero(e1):
    assert evaluate_functional(e1, [[0, 0], [0, 0]]) == 0


def test_functional_zero_short_circuit(e1):
    # slot 0 vanishes on b, slot 1 on a: nothing survives
    assert evaluate_functional(e1, [[1, 0], [0, 1]]) == 0


def test_functional_dimension_error(e1):
    with pytest.raises(InstanceError):
        evaluate_functional(e1, [[1, 0]])
    with pytest.raises(InstanceError):
        evaluate_functional(e1, [[1, 0, 0], [1, 0]])


@settings(max_examples=100)
@given(seeds())
def test_functional_homogeneity(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng)
    coeffs = [rng.exponential(size=f.n_keys) for f in inst.families]
    lam = rng.uniform(0.01, 50, size=inst.d)
    scaled = [l * a for l, a in zip(lam, coeffs)]
    factor = np.prod(lam ** inst.exponents)
    assert evaluate_functional(inst, scaled) == pytest.approx(
        factor * evaluate_functional(inst, coeffs), rel=1e-12)


@settings(max_examples=100)
@given(seeds())
def test_functional_is_concave(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng)
    f = [rng.dirichlet(np.ones(x.n_keys)) for x in inst.families]
    g = [rng.dirichlet(np.ones(x.n_keys)) for x in inst.families]
    t = rng.uniform()
    mid = [t * a + (1 - t) * b for a, b in zip(f, g)]
    lhs = evaluate_functional(inst, mid)
    rhs = t * evaluate_functional(inst, f) + (1 - t) * evaluate_functional(inst, g)
    assert lhs >= rhs * (1 - 1e-12)


@settings(max_examples=60, deadline=None)
@given(seeds())
def test_functional_continuity_bound(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng)
    A = maximize(inst, SolveConfig(restarts=4)).value
    f = [rng.dirichlet(np.ones(x.n_keys)) for x in inst.families]
    g = [rng.dirichlet(np.ones(x.n_keys)) for x in inst.families]
    gap = abs(evaluate_functional(inst, f) - evaluate_functional(inst, g))
    bound = A * sum(np.abs(a - b).sum() ** s for a, b, s in zip(f, g, inst.exponents))
    assert gap <= bound * (1 + 1e-9)


# --- simplex projection ------------------------------------------------------

def test_projection_examples():
    np.testing.assert_allclose(project_simplex([0.2, 0.3]), [0.45, 0.55])
    np.testing.assert_allclose(project_simplex([2.0, 0.0]), [1.0, 0.0])
    np.testing.assert_allclose(project_simplex([5.0]), [1.0])


@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=8))
def test_projection_lands_on_simplex(v):
    p = project_simplex(v)
    assert np.all(p >= 0)
    assert p.sum() == pytest.approx(1, abs=1e-12)
    np.testing.assert_allclose(project_simplex(p), p, atol=1e-12)


@given(st.lists(st.floats(-10, 10), min_size=2, max_size=5), seeds())
def test_projection_is_nearest(v, seed):
    p = project_simplex(v)
    other = np.random.default_rng(seed).dirichlet(np.ones(len(v)))
    v = np.asarray(v)
    assert np.sum((v - p) ** 2) <= np.sum((v - other) ** 2) + 1e-9


# --- maximize ----------------------------------------------------------------

def test_maximize_e1(e1):
    ext = maximize(e1)
    assert ext.value == pytest.approx(2, abs=1e-10)
    for g in ext.g:
        np.testing.assert_allclose(g, [0.75, 0.25], atol=1e-9)
    assert ext.converged and not ext.flags
    assert ext.kkt_gap <= 1e-9


def test_maximize_single_atom():
    ext = maximize(single_atom(d=3, q=0.3))
    assert ext.value == 1
    assert all(np.array_equal(g, [1.0]) for g in ext.g)
    assert ext.restart == 0


def test_maximize_extremizer_fields(e1):
    ext = maximize(e1)
    assert ext.q == 0.5
    for g, lg in zip(ext.g, ext.log_g):
        assert g.sum() == pytest.approx(1, abs=1e-14)
        np.testing.assert_allclose(np.exp(lg), g)
    np.testing.assert_allclose(ext.transformed[0], [2.25, 0.25], rtol=1e-9)
    assert ext.value == pytest.approx(evaluate_functional(e1, ext.g), rel=1e-12)


def test_maximize_repaired_e2_matches_oracle():
    inst = e2([[2, 0.5, 1]])
    ext = maximize(inst)
    orc = brute_force_search(inst)
    assert abs(ext.value - orc.value) <= max(1e-3, orc.grid_bound)
    assert ext.value >= orc.value - 1e-12


def test_maximize_rejects_non_saturating():
    # the second family misses atom b, which has positive mass
    with pytest.raises(SaturationError) as info:
        maximize(e2([[2, 0, 1]]))
    assert info.value.slot == 1


def test_maximize_rejects_q1(e1):
    with pytest.raises(InstanceError) as info:
        maximize(e1.with_q(1.0))
    assert info.value.code == "E_Q_RANGE"
    assert "sweep" in str(info.value)


def test_maximize_is_deterministic():
    inst = random_instance(np.random.default_rng(5))
    a = maximize(inst, SolveConfig(seed=3))
    b = maximize(inst, SolveConfig(seed=3))
    assert a.value == b.value and a.restart == b.restart
    for x, y in zip(a.g, b.g):
        np.testing.assert_array_equal(x, y)


def test_maximize_warm_start(e1):
    cold = maximize(e1.with_q(0.75))
    warm = maximize(e1.with_q(0.9), warm_start=cold)
    assert warm.restart == -1 and warm.converged
    assert warm.value == pytest.approx(maximize(e1.with_q(0.9)).value, rel=1e-12)


@pytest.mark.parametrize("q", [0.99, 0.999, 0.9999])
def test_maximize_near_one(e1, q):
    # closed form for E1: ((3**r + 1) ** (1 - q)) with r = q / (1 - q)
    r = q / (1 - q)
    exact = math.exp((1 - q) * (r * math.log(3) + math.log1p(3.0 ** -r)))
    ext = maximize(e1.with_q(q))
    assert ext.value == pytest.approx(exact, rel=1e-10)


@settings(max_examples=40, deadline=None)
@given(seeds())
def test_maximize_dominates_sampled_points(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, p_null=0.2)
    ext = maximize(inst, SolveConfig(restarts=4))
    for _ in range(20):
        pt = [rng.dirichlet(np.ones(f.n_keys) * 0.5) for f in inst.families]
        assert evaluate_functional(inst, pt) <= ext.value * (1 + 1e-12)


@settings(max_examples=40, deadline=None)
@given(seeds())
def test_maximiser_is_positive_on_support(seed):
    inst = random_instance(np.random.default_rng(seed), p_null=0.3)
    cfg = SolveConfig(restarts=4)
    ext = maximize(inst, cfg)
    sup = inst.space.support
    assert not ext.flags
    for t in ext.transformed:
        assert t[sup].min() > cfg.positivity_floor


def test_flags_report_vanishing_transforms(e1):
    ext = extremizer_at(e1, [[1, 0], [1, 0]])
    assert ext.flags == ((0, "b"), (1, "b"))
    assert ext.log_positivity_margin == -math.inf
    assert ext.kkt_gap == math.inf


def test_kkt_gap_bounds_the_suboptimality():
    rng = np.random.default_rng(8)
    for _ in range(30):
        inst = random_instance(rng)
        best = maximize(inst, SolveConfig(restarts=4)).value
        pt = [rng.dirichlet(np.ones(f.n_keys)) + 1e-3 for f in inst.families]
        ext = extremizer_at(inst, pt)
        assert best - ext.value <= ext.kkt_gap * (1 + 1e-9) + 1e-12


# --- oracle ------------------------------------------------------------------

def test_oracle_e1_fine_grid(e1):
    res = brute_force_search(e1, OracleConfig(resolution=1000))
    assert res.value == pytest.approx(2, abs=1e-5)
    assert res.resolutions == (1000, 1000)
    assert res.n_points == 1001 ** 2


def test_oracle_single_atom():
    assert brute_force_constant(single_atom()) == 1.0


def test_oracle_lifted_e1(e1):
    assert brute_force_constant(dummy_lift(e1)) == pytest.approx(2, abs=1e-5)


def test_oracle_guard():
    fam = WeightFamily.from_rows(np.eye(6))
    inst = ProblemInstance(MeasureSpace.from_masses(np.ones(6)), (fam, fam), [0.5, 0.5], 0.5)
    with pytest.raises(InstanceError) as info:
        brute_force_search(inst, OracleConfig(resolution=400))
    assert info.value.code == "E_GRID"
    assert str(simplex_grid_size(6, 400) ** 2) in str(info.value)


def test_oracle_bound_covers_true_gap():
    inst = e2([[2, 0.5, 1]])
    coarse = brute_force_search(inst, OracleConfig(resolution=20))
    fine = maximize(inst).value
    assert fine - coarse.value <= coarse.grid_bound * (1 + 1e-9)
    assert coarse.grid_bound == min(coarse.holder_bound, coarse.concavity_bound)


def test_simplex_grid():
    G = simplex_grid(3, 4)
    assert len(G) == simplex_grid_size(3, 4) == 15
    np.testing.assert_allclose(G.sum(axis=1), 1)
    assert np.all(G >= 0)
    assert len({tuple(r) for r in G}) == 15
