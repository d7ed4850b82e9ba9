import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_e1
from disentangle import (
    InstanceError,
    MeasureSpace,
    ProblemInstance,
    WeightFamily,
    apply_operator,
    componentwise_integrals,
    conjugate_exponent,
    dumps_canonical,
    geometric_mean_integral,
    instance_from_dict,
    instance_to_dict,
)
from disentangle.core import logsumexp, safe_log

UV = WeightFamily(("u", "v"), [[3.0, 0.0], [0.0, 1.0]])
PAIR = MeasureSpace(("a", "b"), [1.0, 1.0])

positive = st.floats(0.0, 10.0, allow_nan=False)


def vectors(n):
    return st.lists(positive, min_size=n, max_size=n).map(np.array)


# --- apply_operator ----------------------------------------------------------

def test_operator_single_term():
    np.testing.assert_array_equal(apply_operator(UV, [1, 0]), [3, 0])


def test_operator_mixture():
    np.testing.assert_allclose(apply_operator(UV, [0.75, 0.25]), [2.25, 0.25])


def test_operator_zero():
    np.testing.assert_array_equal(apply_operator(UV, [0, 0]), [0, 0])


def test_operator_rejects_bad_alpha():
    with pytest.raises(InstanceError) as info:
        apply_operator(UV, [1, 0, 0])
    assert info.value.code == "E_DIMENSION"
    with pytest.raises(InstanceError):
        apply_operator(UV, [1, -1])


@given(vectors(3), vectors(3), st.floats(0, 100))
def test_operator_is_additive_and_homogeneous(a, b, lam):
    fam = WeightFamily.from_rows([[1, 2, 0, 4], [0, 0.5, 3, 1], [2, 2, 2, 0]])
    np.testing.assert_allclose(apply_operator(fam, a + b),
                               apply_operator(fam, a) + apply_operator(fam, b),
                               rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(apply_operator(fam, lam * a), lam * apply_operator(fam, a),
                               rtol=1e-12, atol=1e-12)


# --- geometric_mean_integral -------------------------------------------------

def test_geometric_mean_single_atom():
    space = MeasureSpace(("x",), [1.0])
    assert geometric_mean_integral(space, [[1.0], [1.0]], [0.3, 0.7], 0.5) == 1.0


def test_geometric_mean_e1():
    phi = [[2 / 3, 2], [2 / 3, 2]]
    assert geometric_mean_integral(PAIR, phi, [0.5, 0.5], 0.5) == pytest.approx(2, rel=1e-14)


def test_geometric_mean_essinf_at_q1():
    phi = [[1 / 3, 1], [1 / 3, 1]]
    assert geometric_mean_integral(PAIR, phi, [0.5, 0.5], 1.0) == pytest.approx(1 / 3)


def test_geometric_mean_zero_factor_is_infinite():
    assert geometric_mean_integral(PAIR, [[0, 1], [1, 1]], [0.5, 0.5], 0.5) == math.inf


def test_geometric_mean_ignores_null_atoms():
    space = MeasureSpace(("a", "b"), [1.0, 0.0])
    # phi vanishes where mu does: neither reading should notice
    assert geometric_mean_integral(space, [[2, 0], [2, 0]], [0.5, 0.5], 0.5) == 0.5
    assert geometric_mean_integral(space, [[2, 0], [2, 0]], [0.5, 0.5], 1.0) == 2.0


def test_geometric_mean_shape_errors():
    with pytest.raises(InstanceError):
        geometric_mean_integral(PAIR, [[1, 1, 1], [1, 1, 1]], [0.5, 0.5], 0.5)
    with pytest.raises(InstanceError):
        geometric_mean_integral(PAIR, [[1, 1], [1, 1]], [1.0], 0.5)


@given(st.floats(0.05, 0.95), st.floats(0.01, 100.0))
def test_geometric_mean_homogeneity(q, lam):
    rng = np.random.default_rng(0)
    space = MeasureSpace.from_masses([0.3, 1.2, 0.5])
    phi = rng.uniform(0.1, 5, size=(3, 3))
    theta = [0.2, 0.3, 0.5]
    base = geometric_mean_integral(space, phi, theta, q)
    scaled = geometric_mean_integral(space, lam * phi, theta, q)
    assert scaled == pytest.approx(lam ** conjugate_exponent(q) * base, rel=1e-12)


@given(st.lists(st.floats(0.01, 4.0), min_size=4, max_size=4))
def test_q1_reading_is_a_pointwise_threshold(vals):
    phi = np.array(vals).reshape(2, 2)
    theta = [0.4, 0.6]
    pointwise = np.prod(phi ** np.array(theta)[:, None], axis=0)
    lhs = geometric_mean_integral(PAIR, phi, theta, 1.0) >= 1
    assert lhs == bool(np.all(pointwise >= 1))


# --- componentwise_integrals -------------------------------------------------

def test_componentwise_e1():
    np.testing.assert_allclose(componentwise_integrals(PAIR, UV, [2 / 3, 2]), [2, 2])


def test_componentwise_zero_phi():
    np.testing.assert_array_equal(componentwise_integrals(PAIR, UV, [0, 0]), [0, 0])


def test_componentwise_normalisation():
    space = MeasureSpace.from_masses([0.25, 0.75])
    one = WeightFamily(("one",), [[1.0, 1.0]])
    np.testing.assert_allclose(componentwise_integrals(space, one, [1, 1]), [1.0])


def test_componentwise_dimension_error():
    with pytest.raises(InstanceError) as info:
        componentwise_integrals(PAIR, UV, [1, 1, 1])
    assert info.value.code == "E_DIMENSION"


# --- exponents and weights ---------------------------------------------------

def test_conjugate_exponent():
    assert conjugate_exponent(0.5) == -1
    assert conjugate_exponent(0.75) == pytest.approx(-3)
    assert conjugate_exponent(1.0) == -math.inf


@pytest.mark.parametrize("q", [0.0, -0.5, 1.5, math.nan])
def test_conjugate_exponent_range(q):
    with pytest.raises(InstanceError) as info:
        conjugate_exponent(q)
    assert info.value.code == "E_Q_RANGE"


def test_theta_is_renormalised_after_admission():
    inst = ProblemInstance(PAIR, (UV, UV), [0.5 + 4e-13, 0.5], 0.5)
    assert math.fsum(inst.theta) == 1.0
    again = ProblemInstance(PAIR, (UV, UV), inst.theta, 0.5)
    np.testing.assert_array_equal(again.theta, inst.theta)
    with pytest.raises(InstanceError) as info:
        ProblemInstance(PAIR, (UV, UV), [0.5 + 1e-9, 0.5], 0.5)
    assert info.value.code == "E_THETA"


@pytest.mark.parametrize("theta", [[1.0, 0.0], [1.2, -0.2], [0.5], [0.2, 0.3, 0.5]])
def test_theta_rejections(theta):
    with pytest.raises(InstanceError):
        ProblemInstance(PAIR, (UV, UV), theta, 0.5)


# --- data invariants ---------------------------------------------------------

@pytest.mark.parametrize("atoms, mass", [
    (("a", "b"), [1.0, -1.0]),
    (("a", "b"), [0.0, 0.0]),
    (("a", "a"), [1.0, 1.0]),
    (("a", "b"), [1.0, math.inf]),
    (("a",), [1.0, 1.0]),
])
def test_measure_space_rejections(atoms, mass):
    with pytest.raises(InstanceError):
        MeasureSpace(atoms, mass)


def test_measure_space_support_and_probability():
    space = MeasureSpace.from_masses([0.5, 0.0, 0.5])
    assert space.atoms == ("w0", "w1", "w2")
    np.testing.assert_array_equal(space.support, [True, False, True])
    assert space.is_probability()
    assert not PAIR.is_probability()


@pytest.mark.parametrize("keys, values", [
    ((), np.zeros((0, 2))),
    (("u",), [[1.0, -2.0]]),
    (("u", "u"), [[1.0, 0.0], [0.0, 1.0]]),
    (("u",), [[1.0, math.nan]]),
    (("u", "v"), [[1.0, 0.0]]),
])
def test_weight_family_rejections(keys, values):
    with pytest.raises(InstanceError):
        WeightFamily(keys, values)


def test_instance_needs_two_matching_families():
    with pytest.raises(InstanceError):
        ProblemInstance(PAIR, (UV,), [1.0], 0.5)
    wide = WeightFamily.from_rows([[1, 1, 1]])
    with pytest.raises(InstanceError) as info:
        ProblemInstance(PAIR, (UV, wide), [0.5, 0.5], 0.5)
    assert info.value.code == "E_DIMENSION"


def test_instance_data_is_read_only():
    inst = make_e1()
    with pytest.raises(ValueError):
        inst.space.mass[0] = 5.0
    with pytest.raises(ValueError):
        inst.families[0].values[0, 0] = 5.0


def test_instance_accepts_non_saturating_data():
    # saturation is checked by the solvers, not at construction
    ProblemInstance(PAIR, (WeightFamily.from_rows([[3, 0]]), UV), [0.5, 0.5], 0.5)


# --- log-domain helpers ------------------------------------------------------

def test_safe_log_zero():
    np.testing.assert_array_equal(safe_log([0.0, 1.0]), [-np.inf, 0.0])


def test_logsumexp_all_neg_inf():
    assert logsumexp(np.array([-np.inf, -np.inf])) == -np.inf
    assert logsumexp(np.array([0.0, 0.0])) == pytest.approx(math.log(2))


# --- JSON --------------------------------------------------------------------

def test_json_round_trip_is_byte_stable():
    inst = make_e1()
    text = dumps_canonical(instance_to_dict(inst))
    again = dumps_canonical(instance_to_dict(instance_from_dict(json.loads(text))))
    assert text == again
    back = instance_from_dict(json.loads(text))
    assert back.space.atoms == ("a", "b")
    assert back.families[1].keys == ("u", "v")
    assert back.q == 0.5


@pytest.mark.parametrize("mutate, code", [
    (lambda d: d.pop("theta"), "E_SCHEMA"),
    (lambda d: d.__setitem__("theta", 0.5), "E_SCHEMA"),
    (lambda d: d["families"][0][0].__setitem__("values", [3.0]), "E_DIMENSION"),
    (lambda d: d.__setitem__("q", 1.5), "E_Q_RANGE"),
    (lambda d: d["atoms"][0].__setitem__("mu", "heavy"), "E_SCHEMA"),
])
def test_json_rejections(mutate, code):
    data = instance_to_dict(make_e1())
    mutate(data)
    with pytest.raises(InstanceError) as info:
        instance_from_dict(data)
    assert info.value.code == code


def test_json_rejects_non_finite_numbers():
    data = instance_to_dict(make_e1())
    data["families"][0][0]["values"] = [math.inf, 0.0]
    with pytest.raises(InstanceError):
        instance_from_dict(data)


@settings(max_examples=50)
@given(st.integers(0, 2 ** 32 - 1))
def test_json_round_trip_random(seed):
    from disentangle.generate import random_instance
    inst = random_instance(np.random.default_rng(seed), p_null=0.2)
    back = instance_from_dict(json.loads(dumps_canonical(instance_to_dict(inst))))
    np.testing.assert_array_equal(back.space.mass, inst.space.mass)
    np.testing.assert_array_equal(back.theta, inst.theta)
    for f, g in zip(back.families, inst.families):
        np.testing.assert_array_equal(f.values, g.values)
