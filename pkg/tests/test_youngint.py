import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from holderint.geometry import BoxDomain, dyadic_partition
from holderint.holder import FieldTuple, ScalarField, VectorMap, lacunary_series, multiply_fields
from holderint.youngint import (
    BudgetExhausted,
    ExponentSumError,
    apriori_bound,
    boundary_integral,
    cauchy_bound,
    certificate,
    error_constants,
    face_defect_coefficient,
    integrate,
    parametrized_integrate,
    riemann_sequence,
    riemann_sum,
    thin_box_bound,
)

from conftest import random_lacunary, smooth


def X(axis, dim):
    return ScalarField.coordinate(axis, dim)


# constants -----------------------------------------------------------------

def test_constants_hand_values():
    assert error_constants(1, 0.7, [0.6]).cprime == 1.0
    c = error_constants(1, 1, [1])
    assert c.csum == 2.0
    c2 = error_constants(2, 1, [1, 1])
    assert (c2.cprime, c2.csum) == (12.0, 24.0)


def test_constants_frozen_oracle_values():
    # tests/oracles/derive_values.py (exact rational recursion in mpmath)
    c3 = error_constants(3, 1, [1, 1, 1])
    assert (c3.cprime, c3.csum) == (216.0, 432.0)
    c = error_constants(2, 0.9, [0.9, 0.9])
    assert c.cprime == pytest.approx(13.3973740647149070759605554925, rel=1e-14)
    assert c.csum == pytest.approx(34.8501702979108421374424182007, rel=1e-14)


@pytest.mark.parametrize("n, alpha, betas", [(1, 0.5, [0.5]), (1, 0.3, [0.6]), (2, 0.5, [0.8, 0.7]),
                                             (2, 2 / 3, [2 / 3, 2 / 3]), (3, 1, [1, 0.5, 0.5])])
def test_exponent_sum_too_small(n, alpha, betas):
    with pytest.raises(ExponentSumError, match="exponent sum too small"):
        error_constants(n, alpha, betas)


def test_exponent_out_of_range():
    with pytest.raises(ValueError):
        error_constants(1, 1.2, [1.0])


def test_constants_blow_up_near_threshold():
    near = error_constants(1, 0.5, [0.5 + 1e-6]).csum
    far = error_constants(1, 0.5, [0.9]).csum
    assert near > 1e5 * far


# boundary values ---------------------------------------------------------------

def test_boundary_examples():
    assert boundary_integral(BoxDomain.unit(1), [X(0, 1)]) == 1.0
    assert boundary_integral(BoxDomain.unit(2), FieldTuple.identity(2)) == 1.0
    assert boundary_integral(BoxDomain.unit(2), [X(1, 2), X(0, 2)]) == -1.0


def test_boundary_one_dimensional_is_endpoint_difference():
    g = lacunary_series(0.6, 8)
    box = BoxDomain(((0.3, 2.9),))
    assert boundary_integral(box, [g], 5) == g(np.array([[2.9]]))[0] - g(np.array([[0.3]]))[0]


def test_boundary_rejects_too_rough_faces():
    g = [lacunary_series(0.4, 4, dim=2), lacunary_series(0.4, 4, dim=2, axis=1)]
    with pytest.raises(ExponentSumError):
        boundary_integral(BoxDomain.unit(2), g)


# riemann sums ---------------------------------------------------------------

def test_zero_integrand():
    g = FieldTuple((lacunary_series(0.8, 5, dim=2), lacunary_series(0.8, 5, dim=2, axis=1)))
    assert riemann_sum(0.0, g, BoxDomain.unit(2), 4) == 0.0


def test_midpoint_sum_of_x_dx_is_half():
    # frozen from tests/oracles/derive_values.py (midpoint_x_dx_k3): 0.5
    assert riemann_sum(X(0, 1), [X(0, 1)], BoxDomain.unit(1), 3) == 0.5


def test_riemann_sum_uses_barycenters_explicitly():
    box = BoxDomain(((0.0, 2.0), (0.0, 1.0)))
    f = ScalarField(lambda x: x[:, 0] ** 2 * x[:, 1], 2)
    g = FieldTuple((smooth(lambda x: x[:, 0] + x[:, 1] ** 2, 2, 3.0), X(1, 2)))
    brute = sum(f(c.barycenter[None])[0] * boundary_integral(c, g, 0)
                for c in dyadic_partition(box, 2))
    assert riemann_sum(f, g, box, 2) == pytest.approx(brute, rel=1e-13)


def test_depth_consistency_with_sequence():
    rng = np.random.default_rng(3)
    box = BoxDomain(((0.0, 1.0), (0.0, 2.0)))
    f = random_lacunary(rng, 2, 0.9)
    g = FieldTuple((random_lacunary(rng, 2, 0.9), random_lacunary(rng, 2, 0.9)))
    seq = riemann_sequence(f, g, box, 6)
    for k in (0, 3, 6):
        assert riemann_sum(f, g, box, k, depth=6) == pytest.approx(seq[k], rel=1e-13, abs=1e-15)


@given(st.integers(0, 2**31), st.integers(1, 3), st.integers(0, 5))
def test_telescoping(seed, n, k):
    k = min(k, {1: 5, 2: 5, 3: 3}[n])
    rng = np.random.default_rng(seed)
    beta = 0.95
    g = FieldTuple(tuple(random_lacunary(rng, n, beta) for _ in range(n)))
    box = BoxDomain(tuple((lo, lo + w) for lo, w in zip(rng.uniform(-1, 1, n), rng.uniform(0.5, 2, n))))
    lhs = riemann_sum(1.0, g, box, k)
    rhs = boundary_integral(box, g, k)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-13)


# integrate --------------------------------------------------------------------

@pytest.mark.parametrize("n", [1, 2, 3])
def test_volume(n):
    res = integrate(1.0, FieldTuple.identity(n), BoxDomain.unit(n), tol=1e-9, k_max=4)
    assert res.value == pytest.approx(1.0, abs=1e-14)
    # the face-defect term keeps the n >= 2 certificate above zero at low depth
    assert res.criterion == ("certified" if n == 1 else "heuristic")


def test_sin_dcos():
    # frozen from tests/oracles/derive_values.py (sin_dcos): -pi
    box = BoxDomain(((0.0, 2 * np.pi),))
    s = ScalarField(lambda x: np.sin(x[:, 0]), 1, 1.0, 1.0, 1.0)
    c = ScalarField(lambda x: np.cos(x[:, 0]), 1, 1.0, 1.0, 1.0)
    res = integrate(s, [c], box, tol=1e-6, k_max=20)
    assert res.value == pytest.approx(-math.pi, abs=1e-6)
    assert abs(res.value + math.pi) <= res.apriori


def test_square_of_first_coordinate():
    # frozen from tests/oracles/derive_values.py (x1sq_x2): 1
    g = FieldTuple((smooth(lambda x: x[:, 0] ** 2, 2, 2.0), X(1, 2)))
    res = integrate(1.0, g, BoxDomain.unit(2), k_max=6)
    assert res.value == pytest.approx(1.0, abs=1e-12)


def test_result_fields_and_history():
    g = [lacunary_series(0.8, 6)]
    f = lacunary_series(0.8, 6, phase=0.3)
    res = integrate(f, g, BoxDomain(((0.0, 3.0),)), tol=1e-3, k_max=12)
    assert res.apriori >= 0 and res.aposteriori >= 0
    assert res.history[-1] == res.value
    assert len(res.history) == res.level + 1
    assert res.evaluations > 0
    assert res.criterion in ("certified", "heuristic", "budget")


def test_budget_strict_and_lenient():
    f = lacunary_series(0.6, 8)
    g = [lacunary_series(0.6, 8, phase=1.0)]
    box = BoxDomain(((0.0, 1.0),))
    lenient = integrate(f, g, box, tol=1e-12, k_max=3, mode="certified")
    assert lenient.criterion == "budget"
    with pytest.raises(BudgetExhausted) as info:
        integrate(f, g, box, tol=1e-12, k_max=3, mode="certified", strict=True)
    assert info.value.result.value == lenient.value


def test_missing_constants_give_infinite_certificate():
    f = ScalarField(lambda x: np.sin(3 * x[:, 0]), 1, 1.0)
    res = integrate(f, [X(0, 1)], BoxDomain.unit(1), k_max=5)
    assert math.isinf(res.apriori)


def test_worker_count_does_not_change_bits():
    rng = np.random.default_rng(5)
    f = random_lacunary(rng, 2, 0.9)
    g = FieldTuple((random_lacunary(rng, 2, 0.9), random_lacunary(rng, 2, 0.9)))
    a = integrate(f, g, BoxDomain.unit(2), k_max=9, k_min=9, workers=1)
    b = integrate(f, g, BoxDomain.unit(2), k_max=9, k_min=9, workers=4)
    assert a.value == b.value


def test_exponent_error_from_integrate():
    with pytest.raises(ExponentSumError):
        integrate(lacunary_series(0.5, 3), [lacunary_series(0.5, 3)], BoxDomain.unit(1), tol=1)


# bounds --------------------------------------------------------------------

def test_apriori_examples():
    c = error_constants(1, 1, [1])
    assert apriori_bound(c, 0, 1.0, 1.0, [1.0]) == 2.0
    assert apriori_bound(c, 5, 1.0, 0.0, [1.0]) == 0.0
    vals = [apriori_bound(c, k, 1.0, 1.0, [1.0]) for k in range(60)]
    assert all(a > b for a, b in zip(vals, vals[1:])) and vals[-1] < 1e-15


def test_thin_box_reduces_in_dimension_one():
    alpha, beta = 0.7, 0.6
    c = error_constants(1, alpha, [beta])
    for L in (0.5, 0.01):
        box = BoxDomain(((1.0, 1.0 + L),))
        expect = c.csum * (2.0 * L**beta + 3.0 * L ** (alpha + beta)) * 1.5
        assert thin_box_bound(box, c, 2.0, 3.0, [1.5]) == pytest.approx(expect)


def test_thin_box_vanishes_for_thin_slabs():
    c = error_constants(2, 0.9, [0.9, 0.9])
    vals = [thin_box_bound(BoxDomain(((0, 1), (0, e))), c, 1.0, 1.0, [1.0, 1.0])
            for e in (1e-2, 1e-4, 1e-6)]
    assert vals[0] > vals[1] > vals[2]


@given(st.integers(0, 2**31), st.floats(0.01, 0.5))
def test_thin_box_bound_dominates(seed, eps):
    rng = np.random.default_rng(seed)
    f = random_lacunary(rng, 2, 0.9)
    g = FieldTuple((random_lacunary(rng, 2, 0.9), random_lacunary(rng, 2, 0.9)))
    box = BoxDomain(((0.0, 1.0), (0.2, 0.2 + eps)))
    c = error_constants(2, 0.9, [0.9, 0.9])
    value = riemann_sum(f, g, box, 6)
    assert abs(value) <= thin_box_bound(box, c, f.sup_bound, f.holder_bound, g.holder_bounds)


def test_face_defect_base_cases():
    assert face_defect_coefficient((0.8,), 5) == 0.0
    b = (0.9, 0.8)
    c1 = error_constants(1, 0.9, [0.8]).csum
    assert face_defect_coefficient(b, 3) == pytest.approx(4 * c1 * 2 ** (3 * (1 - 1.7)))


@pytest.mark.parametrize("seed", range(4))
def test_face_defect_bounds_observed_error(seed):
    # J at depth j against a much deeper reference on one box
    rng = np.random.default_rng(seed)
    betas = (0.9, 0.85)
    g = FieldTuple((random_lacunary(rng, 2, betas[0]), random_lacunary(rng, 2, betas[1])))
    box = BoxDomain(((0.0, 1.0), (0.0, 1.5)))
    ref = boundary_integral(box, g, 14)
    H = np.prod(g.holder_bounds)
    for j in range(0, 7):
        err = abs(boundary_integral(box, g, j) - ref)
        assert err <= face_defect_coefficient(betas, j) * box.diameter ** sum(betas) * H


@pytest.mark.parametrize("seed", range(3))
def test_certificate_covers_error(seed):
    rng = np.random.default_rng(seed)
    f = random_lacunary(rng, 2, 0.9)
    g = FieldTuple((random_lacunary(rng, 2, 0.9), random_lacunary(rng, 2, 0.9)))
    box = BoxDomain.unit(2)
    ref = integrate(f, g, box, k_max=10, k_min=10).value
    c = error_constants(2, 0.9, [0.9, 0.9])
    for k in range(1, 7):
        val = riemann_sum(f, g, box, k)
        assert abs(val - ref) <= certificate(c, k, k, box, f, g)


# properties -----------------------------------------------------------------

@given(st.integers(0, 2**31))
def test_cauchy_rate(seed):
    rng = np.random.default_rng(seed)
    a, b = rng.uniform(0.55, 1.0), rng.uniform(0.55, 1.0)
    if a + b <= 1.1:
        a, b = 0.6, 0.6
    f, g = random_lacunary(rng, 1, a if a < 1 else 0.99), random_lacunary(rng, 1, b if b < 1 else 0.99)
    box = BoxDomain(((0.0, float(rng.uniform(0.5, 4))),))
    c = error_constants(1, f.exponent, [g.exponent])
    seq = riemann_sequence(f, [g], box, 10)
    for k in range(1, 11):
        assert abs(seq[k] - seq[k - 1]) <= cauchy_bound(c, k, box.diameter, f.holder_bound,
                                                        [g.holder_bound])


@given(st.integers(0, 2**31))
def test_intermediate_point_independence(seed):
    rng = np.random.default_rng(seed)
    f = random_lacunary(rng, 2, 0.9)
    g = FieldTuple((random_lacunary(rng, 2, 0.9), random_lacunary(rng, 2, 0.9)))
    box = BoxDomain.unit(2)
    c = error_constants(2, 0.9, [0.9, 0.9])
    for k in (1, 3, 5):
        bary = riemann_sum(f, g, box, k)
        tagged = riemann_sum(f, g, box, k, tags=np.random.default_rng(seed + k))
        bound = cauchy_bound(c, k, box.diameter, f.holder_bound, g.holder_bounds)
        assert abs(bary - tagged) <= bound


def test_parametrized_identity_and_circle():
    f = lacunary_series(0.8, 5, dim=1)
    g = [lacunary_series(0.8, 5, dim=1, phase=0.4)]
    box = BoxDomain(((0.0, 1.0),))
    direct = integrate(f, g, box, k_max=8)
    pulled = parametrized_integrate(f, g, VectorMap.identity(1), box, k_max=8)
    assert direct.value == pulled.value
    circle = VectorMap(lambda t: np.stack([np.cos(t[:, 0]), np.sin(t[:, 0])], 1), 1, 2, 1.0, 1.0)
    res = parametrized_integrate(1.0, [X(0, 2)], circle, BoxDomain(((0.0, 2 * np.pi),)), k_max=8)
    assert abs(res.value) <= 1e-15


def test_parametrized_exponents_compose():
    phi = VectorMap(lambda t: np.sqrt(t), 1, 1, 0.5, 1.0)
    f = lacunary_series(0.9, 4)
    with pytest.raises(ExponentSumError):
        parametrized_integrate(f, [f], phi, BoxDomain.unit(1), k_max=3)


def test_product_rule_smooth():
    box = BoxDomain(((0.0, 1.0),))
    h = smooth(lambda x: np.cos(3 * x[:, 0]), 1, 3.0, 1.0)
    hp = smooth(lambda x: x[:, 0] ** 2, 1, 2.0, 1.0)
    hh = multiply_fields(h, hp, box)
    lhs = integrate(1.0, [hh], box, k_max=14).value
    rhs = integrate(h, [hp], box, k_max=14).value + integrate(hp, [h], box, k_max=14).value
    assert lhs == pytest.approx(rhs, abs=1e-7)
    # frozen from tests/oracles/derive_values.py (cos3x_dx2)
    assert integrate(h, [hp], box, k_max=16).value == pytest.approx(-0.3481405494268542, abs=1e-8)
