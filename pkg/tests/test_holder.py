import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from holderint.geometry import BoxDomain
from holderint.holder import (
    FieldTuple,
    ScalarField,
    VectorMap,
    add_fields,
    estimate_holder_constant,
    grid_nodes,
    inf_convolution,
    lacunary_holder_bound,
    lacunary_series,
    multiply_fields,
)

UNIT = BoxDomain.unit(1)
SQRT = ScalarField(lambda x: np.sqrt(x[:, 0]), 1, 0.5, 1.0, 1.0, support=UNIT)


def quotient(f, pts, alpha):
    v = f(pts)
    d = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
    dv = np.abs(v[:, None] - v[None, :])
    ok = d > 0
    return float(np.max(dv[ok] / d[ok] ** alpha))


def test_exponent_range_enforced():
    with pytest.raises(ValueError):
        ScalarField(lambda x: x[:, 0], 1, 0.0)
    with pytest.raises(ValueError):
        ScalarField(lambda x: x[:, 0], 1, 1.5)


def test_call_shapes():
    f = ScalarField.coordinate(1, 2)
    assert f(np.zeros((3, 4, 2))).shape == (3, 4)
    assert SQRT(np.array([0.25, 1.0])).tolist() == [0.5, 1.0]


def test_certified_requires_declared_bound():
    assert SQRT.certified
    assert not ScalarField(lambda x: x[:, 0], 1).certified
    assert not ScalarField(lambda x: x[:, 0], 1, 1.0, 1.0, label="estimated").certified


# inf-convolution -------------------------------------------------------

@pytest.mark.parametrize("eps", [0.5, 0.1, 0.01])
def test_constant_is_fixed(eps):
    f = ScalarField(lambda x: np.full(x.shape[0], 2.5), 1, 0.5, 1.0, support=UNIT)
    fe = inf_convolution(f, eps)
    nodes = np.array(grid_nodes(fe)[0])[:, None]
    assert np.all(fe(nodes) == 2.5)
    # between nodes the grid minimum can exceed the exact infimum by grid_error
    x = np.linspace(0, 1, 101)[:, None]
    assert np.all(fe(x) >= 2.5)
    assert np.all(fe(x) <= 2.5 + fe.guarantee.grid_error)


def test_sqrt_approximation_at_left_endpoint():
    assert inf_convolution(SQRT, 0.25)(np.array([[0.0]]))[0] == 0.0


def test_sqrt_approximation_at_right_endpoint_matches_dense_minimisation():
    # frozen from tests/oracles/derive_values.py (sqrt_eps_at_1): 1.0
    value = inf_convolution(SQRT, 0.25)(np.array([[1.0]]))[0]
    assert 0.5 <= value <= 1.0
    assert value == pytest.approx(1.0, abs=1e-12)


def test_guarantee_record_formulas():
    C, alpha, eps = 1.7, 0.6, 0.125
    f = ScalarField(lambda x: np.sin(x[:, 0]), 1, alpha, C, support=UNIT)
    g = inf_convolution(f, eps).guarantee
    assert g.lip_bound == C * eps ** (alpha - 1)
    assert g.sup_error == C * eps**alpha
    assert g.holder_bound_out == 3 * C


@pytest.mark.parametrize("eps, step", [(0.0, None), (-1.0, None), (0.1, 0.2), (0.1, 0.0)])
def test_bad_parameters_rejected(eps, step):
    with pytest.raises(ValueError):
        inf_convolution(SQRT, eps, step)


def test_missing_constant_rejected():
    with pytest.raises(ValueError):
        inf_convolution(ScalarField(lambda x: x[:, 0], 1, support=UNIT), 0.1)


def test_lipschitz_input_allowed():
    f = ScalarField(lambda x: np.abs(x[:, 0] - 0.5), 1, 1.0, 1.0, support=UNIT)
    fe = inf_convolution(f, 0.1)
    nodes = np.array(grid_nodes(fe)[0])[:, None]
    assert np.allclose(fe(nodes), f(nodes))


@given(st.floats(0.3, 0.95), st.integers(2, 6))
def test_lemma_properties_on_search_grid(alpha, m):
    eps = 2.0**-m
    f = ScalarField(lambda x: np.abs(x[:, 0] - 0.3) ** alpha, 1, alpha, 1.0, support=UNIT)
    fe = inf_convolution(f, eps)
    nodes = np.array(grid_nodes(fe)[0])[:, None]
    v, fv = fe(nodes), f(nodes)
    g = fe.guarantee
    assert np.max(np.abs(np.diff(v)) / np.diff(nodes[:, 0])) <= g.lip_bound * (1 + 1e-12)
    assert np.max(np.abs(v - fv)) <= g.sup_error * (1 + 1e-12)
    assert np.all(v <= fv + 1e-15)
    sub = nodes[:: max(1, len(nodes) // 200)]
    assert quotient(fe, sub, alpha) <= g.holder_bound_out * (1 + 1e-12)


def test_non_expansive_on_grid():
    g = ScalarField(lambda x: np.sqrt(x[:, 0]), 1, 0.5, 1.0, support=UNIT)
    h = ScalarField(lambda x: np.sqrt(x[:, 0]) + 0.1 * np.sin(7 * x[:, 0]), 1, 0.5, 1.0, support=UNIT)
    ge, he = inf_convolution(g, 0.05), inf_convolution(h, 0.05)
    nodes = np.array(grid_nodes(ge)[0])[:, None]
    assert np.max(np.abs(ge(nodes) - he(nodes))) <= np.max(np.abs(g(nodes) - h(nodes))) + 1e-15


def test_exactly_lipschitz_off_grid():
    fe = inf_convolution(SQRT, 0.1, 0.1 / 3)
    x = np.sort(np.random.default_rng(1).random(4000))[:, None]
    q = np.abs(np.diff(fe(x))) / np.diff(x[:, 0])
    assert q.max() <= fe.guarantee.lip_bound * (1 + 1e-9)


def test_support_growth_two_dimensional():
    # f vanishes outside [0.4, 0.6]^2; f_eps vanishes outside the eps-neighbourhood
    host = BoxDomain.unit(2)

    def bump(x):
        d = np.max(np.abs(x - 0.5), axis=1)
        return np.maximum(0.0, 0.1 - d) ** 0.5

    f = ScalarField(bump, 2, 0.5, 1.0, support=host)
    eps = 0.125
    fe = inf_convolution(f, eps)
    xs = np.stack(np.meshgrid(*grid_nodes(fe), indexing="ij"), -1).reshape(-1, 2)
    outside = np.linalg.norm(np.maximum(np.abs(xs - 0.5) - 0.1, 0), axis=1) > eps
    assert np.all(fe(xs[outside]) == 0.0)


# estimation --------------------------------------------------------------

def test_estimate_identity_and_zero():
    box = BoxDomain(((-2.0, 3.0),))
    assert estimate_holder_constant(lambda x: x[:, 0], box, 1.0) == pytest.approx(1.0, rel=1e-9)
    assert estimate_holder_constant(lambda x: np.zeros(x.shape[0]), box, 0.7) == 0.0


def test_estimate_sqrt_approaches_one_from_below():
    vals = [estimate_holder_constant(lambda x: np.sqrt(x[:, 0]), UNIT, 0.5, samples=s)
            for s in (16, 256, 4096)]
    assert all(v <= 1.0 + 1e-12 for v in vals)
    assert vals[-1] >= 0.99
    assert vals[0] <= vals[-1]


# lacunary ----------------------------------------------------------------

def test_single_term():
    f = lacunary_series(0.5, 1, "cosine_1d")
    x = np.linspace(0, 3, 7)
    assert np.allclose(f(x), 2**-0.5 * np.cos(2 * x))


def test_rejects_exponent_outside_open_interval():
    for a in (0.0, 1.0, 1.2):
        with pytest.raises(ValueError):
            lacunary_series(a, 3)


def test_tail_sup_bound():
    alpha, m = 0.6, 4
    full, part = lacunary_series(alpha, 30), lacunary_series(alpha, m)
    x = np.linspace(0, 2 * np.pi, 20001)
    tail = sum(2 ** (-i * alpha) for i in range(m + 1, 200))
    assert np.max(np.abs(full(x) - part(x))) <= tail


def test_declared_bound_uniform_and_estimates_plateau():
    alpha = 0.6
    box = BoxDomain(((0.0, 2 * np.pi),))
    bounds = {lacunary_series(alpha, m).holder_bound for m in range(1, 11)}
    assert len(bounds) == 1
    est = [estimate_holder_constant(lacunary_series(alpha, m), box, alpha, samples=8192)
           for m in range(1, 11)]
    assert max(est) <= bounds.pop()
    assert abs(est[-1] - est[-2]) <= 0.1 * est[-1]


def test_lacunary_bound_formula():
    r = 2**0.5
    assert lacunary_holder_bound(0.5, 1.0, 1.0) == pytest.approx(r / (r - 1) + 2 / (1 - 2**-0.5))


def test_sine_product_dimension():
    f = lacunary_series(0.7, 3, "sine_product", dim=2)
    x = np.array([[0.3, 1.1]])
    expect = sum(2 ** (-0.7 * i) * math.sin(2**i * 0.3) * math.sin(2**i * 1.1) for i in (1, 2, 3))
    assert f(x)[0] == pytest.approx(expect)


# composition rules --------------------------------------------------------

def test_pullback_exponents_multiply():
    phi = VectorMap(lambda t: np.sqrt(t), 1, 1, 0.5, 1.0)
    f = SQRT.pullback(phi)
    assert f.exponent == 0.25 and f.holder_bound == 1.0
    assert f(np.array([[0.0625]]))[0] == pytest.approx(0.5)


@given(st.floats(0.2, 1.0), st.floats(0.2, 1.0))
def test_product_and_sum_bounds_hold_on_samples(a, b):
    box = BoxDomain(((0.0, 1.0),))
    p = ScalarField(lambda x: np.abs(x[:, 0] - 0.4) ** a, 1, a, 1.0, 1.0)
    q = ScalarField(lambda x: np.abs(x[:, 0] - 0.7) ** b, 1, b, 1.0, 1.0)
    pts = np.linspace(0, 1, 301)[:, None]
    for h in (multiply_fields(p, q, box), add_fields(p, q, box)):
        assert quotient(h, pts, h.exponent) <= h.holder_bound * (1 + 1e-9)


def test_field_tuple_requires_common_dimension():
    with pytest.raises(ValueError):
        FieldTuple((ScalarField.coordinate(0, 1), ScalarField.coordinate(0, 2)))
    t = FieldTuple.identity(3)
    assert t.exponents == (1.0, 1.0, 1.0) and t.beta_bar == 3.0


def test_restrict_inserts_coordinate():
    f = ScalarField(lambda x: x[:, 0] + 10 * x[:, 1] + 100 * x[:, 2], 3)
    r = f.restrict(1, 0.5)
    assert r.dim == 2
    assert r(np.array([[1.0, 2.0]]))[0] == pytest.approx(1 + 5 + 200)


@pytest.mark.parametrize("dim", [1, 2])
def test_interpolated_approximation_guarantees(dim):
    host = BoxDomain.unit(dim)
    f = lacunary_series(0.7, 6, dim=dim, axis=dim - 1)
    fe = inf_convolution(f, 0.125, 0.125 / 4, host, interpolate=True)
    gu = fe.guarantee
    assert gu.lip_bound == pytest.approx(math.sqrt(dim) * f.holder_bound * 0.125 ** -0.3)
    rng = np.random.default_rng(dim)
    x, y = rng.random((3000, dim)), rng.random((3000, dim))
    q = np.abs(fe(x) - fe(y)) / np.linalg.norm(x - y, axis=1)
    assert q.max() <= gu.lip_bound * (1 + 1e-9)
    assert np.max(np.abs(fe(x) - f(x))) <= gu.sup_error + gu.grid_error
    # node values agree with the cone evaluator
    cones = inf_convolution(f, 0.125, 0.125 / 4, host)
    nodes = np.stack(np.meshgrid(*grid_nodes(cones), indexing="ij"), -1).reshape(-1, dim)
    assert np.allclose(fe(nodes), cones(nodes), rtol=0, atol=1e-13)
