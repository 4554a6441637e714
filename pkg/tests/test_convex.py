"""Generator registry: values, gradients, conjugates, inverse gradients."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from divnet import (ConvergenceError, DomainError, DualDomainError,
                    eval_conjugate, eval_f, eval_grad, eval_grad_conjugate,
                    get_generator, make_separable)
from divnet.convex import numeric_conjugate_supremum

from util import finite_difference_grad, rel

GENERATORS = ["quadratic", "negative_entropy", "negative_log"]


def spec_of(name, dim=2):
    return get_generator(name, dim)


class TestValues:
    def test_quadratic_value(self):
        assert eval_f(spec_of("quadratic"), (3.0, 4.0)) == 12.5

    def test_negative_entropy_at_ones(self):
        assert eval_f(spec_of("negative_entropy"), (1.0, 1.0)) == 0.0

    def test_negative_log_value(self):
        # -(ln 1 + ln e) = -1, by direct arithmetic
        assert rel(eval_f(spec_of("negative_log"), (1.0, math.e)), -1.0) < 1e-12

    def test_domain_error(self):
        with pytest.raises(DomainError):
            eval_f(spec_of("negative_entropy"), (1.0, -1.0))
        with pytest.raises(DomainError):
            eval_f(spec_of("negative_log"), (0.0, 1.0))


class TestGradients:
    def test_quadratic_identity_map(self):
        np.testing.assert_allclose(eval_grad(spec_of("quadratic"), (3.0, 4.0)),
                                   [3.0, 4.0])

    def test_negative_entropy_at_ones(self):
        np.testing.assert_allclose(
            eval_grad(spec_of("negative_entropy"), (1.0, 1.0)), [1.0, 1.0])

    def test_negative_log(self):
        np.testing.assert_allclose(eval_grad(spec_of("negative_log"), (2.0, 4.0)),
                                   [-0.5, -0.25])

    @pytest.mark.parametrize("name", GENERATORS)
    def test_matches_finite_differences(self, name):
        spec = spec_of(name, 3)
        rng = np.random.default_rng(11)
        for _ in range(50):
            x = spec.domain.sample(rng, 3)
            g = eval_grad(spec, x)
            fd = finite_difference_grad(lambda v: eval_f(spec, v), x)
            assert np.all(np.abs(g - fd) <= 1e-4 * (1.0 + np.abs(g)))


class TestConjugates:
    def test_quadratic_self_conjugate(self):
        assert eval_conjugate(spec_of("quadratic"), (3.0, 4.0)) == 12.5

    def test_negative_entropy_closed_form(self):
        # F*(y) = sum exp(y - 1); at (1,1) the exponent vanishes
        assert rel(eval_conjugate(spec_of("negative_entropy"), (1.0, 1.0)),
                   2.0) < 1e-12

    def test_negative_log_closed_form(self):
        assert rel(eval_conjugate(spec_of("negative_log"), (-1.0, -1.0)),
                   -2.0) < 1e-12

    def test_dual_domain_error(self):
        with pytest.raises(DualDomainError):
            eval_conjugate(spec_of("negative_log"), (0.5, -1.0))
        with pytest.raises(DualDomainError):
            eval_grad_conjugate(spec_of("negative_log"), (1.0, 1.0))

    @pytest.mark.parametrize("name,y", [
        ("negative_entropy", (1.0, 1.0)),
        ("negative_entropy", (-0.3, 2.1)),
        ("negative_log", (-1.0, -1.0)),
        ("negative_log", (-0.2, -3.0)),
    ])
    def test_against_numeric_supremum(self, name, y):
        spec = spec_of(name)
        closed = eval_conjugate(spec, y)
        numeric = numeric_conjugate_supremum(spec, y)
        assert rel(closed, numeric) < 1e-6


class TestInverseGradient:
    def test_quadratic(self):
        np.testing.assert_allclose(
            eval_grad_conjugate(spec_of("quadratic"), (1.0, 2.0)), [1.0, 2.0])

    def test_negative_entropy_fixed_point(self):
        np.testing.assert_allclose(
            eval_grad_conjugate(spec_of("negative_entropy"), (1.0, 1.0)),
            [1.0, 1.0])

    def test_negative_log(self):
        got = eval_grad_conjugate(spec_of("negative_log"), (-0.5, -0.25))
        np.testing.assert_allclose(got, [2.0, 4.0], rtol=1e-9)

    @pytest.mark.parametrize("name", GENERATORS)
    def test_round_trip_bulk(self, name):
        spec = spec_of(name, 2)
        rng = np.random.default_rng(5)
        for _ in range(1000):
            x = spec.domain.sample(rng, 2)
            back = eval_grad_conjugate(spec, eval_grad(spec, x))
            assert np.max(np.abs(back - x)) <= 1e-7 * (1.0 + np.max(np.abs(x)))


@pytest.mark.parametrize("name", GENERATORS)
def test_fenchel_identity(name):
    spec = spec_of(name, 2)
    rng = np.random.default_rng(17)
    for _ in range(200):
        x = spec.domain.sample(rng, 2)
        y = eval_grad(spec, x)
        pairing = float(np.dot(x, y))
        assert abs(eval_f(spec, x) + eval_conjugate(spec, y) - pairing) \
            <= 1e-9 * (1.0 + abs(pairing))


@pytest.mark.parametrize("name", GENERATORS)
def test_strict_convexity_witness(name):
    spec = spec_of(name, 2)
    rng = np.random.default_rng(23)
    for _ in range(300):
        x = spec.domain.sample(rng, 2)
        y = spec.domain.sample(rng, 2)
        if np.max(np.abs(x - y)) < 1e-8:
            continue
        lower = eval_f(spec, x) + float(np.dot(eval_grad(spec, x), y - x))
        assert eval_f(spec, y) > lower


@given(st.lists(st.floats(-4.0, 4.0), min_size=2, max_size=2))
@settings(max_examples=100, deadline=None)
def test_quadratic_round_trip_property(xs):
    spec = spec_of("quadratic")
    x = np.asarray(xs)
    back = eval_grad_conjugate(spec, eval_grad(spec, x))
    assert np.max(np.abs(back - x)) <= 1e-7 * (1.0 + np.max(np.abs(x)))


@given(st.lists(st.floats(0.05, 50.0), min_size=2, max_size=2))
@settings(max_examples=100, deadline=None)
def test_negative_entropy_round_trip_property(xs):
    spec = spec_of("negative_entropy")
    x = np.asarray(xs)
    back = eval_grad_conjugate(spec, eval_grad(spec, x))
    assert np.max(np.abs(back - x)) <= 1e-7 * (1.0 + np.max(np.abs(x)))


class TestSeparable:
    def test_shifted_quadratic_f_at_one(self):
        # 0.5*(x^2 - 1): F(1) = 0, eligible for ratio networks
        spec = make_separable("halfsq_shifted", [[0.5, 0.0, 0.0, 0.0, -0.5]])
        assert spec.f_at_one_is_zero
        assert eval_f(spec, (3.0,)) == 4.0

    def test_numeric_inverse_gradient(self):
        spec = make_separable("mix", [[0.5, 1.0, 0.5, 0.2, 0.0],
                                      [0.0, 2.0, 0.0, -1.0, 0.3]])
        rng = np.random.default_rng(2)
        for _ in range(100):
            x = spec.domain.sample(rng, 2)
            y = eval_grad(spec, x)
            back = eval_grad_conjugate(spec, y)
            assert np.max(np.abs(back - x)) <= 1e-7 * (1.0 + np.max(np.abs(x)))

    def test_conjugate_via_inverse_matches_supremum(self):
        spec = make_separable("mix1", [[0.0, 1.0, 1.0, 0.5, 0.0]])
        y = np.array([0.7])
        assert rel(eval_conjugate(spec, y),
                   numeric_conjugate_supremum(spec, y)) < 1e-6

    def test_rejects_concave_table(self):
        with pytest.raises(ValueError):
            make_separable("bad", [[-1.0, 0.0, 0.0, 0.0, 0.0]])

    def test_dual_domain_bound(self):
        # a=b=0, c>0: gradient range is (-inf, d)
        spec = make_separable("loglike", [[0.0, 0.0, 1.0, 0.25, 0.0]])
        assert spec.dual_domain.contains(np.array([0.2]))
        assert not spec.dual_domain.contains(np.array([0.25]))
        with pytest.raises(DualDomainError):
            eval_grad_conjugate(spec, (0.3,))


def test_unknown_generator():
    with pytest.raises(KeyError):
        get_generator("not_a_generator", 2)
