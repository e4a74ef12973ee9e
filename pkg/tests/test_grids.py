import numpy as np
import pytest

from dictinv.grids import (
    DiscreteOperator,
    GridFunction,
    adjoint_apply,
    apply,
    identity_operator,
    inner_product,
    interpolate,
    interpolation_matrix,
    make_uniform_grid,
)
from dictinv.forward import LaplaceKernel, laplace_operator


class TestMakeUniformGrid:
    def test_eleven_nodes(self):
        g = make_uniform_grid(0, 10, 11)
        assert np.array_equal(g.nodes, np.arange(11.0))
        assert np.array_equal(g.weights[1:-1], np.ones(9))
        assert g.weights[0] == 0.5 and g.weights[-1] == 0.5

    def test_two_node_edge_case(self):
        g = make_uniform_grid(0, 1, 2)
        assert np.array_equal(g.nodes, [0.0, 1.0])
        assert np.array_equal(g.weights, [0.5, 0.5])

    def test_weight_sum_fine_grid(self):
        g = make_uniform_grid(0, 10, 2001)
        assert g.nodes[1] - g.nodes[0] == pytest.approx(0.005, abs=1e-15)
        # direct summation check of the weight-mass invariant
        assert abs(g.weights.sum() - 10.0) <= 1e-12 * 10.0

    @pytest.mark.parametrize("a,b,n", [(1.0, 1.0, 5), (2.0, 1.0, 5), (0.0, 1.0, 1)])
    def test_rejects_bad_parameters(self, a, b, n):
        with pytest.raises(ValueError):
            make_uniform_grid(a, b, n)


class TestInnerProduct:
    def test_zero_function(self):
        g = make_uniform_grid(0, 10, 101)
        z = g.function(0.0)
        f = g.sample(np.sin)
        assert inner_product(z, f) == 0.0

    def test_constant_exact(self):
        g = make_uniform_grid(0, 10, 101)
        one = g.function(1.0)
        assert inner_product(one, one) == pytest.approx(10.0, abs=1e-12)

    def test_t_squared(self):
        g = make_uniform_grid(0, 1, 2001)
        t = g.sample(lambda x: x)
        assert inner_product(t, t) == pytest.approx(1.0 / 3.0, abs=1e-5)

    def test_linear_polynomials_exact(self):
        # degree <= 1 must integrate exactly with trapezoid weights
        g = make_uniform_grid(-1, 3, 37)
        f = g.sample(lambda x: 2.0 * x + 1.0)
        one = g.function(1.0)
        assert inner_product(f, one) == pytest.approx(12.0, abs=1e-12)

    def test_grid_mismatch_raises(self):
        f = make_uniform_grid(0, 1, 11).function(1.0)
        g = make_uniform_grid(0, 1, 12).function(1.0)
        with pytest.raises(ValueError):
            inner_product(f, g)

    def test_symmetric_and_bilinear(self):
        g = make_uniform_grid(0, 2, 64)
        rng = np.random.default_rng(0)
        for _ in range(10):
            f = GridFunction(g, rng.standard_normal(g.n_nodes))
            h = GridFunction(g, rng.standard_normal(g.n_nodes))
            k = GridFunction(g, rng.standard_normal(g.n_nodes))
            a, b = rng.standard_normal(2)
            assert inner_product(f, h) == pytest.approx(inner_product(h, f), rel=1e-12)
            lhs = inner_product(GridFunction(g, a * f.values + b * h.values), k)
            rhs = a * inner_product(f, k) + b * inner_product(h, k)
            assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-12)


class TestOperator:
    def test_apply_zero(self):
        g = make_uniform_grid(0, 10, 201)
        Q = laplace_operator(LaplaceKernel(), g, g)
        q = apply(Q, g.function(0.0))
        assert np.all(q.values == 0.0)

    def test_apply_exponential_closed_form(self):
        # int_0^x e^{-(x-t)} e^{-t} dt = x e^{-x}; the first node carries the
        # half-cell boundary convention, so it is checked separately
        g = make_uniform_grid(0, 10, 2001)
        Q = laplace_operator(LaplaceKernel(), g, g)
        q = apply(Q, g.sample(lambda t: np.exp(-t)))
        exact = g.nodes * np.exp(-g.nodes)
        assert np.abs(q.values[1:] - exact[1:]).max() <= 1e-4
        assert q.values[0] == pytest.approx(0.5 * 0.005, rel=1e-12)

    def test_apply_unit_kernel(self):
        g = make_uniform_grid(0, 10, 501)
        Q = laplace_operator(LaplaceKernel(g=lambda x: np.ones_like(x)), g, g)
        q = apply(Q, g.function(1.0))
        assert np.abs(q.values[1:] - g.nodes[1:]).max() <= 1e-12

    def test_adjoint_zero(self):
        g = make_uniform_grid(0, 10, 201)
        Q = laplace_operator(LaplaceKernel(), g, g)
        assert np.all(adjoint_apply(Q, g.function(0.0)).values == 0.0)

    def test_adjoint_unit_kernel(self):
        # (Q* u)(z) = int_z^T dx = T - z for u = 1; the last node carries the
        # half-cell boundary convention instead of the exact zero
        g = make_uniform_grid(0, 10, 501)
        Q = laplace_operator(LaplaceKernel(g=lambda x: np.ones_like(x)), g, g)
        qs = adjoint_apply(Q, g.function(1.0))
        exact = 10.0 - g.nodes
        assert np.abs(qs.values[:-1] - exact[:-1]).max() <= 1e-12
        assert abs(qs.values[-1]) <= g.nodes[1] - g.nodes[0]

    def test_duality_identity(self):
        g = make_uniform_grid(0, 10, 401)
        Q = laplace_operator(LaplaceKernel(), g, g)
        rng = np.random.default_rng(42)
        for _ in range(100):
            f = GridFunction(g, rng.standard_normal(g.n_nodes))
            u = GridFunction(g, rng.standard_normal(g.n_nodes))
            gap = abs(inner_product(apply(Q, f), u) - inner_product(f, adjoint_apply(Q, u)))
            assert gap <= 1e-10 * f.norm2() * u.norm2()

    def test_grid_mismatch_raises(self):
        g = make_uniform_grid(0, 10, 101)
        other = make_uniform_grid(0, 10, 102)
        Q = laplace_operator(LaplaceKernel(), g, g)
        with pytest.raises(ValueError):
            apply(Q, other.function(1.0))
        with pytest.raises(ValueError):
            adjoint_apply(Q, other.function(1.0))

    def test_identity_operator(self):
        g = make_uniform_grid(0, 1, 33)
        Q = identity_operator(g)
        f = g.sample(lambda x: x**2)
        assert np.array_equal(apply(Q, f).values, f.values)
        assert np.allclose(adjoint_apply(Q, f).values, f.values)

    def test_matrix_shape_validation(self):
        g = make_uniform_grid(0, 1, 5)
        with pytest.raises(ValueError):
            DiscreteOperator(g, g, np.zeros((4, 5)))


def test_interpolation_matrix_matches_interp():
    g = make_uniform_grid(0, 10, 101)
    f = g.sample(lambda x: np.sin(x))
    x = np.array([0.0, 0.33, 5.87, 10.0])
    P = interpolation_matrix(x, g)
    assert np.allclose(P @ f.values, interpolate(f, x), atol=1e-14)
    assert np.allclose(P.sum(axis=1), 1.0)
