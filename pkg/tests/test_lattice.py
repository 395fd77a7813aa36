import math

import numpy as np
import pytest

from clinterp.errors import (
    DescriptorError,
    DomainError,
    InfeasibleDecompositionError,
)
from clinterp.lattice import (
    LatticeVector,
    abs_vector,
    join,
    krivine_apply,
    linf,
    lp,
    meet,
    norm,
    parse_lattice,
    riesz_decompose,
    submeasure_lp,
    vector,
    weighted_lp,
)
from clinterp.quasiconcave import harmonic, min_function, power

SPACES = [
    lp(1.0, 4),
    lp(2.0, 4),
    lp(0.5, 4),
    linf(4),
    weighted_lp(1.0, 4, [1.0, 2.0, 3.0, 4.0]),
    weighted_lp(0.5, 4, [0.5, 1.0, 1.5, 2.0]),
    submeasure_lp(0.5, 4),
]


class TestNorms:
    def test_l1(self):
        assert norm(lp(1.0, 2), [3.0, -4.0]) == pytest.approx(7.0)

    def test_lhalf(self):
        assert norm(lp(0.5, 2), [1.0, 1.0]) == pytest.approx(4.0)

    def test_linf(self):
        assert norm(linf(2), [3.0, -4.0]) == pytest.approx(4.0)

    def test_weighted(self):
        assert norm(weighted_lp(1.0, 2, [2.0, 5.0]), [1.0, -1.0]) == pytest.approx(7.0)

    def test_submeasure_closed_form(self):
        # the layer-cake over B_{e_j} unions collapses to a normalized lp norm
        space = submeasure_lp(0.5, 4)
        rng = np.random.default_rng(5)
        for _ in range(25):
            x = rng.uniform(-2.0, 2.0, size=4)
            x[rng.integers(0, 4)] = 0.0 if rng.random() < 0.3 else x[0]
            expect = (np.sum(np.abs(x) ** 0.5) / 4.0) ** 2.0
            assert norm(space, x) == pytest.approx(expect, rel=1e-12)

    def test_modulus_constants(self):
        assert lp(1.0, 3).modulus_constant == 1.0
        assert lp(2.0, 3).modulus_constant == 1.0
        assert linf(3).modulus_constant == 1.0
        assert lp(0.5, 3).modulus_constant == 2.0
        assert submeasure_lp(0.5, 3).modulus_constant == 2.0

    def test_quasi_triangle(self):
        rng = np.random.default_rng(19)
        for space in SPACES:
            c = space.modulus_constant
            for _ in range(200):
                x = rng.normal(size=space.dim)
                y = rng.normal(size=space.dim)
                lhs = norm(space, x + y)
                rhs = c * (norm(space, x) + norm(space, y))
                assert lhs <= rhs * (1 + 1e-12), space.describe()

    def test_monotone(self):
        rng = np.random.default_rng(23)
        for space in SPACES:
            for _ in range(200):
                y = rng.uniform(0.0, 3.0, size=space.dim)
                x = y * rng.uniform(0.0, 1.0, size=space.dim)
                assert norm(space, x) <= norm(space, y) * (1 + 1e-12), space.describe()

    def test_homogeneous(self):
        rng = np.random.default_rng(29)
        for space in SPACES:
            x = rng.normal(size=space.dim)
            for lam in (0.25, 3.0):
                assert norm(space, lam * x) == pytest.approx(
                    lam * norm(space, x), rel=1e-12
                )

    def test_dimension_mismatch(self):
        with pytest.raises(DomainError):
            norm(lp(1.0, 3), [1.0, 2.0])
        with pytest.raises(DomainError):
            vector(lp(1.0, 3), [1.0, 2.0])


class TestParse:
    def test_round_trips(self):
        assert parse_lattice("lp:0.5:4").describe() == "lp:0.5:4"
        assert parse_lattice("wlp:1:4:1,2,3,4").weights == (1.0, 2.0, 3.0, 4.0)
        assert parse_lattice("linf:4").family == "linf"
        s = parse_lattice("sub:0.5:3")
        assert s.family == "sub" and s.pathology_space.n == 3

    def test_errors(self):
        for bad in ("lp:0:4", "lp:1", "wlp:1:2:1", "wlp:1:2:1,-1", "lq:1:2", "sub:1:3"):
            with pytest.raises(DescriptorError):
                parse_lattice(bad)


class TestLatticeOps:
    def test_abs_join_meet(self):
        space = lp(1.0, 2)
        x = vector(space, [-1.0, 2.0])
        y = vector(space, [0.0, 1.0])
        assert np.array_equal(abs_vector(x).entries, [1.0, 2.0])
        assert np.array_equal(join(x, y).entries, [0.0, 2.0])
        assert np.array_equal(meet(x, y).entries, [-1.0, 1.0])

    def test_standard_examples(self):
        space = lp(1.0, 2)
        a = vector(space, [1.0, 0.0])
        b = vector(space, [0.0, 1.0])
        assert np.array_equal(join(a, b).entries, [1.0, 1.0])
        assert np.array_equal(meet(a, b).entries, [0.0, 0.0])

    def test_dim_mismatch(self):
        with pytest.raises(DomainError):
            join(vector(lp(1.0, 2), [1, 2]), vector(lp(1.0, 3), [1, 2, 3]))


class TestKrivine:
    def test_power_half(self):
        space = lp(1.0, 2)
        out = krivine_apply(power(0.5), vector(space, [4.0, 1.0]), vector(space, [1.0, 4.0]))
        np.testing.assert_allclose(out.entries, [2.0, 2.0], rtol=1e-15)

    def test_min(self):
        space = lp(1.0, 2)
        out = krivine_apply(min_function(), vector(space, [1.0, 3.0]), vector(space, [2.0, 2.0]))
        np.testing.assert_allclose(out.entries, [1.0, 2.0], rtol=1e-15)

    def test_diagonal_homogeneity(self):
        space = lp(2.0, 3)
        x = vector(space, [1.0, 2.0, 3.0])
        out = krivine_apply(harmonic(), x, x)
        np.testing.assert_allclose(out.entries, 0.5 * x.entries, rtol=1e-15)

    def test_scaling(self):
        space = lp(2.0, 3)
        rng = np.random.default_rng(31)
        x0 = vector(space, rng.uniform(0.1, 2.0, 3))
        x1 = vector(space, rng.uniform(0.1, 2.0, 3))
        lam = 3.5
        a = krivine_apply(power(0.3), vector(space, lam * x0.entries), vector(space, lam * x1.entries))
        b = krivine_apply(power(0.3), x0, x1)
        np.testing.assert_allclose(a.entries, lam * b.entries, rtol=1e-14)

    def test_rejects_negative(self):
        space = lp(1.0, 2)
        with pytest.raises(DomainError):
            krivine_apply(power(0.5), vector(space, [-1.0, 1.0]), vector(space, [1.0, 1.0]))


class TestRiesz:
    def test_tiny_example(self):
        space = lp(1.0, 2)
        z = vector(space, [1.0, -1.0])
        u = vector(space, [1.0, 0.0])
        v = vector(space, [0.0, 1.0])
        [(u1, v1)] = riesz_decompose([z], u, v)
        np.testing.assert_allclose(u1.entries, [1.0, 0.0])
        np.testing.assert_allclose(v1.entries, [0.0, -1.0])

    def test_mass_on_one_side(self):
        space = lp(1.0, 2)
        z = vector(space, [1.0, 0.0])
        u = vector(space, [2.0, 0.0])
        v = vector(space, [0.0, 0.0])
        pairs = riesz_decompose([z, z], u, v)
        for ui, vi in pairs:
            np.testing.assert_allclose(ui.entries, [1.0, 0.0])
            np.testing.assert_allclose(vi.entries, [0.0, 0.0])

    def test_factor_bounds_random(self):
        rng = np.random.default_rng(41)
        space = lp(1.0, 4)
        for _ in range(300):
            u = vector(space, rng.uniform(0.0, 2.0, 4))
            v = vector(space, rng.uniform(0.0, 2.0, 4))
            k = int(rng.integers(1, 5))
            w = rng.dirichlet(np.ones(k)) * 0.98
            signs = rng.choice([-1.0, 1.0], size=(k, 4))
            zs = [vector(space, w[i] * (u.entries + v.entries) * signs[i]) for i in range(k)]
            pairs = riesz_decompose(zs, u, v)
            su = np.sum([np.abs(ui.entries) for ui, _ in pairs], axis=0)
            sv = np.sum([np.abs(vi.entries) for _, vi in pairs], axis=0)
            # factor-1 strengthening, coordinatewise
            assert np.all(su <= u.entries)
            assert np.all(sv <= v.entries)
            # the promised factor-2 contract, a fortiori
            assert np.all(su <= 2.0 * u.entries)
            assert np.all(sv <= 2.0 * v.entries)
            # recomposition to rounding (v_i is defined as z_i - u_i)
            for z, (ui, vi) in zip(zs, pairs):
                np.testing.assert_allclose(
                    ui.entries + vi.entries, z.entries, rtol=1e-15, atol=1e-15
                )

    def test_infeasible_names_coordinate(self):
        space = lp(1.0, 3)
        z = vector(space, [1.0, 5.0, 0.0])
        u = vector(space, [1.0, 1.0, 1.0])
        v = vector(space, [1.0, 1.0, 1.0])
        with pytest.raises(InfeasibleDecompositionError) as err:
            riesz_decompose([z], u, v)
        assert err.value.coordinate == 1

    def test_rejects_negative_dominators(self):
        space = lp(1.0, 2)
        with pytest.raises(DomainError):
            riesz_decompose(
                [vector(space, [0.0, 0.0])],
                vector(space, [-1.0, 1.0]),
                vector(space, [1.0, 1.0]),
            )

    def test_empty_input(self):
        space = lp(1.0, 2)
        assert riesz_decompose([], vector(space, [1.0, 1.0]), vector(space, [1.0, 1.0])) == []
