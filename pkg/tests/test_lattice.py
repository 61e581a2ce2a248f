import numpy as np
import pytest

from hopfion.lattice import (
    Grid,
    LatticeField,
    d,
    integrate_3form,
    l2_inner,
    l2_norm,
    wedge,
)


def random_field(grid, degree, vdim, rng):
    from hopfion.lattice import SLOT_COUNT

    n = grid.n
    return LatticeField(grid, degree, rng.standard_normal((n, n, n, SLOT_COUNT[degree], vdim)))


class TestGrid:
    def test_spacing(self):
        g = Grid(16, 4.0)
        assert g.h == 0.25

    def test_validation(self):
        with pytest.raises(ValueError):
            Grid(3)
        with pytest.raises(ValueError):
            Grid(8, -1.0)


class TestExteriorDerivative:
    def test_constant_is_closed(self, grid12):
        f = LatticeField(grid12, 0, np.ones((12, 12, 12, 1, 2)))
        assert np.max(np.abs(d(f).data)) == 0.0

    def test_dd_zero(self, grid12, rng):
        for degree in (0, 1):
            f = random_field(grid12, degree, 3, rng)
            assert np.max(np.abs(d(d(f)).data)) < 1e-12

    def test_three_form_rejected(self, grid12, rng):
        with pytest.raises(ValueError):
            d(random_field(grid12, 3, 1, rng))

    def test_sin_derivative_first_order(self):
        errs = {}
        for n in (16, 32, 64):
            grid = Grid(n)
            x = grid.site_coords()[..., 0]
            f = LatticeField(grid, 0, np.sin(2 * np.pi * x / grid.length)[..., None, None])
            df = d(f)
            exact = (2 * np.pi / grid.length) * np.cos(2 * np.pi * x / grid.length)
            errs[n] = float(np.max(np.abs(df.slot(0)[..., 0] - exact)))
        assert errs[64] < errs[32] < errs[16]
        order = np.polyfit(np.log([Grid(n).h for n in errs]), np.log(list(errs.values())), 1)[0]
        assert order >= 0.9

    def test_leibniz_first_order(self):
        errs = {}
        for n in (16, 32, 64):
            grid = Grid(n)
            x = grid.site_coords()
            k = 2 * np.pi / grid.length
            f = (np.sin(k * x[..., 0]) * np.cos(k * x[..., 1]))[..., None, None]
            g = np.cos(k * (x[..., 0] + x[..., 2]) + 0.3)[..., None, None]
            ff = LatticeField(grid, 0, f)
            gg = LatticeField(grid, 0, g)
            fg = LatticeField(grid, 0, f * g)
            defect = d(fg) - (wedge(d(ff), gg, "scalar") + wedge(ff, d(gg), "scalar"))
            errs[n] = l2_norm(defect)
        order = np.polyfit(np.log([Grid(n).h for n in errs]), np.log(list(errs.values())), 1)[0]
        assert order >= 0.9


class TestWedge:
    def test_wedge_with_zero(self, grid12, rng):
        a = random_field(grid12, 1, 3, rng)
        z = LatticeField.zeros(grid12, 1, 3)
        assert np.max(np.abs(wedge(a, z, "cross").data)) == 0.0

    def test_constant_single_slot(self, grid12):
        # xi dx^1 wedge eta dx^2 has only the (x, y) slot, value = xi * eta
        xi = np.array([0.0, 0.3, -0.2, 0.5])
        eta = np.array([0.0, 0.1, 0.7, -0.4])
        n = grid12.n
        a = np.zeros((n, n, n, 3, 4))
        b = np.zeros((n, n, n, 3, 4))
        a[:, :, :, 0] = xi
        b[:, :, :, 1] = eta
        w = wedge(LatticeField(grid12, 1, a), LatticeField(grid12, 1, b), "quat")
        from hopfion.algebra import qmul

        assert np.allclose(w.slot(0), qmul(xi, eta))
        assert np.max(np.abs(w.slot(1))) == 0.0
        assert np.max(np.abs(w.slot(2))) == 0.0

    def test_self_wedge_is_half_bracket(self, grid12, rng):
        a = random_field(grid12, 1, 3, rng)
        w_quat = wedge(a, a, "quat")
        w_bracket = wedge(a, a, "bracket")
        assert np.max(np.abs(w_quat.data[..., 0])) < 1e-13        # no scalar part
        assert np.max(np.abs(w_quat.data[..., 1:] - 0.5 * w_bracket.data)) < 1e-12

    def test_antisymmetry_for_symmetric_product(self, grid12, rng):
        a = random_field(grid12, 1, 3, rng)
        b = random_field(grid12, 1, 3, rng)
        lhs = wedge(a, b, "dot")
        rhs = wedge(b, a, "dot")
        assert np.max(np.abs(lhs.data + rhs.data)) < 1e-12

    def test_degree_overflow_rejected(self, grid12, rng):
        a = random_field(grid12, 2, 1, rng)
        b = random_field(grid12, 2, 1, rng)
        with pytest.raises(ValueError):
            wedge(a, b, "scalar")


class TestIntegration:
    def test_inner_zero_and_constant(self, grid12):
        c = 1.7
        f = LatticeField(grid12, 0, np.full((12, 12, 12, 1, 1), c))
        z = LatticeField.zeros(grid12, 0, 1)
        assert l2_inner(z, f) == 0.0
        assert np.isclose(l2_inner(f, f), c * c * grid12.length ** 3, rtol=1e-13)

    def test_positivity(self, grid12, rng):
        a = random_field(grid12, 1, 3, rng)
        assert l2_inner(a, a) > 0.0
        z = LatticeField.zeros(grid12, 1, 3)
        assert l2_inner(z, z) == 0.0

    def test_shape_mismatch(self, grid12, rng):
        a = random_field(grid12, 1, 3, rng)
        b = random_field(grid12, 1, 4, rng)
        with pytest.raises(ValueError):
            l2_inner(a, b)

    def test_volume(self, grid12):
        one = LatticeField(grid12, 3, np.ones((12, 12, 12, 1, 1)))
        assert np.isclose(integrate_3form(one), grid12.length ** 3, rtol=1e-13)

    def test_exact_forms_integrate_to_zero(self, grid12, rng):
        beta = random_field(grid12, 2, 1, rng)
        scale = float(np.max(np.abs(beta.data)))
        assert abs(integrate_3form(d(beta))) < 1e-10 * scale

    def test_requires_3form(self, grid12, rng):
        with pytest.raises(ValueError):
            integrate_3form(random_field(grid12, 2, 1, rng))


def test_fields_immutable(grid12, rng):
    f = random_field(grid12, 1, 3, rng)
    with pytest.raises(ValueError):
        f.data[0, 0, 0, 0, 0] = 1.0
    with pytest.raises(AttributeError):
        f.degree = 2


def test_field_rejects_nan(grid12):
    data = np.zeros((12, 12, 12, 1, 1))
    data[0, 0, 0] = np.nan
    with pytest.raises(ValueError):
        LatticeField(grid12, 0, data)
