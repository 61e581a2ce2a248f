import numpy as np
import pytest

from conftest import smooth_cp1_map, smooth_lift
from hopfion import algebra as alg
from hopfion import fields as fl
from hopfion.energy import comm_wedge
from hopfion.gauge import (
    ad_inverse_apply,
    coset_curvature,
    gauge_smooth,
    gauge_transform_potential,
    identity_suite,
    make_stabilizer,
    project_perp,
    smooth_algebra_field,
    smooth_scalar,
    stabilizer_log_derivative,
)
from hopfion.lattice import Grid, LatticeField, l2_norm


def isotropic_potential(grid, phi, rng, amplitude=0.6):
    slots = [smooth_scalar(grid, rng, amplitude)[..., None] * phi.values for _ in range(3)]
    return fl.PotentialField(LatticeField.from_slots(grid, 1, slots), phi)


class TestStabilizers:
    def test_zero_angle_is_identity(self, grid16):
        stab = make_stabilizer(fl.constant_map(grid16), 0.0)
        assert np.allclose(stab.w.values, [1.0, 0.0, 0.0, 0.0])

    def test_pi_angle_is_center(self, grid16):
        phi = fl.constant_map(grid16)
        stab = make_stabilizer(phi, np.pi)
        assert np.allclose(stab.w.values, [-1.0, 0.0, 0.0, 0.0], atol=1e-15)
        assert stab.stabilization_defect() < 1e-12

    def test_smooth_angle_stabilizes_exactly(self, grid16):
        phi = fl.constant_map(grid16)
        x2 = grid16.site_coords()[..., 1]
        stab = make_stabilizer(phi, np.sin(2 * np.pi * x2 / grid16.length))
        assert stab.stabilization_defect() < 1e-12
        # values lie in the unit-complex subgroup: no j, k components
        assert np.max(np.abs(stab.w.values[..., 2:])) < 1e-15

    def test_nonconstant_reference(self, grid16, rng):
        phi = smooth_cp1_map(grid16, rng, amplitude=0.4)
        stab = make_stabilizer(phi, smooth_scalar(grid16, rng, 0.8))
        assert stab.stabilization_defect() < 1e-12


class TestGaugeAction:
    def test_identity_transformation(self, grid16, rng):
        phi = fl.constant_map(grid16)
        b = isotropic_potential(grid16, phi, rng)
        stab = make_stabilizer(phi, 0.0)
        bw = gauge_transform_potential(b, stab, phi)
        assert np.max(np.abs(bw.a.data - b.a.data)) < 1e-14

    def test_requires_isotropic_input(self, grid16, rng):
        phi = fl.constant_map(grid16)
        data = np.stack([smooth_algebra_field(grid16, rng, 0.5) for _ in range(3)], axis=3)
        bad = fl.PotentialField(LatticeField(grid16, 1, data), phi)
        stab = make_stabilizer(phi, smooth_scalar(grid16, rng, 0.5))
        with pytest.raises(ValueError):
            gauge_transform_potential(bad, stab, phi)

    def test_result_isotropic_for_constant_reference(self, grid16, rng):
        phi = fl.constant_map(grid16)
        b = isotropic_potential(grid16, phi, rng)
        stab = make_stabilizer(phi, smooth_scalar(grid16, rng, 0.7))
        bw = gauge_transform_potential(b, stab, phi)
        par, perp = bw.split()
        assert np.max(np.abs(perp.data)) < 1e-10 * max(np.max(np.abs(bw.a.data)), 1.0)

    def test_zero_potential_formula(self, rng):
        # b = 0: b^w = w^-1 dw - (Ad(w^-1) - I) phi^*omega, which is the
        # isotropic part of the log derivative up to O(h)
        rel = []
        for n in (16, 32):
            grid = Grid(n)
            local = np.random.default_rng(5)
            phi = smooth_cp1_map(grid, local, amplitude=0.25)
            stab = make_stabilizer(phi, smooth_scalar(grid, local, 0.5))
            zero = fl.PotentialField(LatticeField.zeros(grid, 1, 3), phi)
            bw = gauge_transform_potential(zero, stab, phi)
            dw = stabilizer_log_derivative(stab, scheme="log")
            par = dw - project_perp(dw, phi)
            rel.append(l2_norm(bw.a - par) / l2_norm(par))
        assert rel[1] < 0.65 * rel[0]

    def test_exact_scheme_matches_log_scheme_to_first_order(self, rng):
        rel = []
        for n in (16, 32):
            grid = Grid(n)
            local = np.random.default_rng(7)
            phi = smooth_cp1_map(grid, local, amplitude=0.25)
            stab = make_stabilizer(phi, smooth_scalar(grid, local, 0.5))
            lhs = stabilizer_log_derivative(stab, scheme="log")
            rhs = stabilizer_log_derivative(stab, scheme="exact")
            rel.append(l2_norm(lhs - rhs) / l2_norm(lhs))
        assert rel[1] < 0.65 * rel[0]


class TestCosetCurvature:
    def test_flat_trivial(self, grid16):
        phi = fl.constant_map(grid16)
        zero = fl.PotentialField(LatticeField.zeros(grid16, 1, 3), phi)
        F = coset_curvature(zero, phi)
        assert np.max(np.abs(F.data)) == 0.0

    def test_reference_curvature(self, grid16, rng):
        # F(0) = -(omega ^ omega)_par, assembled independently
        phi = smooth_cp1_map(grid16, rng, amplitude=0.4)
        zero = fl.PotentialField(LatticeField.zeros(grid16, 1, 3), phi)
        F = coset_curvature(zero, phi)
        omega = fl.pullback_coisotropy(phi)
        oo = comm_wedge(omega, phi.pair)
        expected = -(oo - project_perp(oo, phi)).data
        assert np.max(np.abs(F.data - expected)) < 1e-12

    def test_symmetric_pair_projection_free(self, grid16, rng):
        phi = smooth_cp1_map(grid16, rng, amplitude=0.4)
        omega = fl.pullback_coisotropy(phi)
        oo = comm_wedge(omega, phi.pair)
        assert l2_norm(project_perp(oo, phi)) < 1e-10 * l2_norm(oo)

    def test_curvature_equivariance_shared_inputs(self, grid16, rng):
        phi = fl.constant_map(grid16)
        b = isotropic_potential(grid16, phi, rng)
        stab = make_stabilizer(phi, smooth_scalar(grid16, rng, 0.6))
        lhs = coset_curvature(gauge_transform_potential(b, stab, phi), phi)
        rhs = ad_inverse_apply(stab.w, coset_curvature(b, phi))
        assert l2_norm(lhs - rhs) < 1e-8 * l2_norm(rhs)


class TestIdentitySuite:
    def test_small_sizes_pass(self):
        rows = identity_suite(sizes=(12, 16, 24), seed=0)
        names = {r.name for r in rows}
        assert "dafi_shared_inputs" in names
        assert "flat_derivative_ii_symmetric" in names
        failures = [r.name for r in rows if not r.passed]
        assert failures == []

    def test_classification(self):
        rows = identity_suite(sizes=(12, 16), seed=1)
        kinds = {r.name: r.kind for r in rows}
        assert kinds["dafi_shared_inputs"] == "pointwise"
        assert kinds["flat_curvature_i"] == "differential"
        for r in rows:
            if r.kind == "pointwise":
                assert r.fitted_order is None
                assert max(r.residuals.values()) < 1e-8
            else:
                assert r.fitted_order is not None


class TestGaugeSmooth:
    def test_zero_stays(self, grid12):
        phi = fl.constant_map(grid12)
        zero = fl.PotentialField(LatticeField.zeros(grid12, 1, 3), phi)
        stab = gauge_smooth(zero, phi, iterations=20)
        assert np.max(np.abs(stab.theta)) == 0.0
        assert stab.objective_history[-1] == 0.0

    def test_planted_solution_objective_drop(self, grid12, rng):
        phi = fl.constant_map(grid12)
        theta0 = smooth_scalar(grid12, rng, 0.6)
        planted = make_stabilizer(phi, theta0)
        b = fl.PotentialField(stabilizer_log_derivative(planted, scheme="log"), phi)
        par, _ = b.split()
        b = fl.PotentialField(par.map_values(lambda v: v), phi)
        stab = gauge_smooth(b, phi, iterations=400, step=0.5)
        hist = stab.objective_history
        assert hist[-1] <= 0.1 * hist[0]

    def test_monotone_objective(self, grid12, rng):
        phi = fl.constant_map(grid12)
        b = isotropic_potential(grid12, phi, rng)
        stab = gauge_smooth(b, phi, iterations=60)
        hist = stab.objective_history
        assert all(b <= a + 1e-15 for a, b in zip(hist, hist[1:]))
