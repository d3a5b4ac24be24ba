"""
Tests for periodic layer profiles and the laminate construction.
"""

import unittest

import numpy as np

from composite_design.core.fields.base import ScalarField
from composite_design.core.geometry.base import DomainSpec
from composite_design.core.geometry.primitives import build_mesh
from composite_design.lamination.laminate import (LaminateSpec, build_laminate,
                                                  cell_limit_energy, check_resolution,
                                                  corrector_bound, cube_averages,
                                                  homogenized_energy, laminate_convergence,
                                                  laminate_energy, laminate_spec_from_fields,
                                                  layer_fraction, partition_gradients,
                                                  partition_of_unity, resolved_laminate_energy)
from composite_design.lamination.profiles import G_eval, H_eval
from composite_design.lamination.types import LaminationError
from composite_design.material.base import MaterialModel


def square(n):
    """Unit square with n cells per side."""
    return build_mesh(DomainSpec.rectangle(0, 1, 0, 1, 1.0 / n))


class TestProfiles(unittest.TestCase):
    def test_examples(self):
        self.assertEqual(H_eval(0.5, 0.25), 1.0)
        self.assertEqual(H_eval(0.5, 0.75), 0.0)
        self.assertAlmostEqual(G_eval(0.5, 0.5), -0.25)
        self.assertAlmostEqual(G_eval(0.5, 1.0), 0.0)
        self.assertAlmostEqual(G_eval(0.3, 0.0), 0.0)

    def test_periodicity_and_bounds(self):
        # Offset keeps samples away from the layer edges
        r = np.linspace(-3.0, 3.0, 6001) + 2.5e-4
        for q in (0.0, 0.2, 0.5, 0.9, 1.0):
            np.testing.assert_allclose(H_eval(q, r + 1.0), H_eval(q, r))
            np.testing.assert_allclose(G_eval(q, r + 2.0), G_eval(q, r), atol=1e-12)
            g = G_eval(q, r)
            self.assertTrue(np.all(g <= 1e-15))
            self.assertTrue(np.all(g >= q * (q - 1.0) - 1e-15))

    def test_mean_of_h(self):
        r = (np.arange(10000) + 0.5) / 10000
        self.assertAlmostEqual(float(np.mean(H_eval(0.37, r))), 0.37, places=3)

    def test_invalid_proportion(self):
        with self.assertRaises(ValueError):
            H_eval(1.5, 0.2)
        with self.assertRaises(ValueError):
            G_eval(-0.1, 0.2)


class TestLaminateSpec(unittest.TestCase):
    def setUp(self):
        self.mesh = square(16)
        self.theta = ScalarField.element(self.mesh, self.mesh.centroids[:, 0])
        self.u = ScalarField.from_function(self.mesh, lambda x, y: x + 2 * y)

    def test_from_fields(self):
        spec = laminate_spec_from_fields(self.theta, self.u, 0.5, 0.1)
        self.assertEqual(spec.shape, (2, 2))
        self.assertEqual(spec.n_cubes, 4)
        np.testing.assert_allclose(spec.q, [0.25, 0.75, 0.25, 0.75])
        np.testing.assert_allclose(spec.xi, np.tile([1.0, 2.0], (4, 1)), atol=1e-12)
        np.testing.assert_allclose(spec.zeta, np.tile([1.0, 2.0], (4, 1)) / np.sqrt(5.0))
        np.testing.assert_array_equal(spec.locate(np.array([[0.1, 0.1], [0.9, 0.6]])), [0, 3])

    def test_fallback_direction(self):
        flat = ScalarField.from_function(self.mesh, lambda x, y: 0.0 * x)
        spec = laminate_spec_from_fields(self.theta, flat, 0.5, 0.1, fallback_direction=(0, 2))
        np.testing.assert_allclose(spec.zeta, np.tile([0.0, 1.0], (4, 1)))

    def test_invalid(self):
        with self.assertRaises(LaminationError):
            laminate_spec_from_fields(self.theta, self.u, 0.0, 0.1)
        with self.assertRaises(LaminationError):
            laminate_spec_from_fields(self.u, self.u, 0.5, 0.1)
        with self.assertRaises(LaminationError):
            LaminateSpec((0.0, 0.0), 1.0, (1, 1), np.array([0.5]), np.zeros((1, 2)),
                         np.array([[2.0, 0.0]]), 0.1)

    def test_partition_of_unity(self):
        spec = laminate_spec_from_fields(self.theta, self.u, 0.25, 0.1)
        points = np.random.default_rng(0).uniform(0, 1, (500, 2))
        cubes, weights = partition_of_unity(spec, points)
        np.testing.assert_allclose(weights.sum(axis=1), 1.0)
        self.assertTrue(np.all(weights >= 0))
        self.assertTrue(np.all(weights[cubes < 0] == 0))

    def test_blend_band(self):
        spec = laminate_spec_from_fields(self.theta, self.u, 0.25, 0.04)
        self.assertAlmostEqual(spec.margin, 0.1)
        self.assertAlmostEqual(spec.with_epsilon(0.5).margin, 0.25)
        # Cube centres lie outside every blend band
        cubes, weights = partition_of_unity(spec, np.array([[0.125, 0.125], [0.625, 0.375]]))
        np.testing.assert_array_equal(cubes[:, 4], [0, 6])
        np.testing.assert_allclose(weights[:, 4], 1.0)

    def test_partition_gradients(self):
        spec = laminate_spec_from_fields(self.theta, self.u, 0.25, 0.04)
        points = np.random.default_rng(3).uniform(0.01, 0.99, (400, 2))
        gradients = partition_gradients(spec, points)
        np.testing.assert_allclose(gradients.sum(axis=1), 0.0, atol=1e-9)
        step = 1e-7
        for axis in range(2):
            shift = np.zeros(2)
            shift[axis] = step
            ahead, behind = spec.locate(points + shift), spec.locate(points - shift)
            keep = (ahead == spec.locate(points)) & (behind == ahead)
            _, forward = partition_of_unity(spec, points[keep] + shift)
            _, backward = partition_of_unity(spec, points[keep] - shift)
            np.testing.assert_allclose((forward - backward) / (2 * step),
                                       gradients[keep, :, axis], atol=1e-4)

    def test_coefficients(self):
        spec = LaminateSpec((0.0, 0.0), 1.0, (1, 1), np.array([0.5]), np.array([[1.0, 0.0]]),
                            np.array([[1.0, 0.0]]), 0.1)
        np.testing.assert_allclose(spec.coefficients(MaterialModel(1, 3, 2, 0.5)), [-1.0])


class TestBuildLaminate(unittest.TestCase):
    def test_aligned_layers(self):
        """Layers aligned with the mesh reproduce the homogenized energy exactly."""
        model = MaterialModel(1, 3, 2, 0.5)
        mesh = square(384)
        theta = ScalarField.constant(mesh, 0.5)
        u = ScalarField.from_function(mesh, lambda x, y: x)
        spec = laminate_spec_from_fields(theta, u, 1.0, 1.0 / 32)
        chi, u_corr = build_laminate(spec, u, model)
        self.assertAlmostEqual(float(np.dot(mesh.areas, chi.values)), 0.5, delta=1e-12)
        self.assertAlmostEqual(laminate_energy(chi, u_corr, model), 1.5, delta=1e-10)
        self.assertAlmostEqual(resolved_laminate_energy(spec, u, model), 1.5, delta=1e-10)
        self.assertAlmostEqual(homogenized_energy(theta, u, model), 1.5, delta=1e-10)
        averages, q = cube_averages(spec, chi)
        np.testing.assert_allclose(averages, q, atol=1e-12)
        # Alpha layers carry the steeper gradient 1.5, beta layers 0.5
        g = mesh.element_gradients(u_corr.values)[:, 0]
        np.testing.assert_allclose(g[chi.values == 1.0], 1.5, atol=1e-9)
        np.testing.assert_allclose(g[chi.values == 0.0], 0.5, atol=1e-9)

    def test_pure_phases(self):
        """q = 0 and q = 1 give a single phase and no correction."""
        model = MaterialModel(1, 2, 2, 0.5)
        mesh = square(64)
        u = ScalarField.from_function(mesh, lambda x, y: x * (1 - x) + y)
        for q in (0.0, 1.0):
            theta = ScalarField.constant(mesh, q)
            spec = laminate_spec_from_fields(theta, u, 0.5, 0.25)
            chi, u_corr = build_laminate(spec, u, model)
            np.testing.assert_array_equal(chi.values, q)
            np.testing.assert_allclose(u_corr.values, u.values, atol=1e-15)

    def test_corrector_bound(self):
        model = MaterialModel(1, 2, 3, 0.5)
        mesh = square(64)
        theta = ScalarField.constant(mesh, 0.3)
        u = ScalarField.from_function(mesh, lambda x, y: x ** 2 + y)
        spec = laminate_spec_from_fields(theta, u, 0.5, 0.25)
        _, u_corr = build_laminate(spec, u, model)
        difference = np.max(np.abs(u_corr.values - u.values))
        self.assertGreater(difference, 0.0)
        self.assertLessEqual(difference, corrector_bound(spec, model) + 1e-12)

    def test_mesh_too_coarse(self):
        mesh = square(8)
        theta = ScalarField.constant(mesh, 0.5)
        u = ScalarField.from_function(mesh, lambda x, y: x)
        spec = laminate_spec_from_fields(theta, u, 0.5, 0.1)
        with self.assertRaises(LaminationError) as context:
            build_laminate(spec, u, MaterialModel(1, 2, 2, 0.5))
        self.assertAlmostEqual(context.exception.required_h, 0.1 / 8)
        with self.assertRaises(LaminationError):
            check_resolution(mesh, 0.1)
        check_resolution(mesh, 2.0)


class TestLayerFraction(unittest.TestCase):
    def test_closed_forms(self):
        phases = np.array([[0.1, 0.2, 0.15], [0.6, 0.7, 0.8], [0.0, 0.0, 1.0], [0.0, 1.0, 1.0],
                           [0.25, 0.25, 0.25]])
        np.testing.assert_allclose(layer_fraction(phases, np.full(5, 0.5)),
                                   [1.0, 0.0, 0.75, 0.25, 1.0], atol=1e-15)

    def test_pure_proportions(self):
        phases = np.random.default_rng(4).uniform(-3.0, 3.0, (50, 3))
        np.testing.assert_allclose(layer_fraction(phases, np.zeros(50)), 0.0, atol=1e-12)
        np.testing.assert_allclose(layer_fraction(phases, np.ones(50)), 1.0, atol=1e-12)

    def test_matches_sampling(self):
        """Triangles spanning several periods against uniform samples."""
        rng = np.random.default_rng(5)
        r1, r2 = rng.uniform(size=(2, 400000))
        bary = np.column_stack([1 - np.sqrt(r1), np.sqrt(r1) * (1 - r2), np.sqrt(r1) * r2])
        for vertices, q in (([0.3, 2.9, 4.2], 0.37), ([-1.7, -1.2, 0.4], 0.8),
                            ([5.05, 5.3, 5.95], 0.5)):
            sampled = float(np.mean(H_eval(q, bary @ np.array(vertices))))
            exact = float(layer_fraction(np.array([vertices]), np.array([q]))[0])
            self.assertAlmostEqual(exact, sampled, delta=4e-3)


class TestResolvedEnergy(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.model = MaterialModel(1, 3, 2, 0.5)
        cls.mesh = square(384)
        cls.theta = ScalarField.constant(cls.mesh, 0.5)
        # Oblique layers: the gradient (1, 0.5) is not aligned with the mesh
        cls.u = ScalarField.from_function(cls.mesh, lambda x, y: x + 0.5 * y)

    def test_oblique_single_cube(self):
        """Homogenized value 1.5 * 1.25, up to the boundary layer deviation 0.16 epsilon^2."""
        spec = laminate_spec_from_fields(self.theta, self.u, 1.0, 1 / 8)
        self.assertAlmostEqual(homogenized_energy(self.theta, self.u, self.model), 1.875,
                               delta=1e-10)
        for epsilon in (1 / 8, 1 / 16, 1 / 32):
            energy = resolved_laminate_energy(spec.with_epsilon(epsilon), self.u, self.model)
            error = abs(energy - 1.875) / 1.875
            self.assertLessEqual(error, 0.16 * epsilon ** 2, epsilon)
        self.assertLess(error, 0.01)

    def test_pure_phases(self):
        mesh = square(64)
        u = ScalarField.from_function(mesh, lambda x, y: x * (1 - x) + y)
        for q in (0.0, 1.0):
            theta = ScalarField.constant(mesh, q)
            spec = laminate_spec_from_fields(theta, u, 0.5, 0.25)
            self.assertAlmostEqual(resolved_laminate_energy(spec, u, self.model),
                                   homogenized_energy(theta, u, self.model), places=12)

    def test_mesh_too_coarse(self):
        spec = laminate_spec_from_fields(self.theta, self.u, 1.0, 1 / 64)
        with self.assertRaises(LaminationError):
            resolved_laminate_energy(spec, self.u, self.model)


class TestConvergenceTable(unittest.TestCase):
    def test_rows(self):
        model = MaterialModel(1, 3, 2, 0.5)
        mesh = square(192)
        theta = ScalarField.constant(mesh, 0.5)
        u = ScalarField.from_function(mesh, lambda x, y: x)
        rows = laminate_convergence(theta, u, model, [1.0], [1 / 8, 1 / 16])
        self.assertEqual([(row.delta, row.epsilon) for row in rows], [(1.0, 0.125), (1.0, 0.0625)])
        for row in rows:
            self.assertLess(row.gap, 1e-9)
            self.assertAlmostEqual(row.cell_limit_energy, 1.5, delta=1e-10)
            self.assertAlmostEqual(row.homogenized_energy, 1.5, delta=1e-10)
            self.assertAlmostEqual(row.chi_area, 0.5, delta=1e-12)
            self.assertAlmostEqual(row.sampled_energy, 1.5, delta=1e-10)

    def test_oblique_rows(self):
        """Cube grids with equal layers blend coherently and keep the single-cube accuracy."""
        model = MaterialModel(1, 3, 2, 0.5)
        mesh = square(384)
        theta = ScalarField.constant(mesh, 0.5)
        u = ScalarField.from_function(mesh, lambda x, y: x + 0.5 * y)
        rows = laminate_convergence(theta, u, model, [1.0, 0.25], [1 / 16, 1 / 32])
        self.assertEqual(len(rows), 4)
        for row in rows:
            self.assertAlmostEqual(row.homogenized_energy, 1.875, delta=1e-10)
            self.assertAlmostEqual(row.cell_limit_energy, 1.875, delta=1e-10)
            self.assertLessEqual(row.gap, 0.16 * row.epsilon ** 2 + 1e-9)
            self.assertAlmostEqual(row.chi_area, 0.5, delta=0.01)
        finest = [row for row in rows if row.epsilon == 1 / 32]
        self.assertTrue(all(row.gap < 0.01 for row in finest))

    def test_cell_limit_of_affine_state(self):
        model = MaterialModel(1, 2, 3, 0.5)
        mesh = square(16)
        theta = ScalarField.constant(mesh, 0.4)
        u = ScalarField.from_function(mesh, lambda x, y: 2 * x - y)
        spec = laminate_spec_from_fields(theta, u, 0.5, 0.1)
        self.assertAlmostEqual(cell_limit_energy(spec, u, model),
                               homogenized_energy(theta, u, model), places=10)

    def test_unresolved_period(self):
        mesh = square(16)
        theta = ScalarField.constant(mesh, 0.5)
        u = ScalarField.from_function(mesh, lambda x, y: x)
        with self.assertRaises(LaminationError):
            laminate_convergence(theta, u, MaterialModel(1, 2, 2, 0.5), [0.5], [0.05])


if __name__ == '__main__':
    unittest.main()
