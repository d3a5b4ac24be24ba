"""
Tests for discrete fields, discrete calculus and field transfer.
"""

import unittest

import numpy as np

from composite_design.core.fields.base import ScalarField, VectorField
from composite_design.core.fields.types import FieldError, StorageKind
from composite_design.core.geometry.base import DomainSpec, unique_edges
from composite_design.core.geometry.primitives import build_mesh, refine
from composite_design.core.operations.calculus import (gradient, integrate, integrate_product,
                                                       load_vector, lp_norm, lumped_weights,
                                                       recover_nodal, recovered_gradient,
                                                       to_element)
from composite_design.core.operations.transfer import transfer_element, transfer_nodal


def unit_square(h=0.125):
    return build_mesh(DomainSpec.rectangle(0, 1, 0, 1, h))


class TestScalarField(unittest.TestCase):
    def setUp(self):
        self.mesh = unit_square(0.25)

    def test_wrong_length(self):
        with self.assertRaises(FieldError):
            ScalarField.nodal(self.mesh, np.zeros(self.mesh.n_nodes + 1))
        with self.assertRaises(FieldError):
            ScalarField.element(self.mesh, np.zeros(self.mesh.n_nodes))

    def test_dirichlet_violation(self):
        """A Dirichlet-tagged field must vanish on the boundary."""
        with self.assertRaises(FieldError):
            ScalarField.nodal(self.mesh, np.ones(self.mesh.n_nodes), dirichlet=True)
        values = np.zeros(self.mesh.n_nodes)
        values[self.mesh.interior_nodes] = 1.0
        field = ScalarField.nodal(self.mesh, values, dirichlet=True)
        self.assertTrue(field.dirichlet)

    def test_values_are_snapshots(self):
        values = np.zeros(self.mesh.n_elements)
        field = ScalarField.element(self.mesh, values)
        values[0] = 1.0
        self.assertEqual(field.values[0], 0.0)
        with self.assertRaises(ValueError):
            field.values[0] = 1.0

    def test_arithmetic(self):
        a = ScalarField.constant(self.mesh, 1.0)
        b = ScalarField.constant(self.mesh, 2.0)
        np.testing.assert_allclose((a + b).values, 3.0)
        np.testing.assert_allclose((2 * b - a).values, 3.0)
        with self.assertRaises(FieldError):
            a + ScalarField.constant(self.mesh, 1.0, StorageKind.NODAL)

    def test_vector_magnitude(self):
        v = VectorField.from_function(self.mesh, lambda x, y: (3.0, 4.0))
        np.testing.assert_allclose(v.magnitude().values, 5.0)
        with self.assertRaises(FieldError):
            VectorField(self.mesh, np.zeros((self.mesh.n_elements, 3)))


class TestCalculus(unittest.TestCase):
    def setUp(self):
        self.mesh = unit_square()

    def test_gradient_of_x(self):
        u = ScalarField.from_function(self.mesh, lambda x, y: x)
        np.testing.assert_allclose(gradient(u).values,
                                   np.tile([1.0, 0.0], (self.mesh.n_elements, 1)), atol=1e-12)

    def test_gradient_of_constant(self):
        u = ScalarField.constant(self.mesh, 7.0, StorageKind.NODAL)
        np.testing.assert_allclose(gradient(u).values, 0.0, atol=1e-12)

    def test_gradient_needs_nodal(self):
        with self.assertRaises(FieldError):
            gradient(ScalarField.constant(self.mesh, 1.0))

    def test_gradient_of_quadratic(self):
        """The x-derivative of x^2/2 is within h of the centroid x."""
        u = ScalarField.from_function(self.mesh, lambda x, y: 0.5 * x ** 2)
        error = np.abs(gradient(u).values[:, 0] - self.mesh.centroids[:, 0])
        self.assertLessEqual(error.max(), self.mesh.h)

    def test_integrate(self):
        self.assertAlmostEqual(integrate(ScalarField.constant(self.mesh, 1.0)), 1.0)
        self.assertAlmostEqual(integrate(ScalarField.constant(self.mesh, 0.3)), 0.3)
        self.assertAlmostEqual(integrate(np.full(self.mesh.n_elements, 2.0), self.mesh), 2.0)
        with self.assertRaises(FieldError):
            integrate(ScalarField.constant(self.mesh, 1.0, StorageKind.NODAL))

    def test_lumped_load(self):
        self.assertAlmostEqual(lumped_weights(self.mesh).sum(), 1.0)
        f = ScalarField.constant(self.mesh, 2.0, StorageKind.NODAL)
        self.assertAlmostEqual(load_vector(f).sum(), 2.0)
        u = ScalarField.constant(self.mesh, 1.5, StorageKind.NODAL)
        self.assertAlmostEqual(integrate_product(f, u), 3.0)

    def test_recovery(self):
        constant = np.full(self.mesh.n_elements, 0.7)
        np.testing.assert_allclose(recover_nodal(constant, self.mesh), 0.7)
        np.testing.assert_allclose(recovered_gradient(constant, self.mesh), 0.0, atol=1e-12)
        vectors = np.tile([1.0, -2.0], (self.mesh.n_elements, 1))
        jacobians = recovered_gradient(vectors, self.mesh)
        self.assertEqual(jacobians.shape, (self.mesh.n_elements, 2, 2))

    def test_lp_norm(self):
        values = np.tile([3.0, 4.0], (self.mesh.n_elements, 1))
        self.assertAlmostEqual(lp_norm(values, self.mesh, 2.0), 5.0)
        self.assertAlmostEqual(lp_norm(np.full(self.mesh.n_elements, -2.0), self.mesh, 3.0), 2.0)

    def test_to_element(self):
        u = ScalarField.from_function(self.mesh, lambda x, y: x + y)
        averaged = to_element(u)
        np.testing.assert_allclose(averaged.values, self.mesh.centroids.sum(axis=1))


class TestTransfer(unittest.TestCase):
    def test_linear_field_is_transferred_exactly(self):
        mesh = unit_square(0.25)
        fine = refine(mesh)
        u = ScalarField.from_function(mesh, lambda x, y: 1.0 + x + 2.0 * y)
        moved = transfer_nodal(u, fine)
        expected = 1.0 + fine.nodes[:, 0] + 2.0 * fine.nodes[:, 1]
        interior = fine.interior_nodes
        np.testing.assert_allclose(moved.values[interior], expected[interior], atol=1e-12)

    def test_values_follow_source_triangles(self):
        """Midpoints of source edges get the mean of the edge ends, also across a notch."""
        domains = (DomainSpec.rectangle(0, 1, 0, 1, 0.25),
                   DomainSpec.polygon([(0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2)], 0.25))
        for domain in domains:
            mesh = build_mesh(domain)
            fine = refine(mesh)
            u = ScalarField.from_function(mesh, lambda x, y: x * y + np.sin(3 * x))
            moved = transfer_nodal(u, fine)
            np.testing.assert_allclose(moved.values[:mesh.n_nodes], u.values, atol=1e-12)
            edges = unique_edges(mesh.elements, mesh.n_nodes)[0]
            np.testing.assert_allclose(moved.values[mesh.n_nodes:], u.values[edges].mean(axis=1),
                                       atol=1e-12)

    def test_dirichlet_tag_survives(self):
        mesh = unit_square(0.25)
        u = ScalarField.from_function(mesh, lambda x, y: x * (1 - x) * y * (1 - y)).with_dirichlet()
        moved = transfer_nodal(u, refine(mesh))
        self.assertTrue(moved.dirichlet)
        np.testing.assert_allclose(moved.values[moved.mesh.boundary_nodes], 0.0)

    def test_element_transfer_stays_in_range(self):
        mesh = unit_square(0.25)
        theta = ScalarField.element(mesh, (mesh.centroids[:, 0] > 0.5).astype(float))
        moved = transfer_element(theta, unit_square(0.1))
        self.assertGreaterEqual(moved.values.min(), 0.0)
        self.assertLessEqual(moved.values.max(), 1.0)


if __name__ == '__main__':
    unittest.main()
