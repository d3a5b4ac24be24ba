"""
Tests for the closed-form disk design.
"""

import math
import unittest

import numpy as np
from scipy import integrate

from composite_design.core.fields.base import ScalarField
from composite_design.core.fields.types import StorageKind
from composite_design.core.geometry.base import DomainSpec
from composite_design.core.geometry.primitives import build_mesh
from composite_design.diagnostics.oracle import radial_oracle
from composite_design.material.base import MaterialModel
from composite_design.material.types import MaterialError
from composite_design.solver.state import minimize_state


class TestRadialOracle(unittest.TestCase):
    def setUp(self):
        self.model = MaterialModel(1, 2, 2, math.pi / 2)
        self.oracle = radial_oracle(1.0, self.model, 2.0)

    def test_examples(self):
        oracle = self.oracle
        self.assertAlmostEqual(oracle.f_tilde, 1.0)
        self.assertAlmostEqual(oracle.r0, math.sqrt(0.5))
        self.assertAlmostEqual(oracle.t_hat, math.sqrt(0.5) / 2)
        self.assertAlmostEqual(oracle.mu_hat, oracle.t_hat)
        np.testing.assert_array_equal(oracle.theta([0.5, 0.8]), [0.0, 1.0])
        self.assertAlmostEqual(oracle.primal_energy(), -0.109375 * math.pi)

    def test_invalid(self):
        with self.assertRaises(MaterialError):
            radial_oracle(1.0, MaterialModel(1, 2, 2, math.pi), 1.0)
        with self.assertRaises(ValueError):
            radial_oracle(1.0, self.model, 0.0)
        with self.assertRaises(ValueError):
            radial_oracle(-1.0, self.model, 1.0)

    def test_state_profile(self):
        oracle = self.oracle
        self.assertEqual(oracle.u(1.0), 0.0)
        r = np.linspace(0.0, 1.0, 101)
        self.assertTrue(np.all(np.diff(oracle.u(r)) < 0))
        center, _ = integrate.quad(oracle.grad_u_magnitude, 0.0, 1.0, points=[oracle.r0])
        self.assertAlmostEqual(oracle.u(0.0), center, places=10)

    def test_energies_against_quadrature(self):
        model = MaterialModel(1, 3, 3, 1.0)
        oracle = radial_oracle(1.5, model, 1.0)
        q = model.p_conj

        def density(r):
            return ((1.0 + model.c * oracle.theta(r)) * oracle.sigma_magnitude(r) ** q
                    * 2.0 * math.pi * r / q)

        dual, _ = integrate.quad(density, 0.0, 1.5, points=[oracle.r0])
        self.assertAlmostEqual(oracle.dual_energy(), dual, places=10)
        self.assertEqual(oracle.primal_energy(), -oracle.dual_energy())

    def test_sample(self):
        mesh = build_mesh(DomainSpec.disk(0, 0, 1, 0.2))
        u, theta, sigma = self.oracle.sample(mesh)
        self.assertTrue(u.is_nodal)
        self.assertTrue(u.dirichlet)
        self.assertEqual(theta.values.shape, (mesh.n_elements,))
        self.assertEqual(sigma.values.shape, (mesh.n_elements, 2))
        np.testing.assert_array_equal(u.values[mesh.boundary_nodes], 0.0)

    def test_discrete_state_energy(self):
        """The state at the oracle design has the oracle energy."""
        mesh = build_mesh(DomainSpec.disk(0, 0, 1, 0.05))
        _, theta, _ = self.oracle.sample(mesh)
        f_tilde = ScalarField.constant(mesh, self.oracle.f_tilde, StorageKind.NODAL)
        result = minimize_state(theta, f_tilde, self.model)
        expected = self.oracle.primal_energy()
        self.assertLess(abs(result.energy - expected), 0.05 * abs(expected))


if __name__ == '__main__':
    unittest.main()
