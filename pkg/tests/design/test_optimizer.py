"""
Tests for the multiplier search, design recovery and the optimality checks.
"""

import math
import unittest
from dataclasses import replace

import numpy as np

from composite_design.core.fields.base import ScalarField
from composite_design.core.fields.types import StorageKind
from composite_design.core.geometry.base import DomainSpec
from composite_design.core.geometry.primitives import build_mesh
from composite_design.design.characterization import (kkt_residual, theta_for_budget,
                                                      theta_from_magnitudes, theta_from_u)
from composite_design.design.optimizer import (alternating_minimization, check_monotone,
                                               formulation_gap, kkt_energy, solve_design,
                                               volume_of_mu, volume_sweep)
from composite_design.design.types import DesignError
from composite_design.diagnostics.oracle import radial_oracle
from composite_design.material.base import MaterialModel
from composite_design.material.types import MaterialError
from composite_design.solver.state import state_energy
from composite_design.solver.types import SolveConfig


def unit_square(h=0.125):
    return build_mesh(DomainSpec.rectangle(0, 1, 0, 1, h))


class TestCharacterization(unittest.TestCase):
    def test_theta_from_magnitudes(self):
        np.testing.assert_allclose(theta_from_magnitudes([0.5, 1.5, 3.0], 1.0, 1.0),
                                   [0.0, 0.5, 1.0])
        # Ties: s = mu gives 0 and s = (1+c) mu gives 1
        np.testing.assert_allclose(theta_from_magnitudes([1.0, 2.0], 1.0, 1.0), [0.0, 1.0])

    def test_theta_from_u(self):
        mesh = unit_square()
        model = MaterialModel(1, 2, 2, 0.5)
        for slope, expected in ((0.5, 0.0), (1.5, 0.5), (3.0, 1.0)):
            u = ScalarField.from_function(mesh, lambda x, y, s=slope: s * x)
            theta = theta_from_u(u, 1.0, model)
            self.assertFalse(theta.is_nodal)
            np.testing.assert_allclose(theta.values, expected, atol=1e-12)
        with self.assertRaises(DesignError):
            theta_from_u(u, 0.0, model)

    def test_theta_for_budget(self):
        mesh = unit_square()
        s = np.linspace(0.1, 2.0, mesh.n_elements)
        theta = theta_for_budget(s, mesh.areas, 0.3, 1.0)
        self.assertAlmostEqual(float(np.dot(mesh.areas, theta)), 0.3, places=10)
        # Larger gradients never get less alpha
        self.assertTrue(np.all(np.diff(theta) >= 0))
        # A budget covering the support gives the indicator of the support
        s[:4] = 0.0
        theta = theta_for_budget(s, mesh.areas, 1.0 - 4 * mesh.areas[0] + 1e-9, 1.0)
        np.testing.assert_array_equal(theta, (s > 0).astype(float))


class TestSolveDesign(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.model = MaterialModel(1, 2, 2, 0.5)
        cls.mesh = unit_square()
        cls.solution = solve_design(cls.mesh, cls.model, 1.0)

    def test_volume_constraint(self):
        sol = self.solution
        self.assertEqual(sol.branch, "positive")
        self.assertGreater(sol.mu_hat, 0)
        self.assertLessEqual(abs(sol.volume - self.model.kappa), 1e-5 * self.model.kappa)
        self.assertGreaterEqual(sol.theta_hat.values.min(), 0.0)
        self.assertLessEqual(sol.theta_hat.values.max(), 1.0)

    def test_duality_gap(self):
        sol = self.solution
        self.assertLess(abs(sol.primal_energy + sol.dual_energy), 1e-6 * abs(sol.primal_energy))
        self.assertLess(sol.primal_energy, 0.0)

    def test_formulation_gap(self):
        tol = 1e-3 if self.solution.fallback else 1e-8
        self.assertLess(formulation_gap(self.solution, self.model), tol)

    def test_kkt_energy(self):
        """The multiplier term adds c mu^p / p' per unit area of alpha."""
        sol = self.solution
        theta = ScalarField.constant(self.mesh, 0.5)
        base = state_energy(sol.u_hat, theta, sol.f_tilde, self.model)
        self.assertAlmostEqual(kkt_energy(sol.u_hat, theta, 1.0, sol.f_tilde, self.model),
                               base + 0.25, places=12)
        self.assertEqual(kkt_energy(sol.u_hat, theta, 0.0, sol.f_tilde, self.model), base)

    def test_kkt_residual(self):
        """Swapping alpha and beta cells breaks the optimality conditions."""
        sol = self.solution
        theta = sol.theta_hat.values.copy()
        high, low = int(np.argmax(theta)), int(np.argmin(theta))
        self.assertGreater(theta[high] - theta[low], 0.5)
        theta[high], theta[low] = theta[low], theta[high]
        swapped = replace(sol, theta_hat=sol.theta_hat.with_values(theta))
        self.assertGreater(kkt_residual(swapped, self.model), sol.kkt_residual + 1e-6)

    def test_kkt_residual_takes_largest_violation(self):
        sol = self.solution
        theta = sol.theta_hat.values.copy()
        high, low = int(np.argmax(theta)), int(np.argmin(theta))
        theta[high], theta[low] = theta[low], theta[high]
        swapped = replace(sol, theta_hat=sol.theta_hat.with_values(theta))
        s = np.linalg.norm(sol.mesh.element_gradients(sol.u_hat.values), axis=1)
        g = sol.mu_hat ** self.model.p - (s / (1.0 + self.model.c * theta)) ** self.model.p
        weighted = sol.mesh.areas * (np.where(theta < 1.0, np.maximum(0.0, -g), 0.0)
                                     + np.where(theta > 0.0, np.maximum(0.0, g), 0.0))
        self.assertGreaterEqual(int(np.count_nonzero(weighted > 1e-12)), 2)
        volume_term = abs(sol.mu_hat * (swapped.volume - self.model.kappa))
        residual = kkt_residual(swapped, self.model)
        self.assertAlmostEqual(residual, float(np.max(weighted)) + volume_term, places=14)
        self.assertLess(residual - volume_term, float(np.sum(weighted)))

    def test_design_grows_with_gradient(self):
        """theta_hat is a non-decreasing function of |grad u_F|."""
        sol = self.solution
        s = np.linalg.norm(sol.mesh.element_gradients(sol.u_F.values), axis=1)
        order = np.argsort(s, kind="stable")
        self.assertTrue(np.all(np.diff(sol.theta_hat.values[order]) >= -1e-12))

    def test_sweep_recorded(self):
        sol = self.solution
        self.assertGreater(len(sol.sweep), 1)
        self.assertEqual(check_monotone(sol.sweep, 1e-6), [])

    def test_design_beats_alternating_minimization(self):
        theta, energies = alternating_minimization(self.mesh, self.model, 1.0, 4)
        for before, after in zip(energies, energies[1:]):
            self.assertLessEqual(after, before + 1e-10 * abs(before))
        self.assertLessEqual(self.solution.primal_energy, energies[-1] + 1e-8)
        self.assertAlmostEqual(float(np.dot(self.mesh.areas, theta.values)), self.model.kappa,
                               places=8)

    def test_threads_give_same_design(self):
        threaded = solve_design(self.mesh, self.model, 1.0, SolveConfig(threads=2))
        self.assertEqual(threaded.mu_hat, self.solution.mu_hat)
        np.testing.assert_array_equal(threaded.theta_hat.values, self.solution.theta_hat.values)


class TestMultiplier(unittest.TestCase):
    def setUp(self):
        self.mesh = unit_square()
        self.model = MaterialModel(1, 2, 2, 0.5)
        self.f_tilde = ScalarField.constant(self.mesh, 0.5, StorageKind.NODAL)

    def test_volume_monotone(self):
        mus = np.geomspace(0.005, 0.5, 9)
        sweep = volume_sweep(mus, self.f_tilde, self.model)
        self.assertEqual([mu for mu, _ in sweep], list(mus))
        self.assertEqual(check_monotone(sweep, 1e-6), [])
        self.assertGreater(sweep[0][1], sweep[-1][1])

    def test_volume_of_mu_needs_positive(self):
        with self.assertRaises(DesignError):
            volume_of_mu(0.0, self.f_tilde, self.model)

    def test_check_monotone(self):
        self.assertEqual(check_monotone([(1, 0.5), (2, 0.6), (3, 0.1)], 1e-9), [0])
        self.assertEqual(check_monotone([(3, 0.1), (1, 0.5), (2, 0.4)], 1e-9), [])


class TestBranches(unittest.TestCase):
    def test_zero_load_gives_zero_multiplier(self):
        mesh = unit_square()
        sol = solve_design(mesh, MaterialModel(1, 2, 2, 0.5), 0.0)
        self.assertEqual(sol.branch, "zero")
        self.assertEqual(sol.mu_hat, 0.0)
        np.testing.assert_array_equal(sol.theta_hat.values, 0.0)
        self.assertEqual(sol.kkt_residual, 0.0)
        self.assertIsNone(sol.u_F)

    def test_budget_too_large(self):
        with self.assertRaises(MaterialError):
            solve_design(unit_square(), MaterialModel(1, 2, 2, 1.0), 1.0)

    def test_domain_spec_input(self):
        sol = solve_design(DomainSpec.rectangle(0, 1, 0, 1, 0.125),
                           MaterialModel(1, 2, 3, 0.25),
                           lambda x, y: 1.0 + x)
        self.assertEqual(sol.mesh.n_elements, 128)
        self.assertLessEqual(abs(sol.volume - 0.25), 1e-5 * 0.25)


class TestDiskDesign(unittest.TestCase):
    def test_matches_radial_solution(self):
        """On a disk with constant load the alpha phase fills an outer annulus."""
        model = MaterialModel(1, 2, 2, math.pi / 2)
        mesh = build_mesh(DomainSpec.disk(0, 0, 1, 0.1))
        sol = solve_design(mesh, model, 1.0)
        oracle = radial_oracle(1.0, model, 1.0)
        t_hat = sol.mu_hat ** (model.p - 1)
        self.assertLess(abs(t_hat - oracle.t_hat) / oracle.t_hat, 0.15)
        _, theta, _ = oracle.sample(mesh)
        mismatch = float(np.dot(mesh.areas, np.abs(sol.theta_hat.values - theta.values)))
        self.assertLess(mismatch, 0.3 * model.kappa)
        self.assertLess(abs(sol.primal_energy - oracle.primal_energy()),
                        0.1 * abs(oracle.primal_energy()))


class TestDiskRefinement(unittest.TestCase):
    """Radial solution on the unit disk, f = 1, at mesh sizes 0.08, 0.04 and 0.02."""

    SIZES = (0.08, 0.04, 0.02)

    @classmethod
    def setUpClass(cls):
        cls.meshes = [build_mesh(DomainSpec.disk(0, 0, 1, h)) for h in cls.SIZES]
        cls.errors = {}
        for p in (1.5, 2.0, 3.0):
            model = MaterialModel(1, 2, p, math.pi / 2)
            oracle = radial_oracle(1.0, model, 1.0)
            t_errors, mismatches = [], []
            for mesh in cls.meshes:
                sol = solve_design(mesh, model, 1.0)
                t_hat = sol.mu_hat ** (p - 1)
                t_errors.append(abs(t_hat - oracle.t_hat) / oracle.t_hat)
                _, theta, _ = oracle.sample(mesh)
                mismatches.append(float(np.dot(mesh.areas,
                                               np.abs(sol.theta_hat.values - theta.values))))
            cls.errors[p] = (t_errors, mismatches)

    def test_threshold_converges(self):
        for p, (t_errors, _) in self.errors.items():
            with self.subTest(p=p):
                self.assertLessEqual(t_errors[-1], 0.05)
                self.assertLessEqual(t_errors[-1], t_errors[0])

    def test_design_converges(self):
        kappa = math.pi / 2
        for p, (_, mismatches) in self.errors.items():
            with self.subTest(p=p):
                self.assertLessEqual(mismatches[-1], 0.1 * kappa)
                self.assertTrue(all(b < a for a, b in zip(mismatches, mismatches[1:])),
                                mismatches)


if __name__ == '__main__':
    unittest.main()
