import unittest

from numpy import allclose, array, full, ones
from numpy.random import rand, seed, uniform
import numpy as np

from pacm.fields import *
from pacm.mesh import apply_preset, build_grid, make_preset
from pacm.tools import ConfigurationError


class TestFields(unittest.TestCase):
    def setUp(self):
        seed(3)
        mesh = build_grid(40, 20, 0.2, 0.1, 1e-3)
        self.mesh = apply_preset(mesh, make_preset('gripper', mesh))
        self.filt = build_filter(self.mesh, 5.4*self.mesh.h)

    def test_filter(self):
        H = self.filt.H
        self.assertTrue(allclose(np.asarray(H.sum(axis=1)).ravel(), 1))
        self.assertTrue(allclose(self.filt(full(self.mesh.n_elements, 0.3)), 0.3))
        x, g = rand(self.mesh.n_elements), rand(self.mesh.n_elements)
        self.assertTrue(allclose(g @ self.filt(x), self.filt.backprop(g) @ x))
        # interior rows reach 5 elements in each direction and no further
        e = self.mesh.element_id(20, 10)
        cols = H[e].indices
        c = self.mesh.centroids
        self.assertTrue(np.all(np.linalg.norm(c[cols]-c[e], axis=1) < 5.4*self.mesh.h))

    def test_small_radius(self):
        with self.assertLogs('pacm', level='WARNING'):
            filt = build_filter(self.mesh, 0.5*self.mesh.h)
        x = rand(self.mesh.n_elements)
        self.assertTrue(allclose(filt(x), x))
        with self.assertRaises(ConfigurationError):
            build_filter(self.mesh, 0.)

    def test_project(self):
        x = rand(50)
        self.assertTrue(allclose(project(x, 0, 0.5), x))
        for β in [1, 8, 64]:
            for η in [0.45, 0.5, 0.55]:
                self.assertTrue(allclose(project(array([0., 1.]), β, η), [0, 1]))
        self.assertTrue(allclose(project(0.5, 8, 0.5), 0.5))
        with self.assertRaises(ConfigurationError):
            project(x, -1, 0.5)

    def test_project_derivative(self):
        x, h = rand(50), 1e-7
        for β in [0, 1, 8]:
            fd = (project(x+h, β, 0.45)-project(x-h, β, 0.45))/(2*h)
            self.assertTrue(allclose(project_derivative(x, β, 0.45), fd, rtol=1e-5, atol=1e-8))

    def test_thresholds(self):
        η = thresholds(0.05)
        self.assertTrue(allclose([η['eroded'], η['intermediate'], η['dilated']], [0.55, 0.5, 0.45]))
        with self.assertRaises(ConfigurationError):
            realize_three(rand(5), 8., 0.7)

    def test_ordering(self):
        areas = self.mesh.areas
        for k in range(1000):
            ρ̃ = rand(self.mesh.n_elements)
            Δη = [0.05, 0.15][k % 2]
            β = uniform(0.5, 128)
            η = thresholds(Δη)
            e, i, d = [project(ρ̃, β, η[tag]) for tag in REALIZATIONS]
            self.assertTrue(np.all(e <= i+1e-12) and np.all(i <= d+1e-12))
            e, i, d = realize_three(ρ̃, β, Δη)
            self.assertTrue(np.all(e <= i) and np.all(i <= d))
            self.assertTrue(areas @ e <= areas @ i <= areas @ d)

    def test_single_field(self):
        ρ̃ = rand(20)
        e, i, d = realize_three(ρ̃, 8, 0.)
        self.assertTrue(allclose(e, i) and allclose(i, d))

    def test_passive(self):
        preset = self.mesh.preset
        ρ = rand(self.mesh.n_elements)
        state = design_state(ρ, self.filt, 8., 0.05, preset)
        for tag in REALIZATIONS:
            f = state.physical(tag)
            self.assertTrue(allclose(f[preset.passive_solid], 1))
            self.assertTrue(allclose(f[preset.passive_void], 0))
        self.assertEqual(state.threshold('eroded'), 0.55)
        self.assertTrue(allclose(state.ρ̃, self.filt(state.ρ)))
        g = backprop(ones(self.mesh.n_elements), state, 0.5, preset)
        self.assertTrue(allclose(g[preset.passive_solid], 0))
        self.assertTrue(allclose(g[preset.passive_void], 0))

    def test_backprop(self):
        # chain rule through projection and filter against finite differences
        ρ = 0.2+0.6*rand(self.mesh.n_elements)
        w = rand(self.mesh.n_elements)
        state = design_state(ρ, self.filt, 8., 0.05)
        g = backprop(w, state, 0.45)
        h = 1e-6
        for e in [0, 123, 500]:
            ρp, ρm = ρ.copy(), ρ.copy()
            ρp[e] += h
            ρm[e] -= h
            fp = w @ design_state(ρp, self.filt, 8., 0.05).dilated
            fm = w @ design_state(ρm, self.filt, 8., 0.05).dilated
            self.assertTrue(allclose(g[e], (fp-fm)/(2*h), rtol=1e-5))

    def test_gray_indicator(self):
        self.assertEqual(gray_indicator(array([0., 1., 1., 0.])), 0.)
        self.assertTrue(allclose(gray_indicator(full(10, 0.5)), 1.))
        self.assertTrue(0 < gray_indicator(rand(10)) < 1)


if __name__=='__main__':
    unittest.main(verbosity=1)
