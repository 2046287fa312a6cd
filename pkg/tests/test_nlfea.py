import unittest
from dataclasses import replace

from numpy import allclose, array, eye, zeros, ones, log, cos, sin
from numpy.random import rand, randn, seed
import numpy as np

from pacm.elasticity import MaterialParams, element_stiffness
from pacm.mesh import apply_preset, build_grid, make_preset
from pacm.nlfea import *
from pacm.tools import ConfigurationError, NumericalError


def fd_gradient(f, x, h=1e-6):
    """central differences of a scalar function of an array"""
    g = zeros(x.shape)
    for idx in np.ndindex(x.shape):
        xp, xm = x.copy(), x.copy()
        xp[idx] += h
        xm[idx] -= h
        g[idx] = (f(xp)-f(xm))/(2*h)
    return g


def cantilever(nex=4, ney=2, E=1e6, nu=0.3):
    """block clamped on the left with pressure on its top face"""
    mesh = build_grid(nex, ney, 0.02, 0.01, 1e-3)
    left = mesh.boundary_nodes('left')
    fixed = np.sort(np.concatenate([2*left, 2*left+1]))
    structure = Structure(mesh.coords, mesh.elements, mesh.thickness,
                          HyperelasticParams.from_material(E, nu), fixed, None, 0.)
    top = [mesh.element_id(ex, ney-1) for ex in range(nex)]
    edges = mesh.elements[top][:, [2, 3]]
    return structure, FollowerBoundary(edges, 0., structure.coords, mesh.thickness)


def rotation(θ):
    return array([[cos(θ), -sin(θ)], [sin(θ), cos(θ)]])


def rotated(structure, boundary, R):
    """structure and loaded edges rigidly rotated about the origin"""
    coords = structure.coords @ R.T
    s = Structure(coords, structure.elements, structure.thickness, structure.params, structure.fixed_dofs,
                  structure.output_dof, structure.kss, structure.output_sign)
    return s, replace(boundary, coords=coords)


class TestConstitutive(unittest.TestCase):
    def setUp(self):
        seed(6)
        self.params = HyperelasticParams(1., 2.)

    def test_params(self):
        p = HyperelasticParams.from_material(3e9, 0.4)
        self.assertTrue(allclose([p.E, p.nu], [3e9, 0.4]))
        with self.assertRaises(ConfigurationError):
            HyperelasticParams.from_material(1., 0.5)
        with self.assertRaises(ConfigurationError):
            HyperelasticParams(0., 1.)

    def test_reference_state(self):
        self.assertEqual(strain_energy(eye(3), self.params), 0.)
        self.assertTrue(allclose(cauchy_stress(eye(3), self.params), 0))
        self.assertTrue(allclose(cauchy_stress(eye(2), self.params), zeros((2, 2))))

    def test_isotropic_stretch(self):
        G, lam = self.params.G, self.params.lam
        for α in [0.8, 1.1, 1.5]:
            W3 = G/2*(3*α**2-3-6*log(α))+lam/2*(3*log(α))**2
            W2 = G/2*(2*α**2-2-4*log(α))+lam/2*(2*log(α))**2
            self.assertTrue(allclose(strain_energy(α*eye(3), self.params), W3))
            self.assertTrue(allclose(strain_energy(α*eye(2), self.params), W2))

    def test_stress_from_energy(self):
        for _ in range(5):
            F = eye(3)+0.1*randn(3, 3)
            P = fd_gradient(lambda F: strain_energy(F, self.params), F)
            σ = P @ F.T/np.linalg.det(F)
            self.assertTrue(allclose(cauchy_stress(F, self.params), σ, rtol=1e-6, atol=1e-8))

    def test_plane_stress(self):
        F = eye(2)+0.1*randn(6, 2, 2)
        λ3, Finv, P, lnJ, c = plane_stress_response(F, self.params)
        for k in range(len(F)):
            F3 = eye(3)
            F3[:2, :2] = F[k]
            F3[2, 2] = λ3[k]
            self.assertTrue(abs(cauchy_stress(F3, self.params)[2, 2]) < 1e-10)
            self.assertTrue(allclose(lnJ[k], log(np.linalg.det(F3))))
            # the out-of-plane stretch is stationary so P is the in-plane energy gradient
            dW = fd_gradient(lambda f: plane_stress_energy(f[None], self.params)[0], F[k].copy())
            self.assertTrue(allclose(P[k], dW, rtol=1e-6, atol=1e-8))
        self.assertTrue(allclose(out_of_plane_stretch(np.ones(3), self.params), 1))


class TestInternalForce(unittest.TestCase):
    def setUp(self):
        seed(7)
        mesh = build_grid(1, 1, 1., 1., 1.)
        self.structure = Structure(mesh.coords, mesh.elements, 1., HyperelasticParams(1., 2.), [], None)

    def test_unloaded(self):
        s = self.structure
        self.assertTrue(allclose(internal_force(s, zeros(8)), 0))
        self.assertTrue(allclose(internal_force(s, np.tile([0.3, -0.2], 4)), 0))
        self.assertEqual(strain_energy_total(s, zeros(8)), 0.)

    def test_energy_consistency(self):
        s = self.structure
        u = 0.05*randn(8)
        dE = fd_gradient(lambda v: strain_energy_total(s, v), u)
        self.assertTrue(allclose(internal_force(s, u), dE, rtol=1e-6, atol=1e-8))

    def test_tangent(self):
        s = self.structure
        u = 0.05*randn(8)
        _, K = internal_force(s, u, tangent=True)
        K = K.toarray()
        h = 1e-7
        fd = zeros((8, 8))
        for j in range(8):
            up, um = u.copy(), u.copy()
            up[j] += h
            um[j] -= h
            fd[:, j] = (internal_force(s, up)-internal_force(s, um))/(2*h)
        self.assertTrue(allclose(K, fd, rtol=1e-5, atol=1e-6))
        self.assertTrue(allclose(K, K.T, atol=1e-10))

    def test_small_strain_limit(self):
        # linearized neo-Hookean plane stress is Hooke's law with the same E and ν
        s = self.structure
        _, K = internal_force(s, zeros(8), tangent=True)
        p = s.params
        KE = element_stiffness(p.E, MaterialParams(E1=p.E, E0=1e-6*p.E, nu=p.nu, thickness=1.), s.coords[s.elements[0]])
        dofs = s.edof[0]
        self.assertTrue(allclose(K.toarray()[np.ix_(dofs, dofs)], KE))


class TestFollowerLoad(unittest.TestCase):
    def setUp(self):
        seed(8)

    def test_straight_edge(self):
        p, t, l = 3., 0.5, 2.
        b = FollowerBoundary(array([[0, 1]]), p, array([[0., 0.], [l, 0.]]), t)
        F, _ = follower_load(b, zeros(4))
        self.assertTrue(allclose(F, [0, p*l*t/2, 0, p*l*t/2]))
        # rotating the edge rotates the load with it
        F, _ = follower_load(b, array([0., 0., -l, l]))
        self.assertTrue(allclose(F, [-p*l*t/2, 0, -p*l*t/2, 0]))

    def test_load_stiffness(self):
        coords = rand(3, 2)
        b = FollowerBoundary(array([[0, 1], [1, 2]]), 2.5, coords, 0.1)
        u = 0.1*randn(6)
        _, K = follower_load(b, u)
        fd = zeros((6, 6))
        h = 1e-7
        for j in range(6):
            up, um = u.copy(), u.copy()
            up[j] += h
            um[j] -= h
            fd[:, j] = (follower_load(b, up)[0]-follower_load(b, um)[0])/(2*h)
        self.assertTrue(allclose(K.toarray(), fd, atol=1e-7))

    def test_kernel(self):
        n, a = randn(2), randn(2)
        k = skew_kernel(n, a)
        self.assertTrue(allclose(k, -k.T))

    def test_degenerate_edge(self):
        b = FollowerBoundary(array([[0, 1]]), 1., array([[0., 0.], [1., 0.]]))
        with self.assertRaises(NumericalError):
            follower_load(b, array([0., 0., -1., 0.]))

    def test_no_edges(self):
        b = FollowerBoundary(zeros((0, 2), dtype=int), 1., zeros((3, 2)))
        F, K = follower_load(b, zeros(6))
        self.assertTrue(allclose(F, 0))
        self.assertEqual(K.nnz, 0)


class TestNewton(unittest.TestCase):
    def setUp(self):
        mesh = build_grid(20, 10, 0.02, 0.01, 1e-3)
        self.mesh = apply_preset(mesh, make_preset('inverter', mesh, p_in=1e3))

    def test_zero_pressure(self):
        structure, boundary = cantilever()
        result = newton_solve(structure, boundary, 0.)
        self.assertTrue(result.converged)
        self.assertTrue(allclose(result.u, 0))
        with self.assertRaises(ConfigurationError):
            newton_solve(structure, boundary, -1.)
        with self.assertRaises(ConfigurationError):
            newton_solve(structure, boundary, 1., n_steps=0)

    def test_linear_limit(self):
        structure, boundary = extract_structure(self.mesh, ones(self.mesh.n_elements))
        self.assertEqual(boundary.pressure, 1e3)
        result = newton_solve(structure, boundary, 1e3, n_steps=1)
        self.assertTrue(result.converged)
        u = linear_response(structure, boundary)
        out = structure.output_dof
        self.assertTrue(abs(result.u[out]-u[out]) <= 1e-2*abs(u[out]))
        self.assertTrue(allclose(result.u, u, rtol=1e-2, atol=1e-2*np.abs(u).max()))
        self.assertEqual(result.steps[-1].output_displacement, result.u[out])

    def test_sweep_monotone(self):
        structure, boundary = extract_structure(self.mesh, ones(self.mesh.n_elements))
        points = pressure_sweep(structure, boundary, [1e6, 2.5e6, 5e6], n_steps=2)
        self.assertTrue(all(p.converged for p in points))
        Δ = np.abs([p.output_displacement for p in points])
        self.assertTrue(np.all(np.diff(Δ) > 0))
        self.assertTrue(allclose([p.pressure for p in points], [1e6, 2.5e6, 5e6]))

    def test_rotation_invariance(self):
        structure, boundary = cantilever()
        R = rotation(0.7)
        kwargs = dict(n_steps=4, tol=1e-10)
        u = newton_solve(structure, boundary, 1e4, **kwargs).u.reshape(-1, 2)
        v = newton_solve(*rotated(structure, boundary, R), 1e4, **kwargs).u.reshape(-1, 2)
        self.assertTrue(np.abs(u).max() > 1e-4)
        self.assertTrue(np.abs(v-u @ R.T).max() <= 1e-6*np.abs(u).max())

    def test_follower_tangent(self):
        structure, boundary = cantilever()
        full = newton_solve(structure, boundary, 1e4, n_steps=4)
        partial = newton_solve(structure, boundary, 1e4, n_steps=4, follower_tangent=False)
        self.assertTrue(full.converged)
        iterations = lambda r: sum(s.iterations for s in r.steps)
        self.assertTrue(not partial.converged or iterations(full) <= iterations(partial))
        self.assertTrue(allclose(full.pressures, [0, 2.5e3, 5e3, 7.5e3, 1e4]))


class TestCavityDesign(unittest.TestCase):
    """inverter with a rectangular void pocket opening onto the inlet edge"""
    def setUp(self):
        mesh = build_grid(20, 10, 0.2, 0.1, 1e-3)
        mesh = apply_preset(mesh, make_preset('inverter', mesh))
        ρ̄ = ones(mesh.n_elements)
        for ex in range(8):
            for ey in range(2, 6):
                ρ̄[mesh.element_id(ex, ey)] = 0.
        self.mesh, self.ρ̄ = mesh, ρ̄
        self.structure, self.boundary = extract_structure(mesh, ρ̄, params=HyperelasticParams.from_material(3e9, 0.4))

    def test_pocket_edges(self):
        mesh, kept = self.mesh, self.ρ̄ >= 0.85
        # 20 faces around the pocket and 6 solid faces on the inlet edge
        self.assertEqual(len(pressurized_edges(mesh, kept, mesh.preset)), 26)
        self.assertEqual(len(self.boundary.edges), 26)
        self.assertEqual(len(self.structure.elements), mesh.n_elements-32)

    def test_linear_limit(self):
        s, b = self.structure, self.boundary
        result = newton_solve(s, b, 1e3, n_steps=1)
        self.assertTrue(result.converged)
        u = linear_response(s, b, 1e3)
        out = s.output_dof
        self.assertTrue(abs(u[out]) > 0)
        self.assertTrue(abs(result.u[out]-u[out]) <= 1e-2*abs(u[out]))

    def test_sweep_monotone(self):
        points = pressure_sweep(self.structure, self.boundary, [1e4, 2e4, 3e4], n_steps=2)
        self.assertTrue(all(p.converged for p in points))
        Δ = np.abs([p.output_displacement for p in points])
        self.assertTrue(np.all(np.diff(Δ) > 0))


class TestExtraction(unittest.TestCase):
    def setUp(self):
        mesh = build_grid(6, 4, 0.06, 0.04, 1e-3)
        self.small = apply_preset(mesh, make_preset('inverter', mesh))
        mesh = build_grid(20, 10, 0.02, 0.01, 1e-3)
        self.mesh = apply_preset(mesh, make_preset('inverter', mesh))

    def test_cavity_edges(self):
        mesh = self.small
        kept = np.ones(mesh.n_elements, dtype=bool)
        for ey in [1, 2]:
            for ex in range(3):
                kept[mesh.element_id(ex, ey)] = False
        edges = pressurized_edges(mesh, kept, mesh.preset)
        self.assertEqual(len(edges), 10)
        # every loaded edge pushes into the solid next to it
        c = mesh.coords
        solid = mesh.centroids[kept]
        for i, k in edges:
            mid = (c[i]+c[k])/2
            n = array([[0., -1.], [1., 0.]]) @ (c[k]-c[i])
            outside = mid+0.5*n
            self.assertTrue(np.min(np.linalg.norm(solid-outside, axis=1)) < 1e-9)

    def test_enclosed_void(self):
        mesh = self.small
        kept = np.ones(mesh.n_elements, dtype=bool)
        kept[mesh.element_id(2, 1)] = False
        edges = pressurized_edges(mesh, kept, mesh.preset)
        self.assertEqual(len(edges), 4)
        self.assertTrue(np.all(mesh.coords[edges][..., 0] == 0))

    def test_extract(self):
        mesh = self.mesh
        structure, boundary = extract_structure(mesh, ones(mesh.n_elements))
        self.assertEqual(structure.n_nodes, mesh.n_nodes)
        self.assertEqual(len(boundary.edges), mesh.ney)
        self.assertEqual(structure.output_dof, mesh.preset.output_dof)
        self.assertTrue(allclose(structure.fixed_dofs, mesh.preset.fixed_dofs))
        self.assertTrue(allclose([structure.params.E, structure.params.nu], [3e9, 0.4]))

    def test_output_node_removed(self):
        mesh = self.mesh
        ρ̄ = ones(mesh.n_elements)
        ρ̄[mesh.element_id(mesh.nex-1, 0)] = 0.
        with self.assertRaises(ConfigurationError):
            extract_structure(mesh, ρ̄)
        with self.assertRaises(ConfigurationError):
            extract_structure(mesh, zeros(mesh.n_elements))

    def test_islands(self):
        mesh = self.mesh
        ρ̄ = ones(mesh.n_elements)
        for ex in range(9, 12):
            for ey in range(4, 7):
                if (ex, ey) != (10, 5):
                    ρ̄[mesh.element_id(ex, ey)] = 0.
        with self.assertLogs('pacm', level='WARNING'):
            structure, _ = extract_structure(mesh, ρ̄)
        self.assertEqual(len(structure.elements), mesh.n_elements-9)


if __name__=='__main__':
    unittest.main(verbosity=1)
