import unittest

from numpy.random import randn, seed
from numpy import allclose, array, eye, ones, sum
import numpy as np

from scipy.sparse import csr_matrix, random as sparse_random

from pacm.tools import *


class TestTools(unittest.TestCase):
    def setUp(self):
        seed(0)
        self.square = array([[0., 0.], [1., 0.], [1., 1.], [0., 1.]])
        self.skewed = array([[0., 0.], [2., 0.1], [2.2, 1.3], [-0.1, 1.]])

    def test_shape_functions(self):
        for ξ, η in randn(10, 2):
            N, dN = shape_functions(ξ, η)
            self.assertTrue(allclose(sum(N), 1))
            self.assertTrue(allclose(dN.sum(axis=0), 0))
        N, _ = shape_functions(-1, -1)
        self.assertTrue(allclose(N, [1, 0, 0, 0]))

    def test_element_gradients(self):
        for xe in [self.square, self.skewed]:
            gps = element_gradients(xe)
            self.assertEqual(len(gps), 4)
            d1, d2 = xe[2]-xe[0], xe[3]-xe[1]
            area = 0.5*abs(d1[0]*d2[1]-d1[1]*d2[0])
            self.assertTrue(allclose(sum([dv for _, _, dv in gps]), area))
            # gradients of a linear field are exact
            f = xe @ array([0.3, -1.2])
            for _, dNdx, _ in gps:
                self.assertTrue(allclose(dNdx.T @ f, [0.3, -1.2]))

    def test_inverted_element(self):
        with self.assertRaises(NumericalError):
            element_gradients(self.square[::-1])

    def test_operators(self):
        N, dN = shape_functions(0.2, -0.4)
        Nu = displacement_interpolation(N)
        u = randn(8)
        self.assertTrue(allclose(Nu @ u, [N @ u[0::2], N @ u[1::2]]))
        B = strain_displacement(dN)
        self.assertEqual(B.shape, (3, 8))
        # rigid translation has no strain
        self.assertTrue(allclose(B @ np.tile([1., 2.], 4), 0))

    def test_element_dofs(self):
        edof = element_dofs(array([[0, 1, 4, 3]]))
        self.assertTrue(allclose(edof, [[0, 1, 2, 3, 8, 9, 6, 7]]))
        rows, cols = scatter_indices(edof)
        self.assertEqual(len(rows), 64)
        self.assertEqual(rows[8], 1)
        self.assertEqual(cols[8], 0)

    def test_sparse_solver(self):
        n = 30
        R = sparse_random(n, n, density=0.2, random_state=1)
        A = csr_matrix(R @ R.T+n*eye(n))
        b = randn(n)
        x = SparseSolver(A).solve(b)
        self.assertTrue(allclose(A @ x, b))
        y = SparseSolver(A, method='cg').solve(b)
        self.assertTrue(allclose(x, y, atol=1e-8))

    def test_unsymmetric_transpose(self):
        n = 10
        A = csr_matrix(eye(n)*4+np.triu(ones((n, n)), 1))
        b = randn(n)
        solver = SparseSolver(A, symmetric=False)
        self.assertTrue(allclose(A.T @ solver.solve(b, transpose=True), b))
        with self.assertRaises(ConfigurationError):
            SparseSolver(A, method='cg', symmetric=False)

    def test_singular(self):
        A = csr_matrix(array([[1., 1.], [1., 1.]]))
        with self.assertRaises(NumericalError):
            SparseSolver(A).solve(ones(2))

    def test_error_hierarchy(self):
        self.assertTrue(issubclass(DomainError, ConfigurationError))
        self.assertTrue(issubclass(InversionError, NumericalError))
        self.assertTrue(issubclass(DegenerateStateError, PacmError))


if __name__=='__main__':
    unittest.main(verbosity=1)
