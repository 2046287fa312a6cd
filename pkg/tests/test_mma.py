import unittest

from numpy import allclose, array, zeros, ones
from numpy.random import uniform, seed
import numpy as np

from pacm.mma import *


class TestMMA(unittest.TestCase):
    def setUp(self):
        seed(5)

    def test_constrained_quadratic(self):
        # min (x-2)^2 + (y-2)^2  s.t.  x + y <= 1  on the unit box
        mma = MMA(2, 1, move=0.2)
        x = array([0.1, 0.8])
        for _ in range(100):
            f0, df0 = np.sum((x-2)**2), 2*(x-2)
            g, dg = array([x.sum()-1]), ones((1, 2))
            x = mma.update(x, f0, df0, g, dg)
        self.assertTrue(allclose(x, [0.5, 0.5], atol=1e-3))
        norm2, _ = mma.kkt_residual(x, 2*(x-2), array([x.sum()-1]), ones((1, 2)))
        self.assertTrue(norm2 < 1e-1)
        self.assertTrue(mma.lam[0] > 0)

    def test_minmax(self):
        # min max(|p - a|^2, |p - b|^2) is reached half way between a and b
        a, b = array([0.3, 0.5]), array([0.7, 0.5])
        mma = minmax_mma(2, 2, 1, move=0.1)
        x = array([0.2, 0.9])
        shifts = set()
        for _ in range(50):
            objectives = [(np.sum((x-a)**2), 2*(x-a)), (np.sum((x-b)**2), 2*(x-b))]
            constraints = [(x.sum()-1.5, ones(2))]
            x = minmax_update(x, objectives, constraints, mma)
            shifts.add(mma.shift)
        self.assertTrue(allclose(x, [0.5, 0.5], atol=1e-4))
        self.assertEqual(len(shifts), 1)
        self.assertTrue(mma.kkt < 1e-2)

    def test_move_limit_full_range(self):
        # asymptotes follow the variable range, not the move box
        mma = MMA(1, 1, move=0.1)
        x = array([0.5])
        for _ in range(3):
            x = mma.update(x, 0., array([1.]), array([-1.]), zeros((1, 1)))
        self.assertTrue(allclose(x, [0.2], atol=1e-4))
        self.assertTrue(allclose(mma.xold1-mma.low, 0.6))

    def test_zero_gradient(self):
        for n, m in [(10, 1), (2, 3)]:
            x = uniform(0.2, 0.8, n)
            mma = MMA(n, m)
            xnew = mma.update(x, 0., zeros(n), -ones(m), zeros((m, n)))
            self.assertTrue(allclose(xnew, x, atol=1e-6))

    def test_move_limit(self):
        x = 0.5*ones(5)
        mma = MMA(5, 1, move=0.05)
        xnew = mma.update(x, 0., ones(5), array([-1.]), zeros((1, 5)))
        self.assertTrue(np.all(np.abs(xnew-x) <= 0.05+1e-12))
        self.assertTrue(np.all(xnew < x))

    def test_bounds(self):
        x = array([0.01, 0.99])
        mma = MMA(2, 1, move=0.2)
        for _ in range(5):
            x = mma.update(x, 0., array([1., -1.]), array([-1.]), zeros((1, 2)))
            self.assertTrue(np.all(x >= 0) and np.all(x <= 1))
        self.assertTrue(allclose(x, [0, 1], atol=1e-4))

    def test_active_mask(self):
        mma = minmax_mma(2, 1, 1)
        x = array([0.3, 0.6, 0.9])
        active = array([True, False, True])
        objectives = [(np.sum(x**2), 2*x)]
        xnew = minmax_update(x, objectives, [(x.sum()-5, ones(3))], mma, active)
        self.assertEqual(xnew[1], 0.6)
        self.assertTrue(np.all(xnew[active] < x[active]))

    def test_kktcheck(self):
        # interior unconstrained optimum with zero multipliers
        n, m = 2, 1
        res, _ = kktcheck(m, n, array([0.5, 0.5]), zeros(m), 0., zeros(m), zeros(n), zeros(n), 1000*ones(m), 1.,
                          ones(m), zeros(n), ones(n), zeros(n), array([-1.]), zeros((m, n)),
                          1., zeros(m), 1000*ones(m), ones(m))
        self.assertTrue(allclose(res, 0))


if __name__=='__main__':
    unittest.main(verbosity=1)
