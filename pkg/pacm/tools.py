import logging

from numpy import array, sqrt, zeros
from numpy.linalg import det, inv, norm
import numpy as np

from scipy.sparse import csc_matrix
from scipy.sparse.linalg import splu, cg, LinearOperator

logger = logging.getLogger('pacm')

###################
# Errors
###################

class PacmError(Exception):
    pass


class ConfigurationError(PacmError):
    pass


class DomainError(ConfigurationError):
    pass


class NumericalError(PacmError):
    pass


class DegenerateStateError(NumericalError):
    pass


class InversionError(NumericalError):
    pass

###################
# Quadrature
###################

GAUSS_POINTS = array([[-1, -1], [1, -1], [1, 1], [-1, 1]])/sqrt(3)
GAUSS_WEIGHTS = array([1., 1., 1., 1.])


def shape_functions(ξ, η):
    """shape_functions: bilinear quad shape functions, nodes counterclockwise from (-1, -1)

    :param ξ: first reference coordinate
    :param η: second reference coordinate
    :returns: N (4,), dN/dξ (4, 2)
    """
    N = 0.25*array([(1-ξ)*(1-η), (1+ξ)*(1-η), (1+ξ)*(1+η), (1-ξ)*(1+η)])
    dN = 0.25*array([[-(1-η), -(1-ξ)],
                     [(1-η), -(1+ξ)],
                     [(1+η), (1+ξ)],
                     [-(1+η), (1-ξ)]])
    return N, dN


def element_gradients(xe):
    """element_gradients: shape functions and physical gradients at the 2x2 Gauss points

    :param xe: (4, 2) nodal coordinates, counterclockwise
    :returns: list of (N, dN/dx, detJ*w) tuples, one per Gauss point
    """
    out = []
    for (ξ, η), w in zip(GAUSS_POINTS, GAUSS_WEIGHTS):
        N, dN = shape_functions(ξ, η)
        J = dN.T @ xe
        detJ = det(J)
        if not detJ > 0:
            raise NumericalError(f'non-positive element Jacobian {detJ:.3e}')
        out.append((N, dN @ inv(J).T, detJ*w))
    return out


def displacement_interpolation(N):
    """(2, 8) matrix mapping interleaved nodal displacements to a point"""
    Nu = zeros((2, 8))
    Nu[0, 0::2] = N
    Nu[1, 1::2] = N
    return Nu


def strain_displacement(dNdx):
    """(3, 8) small strain operator, engineering shear"""
    B = zeros((3, 8))
    B[0, 0::2] = dNdx[:, 0]
    B[1, 1::2] = dNdx[:, 1]
    B[2, 0::2] = dNdx[:, 1]
    B[2, 1::2] = dNdx[:, 0]
    return B


def element_dofs(elements):
    """element_dofs: interleaved (2n, 2n+1) displacement dofs per element"""
    e = np.asarray(elements)
    return np.stack([2*e, 2*e+1], axis=-1).reshape(len(e), -1)


def scatter_indices(edof):
    """row and column index arrays for coo assembly of dense element blocks"""
    k = edof.shape[1]
    rows = np.repeat(edof, k, axis=1).ravel()
    cols = np.tile(edof, (1, k)).ravel()
    return rows, cols

###################
# Linear solves
###################

class SparseSolver:
    """SparseSolver: factorize once, solve many times, check every residual

    method 'direct' uses a sparse LU factorization, 'cg' Jacobi-preconditioned
    conjugate gradients (symmetric positive definite systems only).
    """
    def __init__(self, A, method='direct', rtol=1e-10, symmetric=True):
        self.A = csc_matrix(A)
        self.method = method
        self.rtol = rtol
        self.symmetric = symmetric
        if self.A.shape[0] == 0:
            self._lu = None
        elif method == 'direct':
            try:
                self._lu = splu(self.A)
            except RuntimeError as err:
                raise NumericalError(f'singular system: {err}')
        elif method == 'cg':
            if not symmetric:
                raise ConfigurationError('cg requires a symmetric matrix')
            d = self.A.diagonal()
            if np.any(d <= 0):
                raise NumericalError('non-positive diagonal, cannot precondition')
            self._M = LinearOperator(self.A.shape, matvec=lambda x: x/d)
        else:
            raise ConfigurationError(f'unknown solver method {method}')

    def solve(self, b, transpose=False):
        b = np.asarray(b, dtype=float)
        if b.shape[0] == 0:
            return b.copy()
        A = self.A.T if transpose and not self.symmetric else self.A
        if self.method == 'direct':
            x = self._lu.solve(b, trans='T' if transpose and not self.symmetric else 'N')
        else:
            x, info = cg(A, b, M=self._M, rtol=self.rtol*1e-2, atol=0., maxiter=20*len(b))
            if info != 0:
                raise NumericalError(f'cg did not converge (info={info})')
        scale = norm(b)
        res = norm(A @ x - b)
        if not np.isfinite(res) or (scale > 0 and res > self.rtol*max(scale, norm(abs(A) @ np.abs(x)))):
            raise NumericalError(f'linear solve residual {res:.3e} exceeds tolerance (|b|={scale:.3e})')
        return x
