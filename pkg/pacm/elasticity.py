"""SIMP plane-stress analysis with an output spring"""
from dataclasses import dataclass

from numpy import array, zeros
import numpy as np

from scipy.sparse import coo_matrix

from .tools import (ConfigurationError, DomainError, NumericalError, SparseSolver,
                    element_gradients, strain_displacement, scatter_indices)


@dataclass(frozen=True)
class MaterialParams:
    E1: float = 3e9
    E0: float = 3e3
    nu: float = 0.4
    penal: float = 3.
    thickness: float = 1e-3

    def __post_init__(self):
        if not 0 < self.E0 < self.E1:
            raise ConfigurationError(f'need 0 < E0 < E1, got {self.E0}, {self.E1}')
        if not 0 <= self.nu < 0.5:
            raise ConfigurationError(f'Poisson ratio must lie in [0, 0.5), got {self.nu}')
        if self.penal < 1 or not self.thickness > 0:
            raise ConfigurationError('SIMP penalty must be >= 1 and thickness positive')


def simp_modulus(ρ, m):
    """simp_modulus: E = E0 + ρ^ζ (E1 - E0)"""
    ρ = np.asarray(ρ, dtype=float)
    if np.any(ρ < -1e-12) or np.any(ρ > 1+1e-12):
        raise DomainError('physical density outside [0, 1]')
    return m.E0+np.clip(ρ, 0, 1)**m.penal*(m.E1-m.E0)


def simp_modulus_derivative(ρ, m):
    ρ = np.clip(np.asarray(ρ, dtype=float), 0, 1)
    return m.penal*ρ**(m.penal-1)*(m.E1-m.E0)


def plane_stress_matrix(E, nu):
    return E/(1-nu**2)*array([[1, nu, 0],
                              [nu, 1, 0],
                              [0, 0, (1-nu)/2]])


def element_stiffness(E, m, xe):
    """element_stiffness: 2x2 Gauss plane-stress Q4 stiffness

    :param E: Young's modulus
    :param m: MaterialParams (ν and thickness)
    :param xe: (4, 2) counterclockwise nodal coordinates
    """
    C = plane_stress_matrix(E, m.nu)
    KE = zeros((8, 8))
    for _, dNdx, dv in element_gradients(xe):
        B = strain_displacement(dNdx)
        KE += B.T @ C @ B*dv*m.thickness
    return KE


def free_dofs(mesh):
    return np.setdiff1d(np.arange(mesh.n_dofs), mesh.preset.fixed_dofs)


def assemble_stiffness(mesh, ρ, m, preset=None):
    """assemble_stiffness: global K with the output spring, fixed dofs not yet removed"""
    preset = mesh.preset if preset is None else preset
    ρ = np.asarray(ρ, dtype=float)
    if ρ.shape != (mesh.n_elements,):
        raise ConfigurationError(f'field has shape {ρ.shape}, mesh has {mesh.n_elements} elements')
    KE = element_stiffness(1., m, mesh.reference_element())
    E = simp_modulus(ρ, m)
    rows, cols = scatter_indices(mesh.edof)
    data = (E[:, None]*KE.ravel()[None, :]).ravel()
    K = coo_matrix((data, (rows, cols)), shape=(mesh.n_dofs, mesh.n_dofs)).tocsr()
    if preset is not None and preset.kss > 0:
        K = K+coo_matrix(([preset.kss], ([preset.output_dof], [preset.output_dof])),
                         shape=K.shape).tocsr()
    return K


@dataclass
class ElasticSolution:
    u: np.ndarray
    v: np.ndarray
    SE: float
    MSE: float
    Δ: float


class ElasticSystem:
    """ElasticSystem: K with fixed dofs eliminated, factorized once for state, dummy and adjoint solves"""
    def __init__(self, K, fixed_dofs, method='direct'):
        self.K = K.tocsr()
        n = K.shape[0]
        self.free = np.setdiff1d(np.arange(n), fixed_dofs)
        try:
            self.solver = SparseSolver(self.K[self.free][:, self.free], method=method)
        except NumericalError as err:
            raise ConfigurationError(f'stiffness matrix singular, check supports: {err}')

    def solve(self, F):
        F = np.asarray(F, dtype=float)
        u = zeros(F.shape)
        u[self.free] = self.solver.solve(F[self.free])
        return u


def solve_state(system, F):
    """solve_state: K u = F"""
    return system.solve(F)


def solve_dummy(system, F_d):
    """solve_dummy: K v = F_d"""
    return system.solve(F_d)


def elastic_response(mesh, ρ, m, F, method='direct'):
    """elastic_response: state and dummy solutions with the energies that enter the objective

    :returns: (ElasticSolution, ElasticSystem)
    """
    preset = mesh.preset
    system = ElasticSystem(assemble_stiffness(mesh, ρ, m, preset), preset.fixed_dofs, method)
    u = solve_state(system, F)
    v = solve_dummy(system, preset.dummy_force(mesh.n_dofs))
    Ku = system.K @ u
    return ElasticSolution(u, v, 0.5*u @ Ku, v @ Ku, u[preset.output_dof]), system
