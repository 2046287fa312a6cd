"""Design-dependent pressure loads from a Darcy flow model with a drainage term"""
from dataclasses import dataclass
from typing import Optional

from numpy import tanh, log, zeros, outer
import numpy as np

from scipy.sparse import coo_matrix

from .tools import (ConfigurationError, DomainError, NumericalError, SparseSolver,
                    element_gradients, displacement_interpolation, element_dofs,
                    scatter_indices)


@dataclass(frozen=True)
class DarcyParams:
    """DarcyParams: flow and drainage interpolation

    A slope of zero switches the corresponding interpolation off (the density
    no longer enters it).
    """
    k_v: float = 1.
    epsilon: float = 1e-7
    eta_k: float = 0.3
    beta_k: float = 10.
    eta_d: float = 0.2
    beta_d: float = 10.
    r: float = 0.1
    delta_s: float = 2e-3
    p_ext: float = 0.

    def __post_init__(self):
        if not 0 < self.epsilon <= 1:
            raise ConfigurationError(f'flow contrast must lie in (0, 1], got {self.epsilon}')
        if not 0 < self.r < 1:
            raise ConfigurationError(f'remainder fraction must lie in (0, 1), got {self.r}')
        if not self.delta_s > 0 or not self.k_v > 0:
            raise ConfigurationError('penetration depth and void flow coefficient must be positive')
        if self.beta_k < 0 or self.beta_d < 0:
            raise ConfigurationError('interpolation slopes must be non-negative')
        if not (0 <= self.eta_k <= 1 and 0 <= self.eta_d <= 1):
            raise ConfigurationError('interpolation step positions must lie in [0, 1]')

    @property
    def k_s(self):
        return self.epsilon*self.k_v

    @property
    def d_s(self):
        return (log(self.r)/self.delta_s)**2*self.k_s


def _check_density(ρ):
    ρ = np.asarray(ρ, dtype=float)
    if np.any(ρ < -1e-12) or np.any(ρ > 1+1e-12) or np.any(np.isnan(ρ)):
        raise DomainError('physical density outside [0, 1]')
    return ρ


def smooth_heaviside(ρ, β, η):
    """smooth_heaviside: tanh step normalised so that H(0) = 0 and H(1) = 1, zero for β = 0"""
    ρ = np.asarray(ρ, dtype=float)
    if β == 0:
        return zeros(ρ.shape)
    return (tanh(β*η)+tanh(β*(ρ-η)))/(tanh(β*η)+tanh(β*(1-η)))


def smooth_heaviside_derivative(ρ, β, η):
    ρ = np.asarray(ρ, dtype=float)
    if β == 0:
        return zeros(ρ.shape)
    return β*(1-tanh(β*(ρ-η))**2)/(tanh(β*η)+tanh(β*(1-η)))


def flow_coefficient(ρ, params):
    """flow_coefficient: K(ρ) = K_v(1 - (1-ε)H(ρ, β_κ, η_κ))"""
    ρ = _check_density(ρ)
    return params.k_v*(1-(1-params.epsilon)*smooth_heaviside(ρ, params.beta_k, params.eta_k))


def flow_coefficient_derivative(ρ, params):
    ρ = _check_density(ρ)
    return -params.k_v*(1-params.epsilon)*smooth_heaviside_derivative(ρ, params.beta_k, params.eta_k)


def drainage_coefficient(ρ, params):
    """drainage_coefficient: D(ρ) = D_s H(ρ, β_d, η_d)"""
    ρ = _check_density(ρ)
    return params.d_s*smooth_heaviside(ρ, params.beta_d, params.eta_d)


def drainage_coefficient_derivative(ρ, params):
    ρ = _check_density(ρ)
    return params.d_s*smooth_heaviside_derivative(ρ, params.beta_d, params.eta_d)

###################
# Element matrices
###################

def element_flow_matrices(xe, t):
    """element_flow_matrices: (∫Bp^T Bp, ∫Np^T Np) over one element of thickness t"""
    Kp, Mp = zeros((4, 4)), zeros((4, 4))
    for N, dNdx, dv in element_gradients(xe):
        Kp += dNdx @ dNdx.T*dv*t
        Mp += outer(N, N)*dv*t
    return Kp, Mp


def element_coupling_matrix(xe, t):
    """element_coupling_matrix: ∫Nu^T Bp over one element (8x4)

    With this orientation F = -T p is the body force -∇p, pushing material
    away from high pressure.
    """
    Te = zeros((8, 4))
    for N, dNdx, dv in element_gradients(xe):
        Te += displacement_interpolation(N).T @ dNdx.T*dv*t
    return Te


def _uniform(mesh, ρ):
    ρ = np.asarray(ρ, dtype=float)
    if ρ.shape != (mesh.n_elements,):
        raise ConfigurationError(f'field has shape {ρ.shape}, mesh has {mesh.n_elements} elements')
    return ρ


def assemble_darcy(mesh, ρ, params):
    """assemble_darcy: A = Σ_e K(ρ_e)∫Bp^T Bp + D(ρ_e)∫Np^T Np"""
    ρ = _uniform(mesh, ρ)
    Kp, Mp = element_flow_matrices(mesh.reference_element(), mesh.thickness)
    K, D = flow_coefficient(ρ, params), drainage_coefficient(ρ, params)
    blocks = K[:, None, None]*Kp+D[:, None, None]*Mp
    rows, cols = scatter_indices(mesh.elements)
    n = mesh.n_nodes
    return coo_matrix((blocks.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def darcy_derivative_blocks(mesh, ρ, params):
    """(ne, 4, 4) element blocks of dA/dρ_e"""
    Kp, Mp = element_flow_matrices(mesh.reference_element(), mesh.thickness)
    dK = flow_coefficient_derivative(ρ, params)
    dD = drainage_coefficient_derivative(ρ, params)
    return dK[:, None, None]*Kp+dD[:, None, None]*Mp


def transformation_matrix(mesh):
    """transformation_matrix: global pressure to load coupling T, F = -T p"""
    Te = element_coupling_matrix(mesh.reference_element(), mesh.thickness)
    edof = element_dofs(mesh.elements)
    rows = np.repeat(edof, 4, axis=1).ravel()
    cols = np.tile(mesh.elements, (1, 8)).ravel()
    data = np.broadcast_to(Te.ravel(), (mesh.n_elements, 32)).ravel()
    return coo_matrix((data, (rows, cols)), shape=(mesh.n_dofs, mesh.n_nodes)).tocsr()


def nodal_loads(T, p):
    """nodal_loads: F = -T p"""
    p = np.asarray(p, dtype=float)
    if T.shape[1] != p.shape[0]:
        raise ValueError(f'coupling matrix has {T.shape[1]} columns, pressure has {p.shape[0]} entries')
    return -(T @ p)

###################
# Solve
###################

@dataclass
class PressureSolution:
    """PressureSolution: nodal pressures, consistent loads and the factorization used to get them"""
    p: np.ndarray
    F: np.ndarray
    tag: str = 'intermediate'
    free: Optional[np.ndarray] = None
    solver: Optional[SparseSolver] = None


def solve_pressure(A, preset, method='direct'):
    """solve_pressure: A p = 0 with the preset's Dirichlet pressures eliminated

    :returns: (p, solver on the free block, free node ids)
    """
    n = A.shape[0]
    fixed = preset.pressure_nodes
    if fixed.size == 0:
        raise ConfigurationError('no pressure boundary condition, Darcy system is singular')
    free = np.setdiff1d(np.arange(n), fixed)
    A = A.tocsr()
    p = zeros(n)
    p[fixed] = preset.pressure_values
    Aff = A[free][:, free]
    rhs = -(A[free][:, fixed] @ p[fixed])
    try:
        solver = SparseSolver(Aff, method=method)
    except NumericalError as err:
        raise ConfigurationError(f'Darcy system singular after boundary conditions: {err}')
    p[free] = solver.solve(rhs)
    return p, solver, free


def pressure_field(mesh, ρ, params, tag='intermediate', method='direct'):
    """pressure_field: solve for the pressure on a physical density field and convert it to loads"""
    preset = mesh.preset
    if preset is None:
        raise ConfigurationError('mesh has no preset attached')
    A = assemble_darcy(mesh, ρ, params)
    p, solver, free = solve_pressure(A, preset, method=method)
    F = nodal_loads(transformation_matrix(mesh), p)
    return PressureSolution(p, F, tag, free, solver)
