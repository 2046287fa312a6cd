"""Mechanism objective and its adjoint sensitivities, load sensitivities included"""
from dataclasses import dataclass

from numpy import einsum, zeros
import numpy as np

from .darcy import pressure_field, darcy_derivative_blocks, transformation_matrix
from .elasticity import elastic_response, element_stiffness, simp_modulus_derivative
from .tools import DegenerateStateError


@dataclass
class Adjoints:
    λ1: np.ndarray
    λ2: np.ndarray
    λ3: np.ndarray
    μ: float


@dataclass
class RealizationAnalysis:
    """RealizationAnalysis: everything computed for one physical field in one iteration"""
    tag: str
    pressure: object
    elastic: object
    f0: float
    Θ1: np.ndarray
    Θ2: np.ndarray
    adjoints: Adjoints

    @property
    def gradient(self):
        return self.Θ1+self.Θ2


def objective(sol, μ=1000.):
    """objective: f0 = -μ MSE/SE"""
    if not sol.SE > 0:
        raise DegenerateStateError(f'strain energy is {sol.SE}, objective undefined')
    return -μ*sol.MSE/sol.SE


def adjoints(sol, T, pressure, μ=1000.):
    """adjoints: multipliers of the state, pressure and dummy equations

    λ1 and λ3 follow in closed form from K u = F and K v = F_d, λ2 needs one
    solve with the factorized Darcy matrix (symmetric, so no transpose).
    """
    SE, MSE = sol.SE, sol.MSE
    λ1 = μ*(sol.v/SE-MSE/SE**2*sol.u)
    λ3 = μ*sol.u/SE
    λ2 = zeros(len(pressure.p))
    rhs = -(T.T @ λ1)
    λ2[pressure.free] = pressure.solver.solve(rhs[pressure.free])
    return Adjoints(λ1, λ2, λ3, μ)


def objective_sensitivity(u, v, ρ̄, mesh, m, SE, MSE, μ=1000.):
    """objective_sensitivity: Θ1_e = μ u_e^T dK_e/dρ̄_e (v_e/SE - u_e MSE/(2 SE^2))"""
    KE = element_stiffness(1., m, mesh.reference_element())
    edof = mesh.edof
    ue, ve = u[edof], v[edof]
    w = ve/SE-ue*MSE/(2*SE**2)
    return μ*simp_modulus_derivative(ρ̄, m)*einsum('ei,ij,ej->e', ue, KE, w)


def load_sensitivity(λ2, p, ρ̄, mesh, params):
    """load_sensitivity: Θ2_e = λ2_e^T dA_e/dρ̄_e p_e"""
    blocks = darcy_derivative_blocks(mesh, ρ̄, params)
    return einsum('ei,eij,ej->e', λ2[mesh.elements], blocks, p[mesh.elements])


def analyze(mesh, ρ̄, m, params, tag='intermediate', μ=1000., method='direct'):
    """analyze: pressure, state, dummy and adjoint solves on one physical field

    :returns: RealizationAnalysis with f0 and the sensitivity fields w.r.t. ρ̄
    """
    pressure = pressure_field(mesh, ρ̄, params, tag, method)
    sol, _ = elastic_response(mesh, ρ̄, m, pressure.F, method)
    f0 = objective(sol, μ)
    T = transformation_matrix(mesh)
    adj = adjoints(sol, T, pressure, μ)
    Θ1 = objective_sensitivity(sol.u, sol.v, ρ̄, mesh, m, sol.SE, sol.MSE, μ)
    Θ2 = load_sensitivity(adj.λ2, pressure.p, ρ̄, mesh, params)
    return RealizationAnalysis(tag, pressure, sol, f0, Θ1, Θ2, adj)


def volume_and_sensitivity(ρ̄, mesh):
    """volume_and_sensitivity: V = Σ V_m ρ̄_m (element areas) and its constant gradient"""
    areas = mesh.areas
    return float(areas @ ρ̄), areas.copy()


def volume_fraction(ρ̄, mesh):
    return volume_and_sensitivity(ρ̄, mesh)[0]/(mesh.lx*mesh.ly)
