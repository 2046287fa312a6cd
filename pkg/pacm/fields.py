"""Density filter, threshold projection and the eroded/intermediate/dilated realizations"""
from dataclasses import dataclass, field

from numpy import tanh
import numpy as np

from scipy.sparse import coo_matrix, diags
from scipy.spatial import cKDTree

from .tools import ConfigurationError, logger

REALIZATIONS = ('eroded', 'intermediate', 'dilated')


class DensityFilter:
    """DensityFilter: volume-weighted cone filter, ρ̃ = H ρ with H row-stochastic

    :param mesh: Mesh
    :param r_fill: filter radius (m)
    """
    def __init__(self, mesh, r_fill):
        if not r_fill > 0:
            raise ConfigurationError(f'filter radius must be positive, got {r_fill}')
        self.r_fill = r_fill
        if r_fill <= min(mesh.dx, mesh.dy):
            logger.warning(f'filter radius {r_fill:.3e} is below the element size, filter is the identity')
        centroids = mesh.centroids
        tree = cKDTree(centroids)
        pairs = tree.query_pairs(r_fill, output_type='ndarray')
        d = np.linalg.norm(centroids[pairs[:, 0]]-centroids[pairs[:, 1]], axis=1)
        w = np.maximum(0, 1-d/r_fill)
        n = mesh.n_elements
        rows = np.concatenate([np.arange(n), pairs[:, 0], pairs[:, 1]])
        cols = np.concatenate([np.arange(n), pairs[:, 1], pairs[:, 0]])
        vols = mesh.areas
        vals = np.concatenate([np.ones(n), w, w])*vols[cols]
        W = coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
        self.H = (diags(1/np.asarray(W.sum(axis=1)).ravel()) @ W).tocsr()
        self.HT = self.H.T.tocsr()

    def __call__(self, ρ):
        return self.H @ ρ

    def backprop(self, g):
        return self.HT @ g


def build_filter(mesh, r_fill):
    return DensityFilter(mesh, r_fill)


def project(ρ̃, β, η):
    """project: ρ̄ = [tanh(βη) + tanh(β(ρ̃-η))]/[tanh(βη) + tanh(β(1-η))], identity for β = 0"""
    ρ̃ = np.asarray(ρ̃, dtype=float)
    if β < 0:
        raise ConfigurationError(f'projection steepness must be >= 0, got {β}')
    if β == 0:
        return ρ̃.copy()
    return (tanh(β*η)+tanh(β*(ρ̃-η)))/(tanh(β*η)+tanh(β*(1-η)))


def project_derivative(ρ̃, β, η):
    ρ̃ = np.asarray(ρ̃, dtype=float)
    if β == 0:
        return np.ones(ρ̃.shape)
    return β*(1-tanh(β*(ρ̃-η))**2)/(tanh(β*η)+tanh(β*(1-η)))


def thresholds(Δη):
    return {'eroded': 0.5+Δη, 'intermediate': 0.5, 'dilated': 0.5-Δη}


def realize_three(ρ̃, β, Δη):
    """realize_three: eroded, intermediate and dilated projections of one filtered field

    The projection is non-increasing in η, the min/max only clean up rounding.
    """
    if not 0 <= Δη <= 0.5:
        raise ConfigurationError(f'threshold deviation must lie in [0, 0.5], got {Δη}')
    η = thresholds(Δη)
    ρ̄i = project(ρ̃, β, η['intermediate'])
    ρ̄e = np.minimum(project(ρ̃, β, η['eroded']), ρ̄i)
    ρ̄d = np.maximum(project(ρ̃, β, η['dilated']), ρ̄i)
    return ρ̄e, ρ̄i, ρ̄d


@dataclass
class DesignState:
    ρ: np.ndarray
    ρ̃: np.ndarray
    eroded: np.ndarray
    intermediate: np.ndarray
    dilated: np.ndarray
    β: float
    Δη: float
    r_fill: float
    filt: DensityFilter = field(default=None, repr=False)

    def physical(self, tag):
        return getattr(self, tag)

    def threshold(self, tag):
        return thresholds(self.Δη)[tag]


def freeze_passive(ρ, preset):
    """set passive-solid densities to 1 and passive-void to 0"""
    ρ = np.array(ρ, dtype=float)
    if preset is not None:
        ρ[preset.passive_solid] = 1.
        ρ[preset.passive_void] = 0.
    return ρ


def design_state(ρ, filt, β, Δη, preset=None):
    """design_state: filter, project and freeze passive regions in the physical fields"""
    ρ = freeze_passive(ρ, preset)
    ρ̃ = filt(ρ)
    fields = [freeze_passive(f, preset) for f in realize_three(ρ̃, β, Δη)]
    return DesignState(ρ, ρ̃, *fields, β, Δη, filt.r_fill, filt)


def backprop(g, state, η, preset=None):
    """backprop: df/dρ from df/dρ̄ through the projection at threshold η and the filter

    Passive entries of the result are zero.
    """
    g = np.array(g, dtype=float)
    if preset is not None:
        g[preset.passive_solid] = 0.
        g[preset.passive_void] = 0.
    out = state.filt.backprop(g*project_derivative(state.ρ̃, state.β, η))
    if preset is not None:
        out[preset.passive_solid] = 0.
        out[preset.passive_void] = 0.
    return out


def gray_indicator(ρ̄):
    """gray_indicator: M_nd = Σ 4ρ̄(1-ρ̄)/n_e"""
    ρ̄ = np.asarray(ρ̄, dtype=float)
    return float(np.sum(4*ρ̄*(1-ρ̄))/ρ̄.size)
