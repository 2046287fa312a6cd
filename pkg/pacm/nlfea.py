"""Large-deformation check of extracted designs

Compressible neo-Hookean material reduced to plane stress through the
out-of-plane stretch, pressure applied as a follower load on the cavity
edges, Newton-Raphson with load stepping.
"""
from dataclasses import dataclass, field, replace
from typing import List, Optional

from numpy import array, zeros, eye, log, exp, einsum
from numpy.linalg import det, inv, norm
import numpy as np

from scipy.ndimage import label
from scipy.sparse import coo_matrix, csr_matrix
from scipy.sparse.csgraph import connected_components
from tqdm import tqdm

from .elasticity import MaterialParams, element_stiffness
from .tools import (ConfigurationError, InversionError, NumericalError, SparseSolver,
                    GAUSS_POINTS, GAUSS_WEIGHTS, shape_functions, element_dofs,
                    scatter_indices, logger)

ROTATE = array([[0., -1.], [1., 0.]])


@dataclass(frozen=True)
class HyperelasticParams:
    G: float
    lam: float

    def __post_init__(self):
        if not self.G > 0 or not self.lam >= 0:
            raise ConfigurationError(f'need G > 0 and λ >= 0, got {self.G}, {self.lam}')

    @classmethod
    def from_material(cls, E, nu):
        """G = E/2(1+ν), λ = 2Gν/(1-2ν)"""
        if not 0 <= nu < 0.5:
            raise ConfigurationError(f'Poisson ratio must lie in [0, 0.5), got {nu}')
        G = E/(2*(1+nu))
        return cls(G, 2*G*nu/(1-2*nu))

    @property
    def E(self):
        return self.G*(3*self.lam+2*self.G)/(self.lam+self.G)

    @property
    def nu(self):
        return self.lam/(2*(self.lam+self.G))

###################
# Constitutive law
###################

def _embed(F):
    F = np.asarray(F, dtype=float)
    if F.shape == (3, 3):
        return F
    F3 = eye(3)
    F3[:2, :2] = F
    return F3


def strain_energy(F, params):
    """strain_energy: W = G/2 [tr(FF^T) - 3 - 2 ln J] + λ/2 (ln J)^2

    a 2x2 F is embedded with unit out-of-plane stretch
    """
    F = _embed(F)
    J = det(F)
    if not J > 0:
        raise InversionError(f'deformation gradient with J = {J}')
    lnJ = log(J)
    return params.G/2*(np.trace(F @ F.T)-3-2*lnJ)+params.lam/2*lnJ**2


def cauchy_stress(F, params):
    """cauchy_stress: σ = G/J (FF^T - I) + λ/J ln J I, same size as F"""
    n = np.shape(F)[0]
    F = _embed(F)
    J = det(F)
    if not J > 0:
        raise InversionError(f'deformation gradient with J = {J}')
    σ = params.G/J*(F @ F.T-eye(3))+params.lam/J*log(J)*eye(3)
    return σ[:n, :n]


def out_of_plane_stretch(J2, params, tol=1e-14, max_iter=60):
    """out_of_plane_stretch: λ3 with σ33 = 0, i.e. G(λ3² - 1) + λ ln(J2 λ3) = 0

    Newton on s = ln λ3, the residual is convex and increasing in s.
    """
    J2 = np.asarray(J2, dtype=float)
    if np.any(J2 <= 0):
        raise InversionError('element inverted')
    G, lam = params.G, params.lam
    s = zeros(J2.shape)
    lnJ2 = log(J2)
    for _ in range(max_iter):
        g = G*(exp(2*s)-1)+lam*(lnJ2+s)
        s = s-g/(2*G*exp(2*s)+lam)
        if np.all(np.abs(g) <= tol*(G+lam)):
            break
    return exp(s)


def plane_stress_response(F, params):
    """plane_stress_response: in-plane quantities for a stack of 2x2 deformation gradients

    :returns: λ3, Finv, first Piola-Kirchhoff P, ln J, c = dlnJ/dlnJ2
    """
    J2 = det(F)
    if np.any(~(J2 > 0)):
        raise InversionError('element inverted')
    λ3 = out_of_plane_stretch(J2, params)
    Finv = inv(F)
    FinvT = np.swapaxes(Finv, -1, -2)
    lnJ = log(J2*λ3)
    G, lam = params.G, params.lam
    P = G*(F-FinvT)+lam*lnJ[..., None, None]*FinvT
    c = 2*G*λ3**2/(2*G*λ3**2+lam)
    return λ3, Finv, P, lnJ, c


def plane_stress_energy(F, params):
    """strain energy density of 2x2 gradients with the stress-free out-of-plane stretch"""
    J2 = det(F)
    λ3 = out_of_plane_stretch(J2, params)
    lnJ = log(J2*λ3)
    trace = einsum('...ij,...ij->...', F, F)+λ3**2
    return params.G/2*(trace-3-2*lnJ)+params.lam/2*lnJ**2

###################
# Structure
###################

@dataclass
class Structure:
    """Structure: quad mesh of solid material in its reference configuration

    :param output_dof: dof whose displacement is reported, spring kss attached
    """
    coords: np.ndarray
    elements: np.ndarray
    thickness: float
    params: HyperelasticParams
    fixed_dofs: np.ndarray
    output_dof: Optional[int] = None
    kss: float = 0.
    output_sign: float = -1.
    dN0: np.ndarray = field(init=False, repr=False)
    w0: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.coords = np.asarray(self.coords, dtype=float)
        self.elements = np.asarray(self.elements, dtype=int)
        self.fixed_dofs = np.asarray(self.fixed_dofs, dtype=int)
        dN = array([shape_functions(ξ, η)[1] for ξ, η in GAUSS_POINTS])
        Xe = self.coords[self.elements]
        J = einsum('gai,eaj->egij', dN, Xe)
        detJ = det(J)
        if np.any(detJ <= 0):
            raise NumericalError('structure has an element with non-positive Jacobian')
        self.dN0 = einsum('gai,egji->egaj', dN, inv(J))
        self.w0 = detJ*GAUSS_WEIGHTS

    @property
    def n_nodes(self):
        return len(self.coords)

    @property
    def n_dofs(self):
        return 2*self.n_nodes

    @property
    def free(self):
        return np.setdiff1d(np.arange(self.n_dofs), self.fixed_dofs)

    @property
    def edof(self):
        return element_dofs(self.elements)

    def deformation_gradient(self, u):
        ue = np.asarray(u, dtype=float).reshape(-1, 2)[self.elements]
        return eye(2)+einsum('eai,egaj->egij', ue, self.dN0)


@dataclass(frozen=True)
class FollowerBoundary:
    """FollowerBoundary: loaded edges as node pairs ordered so that e3 x tangent points into the solid"""
    edges: np.ndarray
    pressure: float
    coords: np.ndarray = field(repr=False)
    thickness: float = 1e-3

    def with_pressure(self, p):
        return replace(self, pressure=p)


def _assemble_vector(n, dofs, values):
    return np.bincount(dofs.ravel(), weights=values.ravel(), minlength=n)


def strain_energy_total(structure, u):
    """total stored energy Σ ∫ W dV over the reference configuration"""
    F = structure.deformation_gradient(u)
    W = plane_stress_energy(F, structure.params)
    return float(np.sum(W*structure.w0)*structure.thickness)


def internal_force(structure, u, tangent=False):
    """internal_force: F_int = Σ_e ∫ B_UL^T σ dv on the current configuration

    :param tangent: also return the consistent material plus geometric tangent
    """
    F = structure.deformation_gradient(u)
    λ3, Finv, P, lnJ, c = plane_stress_response(F, structure.params)
    G, lam = structure.params.G, structure.params.lam
    J3 = det(F)*λ3
    # spatial gradients of the shape functions
    g = einsum('egaJ,egJi->egai', structure.dN0, Finv)
    τ = G*(einsum('egiJ,egkJ->egik', F, F)-eye(2))+lam*lnJ[..., None, None]*eye(2)
    σ = τ/J3[..., None, None]
    dv = J3*structure.w0*structure.thickness
    fe = einsum('egij,egaj,eg->eai', σ, g, dv)
    fint = _assemble_vector(structure.n_dofs, structure.edof, fe.reshape(len(fe), -1))
    if not tangent:
        return fint

    dV = structure.w0*structure.thickness
    gram = einsum('egaJ,egbJ->egab', structure.dN0, structure.dN0)
    Ke = (G*einsum('egab,ik->eaibk', gram*dV[..., None, None], eye(2))
          + einsum('eg,egak,egbi->eaibk', (G-lam*lnJ)*dV, g, g)
          + einsum('eg,egai,egbk->eaibk', lam*c*dV, g, g))
    ne = len(Ke)
    rows, cols = scatter_indices(structure.edof)
    K = coo_matrix((Ke.reshape(ne, 8, 8).ravel(), (rows, cols)),
                   shape=(structure.n_dofs, structure.n_dofs)).tocsr()
    return fint, K


def skew_kernel(n, a):
    """n⊗a - a⊗n"""
    return np.outer(n, a)-np.outer(a, n)


def follower_load(boundary, u):
    """follower_load: pressure on the deformed edges and its load stiffness

    F_ext = ∫ N^T p n da with n = e3 x a_p, and
    K_ext = ∫ p N^T (n⊗a¹ - a¹⊗n) N,ξ da, a¹ = a_p/j the contravariant edge tangent.
    """
    coords = np.asarray(boundary.coords)
    n_dofs = 2*len(coords)
    edges = np.asarray(boundary.edges, dtype=int).reshape(-1, 2)
    x = coords+np.asarray(u, dtype=float).reshape(-1, 2)
    p, t = boundary.pressure, boundary.thickness
    Fext = zeros(n_dofs)
    rows, cols, vals = [], [], []
    dNξ = array([-0.5, 0.5])
    for (i, k) in edges:
        d = x[k]-x[i]
        l = norm(d)
        if not l > 1e-14*max(1., norm(x[i])):
            raise NumericalError(f'edge ({i}, {k}) has zero deformed length')
        a_p = d/l
        n = ROTATE @ a_p
        j = l/2
        kernel = skew_kernel(n, a_p/j)
        dofs = array([2*i, 2*i+1, 2*k, 2*k+1])
        fe = zeros(4)
        ke = zeros((4, 4))
        for ξ, w in zip([-1/np.sqrt(3), 1/np.sqrt(3)], [1., 1.]):
            N = array([(1-ξ)/2, (1+ξ)/2])
            da = j*w*t
            fe += np.kron(N, p*n)*da
            for A in range(2):
                for B in range(2):
                    ke[2*A:2*A+2, 2*B:2*B+2] += p*N[A]*kernel*dNξ[B]*da
        Fext[dofs] += fe
        rows.append(np.repeat(dofs, 4))
        cols.append(np.tile(dofs, 4))
        vals.append(ke.ravel())
    if rows:
        Kext = coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(n_dofs, n_dofs)).tocsr()
    else:
        Kext = csr_matrix((n_dofs, n_dofs))
    return Fext, Kext

###################
# Newton-Raphson
###################

@dataclass
class LoadStep:
    pressure: float
    u: np.ndarray = field(repr=False)
    iterations: int
    residuals: List[float]
    output_displacement: Optional[float] = None


@dataclass
class NewtonResult:
    """NewtonResult: converged load steps, possibly partial"""
    steps: List[LoadStep]
    converged: bool
    message: str = ''

    @property
    def u(self):
        return self.steps[-1].u

    @property
    def pressures(self):
        return np.array([s.pressure for s in self.steps])

    @property
    def output_displacements(self):
        return np.array([np.nan if s.output_displacement is None else s.output_displacement for s in self.steps])


def residual_and_tangent(structure, boundary, u, p, follower_tangent=True):
    """R = F_int - F_ext with K_T = K_int - K_ext, output spring included"""
    fint, K = internal_force(structure, u, tangent=True)
    fext, Kext = follower_load(boundary.with_pressure(p), u)
    R = fint-fext
    if structure.output_dof is not None and structure.kss:
        R[structure.output_dof] += structure.kss*u[structure.output_dof]
        K = K+coo_matrix(([structure.kss], ([structure.output_dof], [structure.output_dof])), shape=K.shape)
    if follower_tangent:
        K = K-Kext
    return R, K.tocsr(), fext


def _newton(structure, boundary, u0, p, tol, max_iter, follower_tangent):
    u = u0.copy()
    free = structure.free
    residuals = []
    for it in range(max_iter+1):
        try:
            R, K, fext = residual_and_tangent(structure, boundary, u, p, follower_tangent)
        except (InversionError, NumericalError) as err:
            return False, u, residuals, str(err)
        scale = norm(fext[free])
        r = norm(R[free])
        ratio = r/scale if scale > 0 else r
        residuals.append(ratio)
        if not np.isfinite(ratio) or ratio > 1e8:
            return False, u, residuals, 'diverged'
        if ratio <= tol:
            return True, u, residuals, ''
        if it == max_iter:
            break
        try:
            du = SparseSolver(K[free][:, free], symmetric=False).solve(-R[free])
        except NumericalError as err:
            return False, u, residuals, str(err)
        u[free] += du
    return False, u, residuals, f'no convergence in {max_iter} iterations'


def newton_solve(structure, boundary, p_target, n_steps=10, tol=1e-8, max_iter=25, max_halvings=4,
                 follower_tangent=True, progress=False):
    """newton_solve: load-stepped Newton-Raphson up to p_target

    A failed increment is retried at half size, at most max_halvings times in
    total. On failure the converged steps so far are returned with converged=False.
    """
    if n_steps < 1:
        raise ConfigurationError('need at least one load step')
    if p_target < 0:
        raise ConfigurationError('target pressure must be non-negative')
    out = structure.output_dof

    def step(p, u, its, res):
        return LoadStep(p, u.copy(), its, res, None if out is None else float(u[out]))

    u = zeros(structure.n_dofs)
    steps = [step(0., u, 0, [])]
    if p_target == 0:
        ok, u, res, msg = _newton(structure, boundary, u, 0., tol, max_iter, follower_tangent)
        steps[0] = step(0., u, len(res)-1, res)
        return NewtonResult(steps, ok, msg)

    Δp = p_target/n_steps
    p = 0.
    halvings = 0
    bar = tqdm(total=n_steps, disable=not progress)
    while p < p_target*(1-1e-12):
        p_try = min(p+Δp, p_target)
        ok, u_try, res, msg = _newton(structure, boundary, u, p_try, tol, max_iter, follower_tangent)
        if ok:
            u, p = u_try, p_try
            steps.append(step(p, u, len(res)-1, res))
            bar.update(Δp/(p_target/n_steps))
            continue
        halvings += 1
        if halvings > max_halvings:
            bar.close()
            logger.warning(f'Newton failed at p = {p_try:.4g} Pa after {max_halvings} halvings: {msg}')
            return NewtonResult(steps, False, f'failed at p = {p_try:.6g} Pa: {msg}')
        Δp /= 2
        logger.info(f'halving load increment to {Δp:.4g} Pa ({msg})')
    bar.close()
    return NewtonResult(steps, True)


def linear_response(structure, boundary, p=None):
    """linear_response: small-strain plane-stress solution under the undeformed pressure load"""
    params = structure.params
    m = MaterialParams(E1=params.E, E0=params.E*1e-6, nu=params.nu, thickness=structure.thickness)
    blocks = array([element_stiffness(params.E, m, structure.coords[e]) for e in structure.elements])
    rows, cols = scatter_indices(structure.edof)
    K = coo_matrix((blocks.ravel(), (rows, cols)), shape=(structure.n_dofs, structure.n_dofs)).tocsr()
    if structure.output_dof is not None and structure.kss:
        K = K+coo_matrix(([structure.kss], ([structure.output_dof], [structure.output_dof])), shape=K.shape)
    b = boundary if p is None else boundary.with_pressure(p)
    F, _ = follower_load(b, zeros(structure.n_dofs))
    free = structure.free
    u = zeros(structure.n_dofs)
    u[free] = SparseSolver(K.tocsr()[free][:, free]).solve(F[free])
    return u


@dataclass
class SweepPoint:
    pressure: float
    output_displacement: float
    converged: bool
    result: NewtonResult = field(repr=False)


def pressure_sweep(structure, boundary, pressures, n_steps=10, **kwargs):
    """pressure_sweep: independent Newton runs to each pressure (Pa)"""
    points = []
    for p in pressures:
        result = newton_solve(structure, boundary, p, n_steps, **kwargs)
        Δ = result.steps[-1].output_displacement
        points.append(SweepPoint(p, np.nan if Δ is None else Δ, result.converged, result))
        logger.info(f'p = {p/1e5:g} bar: Δ = {points[-1].output_displacement*1e3:.4g} mm'
                    f'{"" if result.converged else " (not converged)"}')
    return points

###################
# Extraction from a density field
###################

# element faces as (local node, next local node, neighbour offset (dx, dy))
FACES = ((0, 1, (0, -1)), (1, 2, (1, 0)), (2, 3, (0, 1)), (3, 0, (-1, 0)))


def _drop_islands(mesh, kept, anchors):
    ids = np.flatnonzero(kept)
    if not len(ids):
        return kept
    incidence = csr_matrix((np.ones(4*len(ids)), (np.repeat(np.arange(len(ids)), 4), mesh.elements[ids].ravel())),
                           shape=(len(ids), mesh.n_nodes))
    n_comp, labels = connected_components(incidence @ incidence.T, directed=False)
    anchored = np.zeros(mesh.n_nodes, dtype=bool)
    anchored[anchors] = True
    good = np.unique(labels[np.any(anchored[mesh.elements[ids]], axis=1)])
    keep = np.isin(labels, good)
    if not keep.all():
        logger.warning(f'dropping {int((~keep).sum())} elements not connected to a support')
    out = np.zeros_like(kept)
    out[ids[keep]] = True
    return out


def pressurized_edges(mesh, kept, preset):
    """pressurized_edges: solid element faces facing the void region connected to the pressure inlet

    :returns: (m, 2) mesh node pairs in element order
    """
    nex, ney = mesh.nex, mesh.ney
    solid = kept.reshape(ney, nex)
    inlet = np.zeros(mesh.n_nodes, dtype=bool)
    inlet[preset.input_nodes] = True
    drain = np.zeros(mesh.n_nodes, dtype=bool)
    drain[preset.zero_nodes] = True

    def boundary_face(e, f, mask):
        a, b, _ = FACES[f]
        return mask[mesh.elements[e, a]] and mask[mesh.elements[e, b]]

    def outside(ex, ey, f):
        dx, dy = FACES[f][2]
        return not (0 <= ex+dx < nex and 0 <= ey+dy < ney)

    labels, _ = label(~solid)
    seeds, leaks = set(), set()
    for ey in range(ney):
        for ex in range(nex):
            if solid[ey, ex]:
                continue
            e = mesh.element_id(ex, ey)
            for f in range(4):
                if outside(ex, ey, f):
                    if boundary_face(e, f, inlet):
                        seeds.add(labels[ey, ex])
                    elif boundary_face(e, f, drain):
                        leaks.add(labels[ey, ex])
    cavity = np.isin(labels, list(seeds)) & ~solid
    if seeds & leaks:
        logger.warning('pressurized void region reaches a zero-pressure boundary')

    edges = []
    for ey in range(ney):
        for ex in range(nex):
            if not solid[ey, ex]:
                continue
            e = mesh.element_id(ex, ey)
            for f, (a, b, (dx, dy)) in enumerate(FACES):
                if outside(ex, ey, f):
                    loaded = boundary_face(e, f, inlet)
                else:
                    loaded = cavity[ey+dy, ex+dx]
                if loaded:
                    edges.append((mesh.elements[e, a], mesh.elements[e, b]))
    return np.array(edges, dtype=int).reshape(-1, 2)


def extract_structure(mesh, ρ̄, threshold=0.85, params=None, edges=None):
    """extract_structure: solid elements of a density field as a Structure with its loaded edges

    :param ρ̄: intermediate physical density per element
    :param params: HyperelasticParams, from E = 3e9, ν = 0.4 if not given
    :param edges: optional override of the loaded edges as mesh node pairs
    :returns: (Structure, FollowerBoundary)
    """
    preset = mesh.preset
    if preset is None:
        raise ConfigurationError('mesh has no preset attached')
    params = HyperelasticParams.from_material(3e9, 0.4) if params is None else params
    ρ̄ = np.asarray(ρ̄, dtype=float)
    kept = ρ̄ >= threshold
    kept[preset.passive_void] = False
    fixed = preset.fixed_dofs
    clamped = np.intersect1d(fixed[fixed % 2 == 0]//2, fixed[fixed % 2 == 1]//2)
    kept = _drop_islands(mesh, kept, clamped)
    if not kept.any():
        raise ConfigurationError(f'no supported solid above threshold {threshold}')

    used = np.unique(mesh.elements[kept])
    renumber = -np.ones(mesh.n_nodes, dtype=int)
    renumber[used] = np.arange(len(used))

    full_fixed = np.zeros(mesh.n_dofs, dtype=bool)
    full_fixed[fixed] = True
    dofs = np.stack([2*used, 2*used+1], axis=1).ravel()
    fixed_local = np.flatnonzero(full_fixed[dofs])

    out_node = preset.output_node
    if renumber[out_node] < 0:
        raise ConfigurationError('output node is not part of the extracted structure')
    output_dof = 2*renumber[out_node]+preset.output_dof % 2

    structure = Structure(mesh.coords[used], renumber[mesh.elements[kept]], mesh.thickness, params,
                          fixed_local, int(output_dof), preset.kss, preset.output_sign)
    if edges is None:
        edges = pressurized_edges(mesh, kept, preset)
    edges = renumber[np.asarray(edges, dtype=int).reshape(-1, 2)]
    if np.any(edges < 0):
        raise ConfigurationError('loaded edge references a node outside the structure')
    if not len(edges):
        logger.warning('no pressurized edges found')
    boundary = FollowerBoundary(edges, preset.input_pressure, structure.coords, mesh.thickness)
    return structure, boundary
