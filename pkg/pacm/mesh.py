"""Structured quadrilateral grids and the boundary-condition presets that live on them"""
from dataclasses import dataclass, field, replace
from typing import Optional

from numpy import arange, array, zeros, meshgrid
import numpy as np

from .tools import ConfigurationError, element_gradients, element_dofs, logger

EDGES = ('left', 'right', 'bottom', 'top')


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ProblemPreset:
    """ProblemPreset: everything a mechanism problem pins onto a grid

    pressure_nodes/pressure_values are the Darcy Dirichlet data (N/m^2).
    output_sign is the desired direction of motion at output_dof; the dummy
    load points that way.
    """
    name: str
    pressure_nodes: np.ndarray
    pressure_values: np.ndarray
    fixed_dofs: np.ndarray
    passive_solid: np.ndarray
    passive_void: np.ndarray
    symmetry_edge: Optional[str]
    output_dof: int
    output_sign: float = -1.
    kss: float = 1e4
    dummy_load: float = 1.

    def __post_init__(self):
        for name, dtype in [('pressure_nodes', int), ('pressure_values', float), ('fixed_dofs', int),
                            ('passive_solid', int), ('passive_void', int)]:
            object.__setattr__(self, name, _frozen(getattr(self, name), dtype))
        if len(np.unique(self.pressure_nodes)) != len(self.pressure_nodes):
            raise ConfigurationError('pressure input and zero-pressure node sets overlap')
        if self.output_dof in set(self.fixed_dofs.tolist()):
            raise ConfigurationError(f'output dof {self.output_dof} is fixed')
        if np.intersect1d(self.passive_solid, self.passive_void).size:
            raise ConfigurationError('passive solid and passive void elements overlap')
        if self.kss < 0 or self.dummy_load <= 0:
            raise ConfigurationError('spring stiffness must be >= 0 and dummy load > 0')

    @property
    def input_nodes(self):
        return self.pressure_nodes[self.pressure_values != 0]

    @property
    def zero_nodes(self):
        return self.pressure_nodes[self.pressure_values == 0]

    @property
    def input_pressure(self):
        vals = self.pressure_values[self.pressure_values != 0]
        return float(vals.max()) if len(vals) else 0.

    @property
    def output_node(self):
        return self.output_dof//2

    @property
    def output_direction(self):
        return 'xy'[self.output_dof % 2]

    def passive_mask(self, n_elements):
        mask = zeros(n_elements, dtype=bool)
        mask[self.passive_solid] = True
        mask[self.passive_void] = True
        return mask

    def dummy_force(self, n_dofs):
        """dummy_force: unit-magnitude point load at the output dof, pointing along the desired motion"""
        F = zeros(n_dofs)
        F[self.output_dof] = self.output_sign*self.dummy_load
        return F


@dataclass(frozen=True)
class Mesh:
    """Mesh: uniform grid of bilinear quads

    nodes are numbered row-major with x fastest, node (i, j) -> j*(nex+1)+i;
    element (ex, ey) -> ey*nex+ex with counterclockwise connectivity.
    Displacement dofs of node n are (2n, 2n+1), its pressure dof is n.
    """
    nex: int
    ney: int
    lx: float
    ly: float
    thickness: float
    coords: np.ndarray = field(repr=False)
    elements: np.ndarray = field(repr=False)
    preset: Optional[ProblemPreset] = field(default=None, repr=False)

    @property
    def n_nodes(self):
        return len(self.coords)

    @property
    def n_elements(self):
        return len(self.elements)

    @property
    def n_dofs(self):
        return 2*self.n_nodes

    @property
    def dx(self):
        return self.lx/self.nex

    @property
    def dy(self):
        return self.ly/self.ney

    @property
    def h(self):
        return min(self.dx, self.dy)

    @property
    def areas(self):
        return np.full(self.n_elements, self.dx*self.dy)

    @property
    def centroids(self):
        return self.coords[self.elements].mean(axis=1)

    @property
    def edof(self):
        return element_dofs(self.elements)

    def node_id(self, i, j):
        return j*(self.nex+1)+i

    def element_id(self, ex, ey):
        return ey*self.nex+ex

    def reference_element(self):
        """nodal coordinates of element 0, shared by every element of the grid"""
        return self.coords[self.elements[0]]

    def boundary_nodes(self, edge, span=None):
        """boundary_nodes: node ids on an edge, optionally restricted to a coordinate span along it

        :param edge: one of left, right, bottom, top
        :param span: (a, b) in meters along the edge (y for vertical edges, x otherwise)
        """
        if edge not in EDGES:
            raise ConfigurationError(f'unknown edge {edge}')
        i = arange(self.nex+1)
        j = arange(self.ney+1)
        if edge == 'left':
            ids, along = self.node_id(0, j), j*self.dy
        elif edge == 'right':
            ids, along = self.node_id(self.nex, j), j*self.dy
        elif edge == 'bottom':
            ids, along = self.node_id(i, 0), i*self.dx
        else:
            ids, along = self.node_id(i, self.ney), i*self.dx
        if span is not None:
            tol = 1e-9*max(self.lx, self.ly)
            a, b = span
            ids = ids[(along >= a-tol) & (along <= b+tol)]
        return ids

    def exterior_nodes(self):
        return np.unique(np.concatenate([self.boundary_nodes(e) for e in EDGES]))

    def nearest_node(self, point):
        return int(np.argmin(np.sum((self.coords-array(point, dtype=float))**2, axis=1)))

    def elements_in_box(self, box):
        """element ids whose centroid lies in [[x0, x1], [y0, y1]]"""
        (x0, x1), (y0, y1) = box
        tol = 1e-9*max(self.lx, self.ly)
        c = self.centroids
        inside = (c[:, 0] >= x0-tol) & (c[:, 0] <= x1+tol) & (c[:, 1] >= y0-tol) & (c[:, 1] <= y1+tol)
        return np.flatnonzero(inside)


def build_grid(nex, ney, lx, ly, t):
    """build_grid: uniform nex x ney grid of bilinear quads on [0, lx] x [0, ly]

    :param nex: elements along x
    :param ney: elements along y
    :param lx: domain width (m)
    :param ly: domain height (m)
    :param t: thickness (m)
    """
    if int(nex) != nex or int(ney) != ney or nex <= 0 or ney <= 0:
        raise ConfigurationError(f'element counts must be positive integers, got {nex}, {ney}')
    if not (lx > 0 and ly > 0 and t > 0):
        raise ConfigurationError(f'dimensions must be positive, got {lx}, {ly}, {t}')
    nex, ney = int(nex), int(ney)
    X, Y = meshgrid(arange(nex+1)*(lx/nex), arange(ney+1)*(ly/ney))
    coords = np.stack([X.ravel(), Y.ravel()], axis=1)

    ex, ey = meshgrid(arange(nex), arange(ney))
    n0 = (ey*(nex+1)+ex).ravel()
    elements = np.stack([n0, n0+1, n0+nex+2, n0+nex+1], axis=1)

    # every element is a translate of element 0
    element_gradients(coords[elements[0]])
    return Mesh(nex, ney, float(lx), float(ly), float(t), _frozen(coords, float), _frozen(elements, int))

###################
# Presets
###################

def preset_spec(name, lx, ly, clamp):
    """preset_spec: built-in mechanism problems written in the preset file schema

    :param name: inverter, gripper or contractor
    :param clamp: length of each fixed support patch along its edge (m)
    """
    if name == 'inverter':
        return {'name': 'inverter',
                'domain': {'lx': lx, 'ly': ly},
                'bcs': {'pressure': [{'edge': 'left', 'value': 'p_in'},
                                     {'edge': 'top', 'value': 0.},
                                     {'edge': 'right', 'value': 0.}],
                        'fixed': [{'edge': 'left', 'span': [0., clamp], 'dofs': 'xy'},
                                  {'edge': 'left', 'span': [ly-clamp, ly], 'dofs': 'xy'}],
                        'symmetry': 'bottom'},
                'passive': {'solid': [], 'void': []},
                'spring': {'kss': 1e4},
                'output': {'point': [lx, 0.], 'direction': 'x', 'sign': -1., 'dummy_load': 1.}}
    if name == 'gripper':
        jaw = lx/5
        return {'name': 'gripper',
                'domain': {'lx': lx, 'ly': ly},
                'bcs': {'pressure': [{'edge': 'left', 'value': 'p_in'},
                                     {'edge': 'top', 'value': 0.},
                                     {'edge': 'right', 'value': 0.}],
                        'fixed': [{'edge': 'left', 'span': [0., clamp], 'dofs': 'xy'},
                                  {'edge': 'left', 'span': [ly-clamp, ly], 'dofs': 'xy'}],
                        'symmetry': 'bottom'},
                'passive': {'solid': [[[lx-jaw, lx], [jaw, jaw+lx/40]]],
                            'void': [[[lx-jaw, lx], [0., jaw]]]},
                'spring': {'kss': 1e4},
                'output': {'point': [lx, jaw], 'direction': 'y', 'sign': -1., 'dummy_load': 1.}}
    if name == 'contractor':
        # output along y: the layout is left/right symmetric, so the centre node never moves in x
        return {'name': 'contractor',
                'domain': {'lx': lx, 'ly': ly},
                'bcs': {'pressure': [{'edge': 'left', 'value': 'p_in'},
                                     {'edge': 'right', 'value': 'p_in'},
                                     {'edge': 'top', 'value': 0.}],
                        'fixed': [{'edge': 'left', 'span': [ly-clamp, ly], 'dofs': 'xy'},
                                  {'edge': 'right', 'span': [ly-clamp, ly], 'dofs': 'xy'}],
                        'symmetry': 'bottom'},
                'passive': {'solid': [[[lx/2-lx/80, lx/2+lx/80], [ly/2-ly/8, ly/2+ly/8]]],
                            'void': []},
                'spring': {'kss': 1e4},
                'output': {'point': [lx/2, ly/2], 'direction': 'y', 'sign': -1., 'dummy_load': 1.}}
    raise ConfigurationError(f'unknown preset {name}')


def preset_from_dict(mesh, spec, p_in=1e5):
    """preset_from_dict: resolve a preset description (keys domain, bcs, passive, spring, output) on a mesh

    Pressure entries are applied in order and a node keeps the first value it
    receives. The symmetry edge gets a roller and no pressure data.
    """
    unknown = set(spec) - {'name', 'domain', 'bcs', 'passive', 'spring', 'output'}
    if unknown:
        raise ConfigurationError(f'unknown preset keys {sorted(unknown)}')
    try:
        domain = spec.get('domain', {})
        for key, size in [('lx', mesh.lx), ('ly', mesh.ly)]:
            if key in domain and not np.isclose(domain[key], size):
                raise ConfigurationError(f'preset domain {key}={domain[key]} does not match mesh {size}')
        bcs = spec['bcs']
        symmetry = bcs.get('symmetry')
        if symmetry is not None and symmetry not in EDGES:
            raise ConfigurationError(f'unknown symmetry edge {symmetry}')

        pressure = {}
        for entry in bcs['pressure']:
            value = p_in if entry['value'] == 'p_in' else float(entry['value'])
            for n in mesh.boundary_nodes(entry['edge'], entry.get('span')).tolist():
                pressure.setdefault(n, value)
        if not pressure:
            raise ConfigurationError('preset defines no pressure boundary')
        nodes = array(sorted(pressure), dtype=int)
        values = array([pressure[n] for n in nodes.tolist()])

        fixed = []
        for entry in bcs.get('fixed', []):
            ids = mesh.boundary_nodes(entry['edge'], entry.get('span'))
            for d in entry.get('dofs', 'xy'):
                fixed.append(2*ids+'xy'.index(d))
        if symmetry is not None:
            normal = 'x' if symmetry in ('left', 'right') else 'y'
            fixed.append(2*mesh.boundary_nodes(symmetry)+'xy'.index(normal))
        fixed = np.unique(np.concatenate(fixed)) if fixed else array([], dtype=int)

        passive = spec.get('passive', {})
        solid = [mesh.elements_in_box(b) for b in passive.get('solid', [])]
        void = [mesh.elements_in_box(b) for b in passive.get('void', [])]
        solid = np.unique(np.concatenate(solid)) if solid else array([], dtype=int)
        void = np.unique(np.concatenate(void)) if void else array([], dtype=int)

        out = spec['output']
        node = mesh.nearest_node(out['point'])
        output_dof = 2*node+'xy'.index(out.get('direction', 'x'))
        return ProblemPreset(name=spec.get('name', 'custom'),
                             pressure_nodes=nodes,
                             pressure_values=values,
                             fixed_dofs=fixed,
                             passive_solid=solid,
                             passive_void=void,
                             symmetry_edge=symmetry,
                             output_dof=output_dof,
                             output_sign=float(np.sign(out.get('sign', -1.))),
                             kss=float(spec.get('spring', {}).get('kss', 1e4)),
                             dummy_load=float(out.get('dummy_load', 1.)))
    except (KeyError, TypeError, ValueError) as err:
        raise ConfigurationError(f'malformed preset: {err!r}')


def make_preset(name, mesh, p_in=1e5, clamp=None, kss=None, dummy_load=None):
    """make_preset: one of the built-in presets sized to the mesh, clamps 2 elements long by default"""
    clamp = 2*mesh.dy if clamp is None else clamp
    spec = preset_spec(name, mesh.lx, mesh.ly, clamp)
    if kss is not None:
        spec['spring']['kss'] = kss
    if dummy_load is not None:
        spec['output']['dummy_load'] = dummy_load
    return preset_from_dict(mesh, spec, p_in)


def apply_preset(mesh, preset):
    """apply_preset: attach a preset to a mesh after checking every id it refers to"""
    if preset.pressure_nodes.size and (preset.pressure_nodes.min() < 0 or preset.pressure_nodes.max() >= mesh.n_nodes):
        raise ConfigurationError('pressure node id out of range')
    if preset.fixed_dofs.size and (preset.fixed_dofs.min() < 0 or preset.fixed_dofs.max() >= mesh.n_dofs):
        raise ConfigurationError('fixed dof id out of range')
    if not 0 <= preset.output_dof < mesh.n_dofs:
        raise ConfigurationError(f'output dof {preset.output_dof} out of range')
    for name in ('passive_solid', 'passive_void'):
        ids = getattr(preset, name)
        if ids.size and (ids.min() < 0 or ids.max() >= mesh.n_elements):
            raise ConfigurationError(f'{name} element id out of range')
    if preset.symmetry_edge is not None:
        on_symmetry = np.intersect1d(preset.pressure_nodes, mesh.boundary_nodes(preset.symmetry_edge))
        corners = np.concatenate([mesh.boundary_nodes(e) for e in EDGES if e != preset.symmetry_edge])
        if np.setdiff1d(on_symmetry, corners).size:
            logger.warning('pressure data on the interior of the symmetry edge')
    return replace(mesh, preset=preset)
