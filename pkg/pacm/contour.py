"""Iso-contours of element density fields by marching squares"""
from dataclasses import dataclass, field
from typing import List

from numpy import array, concatenate, zeros
import numpy as np

from .tools import DomainError, logger


def cell_to_point(mesh, values):
    """cell_to_point: nodal mean of the adjacent element values"""
    values = np.asarray(values, dtype=float)
    if values.shape != (mesh.n_elements,):
        raise ValueError(f'expected {mesh.n_elements} element values, got {values.shape}')
    total = np.bincount(mesh.elements.ravel(), weights=np.repeat(values, 4), minlength=mesh.n_nodes)
    count = np.bincount(mesh.elements.ravel(), minlength=mesh.n_nodes)
    return total/count


@dataclass
class ContourSet:
    """ContourSet: closed loops (first point repeated last) with the solid on their left"""
    loops: List[np.ndarray] = field(default_factory=list)
    threshold: float = 0.85

    def __len__(self):
        return len(self.loops)

    def __iter__(self):
        return iter(self.loops)

    def signed_areas(self):
        return array([0.5*np.sum(l[:-1, 0]*l[1:, 1]-l[1:, 0]*l[:-1, 1]) for l in self.loops])


def _crossing(key, X, Y, V, t):
    kind, i, j = key
    if kind == 'h':
        a, b = V[j, i], V[j, i+1]
        s = (t-a)/(b-a)
        return (X[i]+s*(X[i+1]-X[i]), Y[j])
    a, b = V[j, i], V[j+1, i]
    s = (t-a)/(b-a)
    return (X[i], Y[j]+s*(Y[j+1]-Y[j]))


def _cell_segments(i, j, V, t):
    corners = [V[j, i], V[j, i+1], V[j+1, i+1], V[j+1, i]]
    inside = [c >= t for c in corners]
    edges = [('h', i, j), ('v', i+1, j), ('h', i, j+1), ('v', i, j)]
    exits = [k for k in range(4) if inside[k] and not inside[(k+1) % 4]]
    entries = [k for k in range(4) if not inside[k] and inside[(k+1) % 4]]
    if not exits:
        return []
    if len(exits) == 1:
        return [(edges[exits[0]], edges[entries[0]])]
    connected = np.mean(corners) >= t
    segments = []
    for k in exits:
        if connected:
            m = (k+1) % 4
        else:
            m = (k-1) % 4
        segments.append((edges[k], edges[m]))
    return segments


def _dedupe(points, tol):
    keep = [points[0]]
    for p in points[1:]:
        if np.hypot(*(p-keep[-1])) > tol:
            keep.append(p)
    return array(keep)


def extract_contour(mesh, ρ̄, threshold=0.85):
    """extract_contour: loops around the region where the node-averaged density is >= threshold

    The nodal field is padded with a ring of zeros one element outside the
    domain so that solid touching the boundary closes along it; points are
    clipped back into the domain. Saddle cells are joined when the cell
    average reaches the threshold.
    """
    ρ̄ = np.asarray(ρ̄, dtype=float)
    if np.any(ρ̄ < -1e-12) or np.any(ρ̄ > 1+1e-12):
        raise DomainError('density outside [0, 1]')
    nodal = cell_to_point(mesh, ρ̄).reshape(mesh.ney+1, mesh.nex+1)
    if not np.any(nodal >= threshold):
        logger.warning(f'no material above threshold {threshold}, empty contour')
        return ContourSet([], threshold)

    V = zeros((mesh.ney+3, mesh.nex+3))
    V[1:-1, 1:-1] = nodal
    X = concatenate([[-mesh.dx], np.arange(mesh.nex+1)*mesh.dx, [mesh.lx+mesh.dx]])
    Y = concatenate([[-mesh.dy], np.arange(mesh.ney+1)*mesh.dy, [mesh.ly+mesh.dy]])

    following = {}
    for j in range(V.shape[0]-1):
        for i in range(V.shape[1]-1):
            for start, end in _cell_segments(i, j, V, threshold):
                following[start] = end

    loops = []
    tol = 1e-12*max(mesh.lx, mesh.ly)
    while following:
        first, key = next(iter(following.items()))
        del following[first]
        chain = [first]
        while key != first:
            chain.append(key)
            key = following.pop(key)
        points = array([_crossing(k, X, Y, V, threshold) for k in chain])
        points[:, 0] = np.clip(points[:, 0], 0., mesh.lx)
        points[:, 1] = np.clip(points[:, 1], 0., mesh.ly)
        points = _dedupe(points, tol)
        if len(points) > 1 and np.hypot(*(points[-1]-points[0])) <= tol:
            points = points[:-1]
        if len(points) < 3:
            continue
        loops.append(concatenate([points, points[:1]]))
    logger.info(f'{len(loops)} contour loops at threshold {threshold}')
    return ContourSet(loops, threshold)
