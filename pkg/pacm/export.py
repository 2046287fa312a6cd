"""Result files: legacy VTK, CSV logs, polylines, DXF and plots"""
from pathlib import Path

from numpy import zeros
import numpy as np

import matplotlib.pyplot as plt

from .config import save_config
from .contour import cell_to_point, extract_contour
from .fields import REALIZATIONS
from .optimize import LOG_FIELDS
from .tools import logger

VTK_QUAD = 9


def _points3(coords):
    pts = zeros((len(coords), 3))
    pts[:, :2] = coords
    return pts


def export_vtk(grid, path, cell_data=None, point_data=None, displacement=None, magnification=1.,
               title='pacm'):
    """export_vtk: legacy ASCII unstructured grid of quads

    :param grid: anything with coords (n, 2) and elements (m, 4), a Mesh or a Structure
    :param cell_data: name -> (m,) array
    :param point_data: name -> (n,) scalars or (2n,) interleaved vectors
    :param displacement: (2n,) nodal displacement, points are moved by magnification*displacement
    """
    coords = np.asarray(grid.coords, dtype=float)
    elements = np.asarray(grid.elements, dtype=int)
    n, m = len(coords), len(elements)
    cell_data = dict(cell_data or {})
    point_data = dict(point_data or {})
    if displacement is not None:
        displacement = np.asarray(displacement, dtype=float)
        coords = coords+magnification*displacement.reshape(-1, 2)
        point_data.setdefault('displacement', displacement)

    for name, values in cell_data.items():
        if np.shape(values) != (m,):
            raise ValueError(f'cell field {name} has shape {np.shape(values)}, grid has {m} cells')
    for name, values in point_data.items():
        if np.shape(values) not in ((n,), (2*n,)):
            raise ValueError(f'point field {name} has shape {np.shape(values)}, grid has {n} points')

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w') as f:
        f.write('# vtk DataFile Version 3.0\n')
        f.write(f'{title}\n')
        f.write('ASCII\nDATASET UNSTRUCTURED_GRID\n')
        f.write(f'POINTS {n} double\n')
        np.savetxt(f, _points3(coords), fmt='%.12e')
        f.write(f'CELLS {m} {5*m}\n')
        np.savetxt(f, np.column_stack([np.full(m, 4), elements]), fmt='%d')
        f.write(f'CELL_TYPES {m}\n')
        np.savetxt(f, np.full(m, VTK_QUAD), fmt='%d')
        if cell_data:
            f.write(f'CELL_DATA {m}\n')
            for name, values in cell_data.items():
                f.write(f'SCALARS {name} double 1\nLOOKUP_TABLE default\n')
                np.savetxt(f, np.asarray(values, dtype=float), fmt='%.12e')
        if point_data:
            f.write(f'POINT_DATA {n}\n')
            for name, values in point_data.items():
                values = np.asarray(values, dtype=float)
                if values.shape == (n,):
                    f.write(f'SCALARS {name} double 1\nLOOKUP_TABLE default\n')
                    np.savetxt(f, values, fmt='%.12e')
                else:
                    f.write(f'VECTORS {name} double\n')
                    np.savetxt(f, _points3(values.reshape(-1, 2)), fmt='%.12e')
    return path


def read_vtk(path):
    """read_vtk: the subset of legacy ASCII written by export_vtk

    :returns: dict with points, cells, cell_data, point_data
    """
    with open(path) as f:
        lines = f.read().split('\n')
    tokens = ' '.join(lines[4:]).split()
    out = {'points': None, 'cells': None, 'cell_data': {}, 'point_data': {}}
    i, section, size = 0, None, 0
    while i < len(tokens):
        word = tokens[i]
        if word == 'POINTS':
            n = int(tokens[i+1])
            out['points'] = np.array(tokens[i+3:i+3+3*n], dtype=float).reshape(n, 3)
            i += 3+3*n
        elif word == 'CELLS':
            m, total = int(tokens[i+1]), int(tokens[i+2])
            flat = np.array(tokens[i+3:i+3+total], dtype=int).reshape(m, -1)
            out['cells'] = flat[:, 1:]
            i += 3+total
        elif word == 'CELL_TYPES':
            i += 2+int(tokens[i+1])
        elif word in ('CELL_DATA', 'POINT_DATA'):
            section, size = word.lower(), int(tokens[i+1])
            i += 2
        elif word == 'SCALARS':
            name = tokens[i+1]
            start = i+6
            out[section][name] = np.array(tokens[start:start+size], dtype=float)
            i = start+size
        elif word == 'VECTORS':
            name = tokens[i+1]
            start = i+3
            out[section][name] = np.array(tokens[start:start+3*size], dtype=float).reshape(size, 3)
            i = start+3*size
        else:
            raise ValueError(f'unexpected token {word!r} in {path}')
    return out


def export_csv(log, path):
    """export_csv: one row per iteration, header from OptRecord"""
    rows = np.array(log.rows(), dtype=float).reshape(-1, len(LOG_FIELDS))
    fmt = ['%d']+['%.10e']*(len(LOG_FIELDS)-1)
    np.savetxt(path, rows, fmt=fmt, delimiter=',', header=','.join(LOG_FIELDS), comments='')
    return path


def read_csv(path):
    return np.atleast_2d(np.loadtxt(path, delimiter=',', skiprows=1))


def write_polylines(contours, path):
    """x y per vertex, a blank line between loops"""
    with open(path, 'w') as f:
        for k, loop in enumerate(contours):
            if k:
                f.write('\n')
            np.savetxt(f, loop, fmt='%.12e')
    return path


def write_dxf(contours, path):
    """write_dxf: closed POLYLINE entities in a bare ENTITIES section"""
    with open(path, 'w') as f:
        f.write('0\nSECTION\n2\nENTITIES\n')
        for loop in contours:
            f.write('0\nPOLYLINE\n8\n0\n66\n1\n70\n1\n')
            for x, y in loop[:-1]:
                f.write(f'0\nVERTEX\n8\n0\n10\n{x:.12e}\n20\n{y:.12e}\n')
            f.write('0\nSEQEND\n')
        f.write('0\nENDSEC\n0\nEOF\n')
    return path


def plot_design(mesh, ρ̄, file=None, pressure=None):
    """plot_design: density in grayscale, pressure as filled contours beside it if given"""
    extent = (0, mesh.lx, 0, mesh.ly)
    image = np.asarray(ρ̄).reshape(mesh.ney, mesh.nex)
    if pressure is None:
        fig, ax = plt.subplots()
        axes = [ax]
    else:
        fig, axes = plt.subplots(1, 2, figsize=(10, 3))
    axes[0].imshow(1-image, cmap='gray', origin='lower', extent=extent, vmin=0, vmax=1)
    axes[0].set_aspect('equal')
    if pressure is not None:
        X = mesh.coords[:, 0].reshape(mesh.ney+1, mesh.nex+1)
        Y = mesh.coords[:, 1].reshape(mesh.ney+1, mesh.nex+1)
        c = axes[1].contourf(X, Y, np.asarray(pressure).reshape(mesh.ney+1, mesh.nex+1), 20)
        axes[1].set_aspect('equal')
        fig.colorbar(c, ax=axes[1], label='p (N/m$^2$)')
    if file:
        fig.savefig(file)
    plt.close(fig)


def export_sensitivities(mesh, analyses, path):
    """per-element objective and load sensitivities of each realization"""
    cells = {}
    for tag, a in analyses.items():
        cells[f'theta1_{tag}'] = a.Θ1
        cells[f'theta2_{tag}'] = a.Θ2
    return export_vtk(mesh, path, cell_data=cells)


def export_sweep_csv(points, path):
    """pressure_bar,output_displacement_mm,converged"""
    with open(path, 'w') as f:
        f.write('pressure_bar,output_displacement_mm,converged\n')
        for pt in points:
            f.write(f'{pt.pressure/1e5:g},{pt.output_displacement*1e3:.6f},{int(pt.converged)}\n')
    return path


def export_newton_history(structure, result, folder, stem='step'):
    """one VTK per converged load step of a NewtonResult"""
    folder = Path(folder)
    files = []
    for k, step in enumerate(result.steps):
        files.append(export_vtk(structure, folder/f'{stem}_{k:03d}.vtk', displacement=step.u,
                                title=f'p = {step.pressure:.6g} Pa'))
    return files


def export_design(mesh, state, path, analysis=None, magnification=None):
    """all design fields on one grid, optionally the intermediate pressure and displacement"""
    cells = {'rho': state.ρ, 'rho_filtered': state.ρ̃}
    for tag in REALIZATIONS:
        cells[f'rho_{tag}'] = state.physical(tag)
    points = {}
    if analysis is not None:
        points['pressure'] = analysis.pressure.p
        points['displacement'] = analysis.elastic.u
    path = export_vtk(mesh, path, cell_data=cells, point_data=points)
    if analysis is not None and magnification:
        deformed = Path(path).with_name(Path(path).stem+'_deformed.vtk')
        export_vtk(mesh, deformed, cell_data={'rho_intermediate': state.intermediate},
                   displacement=analysis.elastic.u, magnification=magnification)
    return path


def write_outputs(opt, out):
    """write_outputs: everything a finished TopologyOptimizer leaves in its output directory"""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    c = opt.config
    save_config(c, out/'config.json')
    state = opt.state
    for tag in REALIZATIONS:
        np.savetxt(out/f'rho_{tag}.txt', state.physical(tag))
    np.savetxt(out/'rho.txt', state.ρ)
    if c.export_csv:
        export_csv(opt.log, out/'convergence.csv')
    if c.export_vtk:
        export_design(opt.mesh, state, out/'design.vtk', opt.analyses['intermediate'], c.magnification)
        export_sensitivities(opt.mesh, opt.analyses, out/'sensitivities.vtk')
    if c.export_contour:
        contours = extract_contour(opt.mesh, state.intermediate, c.threshold)
        write_polylines(contours, out/'contour.txt')
        write_dxf(contours, out/'contour.dxf')
    if c.export_plots:
        opt.plot_convergence(out/'convergence.png')
        plot_design(opt.mesh, state.intermediate, out/'design.png', opt.analyses['intermediate'].pressure.p)
    logger.info(f'results written to {out}')
    return out
