"""Robust inverter on the 200x100 grid, then a nonlinear check of the intermediate design"""
import numpy as np
import matplotlib.pyplot as plt

from pacm.config import RunConfig
from pacm.export import plot_design
from pacm.nlfea import HyperelasticParams, extract_structure, linear_response, pressure_sweep
from pacm.optimize import run

config = RunConfig(preset='inverter', out_dir='results/inverter', export_plots=True)
state, log = run(config)

mesh = config.mesh()
structure, boundary = extract_structure(mesh, state.intermediate, config.threshold,
                                        HyperelasticParams.from_material(config.E1, config.nu))
pressures = np.array([1., 10., 25., 50.])*1e5
points = pressure_sweep(structure, boundary, pressures, n_steps=20)
u_lin = linear_response(structure, boundary, pressures[0])

Δ = np.array([pt.output_displacement for pt in points])
plt.plot(pressures/1e5, -Δ*1e3, 'o-', label='neo-Hookean')
plt.plot(pressures/1e5, -u_lin[structure.output_dof]*1e3*pressures/pressures[0], 'k--', label='linear')
plt.xlabel('p (bar)')
plt.ylabel('output displacement (mm)')
plt.legend()
plt.savefig('results/inverter/sweep.png')

plot_design(mesh, state.intermediate, 'results/inverter/intermediate.png')
np.save('results/inverter/sweep', np.stack([pressures, Δ]))
