"""Robust and traditional runs of each preset side by side: objective history and final layouts"""
import numpy as np
import matplotlib.pyplot as plt

from pacm.config import RunConfig
from pacm.optimize import TopologyOptimizer

presets = ['inverter', 'gripper', 'contractor']
formulations = ['robust', 'traditional']

fig, axes = plt.subplots(len(presets), 3, figsize=(12, 8))
for i, preset in enumerate(presets):
    for j, formulation in enumerate(formulations):
        config = RunConfig(preset=preset, formulation=formulation, nex=100, ney=50, max_iter=300)
        opt = TopologyOptimizer(config)
        opt.change_settings({'verbose': False})
        state, log = opt.optimize()
        axes[i, 0].plot(log.column('iter'), log.column('f0_i'), label=formulation)
        mesh = opt.mesh
        axes[i, j+1].imshow(1-state.intermediate.reshape(mesh.ney, mesh.nex), cmap='gray',
                            origin='lower', extent=(0, mesh.lx, 0, mesh.ly), vmin=0, vmax=1)
        axes[i, j+1].set_title(f'{preset} {formulation}: Δ = {log[-1].delta_i*1e3:.3f} mm')
        np.savetxt(f'{preset}_{formulation}.txt', state.intermediate)
    axes[i, 0].set_ylabel('intermediate objective')
    axes[i, 0].legend()
axes[-1, 0].set_xlabel('iterations')
plt.tight_layout()
plt.savefig('formulations.png')
