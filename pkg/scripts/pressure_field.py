"""Darcy pressure of a fixed design as the drainage term and flow contrast change"""
import numpy as np
import matplotlib.pyplot as plt

from pacm.darcy import DarcyParams, pressure_field
from pacm.mesh import apply_preset, build_grid, make_preset

mesh = build_grid(100, 50, 0.2, 0.1, 1e-3)
mesh = apply_preset(mesh, make_preset('inverter', mesh))
x, y = mesh.centroids.T
ρ̄ = ((x-0.06)**2/0.05**2+(y-0.03)**2/0.04**2 > 1).astype(float)

Δss = [2, 5, 10]
fig, axes = plt.subplots(1, len(Δss), figsize=(12, 3))
for ax, Δs in zip(axes, Δss):
    params = DarcyParams(delta_s=Δs*mesh.h)
    p = pressure_field(mesh, ρ̄, params).p
    X = mesh.coords[:, 0].reshape(mesh.ney+1, mesh.nex+1)
    Y = mesh.coords[:, 1].reshape(mesh.ney+1, mesh.nex+1)
    c = ax.contourf(X, Y, p.reshape(mesh.ney+1, mesh.nex+1)/1e5, 20)
    ax.set_title(f'Δs = {Δs}h')
    ax.set_aspect('equal')
fig.colorbar(c, ax=axes, label='p (bar)')
plt.savefig('pressure_field.png')
