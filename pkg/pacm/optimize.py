"""Robust min-max topology optimization loop"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields, astuple
from pathlib import Path

from numpy import full
import numpy as np

import matplotlib.pyplot as plt
from tqdm import tqdm

from .fields import (REALIZATIONS, build_filter, design_state, backprop, freeze_passive,
                     gray_indicator)
from .mma import minmax_mma, minmax_update
from .sensitivity import analyze, volume_and_sensitivity, volume_fraction
from .tools import ConfigurationError, NumericalError, PacmError, logger


@dataclass
class OptRecord:
    iter: int
    beta: float
    f0_e: float
    f0_i: float
    f0_d: float
    vf_e: float
    vf_i: float
    vf_d: float
    mnd_i: float
    delta_i: float

    @property
    def minmax(self):
        return max(self.f0_e, self.f0_i, self.f0_d)


LOG_FIELDS = tuple(f.name for f in fields(OptRecord))


class OptLog(list):
    """OptLog: one OptRecord per completed iteration"""
    def column(self, name):
        return np.array([getattr(r, name) for r in self])

    def rows(self):
        return [astuple(r) for r in self]


def beta_schedule(iteration, period=50, beta_init=1., beta_max=128.):
    """beta_schedule: β doubles every period iterations from beta_init, capped at beta_max"""
    if iteration < 1:
        raise ConfigurationError(f'iterations count from 1, got {iteration}')
    return min(beta_init*2**((iteration-1)//period), beta_max)


def dilated_volume_update(v_target_i, ρ̄i, ρ̄d, mesh=None):
    """dilated_volume_update: V_d* = V_i*/V(ρ̄i) V(ρ̄d), volumes as fractions"""
    vi = volume_fraction(ρ̄i, mesh) if mesh is not None else float(np.mean(ρ̄i))
    vd = volume_fraction(ρ̄d, mesh) if mesh is not None else float(np.mean(ρ̄d))
    if not vi > 0:
        raise NumericalError('intermediate design has no volume')
    return v_target_i/vi*vd


class TopologyOptimizer:
    """TopologyOptimizer: minimise the worst of the eroded, intermediate and dilated objectives

    :param config: RunConfig
    :param mesh: optional mesh with preset, built from config if not given
    """
    def __init__(self, config, mesh=None):
        self.config = config
        self.mesh = config.mesh() if mesh is None else mesh
        self.preset = self.mesh.preset
        self.material = config.material()
        self.params = config.darcy_params()
        self.filter = build_filter(self.mesh, config.r_fill)
        self.active = ~self.preset.passive_mask(self.mesh.n_elements)
        self.Δη = config.effective_delta_eta
        self.iters = 0
        self.log = OptLog()
        self.state = None
        self.analyses = None
        self.mma = None
        self.v_target_d = config.volfrac
        self.settings = {
            'verbose': False,
            'progress': True,
            'checkpoint_dir': None,
            'checkpoint_every': config.checkpoint_every,
            'workers': config.workers,
        }

    def change_settings(self, new_settings):
        return self.settings.update(new_settings)

    def initial_design(self):
        return freeze_passive(full(self.mesh.n_elements, self.config.volfrac), self.preset)

    def evaluate(self, ρ, β):
        """evaluate: the three realizations of ρ and their analyses, one analysis if they coincide"""
        state = design_state(ρ, self.filter, β, self.Δη, self.preset)
        c = self.config

        def one(tag):
            return analyze(self.mesh, state.physical(tag), self.material, self.params, tag, c.mu, c.solver)

        if self.Δη == 0:
            a = one('intermediate')
            return state, {tag: a for tag in REALIZATIONS}
        if self.settings['workers'] > 1:
            with ThreadPoolExecutor(self.settings['workers']) as pool:
                results = list(pool.map(one, REALIZATIONS))
        else:
            results = [one(tag) for tag in REALIZATIONS]
        return state, dict(zip(REALIZATIONS, results))

    def record(self, it, state, analyses):
        mesh = self.mesh
        return OptRecord(iter=it, beta=float(state.β),
                         f0_e=analyses['eroded'].f0,
                         f0_i=analyses['intermediate'].f0,
                         f0_d=analyses['dilated'].f0,
                         vf_e=volume_fraction(state.eroded, mesh),
                         vf_i=volume_fraction(state.intermediate, mesh),
                         vf_d=volume_fraction(state.dilated, mesh),
                         mnd_i=gray_indicator(state.intermediate),
                         delta_i=float(analyses['intermediate'].elastic.Δ))

    def callback_store_values(self, record):
        self.log.append(record)
        if self.settings['verbose']:
            tqdm.write(f'{record.iter}:{record.minmax:.6g} vf={record.vf_i:.4f} Δ={record.delta_i:.4e}')
        logger.debug(f'iteration {record.iter}: f0 = ({record.f0_e:.6g}, {record.f0_i:.6g}, {record.f0_d:.6g})')
        self.iters += 1

    def checkpoint(self, it, ρ):
        folder = self.settings['checkpoint_dir']
        every = self.settings['checkpoint_every']
        if folder is None or not every or it % every:
            return
        Path(folder).mkdir(parents=True, exist_ok=True)
        np.savetxt(Path(folder)/f'rho_{it:04d}.txt', ρ)

    def constraint(self, state):
        """dilated volume constraint V/V_d* - 1 and its design gradient"""
        V, dV = volume_and_sensitivity(state.dilated, self.mesh)
        total = self.mesh.lx*self.mesh.ly*self.v_target_d
        g = V/total-1
        return g, backprop(dV/total, state, state.threshold('dilated'), self.preset)

    def optimize(self, ρ0=None):
        """optimize: run the continuation loop until max_iter or convergence at the final β

        :returns: (DesignState of the last evaluated design, OptLog)
        """
        c = self.config
        ρ = self.initial_design() if ρ0 is None else freeze_passive(ρ0, self.preset)
        self.mma = minmax_mma(int(self.active.sum()), len(REALIZATIONS), 1, move=c.move)
        self.v_target_d = c.volfrac

        for it in tqdm(range(1, c.max_iter+1), disable=not self.settings['progress']):
            β = beta_schedule(it, c.beta_period, c.beta_init, c.beta_max)
            try:
                state, analyses = self.evaluate(ρ, β)
                if it % c.volume_update_period == 0:
                    self.v_target_d = dilated_volume_update(c.volfrac, state.intermediate, state.dilated, self.mesh)
            except PacmError as err:
                raise type(err)(f'iteration {it}: {err}') from err
            self.state, self.analyses = state, analyses
            self.callback_store_values(self.record(it, state, analyses))
            self.checkpoint(it, ρ)
            if it == c.max_iter:
                break

            objectives = [(analyses[t].f0, backprop(analyses[t].gradient, state, state.threshold(t), self.preset))
                          for t in REALIZATIONS]
            ρ_next = minmax_update(ρ, objectives, [self.constraint(state)], self.mma, self.active)
            change = np.max(np.abs(ρ_next-ρ))
            if β >= c.beta_max and change < c.tol:
                logger.info(f'converged at iteration {it}, design change {change:.2e}')
                break
            ρ = ρ_next

        last = self.log[-1]
        logger.info(f'finished after {last.iter} iterations: f0 = ({last.f0_e:.5g}, {last.f0_i:.5g}, '
                    f'{last.f0_d:.5g}), intermediate volume {last.vf_i:.4f}, Δ = {last.delta_i:.4e} m')
        return self.state, self.log

    def plot_convergence(self, file, exact_value=None):
        """plot_convergence: objective histories and intermediate volume fraction"""
        fig, ax = plt.subplots()
        x = self.log.column('iter')
        for name, label in [('f0_e', 'eroded'), ('f0_i', 'intermediate'), ('f0_d', 'dilated')]:
            ax.plot(x, self.log.column(name), label=label)
        if exact_value is not None:
            ax.axhline(exact_value, c='r')
        ax.set_xlabel('iterations')
        ax.set_ylabel(f'-{self.config.mu:g} MSE/SE')
        ax.legend()
        ax2 = ax.twinx()
        ax2.plot(x, self.log.column('vf_i'), 'k--')
        ax2.set_ylabel('intermediate volume fraction')
        if file:
            fig.savefig(file)
        plt.close(fig)


def run(config, out_dir=None, write=True, settings=None):
    """run: optimize and write fields, log, contour and plots into the output directory

    :returns: (DesignState, OptLog)
    """
    from .export import write_outputs

    opt = TopologyOptimizer(config)
    out = Path(out_dir or config.output_dir())
    if write:
        opt.change_settings({'checkpoint_dir': out/'checkpoints'})
    if settings:
        opt.change_settings(settings)
    state, log = opt.optimize()
    if write:
        write_outputs(opt, out)
    return state, log
