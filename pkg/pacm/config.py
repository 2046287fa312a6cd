"""Run configuration, JSON round-trippable"""
from dataclasses import dataclass, field, asdict, fields
import json
import os

from .darcy import DarcyParams
from .elasticity import MaterialParams
from .mesh import build_grid, make_preset, preset_from_dict, apply_preset
from .tools import ConfigurationError

OUT_DIR_ENV = 'PACM_OUT_DIR'


def resolve_length(value, h):
    """resolve_length: meters from a number, or from a string like '5.4h' as a multiple of h"""
    if isinstance(value, bool):
        raise ConfigurationError(f'bad length {value!r}')
    if isinstance(value, (int, float)):
        length = float(value)
    elif isinstance(value, str) and value.strip().endswith('h'):
        try:
            length = float(value.strip()[:-1] or 1)*h
        except ValueError:
            raise ConfigurationError(f'bad length {value!r}')
    else:
        raise ConfigurationError(f'bad length {value!r}, expected meters or a multiple of h like "5.4h"')
    if not length > 0:
        raise ConfigurationError(f'length {value!r} must be positive')
    return length


@dataclass
class RunConfig:
    # problem
    preset: str = 'inverter'
    preset_spec: dict = None
    nex: int = 200
    ney: int = 100
    lx: float = 0.2
    ly: float = 0.1
    thickness: float = 1e-3
    clamp: object = '2h'
    kss: float = 1e4
    dummy_load: float = 1.
    # material
    E1: float = 3e9
    E0_ratio: float = 1e-6
    nu: float = 0.4
    penal: float = 3.
    # pressure
    p_in: float = 1e5
    p_ext: float = 0.
    k_v: float = 1.
    epsilon: float = 1e-7
    eta_k: float = 0.3
    beta_k: float = 10.
    eta_d: float = 0.2
    beta_d: float = 10.
    r: float = 0.1
    delta_s: object = '2h'
    # design parameterization
    formulation: str = 'robust'
    volfrac: float = 0.2
    delta_eta: float = 0.05
    rfill: object = None
    # optimizer
    mu: float = 1000.
    move: float = 0.1
    max_iter: int = 400
    beta_init: float = 1.
    beta_max: float = 128.
    beta_period: int = 50
    volume_update_period: int = 25
    tol: float = 1e-4
    solver: str = 'direct'
    workers: int = 1
    # output
    out_dir: str = 'results'
    export_vtk: bool = True
    export_csv: bool = True
    export_contour: bool = True
    export_plots: bool = False
    checkpoint_every: int = 25
    threshold: float = 0.85
    magnification: float = 50.
    # nonlinear verification
    verify_pressures_bar: list = field(default_factory=lambda: [10., 25., 50.])
    verify_steps: int = 10

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.preset not in ('inverter', 'gripper', 'contractor', 'custom'):
            raise ConfigurationError(f'unknown preset {self.preset}')
        if self.preset == 'custom' and not self.preset_spec:
            raise ConfigurationError('custom preset needs preset_spec')
        if self.formulation not in ('robust', 'traditional'):
            raise ConfigurationError(f'unknown formulation {self.formulation}')
        if not 0 <= self.delta_eta <= 0.5:
            raise ConfigurationError(f'delta_eta must lie in [0, 0.5], got {self.delta_eta}')
        if not 0 < self.volfrac <= 1:
            raise ConfigurationError(f'volfrac must lie in (0, 1], got {self.volfrac}')
        for name in ('nex', 'ney', 'max_iter', 'beta_period', 'volume_update_period', 'workers', 'verify_steps'):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value <= 0:
                raise ConfigurationError(f'{name} must be a positive integer, got {value!r}')
        for name in ('lx', 'ly', 'thickness', 'E1', 'E0_ratio', 'move', 'beta_init', 'beta_max', 'tol', 'mu'):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f'{name} must be positive')
        if not 0 < self.threshold < 1:
            raise ConfigurationError('threshold must lie in (0, 1)')
        if self.solver not in ('direct', 'cg'):
            raise ConfigurationError(f'unknown solver {self.solver}')
        for name in ('clamp', 'delta_s') + (('rfill',) if self.rfill is not None else ()):
            resolve_length(getattr(self, name), self.h)

    @property
    def h(self):
        return min(self.lx/self.nex, self.ly/self.ney)

    @property
    def effective_delta_eta(self):
        return 0. if self.formulation == 'traditional' else self.delta_eta

    @property
    def r_fill(self):
        if self.rfill is None:
            return resolve_length('2.5h' if self.formulation == 'traditional' else '5.4h', self.h)
        return resolve_length(self.rfill, self.h)

    def material(self):
        return MaterialParams(E1=self.E1, E0=self.E1*self.E0_ratio, nu=self.nu,
                              penal=self.penal, thickness=self.thickness)

    def darcy_params(self):
        return DarcyParams(k_v=self.k_v, epsilon=self.epsilon, eta_k=self.eta_k, beta_k=self.beta_k,
                           eta_d=self.eta_d, beta_d=self.beta_d, r=self.r,
                           delta_s=resolve_length(self.delta_s, self.h), p_ext=self.p_ext)

    def mesh(self):
        """mesh: the grid with this run's preset attached"""
        mesh = build_grid(self.nex, self.ney, self.lx, self.ly, self.thickness)
        if self.preset == 'custom':
            preset = preset_from_dict(mesh, self.preset_spec, self.p_in)
        else:
            preset = make_preset(self.preset, mesh, p_in=self.p_in,
                                 clamp=resolve_length(self.clamp, self.h),
                                 kss=self.kss, dummy_load=self.dummy_load)
        return apply_preset(mesh, preset)

    def output_dir(self):
        return os.environ.get(OUT_DIR_ENV) or self.out_dir

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = [k for k in d if k not in known]
        if unknown:
            raise ConfigurationError(f'unknown config key {unknown[0]!r}')
        try:
            return cls(**d)
        except TypeError as err:
            raise ConfigurationError(str(err))


def parse_config(path):
    """parse_config: RunConfig from a JSON file, an empty file gives the defaults"""
    with open(path) as f:
        text = f.read()
    if not text.strip():
        return RunConfig()
    try:
        d = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigurationError(f'{path}: not valid JSON ({err})')
    if not isinstance(d, dict):
        raise ConfigurationError(f'{path}: top level must be an object')
    return RunConfig.from_dict(d)


def save_config(config, path):
    with open(path, 'w') as f:
        json.dump(config.to_dict(), f, indent=2)
