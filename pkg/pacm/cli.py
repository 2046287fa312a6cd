"""Command line entry point: pacm optimize | verify | extract | export"""
import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .config import RunConfig, parse_config
from .tools import ConfigurationError, NumericalError, PacmError, logger

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


def _value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


RUN_FLAGS = ('preset', 'nex', 'ney', 'volfrac', 'delta_eta', 'max_iter', 'out_dir')


def load_config(args):
    """config file (if any) with --set key=value overrides, then the run flags, applied"""
    config = parse_config(args.config) if args.config else RunConfig()
    overrides = {}
    for item in args.set or []:
        if '=' not in item:
            raise ConfigurationError(f'--set expects key=value, got {item!r}')
        key, value = item.split('=', 1)
        overrides[key.strip()] = _value(value)
    if args.out:
        overrides['out_dir'] = args.out
    for key in RUN_FLAGS:
        if getattr(args, key, None) is not None:
            overrides[key] = getattr(args, key)
    if getattr(args, 'rfill_mult', None) is not None:
        overrides['rfill'] = f'{args.rfill_mult:g}h'
    if overrides:
        d = config.to_dict()
        d.update(overrides)
        config = RunConfig.from_dict(d)
    return config


def load_design(mesh, path):
    ρ̄ = np.loadtxt(path, ndmin=1)
    if ρ̄.shape != (mesh.n_elements,):
        raise ConfigurationError(f'{path} holds {ρ̄.size} values, mesh has {mesh.n_elements} elements')
    return ρ̄


def cmd_optimize(args):
    from .optimize import run

    config = load_config(args)
    out = Path(config.output_dir())
    _, log = run(config, out, settings={'verbose': args.verbose, 'progress': not args.quiet})
    last = log[-1]
    print(f'{last.iter} iterations, f0 = {last.minmax:.6g}, Δ = {last.delta_i:.6e} m, results in {out}')
    return 0


def cmd_verify(args):
    from .export import export_newton_history, export_sweep_csv
    from .nlfea import HyperelasticParams, extract_structure, linear_response, pressure_sweep

    config = load_config(args)
    mesh = config.mesh()
    ρ̄ = load_design(mesh, args.rho)
    params = HyperelasticParams.from_material(config.E1, config.nu)
    structure, boundary = extract_structure(mesh, ρ̄, args.threshold or config.threshold, params)
    pressures = [b*1e5 for b in (args.pressures or config.verify_pressures_bar)]
    out = Path(config.output_dir())/'verify'
    out.mkdir(parents=True, exist_ok=True)
    points = pressure_sweep(structure, boundary, pressures, args.steps or config.verify_steps,
                            progress=not args.quiet)
    export_sweep_csv(points, out/'sweep.csv')
    for pt in points:
        export_newton_history(structure, pt.result, out/f'p_{pt.pressure/1e5:g}bar')
    u_lin = linear_response(structure, boundary, pressures[0])
    print(f'linear Δ at {pressures[0]/1e5:g} bar: {u_lin[structure.output_dof]*1e3:.4f} mm')
    for pt in points:
        flag = '' if pt.converged else ' (not converged)'
        print(f'{pt.pressure/1e5:g} bar: Δ = {pt.output_displacement*1e3:.4f} mm{flag}')
    return 0 if all(pt.converged for pt in points) else EXIT_NUMERICAL


def cmd_extract(args):
    from .contour import extract_contour
    from .export import write_dxf, write_polylines

    config = load_config(args)
    mesh = config.mesh()
    ρ̄ = load_design(mesh, args.rho)
    contours = extract_contour(mesh, ρ̄, args.threshold or config.threshold)
    out = Path(config.output_dir())
    out.mkdir(parents=True, exist_ok=True)
    write_polylines(contours, out/'contour.txt')
    write_dxf(contours, out/'contour.dxf')
    print(f'{len(contours)} loops written to {out}')
    return 0


def cmd_export(args):
    from .export import export_vtk, plot_design

    config = load_config(args)
    mesh = config.mesh()
    ρ̄ = load_design(mesh, args.rho)
    out = Path(config.output_dir())
    out.mkdir(parents=True, exist_ok=True)
    stem = Path(args.rho).stem
    export_vtk(mesh, out/f'{stem}.vtk', cell_data={'rho': ρ̄})
    if args.plot:
        plot_design(mesh, ρ̄, out/f'{stem}.png')
    print(f'wrote {out/stem}.vtk')
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog='pacm', description='pressure-actuated compliant mechanism design')
    parser.add_argument('-v', '--verbose', action='store_true', help='debug logging and per-iteration values')
    parser.add_argument('-q', '--quiet', action='store_true', help='no progress bars')
    sub = parser.add_subparsers(dest='command', required=True)

    def common(p, design=False):
        p.add_argument('-c', '--config', help='JSON run configuration')
        p.add_argument('-s', '--set', action='append', metavar='KEY=VALUE', help='override a config field')
        p.add_argument('-o', '--out', help='output directory')
        if design:
            p.add_argument('rho', help='element densities, one value per line')
            p.add_argument('-t', '--threshold', type=float, help='solid threshold (default from config)')
        return p

    p = common(sub.add_parser('optimize', help='run the robust min-max optimization'))
    p.add_argument('--preset', help='inverter, gripper or contractor')
    p.add_argument('--nex', type=int, help='elements along x')
    p.add_argument('--ney', type=int, help='elements along y')
    p.add_argument('--volfrac', type=float, help='intermediate volume fraction')
    p.add_argument('--delta-eta', type=float, help='threshold offset of the eroded and dilated designs')
    p.add_argument('--rfill-mult', type=float, metavar='K', help='filter radius K times the element size')
    p.add_argument('--max-iter', type=int, help='iteration budget')
    p.add_argument('--out-dir', help='same as --out')
    p.set_defaults(func=cmd_optimize)
    p = common(sub.add_parser('verify', help='nonlinear check of a design'), design=True)
    p.add_argument('-p', '--pressures', type=float, nargs='+', help='pressures in bar')
    p.add_argument('--steps', type=int, help='load steps per pressure')
    p.set_defaults(func=cmd_verify)
    p = common(sub.add_parser('extract', help='contour a design to polylines and DXF'), design=True)
    p.set_defaults(func=cmd_extract)
    p = common(sub.add_parser('export', help='write a design as VTK'), design=True)
    p.add_argument('--plot', action='store_true', help='also draw a png')
    p.set_defaults(func=cmd_export)
    return parser


def main(argv=None):
    """main: parse argv and run a subcommand

    :returns: exit code, 2 configuration, 3 numerical, 4 I/O
    """
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format='%(levelname)s %(name)s: %(message)s')
    try:
        return args.func(args)
    except ConfigurationError as err:
        logger.error(f'configuration: {err}')
        return EXIT_CONFIG
    except NumericalError as err:
        logger.error(f'numerical: {err}')
        return EXIT_NUMERICAL
    except OSError as err:
        logger.error(f'I/O: {err}')
        return EXIT_IO
    except PacmError as err:
        logger.error(str(err))
        return 1


if __name__ == '__main__':
    sys.exit(main())
