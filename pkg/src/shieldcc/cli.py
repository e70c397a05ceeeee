"""Command-line batch driver.

Subcommands:
  stark-map        monomer level map over the field grid
  adiabats         adiabatic potential curves of the configured basis
  sweep-field      observables vs electric field
  sweep-energy     observables vs collision energy (adds alpha, beta)
  converge         repeat one point varying lmax | rotor_basis | r_absorb
  validate-config  parse, validate and echo the resolved configuration

Exit codes: 0 success, 1 partial point failures, 2 configuration error.
"""

import argparse
import sys

from . import units
from .config import ConfigError, dumps_config, load_config, reference_config
from .driver import (export_adiabats_run, run_convergence, run_energy_sweep,
                     run_field_sweep, run_stark_map)


def _parser():
    parser = argparse.ArgumentParser(
        prog="shieldcc",
        description="coupled-channel shielding calculations for polar "
                    "rigid-rotor molecule pairs in static fields")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="TOML run configuration")
        p.add_argument("--set", dest="overrides", action="append",
                       default=[], metavar="KEY=VALUE",
                       help="override a config entry (dotted path)")
        p.add_argument("--out", help="output directory (overrides config)")
        p.add_argument("--jobs", type=int, default=1,
                       help="worker processes for sweep points")
        p.add_argument("--format", choices=("csv", "json"),
                       help="output format (overrides config)")
        return p

    common(sub.add_parser("stark-map", help="export monomer level map"))
    p = common(sub.add_parser("adiabats", help="export adiabatic curves"))
    p.add_argument("--rmin", type=float, default=40.0)
    p.add_argument("--rmax", type=float, default=1000.0)
    p.add_argument("--points", type=int, default=200)
    common(sub.add_parser("sweep-field", help="observables vs field"))
    common(sub.add_parser("sweep-energy", help="observables vs energy"))
    p = common(sub.add_parser("converge", help="convergence study"))
    p.add_argument("--axis", choices=("lmax", "rotor_basis", "r_absorb"),
                   required=True)
    p = common(sub.add_parser("validate-config",
                              help="check and echo the configuration"))
    p.add_argument("--reference", action="store_true",
                   help="print the documented default configuration")
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)

    if args.command == "validate-config" and args.reference:
        print(reference_config())
        return 0

    overrides = list(args.overrides)
    if args.out:
        overrides.append(f"output.dir={args.out}")
    if args.format:
        overrides.append(f"output.format={args.format}")

    try:
        cfg = load_config(path=args.config, overrides=overrides)
    except (ConfigError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2

    if args.command == "validate-config":
        print(dumps_config(cfg.raw))
        print(f"# molecule: b/h = "
              f"{cfg.molecule.rotational_constant * units.AU_TO_GHZ:.4f} GHz, "
              f"mu = {cfg.molecule.dipole * units.AU_TO_DEBYE:.3f} D, "
              f"incoming level {cfg.incoming}")
        print(f"# grids: {len(cfg.fields)} fields x {len(cfg.energies)} "
              f"energies x {len(cfg.b_fields)} B values; "
              f"M_tot blocks {cfg.mtot_list}")
        return 0

    try:
        if args.command == "stark-map":
            run_stark_map(cfg)
            return 0
        if args.command == "adiabats":
            export_adiabats_run(cfg, r_min=args.rmin, r_max=args.rmax,
                                n_points=args.points)
            return 0
        if args.command == "sweep-field":
            _, failures = run_field_sweep(cfg, jobs=args.jobs)
        elif args.command == "sweep-energy":
            _, failures = run_energy_sweep(cfg, jobs=args.jobs)
        elif args.command == "converge":
            run_convergence(cfg, args.axis, jobs=args.jobs)
            failures = []
        else:                                      # pragma: no cover
            raise AssertionError(args.command)
    except (ConfigError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2

    if failures:
        print(f"{len(failures)} point(s) failed:", file=sys.stderr)
        for msg in failures:
            print(f"  {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
