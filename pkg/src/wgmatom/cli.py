"""Command-line interface.

Subcommands: ``spectrum`` (1D sweep), ``map2d`` (2D sweep), ``dressed``
(eigen tables), ``compare`` (TH vs AE overlay on one axis), ``validate``
(acceptance suite).  Physical parameters resolve in order: preset defaults,
then config file (flat key=value), then individual CLI flags; every
parameter field has a flag of the same name.

Exit status: 0 only if no scan cell errored / every acceptance criterion
passed.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import fields as dc_fields

import numpy as np

from . import __version__, acceptance, dressed, params as params_mod, scan
from .errors import WgmAtomError
from .params import PhysicalParams


def _add_param_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("physical parameters (override config/preset)")
    group.add_argument("--preset", choices=sorted(params_mod.PRESETS), default=None,
                       help="named parameter preset")
    group.add_argument("--config", default=None, metavar="FILE",
                       help="flat key=value parameter file")
    for f in dc_fields(PhysicalParams):
        group.add_argument(f"--{f.name}", default=None, metavar="VALUE")


def _resolve_params(args) -> PhysicalParams:
    params = params_mod.preset(args.preset) if args.preset else PhysicalParams()
    if args.config:
        params = params_mod.apply_overrides(params, params_mod.load_config(args.config))
    flag_overrides = {
        f.name: getattr(args, f.name)
        for f in dc_fields(PhysicalParams)
        if getattr(args, f.name) is not None
    }
    params = params_mod.apply_overrides(params, flag_overrides)
    return params_mod.validate(params)


def _parse_axis(text: str) -> scan.Axis:
    parts = text.split(":")
    if len(parts) != 4:
        raise WgmAtomError(f"axis must be NAME:START:STOP:STEP, got {text!r}")
    return scan.Axis(parts[0], float(parts[1]), float(parts[2]), float(parts[3]))


def _add_scan_flags(parser, n_axes: int) -> None:
    parser.add_argument("--axis", action="append", required=True, metavar="NAME:START:STOP:STEP",
                        help=f"scan axis ({n_axes} required)")
    parser.add_argument("--observables", default=None,
                        help="comma-separated subset of "
                             f"{scan.FLUX_OBSERVABLES + scan.POPULATION_OBSERVABLES + scan.G2_OBSERVABLES}")
    parser.add_argument("--with-g2", action="store_true",
                        help="include g2 observables (AE methods only)")
    parser.add_argument("--caps", default="1,1,1,1",
                        help="per-mode photon caps, default 1,1,1,1")
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--solver", default="auto",
                        choices=["auto", "tridiag", "sparse", "dense"])
    parser.add_argument("--out", default="scan", metavar="PREFIX",
                        help="output path prefix")
    parser.add_argument("--format", default="csv",
                        help="comma-separated outputs: csv,json,svg")


def _build_spec(args, method: str, n_axes: int) -> scan.ScanSpec:
    axes = tuple(_parse_axis(a) for a in args.axis)
    if len(axes) != n_axes:
        raise WgmAtomError(f"this command needs exactly {n_axes} --axis, got {len(axes)}")
    if args.observables:
        obs = tuple(s.strip() for s in args.observables.split(",") if s.strip())
    else:
        obs = scan.default_observables(method, with_g2=args.with_g2)
    caps = tuple(int(c) for c in args.caps.split(","))
    return scan.ScanSpec(
        method=method,
        axes=axes,
        observables=obs,
        mode_caps=caps,
        workers=args.workers,
        solver=args.solver,
    )


def _run_scan_command(args, method: str, n_axes: int) -> int:
    params = _resolve_params(args)
    spec = _build_spec(args, method, n_axes)
    table = scan.run_scan(spec, params)
    formats = tuple(s.strip() for s in args.format.split(",") if s.strip())
    written = scan.emit(table, args.out, formats)
    n_err = table.metadata["cell_errors"]
    print(f"{table.metadata['cells']} cells in {table.metadata['elapsed_seconds']}s, "
          f"{n_err} errors -> {', '.join(written)}")
    if n_err:
        bad = next((e for e in table.errors if e), "")
        print(f"first cell error: {bad}", file=sys.stderr)
    return 1 if n_err else 0


def _cmd_spectrum(args) -> int:
    return _run_scan_command(args, args.method, 1)


def _cmd_map2d(args) -> int:
    return _run_scan_command(args, args.method, 2)


def _cmd_compare(args) -> int:
    args_method = "both"
    params = _resolve_params(args)
    spec = _build_spec(args, args_method, 1)
    table = scan.run_scan(spec, params)
    formats = tuple(s.strip() for s in args.format.split(",") if s.strip())
    written = scan.emit(table, args.out, formats)
    for obs in spec.observables:
        if obs in scan.G2_OBSERVABLES:
            continue
        th = table.column(f"{obs}_th")
        ae = table.column(f"{obs}_ae")
        good = ~(np.isnan(th) | np.isnan(ae))
        if not np.any(good):
            continue
        dev = np.abs(th[good] - ae[good])
        scale = np.abs(th[good]).max()
        print(f"{obs}: max|TH-AE| = {dev.max():.3e}"
              f" ({100 * dev.max() / scale:.2f}% of curve scale)")
    n_err = table.metadata["cell_errors"]
    print(f"{table.metadata['cells']} cells -> {', '.join(written)}")
    return 1 if n_err else 0


def _cmd_dressed(args) -> int:
    params = _resolve_params(args)
    for sector in args.sectors:
        spectrum = dressed.numeric_dressed(
            params, sector, zero_detunings=not args.keep_detunings
        )
        print(f"sector {sector} ({len(spectrum.eigenvalues)} states)")
        for k, val in enumerate(spectrum.eigenvalues):
            vec = spectrum.eigenvectors[:, k]
            leading = np.argsort(np.abs(vec))[::-1][:3]
            terms = ", ".join(
                f"{vec[j]:.3f} {spectrum.basis_labels[j]}"
                for j in leading
                if abs(vec[j]) > 1e-6
            )
            print(f"  E = {val:12.4f}   {terms}")
    if args.level_scheme_out:
        lines = []
        for sector in args.sectors:
            spectrum = dressed.numeric_dressed(
                params, sector, zero_detunings=not args.keep_detunings
            )
            lines.extend(f"{sector} {v:.12g}" for v in spectrum.eigenvalues)
        with open(args.level_scheme_out, "w", encoding="utf-8") as fh:
            fh.write("# sector eigenvalue[gamma]\n")
            fh.write("\n".join(lines) + "\n")
        print(f"level scheme -> {args.level_scheme_out}")
    return 0


def _cmd_validate(args) -> int:
    results = acceptance.run_all(only=args.only)
    all_pass = True
    for res in results:
        status = "PASS" if res.passed else "FAIL"
        all_pass &= res.passed
        print(f"{status}  {res.name}  [{res.runtime_seconds:.1f}s]  {res.detail}")
    print("acceptance:", "ALL PASS" if all_pass else "FAILURES PRESENT")
    return 0 if all_pass else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="wgmatom",
        description="Steady-state simulator for a Lambda atom coupled to "
                    "whispering-gallery mode pairs",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_spec = sub.add_parser("spectrum", help="1D sweep")
    p_spec.add_argument("--method", default="th", choices=list(scan.METHODS))
    _add_scan_flags(p_spec, 1)
    _add_param_flags(p_spec)
    p_spec.set_defaults(func=_cmd_spectrum)

    p_map = sub.add_parser("map2d", help="2D sweep")
    p_map.add_argument("--method", default="ae", choices=list(scan.METHODS))
    _add_scan_flags(p_map, 2)
    _add_param_flags(p_map)
    p_map.set_defaults(func=_cmd_map2d)

    p_cmp = sub.add_parser("compare", help="TH vs AE overlay on one axis")
    _add_scan_flags(p_cmp, 1)
    _add_param_flags(p_cmp)
    p_cmp.set_defaults(func=_cmd_compare)

    p_dr = sub.add_parser("dressed", help="dressed-state eigen tables")
    p_dr.add_argument("--sectors", type=int, nargs="+", default=[0, 1, 2])
    p_dr.add_argument("--keep-detunings", action="store_true",
                      help="do not zero the detunings before diagonalizing")
    p_dr.add_argument("--level-scheme-out", default=None, metavar="FILE")
    _add_param_flags(p_dr)
    p_dr.set_defaults(func=_cmd_dressed)

    p_val = sub.add_parser("validate", help="run the acceptance suite")
    p_val.add_argument("--only", type=int, nargs="*", default=None,
                       help="criterion numbers to run (default: all)")
    p_val.set_defaults(func=_cmd_validate)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (WgmAtomError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
