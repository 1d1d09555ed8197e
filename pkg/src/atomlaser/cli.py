"""Command-line entry point: ``atomlaser <subcommand>``.

Exit codes: 0 success, 1 usage error, 2 runtime or numerical error.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time

from . import __version__, cgle, config, coupled, export, sweep
from .errors import AtomLaserError, NoCrossingError
from .params import preset, preset_names, reduce
from .stability import benjamin_feir, rabi_threshold, rabi_threshold_closed_form

log = logging.getLogger("atomlaser")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _fmt(x) -> str:
    return format(float(x), ".9g")


def cmd_presets(args) -> int:
    for name in preset_names():
        p = preset(name)
        print(f"{name}: " + ", ".join(f"{k}={_fmt(v)}" for k, v in p.to_dict().items()))
    return EXIT_OK


def cmd_reduce(args) -> int:
    p = preset(args.preset)
    if args.omega is not None:
        p = p.replace(Omega=args.omega)
    rp = reduce(p)
    v = benjamin_feir(rp.c1, rp.c2)
    print(f"epsilon = {_fmt(rp.epsilon)}")
    print(f"c1 = {_fmt(rp.c1)}")
    print(f"c2 = {_fmt(rp.c2)}")
    print(f"l0 = {_fmt(rp.l0)}")
    print(f"t0 = {_fmt(rp.t0)}")
    print(f"amp2_scale = {_fmt(rp.amp2_scale)}")
    print(f"margin = {_fmt(v.margin)}")
    print(f"c1*(-c2) = {_fmt(v.criterion_lhs)}")
    print(f"verdict = {'below-threshold' if rp.epsilon <= 0 else v.label}")
    return EXIT_OK


def cmd_threshold(args) -> int:
    p = preset(args.preset)
    try:
        omega = rabi_threshold(p)
    except NoCrossingError as exc:
        print(f"{args.preset}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"Omega_star = {_fmt(omega)}")
    print(f"Omega_star_closed_form = {_fmt(rabi_threshold_closed_form(p))}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cp = config.read(args.config)
    p, _ = config.physical_params(cp)
    rp = reduce(p)
    grid = config.grid(cp)
    scfg = config.solver(cp)
    kind = config.get(cp, "init", "kind", "homogeneous")
    state = cgle.init_state(
        grid,
        kind,
        rp,
        scfg,
        q=config.get(cp, "init", "q", 0.0, float),
        delta=config.get(cp, "init", "delta", 0.0, float),
    )
    probes = config.float_list(cp, "probes", "wavenumbers")
    t0 = time.perf_counter()
    final, records = cgle.run(state, rp, scfg, probes)
    log.info("simulated tau=%g in %.2fs", scfg.t_end, time.perf_counter() - t0)
    out = config.output_dir(cp, args.out)
    prefix = config.get(cp, "output", "prefix", "simulate")
    print(export.field_csv(final, out / f"{prefix}_field.csv"))
    print(export.diagnostics_csv(records, out / f"{prefix}_diagnostics.csv"))
    print(f"final modulation_contrast = {_fmt(records[-1].modulation_contrast)}")
    return EXIT_OK


def cmd_compare(args) -> int:
    cp = config.read(args.config)
    p, _ = config.physical_params(cp)
    grid = config.grid(cp)
    ccfg = config.coupled(cp)
    window = config.float_list(cp, "compare", "window")
    report = coupled.compare_closed_vs_coupled(
        p,
        grid,
        ccfg,
        closed_dt=config.get(cp, "compare", "closed_dt", 1e-2, float),
        n_snapshots=config.get(cp, "compare", "n_snapshots", 200, int),
        probe_q=config.get(cp, "compare", "probe_q", None, float),
        window=tuple(window) if window else None,
    )
    text = report.to_text()
    sys.stdout.write(text)
    if config.get(cp, "output", "dir") or args.out:
        out = config.output_dir(cp, args.out)
        prefix = config.get(cp, "output", "prefix", "compare")
        path = out / f"{prefix}_report.txt"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="ascii")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cp = config.read(args.config)
    spec = config.sweep_spec(cp)
    t0 = time.perf_counter()
    smap = sweep.build_map(spec)
    log.info("%s map %dx%d in %.2fs", spec.mode, *smap.margin.shape, time.perf_counter() - t0)
    out = config.output_dir(cp, args.out)
    prefix = config.get(cp, "output", "prefix", f"{spec.preset_name or 'custom'}_{spec.mode}")
    print(export.map_csv(smap, out / f"{prefix}.csv"))
    print(export.map_pgm(smap, out / f"{prefix}.pgm"))
    lasing = smap.lasing
    print(f"cells = {smap.status.size}, lasing = {int(lasing.sum())}, "
          f"stable = {int((smap.status == sweep.STABLE).sum())}, "
          f"unstable = {int((smap.status == sweep.UNSTABLE).sum())}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="atomlaser", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    sub.add_parser("presets", help="list built-in parameter presets").set_defaults(func=cmd_presets)

    p = sub.add_parser("reduce", help="print CGLE coefficients and BF verdict")
    p.add_argument("--preset", required=True)
    p.add_argument("--omega", type=float, help="IR Rabi frequency [1/s]")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("threshold", help="Rabi frequency where BF stability sets in")
    p.add_argument("--preset", required=True)
    p.set_defaults(func=cmd_threshold)

    for name, func, help_ in (
        ("simulate", cmd_simulate, "run the CGLE solver and write CSVs"),
        ("compare-oracle", cmd_compare, "closed CGLE vs coupled condensate/thermal-cloud report"),
        ("sweep", cmd_sweep, "stability map over (Omega, R), CSV + PGM"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True)
        p.add_argument("--out", help=f"output directory (default: [output] dir, ${config.OUTDIR_ENV}, cwd)")
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except KeyError as exc:  # unknown preset
        print(f"error: {exc.args[0] if exc.args else exc}", file=sys.stderr)
        return EXIT_USAGE
    except (AtomLaserError, OSError, ValueError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
