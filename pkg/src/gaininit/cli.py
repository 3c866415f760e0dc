"""Batch driver: ``gaininit {synth,transform,check,build,export}``.

Exit codes: 0 success, 2 config, 3 IO or format, 4 stability, 5 numerical
degeneracy.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .config import config_lines, load_config
from .errors import ConfigError, GainInitError
from .laplace import stability_table, transform_survey
from .pipeline import build_initial_model, gradient_model
from .synthetics import Scatterer, synth_time_traces
from .trace_io import export_grid, read_grid, read_survey, write_grid, write_laplace_csv, write_survey

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_STABILITY, EXIT_DEGENERATE = 0, 2, 3, 4, 5


def _err(msg):
    print(f"error: {msg}", file=sys.stderr)


def cmd_synth(args) -> int:
    config, synthetic = load_config(args.config)
    if synthetic is None:
        raise ConfigError("config has no [synthetic] section")
    if args.out is None:
        raise ConfigError("synth needs --out PATH")
    geometry = synthetic.geometry()
    grid = gradient_model(config, geometry)
    size = synthetic.scatterer_size or config.gradient_grid
    scatterers = [Scatterer(x, z, dv, size ** 3) for x, z, dv in synthetic.scatterers]
    dataset = synth_time_traces(geometry, config.background_velocity, synthetic.wavelet_width, synthetic.nt,
                                synthetic.dt, scatterers, synthetic.source_amplitude, grid,
                                synthetic.noise_std, synthetic.seed, synthetic.description)
    write_survey(dataset, args.out)
    print(f"wrote {geometry.n_shots} shots x {synthetic.receiver_count} receivers x {synthetic.nt} samples "
          f"to {args.out}")
    return EXIT_OK


def _warn_forced(dataset, spec):
    failing = [r for r in stability_table(spec, dataset.record_length) if not r.passed]
    if failing:
        pairs = ", ".join(f"(n={r.n}, s={r.s:g}, ratio={r.ratio:.3g})" for r in failing)
        print(f"warning: --force used past unstable pairs: {pairs}", file=sys.stderr)


def cmd_transform(args) -> int:
    config, _ = load_config(args.config)
    if args.out is None:
        raise ConfigError("transform needs --out PATH")
    dataset = read_survey(args.survey)
    spec = config.transform_spec()
    if args.force:
        _warn_forced(dataset, spec)
    field = transform_survey(dataset, spec, force=args.force)
    write_laplace_csv(field, dataset.geometry, args.out)
    print(f"wrote {sum(field.receiver_counts())} traces x {len(spec.damping_constants)} s x "
          f"{len(spec.gain_powers)} n to {args.out}")
    return EXIT_OK


def cmd_check(args) -> int:
    config, _ = load_config(args.config)
    dataset = read_survey(args.survey)
    T = dataset.record_length
    rows = stability_table(config.transform_spec(), T)
    print(f"shots: {dataset.geometry.n_shots}")
    print(f"receivers: {sum(dataset.geometry.receiver_counts())}")
    print(f"nt: {dataset.nt}")
    print(f"dt: {dataset.dt:g}")
    print(f"record_length: {T:g}")
    peak = max(float(np.max(np.abs(g.traces))) for g in dataset.gathers)
    print(f"max_abs_sample: {peak:.6g}")
    print(f"{'n':>3} {'s':>6} {'ratio':>12}  status")
    for r in rows:
        print(f"{r.n:>3} {r.s:>6g} {r.ratio:>12.4e}  {'pass' if r.passed else 'FAIL'}")
    return EXIT_OK if all(r.passed for r in rows) else EXIT_STABILITY


def _label(p):
    return f"s{p[0]:g}_n{p[1]}"


def manifest_lines(config, report, survey, out_dir, threads, forced) -> list:
    lines = [f"survey: {survey}", f"out_dir: {out_dir}", f"threads: {threads}", f"forced: {forced}"]
    lines += config_lines(config)
    lines += [
        f"shots_used: {report.n_shots_used}",
        f"objective_before: {report.objective_before:.17g}",
        f"objective_after: {report.objective_after:.17g}",
        f"objective_decreased: {report.objective_after < report.objective_before}",
        f"alpha: {report.alpha:.17g}",
        f"trial_alphas: {', '.join(f'{a:.17g}' for a in report.trial_alphas)}",
        f"trial_objectives: {', '.join(f'{e:.17g}' for e in report.trial_objectives)}",
        f"step_shrinks: {report.step_shrinks}",
        f"step_evaluation: {report.step_evaluation}",
        f"zero_directions: {', '.join(_label(p) for p in report.zero_directions) or 'none'}",
    ]
    for p, w in report.weights.items():
        lines.append(f"weight.{_label(p)}: {w:.17g}")
    for p, k in report.skipped.items():
        lines.append(f"skipped.{_label(p)}: below_floor={k.below_floor} sign_mismatch={k.sign_mismatch} "
                     f"near_crossing={k.near_crossing}")
    for name, sec in report.timings.items():
        lines.append(f"timing.{name}: {sec:.6f}")
    return lines


def cmd_build(args) -> int:
    config, _ = load_config(args.config)
    if args.out is None:
        raise ConfigError("build needs --out DIR")
    dataset = read_survey(args.survey)
    if args.force:
        _warn_forced(dataset, config.transform_spec())
    model, report = build_initial_model(dataset, config, threads=args.threads, force=args.force)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_grid(model, out / "model.grd")
    export_grid(model, out / "model.csv")
    write_grid(report.coarse_model, out / "coarse_model.grd")
    for p, d in report.directions.items():
        export_grid(d, out / f"direction_{_label(p)}.csv")
        export_grid(d, out / f"direction_{_label(p)}.pgm", format="pgm")
    export_grid(report.final_direction, out / "direction_final.csv")
    export_grid(report.final_direction, out / "direction_final.pgm", format="pgm")
    lines = manifest_lines(config, report, args.survey, out, args.threads, args.force)
    (out / "manifest.txt").write_text("\n".join(lines) + "\n")
    print(f"objective {report.objective_before:.6g} -> {report.objective_after:.6g} at alpha {report.alpha:.6g}")
    print(f"wrote {out / 'model.grd'} ({model.nx} x {model.nz} cells of {model.dx:g} m)")
    return EXIT_OK


def cmd_export(args) -> int:
    if args.out is None:
        raise ConfigError("export needs --out PATH")
    grid = read_grid(args.grid)
    export_grid(grid, args.out, format=args.format)
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gaininit", description="One-update starting velocity model "
                                     "from gained Laplace-domain data.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, survey=True):
        if survey:
            p.add_argument("survey", help="SRV survey file")
        p.add_argument("--config", help="config file (defaults built in)")
        p.add_argument("--threads", type=int, default=1, help="worker threads (results do not depend on it)")
        p.add_argument("--force", action="store_true", help="run past failed stability checks")
        p.add_argument("--out", help="output file or directory")

    common(sub.add_parser("synth", help="write a synthetic SRV survey"), survey=False)
    common(sub.add_parser("transform", help="gained Laplace transform to CSV"))
    common(sub.add_parser("check", help="stability table and data statistics"))
    common(sub.add_parser("build", help="build the starting model"))
    ex = sub.add_parser("export", help="GRD grid to CSV or PGM")
    ex.add_argument("grid")
    ex.add_argument("--out")
    ex.add_argument("--format", choices=("csv", "pgm"), default="csv")
    return parser


COMMANDS = {"synth": cmd_synth, "transform": cmd_transform, "check": cmd_check, "build": cmd_build,
            "export": cmd_export}


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    if getattr(args, "threads", 1) < 1:
        _err("--threads must be >= 1")
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](args)
    except GainInitError as exc:
        _err(exc)
        return exc.exit_code
    except OSError as exc:
        _err(exc)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
