"""Command-line entry point: ``su11modes <subcommand> [options]``.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 verification
failure.  The thread count for per-slice analysis is read from the
``SU11MODES_THREADS`` environment variable.
"""
from __future__ import annotations

import argparse
import os
import sys

from . import fileio, pipeline
from .config import RunConfig, load_config
from .errors import ConfigurationError, FormatError, Su11Error

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_VERIFY = 4

COMMANDS = ("simulate", "phase-sweep", "oam", "radial", "report", "verify")


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="su11modes",
                                 description="Spatial-mode analysis of SU(1,1) interferometer frames")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="INI run configuration (defaults if omitted)")
    ap.add_argument("--seed", type=int, help="override synthesis.seed")
    ap.add_argument("--frames", type=int, help="override synthesis.n_frames")
    ap.add_argument("--out", help="override output.dir")
    ap.add_argument("--format", choices=("csv", "svg", "both"), help="override output.format")
    ap.add_argument("--stack", help="analyze this FSTK file instead of simulating")
    return ap


class _Writer:
    def __init__(self, cfg: RunConfig):
        self.dir = cfg.output.dir
        self.fmt = cfg.output.format
        os.makedirs(self.dir, exist_ok=True)
        self.written = []

    def _path(self, name):
        p = os.path.join(self.dir, name)
        self.written.append(p)
        return p

    def csv(self, name, header, rows):
        if self.fmt in ("csv", "both"):
            fileio.write_csv(self._path(name), header, rows)

    def svg(self, name, series, **labels):
        if self.fmt in ("svg", "both") and series:
            fileio.write_svg(self._path(name), series, **labels)


def _stack(args, cfg, source):
    if args.stack:
        return fileio.read_stack(args.stack, n_phi=cfg.analysis.azimuthal_bins)
    return pipeline.run_simulate(cfg, source)


def _emit_oam(w: _Writer, res: pipeline.OamResult):
    for name, (hdr, rows) in pipeline.oam_tables(res).items():
        w.csv(name, hdr, rows)
    ls, vals = res.average.as_array()
    w.svg("oam_average.svg", [("averaged", ls, vals)], title="Radially averaged OAM weights",
          xlabel="l", ylabel="normalized weight", markers=True)
    curves = []
    for k in range(0, len(res.curves), max(1, len(res.curves) // 4)):
        x, y = res.curves[k].centered
        curves.append((f"theta0={1e3 * res.theta0s[k]:.2f} mrad", x, y / max(y.max(), 1e-300)))
    w.svg("covariance_curves.svg", curves, title="Azimuthal covariance",
          xlabel="dphi (rad)", ylabel="Cov / max")
    w.svg("fwhm.svg", [("FWHM", res.theta0s * 1e3, res.fwhm)],
          title="Azimuthal covariance width", xlabel="theta0 (mrad)", ylabel="FWHM (rad)",
          markers=True)
    w.svg("azimuthal_count.svg", [("count", res.theta0s * 1e3, res.counts)],
          title="Azimuthal mode count", xlabel="theta0 (mrad)", ylabel="K", markers=True)


def _emit_radial(w: _Writer, res: pipeline.RadialResult):
    for name, (hdr, rows) in pipeline.radial_tables(res).items():
        w.csv(name, hdr, rows)
    series = [(f"u{p}", res.thetas * 1e3, res.modes.shapes[p])
              for p in range(min(5, len(res.modes.weights)))]
    w.svg("radial_shapes.svg", series, title="Radial mode shapes", xlabel="theta (mrad)",
          ylabel="u_p")
    p = list(range(len(res.modes.weights)))
    w.svg("radial_weights.svg", [("weights", p, res.modes.normalized_weights)],
          title="Radial mode weights", xlabel="p", ylabel="normalized weight", markers=True)


def run(args) -> int:
    cfg = load_config(args.config) if args.config else RunConfig()
    cfg = cfg.with_overrides(args.seed, args.frames, args.out, args.format).validate()
    w = _Writer(cfg)
    cmd = args.command
    needs_source = not (args.stack and cmd in ("oam", "radial"))
    source = pipeline.build_source(cfg) if needs_source else None

    if cmd == "simulate":
        stack = pipeline.run_simulate(cfg, source)
        fileio.write_stack(stack, os.path.join(cfg.output.dir, cfg.output.stack))
        w.csv("truth.csv", *pipeline.truth_table(source))
        print(f"wrote {len(stack)} frames to {os.path.join(cfg.output.dir, cfg.output.stack)}")
        return EXIT_OK
    if cmd == "phase-sweep":
        hdr, rows = pipeline.run_phase_sweep(cfg, source)
        w.csv("phase_sweep.csv", hdr, rows)
        w.svg("phase_sweep.svg", [("N", [r[0] for r in rows], [r[1] for r in rows])],
              title="Total photon number", xlabel="phi (rad)", ylabel="N")
        return EXIT_OK
    if cmd == "verify":
        stack = _stack(args, cfg, source)
        res = pipeline.run_verify(cfg, source, stack)
        w.csv("verify.csv", *res.table)
        print(f"{'l':>4s} {'reconstructed':>14s} {'truth':>10s} {'rel.err':>8s}")
        for l, r, t, e in res.table[1]:
            if t >= 0.01 * max(row[2] for row in res.table[1]):
                print(f"{l:4d} {r:14.5f} {t:10.5f} {e:+8.3f}")
        print(f"TV distance {res.tv_distance:.4f} (tol {cfg.analysis.tv_tolerance}); "
              f"mode count {res.count_rec:.3f} vs {res.count_true:.3f} "
              f"(tol {cfg.analysis.count_tolerance:.0%})")
        print("PASS" if res.passed else "FAIL")
        return EXIT_OK if res.passed else EXIT_VERIFY

    stack = _stack(args, cfg, source)
    oam = radial = None
    if cmd in ("oam", "report"):
        oam = pipeline.run_oam(stack, cfg)
        _emit_oam(w, oam)
    if cmd in ("radial", "report"):
        radial = pipeline.run_radial(stack, cfg)
        _emit_radial(w, radial)
    if cmd == "report":
        w.csv("mode_counts.csv", *pipeline.mode_count_table(oam, radial))
        hdr, rows = pipeline.run_phase_sweep(cfg, source)
        w.csv("phase_sweep.csv", hdr, rows)
        if source is not None:
            w.csv("truth.csv", *pipeline.truth_table(source))
    for p in w.written:
        print(p)
    return EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return run(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FormatError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Su11Error as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
