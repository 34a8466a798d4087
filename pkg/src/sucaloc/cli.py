"""Command-line interface: ``sucaloc <subcommand> [options]``."""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .backprojection import (
    angular_lobe_width,
    discrete_angular_pattern,
    distance_lobe_width,
    distance_pattern_multi,
    null_spacing,
    null_to_null_width,
)
from .channel import ReceivedSignal, Scene, draw_scene, noise_power_for_snr, synthesize_received, with_noise_power
from .errors import InvalidConfigError, SucaError
from .geometry import SPEED_OF_LIGHT, PolarCoord, min_antennas_narrow, min_antennas_wide
from .harness import (
    ExperimentConfig,
    benchmark_runtime,
    export_figures,
    localization_error,
    provenance,
    run_cdf_experiment,
    summarize,
    trial_seeds,
    write_cdf_csvs,
    write_records_csv,
    _estimate,
)


def _config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    over = {}
    if args.seed is not None:
        over["seed"] = args.seed
    if args.out_dir is not None:
        over["out_dir"] = args.out_dir
    method = _method(args)
    if method is not None:
        over["methods"] = (method,)
    if getattr(args, "trials", None) is not None:
        over["trials"] = args.trials
    if getattr(args, "snr", None) is not None:
        over["snr_db"] = tuple(args.snr)
    if getattr(args, "workers", None) is not None:
        over["workers"] = args.workers
    return replace(cfg, **over) if over else cfg


def _method(args):
    m = args.method
    if m == "proposed":
        m = "proposed-direct" if args.fft is False else "proposed-fft"
    elif m is None and args.fft is not None:
        m = "proposed-fft" if args.fft else "proposed-direct"
    return m


def _emit(obj):
    print(json.dumps(obj, indent=2, sort_keys=True))


def _out(cfg) -> Path:
    p = Path(cfg.out_dir)
    p.mkdir(parents=True, exist_ok=True)
    return p


def write_received_csv(path, y: ReceivedSignal, prov: str):
    with open(path, "w", newline="") as fh:
        fh.write(f"# {prov}\n")
        w = csv.writer(fh)
        w.writerow(["k", "n", "re", "im"])
        for k, row in enumerate(y.samples, start=1):
            for n, v in enumerate(row, start=1):
                w.writerow([k, n, repr(float(v.real)), repr(float(v.imag))])


def read_received_csv(path, cfg: ExperimentConfig) -> ReceivedSignal:
    data = np.loadtxt(path, delimiter=",", comments="#", skiprows=2, ndmin=2)
    K, N = cfg.ofdm.K, cfg.array.num_elements
    if data.shape != (K * N, 4):
        raise InvalidConfigError(f"{path}: expected {K * N} rows of k,n,re,im for K={K}, N={N}")
    samples = np.zeros((K, N), dtype=complex)
    samples[data[:, 0].astype(int) - 1, data[:, 1].astype(int) - 1] = data[:, 2] + 1j * data[:, 3]
    return ReceivedSignal(samples, cfg.array, cfg.ofdm)


def _scene_signal(cfg: ExperimentConfig, snr):
    scene_seed, noise_seed = trial_seeds(cfg.seed, 1)[0]
    scene = draw_scene(scene_seed, cfg.array, cfg.L, cfg.r_range)
    ofdm = cfg.ofdm if snr is None else with_noise_power(cfg.ofdm, noise_power_for_snr(scene, cfg.array, snr))
    return scene, synthesize_received(scene, cfg.array, ofdm, noise_seed)


def cmd_simulate(args):
    cfg = _config(args)
    scene, y = _scene_signal(cfg, args.snr_db)
    out = _out(cfg)
    (out / "scene.json").write_text(scene.to_json())
    write_received_csv(out / "received.csv", y, provenance(cfg))
    _emit({"scene": scene.to_dict(), "received": str(out / "received.csv")})


def cmd_localize(args):
    cfg = _config(args)
    method = cfg.methods[0]
    scene = None
    if args.input:
        y = read_received_csv(args.input, cfg)
        if args.scene:
            scene = Scene.from_json(Path(args.scene).read_text())
    else:
        scene, y = _scene_signal(cfg, args.snr_db)
    res = _estimate(method, y, cfg.grid, cfg.L)
    report = {
        "method": method,
        "estimates": [e.to_dict() for e in res.estimates],
        "indices": [list(ix) for ix in res.indices],
    }
    if scene is not None:
        report["truth"] = [c.to_dict() for c in scene.coords]
        report["r_err_m"] = localization_error(res.estimates, scene.coords)
    _emit(report)


def cmd_resolution(args):
    cfg = _config(args)
    arr, ofdm = cfg.array, cfg.ofdm
    target = PolarCoord(args.r, args.phi)
    width = angular_lobe_width(ofdm.f_c, arr.radius_m, arr.half_span_rad)
    phis = target.phi + np.linspace(-4 * width, 4 * width, 2001)
    ang = discrete_angular_pattern(arr, ofdm.f_c, target.r, target.phi, phis)
    dw = distance_lobe_width(ofdm)
    rs = target.r + np.linspace(-1.5 * dw, 1.5 * dw, 3001)
    rs = rs[rs > arr.radius_m]
    dist = distance_pattern_multi(arr, ofdm, target.r, target.phi, rs)
    _emit(
        {
            "angular_predicted_rad": width,
            "angular_measured_rad": null_spacing(ang),
            "distance_predicted_m": dw,
            "distance_measured_m": null_to_null_width(dist),
        }
    )


def cmd_min_antennas(args):
    R = args.radius
    rows = []
    for f in args.freq:
        lam = SPEED_OF_LIGHT / f
        row = {"alpha_rad": args.alpha, "freq_hz": f}
        for name, fn in (("wide", min_antennas_wide), ("narrow", min_antennas_narrow)):
            try:
                row[name] = fn(args.alpha, R, lam)
            except SucaError as exc:
                row[name] = None
                row[f"{name}_error"] = str(exc)
        rows.append(row)
    _emit(rows)


def cmd_cdf(args):
    cfg = _config(args)
    result = run_cdf_experiment(cfg)
    out = _out(cfg)
    write_records_csv(out / "trials.csv", result)
    paths = write_cdf_csvs(out, result)
    summary = summarize(result)
    (out / "summary.json").write_text(json.dumps({"provenance": provenance(cfg), "summary": summary}, indent=2))
    _emit({"summary": summary, "files": [str(p) for p in paths]})


def cmd_benchmark(args):
    cfg = _config(args)
    methods = cfg.methods if args.method or args.fft is not None else ("proposed-fft", "proposed-direct", "music")
    rep = benchmark_runtime(
        cfg.array, cfg.ofdm, cfg.grid, methods, trials=args.repeats, warmup=args.warmup, seed=cfg.seed, L=cfg.L
    )
    out = _out(cfg)
    (out / "benchmark.json").write_text(json.dumps({"provenance": provenance(cfg), **rep.to_dict()}, indent=2))
    _emit(rep.to_dict())


def cmd_export_figures(args):
    cfg = _config(args)
    paths = export_figures(cfg, run_cdf=not args.skip_cdf)
    _emit({"files": [str(p) for p in paths]})


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--out-dir", dest="out_dir", help="output directory")
    common.add_argument(
        "--method", choices=["proposed", "proposed-direct", "proposed-fft", "music"], help="localization method"
    )
    common.add_argument("--fft", action=argparse.BooleanOptionalAction, default=None, help="FFT fill for proposed")

    parser = argparse.ArgumentParser(prog="sucaloc", description="Near-field sUCA localization tools")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="draw a scene and write the received signal")
    p.add_argument("--snr-db", type=float, default=None, help="SNR in dB (noiseless if omitted)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("localize", parents=[common], help="localize from a received CSV or a fresh scene")
    p.add_argument("--input", help="received.csv written by simulate")
    p.add_argument("--scene", help="scene.json to score against")
    p.add_argument("--snr-db", type=float, default=None)
    p.set_defaults(func=cmd_localize)

    p = sub.add_parser("resolution", parents=[common], help="predicted and measured lobe widths")
    p.add_argument("--r", type=float, default=10.0, help="target distance in m")
    p.add_argument("--phi", type=float, default=math.pi / 2, help="target azimuth in rad")
    p.set_defaults(func=cmd_resolution)

    p = sub.add_parser("min-antennas", parents=[common], help="minimum element count")
    p.add_argument("--alpha", type=float, default=math.pi / 3, help="half span in rad")
    p.add_argument("--radius", type=float, default=1.0, help="array radius in m")
    p.add_argument("--freq", type=float, nargs="+", default=[3.5e9, 28e9], help="carrier(s) in Hz")
    p.set_defaults(func=cmd_min_antennas)

    p = sub.add_parser("cdf", parents=[common], help="paired Monte-Carlo error CDF")
    p.add_argument("--trials", type=int)
    p.add_argument("--snr", type=float, nargs="+", help="SNR list in dB")
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_cdf)

    p = sub.add_parser("benchmark", parents=[common], help="runtime per localize call")
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--warmup", type=int, default=1)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("export-figures", parents=[common], help="write the CSV figure bundle")
    p.add_argument("--trials", type=int)
    p.add_argument("--snr", type=float, nargs="+")
    p.add_argument("--workers", type=int)
    p.add_argument("--skip-cdf", action="store_true")
    p.set_defaults(func=cmd_export_figures)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (SucaError, ValueError, OSError) as exc:
        code = 2 if isinstance(exc, (InvalidConfigError, ValueError)) else 1
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
