"""
Experiment harness
==================

Configuration, the localization-error metric, paired Monte-Carlo CDF runs,
multiplication-count models, runtime benchmarks and CSV exports.

Every trial derives its scene and noise seeds from one master
``SeedSequence``, so all methods see the same received signal.
"""

from __future__ import annotations

import csv
import hashlib
import itertools
import json
import math
import statistics
import subprocess
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from . import __version__
from .backprojection import (
    angular_lobe_width,
    discrete_angular_pattern,
    distance_lobe_width,
    distance_pattern_multi,
    distance_pattern_single,
    write_pattern_csv,
)
from .channel import OfdmConfig, draw_scene, noise_power_for_snr, synthesize_received, with_noise_power
from .errors import InsufficientPeaksError, InvalidConfigError, SucaError
from .geometry import (
    SPEED_OF_LIGHT,
    ArrayConfig,
    PolarCoord,
    min_antennas_narrow,
    min_antennas_wide,
)
from .localizer import GridSpec, localize
from .music import MusicConfig, music_localize

METHODS = ("proposed-direct", "proposed-fft", "music")
DEFAULT_SNRS = (0.0, 10.0, 20.0)
EXHAUSTIVE_PAIRING_MAX = 3


@dataclass(frozen=True)
class ExperimentConfig:
    array: ArrayConfig = field(default_factory=lambda: ArrayConfig(1.0, math.pi / 3, 49))
    ofdm: OfdmConfig = field(default_factory=lambda: OfdmConfig(3.5e9, 200, 480e3))
    grid: GridSpec | None = None  # defaults to G_a = 2N, G_d = 100
    trials: int = 100
    seed: int = 0
    snr_db: tuple[float, ...] = DEFAULT_SNRS
    methods: tuple[str, ...] = ("proposed-fft", "music")
    L: int = 0
    out_dir: str = "out"
    r_range: tuple[float, float] = (2.0, 21.0)
    workers: int = 1

    def __post_init__(self):
        if self.grid is None:
            object.__setattr__(self, "grid", GridSpec(2 * self.array.num_elements, 100, *self.r_range))
        object.__setattr__(self, "snr_db", tuple(float(s) for s in self.snr_db))
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "r_range", tuple(float(r) for r in self.r_range))
        if self.trials < 1:
            raise InvalidConfigError(f"trial count must be >= 1, got {self.trials}")
        if self.L < 0:
            raise InvalidConfigError(f"L must be >= 0, got {self.L}")
        if self.workers < 1:
            raise InvalidConfigError(f"workers must be >= 1, got {self.workers}")
        bad = [m for m in self.methods if m not in METHODS]
        if bad or not self.methods:
            raise InvalidConfigError(f"unknown method(s) {bad}; choose from {METHODS}")
        self.grid.validate(self.array)
        if "music" in self.methods:
            MusicConfig(self.grid, self.L + 1).validate(self.array)

    def to_dict(self):
        return {
            "array": self.array.to_dict(),
            "ofdm": self.ofdm.to_dict(),
            "grid": self.grid.to_dict(),
            "trials": self.trials,
            "seed": self.seed,
            "snr_db": list(self.snr_db),
            "methods": list(self.methods),
            "L": self.L,
            "out_dir": self.out_dir,
            "r_range": list(self.r_range),
            "workers": self.workers,
        }

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        kw = {}
        if "array" in data:
            kw["array"] = ArrayConfig.from_dict(data.pop("array"))
        if "ofdm" in data:
            kw["ofdm"] = OfdmConfig.from_dict(data.pop("ofdm"))
        if "grid" in data and data["grid"] is not None:
            kw["grid"] = GridSpec.from_dict(data.pop("grid"))
        data.pop("grid", None)
        known = {"trials", "seed", "snr_db", "methods", "L", "out_dir", "r_range", "workers"}
        unknown = set(data) - known
        if unknown:
            raise InvalidConfigError(f"unknown config keys: {sorted(unknown)}")
        for key in ("snr_db", "methods", "r_range"):
            if key in data:
                data[key] = tuple(data[key])
        return cls(**kw, **data)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            return cls.from_dict(json.loads(text))
        except (TypeError, KeyError) as exc:
            raise InvalidConfigError(f"malformed config: {exc}") from exc

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_json(Path(path).read_text())

    def config_hash(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()[:12]


@dataclass
class ComplexityReport:
    counts: dict[str, int] = field(default_factory=dict)
    timings: dict[str, tuple[float, float]] = field(default_factory=dict)  # method -> (mean s, std s)

    def to_dict(self):
        return {
            "counts": dict(self.counts),
            "timings": {m: {"mean_s": mu, "std_s": sd} for m, (mu, sd) in self.timings.items()},
        }


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    snr_db: float
    method: str
    r_err: float | None  # None marks a censored trial
    reason: str = ""

    @property
    def censored(self) -> bool:
        return self.r_err is None


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    records: list[TrialRecord]

    def errors(self, method: str, snr_db: float) -> np.ndarray:
        return np.array(
            [r.r_err for r in self.records if r.method == method and r.snr_db == snr_db and not r.censored]
        )

    def censored_count(self, method: str, snr_db: float) -> int:
        return sum(1 for r in self.records if r.method == method and r.snr_db == snr_db and r.censored)

    def paired_errors(self, methods, snr_db: float) -> dict[str, np.ndarray]:
        """Errors restricted to trials in which every listed method succeeded."""
        ok = None
        by = {m: {} for m in methods}
        for r in self.records:
            if r.method in by and r.snr_db == snr_db and not r.censored:
                by[r.method][r.trial] = r.r_err
        for m in methods:
            ok = set(by[m]) if ok is None else ok & set(by[m])
        trials = sorted(ok or ())
        return {m: np.array([by[m][t] for t in trials]) for m in methods}


def version_string() -> str:
    """``git describe`` of the source tree when available, else the package version."""
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True,
            text=True,
            timeout=5,
        )
        if out.returncode == 0 and out.stdout.strip():
            return f"v{__version__}-g{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return f"v{__version__}"


def provenance(cfg: ExperimentConfig | None = None, seed=None) -> str:
    h = cfg.config_hash() if cfg is not None else "none"
    s = seed if seed is not None else (cfg.seed if cfg is not None else "none")
    return f"provenance config_hash={h} seed={s} version={version_string()}"


def _pair_error(a: PolarCoord, b: PolarCoord) -> float:
    return math.sqrt(max(a.r**2 + b.r**2 - 2 * a.r * b.r * math.cos(a.phi - b.phi), 0.0))


def localization_error(est, truth) -> float:
    """Average law-of-cosines distance after matching estimates to truths.

    Up to three targets are matched by exhaustive search over permutations;
    larger sets are matched greedily by smallest pairwise error.
    """
    est, truth = list(est), list(truth)
    if len(est) != len(truth):
        raise ValueError(f"length mismatch: {len(est)} estimates vs {len(truth)} truths")
    if not est:
        raise ValueError("no targets")
    n = len(est)
    cost = np.array([[_pair_error(e, t) for t in truth] for e in est])
    if n <= EXHAUSTIVE_PAIRING_MAX:
        best = min(sum(cost[i, p[i]] for i in range(n)) for p in itertools.permutations(range(n)))
        return float(best / n)
    total, used_e, used_t = 0.0, set(), set()
    for flat in np.argsort(cost, axis=None, kind="stable"):
        i, j = divmod(int(flat), n)
        if i in used_e or j in used_t:
            continue
        total += cost[i, j]
        used_e.add(i)
        used_t.add(j)
    return float(total / n)


def trial_seeds(master_seed, trials: int):
    """Per-trial ``(scene_seed, noise_seed)`` pairs spawned from the master seed."""
    out = []
    for child in np.random.SeedSequence(master_seed).spawn(trials):
        scene, noise = child.spawn(2)
        out.append((scene, noise))
    return out


def _estimate(method, y, grid, L):
    if method == "music":
        return music_localize(y, MusicConfig(grid, source_count=L + 1))
    return localize(y, grid, L=L, use_fft=(method == "proposed-fft"))


def run_trial(cfg: ExperimentConfig, trial: int) -> list[TrialRecord]:
    scene_seed, noise_seed = trial_seeds(cfg.seed, cfg.trials)[trial]
    scene = draw_scene(scene_seed, cfg.array, cfg.L, cfg.r_range)
    records = []
    for snr in cfg.snr_db:
        ofdm = with_noise_power(cfg.ofdm, noise_power_for_snr(scene, cfg.array, snr))
        y = synthesize_received(scene, cfg.array, ofdm, noise_seed)
        for method in cfg.methods:
            try:
                res = _estimate(method, y, cfg.grid, cfg.L)
            except InsufficientPeaksError as exc:
                records.append(TrialRecord(trial, snr, method, None, f"insufficient-peaks found={exc.found}"))
                continue
            records.append(TrialRecord(trial, snr, method, localization_error(res.estimates, scene.coords)))
    return records


def _run_trial_star(args):
    return run_trial(*args)


def run_cdf_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Paired Monte-Carlo run; records are sorted by trial, SNR and method order."""
    jobs = [(cfg, t) for t in range(cfg.trials)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            chunks = list(pool.map(_run_trial_star, jobs))
    else:
        chunks = [run_trial(*j) for j in jobs]
    order = {m: i for i, m in enumerate(cfg.methods)}
    records = sorted(itertools.chain.from_iterable(chunks), key=lambda r: (r.trial, r.snr_db, order[r.method]))
    return ExperimentResult(cfg, records)


def empirical_cdf(values):
    """Sorted values and the fraction of samples ``<=`` each one."""
    x = np.sort(np.asarray(values, dtype=float))
    if x.size == 0:
        return x, x
    return x, np.arange(1, x.size + 1) / x.size


def _clog2(n: int) -> int:
    return max(0, (int(n) - 1).bit_length())


def multiplication_counts(K: int, N: int, G_a: int, G_d: int, L: int) -> dict[str, int]:
    """Closed-form multiplication counts per method.

    ``proposed-fft-padded`` repeats the FFT count at the padded length
    ``G_a + 2N`` used by the convolution itself.
    """
    for name, v in (("K", K), ("N", N), ("G_a", G_a), ("G_d", G_d)):
        if int(v) != v or v < 1:
            raise InvalidConfigError(f"{name} must be a positive integer, got {v}")
    if int(L) != L or L < 0:
        raise InvalidConfigError(f"L must be a non-negative integer, got {L}")
    K, N, G_a, G_d, L = map(int, (K, N, G_a, G_d, L))
    g_pad = G_a + 2 * N
    return {
        "music": K * N**2 + N**3 + G_a * G_d * ((N - L + 1) * N**2 + N),
        "proposed-direct": K * G_d * (G_a + 1) * N,
        "proposed-fft": K * G_d * _clog2(G_a) * 2 ** _clog2(G_a),
        "proposed-fft-padded": K * G_d * _clog2(g_pad) * 2 ** _clog2(g_pad),
    }


def benchmark_runtime(
    array: ArrayConfig,
    ofdm: OfdmConfig,
    grid: GridSpec,
    methods=METHODS,
    trials: int = 3,
    warmup: int = 1,
    seed=0,
    L: int = 0,
    single_thread: bool = True,
) -> ComplexityReport:
    """Wall-clock seconds per localize call on a fixed seed set.

    Warm-up calls are excluded. With ``single_thread`` the BLAS/FFT pools are
    limited to one thread so methods are compared on equal footing.
    """
    if warmup < 1:
        raise InvalidConfigError("at least one warm-up iteration is required")
    if trials < 1:
        raise InvalidConfigError("at least one timed trial is required")
    seeds = trial_seeds(seed, trials + warmup)
    signals = []
    for scene_seed, noise_seed in seeds:
        scene = draw_scene(scene_seed, array, L, (grid.r_min, grid.r_max))
        signals.append(synthesize_received(scene, array, ofdm, noise_seed))

    def timed():
        rep = ComplexityReport(counts=multiplication_counts(ofdm.K, array.num_elements, grid.g_a, grid.g_d, L))
        for method in methods:
            samples = []
            for idx, y in enumerate(signals):
                t0 = time.perf_counter()
                _estimate(method, y, grid, L)
                dt = time.perf_counter() - t0
                if idx >= warmup:
                    samples.append(dt)
            sd = statistics.stdev(samples) if len(samples) > 1 else 0.0
            rep.timings[method] = (statistics.fmean(samples), sd)
        return rep

    if single_thread:
        from threadpoolctl import threadpool_limits

        with threadpool_limits(limits=1):
            return timed()
    return timed()


def _num(v) -> str:
    return repr(float(v))


def _write_rows(path, header, rows, prov):
    with open(path, "w", newline="") as fh:
        fh.write(f"# {prov}\n")
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def write_records_csv(path, result: ExperimentResult):
    rows = [
        [r.trial, r.snr_db, r.method, "" if r.censored else _num(r.r_err), int(r.censored), r.reason]
        for r in result.records
    ]
    _write_rows(path, ["trial", "snr_db", "method", "r_err_m", "censored", "reason"], rows, provenance(result.config))


def write_cdf_csvs(out_dir, result: ExperimentResult) -> list[Path]:
    """One CSV per (method, SNR) with columns ``r_err_m, cdf``."""
    paths = []
    for method in result.config.methods:
        for snr in result.config.snr_db:
            x, F = empirical_cdf(result.errors(method, snr))
            p = Path(out_dir) / f"cdf_{method}_snr{snr:g}dB.csv"
            _write_rows(p, ["r_err_m", "cdf"], [[_num(a), _num(b)] for a, b in zip(x, F)], provenance(result.config))
            paths.append(p)
    return paths


def summarize(result: ExperimentResult) -> list[dict]:
    out = []
    for snr in result.config.snr_db:
        paired = result.paired_errors(result.config.methods, snr)
        for method in result.config.methods:
            e = paired[method]
            out.append(
                {
                    "snr_db": snr,
                    "method": method,
                    "paired_trials": int(e.size),
                    "median_r_err_m": float(np.median(e)) if e.size else None,
                    "mean_r_err_m": float(np.mean(e)) if e.size else None,
                    "censored": result.censored_count(method, snr),
                }
            )
    return out


def min_antenna_rows(alphas, R=1.0, freqs=(3.5e9, 28e9)):
    """Rows ``alpha, wide@f..., narrow@f...``; blank where a formula is undefined."""
    rows = []
    for a in alphas:
        row = [_num(a)]
        for fn in (min_antennas_wide, min_antennas_narrow):
            for f in freqs:
                try:
                    row.append(fn(float(a), R, SPEED_OF_LIGHT / f))
                except SucaError:
                    row.append("")
        rows.append(row)
    return rows


def cartesian_heatmap(magnitude, grid: GridSpec, arr: ArrayConfig, nx: int = 200, ny: int = 200):
    """Resample a polar ``(G_a, G_d)`` magnitude grid onto Cartesian axes (NaN outside)."""
    phis = grid.angles(arr)
    rs = grid.distances()
    interp = RegularGridInterpolator((phis, rs), magnitude, bounds_error=False, fill_value=np.nan)
    xs = np.linspace(-grid.r_max, grid.r_max, nx)
    ys = np.linspace(0.0 if arr.sector[0] >= 0 else -grid.r_max, grid.r_max, ny)
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    P = np.mod(np.arctan2(Y, X), 2 * math.pi)
    Rr = np.hypot(X, Y)
    return xs, ys, interp(np.stack([P, Rr], axis=-1))


def export_figures(cfg: ExperimentConfig, run_cdf: bool = True) -> list[Path]:
    """Write the CSV bundle under ``cfg.out_dir`` and return the written paths."""
    out = Path(cfg.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise InvalidConfigError(f"output directory {out} is not writable: {exc}") from exc
    prov = provenance(cfg)
    written = []
    arr = cfg.array

    alphas = np.unique(np.concatenate([np.linspace(0.05, 1.55, 61), [math.pi / 8, math.pi / 4, math.pi / 3]]))
    p = out / "min_antennas.csv"
    header = ["alpha_rad", "wide_3.5GHz", "wide_28GHz", "narrow_3.5GHz", "narrow_28GHz"]
    _write_rows(p, header, min_antenna_rows(alphas, R=arr.radius_m), prov)
    written.append(p)

    target = PolarCoord(10.0, math.pi / 2)
    markers = []
    for f in (3.5e9, 28e9):
        width = angular_lobe_width(f, arr.radius_m, arr.half_span_rad)
        phis = target.phi + np.linspace(-4 * width, 4 * width, 801)
        pat = discrete_angular_pattern(arr, f, target.r, target.phi, phis)
        p = out / f"angular_pattern_{f / 1e9:g}GHz.csv"
        write_pattern_csv(p, pat, "rad", provenance=prov)
        written.append(p)
        markers.append([p.name, _num(target.phi), _num(width), "adjacent-extremum spacing"])

    rgrid = np.linspace(5.0, 20.0, 1501)
    p = out / "distance_pattern_single.csv"
    write_pattern_csv(p, distance_pattern_single(arr, cfg.ofdm.f_c, target.r, target.phi, rgrid[::10]), "m", provenance=prov)
    written.append(p)
    p = out / "distance_pattern_multi.csv"
    write_pattern_csv(p, distance_pattern_multi(arr, cfg.ofdm, target.r, target.phi, rgrid), "m", provenance=prov)
    written.append(p)
    markers.append([p.name, _num(target.r), _num(distance_lobe_width(cfg.ofdm)), "null-to-null main-lobe width"])

    p = out / "lobe_markers.csv"
    _write_rows(p, ["file", "center", "width", "meaning"], markers, prov)
    written.append(p)

    if run_cdf:
        result = run_cdf_experiment(cfg)
        p = out / "trials.csv"
        write_records_csv(p, result)
        written.append(p)
        written.extend(write_cdf_csvs(out, result))
        p = out / "summary.json"
        p.write_text(json.dumps({"provenance": prov, "summary": summarize(result)}, indent=2))
        written.append(p)

    scene_seed, noise_seed = trial_seeds(cfg.seed, 1)[0]
    scene = draw_scene(scene_seed, arr, cfg.L, cfg.r_range)
    snr = cfg.snr_db[0] if cfg.snr_db else None
    ofdm = cfg.ofdm if snr is None else with_noise_power(cfg.ofdm, noise_power_for_snr(scene, arr, snr))
    y = synthesize_received(scene, arr, ofdm, noise_seed)
    res = localize(y, cfg.grid, L=cfg.L, keep_stack=True)
    xs, ys, img = cartesian_heatmap(res.stack.magnitude_sum(), cfg.grid, arr)
    p = out / "heatmap.csv"
    rows = [
        [_num(x), _num(yv), "" if np.isnan(v) else _num(v)]
        for iy, yv in enumerate(ys)
        for x, v in zip(xs, img[iy])
    ]
    _write_rows(p, ["x_m", "y_m", "magnitude_sum"], rows, prov)
    written.append(p)
    p = out / "heatmap_truth.csv"
    truth_rows = [[i, _num(c.r), _num(c.phi)] for i, c in enumerate(scene.coords)]
    est_rows = [[f"est{i}", _num(c.r), _num(c.phi)] for i, c in enumerate(res.estimates)]
    _write_rows(p, ["label", "r_m", "phi_rad"], truth_rows + est_rows, prov)
    written.append(p)
    return written


__all__ = [
    "METHODS",
    "ComplexityReport",
    "ExperimentConfig",
    "ExperimentResult",
    "TrialRecord",
    "benchmark_runtime",
    "cartesian_heatmap",
    "empirical_cdf",
    "export_figures",
    "localization_error",
    "multiplication_counts",
    "provenance",
    "run_cdf_experiment",
    "run_trial",
    "summarize",
    "trial_seeds",
    "version_string",
]
