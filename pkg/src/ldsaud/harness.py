"""Monte Carlo trial engine, metric accumulation, and CSV persistence.

Trials are seeded as ``base_seed + trial_index`` so a sweep's result is a
pure function of its configuration, independent of execution order and
thread count.  One CSV row per (detector, sparsity, SNR) point with the
header::

    detector,lambda,snr_db,trials,pm,pf,ser,miss_count,false_count,symbol_error_count,seed
"""

from __future__ import annotations

import json
import math
import sys
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from . import _kernels as _k
from .aud import DetectorConfig
from .channel import snr_to_sigma
from .preambles import build_preamble_pool, rice_scale
from .signatures import build_constellation, build_signature_matrix

__all__ = [
    "CSV_HEADER",
    "DETECTORS",
    "ConfigError",
    "ExperimentConfig",
    "SweepRow",
    "SweepResults",
    "TrialCounts",
    "run_trial",
    "run_sweep",
    "compute_metrics",
    "wilson_interval",
    "write_csv",
    "read_csv",
    "inspect_trial",
]

CSV_HEADER = "detector,lambda,snr_db,trials,pm,pf,ser,miss_count,false_count,symbol_error_count,seed"

# name -> (detector id, trial mode); '-initial' runs step 1 only, the bare
# pipeline names add the zero-symbol corrector, '-mpa' names are the
# uncorrected detector + decode arrangements used as baselines.
DETECTORS = {
    "cover-initial": (_k.DET_COVER, _k.MODE_INITIAL),
    "mpa-initial": (_k.DET_MPA, _k.MODE_INITIAL),
    "tl-mpa-initial": (_k.DET_TL_MPA, _k.MODE_INITIAL),
    "omp-initial": (_k.DET_OMP, _k.MODE_INITIAL),
    "amp-initial": (_k.DET_AMP, _k.MODE_INITIAL),
    "cover": (_k.DET_COVER, _k.MODE_PIPELINE),
    "mpa": (_k.DET_MPA, _k.MODE_PIPELINE),
    "tl-mpa": (_k.DET_TL_MPA, _k.MODE_PIPELINE),
    "cover-mpa": (_k.DET_COVER, _k.MODE_BASELINE),
    "omp-mpa": (_k.DET_OMP, _k.MODE_BASELINE),
    "amp-mpa": (_k.DET_AMP, _k.MODE_BASELINE),
    "oracle-mpa": (_k.DET_ORACLE, _k.MODE_BASELINE),
}


class ConfigError(ValueError):
    """Invalid experiment configuration; ``key`` names the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class ExperimentConfig:
    """Sweep definition; defaults mirror the standard system configuration
    (80 users, 39 sub-carriers, column weight 2, packets of 10 binary
    symbols, sparsity 0.1 or 0.3)."""

    n_users: int = 80
    n_subcarriers: int = 39
    col_weight: int = 2
    lambdas: tuple = (0.1, 0.3)
    packet_len: int = 10
    mod_order: int = 2
    snr_grid: tuple = (0.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0)
    detectors: tuple = ("cover-mpa", "mpa", "tl-mpa", "omp-mpa", "amp-mpa")
    trials: int = 1000
    seed: int = 1
    matrix_seed: int = 7
    zc_root: int = 1
    tau_zc: float = 0.5
    tau_zs: int | None = None
    iterations: int = 6
    posterior_threshold: float = 0.99
    llr_threshold: float = -10.0
    rice_scale: str = "derived"
    message_form: str = "ratio"
    include_own_prior: bool = True
    amp_iterations: int = 30
    omp_max_atoms: int | None = None
    omp_residual_margin: float = 1.1
    out_path: str = "sweep.csv"
    threads: int = 0

    def validate(self) -> None:
        if self.n_users < 1:
            raise ConfigError("n_users", "must be positive")
        if self.n_subcarriers < 1:
            raise ConfigError("n_subcarriers", "must be positive")
        if self.n_subcarriers % 2 == 0:
            raise ConfigError("n_subcarriers", "must be odd (ZC preamble length)")
        if not 1 <= self.col_weight <= self.n_subcarriers:
            raise ConfigError("col_weight", "must lie in [1, n_subcarriers]")
        if self.n_users > math.comb(self.n_subcarriers, self.col_weight):
            raise ConfigError("n_users", "exceeds the number of distinct columns")
        if math.gcd(self.zc_root, self.n_subcarriers) != 1:
            raise ConfigError("zc_root", "must be coprime with n_subcarriers")
        for lam in self.lambdas:
            if not 0.0 < lam < 1.0:
                raise ConfigError("lambda", f"sparsity {lam} outside (0, 1)")
            if round(lam * self.n_users) < 1:
                raise ConfigError("lambda", f"sparsity {lam} activates no user")
        if not self.lambdas:
            raise ConfigError("lambda", "at least one sparsity required")
        if not self.snr_grid:
            raise ConfigError("snr_db", "at least one SNR point required")
        for name in self.detectors:
            if name not in DETECTORS:
                raise ConfigError("detectors", f"unknown detector {name!r}")
        if not self.detectors:
            raise ConfigError("detectors", "at least one detector required")
        if self.trials < 1:
            raise ConfigError("trials", "must be at least 1")
        if self.packet_len < 1:
            raise ConfigError("packet_len", "must be at least 1")
        if self.mod_order < 2:
            raise ConfigError("mod_order", "must be at least 2")
        if not 0.0 < self.tau_zc < 1.0:
            raise ConfigError("tau_zc", "must lie in (0, 1)")
        if self.tau_zs is not None and self.tau_zs < 1:
            raise ConfigError("tau_zs", "must be at least 1")
        if self.iterations < 1:
            raise ConfigError("iterations", "must be at least 1")
        if self.rice_scale not in ("derived", "plain"):
            raise ConfigError("rice-scale", f"unknown mode {self.rice_scale!r}")
        if self.message_form not in ("ratio", "single-term"):
            raise ConfigError("message-form", f"unknown form {self.message_form!r}")
        if self.seed < 0 or self.seed + self.trials >= 2 ** 31:
            raise ConfigError("seed", "seed + trials must stay below 2^31")
        if self.amp_iterations < 1:
            raise ConfigError("amp_iterations", "must be at least 1")
        if self.omp_residual_margin < 0:
            raise ConfigError("omp_residual_margin", "must be nonnegative")

    def resolved_tau_zs(self) -> int:
        return self.tau_zs if self.tau_zs is not None else math.ceil(self.packet_len / 3)

    def detector_config(self, lam: float) -> DetectorConfig:
        return DetectorConfig(
            prior=lam,
            iterations=self.iterations,
            posterior_threshold=self.posterior_threshold,
            llr_threshold=self.llr_threshold,
            rice_scale=self.rice_scale,
            message_form=self.message_form,
            include_own_prior=self.include_own_prior,
        )


_FLOAT_KEYS = {"tau_zc", "posterior_threshold", "llr_threshold", "omp_residual_margin"}
_INT_KEYS = {"n_users", "n_subcarriers", "col_weight", "packet_len", "mod_order",
             "trials", "seed", "matrix_seed", "zc_root", "tau_zs", "iterations",
             "amp_iterations", "omp_max_atoms", "threads"}
_BOOL_KEYS = {"include_own_prior"}
_STR_KEYS = {"rice_scale", "message_form", "out_path"}


def parse_snr_spec(text: str) -> tuple:
    """Parse 'start:step:stop' or a whitespace/comma separated list of dB values."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError("snr_db", "range must be start:step:stop")
        start, step, stop = (float(p) for p in parts)
        if step <= 0:
            raise ConfigError("snr_db", "step must be positive")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        if n < 1:
            raise ConfigError("snr_db", "empty range")
        return tuple(start + i * step for i in range(n))
    vals = [v for chunk in text.split(",") for v in chunk.split()]
    return tuple(float(v) for v in vals)


def config_from_file(path, overrides: dict | None = None) -> ExperimentConfig:
    """Load the flat ``key = value`` format; '#' starts a comment.

    List keys (lambda, snr_db, detectors) take whitespace- or
    comma-separated values; snr_db also accepts start:step:stop.
    """
    values: dict = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}", f"expected key = value, got {line!r}")
            key, _, val = line.partition("=")
            key = key.strip().replace("-", "_")
            val = val.strip()
            if key == "lambda" or key == "lambdas":
                values["lambdas"] = tuple(
                    float(v) for chunk in val.split(",") for v in chunk.split())
            elif key == "snr_db" or key == "snr":
                values["snr_grid"] = parse_snr_spec(val)
            elif key == "detectors" or key == "detector":
                values["detectors"] = tuple(
                    v for chunk in val.split(",") for v in chunk.split())
            elif key == "out":
                values["out_path"] = val
            elif key in _INT_KEYS:
                try:
                    values[key] = int(val)
                except ValueError:
                    raise ConfigError(key, f"expected integer, got {val!r}") from None
            elif key in _FLOAT_KEYS:
                try:
                    values[key] = float(val)
                except ValueError:
                    raise ConfigError(key, f"expected number, got {val!r}") from None
            elif key in _BOOL_KEYS:
                if val.lower() not in ("true", "false", "on", "off", "1", "0"):
                    raise ConfigError(key, f"expected boolean, got {val!r}")
                values[key] = val.lower() in ("true", "on", "1")
            elif key in _STR_KEYS:
                values[key] = val
            else:
                raise ConfigError(key, "unknown configuration key")
    cfg = ExperimentConfig(**values)
    if overrides:
        cfg = replace(cfg, **overrides)
    return cfg


class TrialCounts(NamedTuple):
    missed_initial: int
    false_initial: int
    missed: int
    false: int
    symbol_errors: int | None
    subset_violations: int


@dataclass(frozen=True)
class SweepRow:
    detector: str
    lam: float
    snr_db: float
    trials: int
    pm: float | None
    pf: float | None
    ser: float | None
    miss_count: int
    false_count: int
    symbol_error_count: int
    seed: int


@dataclass
class SweepResults:
    config: ExperimentConfig
    rows: list = field(default_factory=list)

    def filter(self, detector=None, lam=None):
        rows = self.rows
        if detector is not None:
            rows = [r for r in rows if r.detector == detector]
        if lam is not None:
            rows = [r for r in rows if abs(r.lam - lam) < 1e-12]
        return rows


class _Static:
    """Arrays shared by every trial of one system configuration."""

    def __init__(self, cfg: ExperimentConfig):
        self.matrix = build_signature_matrix(
            cfg.n_subcarriers, cfg.n_users, cfg.col_weight, cfg.matrix_seed)
        self.pool = build_preamble_pool(self.matrix, cfg.zc_root)
        self.constellations = [
            build_constellation(u, cfg.mod_order, cfg.n_users)
            for u in range(cfg.n_users)
        ]
        (self.sub_users, self.sub_slot, self.sub_deg, self.user_subs) = _k.graph_arrays(
            self.matrix.entries)
        if int(self.matrix.row_weights.max()) > 8:
            raise ConfigError("col_weight", "row degree above the decode guard of 8")
        self.shifts_conj = np.ascontiguousarray(self.pool.shifts.conj())
        self.pre_matrix = np.ascontiguousarray(self.pool.matrix)
        self.amp_scale = float(np.linalg.norm(self.pre_matrix[:, 0]))
        self.amp_matrix = np.ascontiguousarray(self.pre_matrix / self.amp_scale)
        self.preambles = np.ascontiguousarray(self.pool.preambles)
        self.const_pts = np.zeros((cfg.n_users, cfg.mod_order + 1), dtype=np.complex128)
        for u, c in enumerate(self.constellations):
            self.const_pts[u] = c.extended_points


_STATIC_CACHE: dict = {}


def get_static(cfg: ExperimentConfig) -> _Static:
    key = (cfg.n_users, cfg.n_subcarriers, cfg.col_weight,
           cfg.matrix_seed, cfg.zc_root, cfg.mod_order)
    if key not in _STATIC_CACHE:
        _STATIC_CACHE[key] = _Static(cfg)
    return _STATIC_CACHE[key]


def _point_params(cfg: ExperimentConfig, lam: float, snr_db: float):
    sigma = snr_to_sigma(snr_db)
    s_rice = rice_scale(sigma, cfg.col_weight, cfg.n_subcarriers, cfg.rice_scale)
    n_active = int(round(lam * cfg.n_users))
    omp_kmax = cfg.omp_max_atoms if cfg.omp_max_atoms is not None else 2 * n_active
    omp_kmax = max(1, min(omp_kmax, cfg.n_users))
    omp_tol_abs = cfg.omp_residual_margin * sigma * math.sqrt(cfg.n_subcarriers)
    return sigma, s_rice, n_active, omp_kmax, omp_tol_abs


def run_trial(
    cfg: ExperimentConfig, detector: str, lam: float, snr_db: float, trial_seed: int
) -> TrialCounts:
    """One seeded trial: scenario, detection, decoding, error counts."""
    if detector not in DETECTORS:
        raise ConfigError("detectors", f"unknown detector {detector!r}")
    det_id, mode = DETECTORS[detector]
    st = get_static(cfg)
    sigma, s_rice, n_active, omp_kmax, omp_tol_abs = _point_params(cfg, lam, snr_db)
    try:
        activity, sym_idx, y_p, Y = _k.draw_scenario_kernel(
            trial_seed, cfg.n_users, n_active, cfg.packet_len, cfg.mod_order,
            st.preambles, st.const_pts, st.user_subs, cfg.n_subcarriers, sigma)
        counts = _k.pipeline_kernel(
            y_p, Y, activity, sym_idx, det_id, mode,
            st.sub_users, st.sub_slot, st.sub_deg, st.user_subs,
            st.shifts_conj, st.pre_matrix, st.amp_matrix, st.amp_scale,
            cfg.col_weight, st.const_pts, sigma, s_rice, lam,
            cfg.tau_zc, cfg.resolved_tau_zs(), cfg.iterations,
            cfg.posterior_threshold, cfg.llr_threshold,
            cfg.message_form == "ratio", cfg.include_own_prior,
            cfg.iterations, omp_kmax, omp_tol_abs, cfg.amp_iterations)
    except Exception as exc:  # pragma: no cover - defensive context wrapper
        raise RuntimeError(
            f"trial failed (detector={detector}, lambda={lam}, "
            f"snr={snr_db} dB, seed={trial_seed})") from exc
    sym = int(counts[4]) if counts[4] >= 0 else None
    return TrialCounts(int(counts[0]), int(counts[1]), int(counts[2]),
                       int(counts[3]), sym, int(counts[5]))


def compute_metrics(miss, false, symbol_errors, n_active, n_inactive,
                    packet_len, trials):
    """(pm, pf, ser) with None wherever the denominator is zero or no
    decoding stage ran; a missed active user counts packet_len symbol
    errors, false alarms carry no ground-truth symbols and are excluded."""
    pm = miss / (n_active * trials) if n_active * trials > 0 else None
    pf = false / (n_inactive * trials) if n_inactive * trials > 0 else None
    denom = n_active * packet_len * trials
    ser = symbol_errors / denom if (symbol_errors is not None and denom > 0) else None
    return pm, pf, ser


def wilson_interval(count: int, n: int, z: float = 1.959963984540054):
    """95% (by default) Wilson score interval for a binomial rate."""
    if n == 0:
        return 0.0, 1.0
    p = count / n
    z2 = z * z
    center = (p + z2 / (2 * n)) / (1 + z2 / n)
    half = z * math.sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / (1 + z2 / n)
    return max(0.0, center - half), min(1.0, center + half)


def _sweep_one_point(cfg, st, detector, lam, snr_db):
    det_id, mode = DETECTORS[detector]
    sigma, s_rice, n_active, omp_kmax, omp_tol_abs = _point_params(cfg, lam, snr_db)
    agg = _k.sweep_point_kernel(
        cfg.seed, cfg.trials, n_active, cfg.packet_len, cfg.mod_order,
        det_id, mode,
        st.sub_users, st.sub_slot, st.sub_deg, st.user_subs,
        st.shifts_conj, st.pre_matrix, st.amp_matrix, st.amp_scale, st.preambles,
        cfg.col_weight, st.const_pts, sigma, s_rice, lam,
        cfg.tau_zc, cfg.resolved_tau_zs(), cfg.iterations,
        cfg.posterior_threshold, cfg.llr_threshold,
        cfg.message_form == "ratio", cfg.include_own_prior,
        cfg.iterations, omp_kmax, omp_tol_abs, cfg.amp_iterations)
    miss, false = int(agg[2]), int(agg[3])
    sym = int(agg[4]) if agg[4] >= 0 else None
    pm, pf, ser = compute_metrics(miss, false, sym, n_active,
                                  cfg.n_users - n_active, cfg.packet_len, cfg.trials)
    return SweepRow(detector, lam, snr_db, cfg.trials, pm, pf, ser,
                    miss, false, sym if sym is not None else 0, cfg.seed)


def run_sweep(cfg: ExperimentConfig, out_path=None, progress=False) -> SweepResults:
    """Run detectors x sparsities x SNR grid; aggregate per-point counts.

    When ``out_path`` is given, partial rows are flushed there on
    interruption together with a ``<out>.resume`` marker recording how far
    the sweep got.
    """
    cfg.validate()
    if cfg.threads > 0:
        import numba
        numba.set_num_threads(cfg.threads)
    st = get_static(cfg)
    results = SweepResults(cfg)
    points = [(d, lam, snr) for d in cfg.detectors
              for lam in cfg.lambdas for snr in cfg.snr_grid]
    try:
        for i, (det, lam, snr) in enumerate(points):
            if progress:
                print(f"[{i + 1}/{len(points)}] {det} lambda={lam} snr={snr} dB",
                      file=sys.stderr, flush=True)
            results.rows.append(_sweep_one_point(cfg, st, det, lam, snr))
    except KeyboardInterrupt:
        if out_path is not None:
            write_csv(results, out_path)
            with open(str(out_path) + ".resume", "w") as fh:
                json.dump({"completed_points": len(results.rows),
                           "total_points": len(points),
                           "next_point": len(results.rows)}, fh)
        raise
    if out_path is not None:
        write_csv(results, out_path)
    return results


def _fmt(value) -> str:
    if value is None:
        return ""
    return repr(float(value))


def write_csv(results: SweepResults, path) -> None:
    with open(path, "w") as fh:
        fh.write(CSV_HEADER + "\n")
        for r in results.rows:
            fh.write(
                f"{r.detector},{_fmt(r.lam)},{_fmt(r.snr_db)},{r.trials},"
                f"{_fmt(r.pm)},{_fmt(r.pf)},{_fmt(r.ser)},"
                f"{r.miss_count},{r.false_count},{r.symbol_error_count},{r.seed}\n")


def read_csv(path) -> list:
    """Rows of a sweep CSV (header-checked), None for absent metrics."""
    rows = []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise ValueError(f"unexpected CSV header: {header!r}")
        for lineno, line in enumerate(fh, 2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 11:
                raise ValueError(f"line {lineno}: expected 11 fields")
            rows.append(SweepRow(
                parts[0], float(parts[1]), float(parts[2]), int(parts[3]),
                float(parts[4]) if parts[4] else None,
                float(parts[5]) if parts[5] else None,
                float(parts[6]) if parts[6] else None,
                int(parts[7]), int(parts[8]), int(parts[9]), int(parts[10])))
    return rows


def inspect_trial(cfg: ExperimentConfig, detector: str, lam: float,
                  snr_db: float, trial_seed: int) -> dict:
    """Single trial with every intermediate stage kept, for the CLI dump."""
    from .aud import amp_detect, cover_decode, mpa_detect, omp_detect, tl_mpa_detect
    from .decoder import correct_false_alarms, _decode_columns
    from .preambles import busy_test, correlate, estimate_loads
    from .signatures import restrict_graph

    det_id, mode = DETECTORS[detector]
    st = get_static(cfg)
    sigma, s_rice, n_active, omp_kmax, omp_tol_abs = _point_params(cfg, lam, snr_db)
    activity, sym_idx, y_p, Y = _k.draw_scenario_kernel(
        trial_seed, cfg.n_users, n_active, cfg.packet_len, cfg.mod_order,
        st.preambles, st.const_pts, st.user_subs, cfg.n_subcarriers, sigma)

    profile = correlate(y_p, st.pool, sigma=sigma, rice_mode=cfg.rice_scale)
    busy = busy_test(profile, cfg.tau_zc)
    loads = estimate_loads(profile, cfg.tau_zc, st.matrix.row_weights)
    det_cfg = cfg.detector_config(lam)
    if det_id == _k.DET_COVER:
        est = cover_decode(busy, st.matrix)
    elif det_id == _k.DET_MPA:
        est = mpa_detect(profile, st.matrix, det_cfg)
    elif det_id == _k.DET_TL_MPA:
        est = tl_mpa_detect(loads, st.matrix, det_cfg)
    elif det_id == _k.DET_OMP:
        est = omp_detect(y_p, st.pool, omp_kmax,
                         omp_tol_abs / max(float(np.linalg.norm(y_p)), 1e-300))
    elif det_id == _k.DET_AMP:
        est = amp_detect(y_p, st.pool, lam, cfg.amp_iterations)
    else:
        from .aud import SupersetEstimate
        est = SupersetEstimate(activity.astype(bool),
                               activity.astype(np.float64), "oracle")

    out = {
        "activity": np.flatnonzero(activity),
        "R": profile.values,
        "busy": busy,
        "loads": loads,
        "superset": est.members,
        "refined": est.members,
        "zero_counts": {},
        "counts": run_trial(cfg, detector, lam, snr_db, trial_seed),
    }
    if mode == _k.MODE_INITIAL or len(est.members) == 0:
        return out
    graph = restrict_graph(st.matrix, est.members)
    members, post, hard, zeros = _decode_columns(
        Y, graph, st.constellations, sigma, cfg.iterations)
    out["zero_counts"] = {int(u): int(z) for u, z in zip(members, zeros)}
    if mode == _k.MODE_PIPELINE:
        from .decoder import DecodedPacket
        packets = [DecodedPacket(u, None, int(z), None) for u, z in zip(members, zeros)]
        kept = correct_false_alarms(packets, cfg.resolved_tau_zs())
        out["refined"] = np.asarray(sorted(kept), dtype=np.int64)
    return out
