"""Initial active-set estimators (step 1 of the two-step detection).

All detectors return a superset estimate: a set meant to contain every
true active user plus some false alarms, which the decoding stage later
prunes.  The cover decoder works from the hard busy map; the two message
passing detectors work from the soft correlation profile or the integer
load estimates; OMP and AMP are compressed-sensing baselines on the raw
preamble signal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as _k
from .preambles import CorrelationProfile, PreamblePool
from .signatures import SignatureMatrix

__all__ = [
    "DetectorConfig",
    "SupersetEstimate",
    "rice_log_pdf",
    "cover_decode",
    "mpa_detect",
    "tl_mpa_detect",
    "omp_detect",
    "amp_detect",
    "predicted_search_space",
]

MAX_AUD_DEGREE = 25  # 2^degree activity combinations per check node


@dataclass(frozen=True)
class DetectorConfig:
    """Knobs shared by the message passing detectors.

    ``rice_scale`` selects the correlation noise model ('derived' keeps the
    column-weight factor, 'plain' drops it); ``message_form`` selects the
    load-constrained check message ('ratio' makes the decision statistic a
    genuine LLR, 'single-term' keeps only its numerator).
    """

    prior: float
    iterations: int = 6
    posterior_threshold: float = 0.99
    llr_threshold: float = -10.0
    rice_scale: str = "derived"
    message_form: str = "ratio"
    include_own_prior: bool = True

    def __post_init__(self):
        if not 0.0 < self.prior < 1.0:
            raise ValueError("prior must lie in (0, 1)")
        if self.iterations < 1:
            raise ValueError("iterations must be at least 1")
        if self.rice_scale not in ("derived", "plain"):
            raise ValueError(f"unknown rice_scale {self.rice_scale!r}")
        if self.message_form not in ("ratio", "single-term"):
            raise ValueError(f"unknown message_form {self.message_form!r}")


@dataclass(frozen=True, eq=False)
class SupersetEstimate:
    """Detector output: activity flags plus a per-user score.

    Scores are activity posteriors for the Rice detector, LLRs (with -inf
    sentinels) for the load-aided detector, and refit amplitudes for the
    CS baselines.
    """

    active_flags: np.ndarray
    scores: np.ndarray
    detector_tag: str
    enumerated_combinations: int | None = None
    converged: bool = True

    @property
    def members(self) -> np.ndarray:
        return np.flatnonzero(self.active_flags)

    def __contains__(self, user: int) -> bool:
        return bool(self.active_flags[user])


def rice_log_pdf(x, a: float, s: float):
    """Log of the Rice(a, s) density, elementwise over ``x``.

    Computed in the log domain with an asymptotic-safe Bessel term so huge
    ``x * a / s^2`` arguments stay finite.  Returns -inf for x <= 0.
    """
    if s <= 0:
        raise ValueError("scale must be positive")
    if a < 0:
        raise ValueError("noncentrality must be nonnegative")
    arr = np.asarray(x, dtype=np.float64)
    out = np.empty(arr.shape)
    flat_in = arr.ravel()
    flat_out = out.ravel()
    for i in range(flat_in.size):
        flat_out[i] = _k.rice_logpdf(flat_in[i], float(a), float(s))
    return float(out) if np.isscalar(x) or arr.ndim == 0 else out


def _profile_values(profile) -> np.ndarray:
    if isinstance(profile, CorrelationProfile):
        return np.asarray(profile.values, dtype=np.float64)
    return np.asarray(profile, dtype=np.float64)


def cover_decode(busy, matrix: SignatureMatrix) -> SupersetEstimate:
    """Keep exactly the users none of whose sub-carriers is idle."""
    busy = np.asarray(busy, dtype=np.uint8)
    if busy.shape != (matrix.n_subcarriers,):
        raise ValueError("busy map length must equal the sub-carrier count")
    _, _, _, user_subs = _k.graph_arrays(matrix.entries)
    flags = _k.cover_kernel(busy, user_subs)
    return SupersetEstimate(flags.astype(bool), flags.astype(np.float64), "cover")


def mpa_detect(
    profile: CorrelationProfile,
    matrix: SignatureMatrix,
    config: DetectorConfig,
    iterations: int | None = None,
) -> SupersetEstimate:
    """Rice-likelihood message passing on the correlation profile.

    Declares a user inactive only when the normalized activity posterior
    puts more than ``posterior_threshold`` on inactivity, which keeps
    missed detections rare at the cost of extra false alarms.
    """
    if profile.noise_scale is None:
        raise ValueError("profile carries no noise scale; pass sigma to correlate()")
    if int(matrix.row_weights.max()) > MAX_AUD_DEGREE:
        raise ValueError(f"sub-carrier degree exceeds {MAX_AUD_DEGREE}")
    values = _profile_values(profile)
    sub_users, sub_slot, sub_deg, user_subs = _k.graph_arrays(matrix.entries)
    iters = config.iterations if iterations is None else iterations
    post1, flags = _k.mpa_aud_kernel(
        values, sub_users, sub_slot, sub_deg, user_subs,
        float(profile.noise_scale), config.prior, iters,
        config.posterior_threshold, config.include_own_prior)
    return SupersetEstimate(flags.astype(bool), post1, "mpa")


def tl_mpa_detect(
    loads: np.ndarray,
    matrix: SignatureMatrix,
    config: DetectorConfig,
) -> SupersetEstimate:
    """Load-constrained message passing on integer traffic-load estimates.

    Check nodes only enumerate activity combinations whose total matches
    the estimated load, so the per-sub-carrier search space shrinks from
    2^degree to (degree choose load).  Loads must already be clamped to
    the sub-carrier degrees.
    """
    loads = np.asarray(loads, dtype=np.int64)
    if loads.shape != (matrix.n_subcarriers,):
        raise ValueError("load vector length must equal the sub-carrier count")
    if (loads < 0).any() or (loads > matrix.row_weights).any():
        raise ValueError("loads must lie in [0, degree] per sub-carrier")
    sub_users, sub_slot, sub_deg, user_subs = _k.graph_arrays(matrix.entries)
    llr, flags, count = _k.tl_mpa_kernel(
        loads, sub_users, sub_slot, sub_deg, user_subs,
        config.prior, config.iterations, config.llr_threshold,
        config.message_form == "ratio", config.include_own_prior)
    return SupersetEstimate(flags.astype(bool), llr, "tl-mpa",
                            enumerated_combinations=int(count))


def _dictionary(source) -> np.ndarray:
    if isinstance(source, PreamblePool):
        return source.matrix
    return np.asarray(source, dtype=np.complex128)


def omp_detect(y_p, source, k_max: int, residual_tol: float = 0.0) -> SupersetEstimate:
    """Orthogonal matching pursuit support recovery on the preamble bank.

    Stops after ``k_max`` atoms or once the residual norm falls to
    ``residual_tol`` times the input norm.
    """
    S = _dictionary(source)
    y_p = np.asarray(y_p, dtype=np.complex128)
    if y_p.shape != (S.shape[0],):
        raise ValueError("signal length must match the dictionary rows")
    if k_max < 1:
        raise ValueError("k_max must be positive")
    tol_abs = residual_tol * float(np.linalg.norm(y_p))
    flags, scores, _ = _k.omp_kernel(y_p, np.ascontiguousarray(S), k_max, tol_abs)
    return SupersetEstimate(flags.astype(bool), scores, "omp")


def amp_detect(y_p, source, lam: float, iterations: int = 30,
               damping: float = 0.5) -> SupersetEstimate:
    """Approximate message passing with a Bernoulli(lam) activity prior.

    Flags non-convergence (diverging residual variance) and then returns
    the best iterate seen.
    """
    S = _dictionary(source)
    y_p = np.asarray(y_p, dtype=np.complex128)
    if y_p.shape != (S.shape[0],):
        raise ValueError("signal length must match the dictionary rows")
    col_norm = float(np.linalg.norm(S[:, 0]))
    p1, flags, converged = _k.amp_kernel(
        y_p / col_norm, np.ascontiguousarray(S / col_norm), float(lam),
        iterations, damping)
    return SupersetEstimate(flags.astype(bool), p1, "amp", converged=bool(converged))


def predicted_search_space(lam: float, row_weight: int, n_subcarriers: int) -> float:
    """Expected total combinations per check pass of the load-aided detector.

    The load on a sub-carrier concentrates on the two integers bracketing
    ``lam * row_weight``; weighting the binomial combination counts by the
    bracketing probabilities gives the expected enumeration size.
    """
    if not 0.0 < lam < 1.0:
        raise ValueError("lam must lie in (0, 1)")
    w1 = math.floor(lam * row_weight)
    p1 = 1.0 - (lam * row_weight - w1)
    w2 = w1 + 1
    p2 = 1.0 - p1
    c1 = math.comb(row_weight, w1) if w1 <= row_weight else 0
    c2 = math.comb(row_weight, w2) if w2 <= row_weight else 0
    return n_subcarriers * (p1 * c1 + p2 * c2)
