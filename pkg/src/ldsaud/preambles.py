"""Zadoff-Chu preamble pool and the correlation receiver.

Each user's preamble is the normalized sum of the ZC cyclic shifts picked
out by its signature column, so a bank of shift correlations reads off the
per-sub-carrier traffic load directly: in the noiseless case the
correlation value on shift ``l`` equals the number of active users
occupying sub-carrier ``l``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .signatures import SignatureMatrix

__all__ = [
    "PreamblePool",
    "CorrelationProfile",
    "zc_sequence",
    "build_preamble",
    "build_preamble_pool",
    "correlate",
    "busy_test",
    "estimate_loads",
    "rice_scale",
]


def zc_sequence(root: int, length: int) -> np.ndarray:
    """Zadoff-Chu sequence ``exp(-j pi r n(n+1) / length)`` for odd lengths.

    Odd length and ``gcd(root, length) == 1`` are required; otherwise the
    cyclic autocorrelation at nonzero lags is not zero and the correlation
    receiver stops being a load meter.
    """
    if length % 2 == 0:
        raise ValueError(f"ZC length must be odd, got {length}")
    if math.gcd(root, length) != 1:
        raise ValueError(f"root {root} not coprime with length {length}")
    n = np.arange(length)
    return np.exp(-1j * np.pi * root * n * (n + 1) / length)


def build_preamble(column: np.ndarray, shifts: np.ndarray, col_weight: int) -> np.ndarray:
    """Sum of the cyclic shifts selected by one signature column, scaled
    by ``1/sqrt(col_weight)`` so the average preamble power is one."""
    column = np.asarray(column)
    if int(column.sum()) != col_weight:
        raise ValueError("column weight does not match col_weight")
    return shifts[np.flatnonzero(column)].sum(axis=0) / np.sqrt(col_weight)


@dataclass(frozen=True, eq=False)
class PreamblePool:
    """ZC base sequence, its cyclic shifts, and the per-user preambles.

    ``shifts[l, n] = base[(n + l) % length]``; ``preambles`` is
    ``(n_users, length)`` with one row per user.
    """

    root: int
    length: int
    base: np.ndarray
    shifts: np.ndarray
    preambles: np.ndarray
    col_weight: int

    @property
    def matrix(self) -> np.ndarray:
        """Preambles as a (length, n_users) dictionary for CS solvers."""
        return self.preambles.T

    @property
    def n_users(self) -> int:
        return self.preambles.shape[0]


def build_preamble_pool(matrix: SignatureMatrix, root: int = 1) -> PreamblePool:
    """Build the shift set and all user preambles for a signature matrix.

    The preamble length equals the sub-carrier count, so the matrix must
    have an odd number of rows coprime with ``root``.
    """
    length = matrix.n_subcarriers
    base = zc_sequence(root, length)
    idx = (np.arange(length)[None, :] + np.arange(length)[:, None]) % length
    shifts = base[idx]
    preambles = (matrix.entries.astype(np.float64).T @ shifts) / np.sqrt(matrix.col_weight)
    return PreamblePool(root, length, base, shifts, preambles, matrix.col_weight)


@dataclass(frozen=True, eq=False)
class CorrelationProfile:
    """Nonnegative correlation magnitudes, one per ZC shift / sub-carrier.

    ``noise_scale`` is the Rice scale in effect for these values (None when
    the noise level was not supplied to :func:`correlate`).
    """

    values: np.ndarray
    noise_scale: float | None = None


def rice_scale(sigma: float, col_weight: int, length: int, mode: str = "derived") -> float:
    """Scale parameter of the correlation magnitudes' Rice distribution.

    ``derived`` keeps the ``sqrt(col_weight)`` factor of the correlation
    normalization; ``plain`` drops it (kept for comparison, it fails the
    distribution test against the simulated receiver).
    """
    if mode == "derived":
        return sigma * math.sqrt(col_weight / (2.0 * length))
    if mode == "plain":
        return sigma / math.sqrt(2.0 * length)
    raise ValueError(f"unknown rice-scale mode {mode!r}")


def correlate(
    y_p: np.ndarray,
    pool: PreamblePool,
    sigma: float | None = None,
    rice_mode: str = "derived",
) -> CorrelationProfile:
    """Correlate a received preamble against every ZC shift.

    ``R[l] = sqrt(w_c)/N_zc * |sum_n y_p[n] conj(base[(n+l) % N_zc])|``.
    Indexing is cyclic; in the noiseless case ``R`` equals the integer
    per-sub-carrier load vector.
    """
    y_p = np.asarray(y_p)
    if y_p.shape != (pool.length,):
        raise ValueError(f"expected length-{pool.length} preamble signal")
    values = np.abs(pool.shifts.conj() @ y_p) * (np.sqrt(pool.col_weight) / pool.length)
    scale = rice_scale(sigma, pool.col_weight, pool.length, rice_mode) if sigma is not None else None
    return CorrelationProfile(values, scale)


def busy_test(profile: CorrelationProfile | np.ndarray, tau_zc: float) -> np.ndarray:
    """Hard busy/idle map: 1 wherever the correlation is >= tau_zc."""
    if tau_zc <= 0:
        raise ValueError("tau_zc must be positive")
    values = profile.values if isinstance(profile, CorrelationProfile) else np.asarray(profile)
    return (values >= tau_zc).astype(np.uint8)


def estimate_loads(
    profile: CorrelationProfile | np.ndarray, tau_zc: float, degrees: np.ndarray
) -> np.ndarray:
    """Round each correlation to an integer load, clamped to the degree.

    Rounds down when the fractional part is below ``tau_zc``, up otherwise;
    loads above the sub-carrier degree are infeasible under the signature
    graph and get clamped.
    """
    if not 0.0 < tau_zc < 1.0:
        raise ValueError("tau_zc must lie in (0, 1)")
    values = profile.values if isinstance(profile, CorrelationProfile) else np.asarray(profile)
    floors = np.floor(values)
    loads = np.where(values - floors < tau_zc, floors, floors + 1).astype(np.int64)
    return np.clip(loads, 0, np.asarray(degrees, dtype=np.int64))
