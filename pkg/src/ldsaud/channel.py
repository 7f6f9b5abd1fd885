"""Ground-truth scenario generation and the AWGN uplink.

A scenario fixes which users are active, their payload symbols, and the
noise level; the transmit helpers synthesize the received preamble and
data signals.  All randomness flows through an explicit numpy Generator so
trials can be reproduced and parallelized by seeding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .preambles import PreamblePool
from .signatures import Constellation, SignatureMatrix, build_constellation

__all__ = [
    "Scenario",
    "ReceivedFrame",
    "snr_to_sigma",
    "draw_activity",
    "make_scenario",
    "transmit_preamble",
    "transmit_data",
    "make_received_frame",
    "default_constellations",
]


def snr_to_sigma(snr_db: float) -> float:
    """Noise standard deviation for a per-symbol SNR in dB.

    Unit-energy symbols, so the total complex noise variance is
    ``sigma^2 = 10^(-snr_db/10)``.
    """
    return float(10.0 ** (-snr_db / 20.0))


def draw_activity(n_users: int, lam: float, rng: np.random.Generator) -> np.ndarray:
    """Boolean activity vector with exactly ``round(lam * n_users)`` ones."""
    if lam <= 0 or lam > 1:
        raise ValueError(f"sparsity must lie in (0, 1], got {lam}")
    n_active = int(round(lam * n_users))
    activity = np.zeros(n_users, dtype=bool)
    activity[rng.permutation(n_users)[:n_active]] = True
    return activity


@dataclass(frozen=True, eq=False)
class Scenario:
    """One trial's ground truth.

    ``symbol_indices`` holds the drawn constellation index per (user, slot),
    -1 for inactive users; ``payload`` holds the corresponding complex
    symbols (zero rows for inactive users).  Active users draw uniformly
    from the M nonzero points only; the zero symbol exists solely in the
    decoder's alphabet.
    """

    activity: np.ndarray
    symbol_indices: np.ndarray
    payload: np.ndarray
    sigma: float
    rng_seed: int | None = None

    @property
    def active_set(self) -> np.ndarray:
        return np.flatnonzero(self.activity)

    @property
    def n_active(self) -> int:
        return int(self.activity.sum())

    @property
    def packet_len(self) -> int:
        return self.payload.shape[1]


def make_scenario(
    constellations: list[Constellation],
    lam: float,
    packet_len: int,
    sigma: float,
    rng: np.random.Generator | int,
) -> Scenario:
    """Draw activity and payload symbols for one trial."""
    seed = None
    if not isinstance(rng, np.random.Generator):
        seed = int(rng)
        rng = np.random.default_rng(seed)
    n_users = len(constellations)
    order = constellations[0].order
    activity = draw_activity(n_users, lam, rng)
    symbol_indices = np.full((n_users, packet_len), -1, dtype=np.int64)
    payload = np.zeros((n_users, packet_len), dtype=np.complex128)
    for u in np.flatnonzero(activity):
        idx = rng.integers(0, order, size=packet_len)
        symbol_indices[u] = idx
        payload[u] = constellations[u].points[idx]
    return Scenario(activity, symbol_indices, payload, float(sigma), seed)


def _complex_noise(rng: np.random.Generator, sigma: float, shape) -> np.ndarray:
    if sigma == 0.0:
        return np.zeros(shape, dtype=np.complex128)
    scale = sigma / np.sqrt(2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def transmit_preamble(
    scenario: Scenario, pool: PreamblePool, rng: np.random.Generator
) -> np.ndarray:
    """Superpose the active users' preambles and add complex AWGN."""
    if pool.n_users != len(scenario.activity):
        raise ValueError("pool and scenario disagree on the user count")
    clean = scenario.activity.astype(np.float64) @ pool.preambles
    return clean + _complex_noise(rng, scenario.sigma, pool.length)


def transmit_data(
    scenario: Scenario, matrix: SignatureMatrix, rng: np.random.Generator
) -> np.ndarray:
    """Received (n_subcarriers, packet_len) data matrix over AWGN."""
    clean = matrix.entries.astype(np.float64) @ (
        scenario.activity[:, None] * scenario.payload
    )
    return clean + _complex_noise(
        rng, scenario.sigma, (matrix.n_subcarriers, scenario.packet_len)
    )


@dataclass(frozen=True, eq=False)
class ReceivedFrame:
    """Received preamble vector plus the (n_subcarriers, packet_len) data."""

    preamble_rx: np.ndarray
    data_rx: np.ndarray


def make_received_frame(
    scenario: Scenario,
    matrix: SignatureMatrix,
    pool: PreamblePool,
    rng: np.random.Generator,
) -> ReceivedFrame:
    """Synthesize both transmission stages of one trial."""
    y_p = transmit_preamble(scenario, pool, rng)
    y_d = transmit_data(scenario, matrix, rng)
    return ReceivedFrame(y_p, y_d)


def default_constellations(n_users: int, order: int) -> list[Constellation]:
    """All users' rotated alphabets for a given system size."""
    return [build_constellation(u, order, n_users) for u in range(n_users)]
