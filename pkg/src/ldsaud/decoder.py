"""Payload decoding over the redundant factor graph and false alarm removal.

Step 2 of the detection scheme: decode every candidate's packet with
message passing over the graph restricted to the initial active set, drop
candidates whose packets contain too many zero symbols (an inactive user's
best explanation is the all-zero packet), then re-decode on the slimmer
graph.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from . import _kernels as _k
from .aud import DetectorConfig, SupersetEstimate, cover_decode, mpa_detect, tl_mpa_detect
from .channel import ReceivedFrame
from .preambles import PreamblePool, busy_test, correlate, estimate_loads
from .signatures import Constellation, FactorGraph, SignatureMatrix, restrict_graph

__all__ = [
    "DecodedPacket",
    "PipelineConfig",
    "PipelineResult",
    "mpa_decode",
    "brute_force_map",
    "correct_false_alarms",
    "detect_and_decode",
    "zero_symbol_threshold",
]

MAX_DECODE_DEGREE = 8  # alphabet^degree combinations per check node


@dataclass(frozen=True, eq=False)
class DecodedPacket:
    """One user's decoded packet over the extended alphabet.

    ``symbols`` are the hard-decided complex points (zero included);
    ``zero_count`` is how many of them are the zero symbol; ``posteriors``
    has one probability row per data slot over the M+1 alphabet points.
    """

    user: int
    symbols: np.ndarray
    zero_count: int
    posteriors: np.ndarray


def zero_symbol_threshold(packet_len: int) -> int:
    """Zero-count threshold ceil(K/3) balancing misses and false alarms."""
    return math.ceil(packet_len / 3)


def _graph_to_arrays(graph: FactorGraph, n_users: int):
    members = sorted(graph.subcarriers_of_user)
    n_sub = len(graph.users_of_subcarrier)
    col_w = max((len(s) for s in graph.subcarriers_of_user.values()), default=1)
    user_subs = np.zeros((n_users, col_w), dtype=np.int64)
    for u in members:
        user_subs[u] = graph.subcarriers_of_user[u]
    dmax = max(1, max((len(us) for us in graph.users_of_subcarrier), default=1))
    sub_users = np.full((n_sub, dmax), -1, dtype=np.int64)
    sub_slot = np.full((n_sub, dmax), -1, dtype=np.int64)
    sub_deg = np.zeros(n_sub, dtype=np.int64)
    for l, users in enumerate(graph.users_of_subcarrier):
        sub_deg[l] = len(users)
        for i, u in enumerate(users):
            sub_users[l, i] = u
            sub_slot[l, i] = graph.subcarriers_of_user[u].index(l)
    return members, sub_users, sub_slot, sub_deg, user_subs


def _const_table(constellations: list[Constellation]) -> np.ndarray:
    mp1 = constellations[0].order + 1
    table = np.zeros((len(constellations), mp1), dtype=np.complex128)
    for u, c in enumerate(constellations):
        table[u] = c.extended_points
    return table


def _decode_columns(
    Y: np.ndarray,
    graph: FactorGraph,
    constellations: list[Constellation],
    sigma: float,
    iterations: int,
):
    """Run the decode kernel for all slots; returns (members, post, hard, zeros)."""
    n_users = len(constellations)
    members, sub_users, sub_slot, sub_deg, user_subs = _graph_to_arrays(graph, n_users)
    if members and int(max(len(us) for us in graph.users_of_subcarrier)) > MAX_DECODE_DEGREE:
        raise ValueError(f"candidate degree exceeds {MAX_DECODE_DEGREE} on some sub-carrier")
    cand = np.asarray(members, dtype=np.int64)
    post, hard, zeros, err = _k.decode_kernel(
        np.ascontiguousarray(Y, dtype=np.complex128), cand,
        sub_users, sub_slot, sub_deg, user_subs,
        _const_table(constellations), float(sigma) ** 2, iterations)
    if err:
        raise ValueError(f"candidate degree exceeds {MAX_DECODE_DEGREE} on some sub-carrier")
    return members, post, hard, zeros


def mpa_decode(
    y_col: np.ndarray,
    graph: FactorGraph,
    constellations: list[Constellation],
    sigma: float,
    iterations: int = 6,
) -> dict[int, np.ndarray]:
    """Per-user symbol posteriors for one received column.

    Check nodes marginalize the Gaussian likelihood over the other
    candidates' alphabet combinations; variable nodes combine extrinsics
    under a uniform prior over the M+1 points.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    Y = np.asarray(y_col, dtype=np.complex128).reshape(-1, 1)
    members, post, _, _ = _decode_columns(Y, graph, constellations, sigma, iterations)
    return {u: post[i, 0] for i, u in enumerate(members)}


def brute_force_map(
    y_col: np.ndarray,
    graph: FactorGraph,
    constellations: list[Constellation],
    sigma: float,
) -> dict[int, np.ndarray]:
    """Exact per-user posteriors by joint enumeration (test oracle).

    Enumerates every alphabet combination of the candidate set, so the set
    is capped at 8 users.
    """
    members = sorted(graph.subcarriers_of_user)
    if len(members) > 8:
        raise ValueError("brute force enumeration capped at 8 candidate users")
    if not members:
        return {}
    y_col = np.asarray(y_col, dtype=np.complex128)
    mp1 = constellations[0].order + 1
    sigma2 = float(sigma) ** 2

    loglik = {}
    for combo in product(range(mp1), repeat=len(members)):
        total = np.zeros(len(y_col), dtype=np.complex128)
        for u, x in zip(members, combo):
            for l in graph.subcarriers_of_user[u]:
                total[l] += constellations[u].extended_points[x]
        ll = 0.0
        for l in range(len(y_col)):
            if graph.users_of_subcarrier[l]:
                ll -= abs(y_col[l] - total[l]) ** 2 / sigma2
        loglik[combo] = ll

    lls = np.array(list(loglik.values()))
    combos = np.array(list(loglik.keys()))
    w = np.exp(lls - lls.max())
    out = {}
    for i, u in enumerate(members):
        marg = np.array([w[combos[:, i] == x].sum() for x in range(mp1)])
        out[u] = marg / marg.sum()
    return out


def correct_false_alarms(packets: list[DecodedPacket], tau_zs: int) -> list[int]:
    """Users kept after the zero-symbol test: drop when zero_count >= tau_zs."""
    if tau_zs < 1:
        raise ValueError("tau_zs must be at least 1")
    return [p.user for p in packets if p.zero_count < tau_zs]


@dataclass(frozen=True)
class PipelineConfig:
    """End-to-end detection/decoding knobs.

    ``tau_zs`` defaults to ceil(K/3) at run time; the detector config
    defaults to one with the scenario sparsity as its activity prior.
    """

    sparsity: float
    sigma: float
    estimator: str = "tl-mpa"
    detector: DetectorConfig | None = None
    tau_zc: float = 0.5
    tau_zs: int | None = None
    decode_iterations: int = 6

    def resolved_detector(self) -> DetectorConfig:
        return self.detector if self.detector is not None else DetectorConfig(prior=self.sparsity)


@dataclass(frozen=True, eq=False)
class PipelineResult:
    """Superset, refined set, and decoded packets of one trial."""

    superset: SupersetEstimate
    refined: np.ndarray
    packets: dict[int, DecodedPacket]
    initial_packets: dict[int, DecodedPacket] = field(default_factory=dict)
    timing: dict[str, float] = field(default_factory=dict)


def _packets_from(members, post, hard, zeros, constellations) -> dict[int, DecodedPacket]:
    out = {}
    for i, u in enumerate(members):
        symbols = constellations[u].extended_points[hard[i]]
        out[u] = DecodedPacket(u, symbols, int(zeros[i]), post[i])
    return out


def detect_and_decode(
    frame: ReceivedFrame,
    matrix: SignatureMatrix,
    pool: PreamblePool,
    constellations: list[Constellation],
    config: PipelineConfig,
) -> PipelineResult:
    """Full two-step detection: superset, decode, prune, re-decode.

    An empty superset short-circuits to an empty result.  The refined set
    is always a subset of the superset.
    """
    det = config.resolved_detector()
    packet_len = frame.data_rx.shape[1]
    tau_zs = config.tau_zs if config.tau_zs is not None else zero_symbol_threshold(packet_len)
    timing = {}

    t0 = time.perf_counter()
    profile = correlate(frame.preamble_rx, pool, sigma=config.sigma, rice_mode=det.rice_scale)
    if config.estimator == "cover":
        superset = cover_decode(busy_test(profile, config.tau_zc), matrix)
    elif config.estimator == "mpa":
        superset = mpa_detect(profile, matrix, det)
    elif config.estimator == "tl-mpa":
        loads = estimate_loads(profile, config.tau_zc, matrix.row_weights)
        superset = tl_mpa_detect(loads, matrix, det)
    else:
        raise ValueError(f"unknown initial estimator {config.estimator!r}")
    timing["superset"] = time.perf_counter() - t0

    if len(superset.members) == 0:
        return PipelineResult(superset, np.empty(0, dtype=np.int64), {}, {}, timing)

    t0 = time.perf_counter()
    graph1 = restrict_graph(matrix, superset.members)
    members1, post1, hard1, zeros1 = _decode_columns(
        frame.data_rx, graph1, constellations, config.sigma, config.decode_iterations)
    initial_packets = _packets_from(members1, post1, hard1, zeros1, constellations)
    timing["decode_initial"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    kept = correct_false_alarms(list(initial_packets.values()), tau_zs)
    timing["correct"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    graph2 = restrict_graph(matrix, kept)
    members2, post2, hard2, zeros2 = _decode_columns(
        frame.data_rx, graph2, constellations, config.sigma, config.decode_iterations)
    packets = _packets_from(members2, post2, hard2, zeros2, constellations)
    timing["decode_refined"] = time.perf_counter() - t0

    return PipelineResult(
        superset, np.asarray(sorted(kept), dtype=np.int64), packets, initial_packets, timing)
