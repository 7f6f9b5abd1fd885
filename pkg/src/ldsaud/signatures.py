"""Low-density signature matrices, their factor graphs, and user constellations.

The signature matrix is a binary ``L_s x N`` matrix whose columns tell which
sub-carriers each user occupies.  Columns all have weight ``w_c``; rows are
kept as balanced as the edge count allows (weights differ by at most one).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

__all__ = [
    "SignatureMatrix",
    "FactorGraph",
    "Constellation",
    "build_signature_matrix",
    "matrix_4x6",
    "restrict_graph",
    "build_constellation",
    "count_four_cycles",
    "save_matrix",
    "load_matrix",
]


@dataclass(frozen=True, eq=False)
class SignatureMatrix:
    """Binary spreading matrix plus cached degree information.

    Attributes
    ----------
    entries : ndarray of uint8, shape (n_subcarriers, n_users)
    col_weight : int
        Number of sub-carriers every user occupies.
    row_weights : ndarray of int
        Number of users on each sub-carrier.
    """

    entries: np.ndarray
    n_subcarriers: int
    n_users: int
    col_weight: int
    row_weights: np.ndarray = field(init=False)

    def __post_init__(self):
        entries = np.ascontiguousarray(self.entries, dtype=np.uint8)
        if entries.shape != (self.n_subcarriers, self.n_users):
            raise ValueError("entries shape does not match declared dimensions")
        if not np.isin(entries, (0, 1)).all():
            raise ValueError("entries must be 0/1")
        col_sums = entries.sum(axis=0)
        if not (col_sums == self.col_weight).all():
            raise ValueError("every column must have weight col_weight")
        row_sums = entries.sum(axis=1)
        if row_sums.max() - row_sums.min() > 1:
            raise ValueError("row weights must differ by at most one")
        if self.n_users > 1:
            cols = {tuple(entries[:, u]) for u in range(self.n_users)}
            if len(cols) != self.n_users:
                raise ValueError("columns must be pairwise distinct")
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "row_weights", entries.sum(axis=1).astype(np.int64))

    def users_of(self, subcarrier: int) -> np.ndarray:
        return np.flatnonzero(self.entries[subcarrier])

    def subcarriers_of(self, user: int) -> np.ndarray:
        return np.flatnonzero(self.entries[:, user])


@dataclass(frozen=True, eq=False)
class FactorGraph:
    """Bipartite adjacency between sub-carriers (checks) and users (variables).

    ``restricted_to`` records the user subset the graph was built from; the
    adjacency lists only ever contain users from that subset.
    """

    users_of_subcarrier: tuple
    subcarriers_of_user: dict
    restricted_to: frozenset | None = None

    @property
    def n_edges(self) -> int:
        return sum(len(us) for us in self.users_of_subcarrier)


@dataclass(frozen=True, eq=False)
class Constellation:
    """Per-user transmit alphabet: a rotated M-PSK set plus the zero symbol."""

    user_index: int
    order: int
    points: np.ndarray
    extended_points: np.ndarray


def count_four_cycles(entries: np.ndarray) -> int:
    """Number of column pairs sharing at least two sub-carriers."""
    gram = entries.astype(np.int64).T @ entries.astype(np.int64)
    np.fill_diagonal(gram, 0)
    return int((gram >= 2).sum() // 2)


def _greedy_supports(n_subcarriers, n_users, col_weight, rng):
    """One randomized attempt at a balanced, cycle-avoiding column set."""
    n_edges = n_users * col_weight
    base = n_edges // n_subcarriers
    extra = n_edges % n_subcarriers
    capacity = np.full(n_subcarriers, base, dtype=np.int64)
    if extra:
        capacity[rng.permutation(n_subcarriers)[:extra]] += 1

    used = set()
    pair_count = np.zeros((n_subcarriers, n_subcarriers), dtype=np.int64)
    supports = []
    for _ in range(n_users):
        eligible = np.flatnonzero(capacity > 0)
        if len(eligible) < col_weight:
            return None
        best = None
        best_key = None
        tie = rng.random(math.comb(len(eligible), col_weight))
        for idx, supp in enumerate(combinations(eligible.tolist(), col_weight)):
            if supp in used:
                continue
            cycles = sum(pair_count[i, j] for i, j in combinations(supp, 2))
            cap = sum(capacity[i] for i in supp)
            key = (cycles, -cap, tie[idx])
            if best_key is None or key < best_key:
                best_key = key
                best = supp
        if best is None:
            return None
        used.add(best)
        supports.append(best)
        for i in best:
            capacity[i] -= 1
        for i, j in combinations(best, 2):
            pair_count[i, j] += 1
            pair_count[j, i] += 1
    return supports


def build_signature_matrix(
    n_subcarriers: int, n_users: int, col_weight: int, rng_seed: int = 0
) -> SignatureMatrix:
    """Construct a column-regular, row-balanced signature matrix.

    Columns are distinct ``col_weight``-subsets of sub-carriers chosen
    greedily to keep row weights within one of each other and to minimize
    the number of column pairs sharing two or more sub-carriers (length-4
    cycles of the factor graph).  Deterministic for a given ``rng_seed``.
    """
    if col_weight < 1 or col_weight > n_subcarriers:
        raise ValueError(f"col_weight must be in [1, {n_subcarriers}], got {col_weight}")
    max_cols = math.comb(n_subcarriers, col_weight)
    if n_users > max_cols:
        raise ValueError(
            f"cannot place {n_users} distinct weight-{col_weight} columns "
            f"on {n_subcarriers} sub-carriers (max {max_cols})"
        )
    if n_users < 1:
        raise ValueError("n_users must be positive")

    supports = None
    for attempt in range(50):
        rng = np.random.default_rng([rng_seed, attempt])
        supports = _greedy_supports(n_subcarriers, n_users, col_weight, rng)
        if supports is not None:
            break
    if supports is None:
        raise RuntimeError("balanced construction failed; parameters too tight")

    entries = np.zeros((n_subcarriers, n_users), dtype=np.uint8)
    for u, supp in enumerate(supports):
        entries[list(supp), u] = 1
    return SignatureMatrix(entries, n_subcarriers, n_users, col_weight)


def matrix_4x6() -> SignatureMatrix:
    """The toy 4x6 matrix pairing every two of four sub-carriers.

    Shipped as a fixture: small enough for exhaustive oracle checks, dense
    enough to exercise every collision pattern.
    """
    entries = np.array(
        [
            [1, 1, 1, 0, 0, 0],
            [1, 0, 0, 1, 1, 0],
            [0, 1, 0, 1, 0, 1],
            [0, 0, 1, 0, 1, 1],
        ],
        dtype=np.uint8,
    )
    return SignatureMatrix(entries, 4, 6, 2)


def restrict_graph(matrix: SignatureMatrix, subset) -> FactorGraph:
    """Factor graph of ``matrix`` restricted to a user subset.

    Sub-carriers with no remaining users keep an empty adjacency list;
    restriction never adds edges.
    """
    subset = frozenset(int(u) for u in subset)
    for u in subset:
        if not 0 <= u < matrix.n_users:
            raise ValueError(f"user {u} outside [0, {matrix.n_users})")
    members = sorted(subset)
    users_of = tuple(
        tuple(u for u in members if matrix.entries[l, u])
        for l in range(matrix.n_subcarriers)
    )
    subs_of = {u: tuple(int(l) for l in matrix.subcarriers_of(u)) for u in members}
    return FactorGraph(users_of, subs_of, subset)


def build_constellation(user: int, order: int, n_users: int) -> Constellation:
    """Rotated M-PSK alphabet for one user (0-based index).

    Each user's PSK set is rotated by ``pi * user / (n_users * order)`` so
    that no two users share a nonzero point; the extended alphabet appends
    the zero symbol used for activity detection.
    """
    if order < 2:
        raise ValueError("constellation order must be at least 2")
    if not 0 <= user < n_users:
        raise ValueError(f"user {user} outside [0, {n_users})")
    phase = np.pi * user / (n_users * order)
    points = np.exp(1j * (phase + 2.0 * np.pi * np.arange(order) / order))
    extended = np.concatenate([points, [0.0 + 0.0j]])
    return Constellation(user, order, points, extended)


def save_matrix(matrix: SignatureMatrix, path) -> None:
    """Write the plain-text form: header ``L_s N`` then 0/1 rows."""
    with open(path, "w") as fh:
        fh.write(f"{matrix.n_subcarriers} {matrix.n_users}\n")
        for row in matrix.entries:
            fh.write(" ".join(str(int(v)) for v in row) + "\n")


def load_matrix(path) -> SignatureMatrix:
    """Read a matrix written by :func:`save_matrix`."""
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError("first line must be 'L_s N'")
        n_sub, n_users = int(header[0]), int(header[1])
        entries = np.loadtxt(fh, dtype=np.uint8, ndmin=2)
    if entries.shape != (n_sub, n_users):
        raise ValueError("matrix body does not match declared dimensions")
    col_weight = int(entries[:, 0].sum())
    return SignatureMatrix(entries, n_sub, n_users, col_weight)
