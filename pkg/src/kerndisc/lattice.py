"""Canonical integer lattice: coefficient profiles, enumeration, tail masses.

Periodic kernels on the unit cube are tensor products, so their Fourier
coefficient at a lattice index ``alpha`` factorizes as
``rho(alpha) = prod_d r(alpha_d)`` with a single per-dimension
coefficient function ``r`` (``r(0) = 1``, even, nonincreasing in |k| on
its nonzero support).  This module enumerates lattice indices in
nonincreasing coefficient order (best-first search over sparse index
vectors) and computes the tail mass

    tail(N) = T^D - sum of the N largest coefficients,   T = sum_k r(k),

which drives the asymptotic discrepancy estimate sqrt(tail(N) / N).
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass
from typing import Callable

__all__ = [
    "LatticeIndex",
    "LatticeTerm",
    "CoefficientProfile",
    "enumerate_decreasing",
    "partial_sum",
    "tail_mass",
    "asymptotic_discrepancy",
]


@dataclass(frozen=True)
class LatticeIndex:
    """Sparse lattice index in Z^D: only nonzero entries are stored."""

    dim: int
    entries: tuple[tuple[int, int], ...]  # sorted (dimension, value), value != 0

    @staticmethod
    def make(dim: int, entries: dict[int, int] | None = None) -> "LatticeIndex":
        entries = entries or {}
        items = []
        for d, v in sorted(entries.items()):
            if not 0 <= d < dim:
                raise ValueError(f"dimension index {d} out of range for dim={dim}")
            v = int(v)
            if v == 0:
                continue
            items.append((int(d), v))
        return LatticeIndex(dim, tuple(items))

    @property
    def is_zero(self) -> bool:
        return not self.entries

    def value(self, d: int) -> int:
        for dd, v in self.entries:
            if dd == d:
                return v
        return 0

    def dense(self) -> tuple[int, ...]:
        out = [0] * self.dim
        for d, v in self.entries:
            out[d] = v
        return tuple(out)

    def negated(self) -> "LatticeIndex":
        return LatticeIndex(self.dim, tuple((d, -v) for d, v in self.entries))


@dataclass(frozen=True)
class LatticeTerm:
    """A lattice index together with its Fourier coefficient rho(alpha)."""

    index: LatticeIndex
    coefficient: float

    def __post_init__(self):
        if self.coefficient < 0:
            raise ValueError("coefficient must be nonnegative")


@dataclass(frozen=True)
class CoefficientProfile:
    """Per-dimension coefficient function r with its closed-form total T.

    ``r(k)`` must satisfy r(0)=1, r(-k)=r(k), 0 <= r <= 1, and be
    nonincreasing in |k| on its nonzero support (zeros are allowed and
    are skipped by the enumeration).  A profile whose nonzero values are
    *not* monotone (the truncated kernel's sinc^2 profile oscillates
    under its decaying envelope once D >= 3) must supply ``envelope``, a
    nonincreasing upper bound for r, so the enumeration can still rank
    magnitudes by value.  ``per_dim_total`` is T = sum_{k in Z} r(k),
    supplied in closed form per kernel so tail masses carry no
    truncation error.
    """

    dim: int
    r: Callable[[int], float]
    per_dim_total: float
    name: str = "profile"
    envelope: Callable[[int], float] | None = None

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if not (self.per_dim_total >= 1.0 and math.isfinite(self.per_dim_total)):
            raise ValueError("per-dimension total must be finite and >= 1")

    def validate(self, probe: int = 32) -> None:
        """Check r(0)=1, symmetry, range, and monotonicity on a probe range."""
        if self.r(0) != 1.0:
            raise ValueError(f"r(0) = {self.r(0)!r}, expected exactly 1")
        vals = [self.r(k) for k in range(probe + 1)]
        for k in range(1, probe + 1):
            if self.r(-k) != vals[k]:
                raise ValueError(f"r is not symmetric at k={k}")
            if not 0.0 <= vals[k] <= 1.0:
                raise ValueError(f"r({k}) = {vals[k]!r} outside [0, 1]")
        if self.envelope is None:
            nonzero = [v for v in vals if v > 0.0]
            if any(a < b for a, b in zip(nonzero, nonzero[1:])):
                raise ValueError("r is increasing somewhere on its nonzero support; "
                                 "supply a monotone envelope to enumerate it")
        else:
            env = [self.envelope(k) for k in range(1, probe + 1)]
            if any(e + 1e-15 < v for e, v in zip(env, vals[1:])):
                raise ValueError("envelope does not dominate r")
            if any(a < b for a, b in zip(env, env[1:])):
                raise ValueError("envelope is not nonincreasing")

    def total(self) -> float:
        """T^D, the sum of rho over the whole lattice."""
        return self.per_dim_total ** self.dim

    def coefficient(self, index: LatticeIndex) -> float:
        out = 1.0
        for _, v in index.entries:
            out *= self.r(v)
        return out


def _tie_key(entries: tuple[tuple[int, int], ...]) -> tuple:
    # deterministic tie order: fewer nonzero entries first, then the
    # lexicographic order of (dimension, value) pairs
    return (len(entries), entries)


def enumerate_decreasing(profile: CoefficientProfile, count: int) -> list[LatticeTerm]:
    """The ``count`` largest-coefficient lattice indices, nonincreasing.

    Best-first search over sparse magnitude-rank vectors, with per
    dimension magnitudes ranked by decreasing r value: coefficients
    factorize and are coordinatewise nonincreasing in rank, so expanding
    one coordinate's rank at a time from the zero index visits indices in
    globally nonincreasing order.  Each unsigned rank vector expands to
    all of its sign choices (equal coefficients); ties are emitted by
    (number of nonzero entries, lexicographic (dimension, value) pairs).
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    profile.validate()
    dim = profile.dim

    # mags[j], weights[j]: magnitude and r-value of per-dimension rank j,
    # ranked by decreasing r (rank 0 is the zero entry).  Zero
    # coefficients are skipped.  With a non-monotone r the next-largest
    # magnitude is found by scanning until the monotone envelope drops
    # below the best pending candidate.
    env = profile.envelope or profile.r
    mags = [0]
    weights = [1.0]
    pending: list[tuple[float, int]] = []  # (-r(k), k) heap of scanned, unranked k
    scan = [1]

    def ensure_rank(j: int) -> None:
        while len(mags) <= j:
            if weights[-1] == 0.0:
                # the nonzero support is exhausted (possibly by underflow);
                # extend deterministically with zero-coefficient magnitudes
                mags.append(mags[-1] + 1)
                weights.append(0.0)
                continue
            exhausted = False
            while not pending or env(scan[0]) > -pending[0][0]:
                k = scan[0]
                if k > 10**7:
                    raise ValueError("profile envelope does not decay; cannot rank magnitudes")
                if profile.r(k) > 0.0:
                    heapq.heappush(pending, (-profile.r(k), k))
                elif not pending and k > 64 * (mags[-1] + 64):
                    exhausted = True
                    break
                scan[0] += 1
            if exhausted:
                mags.append(mags[-1] + 1)
                weights.append(0.0)
            else:
                negw, k = heapq.heappop(pending)
                mags.append(k)
                weights.append(-negw)

    def coeff_of(ranks: tuple[tuple[int, int], ...]) -> float:
        c = 1.0
        for _, j in ranks:
            c *= weights[j]
        return c

    ensure_rank(1)
    out: list[LatticeTerm] = []
    # heap entries: (-coeff, tie_key(rank vector), ranks)
    start: tuple[tuple[int, int], ...] = ()
    heap = [(-1.0, _tie_key(start), start)]
    seen = {start}

    def push_neighbors(ranks: tuple[tuple[int, int], ...]) -> None:
        rank_map = dict(ranks)
        for d in range(dim):
            j = rank_map.get(d, 0)
            ensure_rank(j + 1)
            nxt = dict(rank_map)
            nxt[d] = j + 1
            key = tuple(sorted(nxt.items()))
            if key not in seen:
                seen.add(key)
                heapq.heappush(heap, (-coeff_of(key), _tie_key(key), key))

    while heap and len(out) < count:
        negc, tie, ranks = heapq.heappop(heap)
        coeff = -negc
        # drain the whole (coefficient, nonzero-count) tie group so the
        # signed indices can be emitted in global (nnz, lex) order; the
        # zero-coefficient tail can tie without bound, so it is drained
        # only as far as the remaining output requires
        group = [ranks]
        expansions = 2 ** len(ranks)
        push_neighbors(ranks)
        while heap and heap[0][0] == negc and heap[0][1][0] == tie[0]:
            if coeff == 0.0 and expansions >= count - len(out):
                break
            _, _, more = heapq.heappop(heap)
            group.append(more)
            expansions += 2 ** len(more)
            push_neighbors(more)
        signed: list[tuple[tuple[int, int], ...]] = []
        for member in group:
            choices = [[(d, -mags[j]), (d, mags[j])] for d, j in member]
            signed.extend(tuple(combo) for combo in itertools.product(*choices))
        signed.sort()
        for entries in signed:
            if len(out) >= count:
                break
            out.append(LatticeTerm(LatticeIndex(dim, entries), coeff))
    if len(out) < count:
        raise ValueError("profile exhausted before reaching requested count")
    return out


def partial_sum(profile: CoefficientProfile, count: int) -> float:
    """Sum of the ``count`` largest coefficients."""
    return math.fsum(t.coefficient for t in enumerate_decreasing(profile, count))


def tail_mass(profile: CoefficientProfile, n_points: int) -> float:
    """T^D minus the top ``n_points`` coefficients (clamped at 0)."""
    if n_points < 1:
        raise ValueError("n_points must be >= 1")
    return max(profile.total() - partial_sum(profile, n_points), 0.0)


def asymptotic_discrepancy(profile: CoefficientProfile, n_points: int) -> float:
    """sqrt(tail_mass(N) / N): the tabulated asymptotic error estimate."""
    return math.sqrt(tail_mass(profile, n_points) / n_points)
