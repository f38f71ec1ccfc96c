"""Short-term fairness metrics over channel traces.

The central quantity is the per-user cycle time: the span between two refresh
moments of a user such that every other user completed at least one successful
transmission strictly inside the span.  Averaging per-user mean cycle times
over the user set gives the channel cycle time, a single figure for how long
the channel takes to serve everybody once more.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    SUCCESS_CODE,
    ChannelTrace,
    TraceError,
)


class TooFewUsersError(TraceError):
    """The metric needs more users than the trace provides."""


def _success_seq(trace: ChannelTrace) -> tuple[np.ndarray, np.ndarray]:
    """End times and user indices of all Success events, in trace order."""
    hit = trace.kinds == SUCCESS_CODE
    ends = trace.ends[hit]
    masks = trace.masks[hit]
    # Success masks are single-bit, so log2 recovers the user index exactly.
    uidx = np.log2(masks.astype(np.float64)).astype(np.int64)
    return ends, uidx


def refresh_moments(trace: ChannelTrace, user: str) -> np.ndarray:
    """End times of the user's successes whose next success belongs to someone else.

    A success followed by another success of the same user is not a refresh
    moment, and neither is the final success of the trace (it has no successor
    to hand the channel to).
    """
    i = trace.user_index(user)
    ends, uidx = _success_seq(trace)
    if len(ends) < 2:
        return np.empty(0, np.int64)
    hit = (uidx[:-1] == i) & (uidx[1:] != i)
    return ends[:-1][hit]


def cycle_intervals(trace: ChannelTrace, user: str) -> np.ndarray:
    """(start, end) refresh-moment pairs delimiting the user's cycles, shape (k, 2).

    For each refresh moment t0 of the user, the cycle closes at the earliest
    later refresh moment t1 such that every other user ends at least one
    Success strictly inside (t0, t1).  With two users that is always the very
    next refresh moment; with more users intermediate refresh moments may be
    skipped until all others have appeared.
    """
    i = trace.user_index(user)
    ends, uidx = _success_seq(trace)
    n = len(trace.users)
    if len(ends) < 2:
        return np.empty((0, 2), np.int64)
    pos = np.flatnonzero((uidx[:-1] == i) & (uidx[1:] != i))
    if len(pos) < 2:
        return np.empty((0, 2), np.int64)
    if n == 2:
        # The success right after a refresh moment is the other user's, so
        # every consecutive refresh pair qualifies and none can be skipped.
        t = ends[pos]
        return np.column_stack([t[:-1], t[1:]])
    return _covered_intervals(ends, uidx, pos, i, n)


def _covered_intervals(ends: np.ndarray, uidx: np.ndarray, pos: np.ndarray,
                       user: int, n_users: int) -> np.ndarray:
    """Sliding-window search for the earliest covering refresh moment (N > 2)."""
    need = n_users - 1
    count = np.zeros(n_users, np.int64)
    covered = 0
    total = len(ends)
    lo = int(pos[0]) + 1   # window over success positions [lo, q]
    q = int(pos[0])
    out = []
    for g in pos.tolist():
        while lo <= g:
            if lo <= q:
                u = int(uidx[lo])
                if u != user:
                    count[u] -= 1
                    if count[u] == 0:
                        covered -= 1
            lo += 1
        if q < g:
            q = g
        while covered < need and q + 1 < total:
            q += 1
            u = int(uidx[q])
            if u != user and count[u] == 0:
                covered += 1
            if u != user:
                count[u] += 1
        if covered < need:
            break  # the tail lacks some user entirely; later windows only shrink
        hi = int(np.searchsorted(pos, q, side="right"))
        if hi == len(pos):
            break
        out.append((int(ends[g]), int(ends[pos[hi]])))
    if not out:
        return np.empty((0, 2), np.int64)
    return np.asarray(out, np.int64)


def cycle_times(trace: ChannelTrace, user: str) -> np.ndarray:
    """Durations of the user's cycles, in slots."""
    iv = cycle_intervals(trace, user)
    return iv[:, 1] - iv[:, 0]


@dataclass(frozen=True)
class CycleTimeReport:
    """Per-user cycle samples plus the channel-wide average.

    psi_slots is the mean of per-user mean cycle times; it is None (and
    psi_undefined True) whenever some user contributed no cycle at all.
    """

    users: tuple[str, ...]
    per_user_samples: dict[str, np.ndarray]
    psi_slots: float | None
    psi_undefined: bool
    users_without_samples: tuple[str, ...]

    def per_user_mean(self) -> dict[str, float]:
        return {u: float(s.mean()) for u, s in self.per_user_samples.items()
                if len(s)}

    def as_dict(self) -> dict:
        return {
            "psi_slots": self.psi_slots,
            "psi_undefined": self.psi_undefined,
            "users": [
                {"user": u,
                 "cycle_samples": self.per_user_samples[u].tolist(),
                 "mean_slots": (float(self.per_user_samples[u].mean())
                                if len(self.per_user_samples[u]) else None)}
                for u in self.users
            ],
        }

    def to_text(self) -> str:
        lines = []
        psi = "nan" if self.psi_slots is None else f"{self.psi_slots:.6f}"
        lines.append(f"psi_slots={psi}")
        lines.append(f"psi_undefined={'true' if self.psi_undefined else 'false'}")
        for u in self.users:
            samples = ",".join(str(int(x)) for x in self.per_user_samples[u])
            lines.append(f"user={u} cycle_samples={samples}")
        return "\n".join(lines) + "\n"


def channel_cycle_time(trace: ChannelTrace) -> CycleTimeReport:
    """Average the per-user mean cycle times into one channel-wide figure."""
    if len(trace.users) < 2:
        raise TooFewUsersError("channel cycle time needs at least two users")
    samples = {u: cycle_times(trace, u) for u in trace.users}
    missing = tuple(u for u in trace.users if len(samples[u]) == 0)
    if missing:
        return CycleTimeReport(trace.users, samples, None, True, missing)
    psi = float(np.mean([samples[u].mean() for u in trace.users]))
    return CycleTimeReport(trace.users, samples, psi, False, ())


def inter_transmissions(trace: ChannelTrace, user: str) -> np.ndarray:
    """Counts of other users' successes between the user's consecutive successes."""
    i = trace.user_index(user)
    _, uidx = _success_seq(trace)
    mine = np.flatnonzero(uidx == i)
    if len(mine) < 2:
        return np.empty(0, np.int64)
    return np.diff(mine) - 1


@dataclass(frozen=True)
class InterTxReport:
    """Pooled distribution of the per-gap counts of interleaving successes."""

    users: tuple[str, ...]
    per_user_counts: dict[str, np.ndarray]
    pooled_pmf: dict[int, float]
    mean: float | None

    def as_dict(self) -> dict:
        return {
            "intertx_pmf": {str(k): v for k, v in self.pooled_pmf.items()},
            "intertx_mean": self.mean,
            "users": [{"user": u, "counts": self.per_user_counts[u].tolist()}
                      for u in self.users],
        }

    def to_text(self) -> str:
        pmf = ",".join(f"{k}:{v:.6f}" for k, v in sorted(self.pooled_pmf.items()))
        mean = "nan" if self.mean is None else f"{self.mean:.6f}"
        return f"intertx_pmf={pmf}\nintertx_mean={mean}\n"


def inter_transmission_report(trace: ChannelTrace) -> InterTxReport:
    """Pool every user's inter-transmission counts into one empirical pmf."""
    if len(trace.users) < 2:
        raise TooFewUsersError("inter-transmission counts need at least two users")
    counts = {u: inter_transmissions(trace, u) for u in trace.users}
    pooled = np.concatenate([counts[u] for u in trace.users]) if counts \
        else np.empty(0, np.int64)
    if len(pooled) == 0:
        return InterTxReport(trace.users, counts, {}, None)
    freq = np.bincount(pooled)
    total = len(pooled)
    pmf = {int(k): float(c) / total for k, c in enumerate(freq) if c}
    return InterTxReport(trace.users, counts, pmf, float(pooled.mean()))


@dataclass(frozen=True)
class PartSplit:
    """One cycle of a two-user trace, split at the end of the owner's first success.

    n_b counts the other user's successes before the split, n_a_prime the
    owner's further successes after it; t_part1 + t_part2 is the cycle time.
    """

    n_b: int
    n_a_prime: int
    t_part1: int
    t_part2: int


def part_decomposition(trace: ChannelTrace, user: str) -> list[PartSplit]:
    """Split each of the user's cycles at the end of their first success inside it."""
    if len(trace.users) != 2:
        raise TooFewUsersError("the two-part split is defined for two-user traces")
    i = trace.user_index(user)
    ends, uidx = _success_seq(trace)
    own = ends[uidx == i]
    other = ends[uidx != i]
    iv = cycle_intervals(trace, user)
    if len(iv) == 0:
        return []
    t0, t1 = iv[:, 0], iv[:, 1]
    first_idx = np.searchsorted(own, t0, side="right")
    first_end = own[first_idx]
    n_own = np.searchsorted(own, t1, side="right") - first_idx
    n_a_prime = n_own - 1
    n_b = (np.searchsorted(other, first_end, side="left")
           - np.searchsorted(other, t0, side="right"))
    part1 = first_end - t0
    part2 = t1 - first_end
    return [PartSplit(int(b), int(a), int(p1), int(p2))
            for b, a, p1, p2 in zip(n_b, n_a_prime, part1, part2)]


def throughput(trace: ChannelTrace) -> float:
    """Fraction of the horizon spent in successful transmissions."""
    if trace.horizon <= 0:
        raise TraceError("throughput needs a positive horizon")
    hit = trace.kinds == SUCCESS_CODE
    busy = int((trace.ends[hit] - trace.starts[hit]).sum())
    return busy / trace.horizon
