"""Closed-form channel cycle time predictions for slotted Aloha and CSMA/CA.

Everything here works in slot units and returns plain floats; the simulators
in `sim` provide the empirical counterparts.  The CSMA/CA forms are built from
three ingredients: the collision probability fixed point, the expected total
backoff spent per delivered packet, and the two-part cycle decomposition
(other user's turn, then the owner's run of extra successes).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .core import AlohaParams, CsmaMode, CsmaParams


class AnalyticError(ValueError):
    """A closed form was evaluated outside its domain."""


class DegenerateError(AnalyticError):
    """Parameters make the quantity undefined (e.g. no successes possible)."""


class DomainError(AnalyticError):
    """An argument lies outside the formula's validity range."""


class NoRootError(AnalyticError):
    """The fixed-point equation has no root in the open interval (0, 1/2)."""


class EmptyError(AnalyticError):
    """An aggregate over users was given no users."""


class CctMode(Enum):
    ALOHA_SLOTTED = "aloha-slotted"
    CSMA_RTS_CTS = "csma-rtscts"
    CSMA_BASIC = "csma-basic"
    TDMA_ROUND_ROBIN = "tdma"


@dataclass(frozen=True)
class CctComponents:
    """Intermediate quantities behind a cycle-time prediction (None when unused)."""

    part1_mean: float | None = None
    part2_mean: float | None = None
    mu: float | None = None
    p_c: float | None = None
    p_ni0: float | None = None
    e_ni: float | None = None


@dataclass(frozen=True)
class AnalyticCct:
    """A channel cycle time prediction and the pieces it was assembled from."""

    psi_slots: float
    mode: CctMode
    components: CctComponents

    def __post_init__(self):
        if not self.psi_slots > 0:
            raise AnalyticError("cycle time must be positive")


# -- slotted Aloha -----------------------------------------------------------

def aloha_success_split(p_a: float, p_b: float) -> tuple[float, float]:
    """Probability that a successful slot belongs to user A (resp. B).

    Conditioning on the slot being a success: A transmits alone with weight
    (1-p_b)p_a, B with (1-p_a)p_b; the two weights are renormalised.
    """
    _check_prob("p_a", p_a)
    _check_prob("p_b", p_b)
    denom = (1.0 - p_b) * p_a + (1.0 - p_a) * p_b
    if denom == 0.0:
        raise DegenerateError("no single-transmitter slot is possible")
    return ((1.0 - p_b) * p_a / denom, (1.0 - p_a) * p_b / denom)


def aloha_mean_success_time(params: AlohaParams) -> float:
    """Mean waiting time for the next successful slot, in ticks.

    Successes arrive per slot with probability (1-p_a)p_b + (1-p_b)p_a, so the
    wait is geometric with that parameter, scaled by the slot length.
    """
    denom = ((1.0 - params.p_a) * params.p_b + (1.0 - params.p_b) * params.p_a)
    if denom == 0.0:
        raise DegenerateError("no single-transmitter slot is possible")
    return params.slot / denom


def aloha_cct(params: AlohaParams) -> AnalyticCct:
    """Channel cycle time of two-user slotted Aloha, in ticks.

    psi = [(1-p_a)p_b + (1-p_b)p_a] / [(1-p_a)(1-p_b) p_a p_b] * slot.
    Undefined when either probability is 0 or 1: one user then never succeeds
    (or never yields), so no finite cycle exists.
    """
    p_a, p_b = params.p_a, params.p_b
    if p_a in (0.0, 1.0) or p_b in (0.0, 1.0):
        raise DegenerateError("cycle time needs both probabilities inside (0, 1)")
    num = (1.0 - p_a) * p_b + (1.0 - p_b) * p_a
    den = (1.0 - p_a) * (1.0 - p_b) * p_a * p_b
    psi = num / den * params.slot
    return AnalyticCct(psi, CctMode.ALOHA_SLOTTED, CctComponents())


def aloha_optimum(slot: int = 1) -> tuple[float, float, float]:
    """Fairness-optimal transmit probabilities and the cycle time they achieve.

    The symmetric point (1/2, 1/2) minimises the cycle time and yields
    psi = 8 * slot; the offered load p_a + p_b equals one there.
    """
    p_a = p_b = 0.5
    psi = aloha_cct(AlohaParams(p_a, p_b, slot)).psi_slots
    assert p_a + p_b == 1.0
    return p_a, p_b, psi


def _check_prob(name: str, p: float) -> None:
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"{name}={p} outside [0, 1]")


# -- CSMA/CA -----------------------------------------------------------------

@dataclass(frozen=True)
class CollisionFixedPoint:
    """Root of the contention fixed point, with solver diagnostics."""

    p_c: float
    residual: float
    iterations: int


def _fixed_point_rhs(p: float, cw_min: int, beta: int) -> float:
    denom = ((1.0 - 2.0 * p) * (cw_min + 3.0)
             + p * cw_min * (1.0 - (2.0 * p) ** beta))
    return 2.0 * (1.0 - 2.0 * p) / denom


def solve_collision_probability(cw_min: int, beta: int) -> CollisionFixedPoint:
    """Solve p = 2(1-2p) / [(1-2p)(cw_min+3) + p cw_min (1-(2p)^beta)] on (0, 1/2).

    The difference f(p) = p - rhs(p) is negative at 0+ and positive at 1/2-,
    and the root is unique, so plain bisection suffices.  With beta = 0 the
    equation collapses to p = 2 / (cw_min + 3).
    """
    if cw_min < 1:
        raise DomainError("cw_min must be at least 1")
    if beta < 0:
        raise DomainError("beta must be non-negative")

    def f(p: float) -> float:
        return p - _fixed_point_rhs(p, cw_min, beta)

    lo, hi = 1e-9, 0.5 - 1e-9
    if not (f(lo) < 0.0 < f(hi)):
        # cw_min=1, beta=0 pins the root to the boundary p=1/2: two stations
        # that always pick a one-slot backoff collide forever.
        raise NoRootError(
            f"no interior root for cw_min={cw_min}, beta={beta}")
    iterations = 0
    while hi - lo > 1e-15:
        iterations += 1
        mid = 0.5 * (lo + hi)
        if f(mid) < 0.0:
            lo = mid
        else:
            hi = mid
        if iterations >= 200:
            break
    p = 0.5 * (lo + hi)
    return CollisionFixedPoint(p, abs(f(p)), iterations)


def expected_backoff_sum(p_c: float, cw_min: int, beta: int) -> float:
    """Expected total backoff drawn while delivering one packet.

    Each collision escalates the window (doubling up to stage beta), each
    attempt draws uniformly from {1..cw}, and the number of collisions is
    geometric with parameter 1 - p_c:

        mu = sum_{i=0}^{beta-1} p_c^i (1 + 2^i cw_min)/2
             + p_c^beta / (1 - p_c) * (1 + 2^beta cw_min)/2.
    """
    if not 0.0 <= p_c < 1.0:
        raise DomainError(f"p_c={p_c} outside [0, 1)")
    if cw_min < 1:
        raise DomainError("cw_min must be at least 1")
    if beta < 0:
        raise DomainError("beta must be non-negative")
    total = 0.0
    for i in range(beta):
        total += p_c ** i * (1.0 + (1 << i) * cw_min) / 2.0
    total += p_c ** beta / (1.0 - p_c) * (1.0 + (1 << beta) * cw_min) / 2.0
    return total


def part_count_means(p_ni0: float, e_ni: float = 1.0) -> tuple[float, float]:
    """Expected counts behind the two cycle parts.

    Returns (E[n_b], E[n_a']): the other user's successes before the owner's
    first success, and the owner's extra successes after it.  p_ni0 is the
    probability that a success is followed immediately by another success of
    the same user; runs of extra successes are geometric in it.
    """
    if not 0.0 <= p_ni0 < 1.0:
        raise DomainError(f"p_ni0={p_ni0} outside [0, 1)")
    if e_ni < 0.0:
        raise DomainError("e_ni must be non-negative")
    return e_ni / (1.0 - p_ni0), p_ni0 / (1.0 - p_ni0)


def csma_cct(params: CsmaParams, p_ni0: float = 0.32, e_ni: float = 1.0,
             mode: CsmaMode = CsmaMode.RTS_CTS,
             p_c: float | None = None) -> AnalyticCct:
    """Channel cycle time of two-user CSMA/CA, in slots.

    RTS/CTS mode:
        psi = [ (l_difs + l_nav) E[N_I] + l_tran
                + (l_difs + l_rcts)/(1 - p_c) + mu ] / (1 - p_ni0)
    Basic mode:
        psi = [ (l_difs + l_tran - 1) E[N_I]
                + (l_difs + l_tran)/(1 - p_c) + mu ] / (1 - p_ni0)

    p_c defaults to the contention fixed point for the given window; pass an
    empirical value to evaluate the form against a measured run.  p_ni0 and
    e_ni describe the interleaving of the two users' successes; the defaults
    are the values observed under symmetric saturation.
    """
    if not 0.0 < p_ni0 < 1.0:
        raise DomainError(f"p_ni0={p_ni0} outside (0, 1)")
    if e_ni <= 0.0:
        raise DomainError("e_ni must be positive")
    if p_c is None:
        p_c = solve_collision_probability(params.cw_min, params.beta).p_c
    elif not 0.0 <= p_c < 1.0:
        raise DomainError(f"p_c={p_c} outside [0, 1)")
    mu = expected_backoff_sum(p_c, params.cw_min, params.beta)
    retry = 1.0 / (1.0 - p_c)
    e_nb, e_na = part_count_means(p_ni0, e_ni)
    if mode is CsmaMode.RTS_CTS:
        attempt = (params.l_difs + params.l_rcts) * retry + mu
        part1 = (params.l_difs + params.l_nav) * e_nb + params.l_tran + attempt
        part2 = e_na * (attempt + params.l_tran)
        psi = ((params.l_difs + params.l_nav) * e_ni + params.l_tran
               + (params.l_difs + params.l_rcts) * retry + mu) / (1.0 - p_ni0)
        cct_mode = CctMode.CSMA_RTS_CTS
    elif mode is CsmaMode.BASIC:
        attempt = (params.l_difs + params.l_tran) * retry + mu
        part1 = (params.l_difs + params.l_tran - 1) * e_nb + attempt
        part2 = e_na * attempt
        psi = ((params.l_difs + params.l_tran - 1) * e_ni
               + (params.l_difs + params.l_tran) * retry + mu) / (1.0 - p_ni0)
        cct_mode = CctMode.CSMA_BASIC
    else:
        raise DomainError(f"unsupported CSMA mode {mode!r}")
    comps = CctComponents(part1_mean=part1, part2_mean=part2, mu=mu,
                          p_c=p_c, p_ni0=p_ni0, e_ni=e_ni)
    return AnalyticCct(psi, cct_mode, comps)


def csma_cct_fixed_window(params: CsmaParams, p_ni0: float = 0.32) -> float:
    """RTS/CTS cycle time for a non-escalating window (beta = 0), in slots.

    With a fixed window CW the fixed point is p_c = 2/(CW+3) and the general
    form collapses to

        psi = [ 2(l_difs + l_rcts)/(CW + 1) + (CW + 1)/2 + C ] / (1 - p_ni0),
        C = 2 l_difs + l_nav + l_rcts + l_tran + 1.
    """
    if params.beta != 0:
        raise DomainError("fixed-window form requires beta = 0")
    if not 0.0 < p_ni0 < 1.0:
        raise DomainError(f"p_ni0={p_ni0} outside (0, 1)")
    cw = params.cw_min
    const = (2 * params.l_difs + params.l_nav + params.l_rcts
             + params.l_tran + 1)
    core = (2.0 * (params.l_difs + params.l_rcts) / (cw + 1.0)
            + (cw + 1.0) / 2.0 + const)
    return core / (1.0 - p_ni0)


@dataclass(frozen=True)
class CwOptimum:
    """Stationary point of the fixed-window cycle time, continuous and integer."""

    continuous: float
    integer: int


def cw_min_optimal(l_difs: int, l_rcts: int) -> CwOptimum:
    """Window minimising the fixed-window (beta = 0) RTS/CTS cycle time.

    The CW-dependent part is 2(l_difs+l_rcts)/(CW+1) + (CW+1)/2, minimised at
    CW* = 2 sqrt(l_difs + l_rcts) - 1.  The integer optimum is whichever of
    floor/ceil of CW* gives the smaller value (at least 1).
    """
    if l_difs < 0 or l_rcts < 0 or l_difs + l_rcts <= 0:
        raise DomainError("l_difs + l_rcts must be positive")
    cont = 2.0 * math.sqrt(l_difs + l_rcts) - 1.0

    def cost(cw: int) -> float:
        return 2.0 * (l_difs + l_rcts) / (cw + 1.0) + (cw + 1.0) / 2.0

    lo = max(1, math.floor(cont))
    hi = max(1, math.ceil(cont))
    best = lo if cost(lo) <= cost(hi) else hi
    return CwOptimum(cont, best)


def rtscts_basic_inflection(p_c: float, l_rcts: int) -> float:
    """Packet exchange length at which RTS/CTS stops paying for itself.

    Below l_tran = (2 - p_c)/p_c * l_rcts the reservation overhead outweighs
    the cheaper collisions and basic mode has the smaller cycle time; above
    it the order flips.
    """
    if not 0.0 < p_c <= 1.0:
        raise DomainError(f"p_c={p_c} outside (0, 1]")
    if l_rcts < 1:
        raise DomainError("l_rcts must be at least 1 slot")
    return (2.0 - p_c) / p_c * l_rcts


# -- TDMA --------------------------------------------------------------------

def tdma_cct(packet_lengths: list[int] | tuple[int, ...]) -> float:
    """Cycle time of round-robin TDMA: the sum of all users' packet lengths.

    Every user's cycle equals one full round, so the channel cycle time is the
    round length itself.
    """
    lengths = list(packet_lengths)
    if not lengths:
        raise EmptyError("TDMA needs at least one user")
    if any(l < 1 for l in lengths):
        raise DomainError("packet lengths must be at least 1 slot")
    return float(sum(lengths))
