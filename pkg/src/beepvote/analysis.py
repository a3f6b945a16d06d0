"""Analytic toolkit for one corrosion phase.

Everything here reasons about the alive-count process: starting from
per-level counts (n_1, ..., n_K), every alive node independently stays
alive with probability p each round.  The phase is considered settled
the first time the counts form a halting pattern:

  win(m):  level m alone has survivors, or it has at least two while
           exactly one other level is down to a single survivor;
  draw:    no survivors anywhere.

`markov_success` solves the absorption probabilities exactly;
`sample_success` estimates them by direct simulation and exists as an
independent cross-check.  The closed-form lower bounds trade tightness
for speed and are useful for sizing experiments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats


def prop1_rounds(n: int, epsilon: float) -> int:
    """Rounds after which all n nodes are dead with probability at least
    1 - epsilon: ceil(log2(n / epsilon)), for survival probability 1/2."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    return math.ceil(math.log2(n / epsilon))


@dataclass(frozen=True)
class StateClass:
    kind: str  # "transient" | "win" | "draw"
    level: int | None = None  # 1-based winning level for kind == "win"


def classify(counts) -> StateClass:
    """Halting classification of an alive-count vector."""
    counts = np.asarray(counts, dtype=np.int64)
    if counts.ndim != 1 or len(counts) < 1:
        raise ValueError("counts must be a non-empty 1D vector")
    if (counts < 0).any():
        raise ValueError("counts must be non-negative")
    order = np.sort(counts)[::-1]
    c1 = order[0]
    c2 = order[1] if len(order) > 1 else 0
    c3 = order[2] if len(order) > 2 else 0
    if c1 == 0:
        return StateClass("draw")
    if c2 == 0:
        return StateClass("win", int(np.argmax(counts)) + 1)
    if c1 >= 2 and c2 == 1 and c3 == 0:
        return StateClass("win", int(np.argmax(counts)) + 1)
    return StateClass("transient")


def transition_prob(counts_from, counts_to, p: float = 0.5) -> float:
    """One-round probability that the alive counts thin from counts_from
    to counts_to (independent survival with probability p per node)."""
    a = np.asarray(counts_from, dtype=np.int64)
    b = np.asarray(counts_to, dtype=np.int64)
    if a.shape != b.shape:
        raise ValueError("count vectors must have equal length")
    if classify(a).kind != "transient":
        raise ValueError("transitions are only defined from transient states")
    if (b < 0).any() or (b > a).any():
        return 0.0
    return float(np.prod(stats.binom.pmf(b, a, p)))


@dataclass(frozen=True)
class MarkovResult:
    win_prob: np.ndarray  # per level, index 0 holding level 1
    draw_prob: float

    def total(self) -> float:
        return float(self.win_prob.sum() + self.draw_prob)


def markov_success(counts, p: float = 0.5) -> MarkovResult:
    """Exact absorption probabilities of the alive-count chain.

    Dynamic programming over the grid of states dominated componentwise
    by the initial counts, in ascending total order: every transition
    out of a transient state except the self-loop strictly lowers the
    total, so each state only needs already-solved ones plus a self-loop
    renormalization by 1 / (1 - p^total).  The state space has
    prod(n_k + 1) points, which is fine at desk scale but grows quickly
    with the level count.
    """
    counts = np.asarray(counts, dtype=np.int64)
    if counts.ndim != 1 or len(counts) < 1:
        raise ValueError("counts must be a non-empty 1D vector")
    if (counts < 0).any():
        raise ValueError("counts must be non-negative")
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    k = len(counts)
    # pmfs[i][a, j] = P(Binomial(a, p) = j), rows 0..n_i
    pmfs = []
    for n_i in counts:
        grid = np.arange(n_i + 1)
        pmfs.append(stats.binom.pmf(grid[None, :], grid[:, None], p))
    value = np.zeros(tuple(int(c) + 1 for c in counts) + (k + 1,))
    states = sorted(np.ndindex(*[int(c) + 1 for c in counts]), key=sum)
    for state in states:
        cls = classify(state)
        if cls.kind == "draw":
            value[state + (k,)] = 1.0
            continue
        if cls.kind == "win":
            value[state + (cls.level - 1,)] = 1.0
            continue
        sub = value[tuple(slice(0, a + 1) for a in state)]
        for axis, a in enumerate(state):
            sub = np.tensordot(pmfs[axis][a, : a + 1], sub, axes=(0, 0))
        total = sum(state)
        value[state] = sub / (1.0 - p**total)
    out = value[tuple(int(c) for c in counts)]
    return MarkovResult(win_prob=out[:k].copy(), draw_prob=float(out[k]))


def sample_success(
    counts, p: float = 0.5, samples: int = 10**6, seed=0, max_rounds: int = 10_000
) -> MarkovResult:
    """Monte-Carlo estimate of the same absorption probabilities by
    simulating the thinning process directly.  Independent of
    markov_success by construction; used to cross-check it."""
    counts = np.asarray(counts, dtype=np.int64)
    k = len(counts)
    rng = np.random.default_rng(seed)
    alive = np.tile(counts, (samples, 1))
    win = np.zeros(k, dtype=np.int64)
    draw = 0
    active = np.arange(samples)
    for _ in range(max_rounds):
        if len(active) == 0:
            break
        a = alive[active]
        order = -np.sort(-a, axis=1)
        c1 = order[:, 0]
        c2 = order[:, 1] if k > 1 else np.zeros(len(active), dtype=np.int64)
        c3 = order[:, 2] if k > 2 else np.zeros(len(active), dtype=np.int64)
        is_draw = c1 == 0
        is_win = (~is_draw) & ((c2 == 0) | ((c1 >= 2) & (c2 == 1) & (c3 == 0)))
        if is_win.any():
            winners = a[is_win].argmax(axis=1)
            win += np.bincount(winners, minlength=k)
        draw += int(is_draw.sum())
        halted = is_draw | is_win
        active = active[~halted]
        if len(active) == 0:
            break
        alive[active] = rng.binomial(alive[active], p)
    if len(active):
        raise RuntimeError("absorption not reached within max_rounds")
    return MarkovResult(win_prob=win / samples, draw_prob=draw / samples)


def lower_bound_two_event(counts, p: float = 0.5, r_max: int | None = None) -> float:
    """Lower bound on one-phase success for the strict plurality level.

    For each round horizon r it combines the chance that at least two
    plurality nodes outlive round r with the chance that every other
    level is down to at most one straggler by then (plus the boundary
    term where the plurality itself is the single survivor), and takes
    the best horizon r in 0..r_max.
    """
    counts = np.asarray(counts, dtype=np.int64)
    if counts.ndim != 1 or len(counts) < 1:
        raise ValueError("counts must be a non-empty 1D vector")
    if (counts < 0).any() or counts.sum() < 1:
        raise ValueError("counts must be non-negative with at least one node")
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    top = counts.max()
    winners = np.flatnonzero(counts == top)
    if len(winners) != 1:
        raise ValueError("counts must have a strict plurality level")
    m = int(winners[0])
    if r_max is None:
        r_max = prop1_rounds(int(counts.sum()), 1e-6)
    n_m = int(counts[m])
    others = np.delete(counts, m).astype(np.float64)
    best = 0.0
    for r in range(r_max + 1):
        pr = p**r
        q = 1.0 - pr
        # P(>= 2 plurality survivors after r rounds)
        p_two = 1.0 - (q**n_m + n_m * pr * q ** (n_m - 1))
        # all other levels extinct, or exactly one straggler among them
        all_dead = float(np.prod(q**others))
        one_left = 0.0
        for i, n_k in enumerate(others):
            if n_k < 1:
                continue  # empty level: covered by all_dead, and q**(n_k-1) blows up at r=0
            rest = np.delete(others, i)
            one_left += n_k * pr * q ** (n_k - 1) * float(np.prod(q**rest))
        p_single_m = n_m * pr * q ** (n_m - 1) * all_dead
        best = max(best, p_two * (all_dead + one_left) + p_single_m)
    return best


def lower_bound_closed(n_m: int, n_m2: int, level_count: int) -> float:
    """Closed-form lower bound for plurality count n_m against runner-up
    count n_m2 over level_count levels:

        (1 - exp(-sqrt(n_m / n_m2))) * exp(-(K - 1) n_m2 / (sqrt(n_m n_m2) - 1))

    Requires sqrt(n_m * n_m2) > 1.
    """
    if n_m < 1 or n_m2 < 1:
        raise ValueError("counts must be >= 1")
    if n_m <= n_m2:
        raise ValueError("plurality count must exceed the runner-up count")
    if level_count < 2:
        raise ValueError("level count must be >= 2")
    root = math.sqrt(n_m * n_m2)
    if root <= 1.0:
        raise ValueError("sqrt(n_m * n_m2) must exceed 1")
    return (1.0 - math.exp(-math.sqrt(n_m / n_m2))) * math.exp(
        -(level_count - 1) * n_m2 / (root - 1.0)
    )


def corollary_ratio(level_count: int, epsilon: float) -> float:
    """Plurality ratio n_m / n_m2 above which the closed-form recipe
    targets success probability 1 - epsilon:

        (1/4) * (ln(1 - eps) + sqrt(ln(1 - eps)^2 + 4 K))^2

    evaluated in the cancellation-free form 4 K^2 / (s + |ln(1 - eps)|)^2
    with s = sqrt(ln(1 - eps)^2 + 4 K), which stays finite as eps -> 1.
    """
    if level_count < 2:
        raise ValueError("level count must be >= 2")
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    log1m = math.log1p(-epsilon)  # negative
    s = math.sqrt(log1m * log1m + 4.0 * level_count)
    # ln + s == 4K / (s - ln), so the square avoids catastrophic cancellation
    return (2.0 * level_count / (s - log1m)) ** 2
