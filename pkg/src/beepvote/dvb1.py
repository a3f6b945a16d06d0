"""DVB1: distributed plurality voting by corrosion rounds.

The run alternates corrosion phases with a relay-wave termination check.
A corrosion phase is T rounds of K slots, one slot per level.  In round
j, every node still allowed to beep announces its level in that level's
slot and then survives the round with probability p; every node records,
per level, whether any neighbor beeped in that slot.  A node that heard
exactly one level at the end of a round adopts it (dead nodes keep
listening and adopting; they only stop beeping).

Hear flags are defined as "some neighbor beeped in slot k" for beepers
and listeners alike, so a node beeping alongside a same-level neighbor
still raises its own level's flag.  This sender-side collision detection
is load-bearing: with strictly deaf beepers, two same-level nodes
beeping together would each see only the competing levels and a whole
majority spot could defect in one round.

Termination detection runs every check_interval phases and costs at most
(K - 1) periods of (d_sched + 1) slots.  In period k the level-k holders
beep once; any differently valued listener that hears them starts a
relay wave that floods the graph within d_sched hops, so all nodes agree
on the flag.  A fully silent check (no difference found anywhere) is the
unanimous stop signal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .engine import (
    FastForward,
    SlotRequest,
    TrialResult,
    drive_schedule,
    finish,
    run,
)
from .topology import Graph, LevelAssignment

D_MODES = ("exact", "upper_bound_n")


@dataclass(frozen=True)
class Dvb1Params:
    """Protocol constants for one graph.

    rounds_per_phase is ceil(c1 * log2(N)) clamped to at least 1;
    d_sched is the hop bound used by termination detection (the exact
    diameter, or N when only the trivial upper bound is assumed) and
    doubles as the phase count between checks.
    """

    level_count: int
    rounds_per_phase: int
    d_sched: int
    check_interval: int
    survival_prob: float = 0.5
    c1: float = 20.0

    def __post_init__(self) -> None:
        if self.level_count < 1:
            raise ValueError("level count must be >= 1")
        if self.rounds_per_phase < 1:
            raise ValueError("rounds per phase must be >= 1")
        if self.d_sched < 1 or self.check_interval < 1:
            raise ValueError("termination scheduling constants must be >= 1")
        if not 0.0 < self.survival_prob < 1.0:
            raise ValueError("survival probability must lie in (0, 1)")

    @property
    def slots_per_phase(self) -> int:
        return self.rounds_per_phase * self.level_count


def dvb1_params(
    graph: Graph,
    level_count: int,
    c1: float = 20.0,
    survival_prob: float = 0.5,
    d_mode: str = "exact",
) -> Dvb1Params:
    if c1 <= 0:
        raise ValueError("c1 must be positive")
    if d_mode not in D_MODES:
        raise ValueError(f"d_mode must be one of {D_MODES}")
    n = graph.node_count
    rounds = max(1, math.ceil(c1 * math.log2(n))) if n > 1 else 1
    d = graph.diameter if d_mode == "exact" else n
    d_sched = max(1, d)
    return Dvb1Params(
        level_count=level_count,
        rounds_per_phase=rounds,
        d_sched=d_sched,
        check_interval=d_sched,
        survival_prob=survival_prob,
        c1=c1,
    )


def corrosion_phase_schedule(graph, values, allowed, params, rng):
    """Slot-event generator for one corrosion phase, mutating values and
    allowed in place.

    Survival coins are drawn only for the nodes that beeped, in node
    order, immediately after their beep slot.  Once every node is dead
    the rest of the phase provably changes nothing (no beeps, hence no
    flags, hence no adoptions) and is fast-forwarded.

    Returns the 1-based round index at whose end all nodes were dead,
    or None if some node could still beep when the phase ended.
    """
    n = graph.node_count
    level_count = params.level_count
    rounds = params.rounds_per_phase
    death = 1.0 - params.survival_prob
    allowed[:] = True
    flags = np.zeros((n, level_count), dtype=bool)
    all_dead_round = None
    for j in range(rounds):
        if all_dead_round is not None:
            remaining = (rounds - j) * level_count
            if remaining:
                yield FastForward(remaining)
            break
        flags[:] = False
        for k in range(1, level_count + 1):
            beeps = (values == k) & allowed
            beeper_idx = np.flatnonzero(beeps)
            if len(beeper_idx) == 0:
                yield FastForward(1)
                continue
            coins = rng.random(len(beeper_idx))
            allowed[beeper_idx[coins < death]] = False
            activity = yield SlotRequest(beeps)
            flags[:, k - 1] = activity
        adopters = flags.sum(axis=1) == 1
        if adopters.any():
            values[adopters] = flags[adopters].argmax(axis=1) + 1
        if not allowed.any():
            all_dead_round = j + 1
    return all_dead_round


class TerminationWave:
    """One termination check over the current values.

    Period k (k = 1..K-1): level-k holders beep in slot 1; a listener
    with a different value that hears them clears its terminated flag.
    During the d_sched relay slots every cleared node beeps, and any
    listener that hears a relay beep clears its own flag one slot later.
    A period that detects a difference floods every node within d_sched
    hops, after which the remaining periods are skipped.  The level-K
    period is redundant and never scheduled.
    """

    def __init__(self, graph: Graph, values: np.ndarray, level_count: int, d_sched: int):
        self.graph = graph
        self.values = values
        self.level_count = level_count
        self.d_sched = d_sched
        self.flags: np.ndarray | None = None
        self.heard_events = 0

    def schedule(self):
        n = self.graph.node_count
        relay = self.d_sched
        term = np.ones(n, dtype=bool)
        for k in range(1, self.level_count):
            beeps = self.values == k
            if not beeps.any():
                yield FastForward(relay + 1)
                continue
            activity = yield SlotRequest(beeps)
            hears = activity & ~beeps
            self.heard_events += int(hears.sum())
            term &= ~hears
            d = 0
            while d < relay:
                frontier = ~term
                cleared = int(frontier.sum())
                if cleared == 0:
                    yield FastForward(relay - d)
                    break
                if cleared == n:
                    yield FastForward(relay - d, (relay - d) * n)
                    break
                activity = yield SlotRequest(frontier)
                hears = activity & term
                self.heard_events += int(hears.sum())
                term &= ~hears
                d += 1
            if not term.all():
                break
        self.flags = term
        return term


@dataclass(frozen=True)
class TerminationOutcome:
    flags: tuple
    slots: int
    beeps: int
    heard_events: int

    @property
    def unanimous(self) -> bool:
        return len(set(self.flags)) == 1

    @property
    def terminated(self) -> bool:
        return all(self.flags)


def termination_detection(
    graph: Graph, values, level_count: int, d_sched: int
) -> TerminationOutcome:
    """Run one standalone termination check and report the per-node flags
    along with exact slot, beep, and hear counts."""
    values = np.asarray(values, dtype=np.int64)
    if values.shape != (graph.node_count,):
        raise ValueError("values length must match node count")
    wave = TerminationWave(graph, values, level_count, max(1, d_sched))
    slots, beeps, flags = drive_schedule(graph, wave.schedule())
    return TerminationOutcome(
        flags=tuple(bool(f) for f in flags),
        slots=slots,
        beeps=beeps,
        heard_events=wave.heard_events,
    )


class Dvb1Automaton:
    """All-node lockstep automaton for a full DVB1 run."""

    def __init__(
        self,
        graph: Graph,
        params: Dvb1Params,
        assignment: LevelAssignment,
        rng: np.random.Generator,
        max_phases: int,
    ):
        if assignment.node_count != graph.node_count:
            raise ValueError("assignment length must match node count")
        if assignment.level_count != params.level_count:
            raise ValueError("assignment and params disagree on level count")
        self.graph = graph
        self.params = params
        self.rng = rng
        self.max_phases = max_phases
        self.values = np.array(assignment.values, dtype=np.int64)
        self.allowed = np.ones(graph.node_count, dtype=bool)
        self.status = "completed"
        self._phases = 0
        self._consensus: int | None = 0 if self._unanimous() else None
        self._terminated = False

    def _unanimous(self) -> bool:
        return bool((self.values == self.values[0]).all())

    def schedule(self):
        params = self.params
        since_check = 0
        while True:
            if self._phases >= self.max_phases:
                self.status = "max_phases_exceeded"
                return
            yield from corrosion_phase_schedule(
                self.graph, self.values, self.allowed, params, self.rng
            )
            self._phases += 1
            if self._consensus is None and self._unanimous():
                self._consensus = self._phases
            since_check += 1
            if since_check >= params.check_interval:
                since_check = 0
                wave = TerminationWave(
                    self.graph, self.values, params.level_count, params.d_sched
                )
                flags = yield from wave.schedule()
                if flags.all():
                    self._terminated = True
                    return
                # detection floods every node, so the flag stays unanimous
                assert not flags.any()

    def final_values(self) -> np.ndarray:
        return self.values

    def phases_elapsed(self) -> int:
        return self._phases

    def consensus_phase(self) -> int | None:
        return self._consensus

    def terminated(self) -> bool:
        return self._terminated


def slot_budget(params: Dvb1Params, max_phases: int) -> int:
    checks = max_phases // params.check_interval + 1
    return (
        max_phases * params.slots_per_phase
        + checks * (params.level_count - 1) * (params.d_sched + 1)
        + 1
    )


def dvb1_run(
    graph: Graph,
    assignment: LevelAssignment,
    params: Dvb1Params | None = None,
    seed=0,
    max_phases: int | None = None,
    trace=None,
) -> TrialResult:
    """Run DVB1 to unanimous termination (or a phase cap) and score the
    outcome against the assignment's strict plurality."""
    if params is None:
        params = dvb1_params(graph, assignment.level_count)
    if max_phases is None:
        max_phases = 50 * params.d_sched
    rng = np.random.default_rng(seed)
    automaton = Dvb1Automaton(graph, params, assignment, rng, max_phases)
    metrics, status = run(graph, automaton, slot_budget(params, max_phases), trace)
    return finish(automaton, metrics, status, assignment.plurality_level())


@dataclass(frozen=True)
class OnePhaseResult:
    """Outcome of a single corrosion phase from a fresh assignment.

    success is true when every node ends the phase on the initial
    strict-plurality level; all_dead_round is the 1-based round by whose
    end no node could beep any more (None if some survivor remained)."""

    final_values: tuple
    success: bool | None
    all_dead_round: int | None
    slots: int
    beeps: int

    @property
    def unanimous(self) -> bool:
        return len(set(self.final_values)) == 1


def one_phase(
    graph: Graph,
    assignment: LevelAssignment,
    params: Dvb1Params | None = None,
    seed=0,
) -> OnePhaseResult:
    """Run exactly one corrosion phase with no termination slots."""
    if params is None:
        params = dvb1_params(graph, assignment.level_count)
    if assignment.node_count != graph.node_count:
        raise ValueError("assignment length must match node count")
    if assignment.level_count != params.level_count:
        raise ValueError("assignment and params disagree on level count")
    rng = np.random.default_rng(seed)
    values = np.array(assignment.values, dtype=np.int64)
    allowed = np.ones(graph.node_count, dtype=bool)
    gen = corrosion_phase_schedule(graph, values, allowed, params, rng)
    slots, beeps, all_dead_round = drive_schedule(graph, gen)
    majority = assignment.plurality_level()
    success = None if majority is None else bool((values == majority).all())
    return OnePhaseResult(
        final_values=tuple(int(v) for v in values),
        success=success,
        all_dead_round=all_dead_round,
        slots=slots,
        beeps=beeps,
    )
