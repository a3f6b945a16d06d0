"""Slot-synchronous beep-channel engine.

In every slot each node either beeps or listens.  A listener hears an
undifferentiated beep exactly when at least one of its neighbors beeps;
a beeping node observes heard = false, and beep multiplicity is never
observable.  `step` exposes that channel rule directly.

`run` drives a protocol automaton slot by slot.  An automaton is any
object exposing a `schedule()` generator that yields `SlotRequest`
(a boolean beep vector, True = beep) and `FastForward` events.  For each
SlotRequest the engine replies, via `send`, with the channel activity
vector: activity[i] is true iff some neighbor of i beeped this slot.
The literal per-node observation is `heard = activity & ~beeps`; the
activity form additionally lets a protocol model sender-side collision
detection (a beeper noticing that a neighbor beeped in the same slot).

FastForward covers stretches of slots whose outcome the automaton can
account for exactly without touching the channel: either no node beeps,
or the beepers and the absence of state changes are provably known.  The
engine only adds the declared slot and beep counts, so metrics match a
naive slot-by-slot execution bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import IO, Protocol

import numpy as np

from .topology import Graph


@dataclass(frozen=True)
class SlotRequest:
    beeps: np.ndarray  # bool per node, True = beep


@dataclass(frozen=True)
class FastForward:
    slots: int
    beep_count: int = 0


@dataclass
class TrialMetrics:
    slots_elapsed: int = 0
    total_beeps: int = 0


@dataclass(frozen=True)
class TrialResult:
    """Outcome of one protocol run.

    success is None when the input had no strict plurality; such runs
    are excluded from success statistics.  status is "completed",
    "max_phases_exceeded", or "slot_budget_exhausted".
    """

    final_values: tuple
    success: bool | None
    terminated: bool
    phases_elapsed: int
    consensus_phase: int | None
    slots_elapsed: int
    total_beeps: int
    status: str


class ProtocolAutomaton(Protocol):
    """Lockstep automaton for all nodes of one protocol run."""

    status: str

    def schedule(self):  # generator of SlotRequest | FastForward
        ...

    def final_values(self) -> np.ndarray: ...

    def phases_elapsed(self) -> int: ...

    def consensus_phase(self) -> int | None: ...

    def terminated(self) -> bool: ...


def step(graph: Graph, beeps: np.ndarray) -> np.ndarray:
    """One synchronous slot: heard[i] iff node i listened and some
    neighbor of i beeped."""
    beeps = np.asarray(beeps, dtype=bool)
    if beeps.shape != (graph.node_count,):
        raise ValueError("beep vector length must match node count")
    activity = graph.adj @ beeps
    return activity & ~beeps


def channel_activity(graph: Graph, beeps: np.ndarray) -> np.ndarray:
    """Raw channel state: activity[i] iff some neighbor of i beeped."""
    return graph.adj @ beeps


def run(
    graph: Graph,
    automaton: ProtocolAutomaton,
    slot_budget: int,
    trace: IO[str] | None = None,
) -> tuple[TrialMetrics, str]:
    """Drive an automaton until its schedule ends or the budget runs out.

    Returns the metrics and a status string.  The status is the
    automaton's own (normally "completed" or "max_phases_exceeded")
    unless the slot budget was exhausted first.
    """
    metrics = TrialMetrics()
    gen = automaton.schedule()
    reply = None
    adj = graph.adj
    while True:
        try:
            event = gen.send(reply)
        except StopIteration:
            return metrics, automaton.status
        if isinstance(event, FastForward):
            metrics.slots_elapsed += event.slots
            metrics.total_beeps += event.beep_count
            if trace is not None and event.slots:
                trace.write(
                    f"slots {metrics.slots_elapsed - event.slots}..."
                    f"{metrics.slots_elapsed - 1} fast-forward "
                    f"beeps={event.beep_count}\n"
                )
            reply = None
            continue
        if metrics.slots_elapsed >= slot_budget:
            gen.close()
            return metrics, "slot_budget_exhausted"
        beeps = event.beeps
        metrics.slots_elapsed += 1
        metrics.total_beeps += int(beeps.sum())
        activity = adj @ beeps
        if trace is not None:
            slot = metrics.slots_elapsed - 1
            heard = activity & ~beeps
            for i in range(graph.node_count):
                action = "beep" if beeps[i] else "listen"
                trace.write(f"slot={slot} node={i} action={action} heard={int(heard[i])}\n")
        reply = activity


def drive_schedule(graph: Graph, gen) -> tuple[int, int, object]:
    """Run a slot-event generator to completion with no budget.

    Returns (slots, beeps, return_value) where return_value is whatever
    the generator returned on StopIteration.
    """
    slots = 0
    beeps = 0
    reply = None
    adj = graph.adj
    while True:
        try:
            event = gen.send(reply)
        except StopIteration as stop:
            return slots, beeps, stop.value
        if isinstance(event, FastForward):
            slots += event.slots
            beeps += event.beep_count
            reply = None
        else:
            slots += 1
            beeps += int(event.beeps.sum())
            reply = adj @ event.beeps


def finish(
    automaton: ProtocolAutomaton,
    metrics: TrialMetrics,
    status: str,
    majority_level: int | None,
) -> TrialResult:
    """Assemble a TrialResult; success compares the unanimous final value
    against the initial strict plurality."""
    values = automaton.final_values()
    success: bool | None
    if majority_level is None:
        success = None
    else:
        values_arr = np.asarray(values)
        success = bool((values_arr == majority_level).all())
    return TrialResult(
        final_values=tuple(int(v) for v in values),
        success=success,
        terminated=automaton.terminated(),
        phases_elapsed=automaton.phases_elapsed(),
        consensus_phase=automaton.consensus_phase(),
        slots_elapsed=metrics.slots_elapsed,
        total_beeps=metrics.total_beeps,
        status=status,
    )
