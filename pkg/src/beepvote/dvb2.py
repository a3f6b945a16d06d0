"""DVB2: distributed plurality voting by pairwise value-set exchange.

Nodes draw ids from 1..Y (Y sized so that collisions are unlikely),
learn their neighbors' ids in one Y-slot discovery sweep, and then run
interaction phases.  Each phase an inviter coin splits the nodes;
inviters target one known neighbor id, invitations travel through a
Y x Y slot grid addressed by (inviter id, invitee id), invitees pick one
heard inviter and accept in a Y-slot sweep, and the matched pair swaps
value sets in two 2YK-slot transfer blocks, applying the merge rule in
between.  A phase therefore costs exactly Y^2 + Y + 4YK slots.

Only slots that actually carry a beep are simulated; every silent slot
is fast-forwarded with exact slot accounting, which is what makes the
Y^2 invitation grid affordable.  All records still go through the real
shared channel, so id collisions corrupt handshakes exactly as they
would slot by slot: simultaneous same-slot beeps merge, and whichever
node hears them acts on the merged observation.

The merge rule conserves the per-level multiset over each pair: the
smaller set becomes the union and the larger the intersection, a set
reduced to one value writes that value into its holder's memory, and
when both stay ambiguous a fair coin copies one old memory across.
Termination detection is the same relay-wave check as DVB1, run on the
memory values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dvb1 import TerminationWave
from .engine import FastForward, SlotRequest, TrialResult, finish, run
from .topology import Graph, LevelAssignment

ID_MODES = ("random", "preassigned_unique")


def id_space(max_degree: int, c2: float = 20.0) -> int:
    """Id range Y = max(ceil(c2 * Delta * log2(Delta)), Delta + 1)."""
    if c2 <= 0:
        raise ValueError("c2 must be positive")
    if max_degree <= 1:
        return max_degree + 1
    return max(math.ceil(c2 * max_degree * math.log2(max_degree)), max_degree + 1)


@dataclass(frozen=True)
class Dvb2Params:
    level_count: int
    y_slots: int
    d_sched: int
    check_interval: int
    invite_prob: float = 0.5
    c2: float = 20.0
    id_mode: str = "random"

    def __post_init__(self) -> None:
        if self.level_count < 1:
            raise ValueError("level count must be >= 1")
        if self.y_slots < 1:
            raise ValueError("id space must be >= 1")
        if self.d_sched < 1 or self.check_interval < 1:
            raise ValueError("termination scheduling constants must be >= 1")
        if not 0.0 < self.invite_prob < 1.0:
            raise ValueError("invite probability must lie in (0, 1)")
        if self.id_mode not in ID_MODES:
            raise ValueError(f"id_mode must be one of {ID_MODES}")

    @property
    def slots_per_phase(self) -> int:
        y, k = self.y_slots, self.level_count
        return y * y + y + 4 * y * k


def dvb2_params(
    graph: Graph,
    level_count: int,
    c2: float = 20.0,
    id_mode: str = "random",
    d_mode: str = "exact",
) -> Dvb2Params:
    if d_mode not in ("exact", "upper_bound_n"):
        raise ValueError("d_mode must be 'exact' or 'upper_bound_n'")
    d = graph.diameter if d_mode == "exact" else graph.node_count
    return Dvb2Params(
        level_count=level_count,
        y_slots=id_space(graph.max_degree, c2),
        d_sched=max(1, d),
        check_interval=max(1, d),
        c2=c2,
        id_mode=id_mode,
    )


def assign_ids(
    graph: Graph, y_slots: int, id_mode: str, rng: np.random.Generator
) -> np.ndarray:
    """Node ids in 1..y_slots.

    "random" draws ids independently and uniformly, so nearby nodes can
    collide.  "preassigned_unique" greedily colors the distance-2 graph,
    which guarantees that every closed neighborhood sees pairwise
    distinct ids and makes every handshake exact.
    """
    n = graph.node_count
    if id_mode == "random":
        return rng.integers(1, y_slots + 1, size=n).astype(np.int64)
    if id_mode != "preassigned_unique":
        raise ValueError(f"id_mode must be one of {ID_MODES}")
    adj = graph.adj
    two_hop = adj | (adj @ adj)
    ids = np.zeros(n, dtype=np.int64)
    for i in range(n):
        taken = set(ids[np.flatnonzero(two_hop[i][:i])]) | {int(ids[i])}
        candidate = 1
        while candidate in taken:
            candidate += 1
        if candidate > y_slots:
            raise ValueError("id space too small for locally unique ids")
        ids[i] = candidate
    return ids


def dmvr(set1, set2, mem1, mem2, rng: np.random.Generator):
    """One pairwise merge: returns (set1', set2', mem1', mem2').

    Conservation: for every level, membership across the two sets is
    preserved (union plus intersection).  A set updated to a single
    value disseminates it into that party's memory; if both updated
    sets keep more than one value, a fair coin copies one party's old
    memory onto the other.
    """
    s1 = frozenset(set1)
    s2 = frozenset(set2)
    if len(s1) <= len(s2):
        u1, u2 = s1 | s2, s1 & s2
    else:
        u1, u2 = s1 & s2, s1 | s2
    m1, m2 = mem1, mem2
    if len(u1) == 1:
        (m1,) = u1
    if len(u2) == 1:
        (m2,) = u2
    if len(u1) > 1 and len(u2) > 1:
        if rng.random() < 0.5:
            m1 = mem2
        else:
            m2 = mem1
    return u1, u2, m1, m2


class Dvb2Automaton:
    """All-node lockstep automaton for a full DVB2 run.

    Exposes ids, per-node value sets, and memories for inspection; the
    protocol's reported values are the memories.
    """

    def __init__(
        self,
        graph: Graph,
        params: Dvb2Params,
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
        n = graph.node_count
        self.ids = assign_ids(graph, params.y_slots, params.id_mode, rng)
        self.memory = np.array(assignment.values, dtype=np.int64)
        self.value_sets = [frozenset([int(v)]) for v in self.memory]
        self.neighbor_ids: list[tuple[int, ...]] = [()] * n
        self.status = "completed"
        self._phases = 0
        self._consensus: int | None = 0 if self._unanimous() else None
        self._terminated = False

    def _unanimous(self) -> bool:
        return bool((self.memory == self.memory[0]).all())

    def level_multiset(self) -> np.ndarray:
        """Per-level membership count over all value sets."""
        counts = np.zeros(self.params.level_count, dtype=np.int64)
        for s in self.value_sets:
            for k in s:
                counts[k - 1] += 1
        return counts

    def _stage(self, events, stage_len, record):
        """Run one block of slots given its beep events, fast-forwarding
        every silent slot.  events: sorted (offset, beeper index array)."""
        cursor = 0
        for offset, beepers in events:
            if offset > cursor:
                yield FastForward(offset - cursor)
            beeps = np.zeros(self.graph.node_count, dtype=bool)
            beeps[beepers] = True
            activity = yield SlotRequest(beeps)
            record(offset, beeps, activity)
            cursor = offset + 1
        if stage_len > cursor:
            yield FastForward(stage_len - cursor)

    @staticmethod
    def _grouped(pairs):
        """(offset, node) pairs to sorted (offset, node array) events."""
        by_offset: dict[int, list[int]] = {}
        for offset, node in pairs:
            by_offset.setdefault(offset, []).append(node)
        return [(off, np.array(by_offset[off])) for off in sorted(by_offset)]

    def _discovery(self):
        ids = self.ids
        found: list[set[int]] = [set() for _ in range(self.graph.node_count)]

        def record(offset, beeps, activity):
            j = offset + 1
            for i in np.flatnonzero(activity & ~beeps):
                found[i].add(j)

        events = self._grouped((int(j) - 1, i) for i, j in enumerate(ids))
        yield from self._stage(events, self.params.y_slots, record)
        self.neighbor_ids = [tuple(sorted(s)) for s in found]

    def _interaction_phase(self):
        n = self.graph.node_count
        y = self.params.y_slots
        k_levels = self.params.level_count
        rng = self.rng
        inviter = rng.random(n) < self.params.invite_prob

        # each inviter aims at one known neighbor id; no known ids, no invite
        target = np.zeros(n, dtype=np.int64)
        for i in np.flatnonzero(inviter):
            known = self.neighbor_ids[i]
            if known:
                target[i] = known[rng.integers(len(known))]

        # invitation grid: inviter with id j1 aiming at j2 beeps in slot (j1, j2)
        heard_from: list[set[int]] = [set() for _ in range(n)]

        def record_invite(offset, beeps, activity):
            j1, j2 = offset // y + 1, offset % y + 1
            hearers = activity & ~inviter & (self.ids == j2)
            for i in np.flatnonzero(hearers):
                heard_from[i].add(j1)

        pairs = [
            ((int(self.ids[i]) - 1) * y + (int(target[i]) - 1), i)
            for i in np.flatnonzero(inviter)
            if target[i]
        ]
        yield from self._stage(self._grouped(pairs), y * y, record_invite)

        # invitees pick one heard inviter id and beep in that id's slot
        chosen = np.zeros(n, dtype=np.int64)
        for i in range(n):
            if not inviter[i] and heard_from[i]:
                ids_heard = sorted(heard_from[i])
                chosen[i] = ids_heard[rng.integers(len(ids_heard))]
        accepted = np.zeros(n, dtype=bool)

        def record_accept(offset, beeps, activity):
            j = offset + 1
            accepted[:] |= activity & inviter & (self.ids == j)

        events = self._grouped((int(j) - 1, i) for i, j in enumerate(chosen) if j)
        yield from self._stage(events, y, record_accept)

        # accepted inviters send set membership then a value one-hot in
        # their own 2K-slot id block; their invitees listen on that block
        invitee = chosen > 0
        recv_set: list[set[int]] = [set() for _ in range(n)]
        recv_val = np.zeros(n, dtype=np.int64)

        def record_transfer(offset, beeps, activity):
            j = offset // (2 * k_levels) + 1
            r = offset % (2 * k_levels)
            hearers = activity & invitee & (chosen == j)
            for i in np.flatnonzero(hearers):
                if r < k_levels:
                    recv_set[i].add(r + 1)
                else:
                    recv_val[i] = r - k_levels + 1

        pairs = []
        for u in np.flatnonzero(accepted):
            base = (int(self.ids[u]) - 1) * 2 * k_levels
            for k in self.value_sets[u]:
                pairs.append((base + k - 1, u))
            pairs.append((base + k_levels + int(self.memory[u]) - 1, u))
        yield from self._stage(self._grouped(pairs), 2 * y * k_levels, record_transfer)

        # invitees merge; the inviter-side result goes back over the air
        back_set: list[frozenset] = [frozenset()] * n
        back_val = np.zeros(n, dtype=np.int64)
        for i in np.flatnonzero(invitee):
            assert recv_val[i] > 0  # the chosen inviter always transmits
            s1, s2, m1, m2 = dmvr(
                self.value_sets[i], recv_set[i], int(self.memory[i]), int(recv_val[i]), rng
            )
            self.value_sets[i] = s1
            self.memory[i] = m1
            back_set[i] = s2
            back_val[i] = m2

        for u in np.flatnonzero(accepted):
            self.value_sets[u] = frozenset()

        def record_return(offset, beeps, activity):
            j = offset // (2 * k_levels) + 1
            r = offset % (2 * k_levels)
            hearers = activity & accepted & (self.ids == j)
            for u in np.flatnonzero(hearers):
                if r < k_levels:
                    self.value_sets[u] = self.value_sets[u] | {r + 1}
                else:
                    self.memory[u] = r - k_levels + 1

        pairs = []
        for i in np.flatnonzero(invitee):
            base = (int(chosen[i]) - 1) * 2 * k_levels
            for k in back_set[i]:
                pairs.append((base + k - 1, i))
            pairs.append((base + k_levels + int(back_val[i]) - 1, i))
        yield from self._stage(self._grouped(pairs), 2 * y * k_levels, record_return)

    def schedule(self):
        params = self.params
        yield from self._discovery()
        since_check = 0
        while True:
            if self._phases >= self.max_phases:
                self.status = "max_phases_exceeded"
                return
            yield from self._interaction_phase()
            self._phases += 1
            if self._consensus is None and self._unanimous():
                self._consensus = self._phases
            since_check += 1
            if since_check >= params.check_interval:
                since_check = 0
                wave = TerminationWave(
                    self.graph, self.memory, params.level_count, params.d_sched
                )
                flags = yield from wave.schedule()
                if flags.all():
                    self._terminated = True
                    return
                assert not flags.any()

    def final_values(self) -> np.ndarray:
        return self.memory

    def phases_elapsed(self) -> int:
        return self._phases

    def consensus_phase(self) -> int | None:
        return self._consensus

    def terminated(self) -> bool:
        return self._terminated


def slot_budget(params: Dvb2Params, max_phases: int) -> int:
    checks = max_phases // params.check_interval + 1
    return (
        params.y_slots
        + max_phases * params.slots_per_phase
        + checks * (params.level_count - 1) * (params.d_sched + 1)
        + 1
    )


def dvb2_run(
    graph: Graph,
    assignment: LevelAssignment,
    params: Dvb2Params | None = None,
    seed=0,
    max_phases: int | None = None,
    trace=None,
) -> TrialResult:
    """Run DVB2 to unanimous termination (or a phase cap) and score the
    outcome against the assignment's strict plurality."""
    if params is None:
        params = dvb2_params(graph, assignment.level_count)
    if max_phases is None:
        # pairwise exchanges need far more phases than corrosion does, and
        # on low-diameter graphs check_interval is no guide to that scale
        max_phases = max(400, 40 * params.check_interval)
    rng = np.random.default_rng(seed)
    automaton = Dvb2Automaton(graph, params, assignment, rng, max_phases)
    metrics, status = run(graph, automaton, slot_budget(params, max_phases), trace)
    return finish(automaton, metrics, status, assignment.plurality_level())
