"""The reconciliation engine: both protocol parties plus session drivers.

The initiator (A) holds the reference frame.  The responder (B) holds the
noisy frame and does all the heavy lifting: it compares block parities,
drives dichotomic searches, cascades corrections back into earlier rounds'
blocks, and flips its own bits.  Parties are written as generators that
``yield`` lists of outbound messages and receive the next inbound message
at each yield; this makes the protocol single-steppable, transport-free,
and byte-reproducible under both lockstep and threaded scheduling.

Conversation shape (strict half-duplex: at most one message in flight):

    A -> B   Init
    B -> A   Init                      (or Result on parameter mismatch)
    per round:
        A -> B   BlockParities
        B -> A   ParityQuery    \\  zero or more exchanges
        A -> B   ParityAnswer   /
        B -> A   RoundDone
    A -> B   Finalize
    B -> A   Finalize
    A -> B   Result

Within a round the responder works in "waves".  Each wave advances every
live search as far as stored parities allow, performs at most one channel
exchange per search, then applies all located corrections at once, aborts
searches whose current interval was touched by a flip, and queues affected
earlier-round blocks as new search candidates.  Running identical waves
regardless of query batching is what makes the batched and unbatched modes
produce bit-identical corrections.
"""

from __future__ import annotations

import enum
import threading
from collections import deque
from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Sequence, Set, Tuple

import numpy as np

from . import binary_search as bisect_search
from . import channel as wire
from .bitframe import BitFrame, gen_lcg_permutation, gen_shuffle_permutation
from .errors import ConfigurationError, ProtocolError, TransportError
from .paritytree import (
    ColoredTree,
    Interval,
    NodeColor,
    build_tree,
    iter_nodes,
    mark_compromised,
    mark_error_leaf,
    multi_error_frontier,
    set_syndrome,
    split_point,
)
from .rng import SeededRng, label_from_text
from .schedule import (
    BreakCondition,
    RoundPlan,
    ScheduleConfig,
    plan_round,
    should_terminate,
)

PERMUTATION_KINDS = ("shuffle", "lcg")

_FINGERPRINT_PRIME = (1 << 61) - 1
_FINGERPRINT_LABEL = label_from_text("frame-fingerprint-base")


class Role(enum.Enum):
    INITIATOR = "initiator"
    RESPONDER = "responder"


@dataclass(frozen=True)
class SessionConfig:
    """Everything one party needs to run a session.

    ``frame_length``, ``schedule``, ``break_condition``, ``permutation_kind``
    and ``seed`` must match between the parties (checked in the handshake).
    ``aggregation`` and ``parity_reuse`` are responder-local policies: the
    first packages a wave's queries into one message per referenced round,
    the second allows previously learned or derivable remote parities to
    answer search steps without a channel exchange.
    """

    frame_length: int
    schedule: ScheduleConfig
    break_condition: BreakCondition
    permutation_kind: str = "lcg"
    seed: int = 0
    aggregation: bool = False
    parity_reuse: bool = True

    def __post_init__(self) -> None:
        if self.frame_length < 1:
            raise ConfigurationError(f"frame_length must be >= 1, got {self.frame_length}")
        if self.permutation_kind not in PERMUTATION_KINDS:
            raise ConfigurationError(
                f"permutation_kind must be one of {PERMUTATION_KINDS}, got {self.permutation_kind!r}"
            )
        if not 0 <= self.seed < (1 << 64):
            raise ConfigurationError("seed must fit in 64 bits")


@dataclass(frozen=True)
class CorrectionEvent:
    """One corrected bit and what it cost to locate.

    ``corrected_round`` is the round during which the flip landed;
    ``block_round`` identifies the round whose block was searched (older
    than ``corrected_round`` for cascaded corrections).  ``block_position``
    is the located singleton in that round's permuted coordinates, and
    ``disclosed_bits`` counts the channel parities the search consumed,
    probing included.
    """

    corrected_round: int
    block_round: int
    original_position: int
    block_position: int
    disclosed_bits: int


@dataclass(frozen=True)
class SessionSummary:
    """One party's account of a finished session."""

    role: Role
    status: wire.SessionStatus
    final_frame: BitFrame
    rounds_executed: int
    corrected_total: int
    corrected_history: Tuple[int, ...]
    corrections: Tuple[CorrectionEvent, ...]
    compromised_positions: frozenset
    parity_bits_disclosed: int
    fingerprint: Optional[int]


def frame_fingerprint(frame: BitFrame, seed: int) -> int:
    """Seed-keyed polynomial hash of a frame modulo the prime 2**61 - 1.

    The frame is read as little-endian 32-bit limbs and evaluated as a
    polynomial at a secret point derived from the shared seed.  Any
    single-bit difference changes exactly one limb by a power of two, so
    it always changes the value; for differing frames of length n the
    collision probability over the choice of point is below n / 2**56.
    """
    point = 2 + SeededRng(seed).derive(_FINGERPRINT_LABEL).next_u64() % (_FINGERPRINT_PRIME - 3)
    length = len(frame)
    padded = np.zeros(((length + 31) // 32) * 32, dtype=np.uint8)
    padded[:length] = frame.bits
    limbs = np.packbits(padded, bitorder="little").view("<u4")
    accumulator = 0
    power = 1
    for limb in limbs.tolist():
        power = (power * point) % _FINGERPRINT_PRIME
        accumulator = (accumulator + limb * power) % _FINGERPRINT_PRIME
    return accumulator


def _init_from_config(config: SessionConfig) -> wire.Init:
    return wire.Init(
        frame_length=config.frame_length,
        permutation_kind=config.permutation_kind,
        schedule=config.schedule,
        break_condition=config.break_condition,
        seed=config.seed,
    )


def round_mapping(config: SessionConfig, round_index: int) -> np.ndarray:
    """Original-position -> round-position array for one round.

    Round 0 always works on unpermuted data; later rounds draw from the
    configured permutation family, keyed by the shared seed.
    """
    n = config.frame_length
    if round_index == 0:
        return np.arange(n, dtype=np.int64)
    if config.permutation_kind == "shuffle":
        perm = gen_shuffle_permutation(n, round_index, config.seed)
    else:
        perm = gen_lcg_permutation(n, round_index, config.seed)
    return np.asarray(perm.mapping, dtype=np.int64)


def _block_parities(view: np.ndarray, intervals: Sequence[Interval]) -> Tuple[int, ...]:
    starts = np.fromiter((lo for lo, _ in intervals), dtype=np.int64, count=len(intervals))
    folded = np.bitwise_xor.reduceat(view, starts)
    return tuple(int(b) for b in folded)


# ---------------------------------------------------------------------------
# initiator
# ---------------------------------------------------------------------------


def initiator_session(config: SessionConfig, frame: BitFrame):
    """Generator for party A.  Yields lists of outbound messages; the
    driver sends each yielded message and delivers the next inbound one.
    Returns ``(SessionSummary, final_messages)`` via StopIteration."""
    if len(frame) != config.frame_length:
        raise ConfigurationError(
            f"frame length {len(frame)} does not match configured {config.frame_length}"
        )
    n = config.frame_length
    my_init = _init_from_config(config)
    parity_bits = 0

    inbound = yield [my_init]
    if isinstance(inbound, wire.Result):
        # Responder rejected the handshake.
        summary = SessionSummary(
            Role.INITIATOR, inbound.status, frame, 0, 0, (), (), frozenset(), parity_bits, None
        )
        return summary, []
    if not isinstance(inbound, wire.Init):
        raise ProtocolError(f"expected Init or Result, got {type(inbound).__name__}")
    if inbound != my_init:
        summary = SessionSummary(
            Role.INITIATOR,
            wire.SessionStatus.CONFIG_MISMATCH,
            frame,
            0,
            0,
            (),
            (),
            frozenset(),
            parity_bits,
            None,
        )
        return summary, [wire.Result(wire.SessionStatus.CONFIG_MISMATCH)]

    views: Dict[int, np.ndarray] = {}
    history: List[int] = []
    round_index = 0
    while True:
        sources = np.empty(n, dtype=np.int64)
        sources[round_mapping(config, round_index)] = np.arange(n, dtype=np.int64)
        views[round_index] = frame.bits[sources]
        plan = plan_round(config.schedule, round_index, n, tuple(history))
        parities = _block_parities(views[round_index], plan.intervals)
        parity_bits += len(parities)
        inbound = yield [wire.BlockParities(round_index, parities)]

        while isinstance(inbound, wire.ParityQuery):
            if inbound.round_index not in views:
                raise ProtocolError(
                    f"query references round {inbound.round_index} before it was opened"
                )
            qview = views[inbound.round_index]
            entries = []
            for lo, hi in inbound.intervals:
                if not (0 <= lo < hi <= n):
                    raise ProtocolError(f"query interval [{lo}, {hi}) out of range")
                entries.append((lo, hi, int(np.bitwise_xor.reduce(qview[lo:hi]))))
            parity_bits += len(entries)
            inbound = yield [wire.ParityAnswer(inbound.round_index, tuple(entries))]

        if not isinstance(inbound, wire.RoundDone) or inbound.round_index != round_index:
            raise ProtocolError(f"expected RoundDone for round {round_index}, got {inbound!r}")
        history.append(inbound.corrected)
        if should_terminate(config.break_condition, tuple(history)):
            break
        round_index += 1

    own_fingerprint = frame_fingerprint(frame, config.seed)
    inbound = yield [wire.Finalize(own_fingerprint)]
    if not isinstance(inbound, wire.Finalize):
        raise ProtocolError(f"expected Finalize, got {type(inbound).__name__}")
    if inbound.fingerprint == own_fingerprint:
        status = wire.SessionStatus.SUCCESS
    else:
        status = wire.SessionStatus.FAILURE
    summary = SessionSummary(
        Role.INITIATOR,
        status,
        frame,
        len(history),
        sum(history),
        tuple(history),
        (),
        frozenset(),
        parity_bits,
        own_fingerprint,
    )
    return summary, [wire.Result(status)]


# ---------------------------------------------------------------------------
# responder
# ---------------------------------------------------------------------------


class _Stage(enum.Enum):
    PENDING = "pending"
    PROBING = "probing"
    RUNNING = "running"
    DONE = "done"


class _SearchTask:
    """One candidate block being checked / searched."""

    __slots__ = (
        "round_index",
        "block",
        "stage",
        "regions",
        "state",
        "current_remote",
        "probe_interval",
        "probe_bits",
    )

    def __init__(self, round_index: int, block: Interval):
        self.round_index = round_index
        self.block = block
        self.stage = _Stage.PENDING
        self.regions: deque = deque()
        self.state: Optional[bisect_search.BinarySearchState] = None
        self.current_remote: Optional[int] = None
        self.probe_interval: Optional[Interval] = None
        self.probe_bits = 0

    @property
    def key(self) -> Tuple[int, Interval]:
        return (self.round_index, self.block)


class _Responder:
    """Responder-side state: frame views, stored parities, colored trees."""

    def __init__(self, config: SessionConfig, frame: BitFrame):
        self.config = config
        self.n = config.frame_length
        self.bits = frame.bits.copy()
        self.mappings: Dict[int, np.ndarray] = {}
        self.sources: Dict[int, np.ndarray] = {}
        self.views: Dict[int, np.ndarray] = {}
        self.plans: Dict[int, RoundPlan] = {}
        # Remote (initiator-side) parities by (round, interval): block
        # announcements, channel answers, and values implied by them.
        self.stored: Dict[Tuple[int, Interval], int] = {}
        self.trees: Dict[Tuple[int, Interval], ColoredTree] = {}
        self.history: List[int] = []
        self.corrections: List[CorrectionEvent] = []
        self.compromised: Set[int] = set()
        self.parity_bits = 0
        self.pending_finds: List[Tuple[_SearchTask, int]] = []

    # -- round-view plumbing ------------------------------------------------

    def _open_round(self, round_index: int, plan: RoundPlan) -> None:
        mapping = round_mapping(self.config, round_index)
        sources = np.empty(self.n, dtype=np.int64)
        sources[mapping] = np.arange(self.n, dtype=np.int64)
        self.mappings[round_index] = mapping
        self.sources[round_index] = sources
        self.views[round_index] = self.bits[sources]
        self.plans[round_index] = plan

    def _local_parity(self, round_index: int, lo: int, hi: int) -> int:
        return int(np.bitwise_xor.reduce(self.views[round_index][lo:hi]))

    def _block_of(self, round_index: int, position: int) -> Interval:
        plan = self.plans[round_index]
        return plan.intervals[position // plan.block_size]

    # -- remote parity resolution --------------------------------------------

    def _resolve_remote(
        self, round_index: int, block: Interval, interval: Interval, _active: Optional[set] = None
    ) -> Optional[int]:
        """Look up or derive the initiator's parity of ``interval``.

        Block roots are always available (announced every round).  Other
        intervals resolve from storage, or recursively from a stored
        parent and sibling; every derived value is memoized.  Returns
        ``None`` when the value is not derivable without the channel.
        """
        key = (round_index, interval)
        if key in self.stored:
            return self.stored[key]
        if interval == block:
            return None  # roots are stored eagerly; absence means no value
        if not self.config.parity_reuse:
            return None
        if _active is None:
            _active = set()
        if interval in _active:
            return None
        _active.add(interval)
        # Walk the block's halving lattice down to the interval's parent.
        lo, hi = block
        parent = None
        sibling = None
        while (lo, hi) != interval:
            if hi - lo <= 1:
                return None
            mid = split_point(lo, hi)
            if interval[1] <= mid:
                child, other = (lo, mid), (mid, hi)
            elif interval[0] >= mid:
                child, other = (mid, hi), (lo, mid)
            else:
                return None  # interval straddles the split: off-lattice
            if child == interval:
                parent, sibling = (lo, hi), other
                break
            lo, hi = child
        if parent is None:
            return None
        parent_value = self._resolve_remote(round_index, block, parent, _active)
        if parent_value is None:
            return None
        sibling_value = self._resolve_remote(round_index, block, sibling, _active)
        if sibling_value is None:
            return None
        value = parent_value ^ sibling_value
        self.stored[key] = value
        return value

    def _lookup_for_task(self, task: _SearchTask, interval: Interval) -> Optional[int]:
        if interval == task.block:
            return self.stored.get((task.round_index, interval))
        if not self.config.parity_reuse:
            return None
        return self._resolve_remote(task.round_index, task.block, interval)

    # -- search task lifecycle -----------------------------------------------

    def _begin_search(self, task: _SearchTask, interval: Interval, remote_parity: int) -> None:
        task.state = bisect_search.start(interval[0], interval[1], task.round_index)
        task.current_remote = remote_parity
        task.stage = _Stage.RUNNING
        if task.state.is_found:
            self.pending_finds.append((task, task.state.found))
            task.stage = _Stage.DONE

    def _apply_step(self, task: _SearchTask, remote_first: int, *, from_reuse: bool) -> None:
        state = task.state
        mid = split_point(state.lo, state.hi)
        first = (state.lo, mid)
        second = (mid, state.hi)
        local_first = self._local_parity(task.round_index, *first)
        new_state = bisect_search.step(state, local_first, remote_first, from_reuse=from_reuse)
        # Both halves' remote parities are now knowledge, channelled or not.
        second_remote = task.current_remote ^ remote_first
        self.stored[(task.round_index, first)] = remote_first
        self.stored[(task.round_index, second)] = second_remote
        task.current_remote = remote_first if new_state.hi == mid else second_remote
        task.state = new_state
        if new_state.is_found:
            self.pending_finds.append((task, new_state.found))
            task.stage = _Stage.DONE

    def _advance_task(self, task: _SearchTask) -> Optional[Interval]:
        """Drive a task as far as stored knowledge allows.

        Returns the interval whose remote parity must travel over the
        channel, or ``None`` when the task finished or found its error.
        """
        while True:
            if task.stage is _Stage.DONE:
                return None
            if task.stage is _Stage.PENDING:
                root_remote = self.stored[(task.round_index, task.block)]
                if self._local_parity(task.round_index, *task.block) == root_remote:
                    task.stage = _Stage.DONE
                    return None
                regions: List[Interval] = []
                if self.config.parity_reuse:
                    tree = self.trees[(task.round_index, task.block)]
                    corrected = [
                        node.lo
                        for _, node in iter_nodes(tree)
                        if node.size == 1 and NodeColor.ERROR_LEAF in node.color
                    ]
                    if corrected:
                        regions = list(multi_error_frontier(tree, corrected))
                task.regions = deque(regions)
                task.stage = _Stage.PROBING
            if task.stage is _Stage.PROBING:
                advanced_to_running = False
                while task.regions:
                    region = task.regions[0]
                    value = self._lookup_for_task(task, region)
                    if value is None:
                        task.probe_interval = region
                        return region
                    task.regions.popleft()
                    if self._local_parity(task.round_index, *region) != value:
                        self._begin_search(task, region, value)
                        advanced_to_running = True
                        break
                if not advanced_to_running and task.stage is _Stage.PROBING:
                    # No frontier region disagrees; fall back to the whole
                    # block, whose mismatch was established on entry.
                    root_remote = self.stored[(task.round_index, task.block)]
                    self._begin_search(task, task.block, root_remote)
            if task.stage is _Stage.DONE:
                return None
            if task.stage is _Stage.RUNNING:
                query = bisect_search.pending_query(task.state)
                if query is None:
                    return None
                value = self._lookup_for_task(task, query.interval)
                if value is None:
                    return query.interval
                self._apply_step(task, value, from_reuse=True)

    def _feed_wire(self, task: _SearchTask, interval: Interval, parity: int, learn_round: int) -> None:
        self.stored[(task.round_index, interval)] = parity
        key = (task.round_index, task.block)
        self.trees[key] = set_syndrome(self.trees[key], interval, parity, learn_round)
        if task.stage is _Stage.PROBING:
            if task.probe_interval != interval:
                raise ProtocolError("answer does not match the outstanding probe")
            task.probe_interval = None
            task.probe_bits += 1
            task.regions.popleft()
            if self._local_parity(task.round_index, *interval) != parity:
                self._begin_search(task, interval, parity)
        elif task.stage is _Stage.RUNNING:
            self._apply_step(task, parity, from_reuse=False)
        else:
            raise ProtocolError("parity answer delivered to an idle search")

    # -- corrections -----------------------------------------------------------

    def _apply_flip(self, original_position: int, learn_round: int) -> None:
        self.bits[original_position] ^= 1
        value = int(self.bits[original_position])
        for r_idx in self.mappings:
            pos = int(self.mappings[r_idx][original_position])
            self.views[r_idx][pos] ^= 1
            block = self._block_of(r_idx, pos)
            key = (r_idx, block)
            tree = mark_error_leaf(self.trees[key], pos)
            tree = mark_compromised(tree, pos)
            tree = set_syndrome(tree, (pos, pos + 1), value, learn_round)
            self.trees[key] = tree
            self.stored[(r_idx, (pos, pos + 1))] = value
        self.compromised.add(original_position)

    # -- the round wave loop -----------------------------------------------------

    def run_round(self, round_index: int, block_msg) -> Iterator:
        """Process one round; a generator to be driven with ``yield from``.

        Yields single-message lists (queries, then the round closure) and
        finally returns the message that arrived after RoundDone.
        """
        if not isinstance(block_msg, wire.BlockParities):
            raise ProtocolError(f"expected BlockParities, got {type(block_msg).__name__}")
        if block_msg.round_index != round_index:
            raise ProtocolError(
                f"expected parities for round {round_index}, got round {block_msg.round_index}"
            )
        plan = plan_round(self.config.schedule, round_index, self.n, tuple(self.history))
        if len(block_msg.parities) != len(plan.intervals):
            raise ProtocolError(
                f"expected {len(plan.intervals)} block parities, got {len(block_msg.parities)}"
            )
        self._open_round(round_index, plan)
        self.parity_bits += len(block_msg.parities)
        for interval, bit in zip(plan.intervals, block_msg.parities):
            key = (round_index, interval)
            self.stored[key] = bit
            self.trees[key] = set_syndrome(
                build_tree(interval[0], interval[1], round_index), interval, bit, round_index
            )

        tasks: List[_SearchTask] = [_SearchTask(round_index, iv) for iv in plan.intervals]
        # Candidate blocks that already had a live search when they were
        # (re-)queued; they get a fresh parity check once that search ends.
        deferred: Set[Tuple[int, Interval]] = set()
        corrected_this_round = 0
        waves = 0
        while any(task.stage is not _Stage.DONE for task in tasks) or deferred:
            waves += 1
            if waves > self.n + 8:
                raise ProtocolError("internal: cascade wave cap exceeded")

            live_keys = {task.key for task in tasks if task.stage is not _Stage.DONE}
            for key in sorted(deferred):
                if key not in live_keys:
                    tasks.append(_SearchTask(key[0], key[1]))
                    live_keys.add(key)
                    deferred.discard(key)

            needs: List[Tuple[_SearchTask, Interval]] = []
            for task in tasks:
                if task.stage is _Stage.DONE:
                    continue
                need = self._advance_task(task)
                if need is not None:
                    needs.append((task, need))

            if needs:
                if self.config.aggregation:
                    by_round: Dict[int, List[Tuple[_SearchTask, Interval]]] = {}
                    for task, interval in needs:
                        by_round.setdefault(task.round_index, []).append((task, interval))
                    for r_key in sorted(by_round):
                        group = by_round[r_key]
                        intervals = tuple(interval for _, interval in group)
                        reply = yield [wire.ParityQuery(r_key, intervals)]
                        entries = self._checked_entries(reply, r_key, intervals)
                        for (task, interval), (_, _, parity) in zip(group, entries):
                            self.parity_bits += 1
                            self._feed_wire(task, interval, parity, round_index)
                else:
                    for task, interval in needs:
                        reply = yield [wire.ParityQuery(task.round_index, (interval,))]
                        entries = self._checked_entries(reply, task.round_index, (interval,))
                        self.parity_bits += 1
                        self._feed_wire(task, interval, entries[0][2], round_index)

            if self.pending_finds:
                flips: List[Tuple[int, _SearchTask]] = []
                seen: Set[int] = set()
                for task, found_pos in self.pending_finds:
                    original = int(self.sources[task.round_index][found_pos])
                    if original in seen:
                        continue
                    seen.add(original)
                    flips.append((original, task))
                    self.corrections.append(
                        CorrectionEvent(
                            corrected_round=round_index,
                            block_round=task.round_index,
                            original_position=original,
                            block_position=found_pos,
                            disclosed_bits=task.probe_bits + task.state.disclosed,
                        )
                    )
                self.pending_finds.clear()
                for original, _ in flips:
                    self._apply_flip(original, round_index)
                    corrected_this_round += 1

                candidates: Set[Tuple[int, Interval]] = set()
                # Cascade: every earlier round's block containing a flip.
                for original, _ in flips:
                    for r_prev in range(round_index):
                        pos_prev = int(self.mappings[r_prev][original])
                        candidates.add((r_prev, self._block_of(r_prev, pos_prev)))
                # Abort-on-touch: invalidate searches whose working state a
                # flip just contradicted, and re-queue their blocks.
                for other in tasks:
                    if other.stage in (_Stage.DONE, _Stage.PENDING):
                        continue
                    for original, _ in flips:
                        pos_here = int(self.mappings[other.round_index][original])
                        if not other.block[0] <= pos_here < other.block[1]:
                            continue
                        if other.stage is _Stage.RUNNING:
                            if not other.state.lo <= pos_here < other.state.hi:
                                continue
                        other.stage = _Stage.DONE
                        candidates.add(other.key)
                        break

                live_keys = {task.key for task in tasks if task.stage is not _Stage.DONE}
                for cand_key in sorted(candidates):
                    if cand_key in live_keys:
                        # A search is mid-flight on this block; re-check the
                        # block once that search has finished.
                        deferred.add(cand_key)
                        continue
                    tasks.append(_SearchTask(cand_key[0], cand_key[1]))
                    live_keys.add(cand_key)

        self.history.append(corrected_this_round)
        reply = yield [wire.RoundDone(round_index, corrected_this_round)]
        return reply

    @staticmethod
    def _checked_entries(reply, round_index: int, intervals: Tuple[Interval, ...]):
        if not isinstance(reply, wire.ParityAnswer):
            raise ProtocolError(f"expected ParityAnswer, got {type(reply).__name__}")
        if reply.round_index != round_index:
            raise ProtocolError(
                f"answer references round {reply.round_index}, expected {round_index}"
            )
        if len(reply.entries) != len(intervals):
            raise ProtocolError(
                f"expected {len(intervals)} answer entries, got {len(reply.entries)}"
            )
        for (lo, hi, parity), (want_lo, want_hi) in zip(reply.entries, intervals):
            if (lo, hi) != (want_lo, want_hi):
                raise ProtocolError(
                    f"answer interval [{lo}, {hi}) does not match query [{want_lo}, {want_hi})"
                )
        return reply.entries


def responder_session(config: SessionConfig, frame: BitFrame):
    """Generator for party B; same driving contract as the initiator."""
    if len(frame) != config.frame_length:
        raise ConfigurationError(
            f"frame length {len(frame)} does not match configured {config.frame_length}"
        )
    core = _Responder(config, frame)
    my_init = _init_from_config(config)

    inbound = yield []
    if not isinstance(inbound, wire.Init):
        raise ProtocolError(f"expected Init, got {type(inbound).__name__}")
    if inbound != my_init:
        summary = SessionSummary(
            Role.RESPONDER,
            wire.SessionStatus.CONFIG_MISMATCH,
            frame,
            0,
            0,
            (),
            (),
            frozenset(),
            0,
            None,
        )
        return summary, [wire.Result(wire.SessionStatus.CONFIG_MISMATCH)]
    inbound = yield [my_init]

    round_index = 0
    while True:
        if isinstance(inbound, wire.Result):
            # Initiator aborted the handshake from its side.
            summary = SessionSummary(
                Role.RESPONDER,
                inbound.status,
                frame,
                0,
                0,
                (),
                (),
                frozenset(),
                core.parity_bits,
                None,
            )
            return summary, []
        inbound = yield from core.run_round(round_index, inbound)
        if should_terminate(config.break_condition, tuple(core.history)):
            break
        round_index += 1

    if not isinstance(inbound, wire.Finalize):
        raise ProtocolError(f"expected Finalize, got {type(inbound).__name__}")
    final_frame = BitFrame(core.bits)
    own_fingerprint = frame_fingerprint(final_frame, config.seed)
    expected = (
        wire.SessionStatus.SUCCESS
        if inbound.fingerprint == own_fingerprint
        else wire.SessionStatus.FAILURE
    )
    inbound = yield [wire.Finalize(own_fingerprint)]
    if not isinstance(inbound, wire.Result):
        raise ProtocolError(f"expected Result, got {type(inbound).__name__}")
    if inbound.status != expected:
        raise ProtocolError(
            f"verdict {inbound.status.value} contradicts fingerprint comparison"
        )
    summary = SessionSummary(
        Role.RESPONDER,
        inbound.status,
        final_frame,
        len(core.history),
        sum(core.history),
        tuple(core.history),
        tuple(core.corrections),
        frozenset(core.compromised),
        core.parity_bits,
        own_fingerprint,
    )
    return summary, []


# ---------------------------------------------------------------------------
# drivers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PairResult:
    """Both summaries plus the channel they talked over."""

    initiator: SessionSummary
    responder: SessionSummary
    channel: wire.Channel


_OUT_DIRECTION = {Role.INITIATOR: wire.Direction.A_TO_B, Role.RESPONDER: wire.Direction.B_TO_A}
_IN_DIRECTION = {Role.INITIATOR: wire.Direction.B_TO_A, Role.RESPONDER: wire.Direction.A_TO_B}


def _drive_lockstep(generators, channel_obj: wire.Channel):
    summaries = {}

    def emit(role: Role, messages) -> None:
        for message in messages:
            channel_obj.send(_OUT_DIRECTION[role], message)

    for role in (Role.INITIATOR, Role.RESPONDER):
        emit(role, next(generators[role]))

    while len(summaries) < 2:
        progressed = False
        for role in (Role.RESPONDER, Role.INITIATOR):
            if role in summaries:
                continue
            if channel_obj.pending(_IN_DIRECTION[role]) == 0:
                continue
            message = channel_obj.recv(_IN_DIRECTION[role])
            try:
                outbound = generators[role].send(message)
            except StopIteration as stop:
                summary, finals = stop.value
                emit(role, finals)
                summaries[role] = summary
            else:
                emit(role, outbound)
            progressed = True
        if not progressed:
            raise ProtocolError("protocol deadlock: no message in flight")
    return summaries


def _drive_threaded(generators, channel_obj: wire.Channel, timeout: float):
    summaries = {}
    failures = {}

    def worker(role: Role) -> None:
        generator = generators[role]
        try:
            for message in next(generator):
                channel_obj.send(_OUT_DIRECTION[role], message)
            while True:
                message = channel_obj.recv(_IN_DIRECTION[role], timeout=timeout)
                try:
                    outbound = generator.send(message)
                except StopIteration as stop:
                    summary, finals = stop.value
                    for final in finals:
                        channel_obj.send(_OUT_DIRECTION[role], final)
                    summaries[role] = summary
                    return
                for out in outbound:
                    channel_obj.send(_OUT_DIRECTION[role], out)
        except BaseException as exc:  # noqa: BLE001 - reported to the caller
            failures[role] = exc

    threads = [
        threading.Thread(target=worker, args=(role,), daemon=True)
        for role in (Role.INITIATOR, Role.RESPONDER)
    ]
    for thread in threads:
        thread.start()
    for thread in threads:
        thread.join(timeout=timeout * 4)
        if thread.is_alive():
            raise TransportError("session thread failed to finish in time")
    for role in (Role.INITIATOR, Role.RESPONDER):
        if role in failures:
            raise failures[role]
    return summaries


def run_session_pair(
    config_a: SessionConfig,
    config_b: SessionConfig,
    frame_a: BitFrame,
    frame_b: BitFrame,
    *,
    channel_obj: Optional[wire.Channel] = None,
    scheduling: str = "lockstep",
    timeout: float = 30.0,
) -> PairResult:
    """Run a full session between fresh party generators.

    ``scheduling`` selects the driver: "lockstep" single-steps both parties
    on the calling thread; "threaded" gives each its own thread.  The
    half-duplex protocol makes both produce identical transcripts.
    """
    if channel_obj is None:
        channel_obj = wire.Channel()
    generators = {
        Role.INITIATOR: initiator_session(config_a, frame_a),
        Role.RESPONDER: responder_session(config_b, frame_b),
    }
    if scheduling == "lockstep":
        summaries = _drive_lockstep(generators, channel_obj)
    elif scheduling == "threaded":
        summaries = _drive_threaded(generators, channel_obj, timeout)
    else:
        raise ConfigurationError(f"unknown scheduling mode: {scheduling!r}")
    channel_obj.close()
    return PairResult(summaries[Role.INITIATOR], summaries[Role.RESPONDER], channel_obj)
