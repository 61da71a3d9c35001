"""Experiment harness: seeded trials, parameter sweeps, record export.

A trial builds a random reference frame, pushes it through a noise model,
runs a full reconciliation session over an observed channel, and distills
the outcome into one flat :class:`TrialRecord`.  Sweeps fan trials out over
a parameter grid with per-trial seeds derived from one base seed, so any
record can be reproduced in isolation.  Every trial cross-checks disclosure
accounting three ways (engine counters, transcript, eavesdropper tap) and
refuses to produce a record if they disagree.
"""

from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
from typing import Callable, List, Optional, Sequence, Tuple, Union

from .bitframe import BitFrame, Bsc, FixedErrors, apply_noise, hamming_distance
from .channel import Channel, EveTap, SessionStatus, leakage_report
from .engine import PairResult, SessionConfig, run_session_pair
from .errors import ConfigurationError, ProtocolError
from .rng import SeededRng, label_from_text
from .schedule import (
    BreakCondition,
    DynamicSchedule,
    FixedRoundsBreak,
    ScheduleConfig,
    StaticSchedule,
)

NoiseSpec = Union[Bsc, FixedErrors]

_FRAME_LABEL = label_from_text("trial-frame-seed")
_NOISE_LABEL = label_from_text("trial-noise-seed")
_SESSION_LABEL = label_from_text("trial-session-seed")


@dataclass(frozen=True)
class SessionTemplate:
    """Reusable session policy; per-trial parameters get filled in later.

    ``qber_estimate`` pins the schedule's error-rate estimate; when left
    ``None`` each trial estimates from its own noise model (the nominal
    flip probability, or injected-count / length for counted noise).
    """

    schedule_variant: str = "static"  # "static" | "dynamic"
    growth_factor: int = 2
    break_condition: BreakCondition = FixedRoundsBreak(4)
    permutation_kind: str = "lcg"
    aggregation: bool = False
    parity_reuse: bool = True
    qber_estimate: Optional[float] = None

    def __post_init__(self) -> None:
        if self.schedule_variant not in ("static", "dynamic"):
            raise ConfigurationError(
                f"schedule_variant must be 'static' or 'dynamic', got {self.schedule_variant!r}"
            )

    def schedule_for(self, length: int, true_rate: float) -> ScheduleConfig:
        estimate = self.qber_estimate if self.qber_estimate is not None else true_rate
        estimate = min(0.5, max(estimate, 1.0 / length))
        if self.schedule_variant == "static":
            return StaticSchedule(estimate, self.growth_factor)
        return DynamicSchedule(estimate)

    def config_for(
        self, length: int, true_rate: float, seed: int, *, aggregation: Optional[bool] = None
    ) -> SessionConfig:
        return SessionConfig(
            frame_length=length,
            schedule=self.schedule_for(length, true_rate),
            break_condition=self.break_condition,
            permutation_kind=self.permutation_kind,
            seed=seed,
            aggregation=self.aggregation if aggregation is None else aggregation,
            parity_reuse=self.parity_reuse,
        )


@dataclass(frozen=True)
class TrialRecord:
    """Flat, exportable outcome of one reconciliation trial."""

    scenario_id: str
    trial_index: int
    seed: int
    length: int
    qber_true: float
    qber_estimate: float
    injected_errors: int
    rounds_executed: int
    corrected_errors: int
    residual_errors: int
    parity_bits_disclosed: int
    parity_fraction: float
    messages_sent: int
    messages_baseline: Optional[int]
    success: bool
    wall_time: float


@dataclass(frozen=True)
class TrialDetail:
    """A record plus the raw artifacts it was distilled from."""

    record: TrialRecord
    result: PairResult
    eavesdropper: EveTap
    reference_frame: BitFrame
    noisy_frame: BitFrame


@dataclass(frozen=True)
class PairedOutcome:
    """One seed run twice: query batching off, then on."""

    unbatched: TrialRecord
    batched: TrialRecord
    frames_identical: bool


@dataclass(frozen=True)
class QberSweep:
    """Grid over channel error rates at fixed frame length."""

    start: float = 0.005
    step: float = 0.005
    steps: int = 60
    length: int = 4096
    repeats: int = 3

    def points(self) -> List[float]:
        return [self.start + self.step * i for i in range(self.steps)]


@dataclass(frozen=True)
class LengthSweep:
    """Grid over frame lengths with a fixed number of injected errors."""

    start: int = 512
    step: int = 512
    stop: int = 20480
    fixed_errors: int = 10
    repeats: int = 3

    def points(self) -> List[int]:
        return list(range(self.start, self.stop + 1, self.step))


def _true_rate(noise: NoiseSpec, length: int) -> float:
    if isinstance(noise, Bsc):
        return noise.qber
    return noise.count / length


def run_trial_detailed(
    template: SessionTemplate,
    length: int,
    noise: NoiseSpec,
    seed: int,
    *,
    scenario_id: str = "adhoc",
    trial_index: int = 0,
    scheduling: str = "lockstep",
    aggregation: Optional[bool] = None,
    messages_baseline: Optional[int] = None,
) -> TrialDetail:
    """Run one full trial and keep the raw session artifacts around."""
    root = SeededRng(seed)
    frame_seed = root.derive(_FRAME_LABEL).next_u64()
    noise_seed = root.derive(_NOISE_LABEL).next_u64()
    session_seed = root.derive(_SESSION_LABEL).next_u64()

    reference = BitFrame.random(length, frame_seed)
    noisy, injected = apply_noise(reference, noise, noise_seed)
    rate = _true_rate(noise, length)
    config = template.config_for(length, rate, session_seed, aggregation=aggregation)

    eve = EveTap()
    channel_obj = Channel(taps=(eve,))
    started = time.perf_counter()
    result = run_session_pair(
        config, config, reference, noisy, channel_obj=channel_obj, scheduling=scheduling
    )
    wall_time = time.perf_counter() - started

    report = leakage_report(result.channel.transcript)
    engine_bits_a = result.initiator.parity_bits_disclosed
    engine_bits_b = result.responder.parity_bits_disclosed
    if not (engine_bits_a == engine_bits_b == report.parity_bits_disclosed == eve.parity_bits_seen):
        raise ProtocolError(
            "disclosure accounting diverged: "
            f"initiator={engine_bits_a} responder={engine_bits_b} "
            f"transcript={report.parity_bits_disclosed} eavesdropper={eve.parity_bits_seen}"
        )

    residual = hamming_distance(reference, result.responder.final_frame)
    success = (
        result.initiator.status is SessionStatus.SUCCESS
        and result.responder.status is SessionStatus.SUCCESS
    )
    record = TrialRecord(
        scenario_id=scenario_id,
        trial_index=trial_index,
        seed=seed,
        length=length,
        qber_true=rate,
        qber_estimate=config.schedule.qber_estimate,
        injected_errors=injected,
        rounds_executed=result.responder.rounds_executed,
        corrected_errors=result.responder.corrected_total,
        residual_errors=residual,
        parity_bits_disclosed=engine_bits_b,
        parity_fraction=engine_bits_b / length,
        messages_sent=report.messages_total,
        messages_baseline=messages_baseline,
        success=success,
        wall_time=wall_time,
    )
    return TrialDetail(record, result, eve, reference, noisy)


def run_trial(
    template: SessionTemplate,
    length: int,
    noise: NoiseSpec,
    seed: int,
    *,
    scenario_id: str = "adhoc",
    trial_index: int = 0,
    scheduling: str = "lockstep",
) -> TrialRecord:
    """Run one trial and return just its record."""
    return run_trial_detailed(
        template,
        length,
        noise,
        seed,
        scenario_id=scenario_id,
        trial_index=trial_index,
        scheduling=scheduling,
    ).record


def run_paired_trial(
    template: SessionTemplate,
    length: int,
    noise: NoiseSpec,
    seed: int,
    *,
    scenario_id: str = "paired",
    trial_index: int = 0,
) -> PairedOutcome:
    """Run the identical trial with query batching off, then on.

    The batched record carries the unbatched message count in
    ``messages_baseline`` so reductions can be read off one row.
    """
    off = run_trial_detailed(
        template,
        length,
        noise,
        seed,
        scenario_id=scenario_id,
        trial_index=trial_index,
        aggregation=False,
    )
    on = run_trial_detailed(
        template,
        length,
        noise,
        seed,
        scenario_id=scenario_id,
        trial_index=trial_index,
        aggregation=True,
        messages_baseline=off.record.messages_sent,
    )
    identical = off.result.responder.final_frame == on.result.responder.final_frame
    return PairedOutcome(off.record, on.record, identical)


def _fan_out(jobs: Sequence[Callable[[], object]], workers: int) -> List[object]:
    if workers <= 1:
        return [job() for job in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(job) for job in jobs]
        return [future.result() for future in futures]


def sweep_qber(
    template: SessionTemplate,
    sweep: QberSweep = QberSweep(),
    *,
    base_seed: int = 1,
    workers: int = 1,
) -> List[TrialRecord]:
    """Run the error-rate sweep; records come back in grid order."""
    root = SeededRng(base_seed)
    sweep_label = label_from_text("qber-sweep")
    jobs = []
    for point_index, qber in enumerate(sweep.points()):
        for repeat in range(sweep.repeats):
            seed = root.derive(sweep_label, point_index, repeat).next_u64()
            scenario = f"qber={qber:.6g}/len={sweep.length}"
            jobs.append(
                lambda q=qber, s=seed, sc=scenario, r=repeat: run_trial(
                    template, sweep.length, Bsc(q), s, scenario_id=sc, trial_index=r
                )
            )
    return _fan_out(jobs, workers)


def sweep_length(
    template: SessionTemplate,
    sweep: LengthSweep = LengthSweep(),
    *,
    base_seed: int = 1,
    workers: int = 1,
) -> List[TrialRecord]:
    """Run the frame-length sweep; records come back in grid order."""
    root = SeededRng(base_seed)
    sweep_label = label_from_text("length-sweep")
    jobs = []
    for point_index, length in enumerate(sweep.points()):
        for repeat in range(sweep.repeats):
            seed = root.derive(sweep_label, point_index, repeat).next_u64()
            scenario = f"len={length}/errors={sweep.fixed_errors}"
            jobs.append(
                lambda n=length, s=seed, sc=scenario, r=repeat: run_trial(
                    template, n, FixedErrors(sweep.fixed_errors), s, scenario_id=sc, trial_index=r
                )
            )
    return _fan_out(jobs, workers)


def compare_aggregation(
    template: SessionTemplate,
    sweep: LengthSweep = LengthSweep(),
    *,
    base_seed: int = 1,
    workers: int = 1,
) -> List[PairedOutcome]:
    """Paired batching-off/batching-on runs across the length sweep."""
    root = SeededRng(base_seed)
    sweep_label = label_from_text("aggregation-compare")
    jobs = []
    for point_index, length in enumerate(sweep.points()):
        for repeat in range(sweep.repeats):
            seed = root.derive(sweep_label, point_index, repeat).next_u64()
            scenario = f"paired/len={length}"
            jobs.append(
                lambda n=length, s=seed, sc=scenario, r=repeat: run_paired_trial(
                    template, n, FixedErrors(sweep.fixed_errors), s, scenario_id=sc, trial_index=r
                )
            )
    return _fan_out(jobs, workers)


# ---------------------------------------------------------------------------
# record export / import
# ---------------------------------------------------------------------------

_FIELDS = [f.name for f in fields(TrialRecord)]
_INT_FIELDS = {
    "trial_index",
    "seed",
    "length",
    "injected_errors",
    "rounds_executed",
    "corrected_errors",
    "residual_errors",
    "parity_bits_disclosed",
    "messages_sent",
}
_FLOAT_FIELDS = {"qber_true", "qber_estimate", "parity_fraction", "wall_time"}


def export_records(records: Sequence[TrialRecord], path: str, fmt: str = "csv") -> None:
    """Write records to ``path`` as CSV (with header) or JSON lines."""
    if fmt == "csv":
        with open(path, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(_FIELDS)
            for record in records:
                row = []
                for name in _FIELDS:
                    value = getattr(record, name)
                    if value is None:
                        row.append("")
                    elif isinstance(value, bool):
                        row.append("true" if value else "false")
                    else:
                        row.append(repr(value) if isinstance(value, float) else str(value))
                writer.writerow(row)
    elif fmt == "jsonl":
        with open(path, "w") as handle:
            for record in records:
                handle.write(json.dumps(asdict(record)) + "\n")
    else:
        raise ConfigurationError(f"unknown export format: {fmt!r}")


def load_records(path: str, fmt: Optional[str] = None) -> List[TrialRecord]:
    """Read records back from a file produced by :func:`export_records`."""
    if fmt is None:
        fmt = "jsonl" if path.endswith(".jsonl") else "csv"
    records: List[TrialRecord] = []
    if fmt == "csv":
        with open(path, newline="") as handle:
            reader = csv.DictReader(handle)
            for row in reader:
                values = {}
                for name in _FIELDS:
                    raw = row[name]
                    if name == "messages_baseline":
                        values[name] = int(raw) if raw else None
                    elif name in _INT_FIELDS:
                        values[name] = int(raw)
                    elif name in _FLOAT_FIELDS:
                        values[name] = float(raw)
                    elif name == "success":
                        values[name] = raw == "true"
                    else:
                        values[name] = raw
                records.append(TrialRecord(**values))
    elif fmt == "jsonl":
        with open(path) as handle:
            for line in handle:
                if line.strip():
                    records.append(TrialRecord(**json.loads(line)))
    else:
        raise ConfigurationError(f"unknown export format: {fmt!r}")
    return records
