"""
Generation Trace
Event recorder, session clocks and trace JSONL files
"""

import time
from typing import Iterable, List, Optional

from app.schemas.models import EventKind, GenerationTrace, TraceEvent, TraceTotals
from app.utils.helpers import iter_jsonl, write_jsonl


class MonotonicClock:
    def now_ms(self) -> int:
        return int(time.monotonic() * 1000)


class LogicalClock:
    """Advances one millisecond per reading; makes timing fields reproducible"""

    def __init__(self):
        self._ticks = 0

    def now_ms(self) -> int:
        value = self._ticks
        self._ticks += 1
        return value


def make_clock(kind: str):
    return LogicalClock() if kind == "logical" else MonotonicClock()


class TraceRecorder:
    """Collects events with session-relative timestamps"""

    def __init__(self, clock=None):
        self.clock = clock or MonotonicClock()
        self.started_ms = self.clock.now_ms()
        self.events: List[TraceEvent] = []

    def emit(
        self,
        kind: EventKind,
        line_index: int,
        attempt_index: int,
        score: Optional[float] = None,
        token_id: Optional[int] = None,
        tokens_delta: int = 0,
    ) -> TraceEvent:
        event = TraceEvent(
            kind=kind,
            line_index=line_index,
            attempt_index=attempt_index,
            score=score,
            token_id=token_id,
            tokens_delta=tokens_delta,
            wall_ms=self.clock.now_ms() - self.started_ms,
        )
        self.events.append(event)
        return event

    def build(self) -> GenerationTrace:
        totals = TraceTotals(
            tokens=sum(event.tokens_delta for event in self.events),
            wall_ms=self.events[-1].wall_ms if self.events else 0,
            rollbacks=sum(1 for event in self.events if event.kind == EventKind.ROLLBACK),
        )
        return GenerationTrace(events=list(self.events), totals=totals)


def trace_records(trace: GenerationTrace) -> Iterable[dict]:
    for event in trace.events:
        yield event.to_record()
    yield {"totals": trace.totals.model_dump()}


def write_trace(path: str, trace: GenerationTrace) -> int:
    """One event per line, then the totals record"""
    return write_jsonl(path, trace_records(trace))


def read_trace(path: str) -> GenerationTrace:
    events: List[TraceEvent] = []
    totals = TraceTotals()
    for record in iter_jsonl(path):
        if "totals" in record:
            totals = TraceTotals.model_validate(record["totals"])
        else:
            events.append(TraceEvent.model_validate(record))
    return GenerationTrace(events=events, totals=totals)
