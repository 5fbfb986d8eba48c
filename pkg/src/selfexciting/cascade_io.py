"""CSV ingestion and emission for cascades and intensity traces.

The cascade dialect is a UTF-8 CSV with header ``time,magnitude`` (plus an
optional ``parent`` column carrying the triggering event's row index), LF
or CRLF line endings, and ``.`` as the decimal separator.  Numbers are
written in Python's shortest round-trippable decimal form (at most 17
significant digits), so ``parse_cascade(write_events(s))`` reproduces the
sequence bit for bit.
"""

from __future__ import annotations

import csv
import io
import math
from contextlib import contextmanager
from typing import Optional

import numpy as np

from .process import (
    Event,
    EventSequence,
    HawkesModel,
    intensity_at,
    intensity_right_limit,
)

__all__ = [
    "CascadeFormatError",
    "CascadeValidationError",
    "parse_cascade",
    "write_events",
    "write_intensity_trace",
]

TIE_NUDGE = 1e-6  # seconds added to the later of two equal timestamps


class CascadeFormatError(ValueError):
    """The input is not structurally a cascade CSV (header, fields, numbers)."""


class CascadeValidationError(ValueError):
    """A structurally valid row violates a cascade invariant."""


@contextmanager
def _open_text(source, mode: str):
    if hasattr(source, "read") or hasattr(source, "write"):
        yield source
    else:
        with open(source, mode, encoding="utf-8", newline="") as handle:
            yield handle


def _fmt(x: float) -> str:
    return repr(float(x))


def parse_cascade(
    source,
    observation_end: Optional[float] = None,
    tie_policy: str = "reject",
    require_immigrant: bool = False,
    column_map: Optional[dict] = None,
) -> EventSequence:
    """Read and validate a cascade CSV into an :class:`EventSequence`.

    Parameters
    ----------
    source : path or text stream
    observation_end : float, optional
        Horizon override.  Events after it are dropped (the same file can
        be fitted at several observation windows); default is the last
        event time.
    tie_policy : "reject" or "perturb"
        Equal consecutive timestamps are an error by default; "perturb"
        shifts the later one forward by 1e-6 s, deterministically.
    require_immigrant : bool
        Enforce the cascade convention that the first event is at t = 0.
    column_map : dict, optional
        Renames input columns, e.g. ``{"time": "ts"}`` reads the ``ts``
        column as the event time.  Unmapped extra columns are ignored.

    Raises
    ------
    CascadeFormatError
        Missing or short header, unparsable numbers; carries the line number.
    CascadeValidationError
        Invariant violations (negative time, magnitude < 1, non-monotone
        or duplicate times under "reject"), naming the offending row.
    """
    if tie_policy not in ("reject", "perturb"):
        raise ValueError(f"unknown tie policy: {tie_policy!r}")
    names = {"time": "time", "magnitude": "magnitude", "parent": "parent"}
    if column_map:
        names.update(column_map)

    with _open_text(source, "r") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise CascadeFormatError("line 1: empty input, expected a header row")
        header = [h.strip() for h in header]
        try:
            time_col = header.index(names["time"])
            mag_col = header.index(names["magnitude"])
        except ValueError:
            raise CascadeFormatError(
                f"line 1: header must contain columns "
                f"'{names['time']}' and '{names['magnitude']}', got {header}"
            )
        parent_col = header.index(names["parent"]) if names["parent"] in header else None

        events: list[Event] = []
        last_raw: Optional[float] = None
        last_eff: Optional[float] = None
        for row_index, row in enumerate(reader, start=1):
            line = reader.line_num
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) <= max(time_col, mag_col):
                raise CascadeFormatError(f"line {line}: row {row_index} has too few fields")
            try:
                t = float(row[time_col])
                magnitude = float(row[mag_col])
            except ValueError:
                raise CascadeFormatError(
                    f"line {line}: row {row_index} has non-numeric time or magnitude"
                )
            if not math.isfinite(t) or t < 0.0:
                raise CascadeValidationError(
                    f"row {row_index}: time must be finite and >= 0, got {row[time_col]}"
                )
            if not math.isfinite(magnitude) or magnitude < 1.0:
                raise CascadeValidationError(
                    f"row {row_index}: magnitude must be >= 1, got {row[mag_col]}"
                )
            parent: Optional[int] = None
            if parent_col is not None and len(row) > parent_col and row[parent_col].strip():
                try:
                    parent = int(row[parent_col])
                except ValueError:
                    raise CascadeFormatError(
                        f"line {line}: row {row_index} has a non-integer parent index"
                    )
                if not 0 <= parent < len(events):
                    raise CascadeValidationError(
                        f"row {row_index}: parent index {parent} does not point "
                        "at an earlier row"
                    )

            effective = t
            if last_raw is not None:
                if t < last_raw:
                    raise CascadeValidationError(
                        f"row {row_index}: time {t} goes backwards (previous {last_raw})"
                    )
                if t == last_raw:
                    if tie_policy == "reject":
                        raise CascadeValidationError(
                            f"row {row_index}: duplicate timestamp {t} "
                            "(use the perturb tie policy to resolve)"
                        )
                    effective = last_eff + TIE_NUDGE
                elif effective <= last_eff:
                    raise CascadeValidationError(
                        f"row {row_index}: time {t} collides with an earlier "
                        "perturbed timestamp"
                    )
            events.append(Event(time=effective, mark=magnitude, parent_index=parent))
            last_raw, last_eff = t, effective

    if observation_end is not None:
        if observation_end < 0.0:
            raise ValueError("observation_end must be >= 0")
        events = [e for e in events if e.time <= observation_end]
    if not events:
        raise CascadeValidationError(
            "cascade is empty; a cascade must contain its immigrant"
        )
    if require_immigrant and events[0].time != 0.0:
        raise CascadeValidationError(
            f"row 1: cascade convention requires the first event at t = 0, "
            f"got {events[0].time}"
        )
    end = observation_end if observation_end is not None else events[-1].time
    return EventSequence(tuple(events), float(end))


def write_events(seq: EventSequence, sink) -> None:
    """Write a sequence in the cascade CSV dialect (round-trip exact).

    A ``parent`` column is emitted only when some event carries one.
    """
    has_parents = any(e.parent_index is not None for e in seq.events)
    with _open_text(sink, "w") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        if has_parents:
            writer.writerow(["time", "magnitude", "parent"])
            for e in seq.events:
                parent = "" if e.parent_index is None else str(e.parent_index)
                writer.writerow([_fmt(e.time), _fmt(e.mark), parent])
        else:
            writer.writerow(["time", "magnitude"])
            for e in seq.events:
                writer.writerow([_fmt(e.time), _fmt(e.mark)])


def write_intensity_trace(
    model: HawkesModel,
    seq: EventSequence,
    t0: float,
    t1: float,
    step: float,
    sink,
) -> None:
    """Sample the intensity on a grid and write ``t,lambda`` rows.

    Every event inside [t0, t1] contributes two extra rows at its exact
    time: the left and right limits, so the jump renders faithfully.  Grid
    points that coincide with an event time are dropped in favor of that
    pair.
    """
    if step <= 0.0:
        raise ValueError("step must be > 0")
    if t0 < 0.0 or t1 < t0:
        raise ValueError("need 0 <= t0 <= t1")

    count = int(math.floor((t1 - t0) / step + 1e-12)) + 1
    grid = [t0 + k * step for k in range(count)]
    event_times = {float(e.time) for e in seq.events if t0 <= e.time <= t1}

    rows: list[tuple[float, int, float]] = []  # (time, order, value)
    for t in grid:
        if t in event_times:
            continue
        rows.append((t, 0, intensity_at(model, seq, t)))
    for e in seq.events:
        t = float(e.time)
        if t0 <= t <= t1:
            rows.append((t, 0, intensity_at(model, seq, t)))
            rows.append((t, 1, intensity_right_limit(model, seq, t)))
    rows.sort(key=lambda r: (r[0], r[1]))

    with _open_text(sink, "w") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["t", "lambda"])
        for t, _, value in rows:
            writer.writerow([_fmt(t), _fmt(value)])
