"""Parsing of device RR-interval exports into a canonical :class:`RRSeries`.

Two on-disk formats are understood:

* Empatica E4 ``IBI.csv``: the first line holds the session start as a unix
  epoch (optionally followed by the literal column tag ``IBI``); every other
  line is ``offset_seconds,ibi_seconds``.
* The generic interchange format used for Gear S/S2 exports and synthetic
  data: one header line ``subject=<id>,device=<kind>[,start=<epoch>]``
  followed by ``t_seconds,rr_ms`` rows.

Internally ``t`` is in seconds and ``rr`` in milliseconds.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import NamedTuple, Union

import numpy as np

from .errors import EmptyInputError, ParseError, UnknownDeviceError, ValidationError

BytesLike = Union[bytes, str]


class DeviceKind(enum.Enum):
    EMPATICA_E4 = "EmpaticaE4"
    GEAR_S = "GearS"
    GEAR_S2 = "GearS2"
    GENERIC = "Generic"

    @classmethod
    def from_token(cls, token: str) -> "DeviceKind":
        for kind in cls:
            if kind.value == token:
                return kind
        known = ", ".join(k.value for k in cls)
        raise UnknownDeviceError(f"unknown device {token!r} (expected one of {known})")

    @property
    def short_name(self) -> str:
        return _SHORT_NAMES[self]


_SHORT_NAMES = {
    DeviceKind.EMPATICA_E4: "E4",
    DeviceKind.GEAR_S: "Gear S",
    DeviceKind.GEAR_S2: "Gear S2",
    DeviceKind.GENERIC: "Generic",
}


class RRSample(NamedTuple):
    t: float
    rr: float


@dataclass(frozen=True, eq=False)
class RRSeries:
    """One recording session of inter-beat intervals.

    ``t`` (seconds since session start) and ``rr`` (milliseconds) are parallel
    float64 arrays. Instances are validated on construction.
    """

    subject_id: str
    device: DeviceKind
    session_start: float
    t: np.ndarray
    rr: np.ndarray

    def __post_init__(self):
        t = np.ascontiguousarray(self.t, dtype=np.float64)
        rr = np.ascontiguousarray(self.rr, dtype=np.float64)
        t.flags.writeable = False
        rr.flags.writeable = False
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "rr", rr)
        validate_series(self)

    def __len__(self) -> int:
        return len(self.t)

    def __eq__(self, other):
        if not isinstance(other, RRSeries):
            return NotImplemented
        return (
            self.subject_id == other.subject_id
            and self.device is other.device
            and self.session_start == other.session_start
            and np.array_equal(self.t, other.t)
            and np.array_equal(self.rr, other.rr)
        )

    __hash__ = None

    @property
    def samples(self) -> list[RRSample]:
        return [RRSample(float(a), float(b)) for a, b in zip(self.t, self.rr)]

    @property
    def duration(self) -> float:
        return float(self.t[-1]) if len(self.t) else 0.0

    def with_rr(self, rr) -> "RRSeries":
        return RRSeries(self.subject_id, self.device, self.session_start, self.t, rr)

    def take(self, index) -> "RRSeries":
        return RRSeries(
            self.subject_id, self.device, self.session_start, self.t[index], self.rr[index]
        )


def validate_series(series: RRSeries) -> None:
    t, rr = series.t, series.rr
    if t.ndim != 1 or t.shape != rr.shape:
        raise ValidationError("t and rr must be 1-D arrays of equal length")
    if len(t) == 0:
        raise EmptyInputError("series has no samples")
    if not (np.all(np.isfinite(t)) and np.all(np.isfinite(rr))):
        raise ValidationError("non-finite t or rr value")
    if np.any(t < 0):
        raise ValidationError(f"negative timestamp at sample {int(np.argmax(t < 0))}")
    if np.any(rr <= 0):
        i = int(np.argmax(rr <= 0))
        raise ValidationError(f"rr must be > 0 ms, got {rr[i]!r} at sample {i}")
    d = np.diff(t)
    if np.any(d < 0):
        i = int(np.argmax(d < 0)) + 1
        raise ValidationError(f"timestamps not monotone: t={t[i]!r} follows t={t[i - 1]!r}")
    if np.any(d == 0):
        i = int(np.argmax(d == 0)) + 1
        raise ValidationError(f"duplicate timestamp t={t[i]!r} at sample {i}")


def _text(data: BytesLike) -> str:
    if isinstance(data, bytes):
        try:
            return data.decode("utf-8-sig")
        except UnicodeDecodeError as exc:
            raise ParseError(f"not UTF-8 text: {exc}") from None
    return data


def _lines(data: BytesLike) -> list[tuple[int, str]]:
    # splitlines() would also split on \x0b, \x1c etc.; only LF / CRLF are accepted
    text = _text(data)
    out = []
    for no, raw in enumerate(text.split("\n"), start=1):
        line = raw[:-1] if raw.endswith("\r") else raw
        if line.strip():
            out.append((no, line))
    if not out:
        raise EmptyInputError("input is empty")
    return out


def _float(token: str, line: int, what: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"cannot parse {what} {token.strip()!r} as a number", line) from None
    if not math.isfinite(value):
        raise ParseError(f"{what} must be finite, got {token.strip()!r}", line)
    return value


def _ms_from_seconds(token: str, line: int) -> float:
    # exact decimal shift, so that ms values round-trip through the seconds format
    try:
        value = Decimal(token.strip())
    except InvalidOperation:
        raise ParseError(f"cannot parse ibi {token.strip()!r} as a number", line) from None
    if not value.is_finite():
        raise ParseError(f"ibi must be finite, got {token.strip()!r}", line)
    return float(value.scaleb(3))


def _rows(lines):
    for no, line in lines:
        parts = line.split(",")
        if len(parts) != 2:
            raise ParseError(f"expected 2 comma-separated fields, got {len(parts)}", no)
        yield no, parts


def parse_empatica_ibi(data: BytesLike, subject_id: str = "unknown") -> RRSeries:
    """Parse an Empatica E4 ``IBI.csv`` export.

    >>> s = parse_empatica_ibi("1562000000.0\\n1.25,0.80\\n2.05,0.80\\n")
    >>> s.samples
    [RRSample(t=1.25, rr=800.0), RRSample(t=2.05, rr=800.0)]
    """
    lines = _lines(data)
    head_no, head = lines[0]
    head_parts = [p.strip() for p in head.split(",")]
    if len(head_parts) == 2 and head_parts[1].upper() == "IBI":
        head_parts = head_parts[:1]
    if len(head_parts) != 1:
        raise ParseError("header must hold a single session-start epoch", head_no)
    start = _float(head_parts[0], head_no, "session start")

    if len(lines) == 1:
        raise EmptyInputError("IBI export has a header but no data rows")
    t, rr = [], []
    for no, (a, b) in _rows(lines[1:]):
        t.append(_float(a, no, "offset"))
        rr.append(_ms_from_seconds(b, no))
    return RRSeries(subject_id, DeviceKind.EMPATICA_E4, start, np.array(t), np.array(rr))


def _parse_generic_header(line: str, no: int) -> dict:
    fields = {}
    for part in line.split(","):
        key, sep, value = part.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ParseError(f"malformed header field {part.strip()!r} (expected key=value)", no)
        if key not in ("subject", "device", "start"):
            raise ParseError(f"unknown header key {key!r}", no)
        fields[key] = value.strip()
    for key in ("subject", "device"):
        if key not in fields:
            raise ParseError(f"header is missing {key}=", no)
    return fields


def parse_generic(data: BytesLike) -> RRSeries:
    """Parse the generic ``t_seconds,rr_ms`` format."""
    lines = _lines(data)
    head_no, head = lines[0]
    fields = _parse_generic_header(head, head_no)
    device = DeviceKind.from_token(fields["device"])
    start = _float(fields["start"], head_no, "start") if "start" in fields else 0.0
    if len(lines) == 1:
        raise EmptyInputError("generic export has a header but no data rows")
    t, rr = [], []
    for no, (a, b) in _rows(lines[1:]):
        t.append(_float(a, no, "t"))
        rr.append(_float(b, no, "rr"))
    return RRSeries(fields["subject"], device, start, np.array(t), np.array(rr))


def sniff_format(data: BytesLike) -> str:
    """Return ``"generic"`` or ``"empatica"`` from the header line."""
    first = _lines(data)[0][1]
    return "generic" if "=" in first else "empatica"


def parse_file(path, subject_id: str | None = None) -> RRSeries:
    path = Path(path)
    data = path.read_bytes()
    if sniff_format(data) == "generic":
        return parse_generic(data)
    return parse_empatica_ibi(data, subject_id or path.stem)


def _check_token(value: str, what: str) -> str:
    if any(c in value for c in ",=\r\n"):
        raise ValidationError(f"{what} {value!r} cannot contain ',', '=' or newlines")
    return value


def write_generic(series: RRSeries) -> str:
    """Serialize to the generic format; ``parse_generic`` inverts it exactly."""
    lines = [
        f"subject={_check_token(series.subject_id, 'subject id')},"
        f"device={series.device.value},start={float(series.session_start)!r}"
    ]
    lines += [f"{float(a)!r},{float(b)!r}" for a, b in zip(series.t, series.rr)]
    return "\n".join(lines) + "\n"


def write_empatica_ibi(series: RRSeries) -> str:
    lines = [repr(float(series.session_start))]
    for a, b in zip(series.t, series.rr):
        ibi = Decimal(repr(float(b))).scaleb(-3)
        lines.append(f"{float(a)!r},{ibi:f}")
    return "\n".join(lines) + "\n"
