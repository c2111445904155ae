"""Parsing and filtering of raw firm, position and ownership records.

Input files are UTF-8 comma-delimited text with RFC-4180 quoting:

    firms.csv      firm_id,name,status,city,country,lat,lon
    positions.csv  firm_id,person_id,role,status
    ownership.csv  parent_id,child_id,fraction

Registry exports are dirty by nature, so malformed rows are skipped and
counted rather than aborting the run.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ParameterError, SchemaError

FIRMS_HEADER = ["firm_id", "name", "status", "city", "country", "lat", "lon"]
POSITIONS_HEADER = ["firm_id", "person_id", "role", "status"]
OWNERSHIP_HEADER = ["parent_id", "child_id", "fraction"]


class FirmStatus(enum.Enum):
    ACTIVE = "active"
    INACTIVE = "inactive"
    UNKNOWN = "unknown"


class PositionStatus(enum.Enum):
    CURRENT = "current"
    PAST = "past"


class RoleKind(enum.Enum):
    CHIEF_EXECUTIVE = "chief_executive"
    HIGHEST_EXECUTIVE = "highest_executive"
    SUPERVISORY_BOARD = "supervisory_board"
    EXECUTIVE_BOARD = "executive_board"
    BOARD_OF_DIRECTORS = "board_of_directors"
    COMMITTEE_MEMBER = "committee_member"
    OTHER = "other"


# The six role kinds that count as senior board positions.
SENIOR_ROLES = frozenset({
    RoleKind.CHIEF_EXECUTIVE,
    RoleKind.HIGHEST_EXECUTIVE,
    RoleKind.SUPERVISORY_BOARD,
    RoleKind.EXECUTIVE_BOARD,
    RoleKind.BOARD_OF_DIRECTORS,
    RoleKind.COMMITTEE_MEMBER,
})

# Case-insensitive mapping from registry role strings to RoleKind.
ROLE_ALIASES = {
    "chief executive officer": RoleKind.CHIEF_EXECUTIVE,
    "ceo": RoleKind.CHIEF_EXECUTIVE,
    "chief_executive": RoleKind.CHIEF_EXECUTIVE,
    "highest executive": RoleKind.HIGHEST_EXECUTIVE,
    "highest_executive": RoleKind.HIGHEST_EXECUTIVE,
    "supervisory board": RoleKind.SUPERVISORY_BOARD,
    "member of supervisory board": RoleKind.SUPERVISORY_BOARD,
    "supervisory_board": RoleKind.SUPERVISORY_BOARD,
    "executive board": RoleKind.EXECUTIVE_BOARD,
    "member of executive board": RoleKind.EXECUTIVE_BOARD,
    "executive_board": RoleKind.EXECUTIVE_BOARD,
    "board of directors": RoleKind.BOARD_OF_DIRECTORS,
    "member of the board of directors": RoleKind.BOARD_OF_DIRECTORS,
    "director": RoleKind.BOARD_OF_DIRECTORS,
    "board_of_directors": RoleKind.BOARD_OF_DIRECTORS,
    "committee member": RoleKind.COMMITTEE_MEMBER,
    "member of a committee": RoleKind.COMMITTEE_MEMBER,
    "committee_member": RoleKind.COMMITTEE_MEMBER,
}


def parse_role(text: str) -> RoleKind:
    return ROLE_ALIASES.get(text.strip().lower(), RoleKind.OTHER)


def parse_firm_status(text: str) -> FirmStatus:
    t = text.strip().lower()
    if t == "active":
        return FirmStatus.ACTIVE
    if t == "inactive":
        return FirmStatus.INACTIVE
    return FirmStatus.UNKNOWN


def parse_position_status(text: str) -> PositionStatus:
    return PositionStatus.CURRENT if text.strip().lower() == "current" else PositionStatus.PAST


@dataclass(slots=True)
class FirmRecord:
    firm_id: str
    name: str
    status: FirmStatus
    city_name: str
    country: str
    coordinates: tuple[float, float] | None  # (lat, lon), rounded to 6 decimals


@dataclass(slots=True)
class PositionRecord:
    firm_id: str
    person_id: str
    role: RoleKind
    status: PositionStatus


@dataclass(slots=True)
class OwnershipLink:
    parent_firm_id: str
    child_firm_id: str
    fraction: float


@dataclass
class ParseReport:
    rows: int = 0
    parsed: int = 0
    malformed: int = 0
    bad_coordinates: int = 0
    duplicates: int = 0

    def as_dict(self):
        return {"rows": self.rows, "parsed": self.parsed, "malformed": self.malformed,
                "bad_coordinates": self.bad_coordinates, "duplicates": self.duplicates}


@dataclass
class PositionTable:
    """Deduplicated position records plus per-person distinct-firm counts."""

    records: list[PositionRecord]
    person_firm_counts: dict[str, int] = field(default_factory=dict)

    @classmethod
    def from_records(cls, records):
        table = cls(list(records))
        table.person_firm_counts = table.recompute_counts()
        return table

    def recompute_counts(self):
        firms_of: dict[str, set[str]] = {}
        for rec in self.records:
            firms_of.setdefault(rec.person_id, set()).add(rec.firm_id)
        return {person: len(firms) for person, firms in firms_of.items()}

    def __len__(self):
        return len(self.records)


def _reader(source):
    if isinstance(source, (str, Path)):
        fh = open(source, newline="", encoding="utf-8")
        return csv.reader(fh), fh
    return csv.reader(source), None


def _check_header(row, expected, what):
    if row is None or [c.strip() for c in row] != expected:
        raise SchemaError(f"{what}: expected header {','.join(expected)}, got "
                          f"{','.join(row) if row else '<empty file>'}")


def _parse_coordinate(lat_text, lon_text):
    """(lat, lon) rounded to 6 decimals, or None if absent/unparseable.

    Returns (point, bad) where bad flags text that was present but did
    not yield a valid in-range coordinate pair.
    """
    lat_text, lon_text = lat_text.strip(), lon_text.strip()
    if not lat_text and not lon_text:
        return None, False
    try:
        lat, lon = float(lat_text), float(lon_text)
    except ValueError:
        return None, True
    if not (-90.0 <= lat <= 90.0 and -180.0 <= lon <= 180.0):
        return None, True
    return (round(lat, 6), round(lon, 6)), False


def parse_firms(source):
    """Parse a firms.csv stream into (records, report).

    Rows with unparseable or out-of-range coordinates still produce a
    record (with absent coordinates); rows with a wrong column count or
    empty firm_id are skipped and counted as malformed.  A duplicated
    firm_id keeps its first occurrence.
    """
    reader, fh = _reader(source)
    try:
        header = next(reader, None)
        _check_header(header, FIRMS_HEADER, "firms")
        report = ParseReport()
        records = []
        seen = set()
        for row in reader:
            report.rows += 1
            if len(row) != len(FIRMS_HEADER) or not row[0].strip():
                report.malformed += 1
                continue
            firm_id = row[0].strip()
            if firm_id in seen:
                report.duplicates += 1
                continue
            seen.add(firm_id)
            point, bad = _parse_coordinate(row[5], row[6])
            if bad:
                report.bad_coordinates += 1
            records.append(FirmRecord(firm_id, row[1], parse_firm_status(row[2]),
                                      row[3].strip(), row[4].strip().upper(), point))
            report.parsed += 1
        return records, report
    finally:
        if fh is not None:
            fh.close()


def parse_positions(source):
    """Parse a positions.csv stream into (records, report)."""
    reader, fh = _reader(source)
    try:
        header = next(reader, None)
        _check_header(header, POSITIONS_HEADER, "positions")
        report = ParseReport()
        records = []
        for row in reader:
            report.rows += 1
            if len(row) != len(POSITIONS_HEADER) or not row[0].strip() or not row[1].strip():
                report.malformed += 1
                continue
            records.append(PositionRecord(row[0].strip(), row[1].strip(),
                                          parse_role(row[2]), parse_position_status(row[3])))
            report.parsed += 1
        return records, report
    finally:
        if fh is not None:
            fh.close()


def parse_ownership(source):
    """Parse an ownership.csv stream into (links, report).

    Self-ownership rows and fractions outside [0, 1] are malformed.
    """
    reader, fh = _reader(source)
    try:
        header = next(reader, None)
        _check_header(header, OWNERSHIP_HEADER, "ownership")
        report = ParseReport()
        links = []
        for row in reader:
            report.rows += 1
            if len(row) != len(OWNERSHIP_HEADER) or not row[0].strip() or not row[1].strip():
                report.malformed += 1
                continue
            parent, child = row[0].strip(), row[1].strip()
            try:
                fraction = float(row[2])
            except ValueError:
                report.malformed += 1
                continue
            if parent == child or not (0.0 <= fraction <= 1.0):
                report.malformed += 1
                continue
            links.append(OwnershipLink(parent, child, fraction))
            report.parsed += 1
        return links, report
    finally:
        if fh is not None:
            fh.close()


def filter_firms(firms):
    """Keep exactly the firms listed as active."""
    return [f for f in firms if f.status is FirmStatus.ACTIVE]


def filter_positions(positions) -> PositionTable:
    """Keep current positions in one of the six senior roles, deduplicated.

    Duplicate (firm, person, role) triples collapse to a single record.
    """
    seen = set()
    kept = []
    for rec in positions:
        if rec.status is not PositionStatus.CURRENT or rec.role not in SENIOR_ROLES:
            continue
        key = (rec.firm_id, rec.person_id, rec.role)
        if key in seen:
            continue
        seen.add(key)
        kept.append(rec)
    return PositionTable.from_records(kept)


def filter_mega_directors(table: PositionTable, max_positions: int = 100) -> PositionTable:
    """Drop every record of persons holding more than max_positions firms.

    The bound is strict: a person with exactly max_positions distinct
    firms is kept.  Counting uses distinct firms, so duplicated
    registrations cannot trigger exclusion on their own.
    """
    if max_positions < 1:
        raise ParameterError(f"max_positions must be >= 1, got {max_positions}")
    counts = table.person_firm_counts or table.recompute_counts()
    keep = [rec for rec in table.records if counts[rec.person_id] <= max_positions]
    return PositionTable.from_records(keep)
