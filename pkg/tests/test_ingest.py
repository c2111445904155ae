import io

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boardnet.errors import ParameterError, SchemaError
from boardnet.ingest import (FirmStatus, PositionRecord, PositionStatus,
                             PositionTable, RoleKind, filter_firms,
                             filter_mega_directors, filter_positions,
                             parse_firms, parse_ownership, parse_positions,
                             parse_role)

FIRMS_HEADER = "firm_id,name,status,city,country,lat,lon\n"
POS_HEADER = "firm_id,person_id,role,status\n"
OWN_HEADER = "parent_id,child_id,fraction\n"


def firms_stream(*rows):
    return io.StringIO(FIRMS_HEADER + "".join(r + "\n" for r in rows))


def pos(firm, person, role="board of directors", status="current"):
    return PositionRecord(firm, person, parse_role(role),
                          PositionStatus.CURRENT if status == "current" else PositionStatus.PAST)


class TestParseFirms:
    def test_direct_field_mapping(self):
        records, report = parse_firms(firms_stream("F1,Acme,active,London,GB,51.5,-0.12"))
        assert len(records) == 1 and report.malformed == 0
        rec = records[0]
        assert rec.firm_id == "F1"
        assert rec.status is FirmStatus.ACTIVE
        assert rec.city_name == "London"
        assert rec.country == "GB"
        assert rec.coordinates == (51.5, -0.12)

    def test_empty_coordinates_give_absent(self):
        records, report = parse_firms(firms_stream("F1,Acme,active,London,GB,,"))
        assert records[0].coordinates is None
        assert report.bad_coordinates == 0

    def test_unparseable_coordinates_give_absent_and_counted(self):
        records, report = parse_firms(firms_stream("F1,Acme,active,London,GB,north,west"))
        assert records[0].coordinates is None
        assert report.bad_coordinates == 1

    def test_out_of_range_coordinates_dropped(self):
        records, report = parse_firms(firms_stream("F1,A,active,X,GB,95.0,10.0",
                                                   "F2,B,active,X,GB,10.0,200.0"))
        assert all(r.coordinates is None for r in records)
        assert report.bad_coordinates == 2

    def test_malformed_rows_counted_not_fatal(self):
        records, report = parse_firms(firms_stream(
            "F1,A,active,X,GB,1,1", "F2,B,active,X,GB,1,1",
            "too,short", "F3,C,active,X,GB,1,1"))
        assert len(records) == 3
        assert report.malformed == 1
        assert report.parsed == 3

    def test_header_mismatch_raises(self):
        with pytest.raises(SchemaError):
            parse_firms(io.StringIO("id,name\nF1,A\n"))

    def test_unreadable_path_raises_oserror(self, tmp_path):
        with pytest.raises(OSError):
            parse_firms(tmp_path / "does_not_exist.csv")

    def test_status_case_insensitive_trimmed(self):
        records, _ = parse_firms(firms_stream("F1,A, ACTIVE ,X,GB,,",
                                              "F2,B,Inactive,X,GB,,",
                                              "F3,C,dormant,X,GB,,"))
        assert [r.status for r in records] == [
            FirmStatus.ACTIVE, FirmStatus.INACTIVE, FirmStatus.UNKNOWN]

    def test_duplicate_ids_keep_first(self):
        records, report = parse_firms(firms_stream("F1,A,active,X,GB,,",
                                                   "F1,B,inactive,Y,GB,,"))
        assert len(records) == 1 and records[0].name == "A"
        assert report.duplicates == 1

    def test_coordinates_rounded_to_6_decimals(self):
        records, _ = parse_firms(firms_stream("F1,A,active,X,GB,51.50000049,-0.120000012"))
        assert records[0].coordinates == (51.5, -0.12)

    def test_rfc4180_quoting(self):
        records, _ = parse_firms(firms_stream('F1,"Acme, Inc.",active,"London",GB,1,1'))
        assert records[0].name == "Acme, Inc."


class TestFilterFirms:
    def test_keeps_exactly_active(self):
        records, _ = parse_firms(firms_stream("F1,A,active,X,GB,,",
                                              "F2,B,inactive,X,GB,,",
                                              "F3,C,active,X,GB,,"))
        kept = filter_firms(records)
        assert [f.firm_id for f in kept] == ["F1", "F3"]

    def test_all_inactive_empty(self):
        records, _ = parse_firms(firms_stream("F1,A,inactive,X,GB,,"))
        assert filter_firms(records) == []

    def test_idempotent(self):
        records, _ = parse_firms(firms_stream("F1,A,active,X,GB,,",
                                              "F2,B,unknown,X,GB,,"))
        once = filter_firms(records)
        assert filter_firms(once) == once


class TestParsePositions:
    def test_basic(self):
        records, report = parse_positions(io.StringIO(
            POS_HEADER + "F1,P1,board of directors,current\nF1,P2,CEO,past\n"))
        assert report.parsed == 2
        assert records[0].role is RoleKind.BOARD_OF_DIRECTORS
        assert records[0].status is PositionStatus.CURRENT
        assert records[1].role is RoleKind.CHIEF_EXECUTIVE
        assert records[1].status is PositionStatus.PAST

    def test_unknown_role_is_other(self):
        assert parse_role("janitor") is RoleKind.OTHER

    def test_role_aliases_case_insensitive(self):
        assert parse_role("Chief Executive Officer") is RoleKind.CHIEF_EXECUTIVE
        assert parse_role("SUPERVISORY BOARD") is RoleKind.SUPERVISORY_BOARD
        assert parse_role("member of a committee") is RoleKind.COMMITTEE_MEMBER

    def test_malformed_counted(self):
        _, report = parse_positions(io.StringIO(POS_HEADER + "F1,P1,ceo\n,P1,ceo,current\n"))
        assert report.malformed == 2


class TestParseOwnership:
    def test_basic(self):
        links, report = parse_ownership(io.StringIO(OWN_HEADER + "F1,F2,0.6\n"))
        assert report.parsed == 1
        assert links[0].fraction == 0.6

    def test_self_link_and_bad_fraction_malformed(self):
        links, report = parse_ownership(io.StringIO(
            OWN_HEADER + "F1,F1,0.6\nF1,F2,1.4\nF1,F3,-0.1\nF1,F4,half\n"))
        assert links == []
        assert report.malformed == 4


class TestFilterPositions:
    def test_status_filter(self):
        table = filter_positions([pos("A", "P1", status="current"),
                                  pos("A", "P1", status="past")])
        assert len(table.records) == 1

    def test_role_filter(self):
        table = filter_positions([pos("A", "P1", role="other duties")])
        assert len(table.records) == 0

    def test_duplicate_triple_collapsed(self):
        table = filter_positions([pos("A", "P1"), pos("A", "P1")])
        assert len(table.records) == 1

    def test_all_six_roles_pass(self):
        roles = ["chief executive officer", "highest executive", "supervisory board",
                 "executive board", "board of directors", "committee member"]
        table = filter_positions([pos("A", f"P{i}", role=r) for i, r in enumerate(roles)])
        assert len(table.records) == 6

    def test_counts_match_recompute(self):
        table = filter_positions([pos("A", "P1"), pos("B", "P1"), pos("A", "P2")])
        assert table.person_firm_counts == table.recompute_counts()
        assert table.person_firm_counts == {"P1": 2, "P2": 1}


class TestFilterMegaDirectors:
    def make_table(self, firm_counts):
        records = []
        for person, k in firm_counts.items():
            for i in range(k):
                records.append(pos(f"F{person}_{i}", person))
        return PositionTable.from_records(records)

    def test_101_firms_all_removed(self):
        table = self.make_table({"big": 101, "small": 2})
        out = filter_mega_directors(table, 100)
        assert set(r.person_id for r in out.records) == {"small"}

    def test_exactly_100_kept(self):
        table = self.make_table({"edge": 100})
        out = filter_mega_directors(table, 100)
        assert len(out.records) == 100

    def test_mixed_counts_direct_oracle(self):
        counts = {"a": 2, "b": 101, "c": 50}
        table = self.make_table(counts)
        out = filter_mega_directors(table, 100)
        expected = {p for p, k in counts.items() if k <= 100}
        assert set(out.person_firm_counts) == expected
        assert len(out.records) == sum(k for p, k in counts.items() if p in expected)

    def test_duplicate_registrations_do_not_trigger(self):
        # 100 firms, every position registered twice: still kept
        records = []
        for i in range(100):
            records.append(pos(f"F{i}", "dup", role="board of directors"))
            records.append(pos(f"F{i}", "dup", role="ceo"))
        table = PositionTable.from_records(records)
        out = filter_mega_directors(table, 100)
        assert len(out.records) == 200

    def test_bad_threshold(self):
        with pytest.raises(ParameterError):
            filter_mega_directors(self.make_table({"a": 1}), 0)


@st.composite
def position_lists(draw):
    n = draw(st.integers(0, 40))
    records = []
    for _ in range(n):
        firm = f"F{draw(st.integers(0, 8))}"
        person = f"P{draw(st.integers(0, 8))}"
        role = draw(st.sampled_from(["board of directors", "ceo", "other role"]))
        status = draw(st.sampled_from(["current", "past"]))
        records.append(pos(firm, person, role=role, status=status))
    return records


@settings(max_examples=60, deadline=None)
@given(position_lists())
def test_filter_positions_idempotent_and_monotone(records):
    table = filter_positions(records)
    again = filter_positions(table.records)
    assert [(r.firm_id, r.person_id, r.role) for r in again.records] == \
           [(r.firm_id, r.person_id, r.role) for r in table.records]
    keys_in = {(r.firm_id, r.person_id, r.role) for r in records}
    keys_out = {(r.firm_id, r.person_id, r.role) for r in table.records}
    assert keys_out <= keys_in
    assert table.person_firm_counts == table.recompute_counts()


@settings(max_examples=60, deadline=None)
@given(position_lists(), st.integers(1, 5))
def test_filter_mega_idempotent_and_monotone(records, cap):
    table = filter_positions(records)
    once = filter_mega_directors(table, cap)
    twice = filter_mega_directors(once, cap)
    assert [(r.firm_id, r.person_id, r.role) for r in twice.records] == \
           [(r.firm_id, r.person_id, r.role) for r in once.records]
    assert {r.person_id for r in once.records} <= {r.person_id for r in table.records}
    assert all(k <= cap for k in once.person_firm_counts.values())
