import io
import warnings
from datetime import datetime, timezone

import pytest

from tracefp.geo import GpsPoint
from tracefp.store import (
    Dataset,
    ParseError,
    Trajectory,
    canonical_bytes,
    filter_dataset,
    parse_cabspotting,
    parse_csv,
    parse_plt,
    read_canonical,
    write_canonical,
)


def P(lat, lon, t=None):
    return GpsPoint.from_degrees(lat, lon, t)


class TestTrajectory:
    def test_sorted_by_time(self):
        tr = Trajectory("u", (P(0, 0, 30), P(0, 1, 10), P(0, 2, 20)))
        assert [p.t for p in tr.points] == [10, 20, 30]

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            Trajectory("u", ())

    def test_duplicates_retained(self):
        tr = Trajectory("u", (P(0, 0, 10), P(0, 0, 10)))
        assert len(tr) == 2

    def test_mixed_timestamps_rejected(self):
        with pytest.raises(ValueError):
            Trajectory("u", (P(0, 0, 10), P(0, 1)))


class TestDataset:
    def test_iteration_ascending_pseudo_id(self):
        ds = Dataset("d", (
            Trajectory("zz", (P(0, 0, 1),)),
            Trajectory("aa", (P(0, 1, 1),)),
            Trajectory("mm", (P(0, 2, 1),)),
        ))
        assert ds.pseudo_ids == ("aa", "mm", "zz")

    def test_duplicate_ids_rejected(self):
        with pytest.raises(ValueError):
            Dataset("d", (Trajectory("a", (P(0, 0, 1),)), Trajectory("a", (P(0, 1, 1),))))


class TestParseCabspotting:
    def test_documented_record(self):
        tr = parse_cabspotting("37.75134 -122.39488 0 1213084687\n", "cab")
        p = tr.points[0]
        assert (p.lat_e6, p.lon_e6, p.t) == (37751340, -122394880, 1213084687)

    def test_occupancy_discarded_and_sorted(self):
        src = "0.0 0.0 1 200\n0.1 0.1 0 100\n"
        tr = parse_cabspotting(src, "cab")
        assert [p.t for p in tr.points] == [100, 200]

    def test_empty_input(self):
        with pytest.raises(ParseError):
            parse_cabspotting("", "cab")

    def test_malformed_line_carries_number(self):
        with pytest.raises(ParseError) as exc:
            parse_cabspotting("0 0 0 100\nnot a record\n", "cab")
        assert exc.value.line_no == 2


PLT_HEADER = "Geolife trajectory\nWGS 84\nAltitude is in Feet\nReserved 3\n0,2,255,My Track,0,0,2,34136\n0\n"


class TestParsePlt:
    def test_documented_record(self):
        src = PLT_HEADER + "39.906631,116.385564,0,492,39745.09,2008-10-24,02:09:59\n"
        tr = parse_plt(src, "000")
        p = tr.points[0]
        expected_t = int(datetime(2008, 10, 24, 2, 9, 59, tzinfo=timezone.utc).timestamp())
        assert (p.lat_e6, p.lon_e6, p.t) == (39906631, 116385564, expected_t)

    def test_header_only_rejected(self):
        with pytest.raises(ParseError):
            parse_plt(PLT_HEADER, "000")

    def test_non_numeric_lat(self):
        src = PLT_HEADER + "abc,116.0,0,492,39745.09,2008-10-24,02:09:59\n"
        with pytest.raises(ParseError) as exc:
            parse_plt(src, "000")
        assert exc.value.line_no == 7


class TestParseCsv:
    SCHEMA = {"lat": "latitude", "lon": "longitude", "t": "ts"}

    def test_three_rows(self):
        src = "latitude,longitude,ts\n1,2,10\n3,4,20\n5,6,30\n"
        tr = parse_csv(src, self.SCHEMA, "u")
        assert len(tr) == 3
        assert tr.points[0] == P(1, 2, 10)

    def test_spatial_only_without_t(self):
        src = "latitude,longitude\n1,2\n"
        tr = parse_csv(src, {"lat": "latitude", "lon": "longitude"}, "u")
        assert tr.points[0].t is None

    def test_missing_schema_column(self):
        with pytest.raises(ParseError):
            parse_csv("a,b\n1,2\n", self.SCHEMA, "u")

    def test_out_of_range_lon(self):
        src = "latitude,longitude,ts\n0,200,10\n"
        with pytest.raises(ParseError):
            parse_csv(src, self.SCHEMA, "u")


class TestCanonicalRoundTrip:
    def make(self):
        return Dataset("d", (
            Trajectory("a", (P(1.000001, -2.000002, 100), P(1.5, 2.5, 200))),
            Trajectory("b", (P(-3.25, 4.75, 50),)),
        ))

    def test_round_trip_exact(self):
        ds = self.make()
        buf = io.StringIO()
        write_canonical(ds, buf)
        back = read_canonical(buf.getvalue(), name="d")
        assert back.pseudo_ids == ds.pseudo_ids
        for orig, rt in zip(ds, back):
            assert orig.points == rt.points

    def test_spatial_only_round_trip(self):
        ds = Dataset("d", (Trajectory("a", (P(1, 2), P(3, 4))),))
        back = read_canonical(canonical_bytes(ds).decode(), name="d")
        assert back.get("a").points == ds.get("a").points

    def test_header_required(self):
        with pytest.raises(ParseError):
            read_canonical("nope,nope\n1,2\n")


class TestFilterDataset:
    def make(self):
        return Dataset("d", (
            Trajectory("a", (P(10, 10, 100), P(10.1, 10.1, 200), P(50, 50, 300))),
            Trajectory("b", (P(10, 10.05, 150),)),
        ))

    def test_identity_filter(self):
        ds = self.make()
        out = filter_dataset(ds, time_range=(0, 10**9))
        assert [tr.points for tr in out] == [tr.points for tr in ds]

    def test_bbox_crop(self):
        out = filter_dataset(self.make(), bbox=(9, 11, 9, 11))
        assert len(out.get("a")) == 2

    def test_min_points(self):
        out = filter_dataset(self.make(), min_points=2)
        assert out.pseudo_ids == ("a",)

    def test_disjoint_bbox_warns(self):
        with pytest.warns(UserWarning):
            out = filter_dataset(self.make(), bbox=(-80, -70, -80, -70))
        assert len(out) == 0

    def test_idempotent(self):
        args = dict(time_range=(100, 250), bbox=(9, 11, 9, 11), min_points=1)
        once = filter_dataset(self.make(), **args)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            twice = filter_dataset(once, **args)
        assert [tr.points for tr in once] == [tr.points for tr in twice]

    def test_input_unmodified(self):
        ds = self.make()
        filter_dataset(ds, bbox=(9, 11, 9, 11))
        assert len(ds.get("a")) == 3
