"""Metric tables: layout, reference diffing, and format round-trips."""

import json

import pytest

from uvfsim.metrics import (
    TRAFFIC_COLUMNS,
    UTILIZATION_COLUMNS,
    compare_traffic,
    export_metrics,
    load_reference_traffic,
    rows_from_csv,
    rows_to_csv,
    traffic_rows,
    utilization_rows,
)
from uvfsim.scenario import GOLDEN_SEED, golden_scenario, parse_scenario
from uvfsim.sim import run


@pytest.fixture(scope="module")
def golden_trace():
    return run(golden_scenario(), GOLDEN_SEED)


def test_traffic_table_layout(golden_trace):
    rows = traffic_rows(golden_trace)
    assert len(rows) == 9
    assert list(rows[0]) == TRAFFIC_COLUMNS
    assert [r["tc"] for r in rows] == list(range(1, 10))
    assert [r["time"] for r in rows] == [2, 4, 6, 8, 12, 14, 16, 18, 20]


def test_golden_matches_reference_in_eighty_of_eightyone_cells(golden_trace):
    diffs = compare_traffic(traffic_rows(golden_trace))
    assert len(diffs) == 1
    (diff,) = diffs
    assert (diff["tc"], diff["column"]) == (8, "Tr_A1")
    assert diff["computed"] == 1600
    assert diff["reference"] == 800
    assert "UGV2" in diff["note"]


def test_reference_file_is_complete():
    reference = load_reference_traffic()
    assert len(reference["rows"]) == 9
    for row in reference["rows"]:
        assert set(row) == set(TRAFFIC_COLUMNS)


def test_utilization_rows_blank_before_registration(golden_trace):
    rows = utilization_rows(golden_trace)
    assert list(rows[0]) == UTILIZATION_COLUMNS
    assert rows[0]["U_A1"] is None  # UAV1 registers at minute 13
    assert rows[0]["U_G3"] == 0.0
    assert rows[6]["U_A3"] == 0.0  # injected value at minute 16
    assert rows[8]["U_G2"] == 11.0


def test_csv_round_trip(golden_trace):
    rows = traffic_rows(golden_trace)
    text = rows_to_csv(rows, TRAFFIC_COLUMNS)
    assert text.splitlines()[0] == ",".join(TRAFFIC_COLUMNS)
    assert rows_from_csv(text, TRAFFIC_COLUMNS) == rows


def test_export_metrics_csv_and_json_agree(golden_trace, tmp_path):
    csv_files = export_metrics(golden_trace, tmp_path / "csv", fmt="csv")
    json_files = export_metrics(golden_trace, tmp_path / "json", fmt="json")
    from_csv = rows_from_csv(csv_files["traffic"].read_text(), TRAFFIC_COLUMNS)
    from_json = json.loads(json_files["traffic"].read_text())
    assert from_csv == from_json == traffic_rows(golden_trace)

    erratum = json.loads(csv_files["erratum"].read_text())
    assert len(erratum) == 1 and erratum[0]["computed"] == 1600


def test_export_rejects_unknown_format(golden_trace, tmp_path):
    with pytest.raises(ValueError):
        export_metrics(golden_trace, tmp_path, fmt="xml")


def test_empty_snapshot_exports_zero_row(tmp_path):
    scenario = parse_scenario(
        {
            "schema_version": 1,
            "fleet": [{"id": "UAV1", "kind": "UAV", "in_mcc_range": True}],
            "horizon": 2,
            "sample_at": [2],
            "events": [],
        }
    )
    rows = traffic_rows(run(scenario, 1))
    assert len(rows) == 1
    assert all(rows[0][c] == 0 for c in TRAFFIC_COLUMNS[2:])
    files = export_metrics(run(scenario, 1), tmp_path, fmt="csv")
    assert "erratum" not in files  # rows do not align with the reference
