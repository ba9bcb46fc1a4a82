import json
import xml.etree.ElementTree as ET

import jsonschema
import numpy as np
import pytest
from hypothesis import given, strategies as st

from maxwell_tails import outputs
from maxwell_tails.config import parse_config, serialize
from maxwell_tails.runner import versions


@given(vals=st.lists(st.complex_numbers(allow_nan=False, allow_infinity=False, max_magnitude=1e300), min_size=3,
                max_size=30))
def test_csv_roundtrip_is_exact(vals, tmp_path_factory):
    p = tmp_path_factory.mktemp("csv") / "s.csv"
    tau = np.arange(1.0, len(vals) + 1) * 0.1
    outputs.write_series_csv(p, tau, np.array(vals))
    t2, f2 = outputs.read_series_csv(p)
    assert np.array_equal(t2, tau)
    assert np.array_equal(f2, np.array(vals, dtype=complex))


def test_csv_header_and_digits(tmp_path):
    p = tmp_path / "s.csv"
    tau = np.linspace(1, 10, 10)
    outputs.write_series_csv(p, tau, tau**-2.0 * (1 + 1j))
    lines = p.read_text().splitlines()
    assert lines[0] == "tau,re,im,abs,lpi,flags"
    row = lines[3].split(",")
    assert row[0] == format(tau[2], ".17g")
    assert float(row[4]) == pytest.approx(2.0, abs=0.2)
    assert row[5] == "0"


def test_read_rejects_other_files(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        outputs.read_series_csv(p)


def test_schema_is_valid_and_enforced(tmp_path):
    sch = outputs.schema()
    jsonschema.Draft202012Validator.check_schema(sch)
    cfg = parse_config("")
    meta = {"name": "x", "status": "ok", "config": cfg.as_dict(), "config_text": serialize(cfg), "versions": versions(), "fits": {},
            "diagnostics": {"value": np.float64(np.nan), "c": 1 + 2j}}
    doc = outputs.write_metadata(tmp_path / "m.json", meta)
    assert doc["diagnostics"]["value"] is None
    assert json.loads((tmp_path / "m.json").read_text())["diagnostics"]["c"] == {"re": 1.0, "im": 2.0}
    with pytest.raises(jsonschema.ValidationError):
        outputs.write_metadata(tmp_path / "bad.json", {**meta, "status": "fine"})


def test_svg_is_well_formed(tmp_path):
    tau = np.linspace(1, 100, 50)
    outputs.svg_loglog(tmp_path / "p.svg", [("a<b", tau, tau**-2.0), ("zero", tau, 0 * tau)], title="t&t")
    root = ET.parse(tmp_path / "p.svg").getroot()
    assert root.tag.endswith("svg")
    assert len([e for e in root.iter() if e.tag.endswith("polyline")]) == 1


def test_jsonable_handles_numpy_scalars():
    doc = outputs._jsonable({"ok": np.bool_(True), "n": np.int64(3), "x": np.float64(np.nan),
                             "z": np.complex128(1 + 2j), "a": np.arange(2)})
    assert json.loads(json.dumps(doc)) == {"ok": True, "n": 3, "x": None, "z": {"re": 1.0, "im": 2.0},
                                           "a": [0, 1]}
