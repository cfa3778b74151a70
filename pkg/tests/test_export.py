import math
import xml.etree.ElementTree as ET

import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from tilekit import export


def test_format_value():
    assert export.format_value(-0.0) == "0"
    assert export.format_value(True) == "true"
    assert export.format_value(1 / 3) == "0.333333333"
    assert export.format_value("ok") == "ok"


@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=20))
def test_csv_round_trip_nine_digits(tmp_path_factory, values):
    path = tmp_path_factory.mktemp("csv") / "v.csv"
    export.write_csv(path, ("i", "v"), [(i, v) for i, v in enumerate(values)])
    header, rows = export.read_csv(path)
    assert header == ["i", "v"]
    for (i, v), row in zip(enumerate(values), rows):
        assert row[0] == i
        assert math.isclose(row[1], v, rel_tol=1e-8, abs_tol=1e-300)


def test_csv_uses_lf(tmp_path):
    path = export.write_csv(tmp_path / "a.csv", ("a",), [(1,), (2,)])
    assert path.read_bytes() == b"a\n1\n2\n"


def test_json_sorted_and_numpy_safe(tmp_path):
    path = export.write_json(tmp_path / "a.json", {"b": np.float64(1.5), "a": np.arange(2)})
    assert path.read_text().index('"a"') < path.read_text().index('"b"')


def test_svgs_are_well_formed():
    x = np.linspace(0, 1, 5)
    for text in (
        export.svg_scatter(x, x ** 2, title="s"),
        export.svg_lines(x, {"a": x, "b": -x}),
        export.svg_heatmap(x, x[:3], np.ones((3, 5))),
    ):
        root = ET.fromstring(text)
        assert root.tag.endswith("svg")
