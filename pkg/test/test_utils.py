import io

import numpy as np

from utils import write_csv


def test_write_csv_cells():
    buffer = io.StringIO()
    rows = [{"name": "a,b", "value": np.float64(1 / 3), "missing": None, "extra": 7}]
    write_csv(buffer, ["name", "value", "missing"], rows, ".4g")
    assert buffer.getvalue() == 'name,value,missing\n"a,b",0.3333,\n'


def test_write_csv_to_path(tmp_path):
    path = tmp_path / "rows.csv"
    write_csv(path, ["step", "loss"], [{"step": 0, "loss": 0.5}, {"step": 1, "loss": 0.25}])
    assert path.read_text().splitlines() == ["step,loss", "0,0.5", "1,0.25"]
