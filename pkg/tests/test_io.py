import numpy as np
import pytest

from dynsem import io as dio
from dynsem.core import TopologyEstimate


def test_matrix_csv_round_trip(tmp_path, rng):
    m = rng.standard_normal((5, 3)) * 10.0 ** rng.integers(-20, 20, size=(5, 3))
    dio.write_matrix_csv(tmp_path / "m.csv", m)
    back = dio.read_matrix_csv(tmp_path / "m.csv")
    assert back.tobytes() == m.tobytes()
    first = (tmp_path / "m.csv").read_text().splitlines()[0]
    assert first.count(",") == 2 and not first.startswith("#")


def test_matrix_csv_ragged(tmp_path):
    (tmp_path / "bad.csv").write_text("1,2\n3\n")
    with pytest.raises(dio.FormatError):
        dio.read_matrix_csv(tmp_path / "bad.csv")


def test_jsonl_stream(tmp_path, rng):
    ests = []
    for t in range(1, 4):
        a = rng.standard_normal((3, 3))
        np.fill_diagonal(a, 0)
        ests.append(TopologyEstimate(a, rng.standard_normal(3), t))
    dio.write_estimates_jsonl(tmp_path / "e.jsonl", ests)
    lines = (tmp_path / "e.jsonl").read_text().splitlines()
    assert len(lines) == 3 and lines[0].startswith('{"t":1,"a":')
    assert dio.read_estimates_jsonl(tmp_path / "e.jsonl") == ests


def test_triplets(tmp_path):
    a = np.array([[0.0, 0.5, 0.0], [0.0, 0.0, -2.0], [1e-9, 0.0, 0.0]])
    dio.write_triplets_csv(tmp_path / "t.csv", a)
    assert dio.read_triplets_csv(tmp_path / "t.csv", (3, 3)).tobytes() == a.tobytes()
    dio.write_triplets_csv(tmp_path / "t2.csv", a, threshold=1e-6)
    assert len((tmp_path / "t2.csv").read_text().splitlines()) == 3
