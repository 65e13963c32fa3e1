import json
import math

import numpy as np
import pytest

from rankbo import benchmarks, bo
from rankbo.benchmarks import SchemaError


def write_json(tmp_path, payload, name="ds.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return path


GOOD = {
    "space1": {
        "taskA": {"X": [[0.0, 1.0], [2.0, 3.0]], "y": [1.0, 2.0]},
        "taskB": {"X": [[4.0, 5.0], [6.0, 7.0], [8.0, 9.0]], "y": [[3.0], [4.0], [5.0]]},
    }
}


class TestLoader:
    def test_loads_flat_and_column_targets(self, tmp_path):
        ds = benchmarks.load_meta_dataset(write_json(tmp_path, GOOD))
        assert ds.search_space_id == "space1"
        assert ds.task_ids() == ["taskA", "taskB"]
        assert ds.dim == 2
        X, y = ds.tasks["taskB"]
        assert y.shape == (3,) and y.tolist() == [3.0, 4.0, 5.0]

    def test_task_accessor_returns_task(self, tmp_path):
        ds = benchmarks.load_meta_dataset(write_json(tmp_path, GOOD))
        t = ds.task("taskA")
        assert isinstance(t, bo.Task) and t.size == 2

    def test_space_must_be_named_when_ambiguous(self, tmp_path):
        two = {"s1": GOOD["space1"], "s2": GOOD["space1"]}
        path = write_json(tmp_path, two)
        with pytest.raises(SchemaError):
            benchmarks.load_meta_dataset(path)
        ds = benchmarks.load_meta_dataset(path, "s2")
        assert ds.search_space_id == "s2"

    def test_unknown_space(self, tmp_path):
        with pytest.raises(SchemaError):
            benchmarks.load_meta_dataset(write_json(tmp_path, GOOD), "nope")

    def test_error_names_offending_task(self, tmp_path):
        bad = {"s": {"good": GOOD["space1"]["taskA"],
                     "broken": {"X": [[1.0], [2.0]], "y": [1.0]}}}
        with pytest.raises(SchemaError, match="broken"):
            benchmarks.load_meta_dataset(write_json(tmp_path, bad))

    def test_ragged_x_rejected(self, tmp_path):
        bad = {"s": {"t": {"X": [[1.0, 2.0], [3.0]], "y": [1.0, 2.0]}}}
        with pytest.raises(SchemaError, match="t"):
            benchmarks.load_meta_dataset(write_json(tmp_path, bad))

    def test_missing_field_rejected(self, tmp_path):
        bad = {"s": {"t": {"X": [[1.0]]}}}
        with pytest.raises(SchemaError):
            benchmarks.load_meta_dataset(write_json(tmp_path, bad))

    def test_nonfinite_rejected(self, tmp_path):
        bad = {"s": {"t": {"X": [[1.0]], "y": [None]}}}
        with pytest.raises(SchemaError):
            benchmarks.load_meta_dataset(write_json(tmp_path, bad))

    def test_dim_mismatch_rejected(self, tmp_path):
        bad = {"s": {"a": {"X": [[1.0, 2.0]], "y": [1.0]},
                     "b": {"X": [[1.0]], "y": [1.0]}}}
        with pytest.raises(SchemaError, match="b"):
            benchmarks.load_meta_dataset(write_json(tmp_path, bad))

    def test_empty_space_rejected(self, tmp_path):
        with pytest.raises(SchemaError):
            benchmarks.load_meta_dataset(write_json(tmp_path, {"s": {}}))

    def test_save_load_roundtrip(self, tmp_path):
        ds = benchmarks.load_meta_dataset(write_json(tmp_path, GOOD))
        out = tmp_path / "back.json"
        benchmarks.save_meta_dataset(ds, out)
        back = benchmarks.load_meta_dataset(out)
        assert back.search_space_id == ds.search_space_id
        for tid in ds.task_ids():
            assert np.array_equal(back.tasks[tid][0], ds.tasks[tid][0])
            assert np.array_equal(back.tasks[tid][1], ds.tasks[tid][1])


class TestSinusoid:
    def test_grid_has_201_points(self):
        t = benchmarks.make_sinusoid_task(0.0)
        assert t.size == 201 and t.dim == 1
        assert t.X[0, 0] == -10.0 and abs(t.X[-1, 0] - 10.0) < 1e-12

    def test_analytic_values(self):
        t = benchmarks.make_sinusoid_task(0.0)
        i = np.where(np.isclose(t.X[:, 0], 0.0))[0][0]
        assert abs(t.y[i] - math.sin(math.pi / 2)) < 1e-12
        t2 = benchmarks.make_sinusoid_task(1.0, amplitude=2.5)
        assert abs(t2.y[i] - 2.5 * math.sin(math.pi / 2 + 1.0)) < 1e-12

    def test_meta_dataset_family(self):
        ds = benchmarks.sinusoid_meta_dataset([1, 2], amplitudes=[1.0, 3.0])
        assert len(ds.tasks) == 2
        for tid, (X, y) in ds.tasks.items():
            assert X.shape == (201, 1)
        assert any("amp=3" in tid for tid in ds.tasks)

    def test_degenerate_grid_rejected(self):
        with pytest.raises(ValueError):
            benchmarks.make_sinusoid_task(0.0, lo=1.0, hi=0.0)


def hist_from_incumbents(method, values, n_init=1):
    """Build a minimal history whose incumbent_curve equals `values`."""
    h = bo.BoHistory("t", method, 0, n_init)
    for k, v in enumerate(values):
        h.steps.append(bo.BoStep(k, k, np.empty(0), float(v), float("nan")))
    # make incumbents reproduce values exactly: values must be non-decreasing
    return h


class TestAverageRank:
    def test_two_methods_hand_computed(self):
        # cell 1: A ahead at both steps; cell 2: tie at step 0, B ahead at step 1
        hists = {
            "A": [hist_from_incumbents("A", [2.0, 3.0]),
                  hist_from_incumbents("A", [1.0, 1.0])],
            "B": [hist_from_incumbents("B", [1.0, 2.0]),
                  hist_from_incumbents("B", [1.0, 4.0])],
        }
        curves = benchmarks.average_rank_metric(hists)
        # step 0: cell1 ranks (1,2); cell2 tie -> (1.5,1.5)
        assert np.allclose(curves["A"].values, [(1 + 1.5) / 2, (1 + 2) / 2])
        assert np.allclose(curves["B"].values, [(2 + 1.5) / 2, (2 + 1) / 2])

    def test_three_methods_sum_invariant(self, rng):
        hists = {m: [hist_from_incumbents(m, np.maximum.accumulate(rng.standard_normal(4)))
                     for _ in range(5)] for m in ("a", "b", "c")}
        curves = benchmarks.average_rank_metric(hists)
        total = sum(curves[m].values for m in curves)
        assert np.allclose(total, 6.0)  # 1+2+3 at every step

    def test_mismatched_cells_rejected(self):
        hists = {"A": [hist_from_incumbents("A", [1.0])],
                 "B": []}
        with pytest.raises(ValueError):
            benchmarks.average_rank_metric(hists)

    def test_unequal_lengths_rejected(self):
        hists = {"A": [hist_from_incumbents("A", [1.0, 2.0])],
                 "B": [hist_from_incumbents("B", [1.0])]}
        with pytest.raises(ValueError):
            benchmarks.average_rank_metric(hists)


class TestNormalizedRegret:
    def test_values(self):
        h = hist_from_incumbents("m", [0.0, 5.0, 10.0])
        c = benchmarks.normalized_regret(h, y_min=0.0, y_max=10.0)
        assert np.allclose(c.values, [1.0, 0.5, 0.0])

    def test_degenerate_range(self):
        h = hist_from_incumbents("m", [1.0])
        with pytest.raises(ValueError):
            benchmarks.normalized_regret(h, 2.0, 2.0)


class TestCurveCsv:
    def test_roundtrip_exact(self, tmp_path):
        c = benchmarks.MetricCurve("m", np.array([1.0, 1.5, 1.25]))
        path = tmp_path / "c.csv"
        benchmarks.curve_to_csv(c, path)
        rows = path.read_text().strip().splitlines()
        assert rows[0] == "step,value"
        assert [float(r.split(",")[1]) for r in rows[1:]] == [1.0, 1.5, 1.25]

    def test_wide_csv(self, tmp_path):
        curves = {"b": benchmarks.MetricCurve("b", np.array([2.0, 1.0])),
                  "a": benchmarks.MetricCurve("a", np.array([1.0, 2.0]))}
        path = tmp_path / "wide.csv"
        benchmarks.curves_to_wide_csv(curves, path)
        rows = path.read_text().strip().splitlines()
        assert rows[0] == "step,a,b"
        assert rows[1].split(",") == ["0", "1.0", "2.0"]
