import json
import math
import os

import numpy as np
import pandas as pd

import analyze as ana
import classical_sim as cs
import config
import propagator as pr
import spectral as sp
import storage
import test_data


class TestTables(test_data.DataForTestingPytest):
    """This class tests the tables built by the analysis module (analyze.py) using the test data it inherits from
    the DataForTestingPytest class.

    Attributes: see the documentation of the DataForTestingPytest class
    """

    def test_spectrum_frame(self):
        """test that a spectrum is tabulated with levels counted from one"""
        solution = sp.eigenvalues(sp.SpectralProblem(self.periodic, 200.0))
        table = ana.spectrum_frame(solution)
        assert list(table.columns) == ana.SPECTRUM_COLUMNS
        assert table["index"].to_list() == [1, 2, 3]
        assert table["multiplicity"].to_list() == [1, 2, 2]

    def test_edge_frame(self):
        """test that missing edge levels are marked as NaN"""
        table = ana.edge_frame([(0.1, [-400.0]), (0.2, [])])
        assert table["n_negative"].to_list() == [1, 0]
        assert table["E_tan2"].iloc[0] == -400.0 * math.tan(0.05) ** 2
        assert table["E_edge_2"].isna().all()
        assert math.isnan(table["E_edge_1"].iloc[1])

    def test_convergence_frame(self):
        """test that the observed order is computed between consecutive grids"""
        table = ana.convergence_frame([{"N": 6, "h": 0.2, "E_fd": 1.04, "error": 0.04},
                                       {"N": 11, "h": 0.1, "E_fd": 1.01, "error": 0.01}])
        assert math.isnan(table["order"].iloc[0])
        assert abs(table["order"].iloc[1] - 2.0) < 1e-12

    def test_kernel_frames(self):
        """test the tables of a kernel and of a kernel row"""
        kernel = pr.image_kernel("neumann", 0.1, 5)
        table = ana.kernel_frame(kernel)
        assert list(table.columns) == ana.KERNEL_COLUMNS
        assert len(table) == 25
        assert table["re_K"].iloc[1] == kernel.values[0, 1].real
        row = ana.kernel_row_frame(pr.KernelEstimate([0.1, 0.2], 0.5, [1.0, 2.0], [0.0, 0.0], "lattice", {}))
        assert row["y"].to_list() == [0.5, 0.5]
        assert list(row.columns) == ana.KERNEL_ROW_COLUMNS

    def test_trajectory_frame(self):
        """test that flights and bounces are listed in time order with the bounce first"""
        trajectory = cs.evolve(self.interval, self.elastic, 0.25, 1.0, 2.0)
        table = ana.trajectory_frame(trajectory)
        assert table["event"].to_list() == ["flight", "bounce", "flight", "bounce", "flight", "end"]
        assert table["t"].to_list() == [0.0, 0.75, 0.75, 1.75, 1.75, 2.0]
        assert (table["y"] == 0.0).all()

    def test_absorbed_trajectory_frame(self):
        """test that an absorbed trajectory ends with an absorbed event at rest"""
        trajectory = cs.evolve(self.disk, self.absorbing, [0.0, 0.0], [1.0, 0.0], 5.0)
        last = ana.trajectory_frame(trajectory).iloc[-1]
        assert last["event"] == "absorbed"
        assert (last["x"], last["vx"]) == (1.0, 0.0)

    def test_report_frame(self):
        """test that a record becomes a two-column table"""
        table = ana.report_frame({"status": "completed", "bounces": 2})
        assert table["Quantity"].to_list() == ["status", "bounces"]
        assert table["Value"].to_list() == ["completed", 2]


class TestStorage(test_data.DataForTestingPytest):
    """This class tests how the storage module (storage.py) writes and reads artifacts.

    Attributes: see the documentation of the DataForTestingPytest class
    """

    def setup_method(self):
        """create the test data and a configuration to store with the artifacts"""
        super().setup_method()
        self.run_config = config.RunConfig(command="spectrum", family="dirichlet", levels=3)
        self.table = pd.DataFrame({"index": [1, 2], "E": [math.pi ** 2, 0.1 + 0.2]})

    def test_jsonable(self):
        """test the conversion of numpy, complex and non-finite values"""
        record = {"c": 1 + 2j, "inf": math.inf, "array": np.array([1.5, 2.5]), "n": np.int64(3), "flag": np.bool_(1)}
        assert storage.jsonable(record) == {"c": [1.0, 2.0], "inf": "inf", "array": [1.5, 2.5], "n": 3, "flag": True}

    def test_csv_header_and_content(self, tmp_path):
        """test that a CSV artifact starts with the version, the configuration and the seed"""
        path = storage.write_csv(self.table, str(tmp_path / "spectrum.csv"), self.run_config, seed=5)
        with open(path, encoding="utf-8") as handle:
            lines = handle.read().splitlines()
        assert lines[0] == f"# bcspec {config.__version__}"
        assert json.loads(lines[1][len("# config: "):])["family"] == "dirichlet"
        assert lines[2] == "# seed: 5"
        assert lines[3] == "index,E"
        restored = storage.read_csv(path)
        assert restored["E"].to_list() == self.table["E"].to_list()

    def test_identical_runs_give_identical_files(self, tmp_path):
        """test that writing the same artifact twice gives byte-identical files"""
        first = storage.write_csv(self.table, str(tmp_path / "first.csv"), self.run_config)
        second = storage.write_csv(self.table, str(tmp_path / "second.csv"), self.run_config)
        with open(first, "rb") as handle_first, open(second, "rb") as handle_second:
            assert handle_first.read() == handle_second.read()

    def test_json_artifact(self, tmp_path):
        """test that a JSON artifact carries a _meta block next to the record"""
        path = storage.write_json({"distance": 0.5, "phases": np.array([0.1, math.pi])},
                                  str(tmp_path / "distance.json"), self.run_config)
        document = storage.read_json(path)
        assert document["distance"] == 0.5
        assert document["phases"] == [0.1, math.pi]
        assert document["_meta"]["tool"] == "bcspec"
        assert document["_meta"]["config"]["levels"] == 3
        assert document["_meta"]["seed"] is None

    def test_atomic_write(self, tmp_path):
        """test that the target directory is created and that no temporary file is left behind"""
        target = tmp_path / "nested" / "out.txt"
        storage.write_atomic(str(target), "old")
        storage.write_atomic(str(target), "new")
        assert target.read_text(encoding="utf-8") == "new"
        assert os.listdir(tmp_path / "nested") == ["out.txt"]

    def test_json_floats_carry_17_digits(self, tmp_path):
        """test that JSON artifacts write floats like the CSV artifacts and read them back exactly"""
        path = storage.write_json({"x": 0.1, "whole": 3.0, "tiny": 1e-20}, str(tmp_path / "report.json"),
                                  self.run_config)
        with open(path, encoding="utf-8") as handle:
            text = handle.read()
        assert '"x": 0.10000000000000001' in text
        assert '"whole": 3.0' in text
        document = storage.read_json(path)
        assert document["x"] == 0.1
        assert document["tiny"] == 1e-20
        assert isinstance(document["whole"], float)
        assert storage.format_float(0.1) == storage.FLOAT_FORMAT % 0.1
