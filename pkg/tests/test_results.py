"""
Tests for the result file writer and readers.
"""

import csv
import json
import os

import numpy as np
import pytest

from models.schemas import DetectorId, DetectorRun, StatSamples
from services.experiments import empirical_roc, histogram
from services.results import (
    ResultsError,
    ResultsWriter,
    format_number,
    read_roc_csv,
    read_summary_csv,
    write_outputs,
)


def make_run(detector_id=DetectorId.AMF, h0=(1.0, 3.0), h1=(2.0, 4.0), failures=0):
    samples = StatSamples(detector_id=detector_id, h0_values=list(h0), h1_values=list(h1), failures=failures)
    return DetectorRun(samples=samples, roc=empirical_roc(samples), histogram=histogram(samples, bins=2))


def read_bytes(path):
    with open(path, "rb") as f:
        return f.read()


class TestFormatNumber:
    """Tests for format_number."""

    def test_short_values(self):
        """Exact values print without padding."""
        assert format_number(0.0) == "0"
        assert format_number(0.5) == "0.5"
        assert format_number(1) == "1"

    def test_round_trips_exactly(self, rng):
        """17 significant digits reproduce every double."""
        for value in rng.normal(size=50) * 1e3:
            assert float(format_number(value)) == value


class TestResultsWriter:
    """Tests for ResultsWriter."""

    def test_roc_file(self, temp_out_dir):
        """ROC rows follow the curve with a single header line."""
        path = ResultsWriter(temp_out_dir).write_roc(make_run())
        assert os.path.basename(path) == "roc_amf.csv"
        assert read_bytes(path) == b"pfa,pd\n0,0\n0,0.5\n0.5,0.5\n0.5,1\n1,1\n"

    def test_stats_file(self, temp_out_dir):
        """H0 values come first, then H1, each by trial index."""
        path = ResultsWriter(temp_out_dir).write_stats(make_run(DetectorId.HETERO_GLRT))
        assert os.path.basename(path) == "stats_hetero.csv"
        assert read_bytes(path) == b"hypothesis,value\nh0,1\nh0,3\nh1,2\nh1,4\n"

    def test_histogram_file(self, temp_out_dir):
        """Bin edges and both counts per row."""
        path = ResultsWriter(temp_out_dir).write_histogram(make_run(DetectorId.ASD))
        assert read_bytes(path) == b"bin_left,bin_right,h0_count,h1_count\n1,2.5,1,1\n2.5,4,1,1\n"

    def test_summary_file(self, temp_out_dir):
        """Summary lists every detector; a missing ROC gives nan."""
        empty = DetectorRun(samples=StatSamples(detector_id=DetectorId.ASD, failures=4))
        path = ResultsWriter(temp_out_dir).write_summary([make_run(failures=1), empty])
        assert read_bytes(path) == b"detector,auc,trials,failures\namf,0.75,3,1\nasd,nan,4,4\n"

    def test_summary_reader(self, temp_out_dir):
        """read_summary_csv parses what write_summary wrote."""
        path = ResultsWriter(temp_out_dir).write_summary([make_run(), make_run(DetectorId.AMF_KNOWN)])
        summary = read_summary_csv(path)
        assert summary[DetectorId.AMF] == (0.75, 2, 0)
        assert set(summary) == {DetectorId.AMF, DetectorId.AMF_KNOWN}

    def test_roc_reader(self, temp_out_dir):
        """read_roc_csv gives back the stored curve exactly."""
        run = make_run(h0=np.linspace(0, 1, 7), h1=np.linspace(0.3, 1.4, 9))
        pfa, pd = read_roc_csv(ResultsWriter(temp_out_dir).write_roc(run))
        np.testing.assert_array_equal(pfa, run.roc.pfa)
        np.testing.assert_array_equal(pd, run.roc.pd)

    def test_manifest(self, temp_out_dir):
        """Manifest is sorted, indented JSON with a trailing newline."""
        path = ResultsWriter(temp_out_dir).write_manifest({"seed": 3, "scenario": "HE"})
        assert read_bytes(path) == b'{\n  "scenario": "HE",\n  "seed": 3\n}\n'

    def test_write_all(self, temp_out_dir):
        """Every file of a campaign is written."""
        empty = DetectorRun(samples=StatSamples(detector_id=DetectorId.ASD, failures=2), aborted=True)
        paths = write_outputs([make_run(), empty], temp_out_dir, {"scenario": "HE"})
        names = sorted(os.path.basename(p) for p in paths)
        assert names == ["hist_amf.csv", "manifest.json", "roc_amf.csv", "stats_amf.csv", "summary.csv"]

    def test_unwritable_directory(self, temp_out_dir):
        """An output path that is a file is reported."""
        blocker = os.path.join(temp_out_dir, "blocker")
        with open(blocker, "w") as f:
            f.write("x")
        with pytest.raises(ResultsError, match="cannot create output directory"):
            ResultsWriter(os.path.join(blocker, "out"))

    def test_wrong_header(self, temp_out_dir):
        """Readers reject files with another header."""
        path = os.path.join(temp_out_dir, "roc_amf.csv")
        with open(path, "w") as f:
            f.write("x,y\n0,0\n")
        with pytest.raises(ResultsError, match="unexpected header"):
            read_roc_csv(path)

    def test_fields_are_csv_quoted(self, temp_out_dir):
        """Fields with separators or quotes are quoted and read back intact."""
        writer = ResultsWriter(temp_out_dir)
        path = writer._write_csv("odd.csv", ("label", "value"), [("a,b", "1"), ('say "x"', "2")])
        assert read_bytes(path) == b'label,value\n"a,b",1\n"say ""x""",2\n'
        with open(path, newline="") as f:
            assert list(csv.reader(f))[1:] == [["a,b", "1"], ['say "x"', "2"]]

    def test_manifest_is_valid_json(self, temp_out_dir):
        """The manifest loads back to the same mapping."""
        config = {"scenario": "HET", "group_sizes": [50, 50], "epsilon": 0.2}
        path = ResultsWriter(temp_out_dir).write_manifest(config)
        with open(path) as f:
            assert json.load(f) == config
