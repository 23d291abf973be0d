import csv
import json

import numpy as np
import pytest

from tkrr.cli import main
from tkrr.model_io import load_model
from tkrr.signal.io import read_features, read_recording
from tkrr.signal.recording import SEIZURE
from tkrr.signal.windows import segment_windows
from tkrr.solver import predict_scores

SYNTH = ["--patients", "3", "--seizures-per", "2", "--duration", "150"]
TRAIN = ["--rank", "4", "--basis", "6"]


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="module")
def work(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    assert main(["synth", *SYNTH, "--seed", "7", "--out", str(root / "rec")]) == 0
    assert main(["extract", "--in", str(root / "rec"), "--out", str(root / "feat.csv")]) == 0
    assert main(["train", "--features", str(root / "feat.csv"), "--leave-out-patient", "p01",
                 *TRAIN, "--sweeps", "2", "--out", str(root / "pi.txt")]) == 0
    return root


def test_synth_outputs(work):
    files = sorted((work / "rec").glob("p*.csv"))
    assert [f.name for f in files if "annotations" not in f.name] == \
        ["p01.csv", "p02.csv", "p03.csv"]
    rec = read_recording(work / "rec" / "p01.csv")
    seizures = [a for a in rec.annotations if a.label == SEIZURE]
    assert len(seizures) == 2
    assert all(a.end - a.start >= 10.0 for a in seizures)
    assert (work / "rec" / "synth.manifest.json").exists()


def test_synth_deterministic(work, tmp_path):
    assert main(["synth", *SYNTH, "--seed", "7", "--out", str(tmp_path)]) == 0
    for f in (work / "rec").glob("p*.csv"):
        assert (tmp_path / f.name).read_bytes() == f.read_bytes()


def test_extract_table(work):
    data = read_features(work / "feat.csv")
    with open(work / "feat.csv") as fh:
        assert len(next(csv.reader(fh))) == 36
    expected = sum(len(segment_windows(read_recording(work / "rec" / f"p0{p}.csv")))
                   for p in (1, 2, 3))
    assert len(data) == expected
    assert np.all(np.abs(data.features) < np.inf)


def test_train_outputs(work, capsys):
    hist = [float(r["objective"]) for r in rows(work / "pi.txt.history.csv")]
    assert len(hist) == 2 * 32
    assert all(b <= a * (1 + 1e-9) for a, b in zip(hist, hist[1:]))
    manifest = json.loads((work / "pi.txt.manifest.json").read_text())
    assert manifest["command"] == "train"
    assert manifest["config"]["leave_out_patient"] == "p01"
    assert set(manifest) >= {"inputs", "outputs", "seed", "version", "wall_time_s"}


def test_train_prints_counts(work, tmp_path, capsys):
    main(["train", "--features", str(work / "feat.csv"), *TRAIN, "--sweeps", "0",
          "--out", str(tmp_path / "m.txt")])
    out = capsys.readouterr().out
    n = len(read_features(work / "feat.csv"))
    assert f"tkrr {4 * 6 * 32}, dual {n * 32 + n}" in out


def test_inspect(work, capsys):
    assert main(["inspect", "--model", str(work / "pi.txt")]) == 0
    out = capsys.readouterr().out
    assert "parameters         768" in out
    assert "dims (D)           32" in out


def test_finetune_zero_updates_is_identity(work, tmp_path):
    out = tmp_path / "pf.txt"
    assert main(["finetune", "--model", str(work / "pi.txt"), "--features", str(work / "feat.csv"),
                 "--patient", "p01", "--seizure-id", "1", "--max-updates", "0",
                 "--out", str(out)]) == 0
    X = read_features(work / "feat.csv").features
    np.testing.assert_array_equal(predict_scores(load_model(out), X),
                                  predict_scores(load_model(work / "pi.txt"), X))
    assert rows(str(out) + ".curve.csv") == []


def test_finetune_single_dim(work, tmp_path):
    out = tmp_path / "pf.txt"
    assert main(["finetune", "--model", str(work / "pi.txt"), "--features", str(work / "feat.csv"),
                 "--patient", "p01", "--seizure-id", "2", "--max-updates", "3",
                 "--update-dims", "5", "--out", str(out)]) == 0
    before, after = load_model(work / "pi.txt").weights, load_model(out).weights
    changed = [d for d in range(32)
               if not np.array_equal(before.factors[d], after.factors[d])]
    assert changed == [4]
    curve = rows(str(out) + ".curve.csv")
    assert len(curve) == 3 and {r["dim"] for r in curve} == {"5"}
    assert all(0 <= float(r["auroc"]) <= 1 for r in curve)


def test_evaluate(work, tmp_path, capsys):
    report = tmp_path / "rep.txt"
    assert main(["evaluate", "--model", str(work / "pi.txt"), "--features", str(work / "feat.csv"),
                 "--patient", "p01", "--report", str(report)]) == 0
    data = read_features(work / "feat.csv")
    kept = np.sum((data.group_ids == "p01") & ~data.overlap_flags)
    text = report.read_text()
    assert f"n_samples = {kept}" in text
    for line in capsys.readouterr().out.splitlines()[:-1]:
        assert 0 <= float(line.split()[1]) <= 1


@pytest.mark.parametrize("argv", [
    [],
    ["bogus"],
    ["train", "--features", "x.csv"],
    ["synth", "--patients", "two", "--out", "d"],
])
def test_usage_errors(argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 1


def test_unknown_patient_is_usage_error(work, tmp_path):
    assert main(["evaluate", "--model", str(work / "pi.txt"), "--features",
                 str(work / "feat.csv"), "--patient", "p99",
                 "--report", str(tmp_path / "r.txt")]) == 1


def test_bad_update_dims(work, tmp_path):
    assert main(["finetune", "--model", str(work / "pi.txt"), "--features", str(work / "feat.csv"),
                 "--patient", "p01", "--seizure-id", "1", "--update-dims", "0",
                 "--out", str(tmp_path / "x.txt")]) == 1


def test_refuses_to_overwrite_input(work):
    assert main(["train", "--features", str(work / "feat.csv"), *TRAIN,
                 "--out", str(work / "feat.csv")]) == 1


def test_corrupt_model_is_data_error(tmp_path):
    bad = tmp_path / "m.txt"
    bad.write_text("format = tkrr-model\nformat_version = 99\n")
    assert main(["inspect", "--model", str(bad)]) == 2
    assert main(["inspect", "--model", str(tmp_path / "absent.txt")]) == 2


def test_malformed_features_is_data_error(tmp_path):
    bad = tmp_path / "f.csv"
    bad.write_text("a,b\n1,2\n")
    assert main(["train", "--features", str(bad), "--out", str(tmp_path / "m.txt")]) == 2


def test_end_to_end_bitwise(tmp_path):
    def run(root):
        main(["synth", *SYNTH, "--seed", "3", "--out", str(root / "rec")])
        main(["extract", "--in", str(root / "rec"), "--out", str(root / "f.csv")])
        main(["train", "--features", str(root / "f.csv"), "--leave-out-patient", "p02", *TRAIN,
              "--out", str(root / "m.txt")])
        main(["finetune", "--model", str(root / "m.txt"), "--features", str(root / "f.csv"),
              "--patient", "p02", "--seizure-id", "1", "--max-updates", "4",
              "--out", str(root / "pf.txt")])
        return [(root / n).read_bytes()
                for n in ("f.csv", "m.txt", "m.txt.history.csv", "pf.txt", "pf.txt.curve.csv")]

    (tmp_path / "a").mkdir()
    (tmp_path / "b").mkdir()
    assert run(tmp_path / "a") == run(tmp_path / "b")
