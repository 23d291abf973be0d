"""CSV formats for recordings, annotations and window features.

Recording:   ``time_s,ch1,ch2,...``
Annotations: ``start_s,end_s,label,seizure_id`` (sidecar ``<stem>.annotations.csv``)
Features:    ``patient_id,seizure_id,label,overlap,f01..fNN``
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from ..dataset import LabeledDataset
from ..exceptions import ModelFormatError
from .recording import Annotation, Recording

ANNOTATION_SUFFIX = ".annotations.csv"
META_COLUMNS = ("patient_id", "seizure_id", "label", "overlap")


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def annotation_path(recording_path: str | Path) -> Path:
    p = Path(recording_path)
    return p.with_name(p.name[: -len(".csv")] + ANNOTATION_SUFFIX)


def write_recording(rec: Recording, path: str | Path) -> None:
    path = Path(path)
    t = np.arange(rec.n_samples) / rec.sample_rate
    header = ",".join(["time_s"] + [f"ch{c + 1}" for c in range(rec.n_channels)])
    np.savetxt(path, np.column_stack([t, rec.channels.T]), fmt="%.17g", delimiter=",",
               header=header, comments="")
    with open(annotation_path(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["start_s", "end_s", "label", "seizure_id"])
        for a in rec.annotations:
            w.writerow([fmt(a.start), fmt(a.end), a.label, a.seizure_id])


def read_recording(path: str | Path, patient_id: str | None = None) -> Recording:
    """Read a recording CSV and its annotation sidecar; the patient id defaults to the file stem."""
    path = Path(path)
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        with open(path) as fh:
            header = fh.readline().strip().split(",")
    except (OSError, ValueError) as exc:
        raise ModelFormatError(f"{path}: {exc}") from exc
    if header[0] != "time_s" or len(header) != data.shape[1] or data.shape[1] < 2:
        raise ModelFormatError(f"{path}: expected header time_s,ch1,...")
    if data.shape[0] < 2:
        raise ModelFormatError(f"{path}: need at least two samples")
    fs = 1.0 / float(np.median(np.diff(data[:, 0])))
    fs = round(fs, 6)
    anns = []
    ann_file = annotation_path(path)
    if ann_file.exists():
        with open(ann_file, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames != ["start_s", "end_s", "label", "seizure_id"]:
                raise ModelFormatError(f"{ann_file}: unexpected header {reader.fieldnames}")
            for row in reader:
                anns.append(Annotation(float(row["start_s"]), float(row["end_s"]),
                                       row["label"], int(row["seizure_id"])))
    pid = patient_id if patient_id is not None else path.name[: -len(".csv")]
    return Recording(data[:, 1:].T, fs, tuple(anns), pid)


def list_recordings(directory: str | Path) -> list[Path]:
    return sorted(p for p in Path(directory).glob("*.csv")
                  if not p.name.endswith(ANNOTATION_SUFFIX))


def write_features(data: LabeledDataset, path: str | Path) -> None:
    names = [f"f{i + 1:02d}" for i in range(data.dims)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(META_COLUMNS) + names)
        for i in range(len(data)):
            w.writerow([data.group_ids[i], int(data.seizure_ids[i]), int(data.labels[i]),
                        int(data.overlap_flags[i])] + [fmt(v) for v in data.features[i]])


def read_features(path: str | Path) -> LabeledDataset:
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            rows = list(reader)
    except (OSError, StopIteration) as exc:
        raise ModelFormatError(f"{path}: cannot read feature file ({exc})") from exc
    if tuple(header[:4]) != META_COLUMNS or len(header) < 5:
        raise ModelFormatError(f"{path}: header must start with {','.join(META_COLUMNS)}")
    try:
        groups = np.array([r[0] for r in rows], dtype=object)
        seizures = np.array([int(r[1]) for r in rows], dtype=int)
        labels = np.array([float(r[2]) for r in rows])
        overlap = np.array([bool(int(r[3])) for r in rows], dtype=bool)
        X = np.array([[float(v) for v in r[4:]] for r in rows]).reshape(len(rows), len(header) - 4)
    except (ValueError, IndexError) as exc:
        raise ModelFormatError(f"{path}: malformed row ({exc})") from exc
    return LabeledDataset(X, labels, groups, seizures, overlap)
