"""Command-line front end: synth, extract, train, finetune, evaluate, inspect.

Every command writes its outputs as new files, each next to a
``<output>.manifest.json`` recording the command, its full configuration,
inputs, outputs, seed, tool version and wall time. Exit status is 0 on
success, 1 on usage errors and 2 on data or format errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from pathlib import Path
from typing import Sequence

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from .evaluation import evaluate_scores, leave_one_seizure_in_fold, write_report
from .exceptions import ModelFormatError
from .experiment import Hyperparameters, run_curve, train_model, with_f1_threshold
from .model_io import load_model, save_model
from .oracle import dual_param_count
from .signal.io import list_recordings, read_features, read_recording, write_features, \
    write_recording
from .signal.pipeline import PipelineConfig, concat_datasets, extract_features
from .signal.synth import seizure_layout, synthesize_recording
from .solver import predict_scores

log = logging.getLogger("tkrr")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _manifest_path(output: Path) -> Path:
    return output.parent / (output.name + ".manifest.json")


def write_manifest(output: Path, command: str, args: argparse.Namespace,
                   inputs: Sequence[Path], outputs: Sequence[Path], started: float) -> Path:
    config = {k: v for k, v in vars(args).items() if k not in ("func", "command")}
    doc = {
        "command": command,
        "config": {k: str(v) if isinstance(v, Path) else v for k, v in config.items()},
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
        "seed": config.get("seed"),
        "version": __version__,
        "wall_time_s": round(time.perf_counter() - started, 6),
    }
    path = _manifest_path(output)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


def _check_fresh(*outputs: Path, inputs: Sequence[Path] = ()) -> None:
    resolved = {p.resolve() for p in inputs}
    for out in outputs:
        if out.resolve() in resolved:
            raise UsageError(f"output {out} would overwrite an input")


def _select_patient(data, patient: str):
    rows = np.flatnonzero(data.group_ids == patient)
    if rows.size == 0:
        known = ", ".join(sorted(set(data.group_ids.tolist())))
        raise UsageError(f"unknown patient {patient!r} (known: {known})")
    return rows


# -- commands -----------------------------------------------------------------

def cmd_synth(args, started):
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for p in range(args.patients):
        rec_seed, patient_seed = (int(v) for v in np.random.SeedSequence([args.seed, p]).generate_state(2))
        spans = seizure_layout(np.random.default_rng([args.seed, p, 1]), args.seizures_per,
                               args.duration, min_len=args.min_seizure, max_len=args.max_seizure)
        pid = f"p{p + 1:02d}"
        rec = synthesize_recording(rec_seed, args.duration, spans, patient_seed=patient_seed,
                                   sample_rate=args.sample_rate, patient_id=pid)
        path = out / f"{pid}.csv"
        write_recording(rec, path)
        written.append(path)
    write_manifest(out / "synth", "synth", args, [], written, started)
    print(f"wrote {len(written)} recordings to {out}")


def cmd_extract(args, started):
    files = list_recordings(args.input)
    if not files:
        raise ModelFormatError(f"no recordings found in {args.input}")
    _check_fresh(args.out, inputs=files)
    cfg = PipelineConfig(sample_rate=args.sample_rate, band=(args.low, args.high),
                         notch_freq=args.notch)
    data = concat_datasets([extract_features(read_recording(f), cfg) for f in files])
    write_features(data, args.out)
    write_manifest(args.out, "extract", args, files, [args.out], started)
    print(f"{len(data)} windows x {data.dims} features from {len(files)} recordings -> {args.out}")


def _hyperparameters(args) -> Hyperparameters:
    return Hyperparameters(rank=args.rank, basis=args.basis, lengthscale=args.lengthscale,
                           ridge=args.ridge, half_width=args.half_width, sweeps=args.sweeps,
                           seed=args.seed)


def cmd_train(args, started):
    _check_fresh(args.out, inputs=[args.features])
    data = read_features(args.features)
    if args.leave_out_patient is not None:
        held = _select_patient(data, args.leave_out_patient)
        data = data.subset(np.setdiff1d(np.arange(len(data)), held))
    if len(set(data.labels.tolist())) < 2:
        raise ModelFormatError("training rows must contain both classes")
    model = train_model(data, _hyperparameters(args))
    save_model(model, args.out)
    history = args.out.parent / (args.out.name + ".history.csv")
    with open(history, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["update", "dim", "objective"])
        for k, obj in enumerate(model.history, start=1):
            w.writerow([k, (k - 1) % model.dims + 1, _fmt(obj)])
    write_manifest(args.out, "train", args, [args.features], [args.out, history], started)
    dual = dual_param_count(len(data), data.dims)
    print(f"trained on {len(data)} rows; threshold {model.threshold:.6g}")
    print(f"parameters: tkrr {model.param_count}, dual {dual}, "
          f"dual/tkrr ratio {dual / model.param_count:.3f}")
    if model.singular_updates:
        print(f"warning: {model.singular_updates} singular block updates", file=sys.stderr)


def _parse_dims(text: str | None, dims: int) -> list[int] | None:
    if text is None:
        return None
    try:
        chosen = [int(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError as exc:
        raise UsageError(f"--update-dims must be comma-separated integers: {text!r}") from exc
    if not chosen or any(not 1 <= d <= dims for d in chosen):
        raise UsageError(f"--update-dims entries must lie in 1..{dims}")
    return [d - 1 for d in chosen]


def cmd_finetune(args, started):
    _check_fresh(args.out, inputs=[args.model, args.features])
    source = load_model(args.model)
    data = read_features(args.features)
    if data.dims != source.dims:
        raise ModelFormatError(f"features have {data.dims} columns, model expects {source.dims}")
    update_dims = _parse_dims(args.update_dims, source.dims)
    _select_patient(data, args.patient)
    try:
        fold = leave_one_seizure_in_fold(data, args.patient, args.seizure_id)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    max_updates = source.dims if args.max_updates is None else args.max_updates
    if max_updates < 0:
        raise UsageError("--max-updates must be >= 0")
    train, test = data.subset(fold.train), data.subset(fold.test)
    tuned, points = run_curve(source, train, test, max_updates, warm=True,
                              update_dims=update_dims)
    if max_updates > 0:
        tuned = with_f1_threshold(tuned, train)
    save_model(tuned, args.out)
    curve = args.out.parent / (args.out.name + ".curve.csv")
    with open(curve, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["update", "dim", "objective", "auroc", "auprc"])
        for p in points[1:]:
            w.writerow([p.update, p.dim + 1, _fmt(p.objective), _fmt(p.auroc), _fmt(p.auprc)])
    write_manifest(args.out, "finetune", args, [args.model, args.features], [args.out, curve],
                   started)
    base = points[0]
    print(f"fold: {fold.train.size} train rows, {fold.test.size} test rows")
    print(f"start  AUROC {base.auroc:.4f} AUPRC {base.auprc:.4f}")
    if len(points) > 1:
        last = points[-1]
        print(f"after {last.update} updates AUROC {last.auroc:.4f} AUPRC {last.auprc:.4f}")


def cmd_evaluate(args, started):
    _check_fresh(args.report, inputs=[args.model, args.features])
    model = load_model(args.model)
    data = read_features(args.features)
    if data.dims != model.dims:
        raise ModelFormatError(f"features have {data.dims} columns, model expects {model.dims}")
    rows = np.arange(len(data)) if args.patient is None else _select_patient(data, args.patient)
    rows = rows[~data.overlap_flags[rows]]
    test = data.subset(rows)
    report = evaluate_scores(predict_scores(model, test.features), test.labels, model.threshold)
    write_report(report, args.report)
    folds = Path(str(args.report) + ".folds.csv")
    write_manifest(args.report, "evaluate", args, [args.model, args.features],
                   [args.report, folds], started)
    for name in report.METRICS:
        value = getattr(report, name)
        print(f"{name:12s} {'undefined' if np.isnan(value) else f'{value:.4f}'}")
    print(f"{'rows':12s} {report.n_samples}")


def cmd_inspect(args, started):
    model = load_model(args.model)
    fmap = model.feature_map
    print(f"dims (D)           {model.dims}")
    print(f"rank (R)           {model.rank}")
    print(f"basis counts (M_d) {' '.join(str(m) for m in fmap.basis_counts)}")
    print(f"half widths (U_d)  {' '.join(f'{u:g}' for u in fmap.half_widths)}")
    print(f"lengthscale        {fmap.lengthscale:g}")
    print(f"ridge              {model.ridge:g}")
    print(f"parameters         {model.param_count}")
    print(f"threshold          {model.threshold:.17g}")
    print(f"scaler             {'yes' if model.scaler is not None else 'no'}")


# -- parser -------------------------------------------------------------------

def _add_hyper(p: argparse.ArgumentParser) -> None:
    d = Hyperparameters()
    p.add_argument("--rank", type=int, default=d.rank, help="CPD rank (default %(default)s)")
    p.add_argument("--basis", type=int, default=d.basis,
                   help="basis functions per feature (default %(default)s)")
    p.add_argument("--lengthscale", type=float, default=d.lengthscale,
                   help="RBF lengthscale (default %(default)s)")
    p.add_argument("--ridge", type=float, default=d.ridge,
                   help="ridge penalty (default %(default)s)")
    p.add_argument("--half-width", type=float, default=d.half_width,
                   help="basis domain half width (default %(default)s)")
    p.add_argument("--sweeps", type=int, default=d.sweeps, help="ALS sweeps (default %(default)s)")
    p.add_argument("--seed", type=int, default=d.seed, help="initialization seed (default %(default)s)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tkrr", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--threads", type=int, default=None,
                        help="cap BLAS/LAPACK threads (default: library default)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="generate synthetic multi-patient recordings")
    p.add_argument("--patients", type=int, default=6)
    p.add_argument("--seizures-per", type=int, default=9)
    p.add_argument("--duration", type=float, default=900.0, help="seconds per recording")
    p.add_argument("--min-seizure", type=float, default=10.0)
    p.add_argument("--max-seizure", type=float, default=30.0)
    p.add_argument("--sample-rate", type=float, default=250.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("extract", help="window recordings and compute the feature table")
    p.add_argument("--in", dest="input", type=Path, required=True, help="recording directory")
    p.add_argument("--out", type=Path, required=True, help="feature CSV")
    p.add_argument("--sample-rate", type=float, default=250.0)
    p.add_argument("--low", type=float, default=0.1, help="bandpass low edge, Hz")
    p.add_argument("--high", type=float, default=50.0, help="bandpass high edge, Hz")
    p.add_argument("--notch", type=float, default=50.0, help="mains frequency, Hz")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", help="fit scaler and model on all patients but one")
    p.add_argument("--features", type=Path, required=True)
    p.add_argument("--leave-out-patient", default=None)
    _add_hyper(p)
    p.add_argument("--out", type=Path, required=True, help="model file")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("finetune", help="warm-start ALS on one seizure of one patient")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--features", type=Path, required=True)
    p.add_argument("--patient", required=True)
    p.add_argument("--seizure-id", type=int, required=True)
    p.add_argument("--max-updates", type=int, default=None,
                   help="single-factor updates (default: one sweep)")
    p.add_argument("--update-dims", default=None,
                   help="comma-separated 1-based dimensions to update (default: all)")
    p.add_argument("--out", type=Path, required=True, help="fine-tuned model file")
    p.set_defaults(func=cmd_finetune)

    p = sub.add_parser("evaluate", help="score non-overlapping windows and write a report")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--features", type=Path, required=True)
    p.add_argument("--patient", default=None, help="restrict to one patient (default: all rows)")
    p.add_argument("--report", type=Path, required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("inspect", help="print model structure and size")
    p.add_argument("--model", type=Path, required=True)
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    started = time.perf_counter()
    try:
        with threadpool_limits(limits=args.threads):
            args.func(args, started)
    except UsageError as exc:
        print(f"tkrr {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError) as exc:
        print(f"tkrr {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
