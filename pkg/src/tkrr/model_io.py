"""Plain-text model documents.

One ``key = value`` entry per line; vectors are space separated, factor
matrices are flattened column-major. Floats are written with 17
significant digits so a round trip reproduces every value exactly::

    format = tkrr-model
    format_version = 1
    dims = 2
    rank = 3
    basis_counts = 4 4
    ...
    factor_1 = <M_1 * R values>
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .basis import FeatureMapConfig
from .exceptions import ModelFormatError
from .signal.scaling import ScalerParams
from .solver import TkrrModel
from .tensor import CpdTensor

FORMAT_NAME = "tkrr-model"
FORMAT_VERSION = 1


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _vec(values) -> str:
    return " ".join(_fmt(v) for v in np.ravel(values))


def dumps_model(model: TkrrModel) -> str:
    fmap = model.feature_map
    lines = [
        f"format = {FORMAT_NAME}",
        f"format_version = {FORMAT_VERSION}",
        f"dims = {fmap.dims}",
        f"rank = {model.rank}",
        f"basis_counts = {' '.join(str(m) for m in fmap.basis_counts)}",
        f"half_widths = {_vec(fmap.half_widths)}",
        f"lengthscale = {_fmt(fmap.lengthscale)}",
        f"ridge = {_fmt(model.ridge)}",
        f"threshold = {_fmt(model.threshold)}",
        f"has_scaler = {int(model.scaler is not None)}",
    ]
    if model.scaler is not None:
        lines += [f"scaler_min = {_vec(model.scaler.minimum)}",
                  f"scaler_max = {_vec(model.scaler.maximum)}"]
    lines.append(f"history = {_vec(model.history)}")
    for d, f in enumerate(model.weights.factors, start=1):
        lines.append(f"factor_{d} = {_vec(f.ravel(order='F'))}")
    return "\n".join(lines) + "\n"


def _parse(text: str) -> dict[str, str]:
    entries = {}
    for n, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ModelFormatError(f"line {n}: expected 'key = value'")
        entries[key.strip()] = value.strip()
    return entries


def loads_model(text: str) -> TkrrModel:
    entries = _parse(text) if text.startswith("format = ") else None
    if entries is None or entries.get("format") != FORMAT_NAME:
        raise ModelFormatError(f"not a {FORMAT_NAME} document (missing or corrupt header)")
    version = entries.get("format_version")
    if version != str(FORMAT_VERSION):
        raise ModelFormatError(
            f"unsupported {FORMAT_NAME} format_version {version!r}; expected {FORMAT_VERSION}")
    try:
        dims = int(entries["dims"])
        rank = int(entries["rank"])
        counts = tuple(int(v) for v in entries["basis_counts"].split())
        widths = tuple(float(v) for v in entries["half_widths"].split())
        fmap = FeatureMapConfig(counts, widths, float(entries["lengthscale"]))
        if fmap.dims != dims:
            raise ModelFormatError("dims does not match basis_counts")
        factors = []
        for d in range(1, dims + 1):
            vals = np.array([float(v) for v in entries[f"factor_{d}"].split()])
            factors.append(vals.reshape((counts[d - 1], rank), order="F"))
        scaler = None
        if entries.get("has_scaler") == "1":
            scaler = ScalerParams(np.array(entries["scaler_min"].split(), dtype=float),
                                  np.array(entries["scaler_max"].split(), dtype=float))
        history = [float(v) for v in entries.get("history", "").split()]
        return TkrrModel(fmap, CpdTensor(tuple(factors)), float(entries["ridge"]),
                         scaler=scaler, threshold=float(entries["threshold"]),
                         history=history)
    except ModelFormatError:
        raise
    except (KeyError, ValueError) as exc:
        raise ModelFormatError(f"corrupt {FORMAT_NAME} document: {exc}") from exc


def save_model(model: TkrrModel, path: str | Path) -> None:
    Path(path).write_text(dumps_model(model))


def load_model(path: str | Path) -> TkrrModel:
    try:
        text = Path(path).read_text()
    except (OSError, UnicodeDecodeError) as exc:
        raise ModelFormatError(f"{path}: {exc}") from exc
    return loads_model(text)
