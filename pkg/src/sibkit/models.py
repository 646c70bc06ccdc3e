"""Source model constructors: tabulated joints, binary and Gaussian cascades."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .probcore import Channel, JointPMF, StochasticityError, VarLabel, extend_with_channel

SOURCE_NAMES = ("X", "Yp", "Ys", "Y", "Z")
NORMALIZATION_TOL = 1e-9


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class SourceModel:
    joint: JointPMF
    description: str = ""

    def __post_init__(self):
        for name in ("X", "Yp"):
            if not self.joint.has(name):
                raise ModelError(f"source model must contain {name!r}")

    def completed(self) -> JointPMF:
        """Joint with every absent source variable added as a constant."""
        joint = self.joint
        for name in SOURCE_NAMES:
            if not joint.has(name):
                joint = JointPMF(joint.vars + (VarLabel(name, 1),), joint.table[..., None])
        return joint

    def has(self, name: str) -> bool:
        return self.joint.has(name)


@dataclass(frozen=True)
class BinaryCascadeParams:
    p: float
    q: float

    def __post_init__(self):
        for k in ("p", "q"):
            v = getattr(self, k)
            if not 0.0 <= v <= 0.5:
                raise ModelError(f"{k}={v} outside [0, 1/2]")


@dataclass(frozen=True)
class GaussianCascadeParams:
    N_x: float
    N_s: float
    N_p: float

    def __post_init__(self):
        if not (self.N_x > 0 and self.N_s > 0 and self.N_p >= self.N_s):
            raise ModelError(
                f"need N_x > 0, N_s > 0, N_p >= N_s (got {self.N_x}, {self.N_s}, {self.N_p})")


def from_table(vars, table, description: str = "") -> SourceModel:
    labels = [v if isinstance(v, VarLabel) else VarLabel(v["name"], int(v["cardinality"]))
              for v in vars]
    arr = np.asarray(table, dtype=float).ravel()
    expected = int(np.prod([v.cardinality for v in labels], dtype=np.int64))
    if arr.size != expected:
        raise ModelError(f"table has {arr.size} entries, expected {expected}")
    if np.any(arr < 0):
        raise ModelError("table has negative entries")
    total = arr.sum()
    if abs(total - 1.0) > NORMALIZATION_TOL:
        raise ModelError(f"table sums to {total:.12g}, not 1")
    try:
        joint = JointPMF(labels, arr / total)
    except StochasticityError as exc:
        raise ModelError(str(exc)) from exc
    return SourceModel(joint, description)


def _bsc(a: float) -> np.ndarray:
    return np.array([[1 - a, a], [a, 1 - a]])


def binary_cascade(params: BinaryCascadeParams) -> SourceModel:
    x = VarLabel("X", 2)
    ys = VarLabel("Ys", 2)
    yp = VarLabel("Yp", 2)
    joint = JointPMF([x], [0.5, 0.5])
    joint = extend_with_channel(joint, Channel([x], ys, _bsc(params.p)))
    joint = extend_with_channel(joint, Channel([ys], yp, _bsc(params.q)))
    return SourceModel(joint, f"binary cascade X->BSC({params.p})->Ys->BSC({params.q})->Yp")


def _grid(sigma: float, bins: int, span: float) -> tuple[np.ndarray, float]:
    edges = np.linspace(-span * sigma, span * sigma, bins + 1)
    return 0.5 * (edges[:-1] + edges[1:]), edges[1] - edges[0]


def _gauss_rows(src: np.ndarray, dst: np.ndarray, width: float, var: float) -> np.ndarray:
    if var <= 0:
        # zero noise: every source cell lands in its nearest destination cell
        rows = np.zeros((src.size, dst.size))
        rows[np.arange(src.size), np.abs(src[:, None] - dst[None, :]).argmin(axis=1)] = 1.0
        return rows
    z = (dst[None, :] - src[:, None]) ** 2 / (2 * var)
    rows = np.exp(-z) * width / math.sqrt(2 * math.pi * var)
    sums = rows.sum(axis=1, keepdims=True)
    if np.any(sums <= 0):
        raise ModelError("grid too narrow for the noise level")
    return rows / sums


def gaussian_cascade_discretized(params: GaussianCascadeParams, bins: int = 64,
                                 span: float = 5.0) -> SourceModel:
    """Midpoint-rule discretization of X -> Ys = X + Ns -> Yp = Ys + Np.

    Each variable lives on a uniform grid covering +-span standard deviations
    of its own marginal. Cell masses are renormalized per row, which folds
    the tails into the grid.
    """
    if bins < 8:
        raise ModelError("bins must be at least 8")
    if not span > 0:
        raise ModelError("span must be positive")
    sx = math.sqrt(params.N_x)
    ss = math.sqrt(params.N_x + params.N_s)
    sp = math.sqrt(params.N_x + params.N_p)
    gx, wx = _grid(sx, bins, span)
    gs, ws = _grid(ss, bins, span)
    gp, wp = _grid(sp, bins, span)
    px = np.exp(-gx ** 2 / (2 * params.N_x)) * wx
    px /= px.sum()
    x, ys, yp = VarLabel("X", bins), VarLabel("Ys", bins), VarLabel("Yp", bins)
    joint = JointPMF([x], px)
    joint = extend_with_channel(joint, Channel([x], ys, _gauss_rows(gx, gs, ws, params.N_s)))
    joint = extend_with_channel(
        joint, Channel([ys], yp, _gauss_rows(gs, gp, wp, params.N_p - params.N_s)))
    desc = (f"discretized Gaussian cascade N_x={params.N_x}, N_s={params.N_s}, "
            f"N_p={params.N_p}, bins={bins}, span={span}")
    return SourceModel(joint, desc)


# -- file format -------------------------------------------------------------

def _vars_json(vars) -> list[dict]:
    return [{"name": v.name, "cardinality": v.cardinality} for v in vars]


def _table_json(table: np.ndarray) -> list[float]:
    return np.asarray(table, dtype=float).ravel().tolist()


def model_to_json(model: SourceModel) -> dict:
    return {"vars": _vars_json(model.joint.vars),
            "table": _table_json(model.joint.table),
            "description": model.description}


def model_from_json(doc: dict) -> SourceModel:
    try:
        return from_table(doc["vars"], doc["table"], doc.get("description", ""))
    except (KeyError, TypeError) as exc:
        raise ModelError(f"malformed model document: {exc}") from exc


def channel_to_json(ch: Channel) -> dict:
    return {"vars": _vars_json(ch.inputs + ch.outputs),
            "outputs": [v.name for v in ch.outputs],
            "table": _table_json(ch.table)}


def channel_from_json(doc: dict) -> Channel:
    try:
        labels = [VarLabel(v["name"], int(v["cardinality"])) for v in doc["vars"]]
        outs = doc.get("outputs") or [labels[-1].name]
        if [v.name for v in labels[-len(outs):]] != list(outs):
            raise ModelError("channel outputs must be the trailing variables")
        return Channel(labels[:-len(outs)], labels[-len(outs):], doc["table"], tol=1e-9)
    except (KeyError, TypeError) as exc:
        raise ModelError(f"malformed channel document: {exc}") from exc
    except StochasticityError as exc:
        raise ModelError(str(exc)) from exc


def load_model(path) -> SourceModel:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ModelError(f"cannot read model file {path}: {exc}") from exc
    return model_from_json(doc)


def load_channel(path) -> Channel:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ModelError(f"cannot read channel file {path}: {exc}") from exc
    return channel_from_json(doc)


def dump_json(doc: dict, path=None) -> str:
    text = json.dumps(doc, indent=1)
    if path is not None:
        Path(path).write_text(text + "\n")
    return text
