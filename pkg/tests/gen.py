"""Random model and channel generators shared by the test modules."""
from __future__ import annotations

import numpy as np

from sibkit.models import SourceModel
from sibkit.probcore import Channel, JointPMF, VarLabel, extend_with_channel, identity_channel


def card(rng, lo=2, hi=3) -> int:
    return int(rng.integers(lo, hi + 1))


def dist(rng, n: int, sparse: float = 0.0) -> np.ndarray:
    p = rng.dirichlet(np.ones(n))
    if sparse and n > 1:
        drop = rng.random(n) < sparse
        drop[rng.integers(n)] = False
        p[drop] = 0.0
        p /= p.sum()
    return p


def channel(rng, inputs, out: VarLabel, sparse: float = 0.0) -> Channel:
    shape = tuple(v.cardinality for v in inputs)
    rows = np.array([dist(rng, out.cardinality, sparse) for _ in range(int(np.prod(shape)))])
    return Channel(inputs, out, rows.reshape(shape + (out.cardinality,)))


def random_joint(rng, names=("A", "B", "C", "D"), sparse: float = 0.2) -> JointPMF:
    labels = [VarLabel(n, card(rng)) for n in names]
    size = int(np.prod([v.cardinality for v in labels]))
    return JointPMF(labels, dist(rng, size, sparse).reshape([v.cardinality for v in labels]))


def general_model(rng, with_z: bool = True) -> SourceModel:
    names = ("X", "Yp", "Ys", "Y", "Z") if with_z else ("X", "Yp", "Ys", "Y")
    return SourceModel(random_joint(rng, names))


def markov_xy_model(rng) -> SourceModel:
    """Sources with X - Y - (Ys, Z): I(X; Ys, Z | Y) = 0 by construction."""
    y = VarLabel("Y", card(rng))
    x, ys, z, yp = (VarLabel(n, card(rng)) for n in ("X", "Ys", "Z", "Yp"))
    joint = JointPMF([y], dist(rng, y.cardinality))
    joint = extend_with_channel(joint, channel(rng, [y], x))
    pair = np.array([dist(rng, ys.cardinality * z.cardinality) for _ in range(y.cardinality)])
    joint = extend_with_channel(joint, Channel([y], (ys, z),
                                               pair.reshape(y.cardinality, ys.cardinality, z.cardinality)))
    joint = extend_with_channel(joint, channel(rng, [x, y], yp))
    return SourceModel(joint)


def y_equals_z_model(rng) -> SourceModel:
    base = random_joint(rng, ("X", "Yp", "Ys", "Y"))
    return SourceModel(extend_with_channel(base, identity_channel(base.label("Y"), "Z")))


def v_channel(rng, model: SourceModel, nv: int | None = None, sparse: float = 0.0) -> Channel:
    x = model.joint.label("X")
    return channel(rng, [x], VarLabel("V", nv or card(rng)), sparse)
