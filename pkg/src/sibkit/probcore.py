"""Exact finite-alphabet probability tables and entropic functionals.

Every information quantity is in bits. Tables are dense numpy arrays with one
axis per variable, in the order of ``JointPMF.vars``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

SUM_TOL = 1e-12
NEG_FLOOR = -1e-9


class LabelError(ValueError):
    pass


class StochasticityError(ValueError):
    pass


@dataclass(frozen=True)
class VarLabel:
    name: str
    cardinality: int

    def __post_init__(self):
        if int(self.cardinality) != self.cardinality or self.cardinality < 1:
            raise ValueError(f"cardinality of {self.name!r} must be a positive integer")


LabelLike = Union[str, VarLabel]


def _name(label: LabelLike) -> str:
    return label.name if isinstance(label, VarLabel) else str(label)


def _names(labels: Iterable[LabelLike] | LabelLike | None) -> list[str]:
    if labels is None:
        return []
    if isinstance(labels, (str, VarLabel)):
        return [_name(labels)]
    out = []
    for lab in labels:
        n = _name(lab)
        if n not in out:
            out.append(n)
    return out


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


class JointPMF:
    """Joint distribution over an ordered tuple of labeled variables."""

    __slots__ = ("vars", "table", "_index")

    def __init__(self, vars: Sequence[VarLabel], table, *, tol: float = SUM_TOL):
        vars = tuple(vars)
        names = [v.name for v in vars]
        if len(set(names)) != len(names):
            raise LabelError(f"duplicate variable names in {names}")
        shape = tuple(v.cardinality for v in vars)
        arr = np.asarray(table, dtype=float)
        if arr.size != int(np.prod(shape, dtype=np.int64)):
            raise ValueError(f"table has {arr.size} entries, expected {int(np.prod(shape))}")
        arr = arr.reshape(shape)
        if np.any(arr < 0) or not np.all(np.isfinite(arr)):
            raise StochasticityError("joint table has negative or non-finite entries")
        if abs(arr.sum() - 1.0) > tol:
            raise StochasticityError(f"joint table sums to {arr.sum():.15g}, not 1")
        self.vars = vars
        self.table = _frozen(arr)
        self._index = {n: i for i, n in enumerate(names)}

    @property
    def names(self) -> list[str]:
        return [v.name for v in self.vars]

    def has(self, label: LabelLike) -> bool:
        return _name(label) in self._index

    def label(self, name: LabelLike) -> VarLabel:
        try:
            return self.vars[self._index[_name(name)]]
        except KeyError:
            raise LabelError(f"unknown variable {_name(name)!r}; have {self.names}") from None

    def axes(self, labels) -> list[int]:
        out = []
        for n in _names(labels):
            if n not in self._index:
                raise LabelError(f"unknown variable {n!r}; have {self.names}")
            out.append(self._index[n])
        return out

    def __repr__(self):
        dims = ", ".join(f"{v.name}:{v.cardinality}" for v in self.vars)
        return f"JointPMF({dims})"


class Channel:
    """Conditional table p(outputs | inputs).

    ``table`` has one axis per input followed by one axis per output; every
    slice over the output axes sums to one.
    """

    __slots__ = ("inputs", "outputs", "table")

    def __init__(self, inputs: Sequence[VarLabel], output, table, *, tol: float = SUM_TOL):
        inputs = tuple(inputs)
        outputs = (output,) if isinstance(output, VarLabel) else tuple(output)
        names = [v.name for v in inputs + outputs]
        if len(set(names)) != len(names):
            raise LabelError(f"duplicate variable names in channel {names}")
        if not outputs:
            raise LabelError("channel needs at least one output")
        shape = tuple(v.cardinality for v in inputs + outputs)
        arr = np.asarray(table, dtype=float)
        if arr.size != int(np.prod(shape, dtype=np.int64)):
            raise ValueError(f"channel table has {arr.size} entries, expected {int(np.prod(shape))}")
        arr = arr.reshape(shape)
        if np.any(arr < 0) or not np.all(np.isfinite(arr)):
            raise StochasticityError("channel has negative or non-finite entries")
        out_axes = tuple(range(len(inputs), len(shape)))
        rows = arr.sum(axis=out_axes)
        if np.any(np.abs(rows - 1.0) > tol):
            raise StochasticityError(
                f"channel rows must sum to 1 (worst row sums to {rows.flat[np.argmax(np.abs(rows - 1))]:.15g})")
        self.inputs = inputs
        self.outputs = outputs
        self.table = _frozen(arr)

    @property
    def output(self) -> VarLabel:
        if len(self.outputs) != 1:
            raise LabelError("channel has several outputs")
        return self.outputs[0]

    def rows(self) -> np.ndarray:
        """Table reshaped to (prod(input cards), prod(output cards))."""
        n_in = int(np.prod([v.cardinality for v in self.inputs], dtype=np.int64))
        return self.table.reshape(n_in, -1)

    def __repr__(self):
        ins = ",".join(v.name for v in self.inputs)
        outs = ",".join(v.name for v in self.outputs)
        return f"Channel({outs}|{ins})"


def identity_channel(src: VarLabel, name: str) -> Channel:
    return Channel([src], VarLabel(name, src.cardinality), np.eye(src.cardinality))


def constant_channel(src: VarLabel, out: VarLabel, dist=None) -> Channel:
    dist = np.full(out.cardinality, 1.0 / out.cardinality) if dist is None else np.asarray(dist, float)
    return Channel([src], out, np.tile(dist, (src.cardinality, 1)))


def bsc_channel(src: VarLabel, name: str, crossover: float) -> Channel:
    if src.cardinality != 2 or not 0 <= crossover <= 1:
        raise ValueError("BSC needs a binary input and crossover in [0, 1]")
    a = crossover
    return Channel([src], VarLabel(name, 2), [[1 - a, a], [a, 1 - a]])


def extend_with_channel(joint: JointPMF, ch: Channel) -> JointPMF:
    """Append the channel outputs to ``joint``: p(all, out) = p(all) p(out | inputs)."""
    for v in ch.inputs:
        if joint.label(v.name).cardinality != v.cardinality:
            raise LabelError(f"cardinality mismatch for {v.name!r}")
    for v in ch.outputs:
        if joint.has(v):
            raise LabelError(f"output {v.name!r} already present in joint")
    in_axes = joint.axes(ch.inputs)
    # bring channel input axes into joint order, then broadcast
    order = np.argsort(in_axes)
    n_in = len(ch.inputs)
    perm = list(order) + list(range(n_in, n_in + len(ch.outputs)))
    cht = np.transpose(ch.table, perm)
    sorted_axes = sorted(in_axes)
    shape = [1] * len(joint.vars) + [v.cardinality for v in ch.outputs]
    for ax in sorted_axes:
        shape[ax] = joint.vars[ax].cardinality
    cht = cht.reshape(shape)
    tab = joint.table.reshape(joint.table.shape + (1,) * len(ch.outputs)) * cht
    return JointPMF(joint.vars + ch.outputs, tab, tol=1e-9)


def marginal(joint: JointPMF, keep) -> JointPMF:
    names = _names(keep)
    if not names:
        raise LabelError("marginal needs at least one variable")
    axes = joint.axes(names)
    drop = tuple(i for i in range(len(joint.vars)) if i not in axes)
    tab = joint.table.sum(axis=drop) if drop else joint.table
    # result keeps the requested order
    remaining = sorted(axes)
    tab = np.transpose(tab, [remaining.index(a) for a in axes])
    return JointPMF([joint.vars[a] for a in axes], tab, tol=1e-9)


def _marginal_table(joint: JointPMF, names: list[str]) -> np.ndarray:
    if not names:
        return np.ones(1)
    axes = joint.axes(names)
    drop = tuple(i for i in range(len(joint.vars)) if i not in axes)
    return joint.table.sum(axis=drop) if drop else joint.table


def _entropy_of(table: np.ndarray) -> float:
    p = table[table > 0]
    return float(-np.sum(p * np.log2(p)))


def entropy(p) -> float:
    """Shannon entropy in bits of a probability vector (0 log 0 = 0)."""
    return _entropy_of(np.asarray(p, dtype=float))


def _check_disjoint(*groups: list[str]):
    seen: set[str] = set()
    for g in groups:
        overlap = seen.intersection(g)
        if overlap:
            raise LabelError(f"variable sets overlap on {sorted(overlap)}")
        seen.update(g)


def joint_entropy(joint: JointPMF, labels) -> float:
    return _entropy_of(_marginal_table(joint, _names(labels)))


def cond_entropy(joint: JointPMF, A, C=None) -> float:
    """H(A | C) in bits; ``C`` may be empty."""
    a, c = _names(A), _names(C)
    _check_disjoint(a, c)
    h = _entropy_of(_marginal_table(joint, a + c)) - _entropy_of(_marginal_table(joint, c))
    return max(h, 0.0) if h > NEG_FLOOR else _negative(h, "conditional entropy")


def _negative(value: float, what: str):
    raise ArithmeticError(f"{what} evaluated to {value:.3e} bits, below the rounding floor")


def cond_mi_raw(joint: JointPMF, A, B, C=None) -> float:
    """I(A;B|C) without clamping."""
    a, b, c = _names(A), _names(B), _names(C)
    _check_disjoint(a, b, c)
    if not a or not b:
        raise LabelError("mutual information needs nonempty A and B")
    h = _entropy_of
    m = lambda names: _marginal_table(joint, names)  # noqa: E731
    return h(m(a + c)) + h(m(b + c)) - h(m(a + b + c)) - h(m(c))


def cond_mi(joint: JointPMF, A, B, C=None) -> float:
    """I(A;B|C) in bits, rounding residue clamped to zero."""
    v = cond_mi_raw(joint, A, B, C)
    if v < NEG_FLOOR:
        _negative(v, "mutual information")
    return max(v, 0.0)


def kl(p, q) -> float:
    """KL(p || q) in bits; ``inf`` when p is not absolutely continuous w.r.t. q."""
    p = np.asarray(p, dtype=float).ravel()
    q = np.asarray(q, dtype=float).ravel()
    if p.shape != q.shape:
        raise ValueError(f"length mismatch: {p.size} vs {q.size}")
    pos = p > 0
    if np.any(q[pos] <= 0):
        return float("inf")
    return float(np.sum(p[pos] * (np.log2(p[pos]) - np.log2(q[pos]))))


def verify_markov(joint: JointPMF, A, B, C, tol: float = 1e-12) -> bool:
    """True iff A - B - C is a Markov chain, i.e. I(A;C|B) <= tol."""
    return cond_mi_raw(joint, A, C, B) <= tol


def conditional_table(joint: JointPMF, A, C) -> np.ndarray:
    """p(A | C) with axes (C..., A...); zero-mass conditioning cells are left at zero."""
    a, c = _names(A), _names(C)
    _check_disjoint(a, c)
    pac = marginal(joint, c + a).table if c else marginal(joint, a).table
    if not c:
        return np.array(pac)
    pc = pac.sum(axis=tuple(range(len(c), len(c) + len(a))), keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(pc > 0, pac / np.where(pc > 0, pc, 1.0), 0.0)
    return out
