"""Single-letter bound expressions and closed-form tradeoff functions.

Absent source variables (Y, Z, Ys) are constants, so the empty-side-information
special cases need no separate code paths.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .models import BinaryCascadeParams, GaussianCascadeParams, SourceModel
from .probcore import (
    Channel,
    JointPMF,
    LabelError,
    VarLabel,
    cond_entropy,
    cond_mi,
    conditional_table,
    constant_channel,
    extend_with_channel,
    marginal,
)

PROVENANCES = ("inner", "outer", "logloss", "solver", "oracle", "closedform")


class RegionError(ValueError):
    pass


@dataclass(frozen=True)
class TradeoffPoint:
    """(rate, payload, leakage) in bits; payload is a distortion or D' = H(Yp) - D."""

    rate: float
    payload: float
    leakage: float
    provenance: str
    payload_kind: str = "dprime"
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")
        if self.payload_kind not in ("dprime", "distortion"):
            raise ValueError(f"unknown payload kind {self.payload_kind!r}")

    @property
    def dprime(self) -> float:
        if self.payload_kind != "dprime":
            raise AttributeError("point carries a distortion, not D'")
        return self.payload

    @property
    def distortion(self) -> float:
        if self.payload_kind != "distortion":
            raise AttributeError("point carries D', not a distortion")
        return self.payload


@dataclass(frozen=True)
class AuxiliaryChoice:
    """Auxiliary channels for the bounds.

    ``ch_TV`` has outputs ordered (T, V); when given, its V-marginal replaces
    ``ch_V``. ``ch_U`` maps V to U and defaults to a constant.
    """

    ch_V: Optional[Channel] = None
    ch_U: Optional[Channel] = None
    ch_TV: Optional[Channel] = None
    g: Optional[Channel] = None

    def v_channel(self) -> Channel:
        if self.ch_TV is not None:
            if len(self.ch_TV.outputs) != 2:
                raise RegionError("ch_TV must have outputs (T, V)")
            v = self.ch_TV.outputs[1]
            return Channel(self.ch_TV.inputs, v, self.ch_TV.table.sum(axis=-2), tol=1e-9)
        if self.ch_V is None:
            raise RegionError("auxiliary choice needs ch_V or ch_TV")
        return self.ch_V

    def u_channel(self) -> Channel:
        if self.ch_U is not None:
            return self.ch_U
        return constant_channel(self.v_channel().output, VarLabel("U", 1))


def check_cardinalities(model: SourceModel, aux: AuxiliaryChoice, logloss: bool = False):
    nx = model.joint.label("X").cardinality
    nv = aux.v_channel().output.cardinality
    nu = aux.u_channel().output.cardinality
    limit_v = nx + 2 if logloss else (nx + 3) * (nx + 2)
    if nv > limit_v:
        warnings.warn(f"|V|={nv} exceeds the sufficient cardinality {limit_v}", stacklevel=3)
    if not logloss and nu > nx + 3:
        warnings.warn(f"|U|={nu} exceeds the sufficient cardinality {nx + 3}", stacklevel=3)


def _names(aux: AuxiliaryChoice, outer: bool = False):
    if outer:
        if aux.ch_TV is None:
            raise RegionError("outer bound needs ch_TV")
        t, v = aux.ch_TV.outputs
        return v.name, aux.u_channel().output.name, t.name
    return aux.v_channel().output.name, aux.u_channel().output.name, None


def _check_input(ch: Channel, expected: tuple[str, ...], what: str):
    names = tuple(v.name for v in ch.inputs)
    if names != expected:
        raise RegionError(f"{what} must take inputs {expected}, got {names}")


def extended_joint(model: SourceModel, aux: AuxiliaryChoice, outer: bool = False) -> JointPMF:
    """Source joint extended by the auxiliaries, Markov U - V - X - sources."""
    joint = model.completed()
    try:
        if outer:
            if aux.ch_TV is None:
                raise RegionError("outer bound needs ch_TV")
            _check_input(aux.ch_TV, ("X",), "ch_TV")
            joint = extend_with_channel(joint, aux.ch_TV)
        else:
            ch_v = aux.v_channel()
            _check_input(ch_v, ("X",), "ch_V")
            joint = extend_with_channel(joint, ch_v)
        ch_u = aux.u_channel()
        _check_input(ch_u, (aux.v_channel().output.name,), "ch_U")
        joint = extend_with_channel(joint, ch_u)
    except LabelError as exc:
        raise RegionError(str(exc)) from exc
    return joint


def inner_rate(model: SourceModel, aux: AuxiliaryChoice) -> float:
    v, _, _ = _names(aux)
    return cond_mi(extended_joint(model, aux), "X", v, "Y")


def inner_distortion(model: SourceModel, aux: AuxiliaryChoice, loss) -> float:
    """E[d(Yp, g(V, Y))] for a reconstruction channel ``aux.g``."""
    if aux.g is None:
        raise RegionError("inner_distortion needs a reconstruction channel g")
    loss = np.asarray(loss, dtype=float)
    if np.any(loss < 0):
        raise RegionError("distortion measure must be nonnegative")
    joint = extended_joint(model, aux)
    try:
        joint = extend_with_channel(joint, aux.g)
    except LabelError as exc:
        raise RegionError(str(exc)) from exc
    yhat = aux.g.output.name
    pair = marginal(joint, ["Yp", yhat]).table
    if loss.shape != pair.shape:
        raise RegionError(f"loss table shape {loss.shape} does not match {pair.shape}")
    return float(np.sum(pair * loss))


def hamming_loss(n: int, m: Optional[int] = None) -> np.ndarray:
    m = n if m is None else m
    return 1.0 - np.eye(n, m)


def _posterior(model: SourceModel, ch_V: Channel) -> tuple[np.ndarray, VarLabel, VarLabel]:
    joint = extend_with_channel(model.completed(), ch_V)
    v = ch_V.output
    post = conditional_table(joint, ["Yp"], [v.name, "Y"])  # axes (V, Y, Yp)
    return post, v, joint.label("Y")


def map_reconstruction(model: SourceModel, ch_V: Channel, name: str = "Yhat") -> Channel:
    """Deterministic g(v, y) = argmax p(yp | v, y); ties go to the lowest index."""
    post, v, y = _posterior(model, ch_V)
    nyp = post.shape[-1]
    g = np.zeros(post.shape)
    idx = post.argmax(axis=-1)
    np.put_along_axis(g, idx[..., None], 1.0, axis=-1)
    return Channel([v, y], VarLabel(name, nyp), g)


def posterior_reconstruction(model: SourceModel, ch_V: Channel, name: str = "Yhat") -> Channel:
    """Soft g(v, y) = p(. | v, y); uniform on zero-mass cells."""
    post, v, y = _posterior(model, ch_V)
    nyp = post.shape[-1]
    mass = post.sum(axis=-1, keepdims=True)
    post = np.where(mass > 0, post, 1.0 / nyp)
    return Channel([v, y], VarLabel(name, nyp), post, tol=1e-9)


class LeakageValue(NamedTuple):
    value: float
    nonnegative: bool


def _leakage_terms(joint: JointPMF, v: str, u: str, last_condition: list[str]) -> dict[str, float]:
    return {
        "I(Ys;V,Y)": cond_mi(joint, "Ys", [v, "Y"]),
        "I(Z;X,Ys|U)": cond_mi(joint, "Z", ["X", "Ys"], u),
        "I(Y;X,Ys|U)": cond_mi(joint, "Y", ["X", "Ys"], u),
        "I(X;Z|V,Ys,Y)": cond_mi(joint, "X", "Z", [v, "Ys", "Y"]),
        "I(X;Y|%s)" % ",".join(last_condition): cond_mi(joint, "X", "Y", last_condition),
    }


def _combine(terms: dict[str, float]) -> LeakageValue:
    a, b, c, d, e = terms.values()
    value = a + b - c - d + e
    return LeakageValue(value, value >= 0.0)


def leakage_terms(model: SourceModel, aux: AuxiliaryChoice, outer: bool = False) -> dict[str, float]:
    """Individual mutual-information terms of the leakage expression (debug aid)."""
    v, u, t = _names(aux, outer)
    joint = extended_joint(model, aux, outer)
    cond = [t, "Ys", "Z"] if outer else ["Ys", "Z"]
    return _leakage_terms(joint, v, u, cond)


def inner_leakage(model: SourceModel, aux: AuxiliaryChoice) -> LeakageValue:
    """Achievable leakage expression, unclamped; the flag reports its sign."""
    return _combine(leakage_terms(model, aux))


def outer_leakage(model: SourceModel, aux: AuxiliaryChoice) -> LeakageValue:
    return _combine(leakage_terms(model, aux, outer=True))


def lossless_inner(model: SourceModel, ch_U: Optional[Channel] = None) -> tuple[float, float]:
    """(H(X|Y), leakage) for lossless reconstruction of X with layering variable U."""
    joint = model.completed()
    if ch_U is None:
        ch_U = constant_channel(joint.label("X"), VarLabel("U", 1))
    _check_input(ch_U, ("X",), "ch_U")
    joint = extend_with_channel(joint, ch_U)
    u = ch_U.output.name
    rate = cond_entropy(joint, "X", "Y")
    leak = (cond_mi(joint, "Ys", ["X", "Y"])
            + cond_mi(joint, "Z", ["X", "Ys"], u)
            - cond_mi(joint, "Y", ["X", "Ys"], u)
            + cond_mi(joint, "X", "Y", ["Ys", "Z"]))
    return rate, leak


def identical_side_information(model: SourceModel, tol: float = 1e-12) -> bool:
    """True when Z is absent or Y and Z determine each other."""
    if not model.has("Z"):
        return True
    joint = model.completed()
    return cond_entropy(joint, "Y", "Z") <= tol and cond_entropy(joint, "Z", "Y") <= tol


def logloss_point(model: SourceModel, ch_V: Channel) -> TradeoffPoint:
    """(I(X;V|Y), H(Yp|V,Y), I(Ys;V,Y)) under logarithmic loss."""
    if not identical_side_information(model):
        raise RegionError("logarithmic-loss region requires Y = Z (or Z absent)")
    _check_input(ch_V, ("X",), "ch_V")
    joint = extend_with_channel(model.completed(), ch_V)
    v = ch_V.output.name
    return TradeoffPoint(
        rate=cond_mi(joint, "X", v, "Y"),
        payload=cond_entropy(joint, "Yp", [v, "Y"]),
        leakage=cond_mi(joint, "Ys", [v, "Y"]),
        provenance="logloss",
        payload_kind="distortion",
    )


def logloss_distortion(joint: JointPMF, q_recon: Channel) -> float:
    """E[log2 1/q(Yp | inputs)] for a soft reconstruction over ``joint``.

    Returns ``inf`` when q assigns zero probability to an outcome of positive mass.
    """
    names = [v.name for v in q_recon.inputs]
    if "Yp" in names:
        raise RegionError("reconstruction cannot condition on Yp")
    for v in q_recon.inputs:
        if joint.label(v.name).cardinality != v.cardinality:
            raise RegionError(f"cardinality mismatch for {v.name!r}")
    p = marginal(joint, names + ["Yp"]).table
    q = q_recon.table
    if q.shape != p.shape:
        raise RegionError(f"reconstruction shape {q.shape} does not match {p.shape}")
    pos = p > 0
    if np.any(q[pos] <= 0):
        return float("inf")
    return float(-np.sum(p[pos] * np.log2(q[pos])))


# -- binary closed forms ------------------------------------------------------

def binary_entropy(u: float) -> float:
    if not 0.0 <= u <= 1.0:
        raise ValueError(f"binary entropy argument {u} outside [0, 1]")
    if u == 0.0 or u == 1.0:
        return 0.0
    return -u * math.log2(u) - (1 - u) * math.log2(1 - u)


def binary_entropy_inverse(t: float, iters: int = 64) -> float:
    """The x in [0, 1/2] with h(x) = t, by bisection."""
    if not -1e-15 <= t <= 1.0 + 1e-15:
        raise ValueError(f"binary entropy value {t} outside [0, 1]")
    t = min(max(t, 0.0), 1.0)
    if t == 0.0:
        return 0.0
    if t == 1.0:
        return 0.5
    lo, hi = 0.0, 0.5
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if binary_entropy(mid) < t:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def binary_convolution(a: float, b: float) -> float:
    if not (0.0 <= a <= 1.0 and 0.0 <= b <= 1.0):
        raise ValueError("binary convolution arguments must lie in [0, 1]")
    return a * (1 - b) + (1 - a) * b


def binary_dprime_max(params: BinaryCascadeParams, R: float, L: float) -> float:
    """Largest I(Yp;V) with I(X;V) <= R and I(Ys;V) <= L on the binary cascade."""
    if not (0.0 <= R <= 1.0 and 0.0 <= L <= 1.0):
        raise ValueError(f"(R, L) = ({R}, {L}) outside [0, 1]^2")
    h, hinv, conv = binary_entropy, binary_entropy_inverse, binary_convolution
    leak_branch = h(conv(hinv(1.0 - L), params.q))
    rate_branch = h(conv(conv(hinv(1.0 - R), params.p), params.q))
    return 1.0 - max(leak_branch, rate_branch)


# -- Gaussian closed forms ----------------------------------------------------

def _check_gaussian(params: GaussianCascadeParams):
    if not isinstance(params, GaussianCascadeParams):
        raise TypeError("expected GaussianCascadeParams")


def gaussian_dprime_max(params: GaussianCascadeParams, R: float, L: float) -> float:
    _check_gaussian(params)
    if R < 0 or L < 0:
        raise ValueError("R and L must be nonnegative")
    nx, ns, np_ = params.N_x, params.N_s, params.N_p
    rate_branch = 0.5 * math.log2((nx + np_) / (nx * 2.0 ** (-2 * R) + np_))
    leak_branch = 0.5 * math.log2((nx + np_) / ((nx + ns) * 2.0 ** (-2 * L) + np_ - ns))
    return min(rate_branch, leak_branch)


def gaussian_quadratic_region(params: GaussianCascadeParams, D: float) -> tuple[float, float]:
    """Minimum (rate, leakage) achieving quadratic distortion D > N_p."""
    _check_gaussian(params)
    nx, ns, np_ = params.N_x, params.N_s, params.N_p
    if not D > np_:
        raise ValueError(f"distortion {D} must exceed N_p = {np_}")
    r = 0.5 * math.log2(nx / (D - np_))
    l = 0.5 * math.log2((nx + ns) / (D - np_ + ns))
    return max(r, 0.0), max(l, 0.0)


def gaussian_quadratic_dmin(params: GaussianCascadeParams, R: float, L: float) -> float:
    _check_gaussian(params)
    if R < 0 or L < 0:
        raise ValueError("R and L must be nonnegative")
    nx, ns, np_ = params.N_x, params.N_s, params.N_p
    return max(np_ + nx * 2.0 ** (-2 * R), np_ - ns + (nx + ns) * 2.0 ** (-2 * L))


def gaussian_achievable_triple(params: GaussianCascadeParams, N_q: float) -> TradeoffPoint:
    """(R, D, L) of the test channel V = X + Q, Q ~ N(0, N_q), with MMSE reconstruction."""
    _check_gaussian(params)
    if not N_q > 0:
        raise ValueError("N_q must be positive")
    nx, ns, np_ = params.N_x, params.N_s, params.N_p
    mmse = nx * N_q / (nx + N_q)
    return TradeoffPoint(
        rate=0.5 * math.log2((nx + N_q) / N_q),
        payload=np_ + mmse,
        leakage=0.5 * math.log2((nx + ns) / (ns + mmse)),
        provenance="closedform",
        payload_kind="distortion",
        meta={"N_q": N_q},
    )
