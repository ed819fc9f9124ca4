"""Contrastive rain-robust training objective as standalone numerics.

The loss family: cosine feature similarity, the temperature-scaled
noise-contrastive pair loss over a rainy/clean positive pair against batch
negatives, its mini-batch average over both directions of every pair, and
the full objective that adds multi-scale-SSIM and L1 reconstruction terms.
Each loss ships with analytic gradients and a finite-difference checker; all
math runs in double precision so the gradient checks hold at tight
tolerances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .imaging import ImageBuffer
from .metrics import MsSsimParams, ms_ssim

__all__ = [
    "FeatureMap",
    "RobustLossParams",
    "ObjectiveWeights",
    "cosine_similarity",
    "cosine_similarity_gradient",
    "condense_features",
    "rain_robust_pair_loss",
    "pair_loss_with_gradients",
    "rain_robust_batch_loss",
    "batch_loss_with_gradients",
    "full_objective",
    "ObjectiveBreakdown",
    "gradient_check",
]

_NORM_FLOOR = 1e-12


@dataclass(frozen=True)
class FeatureMap:
    """(channels, height, width) activation block destined for condensation."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 3 or arr.shape[0] < 1:
            raise ValueError(f"feature map must be CxHxW, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("feature map contains non-finite values")
        out = np.ascontiguousarray(arr)
        out.flags.writeable = False
        object.__setattr__(self, "values", out)

    @property
    def channels(self) -> int:
        return self.values.shape[0]

    @property
    def height(self) -> int:
        return self.values.shape[1]

    @property
    def width(self) -> int:
        return self.values.shape[2]


@dataclass(frozen=True)
class RobustLossParams:
    temperature: float = 0.25
    include_positive_in_denominator: bool = True

    def __post_init__(self):
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")


@dataclass(frozen=True)
class ObjectiveWeights:
    l1: float = 0.1
    robust: float = 0.1

    def __post_init__(self):
        if self.l1 < 0 or self.robust < 0:
            raise ValueError("objective weights must be nonnegative")


def _as_vector(v, name="vector") -> np.ndarray:
    arr = np.asarray(v, dtype=np.float64).ravel()
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    if np.linalg.norm(arr) <= _NORM_FLOOR:
        raise ValueError(f"{name} has (near-)zero norm; cosine similarity undefined")
    return arr


def cosine_similarity(u, v) -> float:
    """u.v / (|u||v|), in [-1, 1]."""
    uu = _as_vector(u, "u")
    vv = _as_vector(v, "v")
    return float(uu @ vv / (np.linalg.norm(uu) * np.linalg.norm(vv)))


def cosine_similarity_gradient(u, v):
    """(ds/du, ds/dv) of the cosine similarity."""
    uu = _as_vector(u, "u")
    vv = _as_vector(v, "v")
    nu = np.linalg.norm(uu)
    nv = np.linalg.norm(vv)
    s = float(uu @ vv / (nu * nv))
    grad_u = vv / (nu * nv) - s * uu / (nu * nu)
    grad_v = uu / (nu * nv) - s * vv / (nv * nv)
    return grad_u, grad_v


def condense_features(fmap: FeatureMap) -> np.ndarray:
    """Average-pool each channel to 2x2 and flatten channel-major.

    Spatial dimensions split at ceil(n/2), giving near-equal rectangular
    cells; a 256-channel map condenses to a length-1024 vector.
    """
    if fmap.height < 2 or fmap.width < 2:
        raise ValueError("feature map must be at least 2x2 spatially")
    h_split = -(-fmap.height // 2)
    w_split = -(-fmap.width // 2)
    vals = fmap.values
    out = np.empty(fmap.channels * 4)
    cells = (
        (slice(0, h_split), slice(0, w_split)),
        (slice(0, h_split), slice(w_split, None)),
        (slice(h_split, None), slice(0, w_split)),
        (slice(h_split, None), slice(w_split, None)),
    )
    for c in range(fmap.channels):
        for idx, (rs, cs) in enumerate(cells):
            out[c * 4 + idx] = vals[c, rs, cs].mean()
    return out


def _pair_loss_core(anchor, positive, negatives, params: RobustLossParams):
    """Shared value/gradient computation for the contrastive pair loss."""
    anchor = _as_vector(anchor, "anchor")
    positive = _as_vector(positive, "positive")
    negatives = [_as_vector(n, "negative") for n in negatives]
    if not negatives and not params.include_positive_in_denominator:
        raise ValueError("need at least one negative when the positive is excluded from the denominator")

    tau = params.temperature
    s_pos = cosine_similarity(anchor, positive)
    scaled = [s_pos / tau] if params.include_positive_in_denominator else []
    scaled_negs = [cosine_similarity(anchor, k) / tau for k in negatives]
    scaled = scaled + scaled_negs

    m = max(scaled)
    exps = [math.exp(s - m) for s in scaled]
    total = sum(exps)
    lse = m + math.log(total)
    loss = lse - s_pos / tau

    softmax = [e / total for e in exps]
    if params.include_positive_in_denominator:
        p_pos = softmax[0]
        p_negs = softmax[1:]
    else:
        p_pos = 0.0
        p_negs = softmax

    # coefficients on each raw similarity (chain rule through s/tau)
    coef_pos = (p_pos - 1.0) / tau
    coef_negs = [p / tau for p in p_negs]

    dpos_da, dpos_dp = cosine_similarity_gradient(anchor, positive)
    grad_anchor = coef_pos * dpos_da
    grad_positive = coef_pos * dpos_dp
    grad_negatives = []
    for coef, neg in zip(coef_negs, negatives):
        dneg_da, dneg_dn = cosine_similarity_gradient(anchor, neg)
        grad_anchor = grad_anchor + coef * dneg_da
        grad_negatives.append(coef * dneg_dn)

    return loss, grad_anchor, grad_positive, grad_negatives


def rain_robust_pair_loss(anchor, positive, negatives, params: RobustLossParams = RobustLossParams()) -> float:
    """Contrastive loss of one positive pair against a set of negatives.

    -log( exp(sim(anchor, positive)/tau) / D ) with D summing over the
    negatives, plus the positive term itself when
    include_positive_in_denominator is set (the bounded, conventional form;
    disabling it allows negative losses).
    """
    loss, *_ = _pair_loss_core(anchor, positive, negatives, params)
    return loss


def pair_loss_with_gradients(anchor, positive, negatives, params: RobustLossParams = RobustLossParams()):
    """(loss, grad_anchor, grad_positive, [grad_negative...])."""
    return _pair_loss_core(anchor, positive, negatives, params)


def _batch_terms(batch):
    """Directed (anchor_idx, positive_idx) pairs and shared negatives per term."""
    flat = []
    for rainy, clean in batch:
        flat.append(_as_vector(rainy, "rainy features"))
        flat.append(_as_vector(clean, "clean features"))
    n = len(batch)
    terms = []
    for i in range(n):
        other = [j for j in range(2 * n) if j // 2 != i]
        terms.append((2 * i + 1, 2 * i, other))  # anchor clean_i, positive rainy_i
        terms.append((2 * i, 2 * i + 1, other))  # anchor rainy_i, positive clean_i
    return flat, terms


def rain_robust_batch_loss(batch, params: RobustLossParams = RobustLossParams()) -> float:
    """Mean directed pair loss over a mini-batch of (rainy, clean) feature pairs.

    Each of the 2N directed terms uses the other 2(N-1) batch features as its
    negatives.
    """
    if len(batch) < 2:
        raise ValueError("batch loss needs at least 2 pairs")
    flat, terms = _batch_terms(batch)
    total = 0.0
    for anchor_idx, pos_idx, neg_idx in terms:
        total += rain_robust_pair_loss(flat[anchor_idx], flat[pos_idx], [flat[j] for j in neg_idx], params)
    return total / len(terms)


def batch_loss_with_gradients(batch, params: RobustLossParams = RobustLossParams()):
    """(loss, [(grad_rainy_i, grad_clean_i), ...]) for the batch loss."""
    if len(batch) < 2:
        raise ValueError("batch loss needs at least 2 pairs")
    flat, terms = _batch_terms(batch)
    grads = [np.zeros_like(v) for v in flat]
    total = 0.0
    for anchor_idx, pos_idx, neg_idx in terms:
        loss, g_anchor, g_pos, g_negs = _pair_loss_core(
            flat[anchor_idx], flat[pos_idx], [flat[j] for j in neg_idx], params
        )
        total += loss
        grads[anchor_idx] += g_anchor
        grads[pos_idx] += g_pos
        for j, g in zip(neg_idx, g_negs):
            grads[j] += g
    scale = 1.0 / len(terms)
    total *= scale
    grads = [g * scale for g in grads]
    paired = [(grads[2 * i], grads[2 * i + 1]) for i in range(len(batch))]
    return total, paired


class ObjectiveBreakdown(NamedTuple):
    total: float
    ms_ssim_loss: float
    l1: float
    robust: float


def full_objective(
    restored: ImageBuffer,
    truth: ImageBuffer,
    features_clean,
    features_rainy,
    negatives,
    weights: ObjectiveWeights = ObjectiveWeights(),
    robust_params: RobustLossParams = RobustLossParams(),
    ms_params: MsSsimParams = MsSsimParams(),
) -> ObjectiveBreakdown:
    """(1 - multi-scale SSIM) + l1_weight * mean|diff| + robust_weight * pair loss.

    The reconstruction terms compare the restored frame against the clean
    truth; the robust term anchors at the clean features against the rainy
    positive, exactly as the batch loss does for that direction.
    """
    if restored.data.shape != truth.data.shape:
        raise ValueError("restored and truth shapes differ")
    ms_term = 1.0 - ms_ssim(restored, truth, ms_params)
    l1_term = float(np.abs(restored.data - truth.data).mean())
    if weights.robust == 0.0:
        robust_term = 0.0
    else:
        robust_term = rain_robust_pair_loss(features_clean, features_rainy, negatives, robust_params)
    total = ms_term + weights.l1 * l1_term + weights.robust * robust_term
    return ObjectiveBreakdown(total=total, ms_ssim_loss=ms_term, l1=l1_term, robust=robust_term)


def gradient_check(fn, point, epsilon: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients.

    `fn` maps a list of vectors to (scalar, [gradient per vector]); `point`
    is the list of vectors to linearize at. Per coordinate the error is
    |analytic - numeric| / max(|numeric|, 1e-8); the max over all
    coordinates of all vectors comes back.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    point = [np.asarray(p, dtype=np.float64).copy() for p in point]
    _, analytic = fn(point)
    if len(analytic) != len(point):
        raise ValueError("fn must return one gradient per input vector")

    worst = 0.0
    for vec_idx, vec in enumerate(point):
        for coord in range(vec.size):
            original = vec.flat[coord]
            vec.flat[coord] = original + epsilon
            plus, _ = fn(point)
            vec.flat[coord] = original - epsilon
            minus, _ = fn(point)
            vec.flat[coord] = original
            numeric = (plus - minus) / (2.0 * epsilon)
            if not math.isfinite(numeric):
                raise ValueError("non-finite value in finite differences")
            a = float(analytic[vec_idx].flat[coord])
            rel = abs(a - numeric) / max(abs(numeric), 1e-8)
            worst = max(worst, rel)
    return worst
