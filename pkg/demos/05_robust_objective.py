"""The contrastive rain-robust objective and its verified gradients.

Feature maps condense to compact vectors (2x2 average pool per channel,
flattened); a rainy/clean pair forms the positive against the rest of the
mini-batch as negatives. The demo evaluates the loss in both denominator
conventions, composes the full objective, and runs the finite-difference
gradient check.
"""

import math

import numpy as np

from rainforge import ImageBuffer, ObjectiveWeights, RobustLossParams
from rainforge.imaging.ops import gaussian_blur_array
from rainforge.objective import (
    FeatureMap,
    batch_loss_with_gradients,
    condense_features,
    cosine_similarity,
    full_objective,
    gradient_check,
    pair_loss_with_gradients,
    rain_robust_batch_loss,
    rain_robust_pair_loss,
)

rng = np.random.default_rng(3)

fmap = FeatureMap(rng.normal(size=(256, 64, 64)))
z = condense_features(fmap)
print(f"feature map {fmap.channels}x{fmap.height}x{fmap.width} -> vector of length {z.size}")

params = RobustLossParams(temperature=0.25)
anchor = np.zeros(8); anchor[0] = 1.0
negatives = [np.eye(8)[1], np.eye(8)[2]]
loss = rain_robust_pair_loss(anchor, anchor.copy(), negatives, params)
print(f"perfect positive, 2 orthogonal negatives, tau=0.25: loss = {loss:.6f}"
      f" (closed form log(1+2e^-4) = {math.log(1 + 2 * math.exp(-4)):.6f})")

literal = RobustLossParams(temperature=0.25, include_positive_in_denominator=False)
print(f"same setup, positive excluded from denominator: {rain_robust_pair_loss(anchor, anchor.copy(), negatives, literal):.6f}"
      " (negative: that convention is unbounded below)")

batch = [(rng.normal(size=32), rng.normal(size=32)) for _ in range(8)]
value, grads = batch_loss_with_gradients(batch, params)
print(f"batch of 8 random pairs: loss = {value:.6f}, gradient norm of first rainy vector = "
      f"{np.linalg.norm(grads[0][0]):.6f}")


def pair_fn(vectors):
    a, p, *negs = vectors
    val, ga, gp, gn = pair_loss_with_gradients(a, p, negs, params)
    return val, [ga, gp] + gn


point = [rng.normal(size=16) for _ in range(5)]
err = gradient_check(pair_fn, point, epsilon=1e-5)
print(f"gradient check (central differences): max relative error = {err:.2e}")

base = gaussian_blur_array(rng.random((192, 192, 3)), 2.0)
truth_img = ImageBuffer(0.1 + 0.8 * (base - base.min()) / (base.max() - base.min()))
restored = ImageBuffer(np.clip(truth_img.data + rng.normal(0, 0.02, truth_img.data.shape), 0, 1))
breakdown = full_objective(
    restored,
    truth_img,
    features_clean=batch[0][1],
    features_rainy=batch[0][0],
    negatives=[v for pair in batch[1:] for v in pair],
    weights=ObjectiveWeights(l1=0.1, robust=0.1),
    robust_params=params,
)
print(
    "full objective: total={:.6f} (ms_ssim_loss={:.6f}, l1={:.6f}, robust={:.6f})".format(
        breakdown.total, breakdown.ms_ssim_loss, breakdown.l1, breakdown.robust
    )
)
print(f"cosine similarity of the first positive pair: {cosine_similarity(batch[0][0], batch[0][1]):.4f}")
print(f"batch loss via the convenience wrapper: {rain_robust_batch_loss(batch, params):.6f}")
