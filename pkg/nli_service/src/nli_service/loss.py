"""Focal loss with alpha balancing and per-class weights.

The composition matches the verifier-side formula exactly:
``alpha_t * weight_y * (1 - p_t)^gamma * (-log p_t)`` with
``p_t = p`` for the entailment class and ``1 - p`` otherwise.
Computation runs in float64 so per-example values agree with scalar
arithmetic to well below 1e-6.
"""

from __future__ import annotations

import math

import torch

_EPS = 1e-12


def focal_loss_value(p: float, y: int, gamma: float, alpha: float,
                     class_weights: tuple[float, float]) -> float:
    """Scalar reference; mirrors the tensor path for one example."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability {p} outside [0, 1]")
    p_t = p if y == 1 else 1.0 - p
    p_t = min(max(p_t, _EPS), 1.0 - _EPS)
    alpha_t = alpha if y == 1 else 1.0 - alpha
    weight = class_weights[0] if y == 1 else class_weights[1]
    return alpha_t * weight * ((1.0 - p_t) ** gamma) * (-math.log(p_t))


def focal_loss_tensor(probs: torch.Tensor, labels: torch.Tensor, gamma: float,
                      alpha: float, class_weights: tuple[float, float],
                      reduction: str = "mean") -> torch.Tensor:
    """``probs`` are P(entailment); ``labels`` hold +1/-1."""
    probs = probs.double()
    positive = labels.double().eq(1.0)
    p_t = torch.where(positive, probs, 1.0 - probs).clamp(_EPS, 1.0 - _EPS)
    alpha_t = torch.where(positive, torch.full_like(p_t, alpha),
                          torch.full_like(p_t, 1.0 - alpha))
    weight = torch.where(positive, torch.full_like(p_t, class_weights[0]),
                         torch.full_like(p_t, class_weights[1]))
    losses = alpha_t * weight * (1.0 - p_t).pow(gamma) * (-torch.log(p_t))
    if reduction == "none":
        return losses
    if reduction == "sum":
        return losses.sum()
    return losses.mean()
