"""AdaDelta parameter updates."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError, NonFiniteGradientError


@dataclass
class AdaDeltaState:
    """Per-parameter running averages of squared gradients and updates."""

    avg_sq_grad: list[np.ndarray]
    avg_sq_delta: list[np.ndarray]
    rho: float = 0.95
    eps: float = 1e-6

    def __post_init__(self):
        if not 0.0 < self.rho < 1.0:
            raise ValueError("rho must be in (0, 1)")
        if self.eps <= 0.0:
            raise ValueError("eps must be positive")

    @staticmethod
    def for_params(params, rho: float = 0.95, eps: float = 1e-6) -> "AdaDeltaState":
        return AdaDeltaState(
            avg_sq_grad=[np.zeros_like(p) for p in params],
            avg_sq_delta=[np.zeros_like(p) for p in params],
            rho=rho,
            eps=eps,
        )


def adadelta_step(params, grads, state: AdaDeltaState) -> None:
    """One in-place AdaDelta update of every parameter array.

    E[g^2] <- rho E[g^2] + (1 - rho) g^2
    dx = -sqrt(E[dx^2] + eps) / sqrt(E[g^2] + eps) * g
    E[dx^2] <- rho E[dx^2] + (1 - rho) dx^2
    x <- x + dx
    """
    if len(params) != len(grads) or len(params) != len(state.avg_sq_grad):
        raise DimensionMismatchError("params, grads, and state must align")
    rho, eps = state.rho, state.eps
    for p, g, eg2, ed2 in zip(params, grads, state.avg_sq_grad, state.avg_sq_delta):
        if p.shape != g.shape:
            raise DimensionMismatchError(
                f"gradient shape {g.shape} does not match parameter {p.shape}"
            )
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradientError("gradient contains NaN or infinity")
        eg2 *= rho
        eg2 += (1.0 - rho) * g * g
        delta = -np.sqrt(ed2 + eps) / np.sqrt(eg2 + eps) * g
        ed2 *= rho
        ed2 += (1.0 - rho) * delta * delta
        p += delta


@dataclass
class AdaDelta:
    """Convenience wrapper owning the state for a fixed parameter list."""

    params: list[np.ndarray]
    rho: float = 0.95
    eps: float = 1e-6
    state: AdaDeltaState = field(init=False)

    def __post_init__(self):
        self.state = AdaDeltaState.for_params(self.params, rho=self.rho, eps=self.eps)

    def step(self, grads) -> None:
        adadelta_step(self.params, grads, self.state)
