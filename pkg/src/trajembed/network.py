"""Minimal feed-forward machinery: dense stacks, backprop, gradient checking.

Stacks are lists of affine layers with rectified-linear or identity
activations. forward() keeps every intermediate activation so backward() can
compute exact reverse-mode gradients; at rectifier kinks the zero branch is
taken. No autograd framework is involved, which keeps the update rule, the
checkpoint format, and determinism fully under our control.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError

ACTIVATIONS = ("rectified_linear", "identity")


@dataclass(frozen=True)
class LayerSpec:
    """Shape and nonlinearity of one dense layer."""

    in_dim: int
    out_dim: int
    activation: str = "rectified_linear"

    def __post_init__(self):
        if self.in_dim < 1 or self.out_dim < 1:
            raise ValueError("layer dimensions must be >= 1")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")


@dataclass
class ParamBlock:
    """Weights (out_dim x in_dim) and bias (out_dim) of one layer."""

    weight: np.ndarray
    bias: np.ndarray


def init_param_block(spec: LayerSpec, rng: np.random.Generator) -> ParamBlock:
    """Scaled uniform init: U(+-sqrt(6 / (in + out))), zero biases."""
    bound = np.sqrt(6.0 / (spec.in_dim + spec.out_dim))
    weight = rng.uniform(-bound, bound, size=(spec.out_dim, spec.in_dim))
    return ParamBlock(weight=weight, bias=np.zeros(spec.out_dim))


class DenseStack:
    """A chain of dense layers with a consistent dimension sequence."""

    def __init__(self, specs: list[LayerSpec], params: list[ParamBlock]):
        if len(specs) != len(params):
            raise DimensionMismatchError("one ParamBlock per LayerSpec required")
        for prev, nxt in zip(specs, specs[1:]):
            if prev.out_dim != nxt.in_dim:
                raise DimensionMismatchError(
                    f"layer chain breaks: {prev.out_dim} -> {nxt.in_dim}"
                )
        for spec, block in zip(specs, params):
            if block.weight.shape != (spec.out_dim, spec.in_dim):
                raise DimensionMismatchError(
                    f"weight shape {block.weight.shape} does not match spec "
                    f"({spec.out_dim}, {spec.in_dim})"
                )
            if block.bias.shape != (spec.out_dim,):
                raise DimensionMismatchError(
                    f"bias shape {block.bias.shape} does not match out_dim "
                    f"{spec.out_dim}"
                )
        self.specs = list(specs)
        self.params = list(params)

    @staticmethod
    def initialize(specs: list[LayerSpec], rng: np.random.Generator) -> "DenseStack":
        return DenseStack(specs, [init_param_block(s, rng) for s in specs])

    @property
    def in_dim(self) -> int:
        return self.specs[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.specs[-1].out_dim

    def parameters(self) -> list[np.ndarray]:
        """Flat parameter list: weight, bias per layer, in order."""
        out = []
        for block in self.params:
            out.append(block.weight)
            out.append(block.bias)
        return out

    def forward(self, x: np.ndarray) -> list[np.ndarray]:
        """Per-layer activations [input, layer1 output, ..., final output].

        Accepts a single vector or a (batch, in_dim) matrix.
        """
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.in_dim:
            raise DimensionMismatchError(
                f"input dim {x.shape[-1]} does not match stack input {self.in_dim}"
            )
        activations = [x]
        for spec, block in zip(self.specs, self.params):
            z = activations[-1] @ block.weight.T + block.bias
            if spec.activation == "rectified_linear":
                z = np.maximum(z, 0.0)
            activations.append(z)
        return activations

    def output(self, x: np.ndarray) -> np.ndarray:
        """Final activation only, without keeping intermediates.

        Cheaper than forward() on the inference hot path; single vectors use
        the gemv orientation directly.
        """
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.in_dim:
            raise DimensionMismatchError(
                f"input dim {x.shape[-1]} does not match stack input {self.in_dim}"
            )
        for spec, block in zip(self.specs, self.params):
            x = block.weight @ x if x.ndim == 1 else x @ block.weight.T
            x += block.bias
            if spec.activation == "rectified_linear":
                np.maximum(x, 0.0, out=x)
        return x

    def backward(self, activations: list[np.ndarray], upstream: np.ndarray):
        """Exact gradients given activations from a matching forward call.

        upstream is the loss gradient at the stack output (same shape).
        Returns (parameter gradients in parameters() order, input gradient);
        batched inputs sum gradients over the batch.
        """
        grad = np.asarray(upstream, dtype=np.float64)
        if grad.shape != activations[-1].shape:
            raise DimensionMismatchError(
                f"upstream shape {grad.shape} does not match output "
                f"{activations[-1].shape}"
            )
        param_grads: list[np.ndarray] = []
        for k in range(len(self.specs) - 1, -1, -1):
            out_act = activations[k + 1]
            in_act = activations[k]
            if self.specs[k].activation == "rectified_linear":
                grad = grad * (out_act > 0.0)
            if grad.ndim == 1:
                g_weight = np.outer(grad, in_act)
                g_bias = grad.copy()
            else:
                g_weight = grad.T @ in_act
                g_bias = grad.sum(axis=0)
            param_grads.append(g_bias)
            param_grads.append(g_weight)
            grad = grad @ self.params[k].weight
        param_grads.reverse()
        return param_grads, grad


def grad_check(
    loss_and_grad,
    params: list[np.ndarray],
    rng: np.random.Generator,
    num_coordinates: int = 200,
    step: float = 1e-5,
) -> float:
    """Max relative error between analytic gradients and central differences.

    loss_and_grad(params) must return (scalar loss, gradient arrays matching
    params). A random subset of at least num_coordinates coordinates is
    probed; coordinates where both gradients vanish contribute zero error.
    """
    _, analytic = loss_and_grad(params)
    sizes = np.array([p.size for p in params])
    total = int(sizes.sum())
    count = min(num_coordinates, total)
    flat_choices = rng.choice(total, size=count, replace=False)
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    worst = 0.0
    for flat in flat_choices:
        array_idx = int(np.searchsorted(offsets, flat, side="right") - 1)
        local = int(flat - offsets[array_idx])
        target = params[array_idx].reshape(-1)
        original = target[local]
        target[local] = original + step
        loss_plus = loss_and_grad(params)[0]
        target[local] = original - step
        loss_minus = loss_and_grad(params)[0]
        target[local] = original
        numeric = (loss_plus - loss_minus) / (2.0 * step)
        exact = analytic[array_idx].reshape(-1)[local]
        denom = max(abs(numeric), abs(exact))
        if denom > 1e-8:
            worst = max(worst, abs(numeric - exact) / denom)
    return worst
