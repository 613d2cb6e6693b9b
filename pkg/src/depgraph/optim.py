"""AdamW with decoupled weight decay, and the Noam learning-rate schedule."""

from __future__ import annotations

import numpy as np

from .autodiff import Parameter


class NonFiniteGradient(RuntimeError):
    """A gradient contained NaN or infinity; the update step was aborted."""

    def __init__(self, names: list[str]):
        super().__init__(f"non-finite gradient in parameters: {', '.join(names)}")
        self.names = names


def noam_lr(step: int, base_lr: float, warmup_steps: int) -> float:
    """Learning rate at `step` (1-based): linear warmup, then inverse-sqrt decay.

    Normalized so that the peak (at step == warmup_steps) equals base_lr.
    """
    if step < 1 or warmup_steps < 1:
        raise ValueError("step and warmup_steps must be >= 1")
    return base_lr * np.sqrt(warmup_steps) * min(step ** -0.5, step * warmup_steps ** -1.5)


class AdamW:
    """Decoupled-weight-decay Adam over a fixed set of Parameters."""

    def __init__(self, params: list[Parameter], beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8,
                 weight_decay: float = 0.0):
        self.params = list(params)
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.weight_decay = weight_decay
        self.t = 0
        self._m = [np.zeros_like(p.values) for p in self.params]
        self._v = [np.zeros_like(p.values) for p in self.params]

    def step(self, lr: float) -> None:
        """One AdamW update; zeroes gradients afterward.

        Raises NonFiniteGradient (leaving parameters untouched) if any
        gradient is not finite.
        """
        bad = [p.name for p in self.params if not np.all(np.isfinite(p.gradient))]
        if bad:
            raise NonFiniteGradient(bad)
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        bias1 = 1.0 - b1 ** self.t
        bias2 = 1.0 - b2 ** self.t
        for p, m, v in zip(self.params, self._m, self._v):
            g = p.gradient
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            update = (m / bias1) / (np.sqrt(v / bias2) + self.eps)
            p.values -= lr * (update + self.weight_decay * p.values)
            p.zero_grad()


def adamw_step(params: list[Parameter], lr: float, beta1: float = 0.9,
               beta2: float = 0.999, weight_decay: float = 0.0) -> AdamW:
    """One-shot convenience wrapper: builds a fresh AdamW and applies one step."""
    opt = AdamW(params, beta1=beta1, beta2=beta2, weight_decay=weight_decay)
    opt.step(lr)
    return opt
