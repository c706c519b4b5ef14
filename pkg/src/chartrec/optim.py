"""Adam with decoupled weight decay, driving the kernel backends."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._kernels import kernels
from .autodiff import Tensor


@dataclass
class AdamConfig:
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.01


@dataclass
class AdamState:
    """Per-parameter moment accumulators plus the step counter.

    ``frozen`` names are excluded from updates (and never accumulate
    moments) — used by transfer training to pin the encoder.
    """

    params: dict[str, Tensor]
    config: AdamConfig = field(default_factory=AdamConfig)
    frozen: frozenset[str] = frozenset()
    step_count: int = 0

    def __post_init__(self):
        self._m = {
            k: np.zeros_like(p.data) for k, p in self.params.items() if k not in self.frozen
        }
        self._v = {k: np.zeros_like(m) for k, m in self._m.items()}

    def step(self) -> None:
        """Apply one update from the gradients accumulated on the params."""
        self.step_count += 1
        c = self.config
        bc1 = 1.0 - c.beta1**self.step_count
        bc2 = 1.0 - c.beta2**self.step_count
        for name, p in self.params.items():
            if name in self.frozen or p.grad is None:
                continue
            kernels.adamw_update(
                p.data.reshape(-1),
                p.grad.reshape(-1).astype(p.data.dtype),
                self._m[name].reshape(-1),
                self._v[name].reshape(-1),
                c.lr,
                c.beta1,
                c.beta2,
                c.eps,
                c.weight_decay,
                bc1,
                bc2,
            )

    def zero_grad(self) -> None:
        for name, p in self.params.items():
            p.grad = None
