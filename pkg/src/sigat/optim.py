"""Adam with coupled L2 weight decay."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class AdamState:
    lr: float = 0.0005
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0
    step_count: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    @classmethod
    def for_params(cls, params, **hyper):
        state = cls(**hyper)
        for k, p in params.items():
            state.m[k] = np.zeros_like(p)
            state.v[k] = np.zeros_like(p)
        return state


def adam_step(state, params, grads):
    """Update ``params`` in place from ``grads`` and advance ``state``.

    Weight decay is added to the gradient (``g + weight_decay * p``) before the
    moment updates.  Parameters without a gradient entry only receive the
    decay term.  Returns ``params``.
    """
    for k, p in params.items():
        g = grads.get(k)
        if g is not None and np.shape(g) != p.shape:
            raise ValueError(f"gradient shape {np.shape(g)} != parameter shape {p.shape} for {k!r}")
        if k not in state.m:
            state.m[k] = np.zeros_like(p)
            state.v[k] = np.zeros_like(p)
        elif state.m[k].shape != p.shape:
            raise ValueError(f"moment shape mismatch for {k!r}")
    state.step_count += 1
    t = state.step_count
    c1 = 1.0 - state.beta1 ** t
    c2 = 1.0 - state.beta2 ** t
    for k, p in params.items():
        g = grads.get(k)
        g = np.zeros_like(p) if g is None else np.asarray(g, dtype=np.float64)
        if state.weight_decay:
            g = g + state.weight_decay * p
        m, v = state.m[k], state.v[k]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return params
