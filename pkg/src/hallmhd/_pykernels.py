"""Pure numpy versions of the compiled kernels (same contracts, same math)."""
from __future__ import annotations

import numpy as np


def project_divergence(tensor, k1, k2, k3, inv_ksq, with_curl):
    """Tensor divergence, Leray projection and optional curl on packed modes.

    ``tensor`` has shape ``(3, 3, n)``; the divergence contracts the first index,
    ``d_j = i sum_i k_i T_ij``.
    """
    d = 1j * (k1 * tensor[0] + k2 * tensor[1] + k3 * tensor[2])
    kd = (k1 * d[0] + k2 * d[1] + k3 * d[2]) * inv_ksq
    p = np.stack([d[0] - k1 * kd, d[1] - k2 * kd, d[2] - k3 * kd])
    if not with_curl:
        return p
    return 1j * np.stack([k2 * p[2] - k3 * p[1], k3 * p[0] - k1 * p[2], k1 * p[1] - k2 * p[0]])


def duhamel_trapezoid(sources, decay, h):
    """Composite trapezoid of ``int_0^{t_m} E(t_m - s) F(s) ds`` at every node.

    ``decay`` is the one-step multiplier ``E(h)``; the sum over earlier nodes is
    carried by the recurrence ``A_m = E A_{m-1} + F_m``.
    """
    out = np.zeros_like(sources)
    acc = sources[0].copy()
    first = sources[0].copy()
    for m in range(1, sources.shape[0]):
        f = sources[m]
        acc *= decay
        acc += f
        first *= decay
        out[m] = h * (acc - 0.5 * first - 0.5 * f)
    return out
