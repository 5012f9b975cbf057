"""Pure-numpy path kernels; fallback when the compiled extension is absent.

Both backends consume random draws in exactly the same order (step-major,
path-minor, one Philox stream per chunk), so with FP contraction disabled in
the compiled build the outputs are bit-identical.
"""

from __future__ import annotations

import numpy as np

COMPILED = False


def euler_chunk(gen, s0, dt, sqrt_dt, lam, ae4, ae, out_s, out_db):
    """Full-truncation Euler step of dS = (lam S+ + 4ae) dt + 2 sqrt(ae S+) dB.

    ``ae[k] = a * exp(tau_{t_k})`` at the left endpoint of step k.  Negative
    excursions are clipped to zero inside drift and diffusion only; the raw
    state is propagated.
    """
    n_steps = dt.shape[0]
    z = gen.standard_normal((n_steps, out_s.shape[0]))
    out_s[:, 0] = s0
    for k in range(n_steps):
        db = sqrt_dt[k] * z[k]
        out_db[:, k] = db
        s = out_s[:, k]
        sp = np.maximum(s, 0.0)
        out_s[:, k + 1] = s + (lam[k] * sp + ae4[k]) * dt[k] + 2.0 * np.sqrt(ae[k] * sp) * db


def exact_chunk(gen, s0, deltas, out_s):
    """Exact squared-Bessel(4) transitions on the clock increments ``deltas``.

    Each transition draws N ~ Poisson(s / (2 delta)) then G ~ Gamma(2 + N),
    giving S' = 2 delta G, i.e. delta times a noncentral chi-squared(4)
    variate with noncentrality s / delta.
    """
    out_s[:, 0] = s0
    for k in range(deltas.shape[0]):
        d = deltas[k]
        s = out_s[:, k]
        n = gen.poisson(s / (2.0 * d))
        g = gen.standard_gamma(2.0 + n)
        out_s[:, k + 1] = (2.0 * d) * g
