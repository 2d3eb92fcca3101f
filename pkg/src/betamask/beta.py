"""Beta distribution primitives for the variational edge mask.

Sampling goes through two Gamma variates produced by Marsaglia and Tsang's
squeeze method, with the usual boost for shapes below one:
Gamma(a) = Gamma(a + 1) * U^(1/a). Samples are clamped away from {0, 1}
because the Table-style priors use shapes below one, whose densities
diverge at the support boundary.
"""

from __future__ import annotations

import numpy as np

from .special import digamma, log_beta, trigamma

SAMPLE_CLAMP = 1e-6


def beta_log_pdf(m, alpha, beta):
    """Log density of Beta(alpha, beta) at m, elementwise.

    Raises for arguments on the boundary of (0, 1): with a shape below one
    the density diverges there, and outside the open interval it is zero.
    """
    m_arr = np.asarray(m, dtype=np.float64)
    a = np.asarray(alpha, dtype=np.float64)
    b = np.asarray(beta, dtype=np.float64)
    if np.any(a <= 0.0) or np.any(b <= 0.0):
        raise ValueError("shape parameters must be positive")
    if np.any(m_arr <= 0.0) or np.any(m_arr >= 1.0):
        raise ValueError("m must lie strictly inside (0, 1); densities at the "
                         "boundary diverge for shapes below one")
    out = (a - 1.0) * np.log(m_arr) + (b - 1.0) * np.log1p(-m_arr) - log_beta(a, b)
    return float(out) if np.isscalar(m) and np.isscalar(alpha) else out


def beta_log_pdf_shape_grads(m, alpha, beta):
    """d log q / d alpha and d log q / d beta at sample m, elementwise."""
    m_arr = np.asarray(m, dtype=np.float64)
    a = np.asarray(alpha, dtype=np.float64)
    b = np.asarray(beta, dtype=np.float64)
    common = digamma(a + b)
    return np.log(m_arr) + common - digamma(a), np.log1p(-m_arr) + common - digamma(b)


def _gamma_at_least_one(shape: float, rng: np.random.Generator) -> float:
    # Marsaglia-Tsang squeeze for shape >= 1.
    d = shape - 1.0 / 3.0
    c = 1.0 / np.sqrt(9.0 * d)
    while True:
        x = rng.standard_normal()
        v = 1.0 + c * x
        if v <= 0.0:
            continue
        v = v * v * v
        u = rng.random()
        if u < 1.0 - 0.0331 * x * x * x * x:
            return d * v
        if np.log(u) < 0.5 * x * x + d * (1.0 - v + np.log(v)):
            return d * v


def sample_gamma(shape: float, rng: np.random.Generator) -> float:
    """One Gamma(shape, 1) draw; shapes below one use the boost identity."""
    if shape <= 0.0:
        raise ValueError("gamma shape must be positive")
    if shape < 1.0:
        g = _gamma_at_least_one(shape + 1.0, rng)
        u = rng.random()
        # u == 0 would map to exactly zero; nudge keeps the draw positive
        if u == 0.0:
            u = np.nextafter(0.0, 1.0)
        return g * u ** (1.0 / shape)
    return _gamma_at_least_one(shape, rng)


def sample_beta(alpha, beta, rng: np.random.Generator):
    """Beta draws as g1/(g1+g2), clamped into [1e-6, 1-1e-6].

    ``alpha``/``beta`` may be scalars or aligned arrays; the output matches
    their broadcast shape. Fixed generator state reproduces the sequence.
    """
    a = np.atleast_1d(np.asarray(alpha, dtype=np.float64))
    b = np.atleast_1d(np.asarray(beta, dtype=np.float64))
    if np.any(a <= 0.0) or np.any(b <= 0.0):
        raise ValueError("shape parameters must be positive")
    a, b = np.broadcast_arrays(a, b)
    out = np.empty(a.shape)
    flat_a, flat_b, flat_out = a.ravel(), b.ravel(), out.ravel()
    for i in range(flat_a.size):
        g1 = sample_gamma(flat_a[i], rng)
        g2 = sample_gamma(flat_b[i], rng)
        flat_out[i] = g1 / (g1 + g2)
    np.clip(out, SAMPLE_CLAMP, 1.0 - SAMPLE_CLAMP, out=out)
    return float(out[0]) if np.isscalar(alpha) and np.isscalar(beta) else out


def kl_beta_beta(q_alpha, q_beta, p_alpha, p_beta, with_grads: bool = False):
    """KL(Beta(q) || Beta(p)) in closed form, elementwise.

    With ``with_grads`` the analytic derivatives w.r.t. q_alpha and q_beta
    are returned as well (digamma/trigamma terms).
    """
    qa = np.asarray(q_alpha, dtype=np.float64)
    qb = np.asarray(q_beta, dtype=np.float64)
    pa = np.asarray(p_alpha, dtype=np.float64)
    pb = np.asarray(p_beta, dtype=np.float64)
    if np.any(qa <= 0) or np.any(qb <= 0) or np.any(pa <= 0) or np.any(pb <= 0):
        raise ValueError("shape parameters must be positive")
    psi_qa = digamma(qa)
    psi_qb = digamma(qb)
    psi_qs = digamma(qa + qb)
    kl = (log_beta(pa, pb) - log_beta(qa, qb)
          + (qa - pa) * psi_qa + (qb - pb) * psi_qb
          + (pa - qa + pb - qb) * psi_qs)
    scalar = np.isscalar(q_alpha) and np.isscalar(q_beta)
    if not with_grads:
        return float(kl) if scalar else kl
    tri_qs = trigamma(qa + qb)
    excess = pa - qa + pb - qb
    d_qa = (qa - pa) * trigamma(qa) + excess * tri_qs
    d_qb = (qb - pb) * trigamma(qb) + excess * tri_qs
    if scalar:
        return float(kl), float(d_qa), float(d_qb)
    return kl, d_qa, d_qb


def beta_mean(alpha, beta):
    """Posterior mean alpha / (alpha + beta)."""
    a = np.asarray(alpha, dtype=np.float64)
    b = np.asarray(beta, dtype=np.float64)
    return a / (a + b)
