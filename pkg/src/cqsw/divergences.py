"""Relative entropy, three Renyi divergence families, the relative entropy
variance, and the max-relative entropy. All values in bits; +inf is
represented by math.inf.
"""

from __future__ import annotations

import math

import numpy as np

from cqsw.errors import InvalidAlphaError, SupportViolationError
from cqsw.operators import (
    DEFAULT_POLICY,
    SupportPolicy,
    _as_matrix,
    eig_hermitian,
    intersection_projector,
    spectral_log2,
    spectral_power,
    support_contained,
    support_projector,
)

VARIANTS = ("petz", "sandwiched", "flat")
_ALPHA_ONE_WINDOW = 1e-6
_FLAT_TRACE_SLACK = 1e-9


def _check_variant(variant: str) -> str:
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}, expected one of {VARIANTS}")
    return variant


def relative_entropy(rho, sigma, policy: SupportPolicy = DEFAULT_POLICY) -> float:
    """Umegaki relative entropy D(rho||sigma) in bits; +inf off support."""
    rho = _as_matrix(rho)
    sigma = _as_matrix(sigma)
    if not support_contained(rho, sigma, policy):
        return math.inf
    w, v = eig_hermitian(rho)
    cutoff = policy.relative_cutoff * float(np.max(np.abs(w))) if w.size else 0.0
    on = w > cutoff
    ent = float(np.sum(w[on] * np.log2(w[on])))
    log_sigma = spectral_log2(sigma, policy)
    cross = float(np.real(np.trace(rho @ log_sigma)))
    return ent - cross


def q_alpha(rho, sigma, alpha: float, variant: str = "petz",
            policy: SupportPolicy = DEFAULT_POLICY) -> float:
    """The trace functional Q_alpha of the chosen divergence family."""
    _check_variant(variant)
    if alpha <= 0:
        raise InvalidAlphaError(f"alpha must be positive, got {alpha}")
    rho = _as_matrix(rho)
    sigma = _as_matrix(sigma)
    if variant == "petz":
        ra = spectral_power(rho, alpha, policy)
        sa = spectral_power(sigma, 1.0 - alpha, policy)
        return float(np.real(np.trace(ra @ sa)))
    if variant == "sandwiched":
        # spectrum of sigma^e rho sigma^e (e = (1-alpha)/(2alpha)) via the
        # singular values of sigma^e rho^(1/2): squaring the singular values
        # resolves eigenvalues far below the noise floor of the product
        # matrix itself, which matters when alpha < 1 because w ** alpha
        # keeps tiny eigenvalues relevant
        a = spectral_power(sigma, (1.0 - alpha) / (2.0 * alpha), policy) @ \
            spectral_power(rho, 0.5, policy)
        sv = np.linalg.svd(a, compute_uv=False)
        scale = float(sv[0]) if sv.size else 0.0
        keep = sv > policy.relative_cutoff * scale
        w = sv[keep] ** 2
        return float(np.sum(w ** alpha))
    # flat: restrict both operators to the intersection of supports
    proj = intersection_projector(rho, sigma, policy)
    w, v = eig_hermitian(proj)
    basis = v[:, w > 0.5]
    if basis.shape[1] == 0:
        return 0.0
    rho_p = basis.conj().T @ rho @ basis
    sigma_p = basis.conj().T @ sigma @ basis
    if float(np.real(np.trace(rho_p))) < 1.0 - _FLAT_TRACE_SLACK:
        return 0.0 if alpha < 1.0 else math.nan  # caller maps to +inf
    m = alpha * spectral_log2(rho_p, policy) + (1.0 - alpha) * spectral_log2(sigma_p, policy)
    mw, _ = eig_hermitian(m)
    return float(np.sum(np.exp2(mw)))


def renyi_divergence(rho, sigma, alpha: float, variant: str = "petz",
                     policy: SupportPolicy = DEFAULT_POLICY) -> float:
    """D_alpha in bits for the petz/sandwiched/flat family; +inf as needed."""
    _check_variant(variant)
    if alpha <= 0:
        raise InvalidAlphaError(f"alpha must be positive, got {alpha}")
    if abs(alpha - 1.0) < _ALPHA_ONE_WINDOW:
        return relative_entropy(rho, sigma, policy)
    rho = _as_matrix(rho)
    sigma = _as_matrix(sigma)
    if alpha > 1.0 and not support_contained(rho, sigma, policy):
        return math.inf
    if alpha < 1.0:
        # orthogonal states have divergence +inf for every variant
        pr = support_projector(rho, policy)
        ps = support_projector(sigma, policy)
        if float(np.real(np.trace(pr @ ps))) <= policy.relative_cutoff:
            return math.inf
    q = q_alpha(rho, sigma, alpha, variant, policy)
    if math.isnan(q):
        return math.inf
    if q <= 0.0:
        return math.inf if alpha < 1.0 else -math.inf
    return math.log2(q) / (alpha - 1.0)


def relative_entropy_variance(rho, sigma,
                              policy: SupportPolicy = DEFAULT_POLICY) -> float:
    """V(rho||sigma); requires supp(rho) inside supp(sigma).

    Units: ln(2) times the base-2 variance of the log-likelihood ratio, so
    that the second derivative of the (base-2) cumulant E_0(s) at s = 0
    equals -V exactly. Entropies stay in bits; this is the one quantity
    reported in mixed units.
    """
    rho = _as_matrix(rho)
    sigma = _as_matrix(sigma)
    if not support_contained(rho, sigma, policy):
        raise SupportViolationError("supp(rho) not contained in supp(sigma)")
    diff = spectral_log2(rho, policy) - spectral_log2(sigma, policy)
    first = float(np.real(np.trace(rho @ diff)))
    second = float(np.real(np.trace(rho @ diff @ diff)))
    return math.log(2.0) * (second - first * first)


def d_max(rho, sigma, policy: SupportPolicy = DEFAULT_POLICY) -> float:
    """Max-relative entropy: log2 of the smallest c with rho <= c sigma."""
    rho = _as_matrix(rho)
    sigma = _as_matrix(sigma)
    if not support_contained(rho, sigma, policy):
        return math.inf
    isq = spectral_power(sigma, -0.5, policy)
    w, _ = eig_hermitian(isq @ rho @ isq)
    top = float(w[-1]) if w.size else 0.0
    if top <= 0.0:
        return -math.inf
    return math.log2(top)
