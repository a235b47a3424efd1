"""Scalar cutoff functions, their smooth variants, and the Kirchhoff transform.

The level-k cutoff T_k(z) = sign(z) min(|z|, k), its primitive G_k with
G_k(0) = 0, a C^2 mollified cutoff T_{k,delta}, and the square-root
companion g(s) = sign(s) sqrt(G_M(s)) used to measure distance to the
thermal equilibrium.  The mollified cutoff is realized as an explicit
quintic blend on [k-delta, k+delta] rather than an actual kernel
convolution; the blend reproduces every property a convolution with a
symmetric positive kernel would have:

    T_{k,delta} = T_k outside the band,  0 <= T' <= 1,
    T'' <= 0 and T_{k,delta} <= T_k on (0, inf),  |T''| <= 1.5/delta.

The Kirchhoff transform K(s) = int kappa is evaluated in closed form for
the built-in conductivity profiles and by adaptive quadrature otherwise;
its inverse uses bracketed root finding (kappa >= kappa_lo > 0 makes K
strictly increasing).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from .constitutive import ConductivityLaw

# |T''| bound of the quintic blend, in units of 1/delta
BLEND_CURVATURE_CONSTANT = 1.5


@dataclass(frozen=True)
class CutoffParams:
    """Bundle of cutoff levels: main level k, mollification radius delta,
    large truncation level M and small comparison level epsilon."""

    k: float
    delta: float
    M: float = np.inf
    epsilon: float = 0.0

    def __post_init__(self):
        if self.k <= 0.0:
            raise ValueError("cutoff level k must be positive")
        if not 0.0 < self.delta < self.k:
            raise ValueError("mollification radius must satisfy 0 < delta < k")
        if self.epsilon and not 0.0 < self.epsilon < self.k:
            raise ValueError("comparison level must satisfy 0 < epsilon < k")


def _check_level(k: float) -> float:
    k = float(k)
    if k <= 0.0:
        raise ValueError("cutoff level must be positive")
    return k


def t_k(k: float, z) -> np.ndarray:
    """Cutoff T_k(z) = sign(z) min(|z|, k)."""
    k = _check_level(k)
    z = np.asarray(z, dtype=float)
    return np.clip(z, -k, k)


def g_k(k: float, s) -> np.ndarray:
    """Primitive of T_k vanishing at zero: s^2/2 inside, k|s| - k^2/2 outside."""
    k = _check_level(k)
    s = np.asarray(s, dtype=float)
    a = np.abs(s)
    return np.where(a <= k, 0.5 * s * s, k * a - 0.5 * k * k)


def _blend_params(k: float, delta: float) -> tuple[float, float]:
    k = _check_level(k)
    delta = float(delta)
    if not 0.0 < delta < k:
        raise ValueError("mollification radius must satisfy 0 < delta < k")
    return k, delta


def _blend_s(k: float, delta: float, a: np.ndarray) -> np.ndarray:
    return (a - (k - delta)) / (2.0 * delta)


def t_k_delta(k: float, delta: float, z) -> np.ndarray:
    """C^2 mollified cutoff; equals T_k for |z| <= k-delta or |z| >= k+delta."""
    k, delta = _blend_params(k, delta)
    z = np.asarray(z, dtype=float)
    a = np.abs(z)
    s = np.clip(_blend_s(k, delta, a), 0.0, 1.0)
    # quintic h(s) = s - s^3 + s^4/2 matches value/slope/curvature of both branches
    blend = (k - delta) + 2.0 * delta * (s - s ** 3 + 0.5 * s ** 4)
    out = np.where(a <= k - delta, a, np.where(a >= k + delta, k, blend))
    return np.sign(z) * out


def t_k_delta_d1(k: float, delta: float, z) -> np.ndarray:
    """First derivative of the mollified cutoff, in [0, 1] everywhere."""
    k, delta = _blend_params(k, delta)
    z = np.asarray(z, dtype=float)
    a = np.abs(z)
    s = np.clip(_blend_s(k, delta, a), 0.0, 1.0)
    # clip rounding noise; the exact blend derivative stays inside [0, 1]
    dbl = np.clip(1.0 - 3.0 * s ** 2 + 2.0 * s ** 3, 0.0, 1.0)
    return np.where(a <= k - delta, 1.0, np.where(a >= k + delta, 0.0, dbl))


def t_k_delta_d2(k: float, delta: float, z) -> np.ndarray:
    """Second derivative; <= 0 on (0, inf) and bounded by 1.5/delta."""
    k, delta = _blend_params(k, delta)
    z = np.asarray(z, dtype=float)
    a = np.abs(z)
    s = np.clip(_blend_s(k, delta, a), 0.0, 1.0)
    inside = (a > k - delta) & (a < k + delta)
    curv = np.minimum(3.0 * (s ** 2 - s) / delta, 0.0)
    return np.sign(z) * np.where(inside, curv, 0.0)


def g_continuity(M: float, theta, theta_hat) -> np.ndarray:
    """g(theta - theta_hat) = sign(.) sqrt(G_M(.)); g^2 recovers G_M exactly."""
    M = _check_level(M)
    s = np.asarray(theta, dtype=float) - np.asarray(theta_hat, dtype=float)
    return np.sign(s) * np.sqrt(g_k(M, s))


def kirchhoff(law, s, s_ref: float = 1.0):
    """K(s) = int_{s_ref}^{s} kappa(z) dz, strictly increasing in s.

    ConductivityLaw instances use their closed form; any other object
    must be callable kappa(z) and is integrated adaptively.
    """
    if isinstance(law, ConductivityLaw):
        return law.kirchhoff(s, s_ref)
    s_arr = np.asarray(s, dtype=float)
    if s_ref <= 0.0 or np.any(s_arr <= 0.0):
        raise ValueError("Kirchhoff transform requires positive temperatures")

    def one(val: float) -> float:
        r, _ = integrate.quad(law, s_ref, val, epsabs=1e-14, epsrel=1e-12, limit=200)
        return r

    if s_arr.ndim == 0:
        return float(one(float(s_arr)))
    return np.array([one(v) for v in s_arr.ravel()]).reshape(s_arr.shape)


def kirchhoff_inverse(law, u, s_ref: float = 1.0):
    """Solve K(theta) = u for theta > 0 to |K(theta)-u| <= 1e-12 (1+|u|)."""
    u_arr = np.asarray(u, dtype=float)

    def one(target: float) -> float:
        lo, hi = s_ref, s_ref
        flo = fhi = 0.0  # K(s_ref) = 0
        it = 0
        while fhi < target:
            hi *= 2.0
            fhi = kirchhoff(law, hi, s_ref)
            it += 1
            if it > 200:
                raise ValueError("Kirchhoff inverse target not attainable from above")
        if flo > target:
            # kappa is bounded, so K(0+) is finite: targets below it fail
            if target <= kirchhoff(law, 1e-300, s_ref):
                raise ValueError("Kirchhoff inverse target below the attainable range")
            while flo > target:
                lo *= 0.5
                flo = kirchhoff(law, lo, s_ref)
        if lo == hi:
            return lo
        root = optimize.brentq(lambda x: kirchhoff(law, x, s_ref) - target,
                               lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps)
        if abs(kirchhoff(law, root, s_ref) - target) > 1e-12 * (1.0 + abs(target)):
            raise ValueError("Kirchhoff inverse did not reach the requested accuracy")
        return float(root)

    if u_arr.ndim == 0:
        return one(float(u_arr))
    return np.array([one(v) for v in u_arr.ravel()]).reshape(u_arr.shape)
