"""Material laws: power-law viscous stress and bounded heat conductivity.

The viscous stress is the shear-rate power law

    S(theta, D) = nu(theta) * (eps_d^2 + |D|^2)^((p-2)/2) * D,

monotone in D with p-coercive dissipation S:D, and the heat flux is
Fourier with a conductivity kappa(theta) pinched between positive
bounds.  Besides the law objects themselves this module provides
randomized samplers that certify the structural properties the solver
relies on: monotonicity of the stress in D, the p-coercivity/growth
envelope, and the conductivity bounds.

Symmetric 2x2 tensors are packed as arrays whose last axis holds
(xx, yy, xy); the off-diagonal entry is stored once and carries weight
two in norms and contractions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PROFILES = ("constant", "rational")


def sym2(xx, yy, xy) -> np.ndarray:
    """Pack components into the (..., 3) symmetric-tensor layout."""
    return np.stack(np.broadcast_arrays(
        np.asarray(xx, dtype=float),
        np.asarray(yy, dtype=float),
        np.asarray(xy, dtype=float)), axis=-1)


def sym_norm(d) -> np.ndarray:
    """Frobenius norm |D| = sqrt(xx^2 + yy^2 + 2 xy^2)."""
    d = np.asarray(d, dtype=float)
    return np.sqrt(d[..., 0] ** 2 + d[..., 1] ** 2 + 2.0 * d[..., 2] ** 2)


def sym_dot(a, b) -> np.ndarray:
    """Frobenius inner product A:B with the xy entry counted twice."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1] + 2.0 * a[..., 2] * b[..., 2]


def _check_theta(theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(theta)):
        raise ValueError("temperature contains non-finite entries")
    if np.any(theta <= 0.0):
        raise ValueError("temperature must be positive")
    return theta


def _profile_eval(profile: str, lo: float, hi: float, theta: np.ndarray) -> np.ndarray:
    if profile == "constant":
        return np.full_like(theta, lo)
    # rational: lo + (hi - lo) * theta / (1 + theta), increasing, bounded in [lo, hi)
    return lo + (hi - lo) * theta / (1.0 + theta)


@dataclass(frozen=True)
class StressLaw:
    """Power-law stress with a bounded positive viscosity profile.

    p is the power-law exponent (> 1; the admissible analysis range
    starts at 11/5).  eps_d >= 0 shifts |D| -> sqrt(eps_d^2 + |D|^2)
    inside the power, which regularizes the p < 2 case.
    """

    p: float = 2.2
    profile: str = "constant"
    nu_lo: float = 1.0
    nu_hi: float = 1.0
    eps_d: float = 0.0

    def __post_init__(self):
        if not self.p > 1.0:
            raise ValueError(f"power-law exponent must exceed 1, got {self.p}")
        if self.profile not in PROFILES:
            raise ValueError(f"unknown viscosity profile {self.profile!r}")
        if not (0.0 < self.nu_lo <= self.nu_hi < np.inf):
            raise ValueError("viscosity bounds must satisfy 0 < nu_lo <= nu_hi < inf")
        if self.profile == "constant" and self.nu_lo != self.nu_hi:
            raise ValueError("constant profile requires nu_lo == nu_hi")
        if self.eps_d < 0.0:
            raise ValueError("eps_d must be nonnegative")

    def nu(self, theta) -> np.ndarray:
        """Viscosity nu(theta), always inside [nu_lo, nu_hi]."""
        return _profile_eval(self.profile, self.nu_lo, self.nu_hi, _check_theta(theta))


@dataclass(frozen=True)
class ConductivityLaw:
    """Heat conductivity kappa(theta) with 0 < kappa_lo <= kappa <= kappa_hi."""

    profile: str = "constant"
    kappa_lo: float = 1.0
    kappa_hi: float = 1.0

    def __post_init__(self):
        if self.profile not in PROFILES:
            raise ValueError(f"unknown conductivity profile {self.profile!r}")
        if not (0.0 < self.kappa_lo <= self.kappa_hi < np.inf):
            raise ValueError("bounds must satisfy 0 < kappa_lo <= kappa_hi < inf")
        if self.profile == "constant" and self.kappa_lo != self.kappa_hi:
            raise ValueError("constant profile requires kappa_lo == kappa_hi")

    def kappa(self, theta) -> np.ndarray:
        return _profile_eval(self.profile, self.kappa_lo, self.kappa_hi, _check_theta(theta))

    def kirchhoff(self, s, s_ref: float = 1.0) -> np.ndarray:
        """Antiderivative K(s) = int_{s_ref}^{s} kappa(z) dz, closed form."""
        s = _check_theta(s)
        if s_ref <= 0.0:
            raise ValueError("reference temperature must be positive")
        if self.profile == "constant":
            return self.kappa_lo * (s - s_ref)
        dk = self.kappa_hi - self.kappa_lo
        # int theta/(1+theta) = theta - log(1+theta)
        return self.kappa_lo * (s - s_ref) + dk * ((s - np.log1p(s)) - (s_ref - np.log1p(s_ref)))

    def kirchhoff_mean(self, a, b) -> np.ndarray:
        """Integral mean of kappa over [a, b]: (K(b) - K(a)) / (b - a).

        Stays inside [kappa_lo, kappa_hi]; continuous limit kappa(a) as
        b -> a.  Used as a face conductivity so that the discrete
        diffusion of theta coincides with the plain Laplacian of K(theta).
        """
        a = _check_theta(a)
        b = _check_theta(b)
        if self.profile == "constant":
            return np.full_like(np.broadcast_arrays(a, b)[0], self.kappa_lo)
        d = b - a
        dk = self.kappa_hi - self.kappa_lo
        with np.errstate(divide="ignore", invalid="ignore"):
            # (d - log1p(d/(1+a))) / d = mean of z/(1+z) over [a, b]
            frac = 1.0 - np.log1p(d / (1.0 + a)) / d
        mid = 0.5 * (a + b)
        near = np.abs(d) < 1e-9 * (1.0 + np.abs(a))
        frac = np.where(near, mid / (1.0 + mid), frac)
        return self.kappa_lo + dk * frac


def stress(law: StressLaw, theta, d) -> np.ndarray:
    """Viscous stress S(theta, D); exactly zero where D = 0 and eps_d = 0."""
    theta = _check_theta(theta)
    d = np.asarray(d, dtype=float)
    if not np.all(np.isfinite(d)):
        raise ValueError("strain rate contains non-finite entries")
    mag2 = d[..., 0] ** 2 + d[..., 1] ** 2 + 2.0 * d[..., 2] ** 2 + law.eps_d ** 2
    with np.errstate(divide="ignore"):
        amp = np.where(mag2 > 0.0, mag2 ** (0.5 * (law.p - 2.0)), 0.0)
    amp = law.nu(theta) * amp
    return amp[..., None] * d


def stress_power(law: StressLaw, theta, d) -> np.ndarray:
    """Dissipation density S(theta, D):D, nonnegative for these laws."""
    return sym_dot(stress(law, theta, d), np.asarray(d, dtype=float))


def conductivity(law: ConductivityLaw, theta) -> np.ndarray:
    """kappa(theta); result is guaranteed inside [kappa_lo, kappa_hi]."""
    return law.kappa(theta)


def _sample_tensors(rng: np.random.Generator, n: int, scale: float) -> np.ndarray:
    return scale * rng.standard_normal((n, 3))


@dataclass(frozen=True)
class MonotonicityReport:
    samples: int
    violations: int
    worst: float          # most negative monotonicity product seen
    worst_tolerance: float

    @property
    def passed(self) -> bool:
        return self.violations == 0


def check_monotonicity(law: StressLaw, sample_count: int = 10_000,
                       theta_range=(0.5, 4.0), d_scale: float = 1.0,
                       rng_seed: int = 0, stress_fn=None) -> MonotonicityReport:
    """Sample (S(th,D1)-S(th,D2)):(D1-D2) over random pairs.

    A sample violates monotonicity when the product drops below
    -1e-12 * (|D1|+|D2|)^p.  stress_fn overrides the law evaluation so
    deliberately broken laws can be fed through the same check.
    """
    if sample_count < 1:
        raise ValueError("sample_count must be at least 1")
    rng = np.random.default_rng(rng_seed)
    d1 = _sample_tensors(rng, sample_count, d_scale)
    d2 = _sample_tensors(rng, sample_count, d_scale)
    theta = rng.uniform(theta_range[0], theta_range[1], sample_count)
    fn = stress_fn if stress_fn is not None else (lambda th, d: stress(law, th, d))
    prod = sym_dot(fn(theta, d1) - fn(theta, d2), d1 - d2)
    tol = 1e-12 * (sym_norm(d1) + sym_norm(d2)) ** law.p
    bad = prod < -tol
    worst_i = int(np.argmin(prod - (-tol)))
    return MonotonicityReport(samples=sample_count, violations=int(bad.sum()),
                              worst=float(prod.min()), worst_tolerance=float(tol[worst_i]))


@dataclass(frozen=True)
class EnvelopeReport:
    samples: int
    nu_coercive: float        # largest nu_ with S:D >= nu_*|D|^p - offset on all samples
    coercive_offset: float
    growth_coefficient: float  # smallest C with |S| <= C*(1+|D|)^(p-1) on all samples
    finite: bool

    @property
    def passed(self) -> bool:
        return self.finite and self.nu_coercive > 0.0


def check_coercivity_growth(law: StressLaw, sample_count: int = 10_000,
                            theta_range=(0.5, 4.0), d_scale: float = 1.0,
                            rng_seed: int = 0, stress_fn=None) -> EnvelopeReport:
    """Fit coercivity and growth envelopes over random samples.

    Reports the largest coercivity constant (as the infimum of
    S:D / |D|^p, clipped at the declared nu_lo), the offset needed to
    make the coercivity inequality hold everywhere, and the smallest
    growth coefficient for |S| <= C (1+|D|)^(p-1).
    """
    if sample_count < 1:
        raise ValueError("sample_count must be at least 1")
    rng = np.random.default_rng(rng_seed)
    d = _sample_tensors(rng, sample_count, d_scale)
    theta = rng.uniform(theta_range[0], theta_range[1], sample_count)
    fn = stress_fn if stress_fn is not None else (lambda th, dd: stress(law, th, dd))
    s = fn(theta, d)
    power = sym_dot(s, d)
    mag = sym_norm(d)
    nz = mag > 0.0
    ratio = power[nz] / mag[nz] ** law.p
    finite = bool(np.all(np.isfinite(ratio))) and bool(np.all(np.isfinite(power)))
    nu_c = float(min(np.min(ratio, initial=np.inf), law.nu_lo))
    if not np.isfinite(nu_c) or nu_c <= 0.0:
        nu_c = 0.0
    offset = float(np.max(nu_c * mag ** law.p - power, initial=0.0))
    offset = max(offset, 0.0)
    growth = float(np.max(sym_norm(s) / (1.0 + mag) ** (law.p - 1.0), initial=0.0))
    finite = finite and np.isfinite(offset) and np.isfinite(growth)
    return EnvelopeReport(samples=sample_count, nu_coercive=nu_c,
                          coercive_offset=offset, growth_coefficient=growth,
                          finite=finite)


def theta_continuity_modulus(law: StressLaw, sample_count: int = 1000,
                             theta_range=(0.5, 4.0), d_scale: float = 1.0,
                             dtheta: float = 1e-6, rng_seed: int = 0) -> float:
    """Worst finite-difference modulus |S(th+dt,D)-S(th,D)| / dt over samples."""
    rng = np.random.default_rng(rng_seed)
    d = _sample_tensors(rng, sample_count, d_scale)
    theta = rng.uniform(theta_range[0], theta_range[1], sample_count)
    diff = stress(law, theta + dtheta, d) - stress(law, theta, d)
    return float(np.max(sym_norm(diff)) / dtheta)
