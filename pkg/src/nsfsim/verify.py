"""Sampling verifiers behind the `verify` command.

Each check returns a CheckResult; the suites cover the structural
assumptions on the material laws (monotonicity, coercivity/growth
envelope, conductivity bounds), the cutoff toolbox property grid, the
Kirchhoff round trip, and the velocity-basis construction.  A broken
law is injected on purpose to prove the detectors fire.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import build_basis
from .constitutive import (ConductivityLaw, StressLaw, check_coercivity_growth,
                           check_monotonicity, stress, sym_norm,
                           theta_continuity_modulus)
from .errors import ConfigError
from .grid import Grid, quadrature_exactness_error
from .operators import diffusion_operator, face_conductivities
from .truncation import (BLEND_CURVATURE_CONSTANT, g_continuity, g_k,
                         kirchhoff, kirchhoff_inverse, t_k, t_k_delta,
                         t_k_delta_d1, t_k_delta_d2)

SCOPES = ("all", "laws", "truncation", "basis")


@dataclass(frozen=True)
class CheckResult:
    scope: str
    name: str
    passed: bool
    detail: str


def _laws_checks() -> list[CheckResult]:
    out = []
    proto = StressLaw(p=2.5)
    rep = check_monotonicity(proto, 10_000, rng_seed=11)
    out.append(CheckResult("laws", "monotonicity prototype p=2.5",
                           rep.passed, f"violations={rep.violations} worst={rep.worst:.3e}"))
    rep = check_monotonicity(StressLaw(p=2.2, profile="rational", nu_lo=0.5,
                                       nu_hi=2.0), 10_000, rng_seed=12)
    out.append(CheckResult("laws", "monotonicity rational-viscosity p=2.2",
                           rep.passed, f"violations={rep.violations}"))

    # identical arguments give an exactly zero product
    d = np.array([0.3, -0.1, 0.7])
    prod = float(np.dot(stress(proto, 1.5, d) - stress(proto, 1.5, d), d - d))
    out.append(CheckResult("laws", "monotonicity product at D1=D2",
                           prod == 0.0, f"product={prod}"))

    broken = check_monotonicity(proto, 1000, rng_seed=13,
                                stress_fn=lambda th, dd: -dd)
    out.append(CheckResult("laws", "broken law S=-D is detected",
                           broken.violations == 1000,
                           f"violations={broken.violations}/1000"))

    env = check_coercivity_growth(StressLaw(p=2.2), 10_000, rng_seed=14)
    ok = env.passed and abs(env.nu_coercive - 1.0) < 1e-9 \
        and env.coercive_offset <= 1e-12 and env.growth_coefficient <= 1.0 + 1e-12
    out.append(CheckResult("laws", "coercivity/growth prototype p=2.2", ok,
                           f"nu={env.nu_coercive:.12f} offset={env.coercive_offset:.3e} "
                           f"growth={env.growth_coefficient:.6f}"))
    env = check_coercivity_growth(StressLaw(p=3.0, eps_d=0.1), 10_000, rng_seed=15)
    out.append(CheckResult("laws", "envelope finite for regularized p=3", env.passed,
                           f"nu={env.nu_coercive:.6f} offset={env.coercive_offset:.3e} "
                           f"growth={env.growth_coefficient:.6f}"))

    law = ConductivityLaw(profile="rational", kappa_lo=1.0, kappa_hi=2.0)
    theta = np.concatenate([np.geomspace(1e-6, 1e6, 9999), [1.0]])
    kap = law.kappa(theta)
    ok = bool(np.all(kap >= law.kappa_lo - 1e-15) and np.all(kap <= law.kappa_hi + 1e-15))
    out.append(CheckResult("laws", "conductivity bounds over 1e4 samples", ok,
                           f"range=[{kap.min():.6f}, {kap.max():.6f}]"))

    zero = sym_norm(stress(StressLaw(p=1.5), 2.0, np.zeros(3)))
    out.append(CheckResult("laws", "S(theta, 0) = 0 even for p < 2",
                           float(zero) == 0.0, f"|S|={float(zero)}"))

    mod = theta_continuity_modulus(StressLaw(p=2.2, profile="rational",
                                             nu_lo=0.5, nu_hi=2.0), rng_seed=16)
    out.append(CheckResult("laws", "stress continuity modulus in theta finite",
                           np.isfinite(mod), f"modulus={mod:.3e}"))
    return out


def _truncation_checks() -> list[CheckResult]:
    out = []
    rng = np.random.default_rng(21)
    z = rng.uniform(-10.0, 10.0, 4000)
    ks = rng.uniform(0.1, 5.0, 4000)

    vals = np.array([t_k(k, v) for k, v in zip(ks, z)])
    odd = np.array([t_k(k, -v) for k, v in zip(ks, z)])
    ok = bool(np.all(np.abs(vals) <= ks) and np.allclose(vals, -odd, atol=0.0))
    out.append(CheckResult("truncation", "T_k odd and bounded by k", ok, ""))

    lip = np.abs(np.diff(t_k(2.0, np.linspace(-5, 5, 2001)))) \
        <= np.diff(np.linspace(-5, 5, 2001)) * (1 + 1e-12)
    out.append(CheckResult("truncation", "T_k 1-Lipschitz on dense grid",
                           bool(np.all(lip)), ""))

    comp = t_k(1.5, t_k(4.0, z))
    out.append(CheckResult("truncation", "T_k o T_j = T_k for j >= k",
                           bool(np.array_equal(comp, t_k(1.5, z))), ""))

    s = rng.uniform(-30.0, 30.0, 1000)
    kk = rng.uniform(0.05, 8.0, 1000)
    g = np.array([g_k(k, v) for k, v in zip(kk, s)])
    bound = bool(np.all(np.abs(g) <= kk * np.abs(s) + 1e-14))
    quad_bound = bool(np.all(g <= 0.5 * s * s + 1e-14))
    nonneg = bool(np.all(g >= 0.0))
    out.append(CheckResult("truncation", "G_k bounds: 0 <= G_k <= min(s^2/2, k|s|)",
                           bound and quad_bound and nonneg, ""))

    # second differences of the convex G_k
    grid_s = np.linspace(-6.0, 6.0, 1201)
    gg = g_k(2.0, grid_s)
    convex = bool(np.all(gg[2:] - 2 * gg[1:-1] + gg[:-2] >= -1e-12))
    out.append(CheckResult("truncation", "G_k convex (second differences)", convex, ""))

    k, delta = 2.0, 0.25
    zz = np.linspace(-4.0, 4.0, 40001)
    outside = (np.abs(zz) <= k - delta) | (np.abs(zz) >= k + delta)
    exact = bool(np.array_equal(t_k_delta(k, delta, zz)[outside],
                                t_k(k, zz)[outside]))
    d1 = t_k_delta_d1(k, delta, zz)
    d2 = t_k_delta_d2(k, delta, zz)
    pos = zz > 0.0
    props = bool(np.all((d1 >= 0.0) & (d1 <= 1.0))
                 and np.all(d2[pos] <= 1e-14)
                 and np.all(t_k_delta(k, delta, zz)[pos] <= t_k(k, zz)[pos] + 1e-14)
                 and np.abs(d2).max() <= BLEND_CURVATURE_CONSTANT / delta + 1e-12)
    out.append(CheckResult("truncation", "mollified cutoff matches T_k outside band",
                           exact, ""))
    out.append(CheckResult(
        "truncation", "mollified cutoff property grid", props,
        f"max|T''|*delta={np.abs(d2).max() * delta:.6f} "
        f"(blend constant {BLEND_CURVATURE_CONSTANT})"))

    law = ConductivityLaw(profile="rational", kappa_lo=1.0, kappa_hi=2.0)
    ss = rng.uniform(0.05, 50.0, 1000)
    back = kirchhoff_inverse(law, law.kirchhoff(ss, 1.0), 1.0)
    worst = float(np.max(np.abs(back - ss) / ss))
    out.append(CheckResult("truncation", "Kirchhoff round trip <= 1e-10",
                           worst <= 1e-10, f"worst rel err={worst:.3e}"))
    quad = kirchhoff(lambda v: law.kappa(v), 7.0, 1.0)
    closed = float(law.kirchhoff(7.0, 1.0))
    out.append(CheckResult("truncation", "adaptive quadrature matches closed form",
                           abs(quad - closed) <= 1e-10 * (1 + abs(closed)),
                           f"diff={abs(quad - closed):.3e}"))

    # g slope lower bound sqrt(mu)/sqrt(2 theta)
    mu = 0.7
    M = 1.0 + max(2.0, 2.0 * mu, 3.0)
    th = rng.uniform(mu, 12.0, 2000)
    th_hat = rng.uniform(mu, 3.0, 2000)
    h = 1e-6
    slope = (g_continuity(M, th + h, th_hat) - g_continuity(M, th, th_hat)) / h
    lower = np.sqrt(mu) / np.sqrt(2.0 * (th + h))
    ok = bool(np.all(slope >= lower - 1e-6))
    out.append(CheckResult("truncation", "g slope >= sqrt(mu)/sqrt(2 theta)", ok,
                           f"worst margin={(slope - lower).min():.3e}"))
    # g^2 recovers G_M; sqrt-then-square costs at most one rounding step
    sg = rng.uniform(-20.0, 20.0, 2000)
    g2 = g_continuity(3.0, 2.0 + sg, 2.0) ** 2
    gm = g_k(3.0, sg)
    ok = bool(np.all(np.abs(g2 - gm) <= 4.0 * np.finfo(float).eps * np.maximum(gm, 1.0)))
    out.append(CheckResult("truncation", "g^2 recovers G_M to rounding", ok,
                           f"worst={np.abs(g2 - gm).max():.3e}"))
    return out


def _basis_checks() -> list[CheckResult]:
    out = []
    grid = Grid(24, 24, 1.0, 1.0, quad_order=3)
    basis = build_basis(grid, 6)
    out.append(CheckResult("basis", "Gram matrix = identity to 1e-10",
                           basis.gram_error <= 1e-10,
                           f"error={basis.gram_error:.3e}"))
    div = float(np.abs(basis.divergence_at_quad()).max())
    out.append(CheckResult("basis", "pointwise divergence <= 1e-12",
                           div <= 1e-12, f"max={div:.3e}"))
    qerr = quadrature_exactness_error(grid)
    out.append(CheckResult("basis", "quadrature exact to degree 2q-1",
                           qerr <= 1e-13, f"rel err={qerr:.3e}"))

    law = ConductivityLaw(profile="rational", kappa_lo=1.0, kappa_hi=2.0)
    rng = np.random.default_rng(31)
    theta = np.asarray(1.0 + 2.0 * rng.random((grid.ny + 2, grid.nx + 2)))
    kx, ky = face_conductivities(law, theta, "kirchhoff")
    ok = bool(np.all(kx >= law.kappa_lo - 1e-12) and np.all(kx <= law.kappa_hi + 1e-12)
              and np.all(ky >= law.kappa_lo - 1e-12) and np.all(ky <= law.kappa_hi + 1e-12))
    try:
        diffusion_operator(grid, kx, ky)  # raises if the M-matrix shape is lost
        assembled = True
    except AssertionError:
        assembled = False
    out.append(CheckResult("basis", "face conductivities in bounds, M-matrix holds",
                           ok and assembled, ""))
    return out


def run_verification(scope: str = "all") -> list[CheckResult]:
    if scope not in SCOPES:
        raise ConfigError(f"unknown scope {scope!r}; pick from {SCOPES}")
    checks: list[CheckResult] = []
    if scope in ("all", "laws"):
        checks += _laws_checks()
    if scope in ("all", "truncation"):
        checks += _truncation_checks()
    if scope in ("all", "basis"):
        checks += _basis_checks()
    return checks


def format_table(checks: list[CheckResult]) -> str:
    width = max(len(c.name) for c in checks) + 2
    lines = []
    for c in checks:
        mark = "pass" if c.passed else "FAIL"
        detail = f"  {c.detail}" if c.detail else ""
        lines.append(f"[{mark}] {c.scope:<11} {c.name:<{width}}{detail}")
    n_fail = sum(not c.passed for c in checks)
    lines.append(f"{len(checks) - n_fail}/{len(checks)} checks passed")
    return "\n".join(lines)
