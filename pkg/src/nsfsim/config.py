"""Flat key=value configuration with typed access and CLI overrides.

The file format is UTF-8 text, one key=value pair per line, '#' starts
a comment.  Every key has a default; unknown keys are rejected so typos
surface immediately.  Side specifications for the thermal boundary are
either a number or an affine expression "a+b*s" / "a-b*s" in the
normalized arclength s in [0, 1] along that side.
"""

from __future__ import annotations

import re

from .errors import ConfigError

DEFAULTS: dict[str, str] = {
    # grid and quadrature
    "grid.nx": "32",
    "grid.ny": "32",
    "grid.Lx": "1.0",
    "grid.Ly": "1.0",
    "quad.order": "3",
    "basis.n_modes": "6",
    # stress law
    "stress.p": "2.2",
    "stress.profile": "constant",
    "stress.lo": "1.0",
    "stress.hi": "1.0",
    "stress.eps_d": "0.0",
    # conductivity
    "kappa.profile": "constant",
    "kappa.lo": "1.0",
    "kappa.hi": "1.0",
    "faces.rule": "kirchhoff",
    # thermal boundary data (value or "a+b*s" along the side)
    "theta_b.left": "2.0",
    "theta_b.right": "2.0",
    "theta_b.top": "2.0",
    "theta_b.bottom": "2.0",
    # initial data
    "v0.kind": "zero",
    "v0.coeffs": "",
    "v0.mode": "1",
    "v0.amplitude": "1.0",
    "v0.energy": "0.5",
    "v0.seed": "0",
    "theta0.kind": "equilibrium",
    "theta0.value": "2.0",
    "theta0.amplitude": "0.5",
    "theta0.file": "",
    # time stepping
    "run.dt": "0.01",
    "run.t_end": "1.0",
    "run.record_every": "1",
    "run.out_dir": "",
    "run.seed": "0",
    "picard.tol": "1e-11",
    "picard.max_iters": "60",
    "coupling.sweeps": "1",
    "equilibrium.tol": "1e-8",
    # diagnostics exponents and the g-metric level (0 = automatic)
    "diag.r": "1.5",
    "diag.s": "1.2",
    "diag.alpha": "0.4",
    "diag.M": "0",
    # study parameters
    "study.case": "mms_space",
    "study.nx0": "15",
    "study.space_dt": "5e-5",
    "study.space_t_end": "0.05",
    "study.time_nx": "63",
    "study.dt0": "0.02",
    "study.time_t_end": "0.1",
    "study.entropy_nx0": "31",
    "study.entropy_dt0": "2e-3",
    "study.entropy_t_end": "0.1",
}


def default_config() -> dict[str, str]:
    return dict(DEFAULTS)


def parse_config(path: str) -> dict[str, str]:
    cfg = default_config()
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{ln}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in cfg:
            raise ConfigError(f"{path}:{ln}: unknown key {key!r}")
        cfg[key] = value
    return cfg


def apply_overrides(cfg: dict[str, str], overrides) -> dict[str, str]:
    out = dict(cfg)
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, value = (part.strip() for part in item.split("=", 1))
        if key not in DEFAULTS:
            raise ConfigError(f"unknown config key {key!r}")
        out[key] = value
    return out


def get_float(cfg: dict[str, str], key: str) -> float:
    try:
        return float(cfg[key])
    except ValueError as exc:
        raise ConfigError(f"{key}={cfg[key]!r} is not a number") from exc


def get_int(cfg: dict[str, str], key: str) -> int:
    try:
        return int(cfg[key])
    except ValueError as exc:
        raise ConfigError(f"{key}={cfg[key]!r} is not an integer") from exc


def get_str(cfg: dict[str, str], key: str) -> str:
    return cfg[key]


_AFFINE = re.compile(
    r"^\s*([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)\s*"
    r"([+-])\s*((?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)\s*\*\s*s\s*$")


def parse_side(spec: str):
    """Constant float or affine 'a+b*s' in normalized arclength s."""
    try:
        return float(spec)
    except ValueError:
        pass
    m = _AFFINE.match(spec)
    if m is None:
        raise ConfigError(
            f"boundary side {spec!r} is neither a number nor 'a+b*s'")
    a = float(m.group(1))
    b = float(m.group(3)) * (1.0 if m.group(2) == "+" else -1.0)
    return lambda s: a + b * s


def config_text(cfg: dict[str, str]) -> str:
    """Canonical text form, used for hashing into the run manifest."""
    return "\n".join(f"{k}={cfg[k]}" for k in sorted(cfg)) + "\n"
