"""Line-oriented run configuration.

A run file is a sequence of `key = value` assignments; `#` starts a
comment, blank lines are skipped.  Repeated `species.q` lines open
successive species blocks (the first block is the negatively charged
reference species).  Polynomial-valued keys take whitespace-separated
coefficients from the constant term up (degree at most six).

Example::

    family = exponential
    c_light = 10
    domain.a = 1
    domain.b = 1
    domain.nx = 32
    domain.ny = 32
    lambda.half_width = 400
    lambda.grid = 1 60 64          # start stop count
    a_curve = 0 1                  # a(lambda) = lambda
    d1_curve = 1
    mu0.index = 1
    species.q = -1
    species.m = 1
    species.k = 1
    species.alpha_curve = 1

Anything malformed raises ConfigError with the offending line number;
semantic validation (charge conventions, positive tolerances, grid inside
the curve interval) happens after parsing and also reports through
ConfigError so the command line can map every configuration problem to the
usage exit code.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .ansatz import EXPONENTIAL, AnsatzFamily, SpeciesSpec
from .errors import ConfigError, DomainError
from .grid import DomainSpec
from .omega import DirectionCurve

__all__ = ["RunConfig", "parse_config", "load_config", "derived_summary"]

_SCALAR_KEYS = {
    "family", "c_light", "beta", "domain.a", "domain.b", "domain.nx",
    "domain.ny", "lambda.half_width", "mu0.index", "mu0.value",
    "tol.omega", "tol.root", "tol.newton", "continuation.xi_step",
    "continuation.max_points", "continuation.sides", "spectral.count",
}
_VECTOR_KEYS = {"lambda.grid", "a_curve", "u01_curve", "u02_curve",
                "d1_curve"}
_SPECIES_KEYS = {"q", "m", "k", "c1", "c2", "alpha_curve"}


@dataclass(frozen=True, eq=False)
class RunConfig:
    """Parsed and validated run configuration."""

    raw_text: str
    path: str
    family: AnsatzFamily
    dom: DomainSpec
    curve: DirectionCurve
    lam_grid: np.ndarray
    beta: float
    mu0_index: int | None
    mu0_value: float | None
    tol_omega: float
    tol_root: float
    tol_newton: float
    xi_step: float
    max_points: int
    sides: tuple[int, ...]
    spectral_count: int


def _parse_float(token: str, line: int) -> float:
    try:
        return float(token)
    except ValueError:
        raise ConfigError(f"expected a number, got {token!r}", line)


def _parse_int(token: str, line: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise ConfigError(f"expected an integer, got {token!r}", line)


def parse_config(text: str, path: str = "<string>") -> RunConfig:
    """Parse and validate a configuration from its text."""
    scalars: dict[str, tuple[str, int]] = {}
    vectors: dict[str, tuple[list[str], int]] = {}
    species_rows: list[dict[str, tuple[str | list[str], int]]] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", lineno)
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not value:
            raise ConfigError(f"empty value for {key!r}", lineno)

        if key.startswith("species."):
            sub = key[len("species."):]
            if sub not in _SPECIES_KEYS:
                raise ConfigError(f"unknown species key {key!r}", lineno)
            if sub == "q":
                species_rows.append({})
            if not species_rows:
                raise ConfigError(
                    "species block must start with species.q", lineno)
            if sub in species_rows[-1]:
                raise ConfigError(
                    f"duplicate {key!r} in one species block", lineno)
            if sub == "alpha_curve":
                species_rows[-1][sub] = (value.split(), lineno)
            else:
                species_rows[-1][sub] = (value, lineno)
        elif key in _VECTOR_KEYS:
            if key in vectors:
                raise ConfigError(f"duplicate key {key!r}", lineno)
            vectors[key] = (value.split(), lineno)
        elif key in _SCALAR_KEYS:
            if key in scalars:
                raise ConfigError(f"duplicate key {key!r}", lineno)
            scalars[key] = (value, lineno)
        else:
            raise ConfigError(f"unknown key {key!r}", lineno)

    def need(key: str) -> tuple[str, int]:
        if key in scalars:
            return scalars[key]
        raise ConfigError(f"missing required key {key!r}")

    def need_vec(key: str) -> tuple[list[str], int]:
        if key in vectors:
            return vectors[key]
        raise ConfigError(f"missing required key {key!r}")

    def opt(key: str, default: str) -> tuple[str, int]:
        return scalars.get(key, (default, 0))

    def opt_vec(key: str, default: list[str]) -> tuple[list[str], int]:
        return vectors.get(key, (default, 0))

    fam_name, fam_line = need("family")
    if fam_name != "exponential":
        raise ConfigError(
            f"family {fam_name!r} is not available from configuration "
            "files (custom profiles are constructed through the API)",
            fam_line)
    family = EXPONENTIAL

    c_light = _parse_float(*need("c_light"))
    beta = _parse_float(*opt("beta", "0"))

    dom_args = {}
    for name, conv in (("a", _parse_float), ("b", _parse_float),
                       ("nx", _parse_int), ("ny", _parse_int)):
        dom_args[name] = conv(*need(f"domain.{name}"))
    try:
        dom = DomainSpec(**dom_args)
    except DomainError as exc:
        raise ConfigError(f"domain: {exc}") from exc

    half_width = _parse_float(*need("lambda.half_width"))
    grid_tokens, grid_line = need_vec("lambda.grid")
    if len(grid_tokens) != 3:
        raise ConfigError("lambda.grid needs 'start stop count'", grid_line)
    g_start = _parse_float(grid_tokens[0], grid_line)
    g_stop = _parse_float(grid_tokens[1], grid_line)
    g_count = _parse_int(grid_tokens[2], grid_line)
    if g_count < 2 or g_stop <= g_start:
        raise ConfigError("lambda.grid must increase with count >= 2",
                          grid_line)
    lam_grid = np.linspace(g_start, g_stop, g_count)

    def coeffs(tokens: list[str], line: int) -> tuple[float, ...]:
        if len(tokens) > 7:
            raise ConfigError("curve polynomials are limited to degree 6",
                              line)
        return tuple(_parse_float(t, line) for t in tokens)

    a_curve = coeffs(*need_vec("a_curve"))
    u01_curve = coeffs(*opt_vec("u01_curve", ["0"]))
    u02_curve = coeffs(*opt_vec("u02_curve", ["0"]))
    d1_curve = coeffs(*need_vec("d1_curve"))

    if not species_rows:
        raise ConfigError("at least one species block required")
    specs = []
    alphas = []
    for idx, row in enumerate(species_rows):
        def sval(name: str, default: str | None = None) -> tuple[str, int]:
            if name in row:
                return row[name]  # type: ignore[return-value]
            if default is None:
                raise ConfigError(
                    f"species block {idx}: missing species.{name}")
            return default, 0

        q = _parse_float(*sval("q"))
        m = _parse_float(*sval("m"))
        k = _parse_float(*sval("k"))
        c1 = _parse_float(*sval("c1", "0"))
        c2 = _parse_float(*sval("c2", "0"))
        if "alpha_curve" in row:
            tokens, line = row["alpha_curve"]
            alphas.append(coeffs(list(tokens), line))
        else:
            alphas.append((1.0,))
        specs.append(SpeciesSpec(q=q, m=m, k=k, c1=c1, c2=c2))

    if specs[0].q >= 0:
        raise ConfigError(
            "the first species is the reference and must carry negative "
            "charge (electron-sign convention)")

    try:
        curve = DirectionCurve(half_width=half_width, amplitude=a_curve,
                               u01=u01_curve, u02=u02_curve, d1=d1_curve,
                               alphas=tuple(alphas), species=tuple(specs),
                               c_light=c_light)
    except DomainError as exc:
        raise ConfigError(f"curve: {exc}") from exc

    if not (-half_width < lam_grid[0] and lam_grid[-1] < half_width):
        raise ConfigError(
            "lambda.grid must lie strictly inside the curve interval",
            grid_line)

    mu0_index = mu0_value = None
    if "mu0.index" in scalars:
        mu0_index = _parse_int(*scalars["mu0.index"])
        if mu0_index < 1:
            raise ConfigError("mu0.index is 1-based",
                              scalars["mu0.index"][1])
    if "mu0.value" in scalars:
        mu0_value = _parse_float(*scalars["mu0.value"])
    if (mu0_index is None) == (mu0_value is None):
        raise ConfigError("exactly one of mu0.index / mu0.value required")

    tol_omega = _parse_float(*opt("tol.omega", "1e-10"))
    tol_root = _parse_float(*opt("tol.root", "1e-10"))
    tol_newton = _parse_float(*opt("tol.newton", "1e-10"))
    for name, val in (("tol.omega", tol_omega), ("tol.root", tol_root),
                      ("tol.newton", tol_newton)):
        if val <= 0:
            raise ConfigError(f"{name} must be positive")

    xi_step = _parse_float(*opt("continuation.xi_step", "0.02"))
    max_points = _parse_int(*opt("continuation.max_points", "8"))
    if xi_step <= 0 or max_points < 1:
        raise ConfigError("continuation parameters must be positive")
    sides_token, sides_line = opt("continuation.sides", "both")
    sides_map = {"both": (+1, -1), "plus": (+1,), "minus": (-1,)}
    if sides_token not in sides_map:
        raise ConfigError("continuation.sides must be both/plus/minus",
                          sides_line)
    sides = sides_map[sides_token]

    spectral_count = _parse_int(*opt("spectral.count", "12"))
    if spectral_count < 1:
        raise ConfigError("spectral.count must be positive")

    return RunConfig(raw_text=text, path=path, family=family, dom=dom,
                     curve=curve, lam_grid=lam_grid, beta=beta,
                     mu0_index=mu0_index, mu0_value=mu0_value,
                     tol_omega=tol_omega, tol_root=tol_root,
                     tol_newton=tol_newton, xi_step=xi_step,
                     max_points=max_points, sides=sides,
                     spectral_count=spectral_count)


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return parse_config(text, path=str(path))


def derived_summary(cfg: RunConfig) -> dict:
    """Derived constants at the first grid point, echoed into summaries."""
    lam = float(cfg.lam_grid[0])
    species = cfg.curve.species_at(lam, cfg.family)
    ref = species[0]
    mu = 8.0 * np.pi * ref.alpha * ref.q / ref.m
    eta = 4.0 * np.pi * abs(ref.q) / ref.m
    return {
        "lambda_ref": lam,
        "mu": mu,
        "eta": eta,
        "nu": eta / cfg.curve.c_light ** 2,
        "phi0": cfg.curve.phi0(lam),
        "psi0": cfg.curve.psi0(lam),
        "species": [
            {
                "index": s.index,
                "q": s.q,
                "m": s.m,
                "alpha": s.alpha,
                "l": s.l,
                "k": s.k,
                "d": list(s.d),
                "beta": list(s.beta) if s.beta is not None else None,
                "c1": s.c1,
                "c2": s.c2,
            }
            for s in species
        ],
    }
