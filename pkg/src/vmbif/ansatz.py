"""Velocity-space distribution families and their moments.

Each plasma species carries a distribution built from two scalar invariants
of the particle motion,

    R = -alpha*|v|^2 + c1 + x,        G = (v, d) + c2 + y,

where x and y are the species-scaled electric and magnetic potential values
at a spatial point.  A *family* is the profile fhat(R, G) >= 0 shared by all
species; the default exponential family fhat = exp(R + G) has closed-form
moments that double as oracles for the quadrature path, while custom
profiles are integrated numerically in cylindrical velocity coordinates
about the drift axis d.

The moments of interest are the charge-density weight

    A(x, y)  = integral fhat(R, G) dv,

the current weight j(x, y) = integral v fhat dv (directed along d by
axisymmetry), and their partial derivatives in x and y, which feed the
linearized operator.

Species parameter sets are tied together by a compatibility condition on
the coupling weights: with species 0 as the reference (l_0 = k_0 = 1,
charge q_0 < 0 by the electron-sign convention), every species must satisfy

    d_i = k_i * (q_0 * m_i) / (m_0 * q_i) * d_0,
    l_i = (m_0 * alpha_i * q_i) / (alpha_0 * m_i * q_0),

which makes q_i / l_i carry the sign of q_0 and fixes the drift projections
(d_i, d_0) / alpha_i = (|d_0|^2 / alpha_0) * (k_i / l_i).  The constructor
below generates compliant sets; :func:`validate_condition_A` audits
externally supplied ones, reporting the residual of each identity
(including the unsigned variant l_i = m_0*alpha_i/(alpha_0*m_i) of the
weight relation, which some parameter tables use; the signed form is what
keeps the sign identity alive, so the constructor emits that one).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import ConstraintError, DivergenceError, DomainError

__all__ = [
    "AnsatzFamily",
    "EXPONENTIAL",
    "custom_family",
    "SpeciesSpec",
    "SpeciesParams",
    "build_species",
    "MomentValue",
    "moment_density",
    "moment_current",
    "moment_axial",
    "moment_derivatives",
    "moment_axial_derivatives",
    "moments",
    "beta_of",
    "validate_condition_A",
    "ConditionAReport",
    "CheckRow",
    "verify_flatness",
]

# Envelope safety margin: the integration box is cut where the declared
# Gaussian envelope has dropped by exp(-ENVELOPE_DROP) relative to its peak,
# which keeps the truncation below 1e-15 of the integral at desk scale.
ENVELOPE_DROP = 45.0
QUAD_RTOL = 1e-9
QUAD_START_NODES = 24
QUAD_MAX_NODES = 768

_AXIS_FALLBACK = np.array([0.0, 0.0, 1.0])


# ---------------------------------------------------------------------------
# families


@dataclass(frozen=True)
class AnsatzFamily:
    """A distribution profile fhat(R, G) with its integration metadata.

    ``kind`` is "exponential" for the built-in closed-form family or
    "custom" for a numerically integrated profile.  Custom families must
    provide ``fhat`` (vectorized over ndarray arguments) and ``envelope``,
    a callable mapping a species to coefficients (lin, quad) of a Gaussian
    bound  fhat-integrand <= C * exp(lin*|v| - quad*|v|^2)  with quad > 0.
    ``dfhat_dR``/``dfhat_dG`` are optional analytic partials; when absent,
    moment derivatives fall back to central differences in (x, y).

    ``order`` declares the lowest total degree of the surviving nonlinear
    terms of the moments about an evaluation point (2 for generic smooth
    profiles); ``potential`` declares that the branching remainder is of
    gradient type, which upgrades even-multiplicity kernels from candidate
    to certified points.
    """

    kind: str
    fhat: Callable | None = None
    dfhat_dR: Callable | None = None
    dfhat_dG: Callable | None = None
    envelope: Callable | None = None
    order: int = 2
    potential: bool = False
    label: str = ""

    def __post_init__(self):
        if self.kind not in ("exponential", "custom"):
            raise DomainError(f"unknown family kind {self.kind!r}")
        if self.kind == "custom":
            if self.fhat is None or self.envelope is None:
                raise DomainError(
                    "custom families need both fhat and an envelope")
        if self.order < 2:
            raise DomainError("family order must be >= 2")


EXPONENTIAL = AnsatzFamily(kind="exponential", label="exponential")


def custom_family(fhat, envelope, dfhat_dR=None, dfhat_dG=None,
                  order: int = 2, potential: bool = False,
                  label: str = "custom") -> AnsatzFamily:
    """Wrap a vectorized profile fhat(R, G) as a family."""
    return AnsatzFamily(kind="custom", fhat=fhat, dfhat_dR=dfhat_dR,
                        dfhat_dG=dfhat_dG, envelope=envelope, order=order,
                        potential=potential, label=label)


# ---------------------------------------------------------------------------
# species parameter sets


@dataclass(frozen=True)
class SpeciesSpec:
    """Per-species constants supplied by the user (drifts and coupling
    weights are derived from the reference species by the constructor)."""

    q: float
    m: float
    k: float
    c1: float = 0.0
    c2: float = 0.0


@dataclass(frozen=True, eq=False)
class SpeciesParams:
    """Fully derived parameter set of one species at one evaluation point
    of the parameter curve."""

    index: int
    q: float
    m: float
    alpha: float
    d: np.ndarray
    l: float
    k: float
    c1: float
    c2: float
    beta: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "d", np.asarray(self.d, dtype=float))
        if self.beta is not None:
            object.__setattr__(self, "beta",
                               np.asarray(self.beta, dtype=float))
        if self.m <= 0:
            raise DomainError(f"species {self.index}: mass must be positive")
        if self.alpha <= 0:
            raise DomainError(
                f"species {self.index}: alpha must be positive")
        if self.d.shape != (3,):
            raise DomainError(
                f"species {self.index}: drift must be a 3-vector")
        if self.q == 0:
            raise DomainError(f"species {self.index}: charge must be nonzero")

    @property
    def drift_axis(self) -> np.ndarray:
        n = np.linalg.norm(self.d)
        return self.d / n if n > 0 else _AXIS_FALLBACK


def build_species(specs: Sequence[SpeciesSpec], alphas: Sequence[float],
                  d1, fam: AnsatzFamily | None = None
                  ) -> tuple[SpeciesParams, ...]:
    """Derive a compatible species list from per-species constants.

    ``specs[0]`` is the reference species (negative charge, k = 1);
    ``alphas`` are the temperature-like parameters at the evaluation point
    and ``d1`` the reference drift vector.  For the exponential family the
    current-proportionality vectors beta_i = d_i / (2*alpha_i) are filled
    in; custom families get beta = None until fitted by :func:`beta_of`.
    """
    specs = list(specs)
    alphas = [float(a) for a in alphas]
    if len(specs) != len(alphas):
        raise DomainError("one alpha per species required")
    if not specs:
        raise DomainError("at least one species required")
    ref = specs[0]
    if ref.q >= 0:
        raise DomainError("reference species must carry negative charge")
    if ref.k != 1.0:
        raise DomainError("reference species must have unit coupling k")
    d1 = np.asarray(d1, dtype=float)
    if d1.shape != (3,) or not np.linalg.norm(d1) > 0:
        raise DomainError("reference drift must be a nonzero 3-vector")

    out = []
    exponential = fam is not None and fam.kind == "exponential"
    for i, spec in enumerate(specs):
        if spec.k == 0:
            raise DomainError(f"species {i}: coupling k must be nonzero")
        l_i = (ref.m * alphas[i] * spec.q) / (alphas[0] * spec.m * ref.q)
        d_i = spec.k * (ref.q * spec.m) / (ref.m * spec.q) * d1
        beta = d_i / (2.0 * alphas[i]) if exponential else None
        out.append(SpeciesParams(index=i, q=spec.q, m=spec.m,
                                 alpha=alphas[i], d=d_i, l=l_i, k=spec.k,
                                 c1=spec.c1, c2=spec.c2, beta=beta))
    return tuple(out)


# ---------------------------------------------------------------------------
# quadrature backend

def _envelope_cut(s: SpeciesParams, fam: AnsatzFamily) -> float:
    """Speed beyond which the declared envelope has dropped by
    exp(-ENVELOPE_DROP): quad*V^2 - lin*V = ENVELOPE_DROP."""
    if fam.kind == "exponential":
        lin, quad = float(np.linalg.norm(s.d)), s.alpha
    else:
        lin, quad = fam.envelope(s)
        lin, quad = float(lin), float(quad)
    if quad <= 0:
        raise DomainError("envelope must decay quadratically (quad > 0)")
    return (lin + np.sqrt(lin * lin + 4.0 * quad * ENVELOPE_DROP)) \
        / (2.0 * quad)


def _quad_rule(n: int, vmax: float):
    """Tensor Gauss-Legendre rule for (w, s): axial speed w on
    [-vmax, vmax], transverse radius s on [0, vmax]."""
    x, wt = leggauss(n)
    w_nodes = vmax * x
    w_wt = vmax * wt
    s_nodes = 0.5 * vmax * (x + 1.0)
    s_wt = 0.5 * vmax * wt
    W = np.repeat(w_nodes, n)
    S = np.tile(s_nodes, n)
    WT = np.repeat(w_wt, n) * np.tile(s_wt, n)
    return W, S, WT


def _quad_pass(s, fam, x, y, n, deriv: str | None):
    """One fixed-order pass: returns (A-like, axial-current-like) moments
    with fhat optionally replaced by one of its partials."""
    vmax = _envelope_cut(s, fam)
    W, S, WT = _quad_rule(n, vmax)
    dmag = float(np.linalg.norm(s.d))
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    R = -s.alpha * (W * W + S * S) + (s.c1 + x)[..., None]
    G = dmag * W + (s.c2 + y)[..., None]
    if deriv is None:
        f = fam.fhat(R, G)
    elif deriv == "R":
        f = fam.dfhat_dR(R, G)
    else:
        f = fam.dfhat_dG(R, G)
    base = (2.0 * np.pi) * WT * S * f
    dens = base.sum(axis=-1)
    axial = (base * W).sum(axis=-1)
    return dens, axial


def _quad_moments(s, fam, x, y, deriv: str | None = None):
    """Adaptive node-doubling quadrature of the density and axial-current
    moments.  Doubles the tensor order until two successive levels agree to
    QUAD_RTOL elementwise; raises DivergenceError when the budget runs out.
    """
    n = QUAD_START_NODES
    prev = _quad_pass(s, fam, x, y, n, deriv)
    history = []
    while n < QUAD_MAX_NODES:
        n *= 2
        cur = _quad_pass(s, fam, x, y, n, deriv)
        err = 0.0
        for p, c in zip(prev, cur):
            scale = 1.0 + np.abs(c)
            err = max(err, float(np.max(np.abs(c - p) / scale)))
        history.append(err)
        if err <= QUAD_RTOL:
            return cur
        prev = cur
    raise DivergenceError(
        f"moment quadrature did not settle below {QUAD_RTOL:g} "
        f"within {QUAD_MAX_NODES} nodes per axis", history)


def _as_input_shape(val, x, y):
    if np.isscalar(x) and np.isscalar(y):
        return float(val)
    return val


# ---------------------------------------------------------------------------
# moments


@dataclass(frozen=True)
class MomentValue:
    """Bundle of the moment values at one evaluation point."""

    density: float | np.ndarray
    current: np.ndarray
    d_density_dx: float | np.ndarray
    d_density_dy: float | np.ndarray


def _closed_density(s: SpeciesParams, x, y):
    dmag2 = float(np.dot(s.d, s.d))
    pref = (np.pi / s.alpha) ** 1.5 * np.exp(dmag2 / (4.0 * s.alpha))
    return pref * np.exp(s.c1 + s.c2 + np.asarray(x, float)
                         + np.asarray(y, float))


def moment_density(s: SpeciesParams, fam: AnsatzFamily, x, y):
    """Charge-density weight A(x, y) of one species."""
    if fam.kind == "exponential":
        return _as_input_shape(_closed_density(s, x, y), x, y)
    dens, _ = _quad_moments(s, fam, x, y)
    return _as_input_shape(dens, x, y)


def moment_current(s: SpeciesParams, fam: AnsatzFamily, x, y) -> np.ndarray:
    """Current weight j(x, y); a (..., 3) array along the drift axis."""
    if fam.kind == "exponential":
        A = _closed_density(s, x, y)
        vec = s.d / (2.0 * s.alpha)
        return np.asarray(A)[..., None] * vec
    _, axial = _quad_moments(s, fam, x, y)
    return np.asarray(axial)[..., None] * s.drift_axis


def moment_axial(s: SpeciesParams, fam: AnsatzFamily, x, y, axis):
    """Projection (j(x, y), axis) of the current weight on a fixed axis."""
    axis = np.asarray(axis, dtype=float)
    j = moment_current(s, fam, x, y)
    return _as_input_shape(j @ axis, x, y)


_FD_STEP = 1e-5


def _fd_pair(func, x, y):
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    dx = (func(x + _FD_STEP, y) - func(x - _FD_STEP, y)) / (2 * _FD_STEP)
    dy = (func(x, y + _FD_STEP) - func(x, y - _FD_STEP)) / (2 * _FD_STEP)
    return dx, dy


def moment_derivatives(s: SpeciesParams, fam: AnsatzFamily, x, y):
    """Partials (dA/dx, dA/dy) of the density weight.

    For the exponential family both equal A itself.  Custom families with
    analytic profile partials integrate those (cross-checked once against a
    central difference); otherwise central differences with step 1e-5 are
    used directly.
    """
    if fam.kind == "exponential":
        A = _as_input_shape(_closed_density(s, x, y), x, y)
        return A, A
    if fam.dfhat_dR is not None and fam.dfhat_dG is not None:
        dAx, _ = _quad_moments(s, fam, x, y, deriv="R")
        dAy, _ = _quad_moments(s, fam, x, y, deriv="G")
        _crosscheck_derivative(s, fam, x, y, dAx, dAy)
        return _as_input_shape(dAx, x, y), _as_input_shape(dAy, x, y)
    dx, dy = _fd_pair(lambda a, b: np.asarray(
        moment_density(s, fam, a, b)), x, y)
    return _as_input_shape(dx, x, y), _as_input_shape(dy, x, y)


def _crosscheck_derivative(s, fam, x, y, dAx, dAy):
    """Analytic-partial route must agree with a finite difference at the
    first evaluation point; guards inconsistent user-supplied partials."""
    x0 = float(np.ravel(np.asarray(x, float))[0])
    y0 = float(np.ravel(np.asarray(y, float))[0])
    fd_x = (moment_density(s, fam, x0 + _FD_STEP, y0)
            - moment_density(s, fam, x0 - _FD_STEP, y0)) / (2 * _FD_STEP)
    fd_y = (moment_density(s, fam, x0, y0 + _FD_STEP)
            - moment_density(s, fam, x0, y0 - _FD_STEP)) / (2 * _FD_STEP)
    qx = float(np.ravel(np.asarray(dAx))[0])
    qy = float(np.ravel(np.asarray(dAy))[0])
    for got, want, name in ((qx, fd_x, "dA/dx"), (qy, fd_y, "dA/dy")):
        rel = abs(got - want) / (1.0 + abs(want))
        if rel > 1e-6:
            raise ConstraintError(
                f"declared profile partial disagrees with finite "
                f"difference for {name}", rel)


def moment_axial_derivatives(s: SpeciesParams, fam: AnsatzFamily, x, y,
                             axis):
    """Partials (dM/dx, dM/dy) of the axial current moment M = (j, axis)."""
    axis = np.asarray(axis, dtype=float)
    if fam.kind == "exponential":
        A = _closed_density(s, x, y)
        coeff = float(np.dot(s.d, axis)) / (2.0 * s.alpha)
        val = coeff * np.asarray(A)
        return _as_input_shape(val, x, y), _as_input_shape(val.copy(), x, y)
    proj = float(np.dot(s.drift_axis, axis))
    if fam.dfhat_dR is not None and fam.dfhat_dG is not None:
        _, dMx = _quad_moments(s, fam, x, y, deriv="R")
        _, dMy = _quad_moments(s, fam, x, y, deriv="G")
        return (_as_input_shape(proj * dMx, x, y),
                _as_input_shape(proj * dMy, x, y))
    dx, dy = _fd_pair(lambda a, b: np.asarray(
        moment_axial(s, fam, a, b, axis)), x, y)
    return _as_input_shape(dx, x, y), _as_input_shape(dy, x, y)


def moments(s: SpeciesParams, fam: AnsatzFamily, x, y) -> MomentValue:
    """All moment values at one evaluation point in a single bundle."""
    A = moment_density(s, fam, x, y)
    j = moment_current(s, fam, x, y)
    dAx, dAy = moment_derivatives(s, fam, x, y)
    return MomentValue(density=A, current=j, d_density_dx=dAx,
                       d_density_dy=dAy)


# ---------------------------------------------------------------------------
# current proportionality


def beta_of(s: SpeciesParams, fam: AnsatzFamily, samples,
            tol: float = 1e-8) -> np.ndarray:
    """Fit the vector beta with j(x, y) = beta * A(x, y) at every sample.

    ``samples`` is a sequence of (x, y) pairs (at least two).  If no single
    beta reproduces the current at all samples within ``tol`` (relative),
    the family breaks the proportionality requirement and a
    ConstraintError carrying the worst residual is raised.
    """
    samples = list(samples)
    if len(samples) < 2:
        raise DomainError("at least two samples needed to fit beta")
    xs = np.array([p[0] for p in samples], dtype=float)
    ys = np.array([p[1] for p in samples], dtype=float)
    A = np.asarray(moment_density(s, fam, xs, ys), dtype=float)
    j = moment_current(s, fam, xs, ys)
    if np.any(A <= 0):
        raise DomainError("density weight must be positive at the samples")
    beta = j[0] / A[0]
    worst = 0.0
    for i in range(len(samples)):
        resid = np.linalg.norm(j[i] - beta * A[i]) \
            / (1.0 + np.linalg.norm(j[i]))
        worst = max(worst, float(resid))
    if worst > tol:
        raise ConstraintError(
            "current weight is not proportional to the density weight "
            "across the samples", worst)
    return beta


# ---------------------------------------------------------------------------
# parameter-set audit


@dataclass(frozen=True)
class CheckRow:
    name: str
    passed: bool
    residual: float
    detail: str = ""


@dataclass(frozen=True)
class ConditionAReport:
    rows: tuple[CheckRow, ...] = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def worst(self) -> CheckRow:
        return max(self.rows, key=lambda r: r.residual)

    def __str__(self) -> str:
        lines = []
        for r in self.rows:
            status = "ok  " if r.passed else "FAIL"
            extra = f"  [{r.detail}]" if r.detail else ""
            lines.append(f"{status} {r.name}: residual {r.residual:.3e}"
                         f"{extra}")
        return "\n".join(lines)


def validate_condition_A(species: Sequence[SpeciesParams],
                         tol: float = 1e-12) -> ConditionAReport:
    """Audit a species list against the compatibility relations.

    Checks, per non-reference species i: collinearity of the drift with the
    reference relation d_i = k_i (q_0 m_i)/(m_0 q_i) d_0 (residual reported
    relative, detail carries the sine of the misalignment angle), the sign
    identity sign(q_i / l_i) = sign(q_0), the drift projection identity,
    and the weight relation l_i (both the signed and the unsigned reading
    are logged; matching either passes this row, the sign identity is
    audited separately).  The reference species must have l = k = 1 and
    negative charge.
    """
    species = list(species)
    if not species:
        raise DomainError("empty species list")
    ref = species[0]
    rows = []

    resid = abs(ref.l - 1.0) + abs(ref.k - 1.0)
    rows.append(CheckRow("reference_normalized", resid <= tol, resid))
    rows.append(CheckRow("reference_charge_negative", ref.q < 0,
                         0.0 if ref.q < 0 else abs(ref.q)))

    d0 = ref.d
    d0n = np.linalg.norm(d0)
    for i, sp in enumerate(species[1:], start=1):
        target = sp.k * (ref.q / ref.m) * d0
        actual = (sp.q / sp.m) * sp.d
        scale = max(np.linalg.norm(target), np.linalg.norm(actual), 1e-300)
        vec_res = float(np.linalg.norm(target - actual) / scale)
        cross = np.linalg.norm(np.cross(sp.d, d0))
        sine = float(cross / max(np.linalg.norm(sp.d) * d0n, 1e-300))
        rows.append(CheckRow(f"collinearity[{i}]", vec_res <= tol, vec_res,
                             f"sin(angle)={sine:.3e}"))

        if sp.l == 0:
            rows.append(CheckRow(f"charge_sign[{i}]", False, np.inf,
                                 "l vanishes"))
        else:
            ok = np.sign(sp.q / sp.l) == np.sign(ref.q)
            rows.append(CheckRow(f"charge_sign[{i}]", bool(ok),
                                 0.0 if ok else 2.0,
                                 f"sign(q/l)={np.sign(sp.q / sp.l):+.0f}"))

        lhs = float(np.dot(sp.d, d0)) / sp.alpha
        if sp.l == 0:
            rows.append(CheckRow(f"drift_projection[{i}]", False, np.inf,
                                 "l vanishes"))
        else:
            rhs = (d0n ** 2 / ref.alpha) * (sp.k / sp.l)
            res = abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1.0)
            rows.append(CheckRow(f"drift_projection[{i}]", res <= tol, res))

        l_signed = (ref.m * sp.alpha * sp.q) / (ref.alpha * sp.m * ref.q)
        l_unsigned = (ref.m * sp.alpha) / (ref.alpha * sp.m)
        r_signed = abs(sp.l - l_signed) / max(abs(l_signed), 1.0)
        r_unsigned = abs(sp.l - l_unsigned) / max(abs(l_unsigned), 1.0)
        res = min(r_signed, r_unsigned)
        rows.append(CheckRow(
            f"weight_relation[{i}]", res <= tol, res,
            f"signed={r_signed:.3e} unsigned={r_unsigned:.3e}"))

    return ConditionAReport(rows=tuple(rows))


# ---------------------------------------------------------------------------
# flatness audit for families declaring order > 2


def _mixed_partial(func, x0, y0, ix, iy, step):
    """Central-difference mixed partial of total order ix + iy."""
    from math import comb
    total = 0.0
    for p in range(ix + 1):
        for q in range(iy + 1):
            w = (-1.0) ** (p + q) * comb(ix, p) * comb(iy, q)
            total += w * func(x0 + (ix / 2.0 - p) * step,
                              y0 + (iy / 2.0 - q) * step)
    return total / step ** (ix + iy)


def verify_flatness(s: SpeciesParams, fam: AnsatzFamily, x0: float,
                    y0: float, direction=(0.0, 1.0), duals=(0.0, 1.0),
                    tol: float = 1e-6) -> float:
    """Check a declared nonlinear order l > 2 against the moments.

    The branching order is set by the first surviving term of the
    remainder after projection onto the dual kernel direction, so what
    must vanish at total orders 2 .. l-1 are the directional derivatives
    (along the branch direction in the (x, y) arguments) of whichever
    moment components the dual weights select: the density weight for the
    first component, the axial current moment for the second.  Components
    with (near) zero dual weight are exempt; an even profile, say, keeps a
    full quadratic term in its density while branching at third order
    along the current component.

    Returns the worst surviving relative derivative; raises
    ConstraintError when it exceeds ``tol``.
    """
    if fam.order <= 2:
        return 0.0
    dx, dy = float(direction[0]), float(direction[1])
    mag = np.hypot(dx, dy)
    if mag == 0.0:
        raise DomainError("flatness direction must be nonzero")
    dx, dy = dx / mag, dy / mag
    w1, w2 = abs(float(duals[0])), abs(float(duals[1]))
    wmax = max(w1, w2)
    if wmax == 0.0:
        return 0.0

    axis = s.drift_axis
    scale = abs(float(moment_density(s, fam, x0, y0))) + 1e-300
    probes = []
    if w1 > 1e-12 * wmax:
        probes.append(lambda t: float(
            moment_density(s, fam, x0 + t * dx, y0 + t * dy)))
    if w2 > 1e-12 * wmax:
        probes.append(lambda t: float(
            moment_axial(s, fam, x0 + t * dx, y0 + t * dy, axis)))

    from math import comb
    step = 1e-3
    worst = 0.0
    for func in probes:
        for order in range(2, fam.order):
            val = sum((-1.0) ** p * comb(order, p)
                      * func((order / 2.0 - p) * step)
                      for p in range(order + 1)) / step ** order
            worst = max(worst, abs(val) / scale)
    if worst > tol:
        raise ConstraintError(
            f"family declares order {fam.order} but a lower-order moment "
            f"derivative survives", worst)
    return worst
