"""Tail bounds for the maximum of a normalized stationary field.

2D: EC approximation, direct (Rice) bound, record bound. 3D: record bound on
convex bodies. Plus the punctured-square minimization, the choice of the
least-curved axis and the sharpness diagnostic.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .gauss import INV_SQRT_2PI, SQRT_2PI, barPhi, neg_part_mean, phi, ugrid, upper_partial_mean
from .geom2d import GeometrySummary2D, sierpinski_radii
from .geom3d import GeometrySummary3D
from .quadform import FieldModel, hessian_negdef_bound
from .quadrature import integrate

TRUNCATION_RATIO = 1e-18


def _arr(u):
    return np.asarray(u, dtype=float)


def _out(x):
    x = np.asarray(x)
    return float(x) if x.ndim == 0 else x


def record_bracket(u, model: FieldModel):
    """c*phi(u/c) + u*Phi(u/c): mean negative part of X''_11 given X = u, X'_1 = 0."""
    return neg_part_mean(-_arr(u), model.c)


def p_ec_2d(u, g: GeometrySummary2D):
    """Expected Euler characteristic approximation (not a bound)."""
    u = _arr(u)
    return _out(g.components * barPhi(u)
                + g.boundary_length / (2 * SQRT_2PI) * phi(u)
                + g.area / (2 * math.pi) * u * phi(u))


def p_record_2d(u, g: GeometrySummary2D, model: FieldModel):
    """Record-method upper bound; ``g.boundary_length`` is the perimeter or the
    outer Minkowski content depending on the region kind."""
    u = _arr(u)
    return _out(g.components * barPhi(u)
                + g.boundary_length / (2 * SQRT_2PI) * phi(u)
                + g.area / (2 * math.pi) * record_bracket(u, model) * phi(u))


def record_ec_gap(u, g: GeometrySummary2D, model: FieldModel):
    """P_R - P_E evaluated directly, without cancellation:
    area/(2 pi) * phi(u) * c * (phi(u/c) - (u/c) barPhi(u/c))."""
    u = _arr(u)
    c = model.c
    return _out(g.area / (2 * math.pi) * phi(u) * c * upper_partial_mean(u / c))


def direct_edge_integrand(x, model: FieldModel):
    return record_bracket(x, model) * phi(x)


def direct_area_integrand(x, model: FieldModel):
    """(x^2 - 1 + (8 rho2)^{3/2} exp(-x^2/(24 rho2 - 2)) / sqrt(24 rho2 - 2)) * phi(x)."""
    return hessian_negdef_bound(x, model) * phi(x)


def direct_area_integrand_c_form(x, model: FieldModel):
    """Same integrand written through c: ((2(c^2+1)/3)^{3/2} sqrt(pi) phi(x/c)/c)."""
    x = _arr(x)
    c = model.c
    k = (2 * (c * c + 1) / 3) ** 1.5 * math.sqrt(math.pi) / c
    return _out((x * x - 1 + k * phi(x / c)) * phi(x))


def _truncation_point(f, u):
    # first x >= u on a 0.25 grid where f drops below 1e-18 of the running max
    xs = u + 0.25 * np.arange(1, 401)
    vals = np.abs(f(np.concatenate([[u], xs])))
    running = np.maximum.accumulate(vals)[1:]
    below = np.flatnonzero(vals[1:] <= TRUNCATION_RATIO * running)
    if below.size == 0:
        return xs[-1]
    return xs[below[0]]


def tail_integral(f, u, tol):
    """int_u^inf f(x) dx for a Gaussian-decaying f, relative accuracy ``tol``."""
    hi = _truncation_point(f, u)
    val, _ = integrate(lambda x: f(x), u, hi, abs_tol=1e-300, rel_tol=tol,
                       points=np.linspace(u, hi, max(2, int(hi - u) + 2)))
    return val


def p_direct_2d(u, g: GeometrySummary2D, model: FieldModel, tol=1e-10):
    """Direct (Rice) upper bound, both level integrals by adaptive quadrature."""
    if not (1e-12 < tol < 1e-4):
        raise ValueError("tol must lie in (1e-12, 1e-4)")
    u = _arr(u)
    flat = np.atleast_1d(u)
    out = np.empty_like(flat)
    for k, uk in enumerate(flat):
        edge = tail_integral(lambda x: direct_edge_integrand(x, model), uk, tol)
        area = tail_integral(lambda x: direct_area_integrand(x, model), uk, tol)
        out[k] = (g.components * barPhi(uk) + g.boundary_length / (2 * SQRT_2PI) * edge
                  + g.area / (2 * math.pi) * area)
    return _out(out.reshape(u.shape))


def p_record_3d(u, g: GeometrySummary3D, model: FieldModel):
    """Record-method upper bound over a convex body in R^3 (field isotropic in
    the first two coordinates)."""
    u = _arr(u)
    ph = phi(u)
    return _out(barPhi(u)
                + 2 * g.caliper * INV_SQRT_2PI * ph
                + g.surface_area * ph / (4 * math.pi) * record_bracket(u, model)
                + g.volume * ph / (2 * math.pi) ** 1.5 * hessian_negdef_bound(u, model))


@dataclass(frozen=True)
class SwissCheeseResult:
    u: float
    bound: float
    n_disks: int
    minimand: np.ndarray = field(repr=False)


def swiss_cheese_bound(u, model: FieldModel, radii=None, levels=5):
    """barPhi(u) + min over n of the record bound of the unit square with the
    first n disks removed (largest first); ties go to the smallest n."""
    r = np.asarray(sierpinski_radii(levels) if radii is None else radii, dtype=float)
    s1 = np.concatenate([[0.0], np.cumsum(r)])
    s2 = np.concatenate([[0.0], np.cumsum(r * r)])
    ph = phi(u)
    minimand = (ph / (2 * SQRT_2PI) * (4 + 2 * math.pi * s1)
                + (1 - math.pi * s2) * record_bracket(u, model) * ph / (2 * math.pi))
    n = int(np.argmin(minimand))
    return SwissCheeseResult(float(u), float(barPhi(u) + minimand[n]), n, minimand)


@dataclass(frozen=True)
class DirectionChoice:
    angle: float
    variance: float
    c: float


def quartic_variance(alpha, moments):
    """Var(X''_aa) along angle alpha from the fourth spectral moments
    (m40, m31, m22, m13, m04)."""
    a = _arr(alpha)
    ca, sa = np.cos(a), np.sin(a)
    binom = (1, 4, 6, 4, 1)
    return _out(sum(b * m * ca ** (4 - k) * sa ** k for k, (b, m) in enumerate(zip(binom, moments))))


def optimize_direction(moments, scan=1024) -> DirectionChoice:
    """Axis of least Var(X''_aa) on [0, pi), dense scan plus a parabolic step."""
    moments = tuple(float(m) for m in moments)
    if len(moments) != 5:
        raise ValueError("need five fourth-order moments (m40, m31, m22, m13, m04)")
    grid = np.pi * np.arange(scan) / scan
    vals = quartic_variance(grid, moments)
    if np.any(vals <= 0):
        raise ValueError("quartic form must be positive on [0, pi)")
    # values equal to the minimum up to rounding count as ties; the first wins
    k = int(np.flatnonzero(vals <= vals.min() * (1 + 1e-12))[0])
    h = np.pi / scan
    y0, y1, y2 = vals[k - 1], vals[k], vals[(k + 1) % scan]
    denom = y0 - 2 * y1 + y2
    alpha = grid[k]
    if denom > 0 and (y0 > y1 or y2 > y1):
        alpha = grid[k] + 0.5 * h * (y0 - y2) / denom
    alpha %= np.pi
    v = float(quartic_variance(alpha, moments))
    if v > y1:
        alpha, v = float(grid[k]), float(y1)
    if v <= 1 + 1e-12:
        raise ValueError(f"minimal Var(X''_aa) = {v:.6g} <= 1: no admissible c in the best direction")
    return DirectionChoice(float(alpha), v, math.sqrt(v - 1))


def sharpness_exponent(u, delta):
    """-2 ln(delta) / u^2; its liminf for delta = P_R - P_E is at least 1 + 1/c^2."""
    if not u > 0:
        raise ValueError("u must be > 0")
    if not delta > 0:
        raise ArithmeticError(f"bounds crossed: delta = {delta!r} <= 0")
    if not delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    return -2.0 * math.log(delta) / (u * u)


@dataclass
class BoundTable:
    u: np.ndarray
    pe: np.ndarray
    pr: np.ndarray
    pm: np.ndarray
    metadata: dict = field(default_factory=dict)

    def rows(self):
        return zip(self.u, self.pe, self.pr, self.pm)

    def clamped(self):
        """Copy with every curve capped at 1, for plotting."""
        return BoundTable(self.u, np.minimum(self.pe, 1), np.minimum(self.pr, 1),
                          np.minimum(self.pm, 1), dict(self.metadata))


def bound_table(u, g: GeometrySummary2D, model: FieldModel, tol=1e-10) -> BoundTable:
    u = ugrid(u)
    return BoundTable(
        u,
        np.atleast_1d(p_ec_2d(u, g)),
        np.atleast_1d(p_record_2d(u, g, model)),
        np.atleast_1d(p_direct_2d(u, g, model, tol)),
        {"area": g.area, "boundary_length": g.boundary_length,
         "components": g.components, "rho2": model.rho2, "c": model.c},
    )


# the six parameterizations compared for the square [0, T]^2
FIGURE_PANELS = (
    ("a", 1.0, 0.25),
    ("b", 1.0, 0.5),
    ("c", 2.0, 0.5),
    ("d", 2.0, 1.0),
    ("e", 4.0, 2.0),
    ("f", 0.25, 0.5),
)
