"""E|<Y,AY> + <b,Y> + c0| for Gaussian Y, and the conditioned Hessian
determinant of a normalized isotropic planar field.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .quadrature import QuadratureError, breakpoints, integrate

@dataclass(frozen=True)
class FieldModel:
    """Normalized stationary field: Var X = 1, Var X' = I.

    Only rho2 = rho''(0) of the radial covariance rho(|t|^2) enters the bounds;
    Var(X''_11) = 12*rho2 and c = sqrt(Var(X''_11) - 1).
    """

    rho2: float

    def __post_init__(self):
        if not math.isfinite(self.rho2) or 12.0 * self.rho2 <= 1.0:
            raise ValueError(
                "normalization violated: Var(X''_11) <= 1 "
                f"(need 12*rho2 > 1, got rho2={self.rho2!r})"
            )

    @classmethod
    def from_c(cls, c):
        if not math.isfinite(c) or c <= 0:
            raise ValueError(f"c must be > 0, got {c!r}")
        return cls((c * c + 1.0) / 12.0)

    @property
    def c(self):
        return math.sqrt(12.0 * self.rho2 - 1.0)


@dataclass(frozen=True)
class QuadFormProblem:
    sigma: np.ndarray
    A: np.ndarray
    b: np.ndarray
    c0: float

    def __post_init__(self):
        sigma = np.atleast_2d(np.asarray(self.sigma, dtype=float))
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        n = sigma.shape[0]
        if sigma.shape != (n, n) or A.shape != (n, n) or b.shape != (n,):
            raise ValueError(
                f"inconsistent dimensions: sigma {sigma.shape}, A {A.shape}, b {b.shape}"
            )
        if not (np.all(np.isfinite(sigma)) and np.all(np.isfinite(A))
                and np.all(np.isfinite(b)) and math.isfinite(self.c0)):
            raise ValueError("problem entries must be finite")
        if not np.allclose(A, A.T, rtol=0, atol=1e-12 * max(1.0, np.abs(A).max())):
            raise ValueError("A must be symmetric")
        if not np.allclose(sigma, sigma.T, rtol=0, atol=1e-12 * np.abs(sigma).max()):
            raise ValueError("sigma must be symmetric")
        try:
            np.linalg.cholesky(sigma)
        except np.linalg.LinAlgError:
            raise ValueError("sigma is not positive definite") from None
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "A", 0.5 * (A + A.T))
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c0", float(self.c0))

    @property
    def dim(self):
        return self.sigma.shape[0]

    def canonical(self):
        """Reduce to Q = sum_j mu_j Z_j^2 + w_j Z_j + c0 with Z standard normal."""
        L = np.linalg.cholesky(self.sigma)
        M = L.T @ self.A @ L
        mu, P = np.linalg.eigh(0.5 * (M + M.T))
        w = P.T @ (L.T @ self.b)
        return mu, w

    def mean(self):
        return float(np.trace(self.A @ self.sigma) + self.c0)

    def to_json(self):
        return {"sigma": self.sigma.tolist(), "A": self.A.tolist(),
                "b": self.b.tolist(), "c0": self.c0}

    @classmethod
    def from_json(cls, obj):
        return cls(np.array(obj["sigma"]), np.array(obj["A"]), np.array(obj["b"]),
                   float(obj["c0"]))


def _cumulants(mu, w, c0, order):
    kappa = np.zeros(order + 1)
    kappa[1] = c0 + mu.sum()
    for r in range(2, order + 1):
        kappa[r] = (2.0 ** (r - 1) * math.factorial(r - 1) * np.sum(mu ** r)
                    + 2.0 ** (r - 3) * math.factorial(r) * np.sum(w * w * mu ** (r - 2)))
    return kappa


def _moments(kappa):
    order = len(kappa) - 1
    m = np.zeros(order + 1)
    m[0] = 1.0
    for n in range(1, order + 1):
        m[n] = sum(math.comb(n - 1, k) * kappa[k + 1] * m[n - 1 - k] for k in range(n))
    return m


def _log_cf(t, mu, w, c0):
    # log E exp(itQ); log(1 - 2it mu) on the principal branch per factor
    # (each factor has real part 1, so the product stays continuous in t)
    t = np.asarray(t, dtype=float)[..., None]
    z = 1.0 - 2j * t * mu
    logz = 0.5 * np.log1p(4.0 * (t * mu) ** 2) + 1j * np.arctan2(-2.0 * t * mu, 1.0)
    return 1j * c0 * t[..., 0] + np.sum(-0.5 * logz - 0.5 * (t * w) ** 2 / z, axis=-1)


def _one_minus_re_cf(t, mu, w, c0):
    logcf = _log_cf(t, mu, w, c0)
    x, y = logcf.real, logcf.imag
    # Re expm1(x + iy) without cancellation near t = 0
    return -(np.expm1(x) * np.cos(y) - 2.0 * np.sin(0.5 * y) ** 2)


def _cf_modulus(t, mu, w):
    s = 4.0 * (t * mu) ** 2
    return float(np.prod((1.0 + s) ** -0.25)
                 * math.exp(-0.5 * t * t * np.sum(w * w / (1.0 + s))))


def _asymptotic_frequency(mu, w, c0):
    # mu Z^2 + w Z = mu (Z + w/(2 mu))^2 - w^2/(4 mu)
    nz = mu != 0
    return c0 - float(np.sum(w[nz] ** 2 / (4.0 * mu[nz])))


# beyond this point the tail goes to a Fourier-weighted rule
_T_BODY = 1e4


def _fourier_tail(T, mu, w, c0, omega, budget):
    # int_T^inf Re cf(t) / t^2 dt with cf = exp(i omega t) * g, g slowly varying
    def g(t, part):
        val = np.exp(_log_cf(np.atleast_1d(t), mu, w, c0 - omega))[0]
        return (val.real if part == 0 else val.imag) / (t * t)

    if abs(omega) < 1e-8:
        val, err = quad(g, T, np.inf, args=(0,), epsabs=budget / 8, epsrel=0, limit=500)
        return val, err
    re, e1 = quad(g, T, np.inf, args=(0,), weight="cos", wvar=omega,
                  epsabs=budget / 8, limlst=200)
    im, e2 = quad(g, T, np.inf, args=(1,), weight="sin", wvar=omega,
                  epsabs=budget / 8, limlst=200)
    return re - im, e1 + e2


def liwei_expectation(p: QuadFormProblem, tol: float = 1e-9) -> float:
    """E|<Y,AY> + <b,Y> + c0| for Y ~ N(0, sigma), to absolute accuracy ``tol``.

    Evaluates (2/pi) * int_0^inf (1 - Re cf(t)) / t^2 dt, with cf the
    characteristic function of the quadratic form. The removable singularity
    at 0 is integrated from the moment series, [eps, T] adaptively, and the
    tail beyond T as 1/T minus int_T^inf Re cf / t^2, the latter either
    bounded by |cf(T)|/T or, for slowly decaying cf, integrated with a
    Fourier-weighted rule at the asymptotic frequency.
    """
    if not (1e-12 < tol < 1e-3):
        raise ValueError("tol must lie in (1e-12, 1e-3)")
    mu, w = p.canonical()
    scale = max(np.abs(mu).max(), np.abs(w).max(), abs(p.c0))
    mu = np.where(np.abs(mu) <= 1e-14 * scale, 0.0, mu)
    if not np.any(mu) and not np.any(w):
        return abs(p.c0)

    budget = tol * math.pi / 2.0  # error budget on the bare integral

    # small-t region: 1 - Re cf(t) = sum_k (-1)^(k+1) m_2k t^2k / (2k)!
    kappa = _cumulants(mu, w, p.c0, 24)
    m = _moments(kappa)
    L = max(np.abs(mu).max(), np.abs(w).max(), abs(kappa[1]), math.sqrt(kappa[2]))
    eps = min(0.1, 0.01 / L)
    head = 0.0
    for k in range(1, 13):
        term = (-1) ** (k + 1) * m[2 * k] * eps ** (2 * k - 1) / (
            (2 * k - 1) * math.factorial(2 * k))
        head += term
        if abs(term) < 1e-3 * budget:
            break
    else:
        raise QuadratureError("moment series did not converge", 2 / math.pi * head, float("nan"))

    T = max(1.0, 2 * eps)
    while _cf_modulus(T, mu, w) / T > budget / 4 and T < _T_BODY:
        T *= 2.0
    T = min(T, _T_BODY)

    rate = abs(p.c0) + np.abs(mu).sum() + 1.0
    pts = breakpoints(eps, T, 0.5 * math.pi / rate)

    def integrand(t):
        return _one_minus_re_cf(t, mu, w, p.c0) / (t * t)

    body, err = integrate(integrand, eps, T, abs_tol=budget / 2, points=pts)
    tail = 1.0 / T
    if _cf_modulus(T, mu, w) / T > budget / 4:
        omega = _asymptotic_frequency(mu, w, p.c0)
        rem, rem_err = _fourier_tail(T, mu, w, p.c0, omega, budget)
        if rem_err > budget / 4:
            raise QuadratureError("Fourier tail did not converge",
                                  2.0 / math.pi * (head + body + tail - rem),
                                  2.0 / math.pi * rem_err)
        tail -= rem
    return float(2.0 / math.pi * (head + body + tail))


def _check_model(model):
    if not isinstance(model, FieldModel):
        raise TypeError("model must be a FieldModel")
    if 24.0 * model.rho2 - 2.0 <= 0:
        raise ValueError("need 24*rho2 > 2")


def _exp_term(u, rho2):
    u = np.asarray(u, dtype=float)
    d = 24.0 * rho2 - 2.0
    return (8.0 * rho2) ** 1.5 * np.exp(-u * u / d) / math.sqrt(d)


def hessian_abs_det(u, model: FieldModel):
    """E|det X''| given (X, X'_1, X'_2) = (u, 0, 0), isotropic planar field.

    Closed form u^2 - 1 + 2 (8 rho2)^{3/2} exp(-u^2/(24 rho2 - 2)) / sqrt(24 rho2 - 2).
    """
    _check_model(model)
    u = np.asarray(u, dtype=float)
    val = u * u - 1.0 + 2.0 * _exp_term(u, model.rho2)
    if np.any(val <= 0):
        raise ArithmeticError("closed form returned a non-positive expectation")
    return float(val) if val.ndim == 0 else val


def hessian_negdef_bound(u, model: FieldModel):
    """Upper bound of E(|det X''| 1{X'' <= 0}) under the same conditioning,
    (E|det| + E det) / 2 with E det = u^2 - 1."""
    _check_model(model)
    u = np.asarray(u, dtype=float)
    val = u * u - 1.0 + _exp_term(u, model.rho2)
    return float(val) if val.ndim == 0 else val


def conditioned_hessian_covariance(model: FieldModel):
    """Covariance of (X''_11, X''_12, X''_22) given X = u, X' = 0."""
    r = model.rho2
    return np.array([
        [12 * r - 1, 0.0, 4 * r - 1],
        [0.0, 4 * r, 0.0],
        [4 * r - 1, 0.0, 12 * r - 1],
    ])


def hessian_problem(u, model: FieldModel) -> QuadFormProblem:
    """The quadratic-form problem whose absolute value is the conditioned |det X''|."""
    A = np.array([[0.0, 0.0, 0.5], [0.0, -1.0, 0.0], [0.5, 0.0, 0.0]])
    return QuadFormProblem(conditioned_hessian_covariance(model), A,
                           np.array([-u, 0.0, -u], dtype=float), float(u) ** 2)


@dataclass(frozen=True)
class HessianMoments:
    """Monte Carlo moments of the conditioned Hessian; ``*_se`` are standard errors."""

    u: float
    rho2: float
    count: int
    abs_det: float
    abs_det_se: float
    det: float
    det_se: float
    negdef_abs_det: float
    negdef_abs_det_se: float
    negdef_freq: float


_CHUNK = 1 << 18


def conditioned_hessian_sampler(u, model: FieldModel, count: int, seed: int) -> HessianMoments:
    """Sample (X''_11, X''_12, X''_22) given (X, X') = (u, 0) and return moments.

    Draws are split into fixed-size chunks, each with its own substream of
    ``seed``, so the result does not depend on how chunks are scheduled.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    S = conditioned_hessian_covariance(model)
    try:
        L = np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        raise ValueError(
            f"conditioned Hessian covariance not positive definite for rho2={model.rho2}"
        ) from None
    sums = np.zeros(3)
    sq = np.zeros(3)
    negdef = 0
    for i, start in enumerate(range(0, count, _CHUNK)):
        m = min(_CHUNK, count - start)
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(i,)))
        Y = rng.standard_normal((m, 3)) @ L.T
        h11, h12, h22 = Y[:, 0] - u, Y[:, 1], Y[:, 2] - u
        det = h11 * h22 - h12 * h12
        nd = (h11 <= 0) & (det >= 0)
        vals = np.stack([np.abs(det), det, np.where(nd, det, 0.0)])
        sums += vals.sum(axis=1)
        sq += (vals * vals).sum(axis=1)
        negdef += int(nd.sum())
    mean = sums / count
    var = np.maximum(sq / count - mean ** 2, 0.0)
    se = np.sqrt(var / max(count - 1, 1))
    return HessianMoments(float(u), model.rho2, count, mean[0], se[0], mean[1], se[1],
                          mean[2], se[2], negdef / count)
