"""Monte Carlo ground truth for the tail of the field maximum.

The field is sampled exactly on a lattice restricted to the region (dense
Cholesky factor of the squared-exponential covariance). Samples are drawn in
fixed-size chunks, chunk ``i`` using the substream ``SeedSequence(seed,
spawn_key=(i,))``; per-chunk exceedance counts are integers, so the result
is bit-identical for any number of worker threads.
"""

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .bounds import p_record_2d, p_record_3d
from .gauss import edge3d_term, ugrid, wedge_expectation
from .geom2d import CompositeRegion2D, Polygon2D, summarize
from .geom3d import Polyhedron3D, contains as polyhedron_contains, polyhedron_summary
from .quadform import FieldModel

log = logging.getLogger(__name__)

MAX_GRID_POINTS = 4096
MIN_SAMPLES = 10_000
JITTERS = (1e-12, 1e-11, 1e-10, 1e-9, 1e-8)
CHUNK = 4096
THREADS_ENV = "EXCURSION_THREADS"


class BoundViolation(AssertionError):
    """An empirical tail exceeded an upper bound by more than the allowed margin."""


@dataclass(frozen=True)
class KernelSpec:
    """rho(s) = exp(-a s), s = |t|^2. Only a = 1/2 satisfies the unit-variance
    normalization of the gradient, giving rho''(0) = 1/4."""

    kind: str = "squared-exponential"
    a: float = 0.5

    def __post_init__(self):
        if self.kind != "squared-exponential":
            raise ValueError(f"unsupported kernel kind {self.kind!r}")
        if self.a != 0.5:
            raise ValueError("scaled kernels exp(-a s) need re-standardization; only a = 1/2 is supported")

    @property
    def rho2(self):
        return self.a * self.a

    @property
    def model(self):
        return FieldModel(self.rho2)

    def covariance(self, points):
        sq = np.sum(points * points, axis=1)
        d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * points @ points.T, 0.0)
        return np.exp(-self.a * d2)


@dataclass(frozen=True)
class TailEstimate:
    u: np.ndarray
    p_hat: np.ndarray
    half_width: np.ndarray
    n_samples: int
    grid_step: float
    seed: int
    grid_points: int = 0
    jitter: float = 0.0

    @property
    def se(self):
        return np.sqrt(self.p_hat * (1.0 - self.p_hat) / self.n_samples)

    def rows(self):
        for u, p, h in zip(self.u, self.p_hat, self.half_width):
            yield float(u), float(p), float(h), self.n_samples, self.grid_step, self.seed


def worker_count(threads=None):
    if threads is None:
        env = os.environ.get(THREADS_ENV)
        threads = int(env) if env else (os.cpu_count() or 1)
    if threads < 1:
        raise ValueError("thread count must be >= 1")
    return int(threads)


def lattice(lo, hi, step):
    """Axis-aligned lattice with spacing ``step`` anchored at ``lo``."""
    if not step > 0:
        raise ValueError("step must be > 0")
    axes = [lo[k] + step * np.arange(int(math.floor((hi[k] - lo[k]) / step + 1e-9)) + 1)
            for k in range(len(lo))]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def region_grid(region, step):
    if isinstance(region, Polyhedron3D):
        v = region.vertices
        pts = lattice(v.min(axis=0), v.max(axis=0), step)
        pts = pts[polyhedron_contains(region, pts, tol=1e-9 * step)]
    elif isinstance(region, (Polygon2D, CompositeRegion2D)):
        outer = region.outer if isinstance(region, CompositeRegion2D) else region
        v = outer.vertices
        pts = lattice(v.min(axis=0), v.max(axis=0), step)
        pts = pts[region.contains(pts, tol=1e-9 * step)]
    else:
        raise TypeError(f"cannot grid a {type(region).__name__}")
    if len(pts) == 0:
        raise ValueError("no grid point falls inside the region; decrease step")
    if len(pts) > MAX_GRID_POINTS:
        raise ValueError(f"grid has {len(pts)} points (> {MAX_GRID_POINTS}); increase step")
    return pts


def cholesky_with_jitter(K):
    """Lower Cholesky factor of K + j I for the smallest working j in JITTERS."""
    eye = np.eye(len(K))
    for j in JITTERS:
        try:
            L = np.linalg.cholesky(K + j * eye)
        except np.linalg.LinAlgError:
            log.info("Cholesky failed with jitter %.0e", j)
            continue
        if j > JITTERS[0]:
            log.warning("covariance factorized with escalated jitter %.0e", j)
        return L, j
    raise np.linalg.LinAlgError(f"Cholesky failed after jitter escalation up to {JITTERS[-1]:.0e}")


def _chunk_counts(L, u_sorted, seed, index, size):
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))
    z = rng.standard_normal((size, L.shape[0]))
    m = np.sort((z @ L.T).max(axis=1))
    # number of samples whose maximum is >= each level
    return size - np.searchsorted(m, u_sorted, side="left")


def simulate_tail(region, kernel: KernelSpec, step, u, n, seed, threads=None) -> TailEstimate:
    u = ugrid(u)
    if n < MIN_SAMPLES:
        raise ValueError(f"n must be >= {MIN_SAMPLES}")
    pts = region_grid(region, step)
    L, jitter = cholesky_with_jitter(kernel.covariance(pts))
    order = np.argsort(u)
    sizes = [min(CHUNK, n - s) for s in range(0, n, CHUNK)]
    counts = np.zeros(len(u), dtype=np.int64)
    with ThreadPoolExecutor(max_workers=worker_count(threads)) as pool:
        for c in pool.map(lambda a: _chunk_counts(L, u[order], seed, *a), enumerate(sizes)):
            counts += c
    p = np.empty(len(u))
    p[order] = counts / n
    hw = 1.96 * np.sqrt(p * (1.0 - p) / n)
    return TailEstimate(u, p, hw, int(n), float(step), int(seed), len(pts), jitter)


def check_one_sided(est: TailEstimate, bound, margin=3.0):
    """Raise BoundViolation where p_hat > bound + margin * half_width."""
    bound = np.broadcast_to(np.asarray(bound, dtype=float), est.u.shape)
    bad = np.flatnonzero(est.p_hat > bound + margin * est.half_width)
    if bad.size:
        i = bad[0]
        raise BoundViolation(
            f"p_hat({est.u[i]:g}) = {est.p_hat[i]:.6g} exceeds bound {bound[i]:.6g} "
            f"+ {margin:g} x {est.half_width[i]:.3g}")


def simulate_tail_2d(region, kernel: KernelSpec, step, u, n, seed, threads=None, check=True):
    if not isinstance(region, (Polygon2D, CompositeRegion2D)):
        raise TypeError("simulate_tail_2d needs a Polygon2D or CompositeRegion2D")
    est = simulate_tail(region, kernel, step, u, n, seed, threads)
    if check and est.u.size:
        check_one_sided(est, p_record_2d(est.u, summarize(region), kernel.model))
    return est


def simulate_tail_3d(p: Polyhedron3D, kernel: KernelSpec, step, u, n, seed, threads=None, check=True):
    est = simulate_tail(p, kernel, step, u, n, seed, threads)
    if check and est.u.size:
        check_one_sided(est, p_record_3d(est.u, polyhedron_summary(p), kernel.model))
    return est


@dataclass(frozen=True)
class CheckResult:
    name: str
    estimate: float
    se: float
    exact: float

    @property
    def z(self):
        return (self.estimate - self.exact) / self.se if self.se > 0 else 0.0

    @property
    def ok(self):
        return abs(self.estimate - self.exact) <= 3.0 * self.se


WEDGE_ANGLES = (math.pi / 3, math.pi / 2, 2 * math.pi / 3, math.pi)
EDGE_ANGLES = ((math.pi / 2, math.pi / 2, math.pi / 2), (1.0, 2.0, 1.2), (2.2, 0.7, 2.5),
               (0.4, 0.5, 0.3))


def _mean_se(x):
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(len(x)))


def mc_wedge_and_edge_checks(seed, n):
    """Compare sampled wedge and edge expectations with their closed forms."""
    if n < 1_000_000:
        raise ValueError("n must be >= 1e6")
    rng = np.random.default_rng(seed)
    out = []
    x, y = rng.standard_normal((2, n))
    for th in WEDGE_ANGLES:
        m, se = _mean_se(np.maximum(x, 0.0) * (math.cos(th) * x + math.sin(th) * y <= 0))
        out.append(CheckResult(f"wedge theta={th:.6g}", m, se, float(wedge_expectation(th))))
    del x, y
    eta, z1, z2 = rng.standard_normal((3, n))
    for t1, t2, t3 in EDGE_ANGLES:
        xa = z1
        xb = math.cos(t3) * z1 + math.sin(t3) * z2
        ind = ((math.cos(t1) * eta + math.sin(t1) * xa <= 0)
               & (math.cos(t2) * eta + math.sin(t2) * xb <= 0))
        m, se = _mean_se(np.maximum(eta, 0.0) * ind)
        out.append(CheckResult(f"edge theta=({t1:.6g}, {t2:.6g}, {t3:.6g})", m, se,
                               float(edge3d_term(t1, t2, t3))))
    return out
