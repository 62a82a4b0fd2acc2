"""Derivative cocycles, Lyapunov exponents, stable leaves, and linearization.

Covers the quantitative side of the rigidity predictions:

* QR-accumulated exponent estimation along invariant-measure-sampled orbits,
  with per-trial Philox substreams and a deterministic merge.
* Pesin sums (positive sum vs |negative sum| vs the entropy lower bound).
* Stable line fields by backward power iteration through the inverse
  Jacobian cocycle, leaves traced by arclength RK4 in the line field.
* The non-stationary linearization along a leaf: density rho_x as the
  infinite product of stable Jacobian ratios (adaptive cutoff with measured
  contraction rate and a safety factor), the chart H_x as its integral, the
  equivariance identity H_{fx} o f = Df o H_x, affinity of chart transitions
  and the product-formula slope, and derivative comparability along leaves.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline, PchipInterpolator

from . import _kernels
from .errors import NoConvergence, NonMonotoneChart, TailNotBounded
from .perturbation import PerturbedAction, TorusMap
from .torus import LyapunovSpectrum, eigenstructure
from .util import low_discrepancy, substream, thread_map

DIRECTION_DEPTH = 60
LEAF_RADIUS = 0.1
LEAF_STEP = 1e-3
TAIL_TOL = 1e-10
TAIL_SAFETY = 2


# ---------------------------------------------------------------------------
# cocycles and exponents


@dataclass(frozen=True)
class CocycleTrace:
    """Orbit segment with per-step Jacobians of the driving map."""

    base_points: np.ndarray  # (T+1, d), reduced
    factors: np.ndarray      # (T, d, d)

    @property
    def length(self) -> int:
        return int(self.factors.shape[0])


def orbit_with_jacobians(tmap: TorusMap, x0, steps: int) -> CocycleTrace:
    from .util import reduce_point

    x = reduce_point(np.asarray(x0, dtype=float))
    pts = np.empty((steps + 1, tmap.dim))
    jacs = np.empty((steps, tmap.dim, tmap.dim))
    pts[0] = x
    for t in range(steps):
        y, j = tmap.apply_with_jacobian(pts[t])
        jacs[t] = j
        pts[t + 1] = reduce_point(y)
    return CocycleTrace(base_points=pts, factors=jacs)


@dataclass(frozen=True)
class ExponentEstimate:
    """Mean +- stderr of QR-accumulated exponents, in descending flag order."""

    m: tuple[int, ...]
    estimates: np.ndarray         # (d,)
    stderrs: np.ndarray           # (d,)
    linear: np.ndarray            # (d,) linear exponents, sorted descending
    functional_order: np.ndarray  # (d,) functional index (0-based) per slot
    trials: int
    steps: int
    sampler_label: str

    def sign_pattern_estimated(self) -> tuple[int, ...]:
        """Signs of the estimates mapped back to functional index order."""
        d = self.estimates.shape[0]
        pattern = [0] * d
        for slot in range(d):
            pattern[int(self.functional_order[slot])] = (
                1 if self.estimates[slot] > 0 else -1
            )
        return tuple(pattern)


def linear_exponents(action: PerturbedAction, m) -> np.ndarray:
    """Lyapunov exponents of the linear part alpha0(m), in functional order."""
    if action.base is not None:
        return action.base.spectrum.chi(np.asarray(m, dtype=float))
    vals, _ = eigenstructure(action.element_map(m).linear)
    return np.log(np.abs(vals))


def estimate_exponents(
    action: PerturbedAction,
    m,
    steps: int = 10**6,
    trials: int = 16,
    seed: int = 0,
    sampler=None,
    threads: int | None = None,
) -> ExponentEstimate:
    """Benettin QR estimates of the Lyapunov exponents of alpha(m).

    Sampling is exactly invariant for the conjugated family (x = phi(y) with
    y uniform); SingleMap runs fall back to Lebesgue sampling and are labeled
    as non-oracle diagnostics.  The QR frame starts at the orthonormalized
    shared eigenbasis of the linear part (descending |eigenvalue|), which
    pins the flag order and makes the eps = 0 case exact to rounding.
    """
    m = tuple(int(v) for v in np.asarray(m).ravel())
    tmap = action.element_map(m)
    vals, vecs = eigenstructure(tmap.linear)
    q0, _ = np.linalg.qr(vecs)

    if sampler is not None:
        label = "custom"
    elif action.kind == "conjugated":
        sampler = lambda rng, n: action.sample_invariant(rng, n)  # noqa: E731
        label = "pushforward"
    else:
        sampler = lambda rng, n: rng.random((n, action.dim))  # noqa: E731
        label = "lebesgue"

    x0 = np.empty((trials, action.dim))
    for i in range(trials):
        x0[i] = sampler(substream(seed, 1, i), 1)[0]

    def run(idx: int) -> np.ndarray:
        logs, _ = _kernels.orbit_exponents_batch(
            tmap.program, x0[idx : idx + 1], steps, q0
        )
        return logs[0]

    per_trial = np.array(thread_map(run, range(trials), threads))
    estimates = per_trial / steps
    mean = estimates.mean(axis=0)
    if trials > 1:
        stderr = estimates.std(axis=0, ddof=1) / np.sqrt(trials)
    else:
        stderr = np.zeros_like(mean)

    lin = linear_exponents(action, m)
    order = np.argsort(-lin, kind="stable")
    return ExponentEstimate(
        m=m, estimates=mean, stderrs=stderr, linear=lin[order],
        functional_order=order, trials=trials, steps=steps, sampler_label=label,
    )


@dataclass(frozen=True)
class PesinReport:
    positive_sum: float
    negative_sum_abs: float
    linear_positive_sum: float
    linear_negative_sum_abs: float
    entropy_lower_bound: float  # max_i |chi_i(m)| of the linear spectrum
    sum_gap: float              # |positive_sum - negative_sum_abs|


def pesin_sums(estimate: ExponentEstimate, spectrum: LyapunovSpectrum, m) -> PesinReport:
    """Sums of positive / |negative| exponents against the linear spectrum.

    For an absolutely continuous hyperbolic measure both sums equal the
    entropy, which also dominates max_i |log|rho_i(m)||; for zero-sum
    spectra that bound is attained with equality.
    """
    est = estimate.estimates
    chi = spectrum.chi(np.asarray(m, dtype=float))
    pos = float(np.sum(est[est > 0]))
    neg = float(abs(np.sum(est[est < 0])))
    return PesinReport(
        positive_sum=pos,
        negative_sum_abs=neg,
        linear_positive_sum=float(np.sum(chi[chi > 0])),
        linear_negative_sum_abs=float(abs(np.sum(chi[chi < 0]))),
        entropy_lower_bound=float(np.max(np.abs(chi))),
        sum_gap=abs(pos - neg),
    )


# ---------------------------------------------------------------------------
# stable directions and leaves


def _generic_vector(dim: int) -> np.ndarray:
    v = np.cos(np.arange(1, dim + 1)) + 1.5
    return v / np.linalg.norm(v)


def stable_direction(
    tmap: TorusMap,
    x,
    depth: int = DIRECTION_DEPTH,
    certify: bool = True,
    angle_tol: float = 1e-10,
) -> np.ndarray:
    """Unit vector spanning the one-dimensional stable line E^-(x).

    Backward power iteration: a generic vector is pulled through the inverse
    Jacobians along the forward orbit of x, normalized each step; the most
    contracted direction dominates.  With certify=True the estimates at
    depths depth-5..depth must agree to angle_tol, else NoConvergence.
    """
    x = np.asarray(x, dtype=float)
    d = tmap.dim
    pts = np.empty((depth, d))
    inv_jacs = np.empty((depth, d, d))
    cur = x
    for t in range(depth):
        y, j = tmap.apply_with_jacobian(cur)
        inv_jacs[t] = np.linalg.inv(j)
        pts[t] = cur = y - np.floor(y)

    w0 = _generic_vector(d)

    def backward(n: int) -> np.ndarray:
        v = w0.copy()
        for t in range(n - 1, -1, -1):
            v = inv_jacs[t] @ v
            v /= np.linalg.norm(v)
        return v

    v = backward(depth)
    if certify:
        prev = backward(depth - 5)
        for n in range(depth - 4, depth + 1):
            cand = backward(n)
            if float(np.dot(cand, prev)) < 0:
                cand = -cand
            # chord length ~ angle for small angles, exact near zero
            change = float(np.linalg.norm(cand - prev))
            if change > angle_tol:
                raise NoConvergence(
                    f"stable direction not settled at depth {depth} "
                    f"(angle change {change:.2e})"
                )
            prev = cand
    k = int(np.argmax(np.abs(v)))
    return v if v[k] > 0 else -v


@dataclass(frozen=True)
class LeafTrace:
    """Arclength-sampled local stable leaf through a point (lift coordinates)."""

    points: np.ndarray      # (n, d), ordered by increasing arclength
    arclengths: np.ndarray  # (n,), center at 0
    directions: np.ndarray  # (n, d), consistently oriented unit tangents
    center_index: int
    flips: int              # automatic re-alignments of the raw line field

    @property
    def n_samples(self) -> int:
        return int(self.points.shape[0])

    @property
    def center(self) -> np.ndarray:
        return self.points[self.center_index]


def trace_leaf(
    tmap: TorusMap,
    x,
    radius: float = LEAF_RADIUS,
    step: float = LEAF_STEP,
    depth: int = DIRECTION_DEPTH,
) -> LeafTrace:
    """Integrate the unit stable line field from x out to +-radius.

    Classic RK4 in arclength; the line field is re-queried at every stage and
    aligned to the running orientation (a line field has no canonical sign).
    Sign flips of the raw field at recorded samples are counted.
    """
    x = np.asarray(x, dtype=float)
    n_steps = int(round(radius / step))
    v0 = stable_direction(tmap, x, depth=depth, certify=True)

    def field(p, ref):
        v = stable_direction(tmap, p, depth=depth, certify=False)
        return v if np.dot(v, ref) >= 0 else -v

    sides = []
    flips = 0
    for orient in (-1.0, 1.0):
        pts = np.empty((n_steps, x.shape[0]))
        dirs = np.empty_like(pts)
        cur = x.copy()
        ref = orient * v0
        prev_raw = v0
        h = step
        for i in range(n_steps):
            raw = stable_direction(tmap, cur, depth=depth, certify=True)
            if np.dot(raw, prev_raw) < 0:
                flips += 1  # raw line-field representative jumped sign
            prev_raw = raw
            k1 = raw if np.dot(raw, ref) >= 0 else -raw
            k2 = field(cur + 0.5 * h * k1, k1)
            k3 = field(cur + 0.5 * h * k2, k1)
            k4 = field(cur + h * k3, k1)
            cur = cur + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            ref = k1
            pts[i] = cur
            dirs[i] = field(cur, ref)
        sides.append((pts, dirs))

    minus_pts, minus_dirs = sides[0]
    plus_pts, plus_dirs = sides[1]
    points = np.vstack([minus_pts[::-1], x[None, :], plus_pts])
    directions = np.vstack([-minus_dirs[::-1], v0[None, :], plus_dirs])
    arcs = step * np.arange(-n_steps, n_steps + 1, dtype=float)
    return LeafTrace(
        points=points, arclengths=arcs, directions=directions,
        center_index=n_steps, flips=flips,
    )


# ---------------------------------------------------------------------------
# density, chart, affinity


@dataclass(frozen=True)
class DensityResult:
    rho: np.ndarray       # (n,), rho[center] = 1 exactly
    cutoff: int           # product terms used (after the safety factor)
    tail_bound: float
    contraction_rate: float


def stable_jacobian_table(
    tmap: TorusMap,
    points: np.ndarray,
    steps: int,
    direction_depth: int = DIRECTION_DEPTH,
) -> np.ndarray:
    """Jf(f^j z) = ||Df v||/||v|| along orbits, for all j < steps and all z.

    Directions along each orbit come from a single backward sweep: the
    forward orbit (with Jacobians) is computed out to steps+direction_depth,
    then a generic vector is pulled back through the inverse Jacobians.  The
    pullback is attracting on the stable line, so after the depth-long
    transient at the far end every recorded direction is converged; pushing
    stable vectors forward instead would be exponentially unstable.
    """
    z = np.array(points, dtype=float)
    n, d = z.shape
    total = steps + direction_depth
    jacs = np.empty((total, n, d, d))
    for t in range(total):
        y, jac = _kernels.apply_program(tmap.program, z, True)
        jacs[t] = jac
        z = y - np.floor(y)
    v = np.broadcast_to(_generic_vector(d), (n, d)).copy()
    jf = np.empty((total, n))
    for t in range(total - 1, -1, -1):
        u = np.linalg.solve(jacs[t], v[..., None])[..., 0]
        norms = np.linalg.norm(u, axis=1)
        jf[t] = 1.0 / norms  # ||Df v_t|| with v_t the unit pullback direction
        v = u / norms[:, None]
    return jf[:steps]


def density_rho(
    tmap: TorusMap,
    points: np.ndarray,
    center_index: int,
    tail_tol: float = TAIL_TOL,
    safety: int = TAIL_SAFETY,
    max_steps: int = 120,
    direction_depth: int = DIRECTION_DEPTH,
    force_cutoff: int | None = None,
) -> DensityResult:
    """rho_x(z) = prod_j Jf(f^j z) / Jf(f^j x) along a leaf, adaptive cutoff.

    The cutoff is chosen where the measured geometric decay of the factor
    deviations bounds the remaining tail below tail_tol, stretched by the
    safety factor but clamped at the measured noise floor: past it the two
    orbits have decohered (rounding amplified by the top exponent) and extra
    factors only add noise.  The reported tail bound is the geometric tail
    plus the measured deviation mass of the next ten steps, so it also
    bounds the change under a +10 cutoff extension.
    """
    jf = stable_jacobian_table(tmap, points, max_steps, direction_depth)
    log_jf = np.log(jf)
    dev = log_jf - log_jf[:, center_index][:, None]
    deltas = np.max(np.abs(dev), axis=1)

    n0 = None
    rate = np.nan
    for j in range(3, max_steps):
        delta = deltas[j]
        if delta <= 1e-14:
            rate = 0.0
            n0 = j + 1
            break
        ratios = [deltas[i + 1] / deltas[i] for i in range(j - 3, j) if deltas[i] > 1e-14]
        if ratios:
            rate = float(np.median(ratios))
            if 0.0 < rate < 0.999 and delta * rate / (1.0 - rate) < tail_tol:
                n0 = j + 1
                break
    if n0 is None:
        raise TailNotBounded(
            f"factor deviations not summable within {max_steps} steps "
            f"(last delta {deltas[-1]:.3e}, rate {rate})"
        )
    if force_cutoff is not None:
        if not 1 <= force_cutoff <= max_steps:
            raise ValueError(f"force_cutoff must be in 1..{max_steps}")
        cutoff = int(force_cutoff)
    else:
        candidate = min(safety * n0, max_steps)
        last_min = candidate - 1 - int(np.argmin(deltas[:candidate][::-1]))
        cutoff = max(n0, min(candidate, last_min + 1))

    log_rho = np.sum(dev[:cutoff], axis=0)
    geometric = deltas[cutoff - 1] * rate / (1.0 - rate) if rate > 0 else deltas[cutoff - 1]
    window = deltas[cutoff : min(cutoff + 10, max_steps)]
    tail = float(geometric + np.sum(window) + 16.0 * cutoff * np.finfo(float).eps)
    return DensityResult(
        rho=np.exp(log_rho), cutoff=cutoff, tail_bound=tail, contraction_rate=rate,
    )


@dataclass(frozen=True)
class LinearizationChart:
    """Sampled leaf with its density and chart H_x (H(center) = 0, H' = rho)."""

    leaf: LeafTrace
    density: DensityResult
    chart: np.ndarray  # (n,) chart values at the leaf samples

    @property
    def center(self) -> np.ndarray:
        return self.leaf.center

    def chart_spline(self) -> CubicSpline:
        return CubicSpline(self.leaf.arclengths, self.chart)

    def point_at_arc(self, s) -> np.ndarray:
        sp = CubicSpline(self.leaf.arclengths, self.leaf.points, axis=0)
        return sp(s)

    def arc_of_points(self, queries: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Arclength coordinates of on-leaf points by local quadratic projection.

        Returns (arcs, distances); a large distance flags an off-leaf query.
        """
        q = np.atleast_2d(np.asarray(queries, dtype=float))
        pts = self.leaf.points
        arcs = self.leaf.arclengths
        sp = CubicSpline(arcs, pts, axis=0)
        dsp = sp.derivative()
        out_s = np.empty(q.shape[0])
        out_d = np.empty(q.shape[0])
        for i, zq in enumerate(q):
            j = int(np.argmin(np.sum((pts - zq) ** 2, axis=1)))
            s = arcs[j]
            for _ in range(4):
                p = sp(s)
                t = dsp(s)
                g = float(np.dot(p - zq, t))
                hcur = float(np.dot(t, t) + np.dot(p - zq, dsp(s, 1)))
                if hcur <= 0:
                    break
                s_new = s - g / hcur
                s = float(np.clip(s_new, arcs[0], arcs[-1]))
            out_s[i] = s
            out_d[i] = float(np.linalg.norm(sp(s) - zq))
        return out_s, out_d

    def chart_at_points(self, queries: np.ndarray) -> np.ndarray:
        s, dist = self.arc_of_points(queries)
        if np.any(dist > 1e-5):
            raise NonMonotoneChart(
                f"query point lies {dist.max():.2e} off the traced leaf"
            )
        return self.chart_spline()(s)


def chart_h(arclengths: np.ndarray, rho: np.ndarray, center_index: int) -> np.ndarray:
    """H values at the samples: cumulative integral of rho from the center."""
    anti = CubicSpline(arclengths, rho).antiderivative()
    return anti(arclengths) - anti(arclengths[center_index])


def build_chart(
    tmap: TorusMap,
    x,
    radius: float = LEAF_RADIUS,
    step: float = LEAF_STEP,
    depth: int = DIRECTION_DEPTH,
    tail_tol: float = TAIL_TOL,
    leaf: LeafTrace | None = None,
) -> LinearizationChart:
    if leaf is None:
        leaf = trace_leaf(tmap, x, radius=radius, step=step, depth=depth)
    density = density_rho(
        tmap, leaf.points, leaf.center_index, tail_tol=tail_tol,
        direction_depth=depth,
    )
    chart = chart_h(leaf.arclengths, density.rho, leaf.center_index)
    return LinearizationChart(leaf=leaf, density=density, chart=chart)


def chart_equivariance_residual(tmap: TorusMap, chart: LinearizationChart) -> float:
    """max |H_{fx}(f y) - Jf(x) H_x(y)| over the leaf samples (condition (i)).

    The left side is built independently: the mapped samples are re-measured
    by arclength, their density is recomputed with base point f(x), and the
    chart at f(x) is integrated along the image curve.
    """
    leaf = chart.leaf
    ci = leaf.center_index
    y, jac = _kernels.apply_program(tmap.program, leaf.points, True)
    jf_x = float(np.linalg.norm(jac[ci] @ leaf.directions[ci]))
    seg = np.linalg.norm(np.diff(y, axis=0), axis=1)
    t = np.concatenate([[0.0], np.cumsum(seg)])
    t -= t[ci]
    dens = density_rho(tmap, y, ci)
    h_img = chart_h(t, dens.rho, ci)
    return float(np.max(np.abs(h_img - jf_x * chart.chart)))


@dataclass(frozen=True)
class AffinityReport:
    max_second_difference: float
    slope: float
    slope_product_formula: float
    xi_grid: np.ndarray
    transition: np.ndarray


def affinity_check(
    tmap: TorusMap,
    chart_x: LinearizationChart,
    chart_y: LinearizationChart,
    n_points: int = 9,
    margin: float = 0.05,
) -> AffinityReport:
    """Second differences and slope of H_y o H_x^{-1} on the shared leaf piece.

    The transition is evaluated on a uniform grid in chart-x coordinates via
    monotone inversion of H_x; for an affine transition the second divided
    differences vanish and the slope equals the Jacobian-ratio product
    prod_j Jf(f^j x)/Jf(f^j y) (= 1/rho_x(y)).
    """
    sx = chart_x.leaf.arclengths
    y_arc, y_dist = chart_x.arc_of_points(chart_y.center[None, :])
    if y_dist[0] > 1e-5:
        raise NonMonotoneChart("chart centers do not lie on a common leaf")
    ry = chart_y.leaf.arclengths[-1]
    lo = max(sx[0], float(y_arc[0]) - ry)
    hi = min(sx[-1], float(y_arc[0]) + ry)
    span = hi - lo
    lo, hi = lo + margin * span, hi - margin * span
    if hi <= lo:
        raise NonMonotoneChart("charts share no leaf overlap")

    hx = chart_x.chart
    if np.any(np.diff(hx) <= 0):
        raise NonMonotoneChart("chart H_x is not strictly monotone")
    inv_hx = PchipInterpolator(hx, sx)

    xi = np.linspace(chart_x.chart_spline()(lo), chart_x.chart_spline()(hi), n_points)
    s_grid = inv_hx(xi)
    z_grid = chart_x.point_at_arc(s_grid)
    g = chart_y.chart_at_points(z_grid)

    h = xi[1] - xi[0]
    second = np.abs(g[2:] - 2.0 * g[1:-1] + g[:-2]) / (2.0 * h * h)
    slope = float((g[-1] - g[0]) / (xi[-1] - xi[0]))

    pair = np.vstack([chart_y.center, chart_x.center])
    dens = density_rho(tmap, pair, 0)
    slope_formula = float(dens.rho[1])  # prod Jf(f^j x)/Jf(f^j y)

    return AffinityReport(
        max_second_difference=float(np.max(second)),
        slope=slope,
        slope_product_formula=slope_formula,
        xi_grid=xi,
        transition=g,
    )


# ---------------------------------------------------------------------------
# derivative comparability and invariant density diagnostics


@dataclass(frozen=True)
class ComparabilityReport:
    max_pair_ratio: float          # max over pairs of norm ratio (>= 1)
    norm_spread: float             # max/min of ||D(alpha(t))v|| / exp(chi(t))
    normalized_norms: np.ndarray


def derivative_comparability(
    action: PerturbedAction,
    t,
    leaves: list[LeafTrace],
    spectrum: LyapunovSpectrum,
    stable_index: int,
    pair_arc: float = 0.05,
) -> ComparabilityReport:
    """Stable-derivative norms of alpha(t) at leaf-mate pairs (x, y).

    For each traced leaf, y is the sample at arclength ~pair_arc from the
    center; the report carries the worst pair ratio and the spread of
    ||D(alpha(t))v|| / exp(chi(t)) across all sampled points, the testable
    shadow of the uniform derivative estimate and the double bound.
    """
    tmap = action.element_map(t)
    chi_t = float(spectrum.coefficients[stable_index - 1] @ np.asarray(t, dtype=float))
    max_ratio = 1.0
    norms_all = []
    for leaf in leaves:
        ci = leaf.center_index
        offset = int(round(pair_arc / (leaf.arclengths[1] - leaf.arclengths[0])))
        yi = min(leaf.n_samples - 1, ci + offset)
        pair = np.vstack([leaf.points[ci], leaf.points[yi]])
        dirs = np.vstack([leaf.directions[ci], leaf.directions[yi]])
        _, jac = _kernels.apply_program(tmap.program, pair, True)
        w = np.einsum("nij,nj->ni", jac, dirs)
        norms = np.linalg.norm(w, axis=1)
        ratio = float(max(norms) / min(norms))
        max_ratio = max(max_ratio, ratio)
        norms_all.extend(norms.tolist())
    normalized = np.array(norms_all) / np.exp(chi_t)
    return ComparabilityReport(
        max_pair_ratio=max_ratio,
        norm_spread=float(normalized.max() / normalized.min()),
        normalized_norms=normalized,
    )


@dataclass(frozen=True)
class DensityCheckReport:
    max_transfer_residual: float
    integral_error: float  # |QMC integral of g - 1|


def invariant_density_check(
    action: PerturbedAction, samples: int = 10**6
) -> DensityCheckReport:
    """Oracle-family diagnostics for mu = phi_* Lebesgue.

    Checks the transfer identity g(x) = g(f^{-1} x) |det Df^{-1}(x)| pointwise
    and that the quasi-Monte Carlo integral of the density is 1.
    """
    pts = low_discrepancy(samples, action.dim)
    g = action.invariant_density(pts)
    integral_error = abs(float(np.mean(g)) - 1.0)
    f = action.generators[0]
    finv_pts, jinv = _kernels.apply_program(f.program_inv, pts, True)
    g_pre = action.invariant_density(finv_pts)
    transfer = np.abs(g - g_pre * np.abs(np.linalg.det(jinv)))
    return DensityCheckReport(
        max_transfer_residual=float(np.max(transfer)),
        integral_error=integral_error,
    )
