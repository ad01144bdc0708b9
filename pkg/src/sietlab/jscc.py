"""Separated source-channel operation under an energy floor.

The channel side contributes a rate budget C(b) at each energy floor b;
the source side turns a rate budget into distortion through R(D).  Their
composition is the energy-distortion frontier: the set of (b, distortion)
pairs that cannot be improved in one coordinate without paying in the
other.  Estimation error in the harvesting function deforms this set,
and the deformation is measured by l1 projection onto the true frontier.

R(D) is computed by Blahut iteration at a fixed Lagrangian slope with a
multiplicative-growth stopping certificate; the slope is bisected to hit
the distortion target, falling back to an exact kernel mixture on linear
segments where no single slope does.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .capacity import _energy_vector, capacity_energy, unconstrained_capacity
from .channel import DiscreteChannel
from .experiments import _assemble_report, _map_ordered, derive_seed
from .funcspace import (
    GridFunction,
    SmoothnessClass,
    bump_function,
    sample_regular,
)
from .reconstruct import KernelSpec, local_poly_fit, spline_interpolate
from .validation import (
    InfeasibleError,
    InvalidParameterError,
    NumericalError,
    check_nonnegative_real,
    check_positive_int,
    check_positive_real,
    check_probability_vector,
    check_unit_interval_grid,
)

_BA_TOL = 1e-12
_BA_MAX_ITER = 50_000


@dataclass(frozen=True)
class SourceModel:
    """Finite source on a grid in [0, 1] with a reproduction alphabet.

    distortion[i, j] is the cost of reproducing grid point i by letter j;
    columns are functions of the source position, which is what sampling
    and reconstruction act on.
    """

    s_grid: np.ndarray
    source_pmf: np.ndarray
    repro_alphabet: tuple
    distortion: np.ndarray

    def __post_init__(self):
        grid = check_unit_interval_grid(self.s_grid, "s_grid")
        pmf = check_probability_vector(self.source_pmf, "source_pmf")
        if pmf.size != grid.size:
            raise InvalidParameterError("source_pmf must match s_grid length")
        labels = tuple(self.repro_alphabet)
        if not labels:
            raise InvalidParameterError("repro_alphabet must be nonempty")
        d = np.asarray(self.distortion, dtype=float)
        if d.shape != (grid.size, len(labels)):
            raise InvalidParameterError(
                f"distortion must have shape {(grid.size, len(labels))}, got {d.shape}")
        if not np.all(np.isfinite(d)) or np.any(d < 0):
            raise InvalidParameterError("distortion must be nonnegative and finite")
        object.__setattr__(self, "s_grid", grid)
        object.__setattr__(self, "source_pmf", pmf)
        object.__setattr__(self, "repro_alphabet", labels)
        object.__setattr__(self, "distortion", d)

    @property
    def n_source(self) -> int:
        return self.s_grid.size

    @property
    def n_repro(self) -> int:
        return len(self.repro_alphabet)

    def min_distortion(self) -> float:
        """Distortion floor: best letter for every source point."""
        return float(self.source_pmf @ self.distortion.min(axis=1))

    def zero_rate_distortion(self) -> float:
        """Best single letter, the distortion available at rate 0."""
        return float((self.source_pmf @ self.distortion).min())

    def entropy(self) -> float:
        p = self.source_pmf[self.source_pmf > 0]
        return float(-(p * np.log2(p)).sum())

    def with_distortion(self, d) -> "SourceModel":
        return SourceModel(self.s_grid, self.source_pmf, self.repro_alphabet, d)


class RDPoint(NamedTuple):
    rate: float
    kernel: np.ndarray  # rows: reproduction law per source point


def _kernel_stats(src: SourceModel, kernel: np.ndarray):
    """Rate (bits) and mean distortion of a reproduction kernel."""
    p = src.source_pmf
    marg = p @ kernel
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(kernel > 0, kernel / np.maximum(marg[None, :], 1e-300), 1.0)
        bits = np.where(kernel > 0, kernel * np.log2(ratio), 0.0)
    rate = float(p @ bits.sum(axis=1))
    dist = float(p @ (kernel * src.distortion).sum(axis=1))
    return max(rate, 0.0), dist


def _zero_rate_kernel(src: SourceModel) -> np.ndarray:
    kernel = np.zeros((src.n_source, src.n_repro))
    kernel[:, int(np.argmin(src.source_pmf @ src.distortion))] = 1.0
    return kernel


def _ba_slope(src: SourceModel, mu: float, r0=None) -> np.ndarray:
    """Blahut fixed point at Lagrangian slope mu: optimal kernel.

    Iterates the reproduction marginal through the growth factor map;
    the sup of the growth factor certifies convergence.  mu = 0 is
    degenerate for the iteration (every marginal is a fixed point) and
    is answered exactly by the best single letter.  A warm-start
    marginal r0 from a nearby slope cuts the iteration count sharply.
    """
    if mu <= 0.0:
        return _zero_rate_kernel(src)
    p = src.source_pmf
    d = src.distortion
    # per-row shift keeps the exponentials in range at large mu
    a = np.exp(-mu * (d - d.min(axis=1, keepdims=True)))
    if r0 is None:
        r = np.full(src.n_repro, 1.0 / src.n_repro)
    else:
        r = np.maximum(np.asarray(r0, dtype=float), 1e-14)
        r = r / r.sum()
    for _ in range(_BA_MAX_ITER):
        c = a @ r
        growth = p @ (a / c[:, None])
        r_new = r * growth
        if float(np.max(growth * (r > 0))) - 1.0 <= _BA_TOL:
            r = r_new
            break
        r = r_new
    kernel = a * r[None, :]
    return kernel / kernel.sum(axis=1, keepdims=True)


def _slope_cap(src: SourceModel) -> float:
    gaps = src.distortion - src.distortion.min(axis=1, keepdims=True)
    pos = gaps[gaps > 0]
    if pos.size == 0:
        return 1.0
    return 1400.0 / float(pos.min())


def _mix_kernels(k_lo, k_hi, theta):
    return (1.0 - theta) * k_lo + theta * k_hi


def rate_distortion(src: SourceModel, dd: float, tol: float = 1e-9) -> RDPoint:
    """Fewest bits per symbol at mean distortion dd.

    The slope is bisected until the distortion constraint is met within
    tol or found inactive; on a linear segment of the curve, where no
    single slope hits dd, the two bracketing kernels are mixed exactly.
    Raises InfeasibleError below the distortion floor.
    """
    dd = check_nonnegative_real(dd, "dd")
    tol = check_positive_real(tol, "tol")
    d_floor = src.min_distortion()
    if dd < d_floor - tol:
        raise InfeasibleError(
            f"distortion {dd:.6g} is below the floor {d_floor:.6g}")
    d_zero = src.zero_rate_distortion()
    if dd >= d_zero - 1e-15:
        # constraint inactive: one letter serves every source point
        return RDPoint(rate=0.0, kernel=_zero_rate_kernel(src))

    p = src.source_pmf
    mu_lo, k_lo = 0.0, _ba_slope(src, 0.0)
    mu_hi = 1.0 / max(float(np.ptp(src.distortion)), 1e-12)
    cap = _slope_cap(src)
    warm = None
    while True:
        k_hi = _ba_slope(src, mu_hi, warm)
        warm = p @ k_hi
        if _kernel_stats(src, k_hi)[1] <= dd or mu_hi >= cap:
            break
        mu_lo, k_lo = mu_hi, k_hi
        mu_hi *= 2.0
    if _kernel_stats(src, k_hi)[1] > dd:
        # dd pinched against the floor; the capped kernel is the floor law
        return RDPoint(rate=_kernel_stats(src, k_hi)[0], kernel=k_hi)

    for _ in range(200):
        d_lo = _kernel_stats(src, k_lo)[1]
        d_hi = _kernel_stats(src, k_hi)[1]
        if abs(d_hi - dd) <= tol:
            return RDPoint(rate=_kernel_stats(src, k_hi)[0], kernel=k_hi)
        if abs(d_lo - dd) <= tol:
            return RDPoint(rate=_kernel_stats(src, k_lo)[0], kernel=k_lo)
        if mu_hi - mu_lo <= 1e-13 * max(1.0, mu_hi):
            break
        mu_mid = 0.5 * (mu_lo + mu_hi)
        k_mid = _ba_slope(src, mu_mid, 0.5 * (p @ k_lo + p @ k_hi))
        if _kernel_stats(src, k_mid)[1] > dd:
            mu_lo, k_lo = mu_mid, k_mid
        else:
            mu_hi, k_hi = mu_mid, k_mid
    # linear segment: distortion is linear in the kernel, so mix exactly
    d_lo = _kernel_stats(src, k_lo)[1]
    d_hi = _kernel_stats(src, k_hi)[1]
    theta = 0.0 if d_lo == d_hi else (d_lo - dd) / (d_lo - d_hi)
    kernel = _mix_kernels(k_lo, k_hi, float(np.clip(theta, 0.0, 1.0)))
    return RDPoint(rate=_kernel_stats(src, kernel)[0], kernel=kernel)


def distortion_rate(src: SourceModel, r: float, tol: float = 1e-9) -> float:
    """Least mean distortion within a rate budget of r bits per symbol."""
    r = check_nonnegative_real(r, "r")
    tol = check_positive_real(tol, "tol")
    if r == 0.0:
        return src.zero_rate_distortion()
    cap = _slope_cap(src)
    k_cap = _ba_slope(src, cap)
    r_cap = _kernel_stats(src, k_cap)[0]
    if r >= r_cap - tol:
        return _kernel_stats(src, k_cap)[1]

    p = src.source_pmf
    mu_lo, k_lo = 0.0, _ba_slope(src, 0.0)
    mu_hi, k_hi = cap, k_cap
    for _ in range(200):
        r_lo = _kernel_stats(src, k_lo)[0]
        r_hi = _kernel_stats(src, k_hi)[0]
        if abs(r_lo - r) <= tol:
            return _kernel_stats(src, k_lo)[1]
        if abs(r_hi - r) <= tol:
            return _kernel_stats(src, k_hi)[1]
        if mu_hi - mu_lo <= 1e-13 * max(1.0, mu_hi):
            break
        mu_mid = 0.5 * (mu_lo + mu_hi)
        k_mid = _ba_slope(src, mu_mid, 0.5 * (p @ k_lo + p @ k_hi))
        if _kernel_stats(src, k_mid)[0] < r:
            mu_lo, k_lo = mu_mid, k_mid
        else:
            mu_hi, k_hi = mu_mid, k_mid
    # rate jumps across a linear segment: mix kernels and bisect the mix
    lo, hi = 0.0, 1.0
    for _ in range(100):
        theta = 0.5 * (lo + hi)
        rt = _kernel_stats(src, _mix_kernels(k_lo, k_hi, theta))[0]
        if abs(rt - r) <= tol:
            break
        if rt < r:
            lo = theta
        else:
            hi = theta
    return _kernel_stats(src, _mix_kernels(k_lo, k_hi, 0.5 * (lo + hi)))[1]


@dataclass(frozen=True)
class EnergyDistortionCurve:
    """Pareto frontier of (energy floor, distortion) pairs.

    Non-degenerate curves have strictly increasing energies and
    non-decreasing distortions; a degenerate curve is a single point,
    which happens whenever the energy coordinate cannot move (constant
    harvester) or moving it buys no distortion.
    """

    points: tuple
    degenerate: bool
    kappa: float

    def __post_init__(self):
        pts = tuple((float(b), float(dd)) for b, dd in self.points)
        if not pts:
            raise InvalidParameterError("curve must contain at least one point")
        b = np.array([p[0] for p in pts])
        dd = np.array([p[1] for p in pts])
        if not (np.all(np.isfinite(b)) and np.all(np.isfinite(dd))):
            raise InvalidParameterError("curve points must be finite")
        if len(pts) > 1:
            if np.any(np.diff(b) <= 0):
                raise InvalidParameterError("energies must be strictly increasing")
            if np.any(np.diff(dd) < -1e-9):
                raise InvalidParameterError("distortions must be non-decreasing")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "degenerate", bool(self.degenerate) or len(pts) == 1)
        object.__setattr__(self, "kappa", float(self.kappa))

    def as_arrays(self):
        pts = np.asarray(self.points, dtype=float)
        return pts[:, 0], pts[:, 1]

    def convex_ok(self, tol: float = 1e-6) -> bool:
        """Midpoint test: every interior point sits on or below its chord."""
        b, dd = self.as_arrays()
        for i in range(1, len(b) - 1):
            t = (b[i] - b[i - 1]) / (b[i + 1] - b[i - 1])
            chord = (1 - t) * dd[i - 1] + t * dd[i + 1]
            if dd[i] > chord + tol:
                return False
        return True

    def to_csv(self, path=None):
        lines = ["b,distortion"]
        lines += [f"{b!r},{dd!r}" for b, dd in self.points]
        text = "\n".join(lines) + "\n"
        if path is None:
            return text
        with open(path, "w") as fh:
            fh.write(text)
        return None


def energy_distortion_curve(src: SourceModel, ch: DiscreteChannel, beta,
                            kappa: float = 1.0, n_points: int = 33,
                            tol: float = 1e-9) -> EnergyDistortionCurve:
    """Best distortion at each energy floor under separated coding.

    Each channel use both carries the code and feeds the harvester, so
    the floor b prices the rate through the capacity-energy function and
    the rate prices distortion through the source's distortion-rate
    function, scaled by kappa source symbols per channel use.
    """
    kappa = check_positive_real(kappa, "kappa")
    n_points = check_positive_int(n_points, "n_points")
    fvec = _energy_vector(ch, beta)
    p_cap = unconstrained_capacity(ch).p.p
    b_lo = float(fvec @ p_cap)  # below this the floor is free
    b_hi = float(fvec.max())
    if b_hi - b_lo <= max(1e-12, 1e-9 * abs(b_hi)):
        dd = distortion_rate(src, unconstrained_capacity(ch).rate / kappa)
        return EnergyDistortionCurve(points=((b_hi, dd),), degenerate=True,
                                     kappa=kappa)
    bs = np.linspace(b_lo, b_hi, n_points)
    raw = []
    for b in bs:
        rate = capacity_energy(ch, fvec, float(b), tol=tol).rate
        raw.append((float(b), distortion_rate(src, rate / kappa)))
    # Pareto prune: for each distortion level keep the largest energy
    pts = []
    for b, dd in raw:
        while pts and dd <= pts[-1][1] + 1e-12:
            pts.pop()
        pts.append((b, dd))
    return EnergyDistortionCurve(points=tuple(pts), degenerate=len(pts) == 1,
                                 kappa=kappa)


def l1_project(pt, curve: EnergyDistortionCurve):
    """Closest curve point in l1 distance, ties toward smaller energy.

    The polyline is densified at a thousandth of its bounding-box
    diagonal and refined tenfold around the incumbent; the axis-crossing
    parameters, where the l1 distance along a segment can kink, are also
    checked exactly so that on-curve points project to themselves.
    """
    b0, d0 = float(pt[0]), float(pt[1])
    b, dd = curve.as_arrays()
    if b.size == 1:
        return abs(b0 - b[0]) + abs(d0 - dd[0]), (float(b[0]), float(dd[0]))
    diag = float(np.hypot(np.ptp(b), np.ptp(dd)))
    step = max(diag * 1e-3, 1e-12)
    best = [np.inf, float(b[0]), float(dd[0])]  # dist, proj b, proj dd

    def consider(seg, ts):
        ts = np.clip(np.asarray(ts, dtype=float), 0.0, 1.0)
        bs = b[seg] + ts * (b[seg + 1] - b[seg])
        ds = dd[seg] + ts * (dd[seg + 1] - dd[seg])
        dist = np.abs(bs - b0) + np.abs(ds - d0)
        i = int(np.lexsort((bs, dist))[0])
        if (dist[i], bs[i]) < (best[0], best[1]):
            best[0], best[1], best[2] = float(dist[i]), float(bs[i]), float(ds[i])
        return ts[i]

    for seg in range(b.size - 1):
        db = b[seg + 1] - b[seg]
        dv = dd[seg + 1] - dd[seg]
        seg_len = float(np.hypot(db, dv))
        n = max(2, int(np.ceil(seg_len / step)) + 1)
        t_star = consider(seg, np.linspace(0.0, 1.0, n))
        # the distance is piecewise linear in t: its minimum sits at an
        # endpoint or where the segment crosses an axis through pt
        crossings = [0.0, 1.0]
        if db != 0.0:
            crossings.append((b0 - b[seg]) / db)
        if dv != 0.0:
            crossings.append((d0 - dd[seg]) / dv)
        consider(seg, crossings)
        dt = step / max(seg_len, 1e-300)
        consider(seg, np.linspace(max(0.0, t_star - dt),
                                  min(1.0, t_star + dt), 21))
    return best[0], (best[1], best[2])


def _densify_curve(curve: EnergyDistortionCurve):
    b, dd = curve.as_arrays()
    if b.size == 1:
        return np.column_stack([b, dd])
    diag = float(np.hypot(np.ptp(b), np.ptp(dd)))
    step = max(diag * 1e-3, 1e-12)
    out = []
    for seg in range(b.size - 1):
        seg_len = float(np.hypot(b[seg + 1] - b[seg], dd[seg + 1] - dd[seg]))
        n = max(2, int(np.ceil(seg_len / step)) + 1)
        ts = np.linspace(0.0, 1.0, n)[:-1]
        out.append(np.column_stack([b[seg] + ts * (b[seg + 1] - b[seg]),
                                    dd[seg] + ts * (dd[seg + 1] - dd[seg])]))
    out.append(np.array([[b[-1], dd[-1]]]))
    return np.vstack(out)


def jscc_loss(true_pair, est_pair, src: SourceModel, ch: DiscreteChannel,
              kappa: float = 1.0, n_points: int = 65,
              project: str = "est_onto_true") -> float:
    """Worst l1 gap between the estimated frontier and the true one.

    Pairs are (harvester, distortion matrix).  The supremum runs over
    the estimated curve, each point projected onto the true curve; the
    reverse direction is available via project="true_onto_est".
    """
    if project not in ("est_onto_true", "true_onto_est"):
        raise InvalidParameterError(f"unknown projection direction {project!r}")
    beta_true, d_true = true_pair
    beta_est, d_est = est_pair
    curve_true = energy_distortion_curve(src.with_distortion(d_true), ch,
                                         beta_true, kappa, n_points)
    curve_est = energy_distortion_curve(src.with_distortion(d_est), ch,
                                        beta_est, kappa, n_points)
    src_curve, dst_curve = ((curve_est, curve_true)
                            if project == "est_onto_true"
                            else (curve_true, curve_est))
    worst = 0.0
    for b, dd in _densify_curve(src_curve):
        dist, _ = l1_project((b, dd), dst_curve)
        if dist > worst:
            worst = dist
    return worst


@dataclass(frozen=True)
class CounterexampleReport:
    """Per-m frontier losses for the constant-harvester construction."""

    m_values: tuple
    losses: tuple
    predicted_floor: float
    rel_variation: float


def counterexample_scenario(m_list, src: SourceModel | None = None,
                            cls: SmoothnessClass | None = None,
                            level: float = 1.0, amplitude_scale: float = 0.5,
                            kappa: float = 0.25, n_out: int = 24,
                            concentration_scale: float = 6.25,
                            n_points: int = 21) -> CounterexampleReport:
    """Estimation loss that no amount of sampling can shrink.

    The harvester is constant, so its frontier is one point at full
    capacity.  The estimate agrees at every sample yet dips between
    lattice points; on a channel whose information lives off-lattice,
    demanding the top energy forces the input onto the lattice and the
    rate collapses, so the estimated frontier acquires a far-away end
    whose projection gap stays bounded away from zero as m grows.

    The channel's noise concentration scales with the lattice pitch so
    the family looks the same at every m, and the default kappa keeps
    full capacity on the flat part of the distortion-rate curve; both
    choices pin the gap near zero_rate - floor distortion, independent
    of m.
    """
    from .channel import make_adversarial_mod

    m_list = [check_positive_int(m, "m") for m in m_list]
    level = check_positive_real(level, "level")
    if src is None:
        src = default_counterexample_source()
    if cls is None:
        # first-order class: the bump amplitude, and with it the energy
        # sliver the solver must resolve, shrinks only linearly in m
        cls = SmoothnessClass(order=1, k_bound=1.0)
    d = src.distortion
    beta_true = GridFunction.constant(level)
    losses = []
    for m in m_list:
        ch = make_adversarial_mod(m, 2 * (m - 1) + 1, n_out,
                                  concentration_scale * (m - 1))
        if amplitude_scale == 0.0:
            beta_est = GridFunction.constant(level)
        else:
            f = bump_function(m, cls, amplitude_scale=amplitude_scale).fn
            beta_est = GridFunction(level * (1.0 - f.values))
        losses.append(jscc_loss((beta_true, d), (beta_est, d), src, ch, kappa,
                                n_points=n_points))
    arr = np.array(losses)
    # the predictable part: zero-rate distortion minus full-rate distortion
    ch0 = make_adversarial_mod(m_list[-1], 2 * (m_list[-1] - 1) + 1, n_out,
                               concentration_scale * (m_list[-1] - 1))
    dd_best = distortion_rate(src, unconstrained_capacity(ch0).rate / kappa)
    floor = src.zero_rate_distortion() - dd_best
    rel = float(np.ptp(arr) / arr.min()) if arr.min() > 0 else float("inf")
    return CounterexampleReport(m_values=tuple(m_list),
                                losses=tuple(float(v) for v in arr),
                                predicted_floor=float(floor),
                                rel_variation=rel)


def default_counterexample_source() -> SourceModel:
    """Uniform source, three reproduction points, squared-error columns."""
    grid = np.linspace(0.0, 1.0, 17)
    centers = (0.2, 0.5, 0.8)
    d = (grid[:, None] - np.array(centers)[None, :]) ** 2
    return SourceModel(grid, np.full(grid.size, 1.0 / grid.size), centers, d)


def sampled_distortion(src: SourceModel, cls: SmoothnessClass, m_list,
                       mode: str = "noiseless", rates=None, columns=None,
                       noise_sigma: float = 0.05, trials: int = 100,
                       seed: int = 0, kernel: KernelSpec | None = None,
                       threads: int = 1):
    """Distortion-rate gap when the distortion columns come from samples.

    Every reproduction letter's column is sampled on the m-point design,
    reconstructed (exact spline when noiseless, local polynomial when
    noisy), and re-evaluated on the source grid; the loss at each rate
    budget is the worst |D(r) - D_hat(r)| across the budgets.  Pass the
    underlying column functions when they are known; the default linear
    interpolant of the matrix is only as smooth as the source grid is
    fine.  Returns the estimated source at the largest m together with
    the report.
    """
    if mode not in ("noiseless", "noisy"):
        raise InvalidParameterError(f"mode must be 'noiseless' or 'noisy', got {mode!r}")
    m_list = [check_positive_int(m, "m") for m in m_list]
    if rates is None:
        h = src.entropy()
        rates = [0.25 * h, 0.5 * h, 0.75 * h]
    rates = [check_nonnegative_real(r, "rate") for r in rates]
    if columns is None:
        columns = [GridFunction.from_callable(
            lambda x, j=j: np.interp(x, src.s_grid, src.distortion[:, j]))
            for j in range(src.n_repro)]
    if len(columns) != src.n_repro:
        raise InvalidParameterError("one column function per reproduction letter")
    d_true = [distortion_rate(src, r) for r in rates]
    key = "delta_d" if mode == "noiseless" else "delta_d_bar"

    def estimate(m, trial):
        cols = []
        for j in range(src.n_repro):
            if mode == "noiseless":
                s = sample_regular(columns[j], m, 0.0)
                g = spline_interpolate(s, cls)
            else:
                s = sample_regular(columns[j], m, noise_sigma,
                                   seed=derive_seed(seed, m, trial * src.n_repro + j))
                g = local_poly_fit(s, cls, kernel)
            # estimated distortion must stay a valid cost matrix
            cols.append(np.maximum(g(src.s_grid), 0.0))
        return src.with_distortion(np.column_stack(cols))

    def gap(src_hat):
        return max(abs(d_true[i] - distortion_rate(src_hat, r))
                   for i, r in enumerate(rates))

    losses, failures = [], []
    est_model = src
    for m in m_list:
        try:
            if mode == "noiseless":
                est_model = estimate(m, 0)
                losses.append(gap(est_model))
            else:
                outs = _map_ordered(lambda t: gap(estimate(m, t)),
                                    list(range(trials)), threads)
                est_model = estimate(m, 0)
                losses.append(float(np.mean(outs)))
        except (InfeasibleError, NumericalError) as exc:
            losses.append(float("nan"))
            failures.append((m, f"{type(exc).__name__}: {exc}"))

    config = {"op": "sampled_distortion",
              "s_grid": src.s_grid.size, "pmf": list(map(float, src.source_pmf)),
              "repro": list(map(str, src.repro_alphabet)),
              "columns": [c.digest() for c in columns],
              "cls": {"order": cls.order, "k_bound": cls.k_bound},
              "rates": list(map(float, rates)), "m_list": m_list, "mode": mode,
              "noise_sigma": noise_sigma, "trials": trials, "seed": seed}
    report = _assemble_report(m_list, {key: losses}, config, failures=failures)
    return est_model, report
