"""Energy-harvesting functions on [0, 1]: smoothness balls, grid functions,
regular sampling, and the rough-bump construction used for lower bounds.

Functions live on a shared dense grid of N equispaced nodes and are
evaluated elsewhere by linear interpolation.  A smoothness class is the
ball of functions whose derivatives of every order k = 0..order are
sup-bounded by the same constant, which is the hypothesis class the
reconstruction guarantees are stated for.
"""

from __future__ import annotations

import csv
import hashlib
import io
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy.polynomial import polynomial as npoly

from .validation import (
    InvalidParameterError,
    check_nonnegative_real,
    check_positive_int,
    check_positive_real,
    check_unit_interval_grid,
)

DENSE_GRID_SIZE = 2049


@dataclass(frozen=True)
class SmoothnessClass:
    """Ball of order-times differentiable functions on [0, 1].

    Membership means sup |f^(k)| <= k_bound for every k = 0..order.  Note
    the k = 0 case: the function itself is bounded by k_bound too.
    """

    order: int
    k_bound: float

    def __post_init__(self):
        check_positive_int(self.order, "order")
        check_positive_real(self.k_bound, "k_bound")


@dataclass(frozen=True)
class GridFunction:
    """Real function represented by values on equispaced nodes j/(N-1)."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size < 2:
            raise InvalidParameterError("values must be a 1-d array with at least 2 nodes")
        if not np.all(np.isfinite(v)):
            raise InvalidParameterError("values contain non-finite entries")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def grid_size(self) -> int:
        return self.values.size

    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.grid_size)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if np.any(x < -1e-12) or np.any(x > 1 + 1e-12):
            raise InvalidParameterError("evaluation points must lie in [0, 1]")
        return np.interp(np.clip(x, 0.0, 1.0), self.nodes(), self.values)

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.values).tobytes())
        return h.hexdigest()

    @staticmethod
    def from_callable(fn, grid_size: int = DENSE_GRID_SIZE) -> "GridFunction":
        check_positive_int(grid_size, "grid_size")
        x = np.linspace(0.0, 1.0, grid_size)
        return GridFunction(np.asarray(fn(x), dtype=float))

    @staticmethod
    def constant(value: float, grid_size: int = DENSE_GRID_SIZE) -> "GridFunction":
        return GridFunction(np.full(grid_size, float(value)))


@dataclass(frozen=True)
class SampledFunction:
    """Noisy or exact observations of a function on the regular design
    x_i = i/(m-1), i = 0..m-1."""

    xs: np.ndarray
    values: np.ndarray
    noise_sigma: float = 0.0
    seed: int | None = None

    def __post_init__(self):
        xs = check_unit_interval_grid(self.xs, "xs")
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != xs.shape:
            raise InvalidParameterError("xs and values must have the same shape")
        if not np.all(np.isfinite(vals)):
            raise InvalidParameterError("values contain non-finite entries")
        m = xs.size
        ref = np.linspace(0.0, 1.0, m)
        if not np.allclose(xs, ref, atol=1e-9, rtol=0.0):
            raise InvalidParameterError("xs must be the regular design i/(m-1) on [0, 1]")
        check_nonnegative_real(self.noise_sigma, "noise_sigma")
        xs = xs.copy()
        vals = vals.copy()
        xs.setflags(write=False)
        vals.setflags(write=False)
        object.__setattr__(self, "xs", ref.copy())
        object.__setattr__(self, "values", vals)

    @property
    def m(self) -> int:
        return self.xs.size


def lq_norm(f: GridFunction, q: float) -> float:
    """L_q norm on [0, 1] by trapezoid quadrature on the grid; q = inf
    gives the max over nodes."""
    if np.isinf(q):
        return float(np.max(np.abs(f.values)))
    q = float(q)
    if q < 1:
        raise InvalidParameterError(f"q must be >= 1 or inf, got {q}")
    x = f.nodes()
    return float(np.trapezoid(np.abs(f.values) ** q, x) ** (1.0 / q))


def sample_regular(
    f: GridFunction,
    m: int,
    noise_sigma: float = 0.0,
    seed: int | None = 0,
    noise: str = "gaussian",
) -> SampledFunction:
    """Observe f at the m-point regular design, optionally with iid noise.

    Identical (m, noise_sigma, seed) always reproduce the same draw.
    """
    m = check_positive_int(m, "m")
    if m < 2:
        raise InvalidParameterError("m must be at least 2")
    sigma = check_nonnegative_real(noise_sigma, "noise_sigma")
    xs = np.linspace(0.0, 1.0, m)
    vals = f(xs)
    if sigma > 0:
        rng = np.random.default_rng(seed)
        if noise == "gaussian":
            vals = vals + sigma * rng.standard_normal(m)
        elif noise == "uniform":
            # centered uniform with matching standard deviation
            half = sigma * np.sqrt(3.0)
            vals = vals + rng.uniform(-half, half, m)
        else:
            raise InvalidParameterError(f"unknown noise law {noise!r}")
    return SampledFunction(xs=xs, values=vals, noise_sigma=sigma, seed=seed)


class BumpConstruction(NamedTuple):
    fn: GridFunction
    amplitude: float
    l1_constant: float  # measured ||f||_1 * m^order


def _phi_polynomial(order: int) -> np.ndarray:
    """Coefficients of phi(u) = (u(1-u))^(order+1) / (1/4)^(order+1)."""
    base = npoly.polypow([0.0, 1.0, -1.0], order + 1)
    return np.asarray(base) * 4.0 ** (order + 1)


def bump_function(m: int, cls: SmoothnessClass, amplitude_scale: float = 1.0,
                  grid_size: int = DENSE_GRID_SIZE) -> BumpConstruction:
    """Periodic bump vanishing on the m-point design lattice.

    f(x) = A * phi((m-1) x mod 1) with phi(u) = (u(1-u))^(order+1),
    peak-normalized.  A is the largest amplitude (times amplitude_scale
    <= 1) keeping every derivative 0..order within the class bound, so
    the result is a certified class member that the design cannot see.
    """
    m = check_positive_int(m, "m")
    if m < 2:
        raise InvalidParameterError("m must be at least 2")
    scale = check_positive_real(amplitude_scale, "amplitude_scale")
    if scale > 1:
        raise InvalidParameterError("amplitude_scale must be <= 1 to certify membership")
    lam, kk = cls.order, cls.k_bound
    coef = _phi_polynomial(lam)
    u = np.linspace(0.0, 1.0, 8193)
    # sup |phi^(k)| on [0,1] for k = 0..order, with the chain-rule factor
    # (m-1)^k and target decay (m-1)^-order folded into the ratio
    worst = 0.0
    c = coef
    for k in range(lam + 1):
        mk = float(np.max(np.abs(npoly.polyval(u, c))))
        worst = max(worst, (m - 1.0) ** (k - lam) * mk)
        c = npoly.polyder(c)
    amp = scale * kk / worst
    x = np.linspace(0.0, 1.0, grid_size)
    frac = np.mod((m - 1.0) * x, 1.0)
    fn = GridFunction(amp * (m - 1.0) ** (-lam) * npoly.polyval(frac, coef))
    c_meas = lq_norm(fn, 1.0) * float(m) ** lam
    return BumpConstruction(fn=fn, amplitude=amp * (m - 1.0) ** (-lam), l1_constant=c_meas)


@dataclass(frozen=True)
class MembershipReport:
    ok: bool
    order_maxima: tuple  # estimated sup |f^(k)| for k = 0..order
    bound: float
    slack: float

    def __bool__(self) -> bool:
        return self.ok


def membership_check(f: GridFunction, cls: SmoothnessClass, slack: float = 0.05) -> MembershipReport:
    """Finite-difference test that f lies in the class ball.

    Derivatives are estimated by iterated central differences on the
    grid, so the verdict is approximate; slack is the allowed relative
    overshoot of the bound.  Requires a grid fine enough to resolve
    order derivatives (N >= 10*(order+1)).
    """
    check_nonnegative_real(slack, "slack")
    n = f.grid_size
    if n < 10 * (cls.order + 1):
        raise InvalidParameterError(
            f"grid size {n} too coarse to estimate derivatives of order {cls.order}")
    dx = 1.0 / (n - 1)
    maxima = [float(np.max(np.abs(f.values)))]
    d = np.asarray(f.values, dtype=float)
    for _ in range(cls.order):
        d = np.gradient(d, dx)
        maxima.append(float(np.max(np.abs(d))))
    ok = all(mk <= cls.k_bound * (1.0 + slack) for mk in maxima)
    return MembershipReport(ok=ok, order_maxima=tuple(maxima), bound=cls.k_bound, slack=slack)


def write_samples_csv(s: SampledFunction, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# noise_sigma={s.noise_sigma!r} seed={s.seed!r}\n")
        w = csv.writer(fh)
        w.writerow(["x", "value"])
        for x, v in zip(s.xs, s.values):
            w.writerow([repr(float(x)), repr(float(v))])


def read_samples_csv(path, noise_sigma: float | None = None) -> SampledFunction:
    """Load samples from a two-column x,value CSV.

    The x column must already be the regular design; external data on
    other designs is rejected rather than silently resampled.  A header
    comment written by write_samples_csv restores noise_sigma/seed;
    noise_sigma overrides for external files.
    """
    sigma, seed = 0.0, None
    with open(path, newline="") as fh:
        text = fh.read()
    lines = [ln for ln in io.StringIO(text)]
    if lines and lines[0].startswith("#"):
        head = lines[0][1:].strip()
        for tok in head.split():
            if tok.startswith("noise_sigma="):
                sigma = float(tok.split("=", 1)[1])
            elif tok.startswith("seed=") and tok.split("=", 1)[1] != "None":
                seed = int(tok.split("=", 1)[1])
        lines = lines[1:]
    rows = list(csv.reader(lines))
    if not rows or [c.strip() for c in rows[0][:2]] != ["x", "value"]:
        raise InvalidParameterError(f"{path}: expected header 'x,value'")
    data = np.array([[float(r[0]), float(r[1])] for r in rows[1:] if r], dtype=float)
    if data.size == 0:
        raise InvalidParameterError(f"{path}: no data rows")
    if noise_sigma is not None:
        sigma = check_nonnegative_real(noise_sigma, "noise_sigma")
    return SampledFunction(xs=data[:, 0], values=data[:, 1], noise_sigma=sigma, seed=seed)


def write_grid_csv(f: GridFunction, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "value"])
        for x, v in zip(f.nodes(), f.values):
            w.writerow([repr(float(x)), repr(float(v))])


def read_grid_csv(path) -> GridFunction:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r and not r[0].lstrip().startswith("#")]
    if not rows or [c.strip() for c in rows[0][:2]] != ["x", "value"]:
        raise InvalidParameterError(f"{path}: expected header 'x,value'")
    data = np.array([[float(r[0]), float(r[1])] for r in rows[1:]], dtype=float)
    x = check_unit_interval_grid(data[:, 0], "x")
    ref = np.linspace(0.0, 1.0, x.size)
    if not np.allclose(x, ref, atol=1e-9, rtol=0.0):
        raise InvalidParameterError(f"{path}: grid functions need equispaced nodes on [0, 1]")
    return GridFunction(data[:, 1])
