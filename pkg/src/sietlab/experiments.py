"""Loss sweeps across sample counts, slope fits, and report emission.

Each sweep compares a solver value computed from the true harvesting
function against the value computed from a reconstruction (certified
envelope for noiseless samples, local polynomial fit for noisy ones),
per sample count m.  Decay rates are judged by least-squares slopes on
log-log data with bootstrap confidence intervals.  Reports serialize to
CSV/JSON plus gnuplot-ready .dat files, reproducible byte for byte from
the same configuration.
"""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .capacity import capacity_energy, energy_capacity
from .channel import DiscreteChannel
from .funcspace import GridFunction, SmoothnessClass, bump_function, sample_regular
from .reconstruct import KernelSpec, local_poly_fit, lower_envelope
from .validation import (
    InfeasibleError,
    InsufficientDataError,
    InvalidParameterError,
    NumericalError,
    check_positive_int,
)

LOSS_FLOOR = 1e-12


def config_digest(config: dict) -> str:
    """Stable hash of a configuration mapping (sorted-key JSON)."""
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()


def derive_seed(root: int, m: int, trial: int) -> int:
    """Deterministic per-(m, trial) seed, independent of execution order."""
    ss = np.random.SeedSequence(entropy=root, spawn_key=(m, trial))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


class SlopeFit(NamedTuple):
    slope: float
    ci: tuple  # (low, high), 95% pairs bootstrap


def fit_slope(m_values, losses, n_boot: int = 1000, seed: int = 0) -> SlopeFit:
    """Least-squares slope of log loss against log m.

    Points at or below the numerical floor (or non-finite) are excluded;
    fewer than 4 usable points is an error rather than a silent fit.
    The confidence interval is a 95% pairs bootstrap.
    """
    m_arr = np.asarray(m_values, dtype=float)
    l_arr = np.asarray(losses, dtype=float)
    if m_arr.shape != l_arr.shape:
        raise InvalidParameterError("m_values and losses must have equal length")
    use = np.isfinite(l_arr) & (l_arr > LOSS_FLOOR)
    if int(use.sum()) < 4:
        raise InsufficientDataError(
            f"need at least 4 losses above {LOSS_FLOOR:g}, have {int(use.sum())}")
    x = np.log(m_arr[use])
    y = np.log(l_arr[use])
    slope = float(np.polyfit(x, y, 1)[0])
    rng = np.random.default_rng(seed)
    n = x.size
    boots = []
    for _ in range(n_boot):
        idx = rng.integers(0, n, n)
        xb = x[idx]
        if np.ptp(xb) == 0.0:
            continue  # degenerate resample, no slope
        boots.append(float(np.polyfit(xb, y[idx], 1)[0]))
    if boots:
        lo, hi = np.percentile(boots, [2.5, 97.5])
    else:
        lo = hi = slope
    return SlopeFit(slope=slope, ci=(float(lo), float(hi)))


@dataclass(frozen=True)
class LossReport:
    """Per-m losses keyed by name, with fitted log-log slopes.

    Losses are nonnegative; NaN marks a per-m solver failure (recorded in
    failures, never fatal).  Slopes are fitted only over points above the
    numerical floor; keys without enough usable points carry slope NaN.
    """

    m_values: tuple
    losses: dict
    fitted_slope: dict
    slope_ci: dict
    config_digest: str
    flags: tuple = ()
    failures: tuple = ()

    def loss(self, key: str) -> np.ndarray:
        return np.asarray(self.losses[key], dtype=float)


def _assemble_report(m_list, losses: dict, config: dict, flags=(), failures=(),
                     slope_seed: int = 0) -> LossReport:
    slopes, cis = {}, {}
    for key, vals in losses.items():
        try:
            fit = fit_slope(m_list, vals, seed=slope_seed)
            slopes[key] = fit.slope
            cis[key] = fit.ci
        except InsufficientDataError:
            slopes[key] = float("nan")
            cis[key] = (float("nan"), float("nan"))
    return LossReport(m_values=tuple(int(m) for m in m_list),
                      losses={k: tuple(float(v) for v in vs) for k, vs in losses.items()},
                      fitted_slope=slopes, slope_ci=cis,
                      config_digest=config_digest(config),
                      flags=tuple(flags), failures=tuple(failures))


def _map_ordered(fn, tasks, threads: int):
    """Evaluate fn over tasks, results in task order regardless of workers."""
    if threads <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, tasks))


def _check_mode(mode: str):
    if mode not in ("noiseless", "noisy"):
        raise InvalidParameterError(f"mode must be 'noiseless' or 'noisy', got {mode!r}")


def energy_loss_sweep(ch: DiscreteChannel, beta: GridFunction, cls: SmoothnessClass,
                      r: float, m_list, mode: str = "noiseless",
                      noise_sigma: float = 0.05, trials: int = 200, seed: int = 0,
                      kernel: KernelSpec | None = None, threads: int = 1) -> LossReport:
    """Energy delivered at rate r: true function versus reconstruction.

    Noiseless mode charges the certified envelope (worst function still
    consistent with the samples), so the loss is the price of designing
    for the whole uncertainty set.  Noisy mode Monte-Carlo averages the
    absolute value gap against local polynomial estimates.
    """
    _check_mode(mode)
    m_list = [check_positive_int(m, "m") for m in m_list]
    r = float(r)
    b_true = energy_capacity(ch, beta, r).energy
    key = "delta_e" if mode == "noiseless" else "delta_e_bar"
    losses, failures = [], []

    if mode == "noiseless":
        def one(m):
            env = lower_envelope(sample_regular(beta, m, 0.0), cls)
            return b_true - energy_capacity(ch, env.lower, r).energy
    else:
        def one(m):
            def one_trial(t):
                s = sample_regular(beta, m, noise_sigma, seed=derive_seed(seed, m, t))
                bhat = local_poly_fit(s, cls, kernel)
                return abs(b_true - energy_capacity(ch, bhat, r).energy)
            return float(np.mean(_map_ordered(one_trial, list(range(trials)), threads)))

    for m in m_list:
        try:
            losses.append(float(one(m)))
        except (InfeasibleError, NumericalError) as exc:
            losses.append(float("nan"))
            failures.append((m, f"{type(exc).__name__}: {exc}"))

    config = {"op": "energy_loss_sweep", "channel": ch.digest(), "beta": beta.digest(),
              "cls": {"order": cls.order, "k_bound": cls.k_bound}, "r": r,
              "m_list": m_list, "mode": mode, "noise_sigma": noise_sigma,
              "trials": trials, "seed": seed,
              "kernel": (kernel or KernelSpec()).kind if mode == "noisy" else None}
    return _assemble_report(m_list, {key: losses}, config, failures=failures)


def energy_loss_lower_bound(ch: DiscreteChannel, cls: SmoothnessClass, r: float,
                            m_list, level: float = 1.0,
                            amplitude_scale: float = 0.5) -> LossReport:
    """Matching-order lower bound: constant function versus its bump twin.

    The estimate agrees with the constant at every sample point yet dips
    between them by the largest amount the class allows, so the value gap
    it causes cannot be improved by any reconstruction.  Valid when the
    rate-r achiever loads every letter; otherwise the run is flagged as
    outside the hypotheses rather than rejected.
    """
    m_list = [check_positive_int(m, "m") for m in m_list]
    r = float(r)
    beta = GridFunction.constant(level)
    point = energy_capacity(ch, beta, r)
    flags = []
    if float(point.p.p.min()) < 1e-8:
        flags.append("outside_hypotheses: rate-r achiever vanishes on some letters")
    losses, failures = [], []
    for m in m_list:
        try:
            f = bump_function(m, cls, amplitude_scale=amplitude_scale).fn
            bhat = GridFunction(level * (1.0 - f.values))
            losses.append(abs(point.energy - energy_capacity(ch, bhat, r).energy))
        except (InfeasibleError, NumericalError) as exc:
            losses.append(float("nan"))
            failures.append((m, f"{type(exc).__name__}: {exc}"))
    config = {"op": "energy_loss_lower_bound", "channel": ch.digest(),
              "cls": {"order": cls.order, "k_bound": cls.k_bound}, "r": r,
              "m_list": m_list, "level": level, "amplitude_scale": amplitude_scale}
    return _assemble_report(m_list, {"delta_e_prime": losses}, config,
                            flags=flags, failures=failures)


def info_loss_sweep(ch: DiscreteChannel, beta: GridFunction, cls: SmoothnessClass,
                    b: float, m_list, mode: str = "noiseless",
                    noise_sigma: float = 0.05, trials: int = 200, seed: int = 0,
                    kernel: KernelSpec | None = None, threads: int = 1) -> LossReport:
    """Rate at energy floor b: true function versus reconstruction.

    When the reconstructed problem is infeasible at b, the whole true
    rate is charged as the loss: a design that cannot even promise b
    delivers no guaranteed rate.  At the top of the energy range the
    loss need not vanish; the report simply carries the values.
    """
    _check_mode(mode)
    m_list = [check_positive_int(m, "m") for m in m_list]
    b = float(b)
    c_true = capacity_energy(ch, beta, b).rate
    key = "delta_i" if mode == "noiseless" else "delta_i_bar"
    losses, failures = [], []

    if mode == "noiseless":
        def one(m):
            env = lower_envelope(sample_regular(beta, m, 0.0), cls)
            try:
                return c_true - capacity_energy(ch, env.lower, b).rate
            except InfeasibleError:
                return c_true
    else:
        def one(m):
            def one_trial(t):
                s = sample_regular(beta, m, noise_sigma, seed=derive_seed(seed, m, t))
                bhat = local_poly_fit(s, cls, kernel)
                try:
                    return abs(c_true - capacity_energy(ch, bhat, b).rate)
                except InfeasibleError:
                    return c_true
            return float(np.mean(_map_ordered(one_trial, list(range(trials)), threads)))

    for m in m_list:
        try:
            losses.append(float(one(m)))
        except NumericalError as exc:
            losses.append(float("nan"))
            failures.append((m, f"{type(exc).__name__}: {exc}"))

    config = {"op": "info_loss_sweep", "channel": ch.digest(), "beta": beta.digest(),
              "cls": {"order": cls.order, "k_bound": cls.k_bound}, "b": b,
              "m_list": m_list, "mode": mode, "noise_sigma": noise_sigma,
              "trials": trials, "seed": seed,
              "kernel": (kernel or KernelSpec()).kind if mode == "noisy" else None}
    return _assemble_report(m_list, {key: losses}, config, failures=failures)


def write_report(report: LossReport, outdir) -> None:
    """Emit report.csv, report.json, and one curve_<key>.dat per loss key."""
    os.makedirs(outdir, exist_ok=True)
    keys = sorted(report.losses)
    with open(os.path.join(outdir, "report.csv"), "w") as fh:
        fh.write(",".join(["m"] + keys) + "\n")
        for i, m in enumerate(report.m_values):
            row = [str(m)] + [repr(report.losses[k][i]) for k in keys]
            fh.write(",".join(row) + "\n")
    doc = {"m_values": list(report.m_values),
           "losses": {k: list(v) for k, v in sorted(report.losses.items())},
           "fitted_slope": dict(sorted(report.fitted_slope.items())),
           "slope_ci": {k: list(v) for k, v in sorted(report.slope_ci.items())},
           "config_digest": report.config_digest,
           "flags": list(report.flags),
           "failures": [list(f) for f in report.failures]}
    with open(os.path.join(outdir, "report.json"), "w") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")
    for k in keys:
        with open(os.path.join(outdir, f"curve_{k}.dat"), "w") as fh:
            fh.write(f"# m  {k}\n")
            for m, v in zip(report.m_values, report.losses[k]):
                fh.write(f"{m} {v!r}\n")
