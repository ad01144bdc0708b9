"""Discrete memoryless channels with inputs embedded in [0, 1].

Includes the two laboratory channel families: a peak-limited AWGN
channel discretized to a finite grid, and an adversarial mod-1 additive
channel whose noise is exactly uniform at the points of a sampling
lattice but concentrates near 0 everywhere else.  The second family is
what separates knowing a harvesting function everywhere from knowing it
on a lattice: distributions confined to the lattice see pure noise.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .funcspace import GridFunction
from .validation import (
    InvalidParameterError,
    check_positive_int,
    check_positive_real,
    check_probability_vector,
    check_row_stochastic,
    check_unit_interval_grid,
)


@dataclass(frozen=True)
class DiscreteChannel:
    """Row-stochastic transition matrix with input letters in [0, 1]."""

    inputs: np.ndarray
    outputs: tuple
    w: np.ndarray

    def __post_init__(self):
        inputs = check_unit_interval_grid(self.inputs, "inputs")
        w = check_row_stochastic(self.w, "w")
        outputs = tuple(self.outputs)
        if w.shape != (inputs.size, len(outputs)):
            raise InvalidParameterError(
                f"w shape {w.shape} does not match {inputs.size} inputs x {len(outputs)} outputs")
        inputs.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "outputs", outputs)
        object.__setattr__(self, "w", w)

    @property
    def n_inputs(self) -> int:
        return self.inputs.size

    @property
    def n_outputs(self) -> int:
        return len(self.outputs)

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.inputs).tobytes())
        h.update(np.ascontiguousarray(self.w).tobytes())
        return h.hexdigest()

    def to_json(self, path=None):
        doc = {"inputs": [float(v) for v in self.inputs],
               "outputs": [float(v) if isinstance(v, (int, float, np.floating)) else str(v)
                            for v in self.outputs],
               "w": [[float(v) for v in row] for row in self.w]}
        if path is None:
            return doc
        with open(path, "w") as fh:
            json.dump(doc, fh)
        return doc

    @staticmethod
    def from_json(source) -> "DiscreteChannel":
        if isinstance(source, dict):
            doc = source
        else:
            with open(source) as fh:
                doc = json.load(fh)
        return DiscreteChannel(inputs=np.asarray(doc["inputs"], dtype=float),
                               outputs=tuple(doc["outputs"]),
                               w=np.asarray(doc["w"], dtype=float))


@dataclass(frozen=True)
class InputDistribution:
    """Probability vector over a channel's input letters.

    Carries the letters themselves so energy functionals can be
    evaluated without re-threading the channel.
    """

    p: np.ndarray
    inputs: np.ndarray | None = None

    def __post_init__(self):
        p = check_probability_vector(self.p, "p", tol=1e-9)
        p.setflags(write=False)
        object.__setattr__(self, "p", p)
        if self.inputs is not None:
            inputs = check_unit_interval_grid(self.inputs, "inputs")
            if inputs.size != p.size:
                raise InvalidParameterError("inputs and p must have the same length")
            inputs.setflags(write=False)
            object.__setattr__(self, "inputs", inputs)

    @staticmethod
    def uniform(ch: DiscreteChannel) -> "InputDistribution":
        n = ch.n_inputs
        return InputDistribution(np.full(n, 1.0 / n), ch.inputs)


def _entropy_bits(v: np.ndarray) -> float:
    nz = v[v > 0]
    return float(-(nz * np.log2(nz)).sum())


def mutual_information(p: InputDistribution, ch: DiscreteChannel) -> float:
    """I(X;Y) in bits for input law p through channel ch."""
    pv = p.p
    if pv.size != ch.n_inputs:
        raise InvalidParameterError("p length does not match channel inputs")
    q = pv @ ch.w
    h_y = _entropy_bits(q)
    rows = ch.w[pv > 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        logw = np.where(rows > 0, np.log2(np.where(rows > 0, rows, 1.0)), 0.0)
    h_y_given_x = float(-(pv[pv > 0] * (rows * logw).sum(axis=1)).sum())
    return max(0.0, h_y - h_y_given_x)


def expected_energy(p: InputDistribution, f: GridFunction) -> float:
    """E[f(X)] with f evaluated at the input letters carried by p."""
    if p.inputs is None:
        raise InvalidParameterError(
            "p must carry its input letters (construct with inputs=ch.inputs)")
    return float(p.p @ f(p.inputs))


def make_awgn_peak(n_in: int, n_out: int, noise_std: float) -> DiscreteChannel:
    """Peak-limited AWGN on [0, 1], discretized.

    Inputs are the n_in-point regular grid; outputs are n_out bins
    covering [-4 sigma, 1 + 4 sigma], edge bins absorbing the tails so
    rows sum to 1 exactly.
    """
    n_in = check_positive_int(n_in, "n_in")
    n_out = check_positive_int(n_out, "n_out")
    if n_in < 2 or n_out < 2:
        raise InvalidParameterError("n_in and n_out must be at least 2")
    sigma = check_positive_real(noise_std, "noise_std")
    x = np.linspace(0.0, 1.0, n_in)
    edges = np.linspace(-4.0 * sigma, 1.0 + 4.0 * sigma, n_out + 1)
    centers = 0.5 * (edges[:-1] + edges[1:])
    inner = edges[1:-1]
    cdf = ndtr((inner[None, :] - x[:, None]) / sigma)
    cdf = np.concatenate([np.zeros((n_in, 1)), cdf, np.ones((n_in, 1))], axis=1)
    w = np.diff(cdf, axis=1)
    return DiscreteChannel(inputs=x, outputs=tuple(float(c) for c in centers), w=w)


def _triangular_cdf(t: np.ndarray, width: np.ndarray) -> np.ndarray:
    """CDF of the symmetric triangular density on [-width, width]."""
    t = np.clip(t, -width, width)
    neg = t < 0
    up = (t + width) ** 2 / (2.0 * width**2)
    down = 1.0 - (width - t) ** 2 / (2.0 * width**2)
    return np.where(neg, up, down)


def make_adversarial_mod(m: int, n_in: int, n_out: int,
                         concentration: float = 50.0) -> DiscreteChannel:
    """Additive mod-1 channel whose noise is lattice-blind.

    At inputs on the m-point lattice i/(m-1) the additive noise is
    exactly uniform on [0, 1); away from the lattice it mixes in a
    triangular spike at 0 whose weight and narrowness grow with the
    distance to the lattice (scaled by `concentration`).  Any input law
    supported on the lattice therefore produces an output independent
    of the input, while off-lattice letters carry information.

    The input grid must strictly refine the lattice: n_in = k*(m-1)+1
    with k >= 2, so off-lattice letters exist.
    """
    m = check_positive_int(m, "m")
    n_in = check_positive_int(n_in, "n_in")
    n_out = check_positive_int(n_out, "n_out")
    conc = check_positive_real(concentration, "concentration")
    if m < 2:
        raise InvalidParameterError("m must be at least 2")
    if (n_in - 1) % (m - 1) != 0 or (n_in - 1) // (m - 1) < 2:
        raise InvalidParameterError(
            f"n_in must be k*(m-1)+1 with k >= 2 to refine the m-point lattice, got n_in={n_in}, m={m}")
    x = np.linspace(0.0, 1.0, n_in)
    lattice = np.linspace(0.0, 1.0, m)
    dist = np.min(np.abs(x[:, None] - lattice[None, :]), axis=1)
    gamma = conc * dist / (1.0 + conc * dist)
    width = 1.0 / (2.0 * (1.0 + conc * dist))
    # output bins [j/n_out, (j+1)/n_out); spike mass per bin via the
    # wrapped triangular CDF, offsets mapped to [-1/2, 1/2)
    j = np.arange(n_out)
    start = np.mod(j[None, :] / n_out - x[:, None] + 0.5, 1.0) - 0.5
    end = start + 1.0 / n_out
    wcol = width[:, None]
    wraps = end > 0.5
    mass_plain = _triangular_cdf(end, wcol) - _triangular_cdf(start, wcol)
    mass_wrap = (1.0 - _triangular_cdf(start, wcol)) + _triangular_cdf(end - 1.0, wcol)
    spike = np.where(wraps, mass_wrap, mass_plain)
    w = (1.0 - gamma)[:, None] / n_out + gamma[:, None] * spike
    w = w / w.sum(axis=1, keepdims=True)
    centers = (j + 0.5) / n_out
    return DiscreteChannel(inputs=x, outputs=tuple(float(c) for c in centers), w=w)
