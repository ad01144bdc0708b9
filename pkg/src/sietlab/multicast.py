"""Common-message transmission to several energy-harvesting nodes.

One input feeds L channels; every node must decode the same message and
meet its own energy requirement, so the operative rate is the worst
node's mutual information.  The max-min problem is concave over a
polytope: a projected subgradient pass (ascending the currently-worst
node's information gradient) localizes the optimum and an SLSQP epigraph
polish finishes it, with a log-sum-exp smoothed solve as a cross-check.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import linprog, minimize

from .capacity import _energy_vector
from .channel import DiscreteChannel, InputDistribution
from .experiments import (
    LossReport,
    _assemble_report,
    _map_ordered,
    derive_seed,
)
from .funcspace import GridFunction, SmoothnessClass, sample_regular
from .reconstruct import KernelSpec, local_poly_fit, lower_envelope
from .validation import (
    InfeasibleError,
    InvalidParameterError,
    NumericalError,
    check_nonnegative_real,
    check_positive_int,
)

_LOG2 = float(np.log(2.0))


class MulticastPoint(NamedTuple):
    rate: float
    p: InputDistribution


class MulticastEnergyPoint(NamedTuple):
    energy: float
    p: InputDistribution


@dataclass(frozen=True)
class MulticastProblem:
    """L channels sharing one input grid, with per-node harvesters.

    requirements[l] is the energy floor node l must receive; the rate is
    common to all nodes because they decode the same message.
    """

    channels: tuple
    harvesters: tuple
    requirements: tuple

    def __post_init__(self):
        chs = tuple(self.channels)
        hs = tuple(self.harvesters)
        req = tuple(float(b) for b in self.requirements)
        if not chs:
            raise InvalidParameterError("at least one node is required")
        if not (len(chs) == len(hs) == len(req)):
            raise InvalidParameterError("channels, harvesters, requirements must align")
        for ch in chs:
            if not isinstance(ch, DiscreteChannel):
                raise InvalidParameterError("channels must be DiscreteChannel instances")
            if ch.n_inputs != chs[0].n_inputs or not np.array_equal(
                    ch.inputs, chs[0].inputs):
                raise InvalidParameterError("all channels must share one input grid")
        if not all(np.isfinite(req)):
            raise InvalidParameterError("requirements must be finite")
        object.__setattr__(self, "channels", chs)
        object.__setattr__(self, "harvesters", hs)
        object.__setattr__(self, "requirements", req)

    @property
    def n_nodes(self) -> int:
        return len(self.channels)

    @property
    def inputs(self) -> np.ndarray:
        return self.channels[0].inputs

    def energy_matrix(self) -> np.ndarray:
        """Per-node energy vectors on the input grid, shape (L, n)."""
        return np.stack([_energy_vector(self.channels[0], h) for h in self.harvesters])

    def to_json(self, path=None):
        doc = {"channels": [ch.to_json() for ch in self.channels],
               "harvesters": [list(map(float, h.values)) for h in self.harvesters],
               "requirements": list(self.requirements)}
        text = json.dumps(doc, sort_keys=True, indent=2)
        if path is None:
            return text
        with open(path, "w") as fh:
            fh.write(text + "\n")
        return None

    @staticmethod
    def from_json(source) -> "MulticastProblem":
        if isinstance(source, str) and source.lstrip().startswith("{"):
            doc = json.loads(source)
        else:
            with open(source) as fh:
                doc = json.load(fh)
        chs = tuple(DiscreteChannel.from_json(c) for c in doc["channels"])
        hs = tuple(GridFunction(np.asarray(v, dtype=float)) for v in doc["harvesters"])
        return MulticastProblem(chs, hs, tuple(doc["requirements"]))


class _NodeInfo:
    """Per-node channel tables for repeated information evaluations."""

    def __init__(self, prob: MulticastProblem):
        self.w = [np.asarray(ch.w, dtype=float) for ch in prob.channels]
        with np.errstate(divide="ignore", invalid="ignore"):
            self.wlog2w = [
                np.where(w > 0, w * np.log2(np.where(w > 0, w, 1.0)), 0.0).sum(axis=1)
                for w in self.w]

    def info_grad(self, p: np.ndarray, node: int):
        """Mutual information (bits) and its gradient dI/dp for one node."""
        w = self.w[node]
        q = p @ w
        logq = np.log2(np.maximum(q, 1e-300))
        d = self.wlog2w[node] - w @ logq
        rate = float(p @ d)
        return max(rate, 0.0), d - 1.0 / _LOG2

    def rates(self, p: np.ndarray) -> np.ndarray:
        return np.array([self.info_grad(p, l)[0] for l in range(len(self.w))])


def _feasible_start(fmat: np.ndarray, req: np.ndarray):
    """Max-slack input law for the energy polytope, via LP.

    Returns (p, slack); slack < 0 means the requirements are jointly
    unsatisfiable on the simplex.
    """
    nl, n = fmat.shape
    c = np.zeros(n + 1)
    c[-1] = -1.0
    a_ub = np.hstack([-fmat, np.ones((nl, 1))])
    bounds = [(0.0, 1.0)] * n + [(None, None)]
    res = linprog(c, A_ub=a_ub, b_ub=-req,
                  A_eq=np.hstack([np.ones((1, n)), np.zeros((1, 1))]), b_eq=[1.0],
                  bounds=bounds, method="highs")
    if not res.success:
        raise NumericalError(f"feasibility LP failed: {res.message}")
    p = np.maximum(res.x[:n], 0.0)
    p /= p.sum()
    return p, float(res.x[-1])


def _project_simplex(y: np.ndarray) -> np.ndarray:
    u = np.sort(y)[::-1]
    css = np.cumsum(u) - 1.0
    rho = np.nonzero(u * np.arange(1, y.size + 1) > css)[0][-1]
    return np.maximum(y - css[rho] / (rho + 1.0), 0.0)


def _project_polytope(y: np.ndarray, fmat: np.ndarray, req: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the simplex cut by energy half-spaces."""
    p = _project_simplex(y)
    if np.all(fmat @ p >= req - 1e-12):
        return p
    n = y.size
    cons = [{"type": "eq", "fun": lambda p: p.sum() - 1.0,
             "jac": lambda p: np.ones(n)},
            {"type": "ineq", "fun": lambda p: fmat @ p - req,
             "jac": lambda p: fmat}]
    res = minimize(lambda p: 0.5 * float(np.dot(p - y, p - y)), p,
                   jac=lambda p: p - y, method="SLSQP", bounds=[(0.0, 1.0)] * n,
                   constraints=cons, options={"maxiter": 200, "ftol": 1e-14})
    p = np.maximum(res.x, 0.0)
    return p / p.sum()


def _subgradient_maxmin(info: _NodeInfo, fmat, req, p0, tol, max_iter=100_000):
    """Projected subgradient ascent on min-node information.

    Ascends the gradient of whichever node is currently worst, with a
    1/sqrt(t) step, keeping the best iterate.  Stops early once a
    100-iteration window stops improving the best value by tol.
    """
    p = p0.copy()
    best_p, best_v = p.copy(), float(info.rates(p).min())
    window_mark = best_v
    for t in range(1, max_iter + 1):
        rates = info.rates(p)
        node = int(np.argmin(rates))
        g = info.info_grad(p, node)[1]
        scale = float(np.abs(g).max()) or 1.0
        p = _project_polytope(p + (0.1 / np.sqrt(t)) * g / scale, fmat, req)
        v = float(info.rates(p).min())
        if v > best_v:
            best_v, best_p = v, p.copy()
        if t % 100 == 0:
            if best_v - window_mark < tol:
                break
            window_mark = best_v
    return best_p, best_v


def _polish_maxmin(info, fmat, req, p0, smoothed=False, tau=1e-3):
    """SLSQP epigraph solve: max t subject to every node's rate >= t.

    With smoothed=True the objective is the log-sum-exp soft minimum at
    temperature tau instead of the epigraph variable; it serves as an
    independent cross-check of the kink handling.
    """
    n = fmat.shape[1]
    nl = fmat.shape[0]

    if smoothed:
        def neg_soft(p):
            rates = info.rates(p)
            z = (rates - rates.min()) / tau
            return -(float(rates.min()) - tau * float(np.log(np.exp(-z).sum())))

        def neg_soft_grad(p):
            rates = np.empty(nl)
            grads = np.empty((nl, n))
            for l in range(nl):
                rates[l], grads[l] = info.info_grad(p, l)
            wgt = np.exp(-(rates - rates.min()) / tau)
            wgt /= wgt.sum()
            return -(wgt @ grads)

        cons = [{"type": "eq", "fun": lambda p: p.sum() - 1.0,
                 "jac": lambda p: np.ones(n)},
                {"type": "ineq", "fun": lambda p: fmat @ p - req,
                 "jac": lambda p: fmat}]
        res = minimize(neg_soft, p0, jac=neg_soft_grad, method="SLSQP",
                       bounds=[(0.0, 1.0)] * n, constraints=cons,
                       options={"maxiter": 400, "ftol": 1e-12})
        p = np.maximum(res.x, 0.0)
        return p / p.sum()

    def rate_cons(z):
        p = z[:n]
        return info.rates(p) - z[n]

    def rate_jac(z):
        jac = np.zeros((nl, n + 1))
        for l in range(nl):
            jac[l, :n] = info.info_grad(z[:n], l)[1]
        jac[:, n] = -1.0
        return jac

    cons = [{"type": "eq", "fun": lambda z: z[:n].sum() - 1.0,
             "jac": lambda z: np.append(np.ones(n), 0.0)},
            {"type": "ineq", "fun": rate_cons, "jac": rate_jac},
            {"type": "ineq", "fun": lambda z: fmat @ z[:n] - req,
             "jac": lambda z: np.hstack([fmat, np.zeros((nl, 1))])}]
    z0 = np.append(p0, float(info.rates(p0).min()) - 1e-9)
    res = minimize(lambda z: -z[n], z0, jac=lambda z: np.append(np.zeros(n), -1.0),
                   method="SLSQP",
                   bounds=[(0.0, 1.0)] * n + [(0.0, None)],
                   constraints=cons, options={"maxiter": 400, "ftol": 1e-12})
    p = np.maximum(res.x[:n], 0.0)
    return p / p.sum()


def _restore_feasible(p, p_safe, fmat, req, slack=0.0):
    """Pull p toward a strictly feasible law until the polytope holds."""
    if np.all(fmat @ p >= req - 1e-11):
        return p
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        cand = (1.0 - mid) * p + mid * p_safe
        if np.all(fmat @ cand >= req - 1e-11):
            hi = mid
        else:
            lo = mid
    return (1.0 - hi) * p + hi * p_safe


def multicast_capacity(prob: MulticastProblem, tol: float = 1e-6) -> MulticastPoint:
    """Largest rate every node can decode while all energy floors hold.

    Raises InfeasibleError when the requirements cut an empty slice out
    of the simplex.
    """
    check_nonnegative_real(tol, "tol")
    fmat = prob.energy_matrix()
    req = np.asarray(prob.requirements, dtype=float)
    p0, slack = _feasible_start(fmat, req)
    if slack < -1e-9:
        raise InfeasibleError(
            f"energy requirements exceed the feasible range by {-slack:.3g}")
    info = _NodeInfo(prob)
    # interior start keeps early information gradients finite
    mix = min(1e-3, 0.5 * max(slack, 0.0) / (float(np.abs(fmat).max()) + 1e-30))
    p0 = (1.0 - mix) * p0 + mix / p0.size

    p_sub, v_sub = _subgradient_maxmin(info, fmat, req, p0, tol)
    best_p, best_v = p_sub, v_sub
    for smoothed in (False, True):
        p = _polish_maxmin(info, fmat, req, best_p, smoothed=smoothed)
        p = _restore_feasible(p, p0, fmat, req)
        v = float(info.rates(p).min())
        if v > best_v:
            best_p, best_v = p, v
    dist = InputDistribution(best_p, prob.inputs)
    return MulticastPoint(rate=best_v, p=dist)


def multicast_energy(prob: MulticastProblem, r: float, node: int,
                     tol: float = 1e-6) -> MulticastEnergyPoint:
    """Most energy node `node` can harvest while every node decodes rate r.

    The energy requirements in prob are not part of this problem; only
    the common rate constrains the input law.
    """
    check_nonnegative_real(r, "r")
    if not 0 <= int(node) < prob.n_nodes:
        raise InvalidParameterError(f"node must index one of {prob.n_nodes} nodes")
    node = int(node)
    fmat = prob.energy_matrix()
    fvec = fmat[node]
    n = fvec.size
    if r == 0.0:
        p = np.zeros(n)
        p[int(np.argmax(fvec))] = 1.0
        return MulticastEnergyPoint(energy=float(fvec.max()),
                                    p=InputDistribution(p, prob.inputs))

    free = MulticastProblem(prob.channels, prob.harvesters,
                            tuple([float(fmat.min()) - 1.0] * prob.n_nodes))
    cap = multicast_capacity(free, tol=min(tol, 1e-7))
    if r > cap.rate + 1e-9:
        raise InfeasibleError(f"rate {r:.6g} exceeds the max-min capacity {cap.rate:.6g}")
    info = _NodeInfo(prob)
    p_safe = np.asarray(cap.p.p, dtype=float)

    cons = [{"type": "eq", "fun": lambda p: p.sum() - 1.0,
             "jac": lambda p: np.ones(n)},
            {"type": "ineq", "fun": lambda p: info.rates(p) - r,
             "jac": lambda p: np.stack(
                 [info.info_grad(p, l)[1] for l in range(prob.n_nodes)])}]

    # the rate constraint is convex, the objective linear: any feasible
    # start converges, but the energy-greedy mix speeds the active case
    greedy = np.zeros(n)
    greedy[int(np.argmax(fvec))] = 1.0
    starts = [p_safe, _rate_feasible_mix(greedy, p_safe, info, r)]

    best_p, best_e = p_safe, float(fvec @ p_safe)
    for p_init in starts:
        res = minimize(lambda p: -float(fvec @ p), p_init, jac=lambda p: -fvec,
                       method="SLSQP", bounds=[(0.0, 1.0)] * n, constraints=cons,
                       options={"maxiter": 400, "ftol": 1e-12})
        p = np.maximum(res.x, 0.0)
        s = p.sum()
        if s <= 0:
            continue
        p /= s
        if info.rates(p).min() < r - 1e-7:
            p = _rate_feasible_mix(p, p_safe, info, r)
        e = float(fvec @ p)
        if e > best_e:
            best_p, best_e = p, e
    return MulticastEnergyPoint(energy=best_e,
                                p=InputDistribution(best_p, prob.inputs))


def _rate_feasible_mix(p, p_safe, info: _NodeInfo, r: float) -> np.ndarray:
    """Smallest mix toward p_safe making every node's rate reach r."""
    if info.rates(p).min() >= r - 1e-11:
        return p
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        cand = (1.0 - mid) * p + mid * p_safe
        if info.rates(cand).min() >= r - 1e-11:
            hi = mid
        else:
            lo = mid
    return (1.0 - hi) * p + hi * p_safe


def multicast_loss_sweep(prob: MulticastProblem, cls: SmoothnessClass, m_list,
                         mode: str = "noiseless", rate: float | None = None,
                         noise_sigma: float = 0.05, trials: int = 100,
                         seed: int = 0, kernel: KernelSpec | None = None,
                         threads: int = 1) -> LossReport:
    """Worst-node value gaps when harvesters are known through samples.

    Energy losses compare, per node, the rate-r energy under the true
    harvester against the reconstructed one, then take the worst node;
    rate losses compare max-min capacity at the stated requirements.
    Noisy mode averages absolute gaps over Monte-Carlo sample draws
    before taking the worst node.
    """
    if mode not in ("noiseless", "noisy"):
        raise InvalidParameterError(f"mode must be 'noiseless' or 'noisy', got {mode!r}")
    m_list = [check_positive_int(m, "m") for m in m_list]
    nl = prob.n_nodes
    fmat = prob.energy_matrix()
    free = MulticastProblem(prob.channels, prob.harvesters,
                            tuple([float(fmat.min()) - 1.0] * nl))
    if rate is None:
        rate = 0.5 * multicast_capacity(free).rate
    rate = float(rate)

    b_true = np.array([multicast_energy(prob, rate, l).energy for l in range(nl)])
    c_true = multicast_capacity(prob).rate
    suffix = "" if mode == "noiseless" else "_bar"
    e_losses, i_losses, failures = [], [], []

    def estimate(m, trial):
        hs = []
        for l in range(nl):
            if mode == "noiseless":
                s = sample_regular(prob.harvesters[l], m, 0.0)
                hs.append(lower_envelope(s, cls).lower)
            else:
                s = sample_regular(prob.harvesters[l], m, noise_sigma,
                                   seed=derive_seed(seed, m, trial * nl + l))
                hs.append(local_poly_fit(s, cls, kernel))
        return MulticastProblem(prob.channels, tuple(hs), prob.requirements)

    def losses_for(prob_hat):
        gaps = [abs(b_true[l] - multicast_energy(prob_hat, rate, l).energy)
                for l in range(nl)]
        try:
            c_hat = multicast_capacity(prob_hat).rate
        except InfeasibleError:
            c_hat = 0.0
        return np.array(gaps), abs(c_true - c_hat)

    for m in m_list:
        try:
            if mode == "noiseless":
                e_gaps, i_gap = losses_for(estimate(m, 0))
            else:
                outs = _map_ordered(lambda t: losses_for(estimate(m, t)),
                                    list(range(trials)), threads)
                e_gaps = np.mean([o[0] for o in outs], axis=0)
                i_gap = float(np.mean([o[1] for o in outs]))
            e_losses.append(float(e_gaps.max()))
            i_losses.append(float(i_gap))
        except (InfeasibleError, NumericalError) as exc:
            e_losses.append(float("nan"))
            i_losses.append(float("nan"))
            failures.append((m, f"{type(exc).__name__}: {exc}"))

    config = {"op": "multicast_loss_sweep",
              "channels": [ch.digest() for ch in prob.channels],
              "harvesters": [h.digest() for h in prob.harvesters],
              "requirements": list(prob.requirements),
              "cls": {"order": cls.order, "k_bound": cls.k_bound},
              "rate": rate, "m_list": m_list, "mode": mode,
              "noise_sigma": noise_sigma, "trials": trials, "seed": seed}
    return _assemble_report(
        m_list,
        {f"delta_e_mc{suffix}": e_losses, f"delta_i_mc{suffix}": i_losses},
        config, failures=failures)
