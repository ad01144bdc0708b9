"""Capacity-energy tradeoffs for discrete memoryless channels.

capacity_energy computes C(b) = max { I(X;Y) : E[f(X)] >= b }, the best
rate compatible with a minimum expected harvest; energy_capacity
computes the inverse B(r) = max { E[f(X)] : I(X;Y) >= r }.  Both ride
on a Blahut-Arimoto ascent with a per-letter exponential reward tilt
exp(mu * ln2 * f(x)) and the standard sandwich stopping rule: iterate
until max_x g_x - sum_x p_x g_x <= tol, which certifies the tilted
optimum within tol.  The constraint is located by bisection on mu with
warm-started ascents; where the tradeoff curve has a kink the family of
tilted optimizers jumps, and the exact constraint level is recovered by
mixing the two bracketing solutions.

Set versions evaluate the same programs with the worst-case energy
function of an envelope band, i.e. its lower envelope.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .channel import DiscreteChannel, InputDistribution, mutual_information
from .funcspace import GridFunction
from .reconstruct import EnvelopePair
from .validation import (
    InfeasibleError,
    InvalidParameterError,
    NumericalError,
    check_positive_int,
    check_positive_real,
)

_LN2 = float(np.log(2.0))


class CapacityPoint(NamedTuple):
    rate: float
    p: InputDistribution


class EnergyPoint(NamedTuple):
    energy: float
    p: InputDistribution


def _energy_vector(ch: DiscreteChannel, f) -> np.ndarray:
    if isinstance(f, GridFunction):
        vec = f(ch.inputs)
    else:
        vec = np.asarray(f, dtype=float)
        if vec.shape != (ch.n_inputs,):
            raise InvalidParameterError(
                f"energy vector length {vec.shape} does not match {ch.n_inputs} inputs")
    if not np.all(np.isfinite(vec)):
        raise InvalidParameterError("energy function is non-finite on the input grid")
    return vec


def _row_neg_entropy(w: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        lw = np.where(w > 0, np.log(np.where(w > 0, w, 1.0)), 0.0)
    return (w * lw).sum(axis=1)


class _BAResult(NamedTuple):
    p: np.ndarray
    rate_bits: float
    gap_bits: float
    iterations: int


def _newton_polish(w: np.ndarray, wlogw: np.ndarray, tilt_nats: np.ndarray,
                   p_start: np.ndarray, tol_nats: float) -> np.ndarray | None:
    """Two-scale active-set Newton finisher for the tilted capacity
    objective, certified by the full-alphabet sandwich.

    Multiplicative ascents identify the support quickly but balance mass
    among nearly collinear letters at a linear rate close to 1, and
    letters that do not belong in the support can take ~1/delta
    iterations to decay when their suboptimality delta is tiny.  Here the
    working support is explicit and split by mass scale:

    * Letters at ordinary mass get equality-Newton steps solving
      A dp + dnu 1 = resid, sum dp = 0 with A_xy = sum_o w_xo w_yo / q_o
      (the exact Jacobian of the stationarity map g(p)); a blocked step
      removes the blocking letter from the support exactly.  Collinear
      letters make A nearly singular, so the system is solved in factored
      form and the step is the minimal-norm least-squares solution; the
      dropped directions only shuffle mass between letters with
      near-identical rows, which the certificate does not see.

    * Letters many decades below the main mass (satellites) own output
      cells where q ~ p_x w_xo, so their g is affine in log p_x with
      slope -(own-cell mass); balancing such a letter can move it across
      tens of decades, which no simplex-space quadratic model survives.
      They are balanced by block Newton in log coordinates with the
      exact Jacobian -T, T_xy = sum_o w_xo w_yo p_y / q_o.

    The two solves alternate until the joint residual closes, and the
    full-alphabet check re-admits any letter whose g exceeds the
    multiplier.  Returns a distribution whose sandwich gap is within
    tol, or None so the caller keeps iterating the safe ascent.
    """
    n = w.shape[0]
    base = wlogw + tilt_nats
    p = np.where(p_start > max(1e-10, float(p_start.max()) * 1e-12), p_start, 0.0)
    p = p / p.sum()

    def state(p):
        q = np.clip(p @ w, 1e-300, None)
        g = base - w @ np.log(q)
        sup = np.flatnonzero(p > 0.0)
        nu = float(p[sup] @ g[sup])
        err = float(np.max(np.abs(g[sup] - nu)))
        return q, g, sup, nu, err

    # letters the alternation has proven unfit for 1-D treatment; the
    # joint simplex solve keeps them regardless of mass
    force_big = np.zeros(n, dtype=bool)

    def split(p, q, sup, cut):
        # satellite = tiny mass AND real weight in cells the letter
        # itself carries (at least half of q): there g_x moves with
        # log p_x at a trustworthy slope, and balancing can span decades.
        # A tiny letter whose every cell is carried by others is a
        # support-swap candidate whose residual only the joint simplex
        # solve can fix; its own mass has no authority, and a 1-D root,
        # if one exists, is an artifact the main block immediately
        # un-does.
        wsup = w[sup]
        own = np.where(wsup * p[sup][:, None] >= 0.5 * q[None, :], wsup, 0.0).sum(axis=1)
        is_sat = (p[sup] < cut) & (own >= 1e-3) & ~force_big[sup]
        return sup[~is_sat], sup[is_sat]

    def settle_satellites(p, cut):
        # Coupling between satellites is a near-triangular cascade: each
        # letter feels its larger neighbours through the cells they own,
        # while the reverse coupling carries a factor p_small / p_large.
        # Block steps are untrustworthy here (cell ownership flips as
        # masses cross), so sweep safeguarded 1-D solves instead,
        # shallowest letter first; g_x is strictly decreasing in log p_x,
        # so each solve brackets its root and cannot overshoot.
        for _ in range(30):
            q, g, sup, nu, err = state(p)
            sat = split(p, q, sup, cut)[1]
            if sat.size == 0:
                return p
            r_sat = g[sat] - nu
            if float(np.max(np.abs(r_sat))) <= 0.02 * tol_nats:
                return p
            for x in sat[np.argsort(np.abs(r_sat))]:
                lo, hi = np.log(5e-291), float(np.log(10.0 * cut))
                for _ in range(60):
                    q, g, sup, nu, err = state(p)
                    r = float(g[x] - nu)
                    if abs(r) <= 0.01 * tol_nats:
                        break
                    u = float(np.log(p[x]))
                    if r < 0.0:
                        hi = u
                    else:
                        lo = u
                    slope = float((w[x] / q) @ (w[x] * p[x]))
                    u_new = u + r / slope if slope > 0.0 else 0.5 * (lo + hi)
                    if not lo < u_new < hi:
                        u_new = 0.5 * (lo + hi)
                    if u_new <= np.log(1e-290):
                        p[x] = 0.0  # no balance point above the floor
                        p = p / p.sum()
                        break
                    p[x] = float(np.exp(u_new))
                    p = p / p.sum()
                    if p[x] >= cut:
                        break  # belongs at ordinary mass: promoted
        return p

    def main_newton(p, cut):
        q, g, sup, nu, err = state(p)
        for _ in range(200):
            big = split(p, q, sup, cut)[0]
            if big.size == 0:
                return p, True
            err_b = float(np.max(np.abs(g[big] - nu)))
            if err_b <= 0.02 * tol_nats:
                return p, True
            ws = w[big]
            k = big.size
            # Newton system with A = m^T m and m = ws^T / sqrt(q), solved
            # in factored form: forming A squares the singular values,
            # pushing the directions that separate nearly duplicate
            # letters (sigma ~ row distance) into roundoff, and no
            # least-squares cut can recover them.  Equilibrate by
            # s ~ 1/sqrt(diag A), restrict to the complement Z of s
            # (which eliminates dnu exactly, since Z^T s = 0), and invert
            # sigma^2 from the SVD of b = m diag(s) Z.
            if k == 1:
                return p, True  # nothing to trade against; residual is not ours
            s = 1.0 / np.sqrt(np.clip(((ws * ws) / q).sum(axis=1), 1e-300, None))
            z = np.linalg.qr(s.reshape(-1, 1), mode="complete")[0][:, 1:]
            b = ((ws.T * s[None, :]) / np.sqrt(q)[:, None]) @ z
            try:
                u_mat, sig, vt = np.linalg.svd(b, full_matrices=True)
            except np.linalg.LinAlgError:
                return p, False
            # vt is complete (k-1 rows): rows past sig.size have sigma 0
            sig_full = np.zeros(k - 1)
            sig_full[: sig.size] = sig
            keep = sig_full > sig_full.max() * 1e-12
            h = z.T @ (s * (g[big] - nu))
            if not keep.any():
                dp = np.zeros(k)
            else:
                coef = np.where(keep, (vt @ h) / np.where(keep, sig_full, 1.0) ** 2, 0.0)
                dp = s * (z @ (vt.T @ coef))
            ratio = np.where(dp < 0.0, -p[big] / np.where(dp < 0.0, dp, -1.0), np.inf)
            blocker = int(np.argmin(ratio))
            t_block = float(ratio[blocker])
            if t_block <= 1.0:
                # blocked step: walk to the boundary and drop the blocker;
                # the working set shrinks, so no residual test is needed
                p_new = p.copy()
                p_new[big] = np.clip(p[big] + t_block * dp, 0.0, None)
                p_new[big[blocker]] = 0.0
                p = p_new / p_new.sum()
                q, g, sup, nu, err = state(p)
                continue
            t = 1.0
            accepted = False
            for _ in range(10):
                p_try = p.copy()
                p_try[big] = np.clip(p[big] + t * dp, 0.0, None)
                p_try = p_try / p_try.sum()
                q2, g2, sup2, nu2, err2 = state(p_try)
                big2 = split(p_try, q2, sup2, cut)[0]
                err2_b = float(np.max(np.abs(g2[big2] - nu2))) if big2.size else 0.0
                if err2_b <= 0.9 * err_b + 1e-13:
                    p, q, g, sup, nu = p_try, q2, g2, sup2, nu2
                    accepted = True
                    break
                t *= 0.25
            if accepted:
                continue
            # the reachable part of the residual is exhausted; what is
            # left lives along directions below the sigma cut, where q is
            # fixed (nearly duplicate letters) and the objective is
            # linear in the transferred mass.  Walk the steepest such
            # transfer to the boundary and drop the letter it zeroes;
            # the surviving twin then carries the pair's mass and the
            # full-rank step can finish.
            null_rows = np.flatnonzero(~keep)
            if null_rows.size == 0:
                return p, False
            slopes = vt[null_rows] @ h
            j = int(np.argmax(np.abs(slopes)))
            if abs(float(slopes[j])) <= 1e-18:
                return p, False  # residual is flat along every null direction
            d = s * (z @ vt[null_rows[j]]) * np.sign(float(slopes[j]))
            ratio = np.where(d < 0.0, -p[big] / np.where(d < 0.0, d, -1.0), np.inf)
            blocker = int(np.argmin(ratio))
            if not np.isfinite(ratio[blocker]):
                return p, False
            p_new = p.copy()
            p_new[big] = np.clip(p[big] + float(ratio[blocker]) * d, 0.0, None)
            p_new[big[blocker]] = 0.0
            p_new = p_new / p_new.sum()
            q2, g2, sup2, nu2, err2 = state(p_new)
            big2 = split(p_new, q2, sup2, cut)[0]
            err2_b = float(np.max(np.abs(g2[big2] - nu2))) if big2.size else 0.0
            if err2_b > 1.5 * err_b + 1e-13:
                return p, False  # transfer disturbed the balance: not flat
            p, q, g, sup, nu = p_new, q2, g2, sup2, nu2
        return p, False

    for _ in range(12):
        cut = float(p.max()) * 1e-8
        done = False
        err_prev = np.inf
        stalled = 0
        # the two blocks perturb each other through shared output cells;
        # alternate while the joint residual keeps contracting.  Bail on
        # two consecutive non-contracting passes: a single slow pass is
        # normal near the end, a sustained ratio near 1 is a ping-pong.
        for _ in range(40):
            p = settle_satellites(p, cut)
            p, ok = main_newton(p, cut)
            if not ok:
                return None
            q, g, sup, nu, err = state(p)
            if err <= 0.05 * tol_nats:
                done = True
                break
            if err > 0.85 * err_prev:
                stalled += 1
                if stalled >= 2:
                    # a satellite that cannot hold its residual against
                    # the main block shares borderline cells with it;
                    # hand the offenders to the joint solve for good
                    sat = split(p, q, sup, cut)[1]
                    bad = sat[np.abs(g[sat] - nu) > 0.05 * tol_nats]
                    if bad.size == 0:
                        return None
                    force_big[bad] = True
                    stalled = 0
                    err_prev = np.inf
                    continue
            else:
                stalled = 0
            err_prev = err
        if not done:
            return None
        gap = float(g.max() - nu)
        if gap <= tol_nats:
            return p
        viol = np.flatnonzero((g - nu > tol_nats) & (p <= 0.0))
        if viol.size == 0:
            return None  # violator already supported: genuine failure
        # seed every violator inside the satellite band, below the
        # smallest settled mass: a low seed is grown to its scale by the
        # bracketed 1-D solves (or promoted to ordinary mass), while a
        # high seed would swamp the cells of settled satellites and
        # knock them out of the support
        p[viol] = max(min(0.5 * cut, 0.1 * float(p[sup].min())), 1e-250)
        p = p / p.sum()
    return None


def _ba_tilted(w: np.ndarray, wlogw: np.ndarray, tilt_nats: np.ndarray,
               p0: np.ndarray, tol_nats: float, max_iter: int = 300000) -> _BAResult:
    """Maximize I(p) + p . tilt (nats) over the simplex, sandwich-certified.

    Log-domain multiplicative ascent with squared-extrapolation (SQUAREM)
    acceleration and a Newton polish once the support stabilizes.  The
    sandwich max_x g_x - p.g is evaluated at actual iterates, so the
    acceleration changes how fast the certificate is reached but never
    its validity.  Extrapolated points that lower the objective are
    rejected in favor of the plain update.
    """
    def eval_point(lp):
        ex = np.exp(lp - lp.max())
        p = ex / ex.sum()
        q = p @ w
        logq = np.log(np.clip(q, 1e-300, None))
        d = wlogw - w @ logq
        g = d + tilt_nats
        return p, d, g, float(p @ g), float(g.max())

    def center(z):
        return z - z.mean()

    def finish(p):
        q = p @ w
        logq = np.log(np.clip(q, 1e-300, None))
        d = wlogw - w @ logq
        g = d + tilt_nats
        gap = float(g.max() - p @ g)
        return _BAResult(p=p, rate_bits=max(0.0, float(p @ d) / _LN2),
                         gap_bits=gap / _LN2, iterations=evals)

    lp = np.log(np.clip(p0, 1e-300, None))
    lp = center(lp)
    evals = 0
    next_polish = 25
    polish_fails = 0
    up0 = low0 = 0.0
    while evals < max_iter:
        p0v, d0, g0, low0, up0 = eval_point(lp); evals += 1
        if up0 - low0 <= tol_nats:
            return _BAResult(p=p0v, rate_bits=max(0.0, float(p0v @ d0) / _LN2),
                             gap_bits=(up0 - low0) / _LN2, iterations=evals)
        if (up0 - low0 <= 1e-2 or evals >= 2000) and evals >= next_polish:
            polished = _newton_polish(w, wlogw, tilt_nats, p0v, tol_nats)
            if polished is not None:
                return finish(polished)
            polish_fails += 1
            next_polish = evals + min(250 * 2 ** min(polish_fails, 4), 4000)
        lp1 = center(lp + g0)
        p1v, d1, g1, low1, up1 = eval_point(lp1); evals += 1
        if up1 - low1 <= tol_nats:
            return _BAResult(p=p1v, rate_bits=max(0.0, float(p1v @ d1) / _LN2),
                             gap_bits=(up1 - low1) / _LN2, iterations=evals)
        lp2 = center(lp1 + g1)
        # squared extrapolation in the shift-invariant quotient space;
        # pure-translation coordinates (letters leaving the support at a
        # constant log-rate) have v ~ 0 and get amplified by |alpha|
        r = lp1 - lp
        v = (lp2 - lp1) - r
        nv = float(np.linalg.norm(v))
        if nv < 1e-14:
            lp = lp2
            continue
        alpha = max(-float(np.linalg.norm(r)) / nv, -64.0)
        if alpha > -1.0:
            lp = lp2
            continue
        lp_acc = center(lp - 2.0 * alpha * r + alpha * alpha * v)
        pa, da, ga, lowa, upa = eval_point(lp_acc); evals += 1
        if upa - lowa <= tol_nats:
            return _BAResult(p=pa, rate_bits=max(0.0, float(pa @ da) / _LN2),
                             gap_bits=(upa - lowa) / _LN2, iterations=evals)
        if lowa >= low1 - 1e-10 * max(1.0, abs(low1)):
            lp = center(lp_acc + ga)
        else:
            lp = lp2
    raise NumericalError(
        f"ascent sandwich gap {(up0 - low0) / _LN2:.3e} bits above tolerance "
        f"after {max_iter} evaluations")


def unconstrained_capacity(ch: DiscreteChannel, tol: float = 1e-9) -> CapacityPoint:
    """Channel capacity in bits and a capacity-achieving input law."""
    check_positive_real(tol, "tol")
    w = ch.w
    wlogw = _row_neg_entropy(w)
    n = ch.n_inputs
    res = _ba_tilted(w, wlogw, np.zeros(n), np.full(n, 1.0 / n), tol * _LN2)
    return CapacityPoint(res.rate_bits, InputDistribution(res.p, ch.inputs))


def _solve_face(ch, fvec, w, wlogw, tol_nats, tol_face):
    """Best rate over distributions confined to the argmax letters of f."""
    mask = fvec >= fvec.max() - tol_face
    idx = np.flatnonzero(mask)
    sub_w = w[idx]
    res = _ba_tilted(sub_w, wlogw[idx], np.zeros(idx.size),
                     np.full(idx.size, 1.0 / idx.size), tol_nats)
    p = np.zeros(ch.n_inputs)
    p[idx] = res.p
    return res.rate_bits, p


def capacity_energy(ch: DiscreteChannel, f, b: float, tol: float = 1e-9,
                    tol_b: float | None = None, _warm: dict | None = None) -> CapacityPoint:
    """Largest rate with expected harvest at least b.

    Feasible iff b <= max f (within the energy tolerance tol_b, default
    1e-7 times the range of f on the inputs).  Returns the rate in bits
    and an achieving input law whose energy meets the constraint within
    tol_b.
    """
    check_positive_real(tol, "tol")
    b = float(b)
    fvec = _energy_vector(ch, f)
    fmin, fmax = float(fvec.min()), float(fvec.max())
    rng = fmax - fmin
    if tol_b is None:
        tol_b = 1e-7 * rng if rng > 0 else 1e-12
    tol_nats = tol * _LN2
    w, wlogw = ch.w, _row_neg_entropy(ch.w)
    n = ch.n_inputs

    if _warm and "cap" in _warm:
        c_max, p_cap = _warm["cap"]
    else:
        res0 = _ba_tilted(w, wlogw, np.zeros(n), np.full(n, 1.0 / n), tol_nats)
        c_max, p_cap = res0.rate_bits, res0.p
        if _warm is not None:
            _warm["cap"] = (c_max, p_cap)
    e_cap = float(p_cap @ fvec)

    if b <= e_cap + tol_b:
        return CapacityPoint(c_max, InputDistribution(p_cap, ch.inputs))
    if b > fmax + tol_b:
        raise InfeasibleError(f"energy target {b} exceeds the maximum harvest {fmax}")
    if rng == 0 or b >= fmax - tol_b:
        rate, p = _solve_face(ch, fvec, w, wlogw, tol_nats, 2 * tol_b)
        return CapacityPoint(rate, InputDistribution(p, ch.inputs))

    def solve(mu, p_start):
        res = _ba_tilted(w, wlogw, mu * _LN2 * fvec, p_start, tol_nats)
        return res.rate_bits, float(res.p @ fvec), res.p

    mu_lo, i_lo, e_lo, p_lo = 0.0, c_max, e_cap, p_cap
    mu_hi = 1.0 / rng
    p_prev = p_cap
    for _ in range(80):
        i_hi, e_hi, p_hi = solve(mu_hi, p_prev)
        p_prev = p_hi
        if e_hi >= b - tol_b:
            break
        mu_lo, i_lo, e_lo, p_lo = mu_hi, i_hi, e_hi, p_hi
        mu_hi *= 2.0
        if mu_hi > 1e9 / rng:
            rate, p = _solve_face(ch, fvec, w, wlogw, tol_nats, 2 * tol_b)
            return CapacityPoint(rate, InputDistribution(p, ch.inputs))
    else:
        raise NumericalError("could not bracket the energy constraint")

    for _ in range(200):
        # exit only when the hi side is exactly feasible or the value is
        # pinched; an energy-slack exit would cost slope * tol_b in rate,
        # which is unbounded where the curve dives toward fmax
        if e_hi <= b or i_lo - i_hi <= max(tol, 1e-9):
            return CapacityPoint(i_hi, InputDistribution(p_hi, ch.inputs))
        if mu_hi - mu_lo <= 1e-13 * max(1.0, mu_hi):
            break
        mu_mid = 0.5 * (mu_lo + mu_hi)
        i_mid, e_mid, p_mid = solve(mu_mid, p_hi)
        if e_mid >= b - tol_b:
            mu_hi, i_hi, e_hi, p_hi = mu_mid, i_mid, e_mid, p_mid
        else:
            mu_lo, i_lo, e_lo, p_lo = mu_mid, i_mid, e_mid, p_mid
    # kink in the tradeoff curve: the tilted family jumps across b, the
    # optimum at b is the mixture meeting the constraint with equality
    theta = (b - e_lo) / (e_hi - e_lo)
    p_mix = theta * p_hi + (1.0 - theta) * p_lo
    dist = InputDistribution(p_mix, ch.inputs)
    return CapacityPoint(mutual_information(dist, ch), dist)


def energy_capacity(ch: DiscreteChannel, f, r: float, tol: float = 1e-9,
                    tol_r: float = 1e-6, _warm: dict | None = None) -> EnergyPoint:
    """Largest expected harvest with rate at least r.

    r = 0 returns a point mass on the (first) maximizer of f.  Feasible
    iff r does not exceed the channel capacity within tol_r.
    """
    check_positive_real(tol, "tol")
    r = float(r)
    if r < -tol_r:
        raise InvalidParameterError(f"rate target must be nonnegative, got {r}")
    fvec = _energy_vector(ch, f)
    fmin, fmax = float(fvec.min()), float(fvec.max())
    rng = fmax - fmin
    tol_b = 1e-7 * rng if rng > 0 else 1e-12
    tol_nats = tol * _LN2
    w, wlogw = ch.w, _row_neg_entropy(ch.w)
    n = ch.n_inputs

    if r <= 0.0:
        p = np.zeros(n)
        p[int(np.argmax(fvec))] = 1.0
        return EnergyPoint(fmax, InputDistribution(p, ch.inputs))

    if _warm and "cap" in _warm:
        c_max, p_cap = _warm["cap"]
    else:
        res0 = _ba_tilted(w, wlogw, np.zeros(n), np.full(n, 1.0 / n), tol_nats)
        c_max, p_cap = res0.rate_bits, res0.p
        if _warm is not None:
            _warm["cap"] = (c_max, p_cap)
    if r > c_max + tol_r:
        raise InfeasibleError(f"rate target {r} exceeds capacity {c_max}")
    e_cap = float(p_cap @ fvec)
    if rng == 0:
        return EnergyPoint(fmax, InputDistribution(p_cap, ch.inputs))

    i_face, p_face = _solve_face(ch, fvec, w, wlogw, tol_nats, 2 * tol_b)
    if i_face >= r - tol_r:
        return EnergyPoint(float(p_face @ fvec), InputDistribution(p_face, ch.inputs))

    def solve(mu, p_start):
        res = _ba_tilted(w, wlogw, mu * _LN2 * fvec, p_start, tol_nats)
        return res.rate_bits, float(res.p @ fvec), res.p

    mu_lo, i_lo, e_lo, p_lo = 0.0, c_max, e_cap, p_cap
    mu_hi = 1.0 / rng
    p_prev = p_cap
    for _ in range(80):
        i_hi, e_hi, p_hi = solve(mu_hi, p_prev)
        p_prev = p_hi
        if i_hi < r:
            break
        mu_lo, i_lo, e_lo, p_lo = mu_hi, i_hi, e_hi, p_hi
        mu_hi *= 2.0
        if mu_hi > 1e9 / rng:
            return EnergyPoint(e_hi, InputDistribution(p_hi, ch.inputs))
    else:
        raise NumericalError("could not bracket the rate constraint")

    for _ in range(200):
        if e_hi - e_lo <= tol_b:
            return EnergyPoint(e_lo, InputDistribution(p_lo, ch.inputs))
        if mu_hi - mu_lo <= 1e-13 * max(1.0, mu_hi):
            break
        mu_mid = 0.5 * (mu_lo + mu_hi)
        i_mid, e_mid, p_mid = solve(mu_mid, p_lo)
        if i_mid >= r:
            mu_lo, i_lo, e_lo, p_lo = mu_mid, i_mid, e_mid, p_mid
        else:
            mu_hi, i_hi, e_hi, p_hi = mu_mid, i_mid, e_mid, p_mid
    # rate kink: push energy up along the mixture path while the rate
    # constraint still holds
    th_lo, th_hi = 0.0, 1.0
    for _ in range(60):
        th = 0.5 * (th_lo + th_hi)
        dist = InputDistribution(th * p_hi + (1.0 - th) * p_lo, ch.inputs)
        if mutual_information(dist, ch) >= r:
            th_lo = th
        else:
            th_hi = th
    p_mix = th_lo * p_hi + (1.0 - th_lo) * p_lo
    dist = InputDistribution(p_mix, ch.inputs)
    return EnergyPoint(float(p_mix @ fvec), dist)


def capacity_energy_set(ch: DiscreteChannel, env: EnvelopePair, b: float,
                        tol: float = 1e-9, tol_b: float | None = None) -> CapacityPoint:
    """Guaranteed rate at energy b over every function inside the band:
    the worst case is the lower envelope, so evaluate C(b) with it."""
    return capacity_energy(ch, env.lower, b, tol=tol, tol_b=tol_b)


def energy_capacity_set(ch: DiscreteChannel, env: EnvelopePair, r: float,
                        tol: float = 1e-9, tol_r: float = 1e-6) -> EnergyPoint:
    """Guaranteed harvest at rate r over every function inside the band."""
    return energy_capacity(ch, env.lower, r, tol=tol, tol_r=tol_r)


@dataclass(frozen=True)
class TradeoffCurve:
    """Swept tradeoff curve with the achieving input laws.

    kind \"capacity_energy\": x is the energy floor b, y the best rate.
    kind \"energy_capacity\": x is the rate floor r, y the best harvest.
    """

    kind: str
    x: np.ndarray
    y: np.ndarray
    distributions: tuple

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        object.__setattr__(self, "y", np.asarray(self.y, dtype=float))

    @property
    def axis_names(self):
        return (("energy", "rate") if self.kind == "capacity_energy"
                else ("rate", "energy"))

    def monotone_ok(self, tol: float = 1e-6) -> bool:
        return bool(np.all(np.diff(self.y) <= tol))

    def concave_ok(self, tol: float = 1e-5) -> bool:
        """Midpoint concavity on the even sweep grid."""
        y = self.y
        if y.size < 3:
            return True
        mid = 0.5 * (y[:-2] + y[2:])
        return bool(np.all(y[1:-1] >= mid - tol))

    def to_csv(self, path) -> None:
        xn, yn = self.axis_names
        with open(path, "w") as fh:
            fh.write(f"{xn},{yn}\n")
            for xv, yv in zip(self.x, self.y):
                fh.write(f"{xv!r},{yv!r}\n")

    def to_json(self, path=None):
        xn, yn = self.axis_names
        doc = {"kind": self.kind, xn: [float(v) for v in self.x],
               yn: [float(v) for v in self.y],
               "distributions": [[float(v) for v in d.p] for d in self.distributions]}
        if path is None:
            return doc
        with open(path, "w") as fh:
            json.dump(doc, fh)
        return doc


def sweep_curve(ch: DiscreteChannel, f, kind: str = "capacity_energy",
                n_points: int = 33, tol: float = 1e-9) -> TradeoffCurve:
    """Evaluate the tradeoff on an even grid of the swept parameter.

    capacity_energy sweeps b over [min f, max f]; energy_capacity sweeps
    r over [0, capacity].  Results are audit-ready: monotone_ok and
    concave_ok check the shape properties the true curves must have.
    """
    check_positive_int(n_points, "n_points")
    if n_points < 2:
        raise InvalidParameterError("n_points must be at least 2")
    fvec = _energy_vector(ch, f)
    warm: dict = {}
    xs, ys, dists = [], [], []
    if kind == "capacity_energy":
        grid = np.linspace(float(fvec.min()), float(fvec.max()), n_points)
        for b in grid:
            rate, p = capacity_energy(ch, fvec, float(b), tol=tol, _warm=warm)
            xs.append(float(b)); ys.append(rate); dists.append(p)
    elif kind == "energy_capacity":
        c_max, _ = unconstrained_capacity(ch, tol=tol)
        grid = np.linspace(0.0, c_max, n_points)
        for r in grid:
            e, p = energy_capacity(ch, fvec, float(r), tol=tol, _warm=warm)
            xs.append(float(r)); ys.append(e); dists.append(p)
    else:
        raise InvalidParameterError(f"unknown sweep kind {kind!r}")
    return TradeoffCurve(kind=kind, x=np.array(xs), y=np.array(ys),
                         distributions=tuple(dists))
