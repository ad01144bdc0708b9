"""Command-line front end.

Every invocation resolves to a ScenarioConfig: a command name plus a
parameter mapping, assembled from an optional JSON config file with
command-line flags taking precedence key by key.  Unknown parameter
keys are rejected before anything runs.  Each run writes its outputs
into a directory named by the resolved config digest, so rerunning the
same configuration lands in the same place with identical bytes.

Exit codes: 0 success, 2 invalid configuration, 3 infeasible problem,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from .capacity import capacity_energy, energy_capacity, unconstrained_capacity
from .channel import DiscreteChannel, make_adversarial_mod, make_awgn_peak
from .experiments import (
    config_digest,
    energy_loss_lower_bound,
    energy_loss_sweep,
    info_loss_sweep,
    write_report,
)
from .funcspace import (
    GridFunction,
    SmoothnessClass,
    read_grid_csv,
    read_samples_csv,
    sample_regular,
    write_grid_csv,
)
from .jscc import (
    SourceModel,
    counterexample_scenario,
    default_counterexample_source,
    energy_distortion_curve,
)
from .multicast import MulticastProblem, multicast_capacity, multicast_energy
from .reconstruct import local_poly_fit, lower_envelope, spline_interpolate
from .validation import (
    InfeasibleError,
    InvalidParameterError,
    NumericalError,
)

COMMANDS = ("reconstruct", "capacity", "sweep-energy-loss", "sweep-info-loss",
            "lower-bound", "multicast", "jscc", "counterexample")

_ALLOWED = {
    "reconstruct": {"beta", "samples", "m", "noise_sigma", "order", "k_bound",
                    "method"},
    "capacity": {"channel", "beta", "b", "r", "tol"},
    "sweep-energy-loss": {"channel", "beta", "order", "k_bound", "r", "m_list",
                          "mode", "noise_sigma", "trials"},
    "sweep-info-loss": {"channel", "beta", "order", "k_bound", "b", "m_list",
                        "mode", "noise_sigma", "trials"},
    "lower-bound": {"channel", "order", "k_bound", "r", "m_list", "level",
                    "amplitude_scale"},
    "multicast": {"scenario", "rate", "node", "tol"},
    "jscc": {"channel", "beta", "source", "kappa", "n_points"},
    "counterexample": {"m_list", "level", "amplitude_scale", "kappa", "n_out",
                       "concentration_scale", "order", "k_bound"},
}


@dataclass
class ScenarioConfig:
    """One runnable scenario: a command plus its parameter mapping."""

    command: str
    parameters: dict = field(default_factory=dict)
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise InvalidParameterError(
                f"unknown command {self.command!r}; expected one of {COMMANDS}")
        unknown = set(self.parameters) - _ALLOWED[self.command]
        if unknown:
            raise InvalidParameterError(
                f"unknown parameters for {self.command}: {sorted(unknown)}")
        self.seed = int(self.seed)
        self.threads = max(1, int(self.threads))

    def resolved(self) -> dict:
        return {"command": self.command, "parameters": self.parameters,
                "seed": self.seed, "threads": self.threads}

    def digest(self) -> str:
        return config_digest(self.resolved())


def _load_spec(value):
    """Accept an inline mapping, a JSON string, or a path to a JSON file."""
    if isinstance(value, dict):
        return value
    if isinstance(value, str):
        text = value.strip()
        if text.startswith("{"):
            return json.loads(text)
        with open(value) as fh:
            return json.load(fh)
    raise InvalidParameterError(f"expected a mapping or JSON, got {value!r}")


def build_channel(spec) -> DiscreteChannel:
    spec = dict(_load_spec(spec))
    kind = spec.pop("kind", None)
    if kind == "bsc":
        eps = float(spec.pop("crossover"))
        if not 0.0 <= eps <= 1.0:
            raise InvalidParameterError(f"crossover must be in [0, 1], got {eps}")
        w = np.array([[1.0 - eps, eps], [eps, 1.0 - eps]])
        ch = DiscreteChannel(np.array([0.0, 1.0]), (0.0, 1.0), w)
    elif kind == "awgn":
        ch = make_awgn_peak(int(spec.pop("n_in")), int(spec.pop("n_out")),
                            float(spec.pop("noise_std")))
    elif kind == "adversarial":
        ch = make_adversarial_mod(int(spec.pop("m")), int(spec.pop("n_in")),
                                  int(spec.pop("n_out")),
                                  float(spec.pop("concentration", 50.0)))
    elif kind == "file":
        ch = DiscreteChannel.from_json(spec.pop("path"))
    else:
        raise InvalidParameterError(f"unknown channel kind {kind!r}")
    if spec:
        raise InvalidParameterError(f"unknown channel keys: {sorted(spec)}")
    return ch


def build_beta(spec) -> GridFunction:
    spec = dict(_load_spec(spec))
    kind = spec.pop("kind", None)
    if kind == "linear":
        fn = GridFunction.from_callable(lambda x: x)
    elif kind == "constant":
        fn = GridFunction.constant(float(spec.pop("value")))
    elif kind == "sine":
        lam = int(spec.pop("order"))
        k = float(spec.pop("k_bound", 1.0))
        scale = float(spec.pop("scale", 0.9))
        amp = scale * k / (2.0 * np.pi) ** lam
        fn = GridFunction.from_callable(
            lambda x: amp * np.sin(2.0 * np.pi * x) + amp)
    elif kind == "poly":
        coeffs = [float(c) for c in spec.pop("coeffs")]
        fn = GridFunction.from_callable(
            lambda x: sum(c * x ** k for k, c in enumerate(coeffs)))
    elif kind == "file":
        fn = read_grid_csv(spec.pop("path"))
    else:
        raise InvalidParameterError(f"unknown beta kind {kind!r}")
    if spec:
        raise InvalidParameterError(f"unknown beta keys: {sorted(spec)}")
    return fn


def build_source(spec) -> SourceModel:
    spec = dict(_load_spec(spec))
    kind = spec.pop("kind", None)
    if kind == "default3":
        src = default_counterexample_source()
    elif kind == "quadratic":
        n = int(spec.pop("n_source", 17))
        centers = tuple(float(c) for c in spec.pop("centers", (0.2, 0.5, 0.8)))
        grid = np.linspace(0.0, 1.0, n)
        d = (grid[:, None] - np.asarray(centers)[None, :]) ** 2
        pmf = spec.pop("pmf", None)
        pmf = (np.full(n, 1.0 / n) if pmf is None
               else np.asarray([float(v) for v in pmf]))
        src = SourceModel(grid, pmf, centers, d)
    elif kind == "explicit":
        src = SourceModel(np.asarray(spec.pop("s_grid"), dtype=float),
                          np.asarray(spec.pop("pmf"), dtype=float),
                          tuple(spec.pop("repro")),
                          np.asarray(spec.pop("distortion"), dtype=float))
    else:
        raise InvalidParameterError(f"unknown source kind {kind!r}")
    if spec:
        raise InvalidParameterError(f"unknown source keys: {sorted(spec)}")
    return src


def _cls(params) -> SmoothnessClass:
    return SmoothnessClass(order=int(params["order"]),
                           k_bound=float(params.get("k_bound", 1.0)))


def _m_list(params):
    v = params.get("m_list", (9, 17, 33, 65, 129, 257))
    if isinstance(v, str):
        v = [int(t) for t in v.replace(",", " ").split()]
    return [int(t) for t in v]


def _run_reconstruct(cfg: ScenarioConfig, run_dir: str) -> str:
    p = cfg.parameters
    cls = _cls(p)
    sigma = float(p.get("noise_sigma", 0.0))
    if "samples" in p:
        s = read_samples_csv(p["samples"])
        truth = None
    else:
        truth = build_beta(p.get("beta", {"kind": "linear"}))
        s = sample_regular(truth, int(p.get("m", 33)), sigma, seed=cfg.seed)
    method = p.get("method", "envelope" if s.noise_sigma == 0.0 else "localpoly")
    if method == "spline":
        fit = spline_interpolate(s, cls)
    elif method == "localpoly":
        fit = local_poly_fit(s, cls)
    elif method == "envelope":
        env = lower_envelope(s, cls)
        fit = env.lower
        write_grid_csv(env.lower, os.path.join(run_dir, "envelope_lower.csv"))
        write_grid_csv(env.upper, os.path.join(run_dir, "envelope_upper.csv"))
    else:
        raise InvalidParameterError(f"unknown method {method!r}")
    write_grid_csv(fit, os.path.join(run_dir, "reconstruction.csv"))
    if truth is not None:
        gap = float(np.max(np.abs(fit.values - truth.values)))
        return f"reconstruct method={method} m={s.m} sup_gap={gap:.6g}"
    return f"reconstruct method={method} m={s.m}"


def _run_capacity(cfg: ScenarioConfig, run_dir: str) -> str:
    p = cfg.parameters
    ch = build_channel(p["channel"])
    tol = float(p.get("tol", 1e-9))
    if "b" in p and "r" in p:
        raise InvalidParameterError("give at most one of b and r")
    if "b" in p:
        beta = build_beta(p["beta"])
        point = capacity_energy(ch, beta, float(p["b"]), tol=tol)
        value, summary = point.rate, f"rate={point.rate:.6f} bits at b={p['b']}"
    elif "r" in p:
        beta = build_beta(p["beta"])
        point = energy_capacity(ch, beta, float(p["r"]), tol=tol)
        value, summary = point.energy, f"energy={point.energy:.6f} at r={p['r']}"
    else:
        point = unconstrained_capacity(ch, tol=tol)
        value, summary = point.rate, f"rate={point.rate:.6f} bits"
    doc = {"value": value, "distribution": [float(v) for v in point.p.p]}
    with open(os.path.join(run_dir, "point.json"), "w") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return f"capacity {summary}"


def _run_sweep(cfg: ScenarioConfig, run_dir: str, kind: str) -> str:
    p = cfg.parameters
    ch = build_channel(p["channel"])
    beta = build_beta(p["beta"])
    cls = _cls(p)
    common = dict(mode=p.get("mode", "noiseless"),
                  noise_sigma=float(p.get("noise_sigma", 0.05)),
                  trials=int(p.get("trials", 200)), seed=cfg.seed,
                  threads=cfg.threads)
    if kind == "energy":
        report = energy_loss_sweep(ch, beta, cls, float(p["r"]), _m_list(p),
                                   **common)
    else:
        report = info_loss_sweep(ch, beta, cls, float(p["b"]), _m_list(p),
                                 **common)
    write_report(report, run_dir)
    slopes = " ".join(f"{k}={v:.3f}" for k, v in sorted(report.fitted_slope.items()))
    return f"sweep-{kind}-loss m={report.m_values} {slopes}"


def _run_lower_bound(cfg: ScenarioConfig, run_dir: str) -> str:
    p = cfg.parameters
    report = energy_loss_lower_bound(
        build_channel(p["channel"]), _cls(p), float(p["r"]), _m_list(p),
        level=float(p.get("level", 1.0)),
        amplitude_scale=float(p.get("amplitude_scale", 0.5)))
    write_report(report, run_dir)
    slope = report.fitted_slope.get("delta_e_prime", float("nan"))
    note = f" flags={';'.join(report.flags)}" if report.flags else ""
    return f"lower-bound slope={slope:.3f}{note}"


def _run_multicast(cfg: ScenarioConfig, run_dir: str) -> str:
    p = cfg.parameters
    prob = MulticastProblem.from_json(p["scenario"])
    tol = float(p.get("tol", 1e-6))
    if "node" in p:
        point = multicast_energy(prob, float(p.get("rate", 0.0)), int(p["node"]),
                                 tol=tol)
        value, summary = point.energy, (
            f"energy={point.energy:.6f} node={p['node']} at r={p.get('rate', 0.0)}")
    else:
        point = multicast_capacity(prob, tol=tol)
        value, summary = point.rate, f"rate={point.rate:.6f} bits"
    doc = {"value": value, "distribution": [float(v) for v in point.p.p]}
    with open(os.path.join(run_dir, "point.json"), "w") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return f"multicast {summary}"


def _run_jscc(cfg: ScenarioConfig, run_dir: str) -> str:
    p = cfg.parameters
    curve = energy_distortion_curve(
        build_source(p.get("source", {"kind": "default3"})),
        build_channel(p["channel"]),
        build_beta(p.get("beta", {"kind": "linear"})),
        kappa=float(p.get("kappa", 1.0)),
        n_points=int(p.get("n_points", 33)))
    curve.to_csv(os.path.join(run_dir, "curve.csv"))
    b, dd = curve.as_arrays()
    return (f"jscc points={len(curve.points)} degenerate={curve.degenerate} "
            f"b=[{b[0]:.4g},{b[-1]:.4g}] d=[{dd[0]:.4g},{dd[-1]:.4g}]")


def _run_counterexample(cfg: ScenarioConfig, run_dir: str) -> str:
    p = cfg.parameters
    kwargs = {}
    if "order" in p:
        kwargs["cls"] = _cls(p)
    rep = counterexample_scenario(
        _m_list(p) if "m_list" in p else [9, 33, 129],
        level=float(p.get("level", 1.0)),
        amplitude_scale=float(p.get("amplitude_scale", 0.5)),
        kappa=float(p.get("kappa", 0.25)),
        n_out=int(p.get("n_out", 24)),
        concentration_scale=float(p.get("concentration_scale", 6.25)),
        **kwargs)
    doc = {"m_values": list(rep.m_values), "losses": list(rep.losses),
           "predicted_floor": rep.predicted_floor,
           "rel_variation": rep.rel_variation}
    with open(os.path.join(run_dir, "counterexample.json"), "w") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return (f"counterexample floor={rep.predicted_floor:.6g} "
            f"min_loss={min(rep.losses):.6g} rel_variation={rep.rel_variation:.3g}")


_RUNNERS = {
    "reconstruct": _run_reconstruct,
    "capacity": _run_capacity,
    "sweep-energy-loss": lambda c, d: _run_sweep(c, d, "energy"),
    "sweep-info-loss": lambda c, d: _run_sweep(c, d, "info"),
    "lower-bound": _run_lower_bound,
    "multicast": _run_multicast,
    "jscc": _run_jscc,
    "counterexample": _run_counterexample,
}

_REQUIRED = {
    "reconstruct": ("order",),
    "capacity": ("channel",),
    "sweep-energy-loss": ("channel", "beta", "order", "r"),
    "sweep-info-loss": ("channel", "beta", "order", "b"),
    "lower-bound": ("channel", "order", "r"),
    "multicast": ("scenario",),
    "jscc": ("channel",),
    "counterexample": (),
}


def validate(cfg: ScenarioConfig) -> None:
    """Check the parameters against module preconditions; build nothing heavy.

    Runs before the run directory exists so an invalid configuration
    leaves no files behind.
    """
    p = cfg.parameters
    missing = [k for k in _REQUIRED[cfg.command] if k not in p]
    if missing:
        raise InvalidParameterError(
            f"{cfg.command} requires parameters {missing}")
    try:
        if "order" in p:
            _cls(p)
        if "channel" in p:
            build_channel(p["channel"])
        if "beta" in p:
            build_beta(p["beta"])
        if "source" in p:
            build_source(p["source"])
        if "m_list" in p:
            ml = _m_list(p)
            if not ml or any(m < 2 for m in ml):
                raise InvalidParameterError(f"m_list entries must be >= 2, got {ml}")
        for key in ("b", "r", "rate", "level", "noise_sigma"):
            if key in p and not np.isfinite(float(p[key])):
                raise InvalidParameterError(f"{key} must be finite")
        for key, low in (("tol", 0.0), ("kappa", 0.0), ("trials", 0.9),
                         ("n_points", 0.9), ("n_out", 1.0)):
            if key in p and float(p[key]) <= low:
                raise InvalidParameterError(f"{key} is out of range: {p[key]!r}")
        if p.get("mode", "noiseless") not in ("noiseless", "noisy"):
            raise InvalidParameterError(f"unknown mode {p['mode']!r}")
    except (TypeError, ValueError, KeyError) as exc:
        if isinstance(exc, InvalidParameterError):
            raise
        raise InvalidParameterError(f"malformed parameters: {exc}") from exc
    if cfg.command == "capacity" and ("b" in p or "r" in p) and "beta" not in p:
        raise InvalidParameterError("constrained capacity requires beta")
    if cfg.command == "multicast" and not isinstance(p["scenario"], (str, dict)):
        raise InvalidParameterError("scenario must be a path or mapping")


def run(config: ScenarioConfig, out_root: str = "runs") -> str:
    """Execute one scenario; returns the run directory path.

    The directory is named by the config digest and receives a copy of
    the resolved configuration next to the command's outputs; nothing is
    written when validation fails.
    """
    validate(config)
    run_dir = os.path.join(out_root, config.digest()[:16])
    os.makedirs(run_dir, exist_ok=True)
    with open(os.path.join(run_dir, "config.json"), "w") as fh:
        json.dump(config.resolved(), fh, sort_keys=True, indent=2)
        fh.write("\n")
    summary = _RUNNERS[config.command](config, run_dir)
    print(f"{summary} run={run_dir}")
    return run_dir


def _add_override_args(sub, parent):
    """Per-command flags; every value lands in parameters as a string."""
    flags = {
        "reconstruct": ["beta", "samples", "m", "noise_sigma", "order",
                        "k_bound", "method"],
        "capacity": ["channel", "beta", "b", "r", "tol"],
        "sweep-energy-loss": ["channel", "beta", "order", "k_bound", "r",
                              "m_list", "mode", "noise_sigma", "trials"],
        "sweep-info-loss": ["channel", "beta", "order", "k_bound", "b",
                            "m_list", "mode", "noise_sigma", "trials"],
        "lower-bound": ["channel", "order", "k_bound", "r", "m_list", "level",
                        "amplitude_scale"],
        "multicast": ["scenario", "rate", "node", "tol"],
        "jscc": ["channel", "beta", "source", "kappa", "n_points"],
        "counterexample": ["m_list", "level", "amplitude_scale", "kappa",
                           "n_out", "concentration_scale", "order", "k_bound"],
    }
    parsers = {}
    for cmd in COMMANDS:
        sp = sub.add_parser(cmd, parents=[parent])
        for key in flags[cmd]:
            sp.add_argument(f"--{key.replace('_', '-')}", dest=key, default=None)
        parsers[cmd] = sp
    return parsers


_NUMERIC_KEYS = {"m", "noise_sigma", "order", "k_bound", "b", "r", "tol",
                 "trials", "rate", "node", "kappa", "n_points", "level",
                 "amplitude_scale", "n_out", "concentration_scale"}


def _coerce(key: str, value):
    if not isinstance(value, str) or key not in _NUMERIC_KEYS:
        return value
    try:
        f = float(value)
    except ValueError:
        raise InvalidParameterError(f"{key} must be numeric, got {value!r}")
    return int(f) if f == int(f) and key in ("m", "order", "trials", "node",
                                             "n_points", "n_out") else f


def main(argv=None) -> int:
    # SUPPRESS defaults let the global flags live on the top parser and on
    # every subparser without the subparser defaults clobbering values that
    # were already parsed before the command token.
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS,
                        help="JSON scenario file")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--out", default=argparse.SUPPRESS)
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS)
    parser = argparse.ArgumentParser(
        prog="sietlab",
        description="information-energy tradeoffs with sampled harvesters",
        parents=[common])
    sub = parser.add_subparsers(dest="command")
    _add_override_args(sub, common)
    args = parser.parse_args(argv)
    config_path = getattr(args, "config", None)
    seed_flag = getattr(args, "seed", None)
    out_root = getattr(args, "out", "runs")
    threads_flag = getattr(args, "threads", None)

    try:
        doc = {}
        if config_path:
            with open(config_path) as fh:
                doc = json.load(fh)
            stray = set(doc) - {"command", "parameters", "seed", "threads"}
            if stray:
                raise InvalidParameterError(
                    f"unknown config keys: {sorted(stray)}")
        command = args.command or doc.get("command")
        if not command:
            raise InvalidParameterError("no command given (flag or config file)")
        params = dict(doc.get("parameters", {}))
        for key in _ALLOWED.get(command, ()):  # flags win over the file
            value = getattr(args, key, None)
            if value is not None:
                params[key] = _coerce(key, value)
        cfg = ScenarioConfig(
            command=command, parameters=params,
            seed=seed_flag if seed_flag is not None else doc.get("seed", 0),
            threads=(threads_flag if threads_flag is not None
                     else doc.get("threads", 1)))
    except (InvalidParameterError, OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    try:
        run(cfg, out_root=out_root)
    except (InvalidParameterError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 3
    except (NumericalError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
