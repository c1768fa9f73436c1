"""Command-line front end: experiment configuration, orchestration, output.

Subcommands: sieve, convergents, decompose, correlate, expsum, complexity,
shadow, distality, orbit.  Options may come from a JSON config file
(--config); explicit flags win over file values.  Runs are deterministic:
identical config and seed produce byte-identical output files.

Every CSV starts with a comment line recording the config hash (and any
truncation tail bounds), then a header row naming the columns.  Floats are
written in scientific notation with 17 significant digits.  Exit status: 0
on success, 2 on validation errors, 3 on budget/resource errors.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from dataclasses import dataclass

# one knob for worker threads in the numeric kernels; must be exported
# before the first numpy import to take effect
if os.environ.get("NILSKEW_THREADS"):
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, os.environ["NILSKEW_THREADS"])

import numpy as np

from . import arith, complexity, correlate, flows, fourier, observables
from .errors import NilskewError, ResourceBudgetError, ValidationError
from .heisenberg import ProductPoint, product_point

__all__ = ["main", "run", "ExperimentConfig"]


@dataclass
class ExperimentConfig:
    command: str
    params: dict

    def hash(self) -> str:
        semantic = {k: v for k, v in self.params.items() if k not in ("out", "config")}
        canon = json.dumps({"command": self.command, **semantic},
                           sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:16]


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.16e}"
    return str(v)


def write_csv(path, columns, rows, meta: dict) -> None:
    lines = ["# " + " ".join(f"{k}={_fmt(v)}" for k, v in meta.items())]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _alpha_from(params) -> arith.Alpha:
    spec = params.get("alpha")
    if spec is None:
        raise ValidationError("an --alpha specification is required")
    return arith.Alpha.parse(str(spec))


def _series_from(params, key, default=None):
    spec = params.get(key, default)
    if spec is None:
        return None
    return fourier.series_from_spec(spec)


def _flow_from(params) -> flows.FlowSpec:
    alpha = _alpha_from(params)
    kind = str(params.get("flow", "t")).lower()
    phi = _series_from(params, "phi", "zero")
    psi = _series_from(params, "psi", "zero")
    if kind == "t":
        return flows.skew_T(alpha, phi, psi)
    if kind == "s":
        phi2 = _series_from(params, "phi2", "zero")
        return flows.skew_S(alpha, phi, phi2, psi)
    if kind == "t1":
        B = params.get("b", 3)
        conj = flows.build_conjugation(alpha, phi, psi, B)
        return conj.t1
    raise ValidationError(f"unknown flow kind {kind!r}")


def _start_point(params, rng) -> ProductPoint:
    start = params.get("start")
    if start:
        try:
            t, x, y, z = (float(tok) for tok in str(start).split(","))
        except ValueError as exc:
            raise ValidationError(f"bad start spec {start!r}") from exc
        return product_point(t, x, y, z)
    return product_point(*(float(v) for v in rng.random(4)))


def _checkpoints(params, N) -> list:
    raw = params.get("checkpoints")
    if not raw:
        return [N]
    if isinstance(raw, str):
        toks = [t for t in raw.split(",") if t]
    else:
        toks = list(raw)
    return [int(float(t)) for t in toks]


def _mu_table(params, N) -> arith.MobiusTable:
    cache = params.get("mu_cache")
    if cache and os.path.exists(cache):
        table = arith.read_sieve_cache(cache)
        if table.n_max >= N:
            return table
    return arith.mobius_sieve(N, segmented=bool(params.get("segmented")))


# ----------------------------------------------------------------------------
# Runners


def _run_sieve(cfg: ExperimentConfig) -> int:
    n = int(cfg.params["n"])
    out = cfg.params.get("out", "mu.bin")
    table = arith.mobius_sieve(n, segmented=bool(cfg.params.get("segmented")))
    arith.write_sieve_cache(table, out)
    stats = correlate.control_stats(n, table)
    print(json.dumps({
        "config": cfg.hash(),
        "n": n,
        "out": out,
        "mertens_ratio": stats.mertens_ratio,
        "squarefree_density": stats.squarefree_density,
    }))
    return 0


def _run_convergents(cfg: ExperimentConfig) -> int:
    alpha = _alpha_from(cfg.params)
    k_max = int(cfg.params.get("k", 20))
    q_cap = int(float(cfg.params.get("q_cap", 10**15)))
    if alpha.source == "cf":
        cf = alpha.continued_fraction()  # keep the literal quotient list
    else:
        cf = arith.cf_expand(alpha.exact, k_max=k_max, q_cap=q_cap,
                             uncertainty=alpha.uncertainty)
    rows = [(k, cf.partial_quotients[k - 1], cf.l(k), cf.q(k))
            for k in range(1, min(cf.K, k_max) + 1)]
    out = cfg.params.get("out", "convergents.csv")
    write_csv(out, ["k", "a_k", "l_k", "q_k"], rows, {"config": cfg.hash()})
    print(json.dumps({"config": cfg.hash(), "out": out, "terms": cf.K,
                      "terminated": cf.terminated}))
    return 0


def _run_decompose(cfg: ExperimentConfig) -> int:
    alpha = _alpha_from(cfg.params)
    B = float(cfg.params.get("b", 3))
    f = _series_from(cfg.params, "phi")
    if f is None:
        raise ValidationError("decompose needs a --phi function spec")
    cf = alpha.continued_fraction(k_max=int(cfg.params.get("k", 64)))
    cls = arith.classify(cf, B)
    f1, f2 = fourier.decompose(f, cls, cf)
    profile = fourier.TailProfile.fit(f, B)
    g, tail = fourier.cobound(f2, alpha, profile) if f2.support else \
        (fourier.zero_series(), 0.0)
    rows = []
    for m in sorted(set(f.support)):
        part = "resonant" if m in f1.coeffs else "nonresonant"
        c = f.coeff(m)
        rows.append((m, c.real, c.imag, part))
    out = cfg.params.get("out", "decompose.csv")
    write_csv(out, ["m", "re", "im", "part"], rows,
              {"config": cfg.hash(), "tail_bound": tail})
    print(json.dumps({"config": cfg.hash(), "out": out,
                      "resonant_modes": len(f1.support),
                      "nonresonant_modes": len(f2.support),
                      "tail_bound": tail}))
    return 0


def _run_correlate(cfg: ExperimentConfig) -> int:
    params = cfg.params
    flow = _flow_from(params)
    obs = observables.observable_from_spec(params.get("obs", "fA"))
    N = int(float(params["n"]))
    checkpoints = _checkpoints(params, N)
    rng = np.random.default_rng(int(params.get("seed", 0)))
    P0 = _start_point(params, rng)
    mu = _mu_table(params, N)
    series = correlate.mobius_correlation(
        flow, obs, P0, N, checkpoints, mu,
        control=bool(params.get("control", False)),
    )
    rows = [(n, v.real, v.imag, abs(v)) for n, v in series]
    meta = {"config": cfg.hash()}
    if isinstance(obs, observables.ClassAObservable):
        meta["theta_tail"] = obs.theta.truncation_tail()
    out = params.get("out", "correlate.csv")
    write_csv(out, ["n", "re_avg", "im_avg", "abs_avg"], rows, meta)
    print(json.dumps({"config": cfg.hash(), "out": out,
                      "final_abs": abs(series[-1][1]) if series else None}))
    return 0


def _run_expsum(cfg: ExperimentConfig) -> int:
    params = cfg.params
    coeffs = [float(t) for t in str(params.get("poly", "0")).split(",")]
    q = int(params.get("q", 1))
    a = int(params.get("a", 0))
    N = int(float(params["n"]))
    checkpoints = _checkpoints(params, N)
    mu = _mu_table(params, N)
    series = correlate.mu_exponential_sum(coeffs, a, q, N, mu,
                                          checkpoints=checkpoints)
    rows = [(n, v.real, v.imag, abs(v) / n) for n, v in series]
    out = params.get("out", "expsum.csv")
    write_csv(out, ["n", "re_sum", "im_sum", "abs_avg"], rows,
              {"config": cfg.hash()})
    print(json.dumps({"config": cfg.hash(), "out": out}))
    return 0


def _run_complexity(cfg: ExperimentConfig) -> int:
    params = cfg.params
    flow = _flow_from(params)
    rng = np.random.default_rng(int(params.get("seed", 0)))
    P0 = _start_point(params, rng)
    sample = complexity.empirical_sample(
        flow, P0,
        burn_in=int(params.get("burn_in", 0)),
        count=int(params.get("sample", 256)),
        stride=int(params.get("stride", 1)),
    )
    report = complexity.estimate_sn(
        flow, sample,
        n=int(params.get("nsteps", 1)),
        epsilon=float(params.get("epsilon", 0.1)),
        window=int(params.get("window", 3)),
    )
    payload = {
        "config": cfg.hash(),
        "n": report.n,
        "epsilon": report.epsilon,
        "centers_used": report.centers_used,
        "covered_mass": report.covered_mass,
        "sample_size": report.sample_size,
    }
    out = params.get("out")
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    print(json.dumps(payload))
    return 0


def _run_shadow(cfg: ExperimentConfig) -> int:
    params = cfg.params
    B = int(params.get("b", 3))
    levels = int(params.get("levels", 2))
    cf = arith.liouville_alpha(B, levels)
    alpha = arith.Alpha.from_cf(cf)
    cls = arith.classify(cf, B)
    sharp_ks = [k for k in range(1, cf.K) if cf.q(k) in cls.q_sharp]
    if not sharp_ks:
        raise ValidationError("the constructed alpha has no sharp denominators")
    k_index = int(params.get("k_index", sharp_ks[0]))
    phi = _series_from(params, "phi", None)
    psi = _series_from(params, "psi", None)
    if phi is None or psi is None:
        phi, psi = _default_resonant_pair(cf, cls)
    flow = flows.skew_T(alpha, phi, psi)
    eps = float(params.get("epsilon", 1e-2))
    L = int(params.get("L", math.ceil(complexity.lipschitz(phi, 1.0 / eps))))
    rng = np.random.default_rng(int(params.get("seed", 0)))
    trials = [product_point(*rng.random(4)) for _ in range(int(params.get("trials", 20)))]
    result = complexity.verify_shadowing(
        flow, cf, cls, k_index, B, eps, L, trials,
        window=int(params.get("window", 3)),
        step_budget=int(float(params.get("budget", 10**8))),
    )
    rows = [(i, peak, avg) for i, (peak, avg) in enumerate(result.per_trial)]
    out = params.get("out", "shadow.csv")
    write_csv(out, ["trial", "max_pointwise", "dbar"], rows, {
        "config": cfg.hash(),
        "q_k": result.q_k,
        "n_k": result.n_k,
        "bound_20eps": 20 * eps,
    })
    print(json.dumps({
        "config": cfg.hash(), "out": out, "q_k": result.q_k, "n_k": result.n_k,
        "max_pointwise": float(result.max_pointwise),
        "max_dbar": float(result.max_dbar),
        "pass": bool(result.max_pointwise < 20 * eps),
        "grid_cardinality": result.grid_cardinality,
    }))
    return 0


def _default_resonant_pair(cf, cls):
    """Small resonant-band fixture for the shadowing run."""
    sharp = sorted(cls.q_sharp)
    q = sharp[0]
    phi = fourier.FourierSeries({q: 0.01, -q: 0.01}, real_valued=True)
    psi = fourier.FourierSeries({0: 0.05, q: 0.01, -q: 0.01}, real_valued=True)
    return phi, psi


def _run_distality(cfg: ExperimentConfig) -> int:
    params = cfg.params
    flow = _flow_from(params)
    N = int(float(params.get("n", 10**4)))
    rng = np.random.default_rng(int(params.get("seed", 0)))
    P = _start_point({"start": params.get("start_p")}, rng)
    Q = _start_point({"start": params.get("start_q")}, rng)
    window = int(params.get("window", 3))
    marks = _checkpoints(params, N)
    rows = []
    for mark in sorted(marks):
        dist, argmin = complexity.distality_probe(flow, P, Q, mark, window)
        rows.append((mark, dist, argmin))
    out = params.get("out", "distality.csv")
    write_csv(out, ["n", "min_dist", "argmin"], rows, {"config": cfg.hash()})
    print(json.dumps({"config": cfg.hash(), "out": out,
                      "min_dist": rows[-1][1] if rows else None}))
    return 0


def _run_orbit(cfg: ExperimentConfig) -> int:
    params = cfg.params
    flow = _flow_from(params)
    N = int(float(params.get("n", 100)))
    stride = int(params.get("stride", 1))
    rng = np.random.default_rng(int(params.get("seed", 0)))
    P0 = _start_point(params, rng)
    rows = [(0, P0.t, P0.p.rep.x, P0.p.rep.y, P0.p.rep.z)]
    for n0, t, x, y, z in flows.orbit_coords(flow, P0, N):
        for i in range(len(t)):
            n = n0 + i + 1
            if n % stride == 0:
                rows.append((n, t[i], x[i], y[i], z[i]))
    out = params.get("out", "orbit.csv")
    write_csv(out, ["n", "t", "x", "y", "z"], rows, {"config": cfg.hash()})
    print(json.dumps({"config": cfg.hash(), "out": out, "rows": len(rows)}))
    return 0


_RUNNERS = {
    "sieve": _run_sieve,
    "convergents": _run_convergents,
    "decompose": _run_decompose,
    "correlate": _run_correlate,
    "expsum": _run_expsum,
    "complexity": _run_complexity,
    "shadow": _run_shadow,
    "distality": _run_distality,
    "orbit": _run_orbit,
}


def run(config: ExperimentConfig) -> int:
    """Dispatch a validated config; returns the process exit status."""
    if config.command not in _RUNNERS:
        raise ValidationError(f"unknown command {config.command!r}")
    return _RUNNERS[config.command](config)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nilskew",
        description="Skew-product numerics over a circle times the Heisenberg nilmanifold",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file; explicit flags win")
        p.add_argument("--out", help="output file path")
        p.add_argument("--seed", type=int, help="deterministic RNG seed")

    p = sub.add_parser("sieve", help="build a Mobius table and write the cache file")
    common(p)
    p.add_argument("--n", type=float, help="table size")
    p.add_argument("--segmented", action="store_true")

    p = sub.add_parser("convergents", help="continued-fraction expansion of alpha")
    common(p)
    p.add_argument("--alpha")
    p.add_argument("--k", type=int, help="maximum number of partial quotients")
    p.add_argument("--q-cap", dest="q_cap", type=float)

    p = sub.add_parser("decompose", help="resonant / non-resonant split of a function")
    common(p)
    p.add_argument("--alpha")
    p.add_argument("--b", type=float, help="band classification exponent B")
    p.add_argument("--phi", help="function spec (preset or JSON)")
    p.add_argument("--k", type=int)

    p = sub.add_parser("correlate", help="Mobius correlation along an orbit")
    common(p)
    p.add_argument("--alpha")
    p.add_argument("--flow", choices=["t", "s", "t1"])
    p.add_argument("--phi")
    p.add_argument("--phi2")
    p.add_argument("--psi")
    p.add_argument("--obs")
    p.add_argument("--b", type=float)
    p.add_argument("--n", type=float)
    p.add_argument("--checkpoints")
    p.add_argument("--start", help="t,x,y,z")
    p.add_argument("--control", action="store_true")
    p.add_argument("--mu-cache", dest="mu_cache")

    p = sub.add_parser("expsum", help="Mobius exponential sum over a progression")
    common(p)
    p.add_argument("--poly", help="comma-separated coefficients, constant first")
    p.add_argument("--q", type=int)
    p.add_argument("--a", type=int)
    p.add_argument("--n", type=float)
    p.add_argument("--checkpoints")
    p.add_argument("--mu-cache", dest="mu_cache")

    p = sub.add_parser("complexity", help="greedy covering-number estimate")
    common(p)
    p.add_argument("--alpha")
    p.add_argument("--flow", choices=["t", "s", "t1"])
    p.add_argument("--phi")
    p.add_argument("--phi2")
    p.add_argument("--psi")
    p.add_argument("--b", type=float)
    p.add_argument("--nsteps", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--sample", type=int)
    p.add_argument("--burn-in", dest="burn_in", type=int)
    p.add_argument("--stride", type=int)
    p.add_argument("--window", type=int)
    p.add_argument("--start")

    p = sub.add_parser("shadow", help="grid shadowing verification")
    common(p)
    p.add_argument("--b", type=int)
    p.add_argument("--levels", type=int)
    p.add_argument("--k-index", dest="k_index", type=int)
    p.add_argument("--phi")
    p.add_argument("--psi")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--L", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--window", type=int)
    p.add_argument("--budget", type=float)

    p = sub.add_parser("distality", help="orbit separation probe")
    common(p)
    p.add_argument("--alpha")
    p.add_argument("--flow", choices=["t", "s", "t1"])
    p.add_argument("--phi")
    p.add_argument("--phi2")
    p.add_argument("--psi")
    p.add_argument("--b", type=float)
    p.add_argument("--n", type=float)
    p.add_argument("--checkpoints")
    p.add_argument("--start-p", dest="start_p")
    p.add_argument("--start-q", dest="start_q")
    p.add_argument("--window", type=int)

    p = sub.add_parser("orbit", help="emit orbit coordinates")
    common(p)
    p.add_argument("--alpha")
    p.add_argument("--flow", choices=["t", "s", "t1"])
    p.add_argument("--phi")
    p.add_argument("--phi2")
    p.add_argument("--psi")
    p.add_argument("--b", type=float)
    p.add_argument("--n", type=float)
    p.add_argument("--stride", type=int)
    p.add_argument("--start")

    return parser


def _merge_config(args: argparse.Namespace) -> ExperimentConfig:
    params = {}
    if getattr(args, "config", None):
        with open(args.config, "r", encoding="utf-8") as fh:
            params.update(json.load(fh))
    for key, val in vars(args).items():
        if key in ("command", "config") or val is None or val is False:
            continue
        params[key] = val
    return ExperimentConfig(args.command, params)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return run(_merge_config(args))
    except ResourceBudgetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValidationError, NilskewError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
