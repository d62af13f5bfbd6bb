"""Named experiments with configs, pass/fail checks and machine-readable reports.

A config is a JSON object.  ``experiment`` selects the experiment; every other
key must be one of that experiment's parameters (see ``EXPERIMENTS[name].defaults``),
plus the optional ``output_dir``.  Potentials and terminal costs are mode lists
``[[k, parity, coefficient], ...]`` with k a list of integers.
"""

from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from . import __version__
from . import basis as bs
from . import control as ctl
from . import flow as fl
from . import fluid as nf
from . import spectral as sp


class ConfigError(ValueError):
    pass


@dataclass
class Check:
    name: str
    passed: bool
    value: float | None = None
    tolerance: float | None = None
    detail: str = ""


def check(name: str, value: float, tol: float, detail: str = "") -> Check:
    """Passes when value <= tol."""
    value = float(value)
    return Check(name, bool(value <= tol), value, float(tol), detail)


@dataclass
class Report:
    experiment: str
    config: dict
    checks: list = field(default_factory=list)
    runtime: float = 0.0
    version: str = __version__
    tables: dict = field(default_factory=dict)
    criteria: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "version": self.version,
            "config": self.config,
            "passed": self.passed,
            "runtime_seconds": self.runtime,
            "criteria": self.criteria,
            "checks": [asdict(c) for c in self.checks],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, default=_jsonable)

    def write(self, out_dir: str) -> list[str]:
        """report.json plus one CSV per table, under out_dir/<experiment>/."""
        d = os.path.join(out_dir, self.experiment)
        os.makedirs(d, exist_ok=True)
        paths = [os.path.join(d, "report.json")]
        with open(paths[0], "w") as fh:
            fh.write(self.to_json())
        for name, rows in self.tables.items():
            if not rows:
                continue
            p = os.path.join(d, f"{name}.csv")
            with open(p, "w", newline="") as fh:
                w = csv.DictWriter(fh, fieldnames=list(rows[0]))
                w.writeheader()
                w.writerows(rows)
            paths.append(p)
        return paths

    def summary(self) -> str:
        lines = [f"{self.experiment}: {'PASS' if self.passed else 'FAIL'} ({self.runtime:.1f} s)"]
        for c in self.checks:
            val = "" if c.value is None else f" value={c.value:.3e}"
            tol = "" if c.tolerance is None else f" tol={c.tolerance:.3e}"
            lines.append(f"  [{'ok' if c.passed else 'FAIL'}] {c.name}{val}{tol} {c.detail}".rstrip())
        return "\n".join(lines)


def _jsonable(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serializable: {type(o).__name__}")


@dataclass(frozen=True)
class Experiment:
    name: str
    description: str
    criteria: tuple
    defaults: dict
    func: Callable


EXPERIMENTS: dict[str, Experiment] = {}


def experiment(name: str, description: str, criteria=(), **defaults):
    def deco(func):
        EXPERIMENTS[name] = Experiment(name, description, tuple(criteria), defaults, func)
        return func

    return deco


def _rng(seed: int, *tag) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), *[int(t) for t in tag]]))


# --- experiments ------------------------------------------------------------


@experiment(
    "basis-identities",
    "Pointwise metric, zero self-advection, zero wedge sum, weighted generator sum equal to "
    "the Laplacian and Lie-derivative Hodge Laplacian of the divergence-free basis on T^2",
    criteria=(1, 2),
    d=2,
    Ks=[2, 3, 4],
    profile="flat",
    tol=1e-12,
    lie_K=3,
    lie_fields=20,
    seed=0,
)
def _basis_identities(cfg):
    d, tol = cfg["d"], cfg["tol"]
    rng = _rng(cfg["seed"], 1)
    checks, rows = [], []
    for K in cfg["Ks"]:
        Q = bs.build_basis(d, K, cfg["profile"])
        pts = rng.uniform(0, 2 * np.pi, (8, d))
        vs = rng.standard_normal((8, d))
        metric = max(abs(bs.check_pointwise_metric(Q, v, x) - v @ v) for v, x in zip(vs, pts))
        adv = bs.sum_self_advection(Q).max_abs_coeff()
        X = sp.random_vector(rng, d, K)
        wedge = bs.sum_wedge(Q, X).max_abs_coeff()
        f = sp.retruncate(sp.random_scalar(rng, d, 2), 2 + K)
        gen = (bs.generator_sum(Q, f) - sp.laplacian(f)).max_abs_coeff()
        div = bs.divergence_of_elements(Q)
        for name, val in (("metric", metric), ("self-advection", adv), ("wedge", wedge), ("generator", gen), ("divergence", div)):
            checks.append(check(f"{name} K={K}", val, tol))
            rows.append({"K": K, "identity": name, "error": val})
    Q = bs.build_basis(d, cfg["lie_K"], cfg["profile"])
    Kw = 2 * cfg["lie_K"]
    worst = 0.0
    for i in range(cfg["lie_fields"]):
        u = sp.retruncate(sp.random_div_free(rng, d, cfg["lie_K"], 1.0, 1.0), Kw)
        err = (bs.lie_hodge(Q, u) - sp.hodge_laplacian(u)).max_abs_coeff()
        rows.append({"K": cfg["lie_K"], "identity": f"lie-hodge field {i}", "error": err})
        worst = max(worst, err)
    checks.append(check(f"lie-hodge {cfg['lie_fields']} fields K={cfg['lie_K']}", worst, tol))
    return checks, {"identities": rows}


def _tg_run(cfg):
    scfg = nf.SolverConfig(nu=cfg["nu"], dt=cfg["dt"], K=cfg["K"], scheme=cfg["scheme"])
    s0 = nf.taylor_green(1.0, cfg["nu"], 0.0, cfg["K"])
    return scfg, nf.integrate(s0, scfg, cfg["T"], stride=cfg["stride"])


@experiment(
    "ns-taylor-green",
    "Decaying Taylor-Green vortex for forward Navier-Stokes: exact solution and energy law",
    criteria=(3,),
    nu=0.1,
    dt=1e-3,
    T=1.0,
    K=4,
    scheme="ifrk4",
    stride=100,
    tol=1e-8,
    energy_T=0.1,
)
def _ns_taylor_green(cfg):
    scfg, traj = _tg_run(cfg)
    exact = nf.taylor_green(1.0, cfg["nu"], cfg["T"], cfg["K"])
    rel = sp.l2_norm(traj.final.u - exact.u) / sp.l2_norm(exact.u)
    checks = [check("relative L2 error at T", rel, cfg["tol"])]
    checks.append(check("divergence of final state", sp.divergence_residual(traj.final.u), 1e-13))
    # energy law with dt and dt/2: second order means the residual shrinks four-fold
    res = []
    for dt in (cfg["dt"], cfg["dt"] / 2):
        c = nf.SolverConfig(nu=cfg["nu"], dt=dt, K=cfg["K"], scheme=cfg["scheme"])
        tr = nf.integrate(nf.taylor_green(1.0, cfg["nu"], 0.0, cfg["K"]), c, cfg["energy_T"])
        res.append(float(nf.energy_law_residual(tr, cfg["nu"]).max()))
    order = math.log2(res[0] / res[1])
    checks.append(Check("energy law residual order", abs(order - 2) <= 0.3, order, 2.0, f"residuals {res[0]:.3e}, {res[1]:.3e}"))
    table = traj.table()
    for row, s in zip(table, traj.states):
        row["error"] = sp.l2_norm(s.u - nf.taylor_green(1.0, cfg["nu"], s.t, cfg["K"]).u)
    return checks, {"trajectory": table, "energy_law": [{"dt": cfg["dt"], "residual": res[0]}, {"dt": cfg["dt"] / 2, "residual": res[1]}]}


def _euler_run(cfg):
    u0 = sp.random_div_free(_rng(cfg["seed"], 4), 2, cfg["K"], 1.0, 1.0)
    scfg = nf.SolverConfig(nu=0.0, dt=cfg["dt"], K=cfg["K"], direction="euler", scheme=cfg["scheme"])
    return scfg, nf.integrate(nf.initial_state(u0), scfg, cfg["T"], stride=cfg["stride"])


@experiment(
    "euler-conservation",
    "Energy and enstrophy conservation of the incompressible Euler flow on T^2",
    criteria=(4,),
    K=3,
    dt=1e-3,
    T=1.0,
    scheme="rk4",
    stride=100,
    seed=0,
    energy_tol=1e-8,
    enstrophy_tol=1e-6,
)
def _euler_conservation(cfg):
    _, traj = _euler_run(cfg)
    E0, Z0 = traj.states[0].energy, traj.states[0].enstrophy
    dE = max(abs(s.energy - E0) for s in traj.states) / E0
    dZ = max(abs(s.enstrophy - Z0) for s in traj.states) / Z0
    mom = max(float(np.abs(s.u.cos[:, 0] - traj.states[0].u.cos[:, 0]).max()) for s in traj.states)
    return [
        check("relative energy drift", dE, cfg["energy_tol"]),
        check("relative enstrophy drift", dZ, cfg["enstrophy_tol"]),
        check("momentum drift", mom, 1e-13),
    ], {"trajectory": traj.table()}


@experiment(
    "sg-equivalence",
    "Navier-Stokes on the torus versus the projected Burgers equation on the volume-preserving "
    "group, with the Lie-derivative Hodge Laplacian and a cylinder-potential force",
    criteria=(5,),
    nu=0.1,
    dt=1e-3,
    T=1.0,
    K=3,
    stride=100,
    seed=0,
    tol=1e-10,
    control_min=1e-3,
)
def _sg_equivalence(cfg):
    base = {"nu": cfg["nu"], "dt": cfg["dt"], "T": cfg["T"], "stride": cfg["stride"]}
    runs = []
    scfg, tr = _tg_run({**base, "K": max(cfg["K"], 2), "scheme": "ifrk4"})
    runs.append(("taylor-green", scfg, tr))
    scfg, tr = _euler_run({**base, "K": cfg["K"], "seed": cfg["seed"], "scheme": "rk4"})
    runs.append(("euler", scfg, tr))
    # forced run: force from a two-point cylinder potential
    rng = _rng(cfg["seed"], 5)
    Q = bs.build_basis(2, cfg["K"])
    pts = rng.uniform(0, 2 * np.pi, (2, 2))
    P = bs.CylinderPotential.separable(pts, [sp.random_scalar(rng, 2, 2) for _ in range(2)])
    v = bs.sdiff_gradient_cylinder(Q, P)
    u0 = sp.random_div_free(rng, 2, cfg["K"], 1.0, 1.0)
    scfg = nf.SolverConfig(nu=cfg["nu"], dt=cfg["dt"], K=cfg["K"])
    runs.append(("forced", scfg, nf.integrate(nf.initial_state(u0, v_ext=v), scfg, cfg["T"], stride=cfg["stride"])))
    checks, rows = [], []
    for name, scfg, tr in runs:
        worst = 0.0
        for s in tr.states:
            r = nf.sg_burgers_residual(s, scfg)
            rows.append({"run": name, "t": s.t, "residual": r})
            worst = max(worst, r)
        checks.append(check(f"equivalence residual, {name}", worst, cfg["tol"]))
    for name, scfg, tr in runs:
        r = nf.sg_burgers_residual(tr.states[0], scfg, skip_leray=True)
        checks.append(Check(f"negative control without projection, {name}", r > cfg["control_min"], r, cfg["control_min"]))
    return checks, {"residuals": rows}


@experiment(
    "time-reversal",
    "Forward Navier-Stokes against the sign-flipped, time-reversed backward solution",
    criteria=(6,),
    nu=0.1,
    dt=1e-3,
    T=0.1,
    K=2,
    seed=0,
    tol=1e-6,
)
def _time_reversal(cfg):
    scfg = nf.SolverConfig(nu=cfg["nu"], dt=cfg["dt"], K=cfg["K"])
    rng = _rng(cfg["seed"], 6)
    checks = []
    for i in range(3):
        u0 = sp.random_div_free(rng, 2, cfg["K"], 1.0, 1.0)
        checks.append(check(f"random data {i}", nf.time_reversal_check(u0, scfg, cfg["T"]), cfg["tol"]))
    tg = sp.taylor_green_field(cfg["K"])
    checks.append(check("taylor-green", nf.time_reversal_check(tg, scfg, cfg["T"]), 1e-8))
    return checks, {}


def _phi_case(cfg):
    return ctl.problem_from_modes(1, cfg["K"], cfg["nu"], cfg["T"], phi_T=[((0,), "cos", 1.0), ((1,), "cos", 0.5)])


@experiment(
    "hjb-colehopf",
    "Value function through the Cole-Hopf transform and the heat equation with potential",
    criteria=(7,),
    nu=0.1,
    T=1.0,
    K=32,
    tol=1e-8,
    roundtrip_tol=1e-10,
    roundtrip_K=64,
    roundtrip_band=2,
    generic_tol=1e-6,
    V=[[[1], "cos", 0.3], [[2], "sin", 0.1]],
    psi=[[[1], "sin", 0.2]],
    seed=0,
)
def _hjb_colehopf(cfg):
    nu, T = cfg["nu"], cfg["T"]
    prob = _phi_case(cfg)
    vf = ctl.solve_hjb(prob)
    xs = np.linspace(0, 2 * np.pi, 97)
    checks, rows = [], []
    worst = {"hjb": 0.0, "heat": 0.0, "phi": 0.0, "value": 0.0, "control": 0.0}
    for t in vf.times:
        a = np.exp(-nu * (T - t))
        phi = 1 + 0.5 * a * np.cos(xs)
        r = {
            "hjb": ctl.hjb_residual(vf, t),
            "heat": ctl.heat_residual(vf, t),
            "phi": float(np.abs(sp.evaluate(vf.phi(t), xs) - phi).max()),
            "value": float(np.abs(sp.evaluate(ctl.cole_hopf(vf.phi(t), nu), xs) + 2 * nu * np.log(phi)).max()),
            "control": float(np.abs(sp.evaluate(ctl.optimal_control(vf, t), xs)[:, 0] + nu * a * np.sin(xs) / phi).max()),
        }
        rows.append({"t": t, **r})
        for k in worst:
            worst[k] = max(worst[k], r[k])
    for k, v in worst.items():
        checks.append(check(f"analytic case, {k}", v, cfg["tol"]))
    rng = _rng(cfg["seed"], 7)
    rt = 0.0
    # exp(-W / 2 nu) of a band-b field with |W| <= 10 nu has Bessel tails reaching
    # about 16 b modes, so the random fields are resolved on a finer truncation
    Krt = cfg["roundtrip_K"]
    randoms = [sp.retruncate(sp.random_scalar(rng, 1, cfg["roundtrip_band"]), Krt) for _ in range(3)]
    for W in list(vf.W) + randoms:
        W = W * (10 * nu / float(np.abs(W.to_grid(4 * W.K)).max()))
        rt = max(rt, ctl.round_trip_error(W, nu))
    checks.append(check("Cole-Hopf round trip", rt, cfg["roundtrip_tol"]))
    gen = ctl.problem_from_modes(1, cfg["K"], nu, T, V=_mode_terms(cfg["V"]), psi=_mode_terms(cfg["psi"]))
    gvf = ctl.solve_hjb(gen)
    checks.append(check("generic potential, HJB residual", max(ctl.hjb_residual(gvf, t) for t in gvf.times), cfg["generic_tol"]))
    c = 0.3
    cprob = ctl.problem_from_modes(1, cfg["K"], nu, T, V=[((0,), "cos", c)], psi=[])
    cvf = ctl.solve_hjb(cprob)
    cerr = max(float(np.abs(cvf.value_at(t, xs) + c * (T - t)).max()) for t in cvf.times)
    checks.append(check("constant potential, W = -c (T - t)", cerr, cfg["tol"]))
    return checks, {"analytic_case": rows}


def _mode_terms(terms):
    try:
        return [(tuple(k), parity, float(c)) for k, parity, c in terms]
    except (TypeError, ValueError) as e:
        raise ConfigError(f"bad mode list {terms!r}: expected [[k, parity, coefficient], ...]") from e


@experiment(
    "burgers-from-value",
    "Gradient of the value function solves the viscous Burgers equation",
    criteria=(7,),
    nu=0.1,
    T=1.0,
    K=32,
    tol=1e-6,
)
def _burgers_from_value(cfg):
    vf = ctl.solve_hjb(_phi_case(cfg))
    rep = ctl.burgers_from_value(vf)
    rows = [{"t": t, "residual": r} for t, r in zip(rep.times, rep.residuals)]
    return [
        check("Burgers residual", rep.max_residual, cfg["tol"]),
        check("Laplacian commutes with gradient", rep.commutation, 1e-12),
    ], {"residuals": rows}


@experiment(
    "dpp",
    "Dynamic programming: Monte Carlo cost of the optimal and perturbed feedback controls",
    criteria=(8,),
    nu=0.1,
    T=1.0,
    K=8,
    dt=5e-3,
    paths=100000,
    seed=0,
    k_sigma=3.0,
)
def _dpp(cfg):
    prob = _phi_case(cfg)
    vf = ctl.solve_hjb(prob)
    K = cfg["K"]
    s1 = sp.scalar_field(1, K, [((1,), "sin", 1.0)])
    c1 = sp.scalar_field(1, K, [((1,), "cos", 1.0)])
    one = sp.scalar_field(1, K, [((0,), "cos", 1.0)])
    perts = [(f"{e:+g} sin x", e, s1) for e in (0.05, -0.05, 0.1, -0.1, 0.2, -0.2)]
    perts += [(f"{e:+g} cos x", e, c1) for e in (0.1, -0.1)]
    perts += [(f"{e:+g}", e, one) for e in (0.1, -0.1)]
    rep = ctl.dpp_check(prob, vf, perts, cfg["paths"], seed=cfg["seed"], dt=cfg["dt"], k_sigma=cfg["k_sigma"])
    k = cfg["k_sigma"]
    checks = [
        check("optimal control matches W", abs(rep.optimal.estimate - rep.W), k * rep.optimal.stderr),
        check("sub-interval identity", abs(rep.split.estimate - rep.W), k * rep.split.stderr),
    ]
    for p in rep.perturbed:
        checks.append(Check(f"perturbed control {p.label} not below W", p.estimate >= rep.W - k * p.stderr, p.estimate - rep.W, -k * p.stderr))
    rows = [{"control": e.label, "estimate": e.estimate, "stderr": e.stderr, "W": rep.W} for e in [rep.optimal, rep.split, *rep.perturbed]]
    return checks, {"estimates": rows}


@experiment(
    "feynman-kac",
    "Feynman-Kac Monte Carlo against the spectral heat equation with potential",
    criteria=(9,),
    T=1.0,
    K=16,
    dt=1e-2,
    paths=100000,
    seed=0,
    k_sigma=3.0,
    dt_constant=0.1,
)
def _feynman_kac(cfg):
    K, T = cfg["K"], cfg["T"]
    cases = [
        ("constant potential", ctl.problem_from_modes(1, K, 0.1, T, V=[((0,), "cos", 0.2)], psi=[]), [0.0]),
        ("analytic case", ctl.problem_from_modes(1, K, 0.1, T, phi_T=[((0,), "cos", 1.0), ((1,), "cos", 0.5)]), [0.0]),
        (
            "generic pair",
            ctl.problem_from_modes(1, K, 0.2, T, V=[((1,), "cos", 0.3), ((2,), "sin", 0.1)], psi=[((1,), "sin", 0.2)]),
            [0.4],
        ),
    ]
    checks, rows = [], []
    for i, (name, prob, x) in enumerate(cases):
        ref = float(sp.evaluate(ctl.solve_heat_with_potential(prob).phi(0.0), x))
        est = fl.feynman_kac(prob, x, 0.0, cfg["paths"], cfg["dt"], seed=cfg["seed"] + i)
        tol = cfg["k_sigma"] * float(est.stderr) + cfg["dt_constant"] * cfg["dt"]
        checks.append(check(name, abs(float(est.mean) - ref), tol))
        rows.append({"case": name, "estimate": float(est.mean), "stderr": float(est.stderr), "spectral": ref})
    return checks, {"estimates": rows}


@experiment(
    "flow-volume",
    "Volume preservation of the stochastic flow: Jacobian determinant along particle paths",
    criteria=(10,),
    dt=1e-3,
    T=1.0,
    particles=16,
    nu=0.0,
    noisy_nu=0.1,
    seed=0,
    tol=1e-5,
)
def _flow_volume(cfg):
    tg = sp.taylor_green_field(1)
    x0 = _rng(cfg["seed"], 10).uniform(0, 2 * np.pi, (cfg["particles"], 2))
    Q = bs.build_basis(2, 1)
    noise = fl.Noise(cfg["nu"], 2, Q, shared=True)
    reps = fl.volume_convergence(x0, tg, noise, cfg["dt"], cfg["T"], cfg["seed"])
    ratio = reps[1].constant / reps[0].constant if reps[0].constant else 0.0
    noisy = fl.volume_convergence(x0, tg, fl.Noise(cfg["noisy_nu"], 2, Q, shared=True), cfg["dt"], cfg["T"], cfg["seed"])
    noisy_ratio = noisy[1].max_deviation / noisy[0].max_deviation
    bad = sp.vector_field(2, 1, [((1, 0), "sin", 0, 1.0)])
    neg = fl.volume_check(x0, bad, fl.Noise(0.0, 2), cfg["dt"], cfg["T"])
    rows = [
        {"nu": n, "dt": r.dt, "max_deviation": r.max_deviation, "C": r.constant}
        for n, pair in ((cfg["nu"], reps), (cfg["noisy_nu"], noisy))
        for r in pair
    ]
    return [
        check("max |det J - 1|", reps[0].max_deviation, cfg["tol"]),
        check("fitted C at dt/2 over C at dt (halving)", ratio, 0.5 * 1.1, f"C = {reps[0].constant:.3e}, {reps[1].constant:.3e}"),
        check("with basis noise: max |det J - 1|", noisy[0].max_deviation, cfg["tol"]),
        check(
            "with basis noise: deviation at dt/2 over deviation at dt",
            noisy_ratio,
            1.0,
            f"C ratio {noisy[1].constant / noisy[0].constant:.3f}",
        ),
        Check("negative control: compressible drift", neg.max_deviation > 1e-2, neg.max_deviation, 1e-2),
    ], {"convergence": rows}


@experiment(
    "nelson",
    "Nelson forward derivative of the diffusion recovers the drift",
    criteria=(10,),
    nu=0.1,
    eps=1e-3,
    paths=100000,
    point=[0.3, 0.7],
    eps_sweep=[0.05, 0.1, 0.15, 0.2, 0.25, 0.3],
    sweep_dt=1e-2,
    seed=0,
    k_sigma=3.0,
    r2_min=0.9,
)
def _nelson(cfg):
    tg = sp.taylor_green_field(1)
    Q = bs.build_basis(2, 1)
    noise = fl.Noise(cfg["nu"], 2, Q)
    x = np.asarray(cfg["point"], dtype=float)
    target = sp.evaluate(tg, x)
    est = fl.nelson_derivative(x, tg, noise, cfg["eps"], cfg["paths"], cfg["seed"])
    dev = float(np.max(np.abs(est.mean - target) / est.stderr))
    checks = [check("estimate within k sigma (in units of sigma)", dev, cfg["k_sigma"])]
    zero = fl.nelson_derivative(x, fl.Drift.zero(2), noise, cfg["eps"], cfg["paths"], cfg["seed"] + 1)
    checks.append(check("zero drift within k sigma (in units of sigma)", float(np.max(np.abs(zero.mean) / zero.stderr)), cfg["k_sigma"]))
    rows, eps, bias = [], [], []
    for e in cfg["eps_sweep"]:
        s = fl.nelson_derivative(x, tg, noise, e, cfg["paths"], cfg["seed"] + 2, dt=cfg["sweep_dt"])
        b = float(np.linalg.norm(s.mean - target))
        rows.append({"eps": e, "bias": b, "stderr": float(np.linalg.norm(s.stderr))})
        eps.append(e)
        bias.append(b)
    slope, intercept = np.polyfit(eps, bias, 1)
    pred = slope * np.asarray(eps) + intercept
    r2 = 1 - float(((np.asarray(bias) - pred) ** 2).sum() / ((np.asarray(bias) - np.mean(bias)) ** 2).sum())
    checks.append(Check("bias linear in eps (R^2)", r2 >= cfg["r2_min"], r2, cfg["r2_min"], f"slope {slope:.3f}"))
    return checks, {"bias": rows}


@experiment(
    "generator",
    "Generator of the particle diffusion pushed to cylinder functions: nu Laplacian plus drift",
    criteria=(10,),
    nu=0.1,
    h=1e-2,
    paths=100000,
    seed=0,
    k_sigma=3.0,
    points=[[0.3, 0.4], [1.0, 2.0], [2.5, 0.7], [4.0, 5.0], [5.5, 3.3]],
)
def _generator(cfg):
    tg = sp.taylor_green_field(1)
    Q = bs.build_basis(2, 1)
    f = sp.scalar_field(2, 1, [((1, 1), "cos", -0.5), ((1, -1), "cos", 0.5)])  # sin x sin y
    g = sp.scalar_field(2, 1, [((1, 0), "cos", 1.0), ((0, 1), "sin", 0.5)])
    checks, rows = [], []
    for name, fun in (("sin x sin y", f), ("cos x + sin y / 2", g)):
        for i, x in enumerate(cfg["points"]):
            est, exact, allow = fl.generator_check(x, fun, tg, cfg["nu"], cfg["h"], cfg["paths"], cfg["seed"] + i, Q=Q)
            err = abs(float(est.mean) - exact)
            tol = cfg["k_sigma"] * float(est.stderr) + allow
            checks.append(check(f"{name} at {x}", err, tol))
            rows.append({"f": name, "x": x[0], "y": x[1], "estimate": float(est.mean), "exact": exact, "stderr": float(est.stderr)})
    zero = sp.VectorField.zeros(2, 1)
    c1 = sp.scalar_field(2, 1, [((1, 0), "cos", 1.0)])
    est, exact, allow = fl.generator_check([0.5, 0.5], c1, zero, cfg["nu"], cfg["h"], cfg["paths"], cfg["seed"], Q=Q)
    checks.append(check("cos x without drift", abs(float(est.mean) - exact), cfg["k_sigma"] * float(est.stderr) + allow))
    return checks, {"estimates": rows}


@experiment(
    "cylinder-gradient",
    "Gradients of integral-type and cylinder-type potentials on the volume-preserving group",
    criteria=(11,),
    K=3,
    seed=0,
    tol=1e-12,
    eps=[0.08, 0.04, 0.02, 0.01],
)
def _cylinder_gradient(cfg):
    K = cfg["K"]
    Q = bs.build_basis(2, K)
    rng = _rng(cfg["seed"], 11)
    checks = []
    for name, V in (
        ("cos x", sp.scalar_field(2, K, [((1, 0), "cos", 1.0)])),
        ("cos x cos y", sp.scalar_field(2, K, [((1, 1), "cos", 0.5), ((1, -1), "cos", 0.5)])),
        ("random", sp.random_scalar(rng, 2, K)),
    ):
        checks.append(check(f"integral potential {name}", bs.sdiff_gradient_integral(Q, V).max_abs_coeff(), cfg["tol"]))
    pts = rng.uniform(0, 2 * np.pi, (2, 2))
    P = bs.CylinderPotential.separable(pts, [sp.random_scalar(rng, 2, 2) for _ in range(2)])
    grad = bs.sdiff_gradient_cylinder(Q, P)
    checks.append(check("cylinder gradient is divergence-free", sp.divergence_residual(grad), cfg["tol"]))
    elements = [e for e in Q.entries if e.parity != bs.CONST][:12]
    rows, errs = [], []
    for eps in cfg["eps"]:
        worst = 0.0
        for e in elements:
            fd = bs.directional_derivative_fd(P, e.field, eps)
            err = abs(sp.l2_inner(grad, e.field) - fd)
            worst = max(worst, err)
        errs.append(worst)
        rows.append({"eps": eps, "max_error": worst})
    orders = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    checks.append(Check("first-order convergence in eps", all(0.8 <= o <= 1.2 for o in orders), min(orders), 0.8, f"orders {', '.join(f'{o:.2f}' for o in orders)}"))
    checks.append(check("oracle error at smallest eps", errs[-1], 2 * errs[0] * cfg["eps"][-1] / cfg["eps"][0]))
    sym = bs.CylinderPotential.linear([[1.0, 2.0], [1.0, 2.0]], [[0.5, -0.3], [-0.5, 0.3]])
    checks.append(check("opposite gradients cancel", bs.sdiff_gradient_cylinder(Q, sym).max_abs_coeff(), cfg["tol"]))
    const = bs.CylinderPotential.linear([[0.5, 0.5]], [[0.0, 0.0]])
    checks.append(check("constant potential", bs.sdiff_gradient_cylinder(Q, const).max_abs_coeff(), cfg["tol"]))
    return checks, {"convergence": rows}


@experiment(
    "hj-vanishing-viscosity",
    "Vanishing-viscosity limit towards the Hamilton-Jacobi equation",
    criteria=(12,),
    K=32,
    T=0.2,
    nus=[0.1, 0.05, 0.025],
    psi=[[[1], "cos", 0.1]],
    V=[],
)
def _hj_vanishing(cfg):
    prob = ctl.problem_from_modes(1, cfg["K"], cfg["nus"][0], cfg["T"], V=_mode_terms(cfg["V"]), psi=_mode_terms(cfg["psi"]))
    rep = ctl.hj_euler(prob, cfg["nus"])
    rows = [{"nu": nu, "inviscid_residual": r} for nu, r in zip(rep.nus, rep.inviscid_residual)]
    checks = [
        Check("Cauchy differences decrease", rep.cauchy_decreasing, rep.cauchy[-1], rep.cauchy[0], f"{rep.cauchy}"),
        Check("inviscid residual decreases", rep.residual_decreasing, rep.inviscid_residual[-1], rep.inviscid_residual[0]),
    ]
    if rep.euler_gap is not None:
        checks.append(check("inviscid Burgers flow vs -grad W at smallest nu", rep.euler_gap, 10 * rep.nus[-1]))
    return checks, {"residuals": rows}


# --- running ------------------------------------------------------------------


RESERVED = {"experiment", "output_dir"}


def list_experiments() -> list[tuple[str, str]]:
    return [(e.name, e.description) for e in EXPERIMENTS.values()]


def resolve(config: dict) -> tuple[Experiment, dict]:
    """Validate a config and merge it over the experiment defaults."""
    if not isinstance(config, dict):
        raise ConfigError("config must be a JSON object")
    name = config.get("experiment")
    if name not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {name!r}; known: {', '.join(EXPERIMENTS)}")
    exp = EXPERIMENTS[name]
    unknown = sorted(set(config) - set(exp.defaults) - RESERVED)
    if unknown:
        raise ConfigError(f"unknown key(s) for {name}: {', '.join(unknown)}")
    merged = dict(exp.defaults)
    for k, v in config.items():
        if k in RESERVED:
            continue
        default = exp.defaults[k]
        if isinstance(default, bool) != isinstance(v, bool) or (
            isinstance(default, (int, float)) and not isinstance(v, (int, float))
        ):
            raise ConfigError(f"key {k!r} of {name}: expected {type(default).__name__}, got {v!r}")
        merged[k] = v
    return exp, merged


def run(config: dict) -> Report:
    exp, cfg = resolve(config)
    t0 = time.perf_counter()
    checks, tables = exp.func(cfg)
    rep = Report(exp.name, dict(config), checks, time.perf_counter() - t0, tables=tables, criteria=list(exp.criteria))
    rep.config = {"experiment": exp.name, **{k: v for k, v in cfg.items()}}
    if config.get("output_dir"):
        rep.write(config["output_dir"])
    return rep


def load_config(path: str) -> dict:
    with open(path) as fh:
        text = fh.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return data


def _run_quiet(config):
    return run(config)


def verify_all(seed: int = 0, overrides: dict | None = None, jobs: int = 1, output_dir: str | None = None) -> list[Report]:
    """Run every experiment with defaults; ``overrides`` apply to experiments that accept a key."""
    configs = []
    for name, exp in EXPERIMENTS.items():
        cfg = {"experiment": name}
        if "seed" in exp.defaults:
            cfg["seed"] = seed
        for k, v in (overrides or {}).items():
            if k in exp.defaults:
                cfg[k] = v
        if output_dir:
            cfg["output_dir"] = output_dir
        configs.append(cfg)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(_run_quiet, configs))
    return [run(c) for c in configs]


def criteria_table(reports: list[Report]) -> dict[int, bool]:
    """Acceptance criterion number -> pass, combining the experiments that cover it."""
    out: dict[int, bool] = {}
    for r in reports:
        for c in r.criteria:
            out[c] = out.get(c, True) and r.passed
    return dict(sorted(out.items()))
