"""Particle simulation of Stratonovich SDEs on T^d and Monte Carlo estimators.

Particles follow

    dx = b(t, x) dt + sqrt(2 nu) sum_i c_i A_i(x) o dW_i

with the weighted divergence-free basis of :mod:`sdifflab.basis`, or with plain
Brownian noise sqrt(2 nu) dB (the only option on T^1, and the same generator
on T^d because the basis certificate is the identity).

Random numbers come from Philox streams keyed by (seed, block), where paths are
processed in fixed blocks of ``BLOCK`` paths.  Results therefore do not depend
on how the blocks are scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import spectral as sp
from .basis import QSpectrum
from .spectral import ScalarField, VectorField

BLOCK = 16384
TWO_PI = 2 * np.pi


def stream(seed: int, block: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(block)])))


def blocks(n_paths: int, block: int = BLOCK):
    """(index, start, stop) for the fixed partition of n_paths into blocks."""
    if n_paths <= 0:
        raise ValueError("number of paths must be positive")
    for b, start in enumerate(range(0, n_paths, block)):
        yield b, start, min(start + block, n_paths)


def q_increment(Q: QSpectrum, dt: float, rng: np.random.Generator, n: int | None = None) -> np.ndarray:
    """Independent N(0, dt) increments, one per basis element (and per path if n is given)."""
    if dt < 0:
        raise ValueError("dt must be non-negative")
    shape = (len(Q),) if n is None else (n, len(Q))
    return math.sqrt(dt) * rng.standard_normal(shape)


# --- drifts --------------------------------------------------------------------


class Drift:
    """Time-dependent vector field b(t, x) with its Jacobian, evaluated pointwise."""

    def __init__(self, value: Callable, jacobian: Callable | None = None, d: int | None = None):
        self.value = value
        self.jacobian = jacobian
        self.d = d

    def __call__(self, t, x):
        return self.value(t, x)

    @classmethod
    def zero(cls, d: int) -> "Drift":
        return cls(lambda t, x: np.zeros_like(x), lambda t, x: np.zeros(x.shape + (x.shape[-1],)), d)

    @classmethod
    def frozen(cls, u: VectorField) -> "Drift":
        """Time-independent drift given by a band-limited field."""
        return cls(lambda t, x: sp.evaluate(u, x), lambda t, x: sp.eval_jacobian(u, x), u.d)

    @classmethod
    def from_vector(cls, u) -> "Drift":
        if isinstance(u, Drift):
            return u
        if isinstance(u, VectorField):
            return cls.frozen(u)
        raise TypeError(f"cannot use {type(u).__name__} as a drift")


# --- ensembles -----------------------------------------------------------------


@dataclass
class ParticleEnsemble:
    """N particles on T^d with their flow Jacobians.

    ``positions`` are kept in [0, 2 pi)^d; ``unwrapped`` follows the lifted path.
    """

    positions: np.ndarray
    jacobians: np.ndarray | None = None
    t: float = 0.0
    unwrapped: np.ndarray | None = None
    det_deviation: list = field(default_factory=list)

    def __post_init__(self):
        self.positions = np.atleast_2d(np.asarray(self.positions, dtype=float))
        if self.unwrapped is None:
            self.unwrapped = self.positions.copy()
        self.positions = np.mod(self.positions, TWO_PI)

    @classmethod
    def at(cls, x, n: int | None = None, t: float = 0.0, jacobians: bool = False) -> "ParticleEnsemble":
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if n is not None:
            x = np.repeat(x, n, axis=0)
        J = np.broadcast_to(np.eye(x.shape[1]), (x.shape[0], x.shape[1], x.shape[1])).copy() if jacobians else None
        return cls(x, J, t)

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def d(self) -> int:
        return self.positions.shape[1]

    def determinants(self) -> np.ndarray:
        if self.jacobians is None:
            raise ValueError("ensemble does not carry Jacobians")
        return np.linalg.det(self.jacobians)


class Noise:
    """Diffusion term sqrt(2 nu) sigma(x) dW and the size of one increment."""

    def __init__(self, nu: float, d: int, Q: QSpectrum | None = None, shared: bool = False):
        if nu < 0:
            raise ValueError("viscosity must be non-negative")
        if Q is not None and (Q.d != d or Q.degenerate):
            raise ValueError("basis does not drive particles on this torus")
        self.nu = nu
        self.d = d
        self.Q = Q
        self.shared = shared
        self.amp = math.sqrt(2 * nu)

    @property
    def width(self) -> int:
        return self.d if self.Q is None else len(self.Q)

    def draw(self, rng, dt: float, n: int) -> np.ndarray:
        if self.shared:
            return math.sqrt(dt) * rng.standard_normal(self.width)
        return math.sqrt(dt) * rng.standard_normal((n, self.width))

    def apply(self, x, dW) -> np.ndarray:
        """sqrt(2 nu) sigma(x) dW, shape (n, d)."""
        if self.Q is None:
            return self.amp * np.broadcast_to(dW, x.shape)
        vals = self.Q.evaluate(x)  # (n, m, d)
        cw = self.Q.weights * dW  # (m,) shared or (n, m) per path
        sub = "m,nma->na" if cw.ndim == 1 else "nm,nma->na"
        return self.amp * np.einsum(sub, cw, vals)

    def apply_jacobian(self, x, J, dW) -> np.ndarray:
        """sqrt(2 nu) sum_i c_i dW_i DA_i(x) J."""
        if self.Q is None:
            return np.zeros_like(J)
        DA = self.Q.evaluate_jacobian(x)  # (n, m, d, d)
        cw = self.Q.weights * dW
        sub = "m,nmab->nab" if cw.ndim == 1 else "nm,nmab->nab"
        M = self.amp * np.einsum(sub, cw, DA)
        return M @ J


def stratonovich_step(ens: ParticleEnsemble, drift, noise: Noise, dt: float, rng, dW=None) -> ParticleEnsemble:
    """One Heun step for the Stratonovich SDE, Jacobians included when present.

    Predictor x~ = x + b dt + s(x) dW, corrector averages drift and diffusion at
    x and x~.  The same scheme is applied to the variational equation.  Passing
    ``dW`` replaces the draw from ``rng``, which couples runs at different dt.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    b = Drift.from_vector(drift)
    if dW is None:
        dW = noise.draw(rng, dt, ens.n)
    x, t = ens.unwrapped, ens.t
    b0 = b(t, x)
    s0 = noise.apply(x, dW)
    xp = x + b0 * dt + s0
    b1 = b(t + dt, xp)
    s1 = noise.apply(xp, dW)
    xn = x + 0.5 * (b0 + b1) * dt + 0.5 * (s0 + s1)
    J = ens.jacobians
    if J is not None:
        G0 = b.jacobian(t, x) @ J * dt + noise.apply_jacobian(x, J, dW)
        Jp = J + G0
        G1 = b.jacobian(t + dt, xp) @ Jp * dt + noise.apply_jacobian(xp, Jp, dW)
        J = J + 0.5 * (G0 + G1)
    out = ParticleEnsemble(xn, J, t + dt, xn.copy(), list(ens.det_deviation))
    if J is not None:
        out.det_deviation.append(float(np.abs(np.linalg.det(J) - 1).max()))
    return out


def simulate(ens: ParticleEnsemble, drift, noise: Noise, dt: float, T: float, seed: int, block: int = 0) -> ParticleEnsemble:
    """Advance an ensemble over duration T in steps of dt with stream (seed, block)."""
    n = _n_steps(T, dt)
    rng = stream(seed, block)
    for _ in range(n):
        ens = stratonovich_step(ens, drift, noise, dt, rng)
    return ens


def _n_steps(T: float, dt: float) -> int:
    if dt <= 0:
        raise ValueError("dt must be positive")
    n = int(round(T / dt))
    if not math.isclose(n * dt, T, rel_tol=1e-9, abs_tol=1e-12):
        raise ValueError(f"duration {T} is not a whole number of steps of {dt}")
    return n


# --- volume preservation -------------------------------------------------------


@dataclass
class VolumeReport:
    dt: float
    max_deviation: float

    @property
    def constant(self) -> float:
        """Fitted C in max|det J - 1| <= C dt."""
        return self.max_deviation / self.dt


def volume_check(x0, drift, noise: Noise, dt: float, T: float, seed: int = 0) -> VolumeReport:
    """max over particles and steps of |det J - 1| along the simulated flow."""
    ens = ParticleEnsemble.at(x0, jacobians=True)
    ens = simulate(ens, drift, noise, dt, T, seed)
    return VolumeReport(dt, max(ens.det_deviation, default=0.0))


def volume_convergence(x0, drift, noise: Noise, dt: float, T: float, seed: int = 0) -> tuple[VolumeReport, VolumeReport]:
    """volume_check at dt and dt/2 along the same Brownian path.

    Increments are drawn at dt/2 and summed in pairs for the coarse run, so the
    two deviations differ by discretisation error only.
    """
    n = _n_steps(T, dt)
    rng = stream(seed)
    ens_c = ParticleEnsemble.at(x0, jacobians=True)
    ens_f = ParticleEnsemble.at(x0, jacobians=True)
    h = dt / 2
    for _ in range(n):
        w1, w2 = noise.draw(rng, h, ens_f.n), noise.draw(rng, h, ens_f.n)
        ens_f = stratonovich_step(ens_f, drift, noise, h, None, dW=w1)
        ens_f = stratonovich_step(ens_f, drift, noise, h, None, dW=w2)
        ens_c = stratonovich_step(ens_c, drift, noise, dt, None, dW=w1 + w2)
    return (
        VolumeReport(dt, max(ens_c.det_deviation, default=0.0)),
        VolumeReport(h, max(ens_f.det_deviation, default=0.0)),
    )


# --- estimators ----------------------------------------------------------------


@dataclass
class Estimate:
    mean: np.ndarray
    stderr: np.ndarray
    n: int

    def within(self, target, k: float = 3.0, slack: float = 0.0) -> bool:
        return bool(np.all(np.abs(np.asarray(self.mean) - target) <= k * np.asarray(self.stderr) + slack))


class _Moments:
    """Streaming mean and standard error, merged block by block (Chan et al. update)."""

    def __init__(self):
        self.n = 0
        self.mean = 0.0
        self.m2 = 0.0

    def add(self, values):
        v = np.asarray(values, dtype=float)
        nb = v.shape[0]
        mb = v.mean(axis=0)
        m2b = ((v - mb) ** 2).sum(axis=0)
        n = self.n + nb
        delta = mb - self.mean
        self.mean = self.mean + delta * (nb / n)
        self.m2 = self.m2 + m2b + delta * delta * (self.n * nb / n)
        self.n = n

    def result(self) -> Estimate:
        var = self.m2 / max(self.n - 1, 1)
        return Estimate(self.mean, np.sqrt(var / self.n), self.n)


def nelson_derivative(x, drift, noise: Noise, eps: float, N: int, seed: int = 0, dt: float | None = None, t: float = 0.0) -> Estimate:
    """(E[x(t + eps)] - x) / eps from N paths started at the point x.

    The path over [t, t + eps] is resolved with steps of at most ``dt``
    (default: a single step).  Parallel transport on the flat torus is the identity.
    """
    x = np.asarray(x, dtype=float).reshape(1, -1)
    steps = 1 if dt is None else max(1, int(math.ceil(eps / dt - 1e-9)))
    h = eps / steps
    acc = _Moments()
    for b, start, stop in blocks(N):
        ens = ParticleEnsemble.at(x, stop - start, t)
        rng = stream(seed, b)
        for _ in range(steps):
            ens = stratonovich_step(ens, drift, noise, h, rng)
        acc.add((ens.unwrapped - x) / eps)
    return acc.result()


def generator_check(x, f: ScalarField, drift: VectorField, nu: float, h: float, N: int, seed: int = 0, Q: QSpectrum | None = None, steps: int = 1) -> tuple[Estimate, float, float]:
    """Empirical (E f(x_h) - f(x)) / h against the exact generator nu Delta f + u . grad f.

    Returns (estimate, exact value, O(h) allowance).  The allowance is
    h/2 * max|L^2 f| over a sample grid, the leading term of the Taylor expansion
    of the semigroup.
    """
    x = np.asarray(x, dtype=float).reshape(1, -1)
    noise = Noise(nu, f.d, Q)
    Lf = generator_field(f, drift, nu)
    exact = float(sp.evaluate(Lf, x[0]))
    acc = _Moments()
    f0 = float(sp.evaluate(f, x[0]))
    for b, start, stop in blocks(N):
        ens = ParticleEnsemble.at(x, stop - start)
        rng = stream(seed, b)
        for _ in range(steps):
            ens = stratonovich_step(ens, drift, noise, h / steps, rng)
        acc.add((sp.evaluate(f, ens.positions) - f0) / h)
    L2f = generator_field(Lf, drift, nu)
    g = sp.grid_points(f.d, 4 * L2f.K + 4)
    allowance = 0.5 * h * float(np.abs(sp.evaluate(L2f, g)).max())
    return acc.result(), exact, allowance


def generator_field(f: ScalarField, u: VectorField, nu: float) -> ScalarField:
    """nu Delta f + u . grad f, formed at truncation f.K + u.K where it is exact."""
    Kw = f.K + u.K
    fw, uw = sp.retruncate(f, Kw), sp.retruncate(u, Kw)
    return nu * sp.laplacian(fw) + sp.directional_derivative(uw, fw)


# --- path functionals --------------------------------------------------------


@dataclass
class PathFunctionalAccumulator:
    """Running per-path integrals, trapezoidal in time.

    ``action`` accumulates 1/2 |u|^2 - V, ``potential`` accumulates V / (2 nu).
    Two accumulators over consecutive sub-intervals add up to the one over the union.
    """

    action: np.ndarray
    potential: np.ndarray

    @classmethod
    def zeros(cls, n: int) -> "PathFunctionalAccumulator":
        return cls(np.zeros(n), np.zeros(n))

    def add(self, dt: float, run0, run1, pot0=None, pot1=None):
        self.action += 0.5 * dt * (run0 + run1)
        if pot0 is not None:
            self.potential += 0.5 * dt * (pot0 + pot1)

    def __add__(self, other: "PathFunctionalAccumulator") -> "PathFunctionalAccumulator":
        return PathFunctionalAccumulator(self.action + other.action, self.potential + other.potential)


def _scalar_eval(g, t, x):
    if g is None:
        return np.zeros(x.shape[0])
    if isinstance(g, ScalarField):
        return sp.evaluate(g, x)
    return np.asarray(g(t, x), dtype=float)


def action_estimate(
    x0,
    t0: float,
    T: float,
    control: Callable | None,
    V: ScalarField | None,
    terminal,
    nu: float,
    dt: float,
    N: int,
    seed: int = 0,
    Q: QSpectrum | None = None,
) -> Estimate:
    """Monte Carlo J = E[ int_t0^T (1/2 |u|^2 - V) ds + terminal(T, x_T) ].

    ``control(t, x)`` returns (n, d) feedback velocities; ``terminal`` is a scalar
    field or a callable (t, x) -> (n,), which allows continuation values for
    sub-interval checks.  Integrals are accumulated along the path without storing
    it.
    """
    x0 = np.asarray(x0, dtype=float).reshape(1, -1)
    d = x0.shape[1]
    n_steps = _n_steps(T - t0, dt)
    noise = Noise(nu, d, Q)
    if control is None:
        def control(t, x):
            return np.zeros_like(x)
    drift = Drift(control)
    acc = _Moments()
    for b, start, stop in blocks(N):
        rng = stream(seed, b)
        ens = ParticleEnsemble.at(x0, stop - start, t0)
        paths = PathFunctionalAccumulator.zeros(ens.n)
        t = t0
        run0 = _running_cost(control, V, t, ens.unwrapped)
        for i in range(n_steps):
            ens = stratonovich_step(ens, drift, noise, dt, rng)
            t = t0 + (i + 1) * dt
            run1 = _running_cost(control, V, t, ens.unwrapped)
            paths.add(dt, run0, run1)
            run0 = run1
        acc.add(paths.action + _scalar_eval(terminal, t, ens.positions))
    return acc.result()


def _running_cost(control, V, t, x):
    u = control(t, x)
    return 0.5 * (u * u).sum(axis=-1) - _scalar_eval(V, t, x)


def feynman_kac(prob, x, t: float, N: int, dt: float, seed: int = 0, Q: QSpectrum | None = None) -> Estimate:
    """Phi(t, x) = E[exp(int_t^T V(X_s) / (2 nu) ds) Phi_T(X_T)] for driftless X.

    ``prob`` needs attributes nu, T, V and a method terminal_phi() returning Phi_T.
    """
    x = np.asarray(x, dtype=float).reshape(1, -1)
    n_steps = _n_steps(prob.T - t, dt)
    noise = Noise(prob.nu, x.shape[1], Q)
    phi_T = prob.terminal_phi()
    V = prob.V
    zero = Drift.zero(x.shape[1])
    const_V = _is_constant(V)
    acc = _Moments()
    for b, start, stop in blocks(N):
        rng = stream(seed, b)
        ens = ParticleEnsemble.at(x, stop - start, t)
        paths = PathFunctionalAccumulator.zeros(ens.n)
        if const_V is not None:
            paths.potential += const_V / (2 * prob.nu) * (prob.T - t)
            for _ in range(n_steps):
                ens = stratonovich_step(ens, zero, noise, dt, rng)
        else:
            p0 = sp.evaluate(V, ens.positions) / (2 * prob.nu)
            for _ in range(n_steps):
                ens = stratonovich_step(ens, zero, noise, dt, rng)
                p1 = sp.evaluate(V, ens.positions) / (2 * prob.nu)
                paths.add(dt, 0.0, 0.0, p0, p1)
                p0 = p1
        acc.add(np.exp(paths.potential) * sp.evaluate(phi_T, ens.positions))
    return acc.result()


def _is_constant(f: ScalarField):
    rest = np.abs(f.cos[1:]).max(initial=0.0) + np.abs(f.sin).max(initial=0.0)
    return float(f.cos[0]) if rest == 0 else None
