"""Stochastic optimal control on T^d through the Cole-Hopf transform.

The value function W solves the backward equation

    dW/dt + nu Delta W - 1/2 |grad W|^2 - V = 0,   W(T) = Psi,

and Phi = exp(-W / (2 nu)) solves the linear equation

    dPhi/dt + nu Delta Phi + V Phi / (2 nu) = 0,   Phi(T) = exp(-Psi / (2 nu)).

Phi is propagated exactly in time: per mode when V is constant, otherwise
through an eigendecomposition of the Galerkin operator (symmetric in the L^2
inner product).  A Strang-split integrator is available as a cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import flow
from . import spectral as sp
from .spectral import ScalarField, VectorField

FD_STEP = 1e-3  # time step of the five-point derivative used by residual checks


@dataclass(frozen=True)
class ControlProblem:
    """Running cost 1/2|u|^2 - V, terminal cost Psi, noise sqrt(2 nu) dB on [0, T].

    Give either ``psi`` or ``phi_T`` = exp(-Psi / (2 nu)); the latter allows exactly
    band-limited Cole-Hopf data whose Psi is not band-limited.
    """

    nu: float
    T: float
    V: ScalarField
    psi: ScalarField | None = None
    phi_T: ScalarField | None = None

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError("horizon must be positive")
        if self.nu < 0:
            raise ValueError("viscosity must be non-negative")
        if (self.psi is None) == (self.phi_T is None):
            raise ValueError("give exactly one of psi and phi_T")
        other = self.psi if self.psi is not None else self.phi_T
        if other.modes is not self.V.modes:
            raise sp.TruncationMismatch("potential and terminal data must share a truncation")

    @property
    def d(self) -> int:
        return self.V.d

    @property
    def K(self) -> int:
        return self.V.K

    def terminal_phi(self) -> ScalarField:
        if self.phi_T is not None:
            return self.phi_T
        if self.nu <= 0:
            raise ValueError("Cole-Hopf data need nu > 0")
        return inverse_cole_hopf(self.psi, self.nu)

    def terminal_cost(self) -> ScalarField:
        return self.psi if self.psi is not None else cole_hopf(self.phi_T, self.nu)


def problem_from_modes(d: int, K: int, nu: float, T: float, V=(), psi=None, phi_T=None) -> ControlProblem:
    """Build a problem from symbolic mode lists [(k, parity, coefficient), ...]."""
    Vf = sp.scalar_field(d, K, V)
    return ControlProblem(
        nu,
        T,
        Vf,
        None if psi is None else sp.scalar_field(d, K, psi),
        None if phi_T is None else sp.scalar_field(d, K, phi_T),
    )


# --- Cole-Hopf --------------------------------------------------------------


def _sample_grid_size(K: int) -> int:
    return max(4 * K, 16)


def cole_hopf(phi: ScalarField, nu: float) -> ScalarField:
    """W = -2 nu ln Phi on an oversampled grid, projected back to phi.K."""
    if nu <= 0:
        raise ValueError("Cole-Hopf needs nu > 0")
    n = _sample_grid_size(phi.K)
    vals = phi.to_grid(n)
    if vals.min() <= 0:
        raise ValueError(f"Phi is not positive on the sample grid (min {vals.min():.3g})")
    cos, sin = sp.grid_to_coeffs(phi.modes, -2 * nu * np.log(vals))
    return ScalarField(phi.modes, cos, sin)


def inverse_cole_hopf(W: ScalarField, nu: float) -> ScalarField:
    """Phi = exp(-W / (2 nu)) on an oversampled grid, projected back to W.K."""
    if nu <= 0:
        raise ValueError("Cole-Hopf needs nu > 0")
    return sp.apply_pointwise(W, lambda w: np.exp(-w / (2 * nu)), n=_sample_grid_size(W.K))


def round_trip_error(W: ScalarField, nu: float) -> float:
    """max |W - cole_hopf(inverse_cole_hopf(W))| on the sample grid."""
    back = cole_hopf(inverse_cole_hopf(W, nu), nu)
    n = _sample_grid_size(W.K)
    return float(np.abs(back.to_grid(n) - W.to_grid(n)).max())


# --- heat equation with potential ------------------------------------------


def _is_constant(f: ScalarField) -> bool:
    return not (np.any(f.cos[1:]) or np.any(f.sin))


class HeatPropagator:
    """tau -> Phi(T - tau) for dPhi/dtau = nu Delta Phi + V Phi / (2 nu).

    Coefficients are packed as z = [cos(all modes), sin(modes 1..)].
    """

    def __init__(self, prob: ControlProblem, method: str = "exact", dt: float | None = None):
        if prob.nu <= 0:
            raise ValueError("the heat equation needs nu > 0; use hj_euler for nu = 0")
        if method not in ("exact", "strang"):
            raise ValueError(f"unknown method {method!r}")
        if method == "strang" and not dt:
            raise ValueError("strang splitting needs a time step")
        self.prob = prob
        self.method = method
        self.dt = dt
        self.modes = prob.V.modes
        self.phi_T = prob.terminal_phi()
        nu = prob.nu
        self.lam = -nu * self.modes.norm2
        self.const = _is_constant(prob.V)
        if method == "exact" and not self.const:
            self._diagonalize()

    def _pack(self, f: ScalarField) -> np.ndarray:
        return np.concatenate([f.cos, f.sin[1:]])

    def _unpack(self, z: np.ndarray) -> ScalarField:
        M = self.modes.size
        return ScalarField(self.modes, z[:M], np.concatenate([[0.0], z[M:]]))

    def _diagonalize(self):
        M = self.modes.size
        n = 2 * M - 1
        G = np.zeros((n, n))
        V = self.prob.V
        for j in range(n):
            e = np.zeros(n)
            e[j] = 1.0
            G[:, j] = self._pack(sp.multiply(V, self._unpack(e)))
        G /= 2 * self.prob.nu
        G += np.diag(np.concatenate([self.lam, self.lam[1:]]))
        # the L^2 weights make G self-adjoint; symmetrize with their square roots
        w = np.concatenate([[1.0], np.full(n - 1, 0.5)])
        s = np.sqrt(w)
        S = (s[:, None] * G) / s[None, :]
        S = 0.5 * (S + S.T)
        evals, U = np.linalg.eigh(S)
        self._evals = evals
        self._U = U
        self._s = s
        self._zT = U.T @ (s * self._pack(self.phi_T))

    def at_tau(self, tau: float) -> ScalarField:
        if self.const:
            g = np.exp(tau * (self.lam + self.prob.V.cos[0] / (2 * self.prob.nu)))
            return ScalarField(self.modes, g * self.phi_T.cos, g * self.phi_T.sin)
        if self.method == "exact":
            z = self._U @ (np.exp(tau * self._evals) * self._zT) / self._s
            return self._unpack(z)
        return self._strang(tau)

    def _strang(self, tau: float) -> ScalarField:
        steps = max(1, int(round(abs(tau) / self.dt)))
        h = tau / steps
        half = np.exp(self.lam * h / 2)
        n = _sample_grid_size(self.modes.K)
        mult = np.exp(h * self.prob.V.to_grid(n) / (2 * self.prob.nu))
        phi = self.phi_T
        for _ in range(steps):
            phi = ScalarField(self.modes, half * phi.cos, half * phi.sin)
            cos, sin = sp.grid_to_coeffs(self.modes, mult * phi.to_grid(n))
            phi = ScalarField(self.modes, half * cos, half * sin)
        return phi

    def __call__(self, t: float) -> ScalarField:
        return self.at_tau(self.prob.T - t)


class ValueFunction:
    """W and Phi on [0, T], with stored snapshots at ``times``."""

    def __init__(self, prob: ControlProblem, propagator: HeatPropagator, times):
        self.prob = prob
        self.propagator = propagator
        self.times = np.asarray(times, dtype=float)
        self.Phi = [propagator(t) for t in self.times]
        self.W = [cole_hopf(p, prob.nu) for p in self.Phi]

    @property
    def nu(self) -> float:
        return self.prob.nu

    def phi(self, t: float) -> ScalarField:
        return self.propagator(t)

    def value(self, t: float) -> ScalarField:
        return cole_hopf(self.phi(t), self.nu)

    def value_at(self, t: float, x) -> np.ndarray:
        return -2 * self.nu * np.log(sp.evaluate(self.phi(t), x))

    def control_at(self, t: float, x) -> np.ndarray:
        """u*(t, x) = -grad W = 2 nu grad Phi / Phi, evaluated pointwise."""
        phi = self.phi(t)
        p = sp.evaluate(phi, x)
        g = sp.evaluate(sp.gradient(phi), x)
        return 2 * self.nu * g / p[..., None]

    def min_phi(self, n: int | None = None) -> float:
        n = _sample_grid_size(self.prob.K) if n is None else n
        return float(min(p.to_grid(n).min() for p in self.Phi))


def solve_heat_with_potential(prob: ControlProblem, times=None, method: str = "exact", dt: float | None = None) -> ValueFunction:
    times = np.linspace(0.0, prob.T, 11) if times is None else times
    return ValueFunction(prob, HeatPropagator(prob, method, dt), times)


def solve_hjb(prob: ControlProblem, times=None, method: str = "exact", dt: float | None = None) -> ValueFunction:
    vf = solve_heat_with_potential(prob, times, method, dt)
    if vf.min_phi() <= 0:
        raise ValueError("Phi lost positivity")
    return vf


def optimal_control(vf: ValueFunction, t: float) -> VectorField:
    return -sp.gradient(vf.value(t))


# --- residual checks --------------------------------------------------------


def _time_derivative(fun, t: float, h: float = FD_STEP):
    """Five-point central difference of a field-valued function of time."""
    return (fun(t - 2 * h) - 8.0 * fun(t - h) + 8.0 * fun(t + h) - fun(t + 2 * h)) / (12 * h)


def _value_tau(vf: ValueFunction, t: float) -> ScalarField:
    # the exact propagator extends slightly past T, so central differences work at t = T
    return cole_hopf(vf.propagator.at_tau(vf.prob.T - t), vf.nu)


def hjb_residual(vf: ValueFunction, t: float, n: int | None = None) -> float:
    """max over a sample grid of |dW/dt + nu Delta W - 1/2 |grad W|^2 - V|."""
    n = _sample_grid_size(vf.prob.K) if n is None else n
    W = _value_tau(vf, t)
    Wt = _time_derivative(lambda s: _value_tau(vf, s), t)
    g = sp.gradient(W).to_grid(n)
    res = Wt.to_grid(n) + vf.nu * sp.laplacian(W).to_grid(n) - 0.5 * (g * g).sum(axis=0) - vf.prob.V.to_grid(n)
    return float(np.abs(res).max())


def heat_residual(vf: ValueFunction, t: float, n: int | None = None) -> float:
    """max |dPhi/dt + nu Delta Phi + V Phi / (2 nu)| on a sample grid."""
    n = _sample_grid_size(vf.prob.K) if n is None else n
    prop = vf.propagator
    T = vf.prob.T
    phi = prop.at_tau(T - t)
    pt = _time_derivative(lambda s: prop.at_tau(T - s), t)
    res = pt.to_grid(n) + vf.nu * sp.laplacian(phi).to_grid(n) + vf.prob.V.to_grid(n) * phi.to_grid(n) / (2 * vf.nu)
    return float(np.abs(res).max())


@dataclass
class BurgersReport:
    times: np.ndarray
    residuals: np.ndarray
    commutation: float

    @property
    def max_residual(self) -> float:
        return float(self.residuals.max())


def burgers_from_value(vf: ValueFunction, times=None) -> BurgersReport:
    """L^2 residual of dv/dt + nu box v + grad_v v + grad V = 0 for v(t) = grad W(T - t).

    box is -Delta.  The commutation Delta grad W = grad Delta W is checked on the
    stored snapshots.
    """
    T = vf.prob.T
    times = vf.times if times is None else np.asarray(times, dtype=float)

    def v(s):
        return sp.gradient(_value_tau(vf, T - s))

    gV = sp.gradient(vf.prob.V)
    res = []
    for s in times:
        vs = v(s)
        r = _time_derivative(v, s) - vf.nu * sp.laplacian(vs) + sp.advect(vs, vs) + gV
        res.append(sp.l2_norm(r))
    comm = max(sp.l2_norm(sp.laplacian(sp.gradient(W)) - sp.gradient(sp.laplacian(W))) for W in vf.W)
    return BurgersReport(np.asarray(times), np.array(res), comm)


def heat_comparison_max(vf_a: ValueFunction, vf_b: ValueFunction, n: int | None = None) -> float:
    n = _sample_grid_size(vf_a.prob.K) if n is None else n
    return max(float(np.abs(a.to_grid(n) - b.to_grid(n)).max()) for a, b in zip(vf_a.W, vf_b.W))


# --- dynamic programming --------------------------------------------------


@dataclass
class ControlEstimate:
    label: str
    estimate: float
    stderr: float


@dataclass
class DPPReport:
    W: float
    optimal: ControlEstimate
    perturbed: list
    split: ControlEstimate
    h: float
    k_sigma: float = 3.0

    @property
    def optimal_ok(self) -> bool:
        return abs(self.optimal.estimate - self.W) <= self.k_sigma * self.optimal.stderr

    @property
    def perturbed_ok(self) -> bool:
        return all(p.estimate >= self.W - self.k_sigma * p.stderr for p in self.perturbed)

    @property
    def split_ok(self) -> bool:
        return abs(self.split.estimate - self.W) <= self.k_sigma * self.split.stderr

    @property
    def passed(self) -> bool:
        return self.optimal_ok and self.perturbed_ok and self.split_ok


def dpp_check(
    prob: ControlProblem,
    vf: ValueFunction,
    perturbations,
    N: int,
    seed: int = 0,
    x=None,
    t: float = 0.0,
    dt: float = 5e-3,
    h: float | None = None,
    k_sigma: float = 3.0,
) -> DPPReport:
    """Monte Carlo check that W(t, x) is the infimum of the expected cost.

    ``perturbations`` is a list of (label, eps, field); the control used is
    u* + eps * field.  The split check runs the optimal control on [t, t + h] and
    adds the continuation value W(t + h, x_{t+h}).
    """
    if N <= 0:
        raise ValueError("number of paths must be positive")
    x = np.zeros(prob.d) if x is None else np.asarray(x, dtype=float)
    h = 0.5 * (prob.T - t) if h is None else h
    W0 = float(vf.value_at(t, x))
    terminal = prob.terminal_cost()
    V = None if _is_constant(prob.V) and prob.V.cos[0] == 0 else prob.V

    def run(control, label, T_end=prob.T, term=terminal, stream_seed=seed):
        est = flow.action_estimate(x, t, T_end, control, V, term, prob.nu, dt, N, stream_seed)
        return ControlEstimate(label, float(est.mean), float(est.stderr))

    opt = run(vf.control_at, "optimal")
    perturbed = []
    for i, (label, eps, fld) in enumerate(perturbations):
        def ctrl(s, y, eps=eps, fld=fld):
            extra = sp.evaluate(fld, y)
            if extra.ndim == y.ndim - 1:
                extra = extra[..., None]
            return vf.control_at(s, y) + eps * extra

        perturbed.append(run(ctrl, label))
    t_mid = t + h
    split = run(vf.control_at, f"split h={h:g}", T_end=t_mid, term=lambda s, y: vf.value_at(t_mid, y))
    return DPPReport(W0, opt, perturbed, split, h, k_sigma)


# --- vanishing viscosity ---------------------------------------------------


@dataclass
class VanishingViscosityReport:
    nus: list
    cauchy: list  # sup |W_nu_i - W_nu_{i+1}| over stored times and the sample grid
    inviscid_residual: list  # sup |dW/dt - 1/2 |grad W|^2 - V| per nu
    euler_gap: float | None  # | -grad W(T - s) - Euler/Burgers solution | at the smallest nu

    @property
    def cauchy_decreasing(self) -> bool:
        return all(b < a for a, b in zip(self.cauchy, self.cauchy[1:]))

    @property
    def residual_decreasing(self) -> bool:
        return all(b < a for a, b in zip(self.inviscid_residual, self.inviscid_residual[1:]))


def inviscid_residual(vf: ValueFunction, t: float, n: int | None = None) -> float:
    n = _sample_grid_size(vf.prob.K) if n is None else n
    W = _value_tau(vf, t)
    Wt = _time_derivative(lambda s: _value_tau(vf, s), t)
    g = sp.gradient(W).to_grid(n)
    res = Wt.to_grid(n) - 0.5 * (g * g).sum(axis=0) - vf.prob.V.to_grid(n)
    return float(np.abs(res).max())


def hj_euler(prob: ControlProblem, nus, times=None, horizon: float | None = None, dt: float = 1e-3) -> VanishingViscosityReport:
    """Vanishing-viscosity approximation of the Hamilton-Jacobi limit nu -> 0.

    Each nu in the decreasing sequence gets its own Cole-Hopf solve with the same
    Psi.  For V = 0 the velocity v(s) = grad W(T - s) at the smallest nu is also
    compared with the inviscid, unprojected Burgers flow started from grad Psi
    over ``horizon`` (default T / 4), using the EULER integrator.
    """
    from .fluid import Direction, FluidState, SolverConfig, integrate

    nus = list(nus)
    if any(b >= a for a, b in zip(nus, nus[1:])):
        raise ValueError("viscosities must be strictly decreasing")
    if prob.psi is None:
        raise ValueError("the vanishing-viscosity limit needs Psi")
    times = np.linspace(0.0, prob.T, 5) if times is None else times
    vfs = [solve_hjb(replace(prob, nu=nu), times) for nu in nus]
    n = _sample_grid_size(prob.K)
    cauchy = [
        max(float(np.abs(a.to_grid(n) - b.to_grid(n)).max()) for a, b in zip(va.W, vb.W))
        for va, vb in zip(vfs, vfs[1:])
    ]
    resid = [max(inviscid_residual(vf, t) for t in vf.times) for vf in vfs]
    gap = None
    if _is_constant(prob.V):
        horizon = prob.T / 4 if horizon is None else horizon
        cfg = SolverConfig(nu=0.0, dt=dt, K=prob.K, direction=Direction.EULER, project=False)
        v0 = sp.gradient(prob.psi)
        end = integrate(FluidState(0.0, v0), cfg, horizon).final.u
        ref = sp.gradient(_value_tau(vfs[-1], prob.T - horizon))
        gap = float(np.abs(end.to_grid(n) - ref.to_grid(n)).max())
    return VanishingViscosityReport(nus, cauchy, resid, gap)
