"""Incompressible Navier-Stokes and Euler flows on the flat torus.

Three directions are supported:

* ``FORWARD``   du/dt = P(-grad_u u - v) - nu box u     (box = -Laplacian)
* ``BACKWARD``  du/dt = P(-grad_u u - v) + nu box u, posed with terminal data
  and integrated towards decreasing t
* ``EULER``     du/dt = P(-grad_u u - v)

Pressure follows the convention in which -grad p appears on the right-hand side,
so grad p = -(I - P)(grad_u u + v).
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import spectral as sp
from .basis import QSpectrum, build_basis, lie_hodge
from .spectral import ScalarField, VectorField

RK4_STABILITY = 2.78  # real-axis stability limit of classical RK4 is about 2.785


class Direction(str, enum.Enum):
    FORWARD = "forward"
    BACKWARD = "backward"
    EULER = "euler"

    @property
    def viscous_sign(self) -> int:
        """Coefficient of nu * box u in du/dt."""
        return {"forward": -1, "backward": 1, "euler": 0}[self.value]


class Scheme(str, enum.Enum):
    RK4 = "rk4"
    IFRK4 = "ifrk4"


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    nu: float = 0.1
    dt: float = 1e-3
    K: int = 4
    scheme: Scheme = Scheme.IFRK4
    direction: Direction = Direction.FORWARD
    project: bool = True  # False gives the unprojected (Burgers) flux

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        object.__setattr__(self, "direction", Direction(self.direction))
        if self.nu < 0:
            raise ValueError("viscosity must be non-negative")
        if not self.dt > 0:
            raise ValueError("time step must be positive")
        if self.K < 1:
            raise ValueError("truncation must be at least 1")

    @property
    def effective_nu(self) -> float:
        return 0.0 if self.direction is Direction.EULER else self.nu

    def stability_number(self, d: int) -> float:
        """nu * dt * max|k|^2 for the explicit scheme."""
        return self.effective_nu * self.dt * d * self.K**2

    def check_stability(self, d: int):
        if self.scheme is Scheme.RK4 and self.stability_number(d) > RK4_STABILITY:
            raise ValueError(
                f"explicit RK4 unstable: nu*dt*d*K^2 = {self.stability_number(d):.3g} > {RK4_STABILITY}"
            )


@dataclass(frozen=True)
class FluidState:
    t: float
    u: VectorField
    p: ScalarField | None = None
    v_ext: VectorField | None = None

    def __post_init__(self):
        if self.v_ext is not None:
            if self.v_ext.modes is not self.u.modes:
                raise sp.TruncationMismatch("force and velocity must share a truncation")
            if not self.v_ext.div_free:
                warnings.warn("external force is not divergence-free; projecting it", stacklevel=3)
                object.__setattr__(self, "v_ext", sp.project(self.v_ext))
        if self.p is None:
            object.__setattr__(self, "p", ScalarField.zeros(self.u.d, self.u.K))

    @property
    def force(self) -> VectorField:
        return VectorField.zeros(self.u.d, self.u.K) if self.v_ext is None else self.v_ext

    @property
    def energy(self) -> float:
        return sp.energy(self.u)

    @property
    def enstrophy(self) -> float:
        return sp.enstrophy(self.u) if self.u.d == 2 else float("nan")


def initial_state(u: VectorField, t: float = 0.0, v_ext: VectorField | None = None) -> FluidState:
    s = FluidState(t, u, None, v_ext)
    return replace(s, p=pressure_from_velocity(s))


def _flux(u: VectorField, v: VectorField, project: bool) -> VectorField:
    w = -sp.advect(u, u) - v
    return sp.project(w) if project else w


def ns_rhs(state: FluidState, cfg: SolverConfig) -> VectorField:
    """du/dt in physical time for the configured direction."""
    u = state.u
    out = _flux(u, state.force, cfg.project)
    s = cfg.direction.viscous_sign
    if s and cfg.nu:
        out = out + (s * cfg.nu) * sp.hodge_laplacian(u)
    return out


def pressure_from_velocity(state: FluidState) -> ScalarField:
    """Mean-zero p with grad p = -(I - P)(grad_u u + v)."""
    _, q = sp.leray_project(sp.advect(state.u, state.u) + state.force)
    return -q


class _Stepper:
    """Integrator in the stepping time tau (tau = -t for BACKWARD).

    In tau every direction reads dy/dtau = L y + N(y) with L = nu Laplacian
    (zero for EULER) acting mode by mode.
    """

    def __init__(self, cfg: SolverConfig, modes: sp.ModeSet, force: VectorField):
        self.cfg = cfg
        self.force = force
        self.back = cfg.direction is Direction.BACKWARD
        self.lam = -cfg.effective_nu * modes.norm2  # eigenvalues of L
        h = cfg.dt
        self.E = np.exp(self.lam * h / 2)
        self.E2 = self.E**2

    def N(self, u: VectorField) -> VectorField:
        f = _flux(u, self.force, self.cfg.project)
        return -f if self.back else f

    def L(self, u: VectorField) -> VectorField:
        return u._new(u.cos * self.lam, u.sin * self.lam)

    def _scale(self, u: VectorField, E) -> VectorField:
        return u._new(u.cos * E, u.sin * E)

    def step(self, y: VectorField) -> VectorField:
        h = self.cfg.dt
        if self.cfg.scheme is Scheme.IFRK4:
            E, E2 = self.E, self.E2
            k1 = self.N(y)
            k2 = self.N(self._scale(y + (h / 2) * k1, E))
            k3 = self.N(self._scale(y, E) + (h / 2) * k2)
            k4 = self.N(self._scale(y, E2) + self._scale(h * k3, E))
            incr = self._scale(k1, E2) + 2.0 * self._scale(k2 + k3, E) + k4
            return self._scale(y, E2) + (h / 6) * incr

        def F(z):
            return self.L(z) + self.N(z)

        k1 = F(y)
        k2 = F(y + (h / 2) * k1)
        k3 = F(y + (h / 2) * k2)
        k4 = F(y + h * k3)
        return y + (h / 6) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _check_finite(u: VectorField, t: float):
    if not (np.isfinite(u.cos).all() and np.isfinite(u.sin).all()):
        raise SolverError(f"non-finite velocity at t = {t:.6g}")
    if u.max_abs_coeff() > 1e12:
        raise SolverError(f"velocity blew up at t = {t:.6g} (max coefficient {u.max_abs_coeff():.3g})")


def step(state: FluidState, cfg: SolverConfig) -> FluidState:
    """One step of size dt; t increases, or decreases for BACKWARD."""
    cfg.check_stability(state.u.d)
    y = _Stepper(cfg, state.u.modes, state.force).step(state.u)
    t = state.t - cfg.dt if cfg.direction is Direction.BACKWARD else state.t + cfg.dt
    _check_finite(y, t)
    new = FluidState(t, y, None, state.v_ext)
    return replace(new, p=pressure_from_velocity(new))


@dataclass
class Trajectory:
    direction: Direction
    states: list = field(default_factory=list)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])

    @property
    def final(self) -> FluidState:
        return self.states[-1]

    def at(self, t: float, tol: float = 1e-9) -> FluidState:
        for s in self.states:
            if abs(s.t - t) <= tol:
                return s
        raise KeyError(f"no snapshot at t = {t}")

    def table(self, extra: dict | None = None) -> list[dict]:
        rows = []
        for i, s in enumerate(self.states):
            row = {"t": s.t, "energy": s.energy, "enstrophy": s.enstrophy}
            for name, values in (extra or {}).items():
                row[name] = values[i]
            rows.append(row)
        return rows

    def to_csv(self, extra: dict | None = None) -> str:
        rows = self.table(extra)
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)
        return buf.getvalue()

    def snapshots_json(self) -> str:
        return json.dumps(
            [{"t": s.t, "u": sp.field_to_dict(s.u), "p": sp.field_to_dict(s.p)} for s in self.states]
        )


def integrate(state: FluidState, cfg: SolverConfig, T: float, stride: int = 1) -> Trajectory:
    """Advance over a duration T and keep every ``stride``-th state.

    BACKWARD runs start from terminal data at ``state.t`` and end at ``state.t - T``.
    The first and last states are always kept.
    """
    n = int(round(T / cfg.dt))
    if n < 0 or not math.isclose(n * cfg.dt, T, rel_tol=1e-9, abs_tol=1e-12):
        raise ValueError(f"duration {T} is not a whole number of steps of {cfg.dt}")
    cfg.check_stability(state.u.d)
    stepper = _Stepper(cfg, state.u.modes, state.force)
    sign = -1.0 if cfg.direction is Direction.BACKWARD else 1.0
    traj = Trajectory(cfg.direction, [state])
    y = state.u
    for i in range(1, n + 1):
        y = stepper.step(y)
        t = state.t + sign * i * cfg.dt
        _check_finite(y, t)
        if i % stride == 0 or i == n:
            s = FluidState(t, y, None, state.v_ext)
            traj.states.append(replace(s, p=pressure_from_velocity(s)))
    return traj


# --- equivalence with the Burgers equation on the volume-preserving group ------


def sg_burgers_paths(state: FluidState, cfg: SolverConfig, Q: QSpectrum | None = None, skip_leray: bool = False):
    """Right-hand side computed two ways.

    (a) Leray projection of the Burgers flux, with the viscous term realised as the
        Lie-derivative Hodge Laplacian sum over the basis Q;
    (b) the fluid form -grad_u u - grad p - v + viscous term, with p taken from
        :func:`pressure_from_velocity` and box = -Laplacian.

    Q defaults to the flat basis with K = 1; the Lie sum is formed at truncation
    u.K + Q.K, which makes it exact, and then cut back to u.K.
    """
    u = state.u
    v = state.force
    Q = build_basis(u.d, 1) if Q is None else Q
    s = cfg.direction.viscous_sign * cfg.nu
    flux = -sp.advect(u, u) - v
    a = flux if skip_leray else sp.project(flux)
    if s:
        Kw = u.K + Q.K
        a = a + s * sp.retruncate(lie_hodge(Q, sp.retruncate(u, Kw)), u.K)
    p = pressure_from_velocity(state)
    b = flux - sp.gradient(p)
    if s:
        b = b + s * sp.hodge_laplacian(u)
    return a, b


def sg_burgers_residual(state: FluidState, cfg: SolverConfig, Q: QSpectrum | None = None, skip_leray: bool = False) -> float:
    """L^2 norm of the difference of the two right-hand sides."""
    a, b = sg_burgers_paths(state, cfg, Q, skip_leray)
    return sp.l2_norm(a - b)


def time_reversal_check(u0: VectorField, cfg: SolverConfig, T: float) -> float:
    """max_t || u_fwd(t) + u_bwd(T - t) || with u_bwd solved backwards from -u0 at time T.

    If u_bwd solves the backward equation then -u_bwd(T - t) solves the forward one
    with the same initial data, so the distance measures integration error only.
    """
    fwd_cfg = replace(cfg, direction=Direction.FORWARD)
    bwd_cfg = replace(cfg, direction=Direction.BACKWARD)
    fwd = integrate(FluidState(0.0, u0), fwd_cfg, T)
    bwd = integrate(FluidState(T, -u0), bwd_cfg, T)
    worst = 0.0
    for s_f, s_b in zip(fwd.states, bwd.states):
        assert math.isclose(s_f.t, T - s_b.t, abs_tol=1e-9)
        worst = max(worst, sp.l2_norm(s_f.u + s_b.u))
    return worst


def taylor_green(amplitude: float, nu: float, t: float, K: int = 2) -> FluidState:
    """Exact decaying vortex a e^{-2 nu t}(sin x cos y, -cos x sin y).

    Its pressure, with -grad p on the right-hand side, is
    (a^2 / 4) e^{-4 nu t}(cos 2x + cos 2y).
    """
    if K < 2:
        raise ValueError("the vortex pressure needs K >= 2")
    u = sp.taylor_green_field(K, amplitude * math.exp(-2 * nu * t))
    c = amplitude**2 / 4 * math.exp(-4 * nu * t)
    p = sp.scalar_field(2, K, [((2, 0), "cos", c), ((0, 2), "cos", c)])
    return FluidState(t, u, p)


def energy_law_residual(traj: Trajectory, nu: float) -> np.ndarray:
    """|E(t+dt) - E(t) + nu <box u, u> dt| per step, for FORWARD runs without force.

    With E = |u|^2 / 2 the exact law is dE/dt = -nu <box u, u>.
    """
    out = []
    for s0, s1 in zip(traj.states[:-1], traj.states[1:]):
        dt = s1.t - s0.t
        diss = sp.l2_inner(sp.hodge_laplacian(s0.u), s0.u)
        out.append(abs(s1.energy - s0.energy + nu * diss * dt))
    return np.array(out)
