"""Truncated orthonormal basis of divergence-free fields on T^d and its weights.

Each oscillatory element is a unit-L^2 multiple of cos(k.theta) e or
sin(k.theta) e with e a unit vector orthogonal to k; the constants e_j / sqrt(vol)
complete the basis of band-limited divergence-free fields.  Weights c_i are
rescaled so that

    sum_i c_i^2 A_i(x) A_i(x)^T = I        for every x,

which is what makes the weighted generator sum equal the Laplacian.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import spectral as sp
from .spectral import COS, SIN, ScalarField, TensorField, VectorField

CONST = "const"


@dataclass(frozen=True)
class BasisElement:
    k: tuple
    parity: str
    j: int
    field: VectorField
    weight: float

    @property
    def mode(self) -> sp.Mode:
        return sp.Mode(self.k, self.parity, self.j)


def polarizations(k) -> np.ndarray:
    """Orthonormal basis of the plane orthogonal to k, shape (d - 1, d).

    For d = 2 this is the rotation of k by +90 degrees.  In higher dimension the
    standard basis vectors are orthogonalised against k in order.
    """
    k = np.asarray(k, dtype=float)
    d = k.size
    if d == 2:
        e = np.array([-k[1], k[0]])
        return (e / np.linalg.norm(e))[None, :]
    vecs = [k / np.linalg.norm(k)]
    out = []
    for i in range(d):
        v = np.zeros(d)
        v[i] = 1.0
        for w in vecs:
            v = v - (v @ w) * w
        nv = np.linalg.norm(v)
        if nv > 1e-8:
            v = v / nv
            vecs.append(v)
            out.append(v)
        if len(out) == d - 1:
            break
    return np.array(out)


class QSpectrum:
    """Weighted family of divergence-free fields spanning the truncated Lie algebra.

    ``entries`` are ordered lexicographically in (|k|^2, k, j, parity).
    ``degenerate`` is set on T^1, where no oscillatory divergence-free fields exist.
    """

    def __init__(self, d: int, K: int, entries: Sequence[BasisElement], direction_count: int, degenerate: bool = False, profile: str = "custom"):
        self.d = d
        self.K = K
        self.entries = tuple(entries)
        self.direction_count = direction_count
        self.degenerate = degenerate
        self.profile = profile
        self.modes = sp.mode_set(d, K)
        if self.entries:
            self._cos = np.stack([e.field.cos for e in self.entries])
            self._sin = np.stack([e.field.sin for e in self.entries])
        else:
            self._cos = np.zeros((0, d, self.modes.size))
            self._sin = np.zeros((0, d, self.modes.size))
        self._live = np.flatnonzero((self._cos != 0).any(axis=(0, 1)) | (self._sin != 0).any(axis=(0, 1)))

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __repr__(self):
        return f"QSpectrum(d={self.d}, K={self.K}, elements={len(self)}, profile={self.profile!r})"

    @property
    def weights(self) -> np.ndarray:
        return np.array([e.weight for e in self.entries])

    @property
    def amplitude_weights(self) -> np.ndarray:
        """c_i^2 times the squared pointwise amplitude of A_i (2/vol or 1/vol)."""
        amp2 = np.array([(e.field.cos**2 + e.field.sin**2).sum() for e in self.entries])
        return self.weights**2 * amp2

    def metric_tensor(self, x=None) -> np.ndarray:
        """sum_i c_i^2 A_i(x) A_i(x)^T; the identity for a normalised paired spectrum."""
        x = np.zeros(self.d) if x is None else np.asarray(x, dtype=float)
        vals = self.evaluate(x[None, :])[0]  # (n, d)
        c2 = self.weights**2
        return np.einsum("i,ia,ib->ab", c2, vals, vals)

    def certificate(self) -> np.ndarray:
        """Spatial mean of :meth:`metric_tensor`, from the mode data alone.

        Equals the pointwise tensor when every cosine element has its sine partner.
        """
        out = np.zeros((self.d, self.d))
        for e in self.entries:
            if e.parity == CONST:
                vec = e.field.cos[:, 0]
                out += e.weight**2 * np.outer(vec, vec)
            else:
                i = e.field.modes.index(e.k)
                vec = e.field.cos[:, i] if e.parity == COS else e.field.sin[:, i]
                out += 0.5 * e.weight**2 * np.outer(vec, vec)
        return out

    def is_paired(self) -> bool:
        keys = {(e.k, e.j, e.parity) for e in self.entries}
        partner = {COS: SIN, SIN: COS}
        return all(e.parity == CONST or (e.k, e.j, partner[e.parity]) in keys for e in self.entries)

    def evaluate(self, x) -> np.ndarray:
        """Values A_i(x) for all elements: shape (..., n_elements, d)."""
        x = np.asarray(x, dtype=float)
        pts = x.reshape(-1, self.d)
        k = self.modes.k[self._live].astype(float)
        ph = pts @ k.T
        c, s = np.cos(ph), np.sin(ph)
        vals = np.einsum("pm,iam->pia", c, self._cos[:, :, self._live]) + np.einsum("pm,iam->pia", s, self._sin[:, :, self._live])
        return vals.reshape(x.shape[:-1] + (len(self), self.d))

    def evaluate_jacobian(self, x) -> np.ndarray:
        """Derivatives dA_i^a / dx^b, shape (..., n_elements, d, d)."""
        x = np.asarray(x, dtype=float)
        pts = x.reshape(-1, self.d)
        k = self.modes.k[self._live].astype(float)
        ph = pts @ k.T
        c, s = np.cos(ph), np.sin(ph)
        # d/dx_b [a cos + b sin] = (-a sin + b cos) k_b
        vals = np.einsum("pm,iam,mb->piab", -s, self._cos[:, :, self._live], k) + np.einsum(
            "pm,iam,mb->piab", c, self._sin[:, :, self._live], k
        )
        return vals.reshape(x.shape[:-1] + (len(self), self.d, self.d))

    def restricted(self, keep: Callable[[BasisElement], bool]) -> "QSpectrum":
        """Sub-spectrum with the same weights (no renormalisation)."""
        kept = [e for e in self.entries if keep(e)]
        return QSpectrum(self.d, self.K, kept, len({e.k for e in kept if e.parity != CONST}), self.degenerate, self.profile)

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "K": self.K,
            "profile": self.profile,
            "degenerate": self.degenerate,
            "direction_count": self.direction_count,
            "entries": [
                {"k": list(e.k), "parity": e.parity, "j": e.j, "c_k": e.weight, "field": sp.field_to_dict(e.field)}
                for e in self.entries
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "QSpectrum":
        entries = [
            BasisElement(tuple(r["k"]), r["parity"], int(r["j"]), sp.field_from_dict(r["field"]), float(r["c_k"]))
            for r in data["entries"]
        ]
        return cls(int(data["d"]), int(data["K"]), entries, int(data["direction_count"]), bool(data["degenerate"]), data["profile"])

    def dumps(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def loads(cls, s: str) -> "QSpectrum":
        return cls.from_dict(json.loads(s))


def wavevector_lines(d: int, K: int) -> list[tuple]:
    """Canonical nonzero wavevectors with |k|_inf <= K, one per line {k, -k}."""
    return [tuple(k) for k in sp.mode_set(d, K).k.tolist()[1:]]


def _sort_key(e: BasisElement):
    k = e.k
    return (sum(c * c for c in k), k, e.j, {CONST: 0, COS: 0, SIN: 1}[e.parity])


def build_basis(d: int, K: int, profile: str = "flat", s: float = 1.0, include_constants: bool = True) -> QSpectrum:
    """Truncated orthonormal divergence-free basis with normalised weights.

    ``profile`` is ``"flat"`` (equal raw weight on every line) or ``"decay"``
    (raw weight |k|^-s; the constants take the weight of the unit shell).  The raw
    weights are then rescaled by one global factor so that the certificate holds
    exactly.  On T^1 only the constant field exists and the result is flagged
    ``degenerate``.
    """
    if K < 1:
        raise ValueError("build_basis needs K >= 1")
    if profile not in ("flat", "decay"):
        raise ValueError(f"unknown weight profile {profile!r}")
    modes = sp.mode_set(d, K)
    vol = sp.volume(d)
    amp = np.sqrt(2.0 / vol)
    lines = wavevector_lines(d, K) if d >= 2 else []
    raw = []  # (k, parity, j, coefficient vector, raw weight)
    for k in lines:
        w = 1.0 if profile == "flat" else float(np.linalg.norm(k)) ** (-s)
        for j, e in enumerate(polarizations(k), start=1):
            raw.append((k, COS, j, amp * e, w))
            raw.append((k, SIN, j, amp * e, w))
    if include_constants:
        for j in range(d):
            e = np.zeros(d)
            e[j] = 1.0 / np.sqrt(vol)
            raw.append((tuple([0] * d), CONST, j + 1, e, 1.0))

    cert = np.zeros((d, d))
    for k, parity, j, vec, w in raw:
        if parity in (COS, CONST):
            cert += w**2 * np.outer(vec, vec)
    alpha = np.trace(cert) / d if raw else 1.0
    if raw and not np.allclose(cert, alpha * np.eye(d), rtol=0, atol=1e-12 * alpha):
        raise ValueError("weight profile does not give an isotropic certificate")
    scale = 1.0 / np.sqrt(alpha)

    entries = []
    for k, parity, j, vec, w in raw:
        cos = np.zeros((d, modes.size))
        sin = np.zeros((d, modes.size))
        i = modes.index(k)
        if parity == SIN:
            sin[:, i] = vec
        else:
            cos[:, i] = vec
        entries.append(BasisElement(k, parity, j, VectorField(modes, cos, sin), w * scale))
    entries.sort(key=_sort_key)
    return QSpectrum(d, K, entries, len(lines), degenerate=(d == 1), profile=profile)


def _lift(Q: QSpectrum, K: int) -> list[VectorField]:
    if K < Q.K:
        raise ValueError(f"working truncation {K} is below the basis truncation {Q.K}")
    return [sp.retruncate(e.field, K) for e in Q.entries]


# --- Le Jan-Watanabe identities ----------------------------------------------


def check_pointwise_metric(Q: QSpectrum, v, x) -> float:
    """sum_i c_i^2 <A_i(x), v>^2."""
    vals = Q.evaluate(np.asarray(x, dtype=float)[None, :])[0]
    proj = vals @ np.asarray(v, dtype=float)
    return float((Q.weights**2 * proj**2).sum())


def sum_self_advection(Q: QSpectrum, K_work: int | None = None) -> VectorField:
    """sum_i c_i^2 grad_{A_i} A_i at working truncation (default 2K, exact)."""
    K_work = 2 * Q.K if K_work is None else K_work
    out = VectorField.zeros(Q.d, K_work)
    for c, A in zip(Q.weights, _lift(Q, K_work)):
        out = out + c**2 * sp.advect(A, A)
    return out


def sum_wedge(Q: QSpectrum, X: VectorField) -> TensorField:
    """sum_i c_i^2 A_i ^ grad_X A_i, computed at the truncation of X (>= basis K)."""
    out = TensorField.zeros(Q.d, X.K)
    for c, A in zip(Q.weights, _lift(Q, X.K)):
        out = out + c**2 * sp.wedge(A, sp.advect(X, A))
    return out


def generator_sum(Q: QSpectrum, f: ScalarField) -> ScalarField:
    """sum_i c_i^2 A_i(A_i f).

    Works at the truncation of ``f``; exact when band(f) + K_basis <= f.K.
    """
    out = ScalarField.zeros(Q.d, f.K)
    for c, A in zip(Q.weights, _lift(Q, f.K)):
        out = out + c**2 * sp.directional_derivative(A, sp.directional_derivative(A, f))
    return out


def lie_hodge(Q: QSpectrum, u: VectorField) -> VectorField:
    """-sum_i c_i^2 L_{A_i} L_{A_i} u with L_A u = [A, u].

    Same truncation rule as :func:`generator_sum`.
    """
    out = VectorField.zeros(Q.d, u.K)
    for c, A in zip(Q.weights, _lift(Q, u.K)):
        out = out - c**2 * sp.lie_bracket(A, sp.lie_bracket(A, u))
    return out


def divergence_of_elements(Q: QSpectrum) -> float:
    """max_i |div A_i|; zero makes sum (div A_i) L_{A_i} vanish term by term."""
    return max((sp.divergence_residual(e.field) for e in Q.entries), default=0.0)


# --- noise expansion -----------------------------------------------------------


def q_trace(Q: QSpectrum) -> float:
    return float((Q.weights**2).sum())


def qsqrt_expand(Q: QSpectrum, xi) -> VectorField:
    """sum_i c_i xi_i A_i."""
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (len(Q),):
        raise ValueError(f"need {len(Q)} coefficients, got shape {xi.shape}")
    coef = Q.weights * xi
    return VectorField(Q.modes, np.einsum("i,iam->am", coef, Q._cos), np.einsum("i,iam->am", coef, Q._sin))


def expand(Q: QSpectrum, w: VectorField) -> VectorField:
    """Orthogonal projection sum_i <w, A_i> A_i onto the span of the elements."""
    if w.K != Q.K:
        raise sp.TruncationMismatch("expand needs a field on the basis truncation")
    out = VectorField.zeros(Q.d, Q.K)
    for e in Q.entries:
        out = out + sp.l2_inner(w, e.field) * e.field
    return out


# --- gradients of potentials on the diffeomorphism group ----------------------


class CylinderPotential:
    """Potential V(g(x_1), ..., g(x_n)) depending on finitely many particle positions.

    ``value(y)`` takes y of shape (n, d); ``gradients(y)`` returns the per-slot
    gradients, shape (n, d).  :meth:`separable` builds V(y) = sum_i f_i(y_i)
    from band-limited scalar fields.
    """

    def __init__(self, points, value: Callable, gradients: Callable):
        self.points = np.atleast_2d(np.asarray(points, dtype=float))
        if self.points.shape[0] < 1:
            raise ValueError("a cylinder potential needs at least one point")
        self.value = value
        self.gradients = gradients

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @classmethod
    def separable(cls, points, fields: Sequence[ScalarField]) -> "CylinderPotential":
        fields = list(fields)
        grads = [sp.gradient(f) for f in fields]

        def value(y):
            return float(sum(sp.evaluate(f, yi) for f, yi in zip(fields, y)))

        def gradients(y):
            return np.array([sp.evaluate(g, yi) for g, yi in zip(grads, y)])

        return cls(points, value, gradients)

    @classmethod
    def linear(cls, points, slopes) -> "CylinderPotential":
        """V(y) = sum_i c_i . y_i in unwrapped coordinates; constant gradients c_i."""
        slopes = np.atleast_2d(np.asarray(slopes, dtype=float))

        def value(y):
            return float((slopes * np.asarray(y)).sum())

        def gradients(y):
            return slopes.copy()

        return cls(points, value, gradients)


def dirac_mass(x, d: int, K: int) -> ScalarField:
    """Band-limited Dirac mass at x, normalised against dv / vol.

    Its L^2 pairing with any band-K field g is vol * g(x).
    """
    modes = sp.mode_set(d, K)
    ph = modes.k @ np.asarray(x, dtype=float)
    cos = 2.0 * np.cos(ph)
    sin = 2.0 * np.sin(ph)
    cos[0] = 1.0
    return ScalarField(modes, cos, sin)


def sdiff_gradient_cylinder(Q: QSpectrum, P: CylinderPotential) -> VectorField:
    """Gradient of a cylinder potential at the identity, pushed to the torus.

    (1 / vol) sum_i Leray( grad_{y_i} V(x_1..x_n) * delta_{x_i} ) at truncation Q.K.
    """
    d, K = Q.d, Q.K
    grads = P.gradients(P.points)
    total = VectorField.zeros(d, K)
    for xi, gi in zip(P.points, grads):
        delta = dirac_mass(xi, d, K)
        total = total + VectorField(delta.modes, np.outer(gi, delta.cos), np.outer(gi, delta.sin))
    return sp.project(total) / sp.volume(d)


def sdiff_gradient_integral(Q: QSpectrum, V: ScalarField) -> VectorField:
    """Gradient of g -> int V(g(x)) dv at the identity: sum_i <grad V, A_i> A_i."""
    return expand(Q, sp.gradient(sp.retruncate(V, Q.K)))


def flow_points(A: VectorField, x, t: float, steps: int = 200) -> np.ndarray:
    """Time-t flow of the autonomous field A from points x (RK4, unwrapped)."""
    y = np.array(x, dtype=float)
    h = t / steps
    for _ in range(steps):
        k1 = sp.evaluate(A, y)
        k2 = sp.evaluate(A, y + 0.5 * h * k1)
        k3 = sp.evaluate(A, y + 0.5 * h * k2)
        k4 = sp.evaluate(A, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return y


def directional_derivative_fd(P: CylinderPotential, A: VectorField, eps: float) -> float:
    """(V(exp(eps A)) - V(e)) / eps along the flow of A."""
    moved = flow_points(A, P.points, eps)
    return (P.value(moved) - P.value(P.points)) / eps
