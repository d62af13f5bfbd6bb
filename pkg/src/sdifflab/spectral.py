"""Band-limited scalar and vector fields on the flat torus T^d = [0, 2pi)^d.

Fields are stored as real trigonometric sums

    f(theta) = sum_k  a_k cos(k . theta) + b_k sin(k . theta)

over a symmetric mode set {k : |k|_inf <= K}.  Only one representative of each
pair {k, -k} is kept (first nonzero entry positive); the zero mode carries the
mean and has no sine part.

Differential operators act exactly on coefficients.  Products are formed on a
uniform grid fine enough to hold the product without aliasing and are then
either kept at truncation 2K (``strict=True``) or cut back to K.
"""

from __future__ import annotations

import functools
import json
from dataclasses import dataclass

import numpy as np

COS = "cos"
SIN = "sin"

TWO_PI = 2.0 * np.pi


def volume(d: int) -> float:
    """Volume of T^d with the flat metric, (2 pi)^d."""
    return TWO_PI**d


class TruncationMismatch(ValueError):
    """Raised when fields with different (d, K) are combined."""


@dataclass(frozen=True)
class Mode:
    k: tuple
    parity: str
    j: int = 0


class ModeSet:
    """Canonical wavevectors of T^d with |k|_inf <= K.

    Ordered by (|k|^2, k); index 0 is always k = 0.  Use :func:`mode_set`
    to get the shared cached instance.
    """

    def __init__(self, d: int, K: int):
        if d < 1:
            raise ValueError("dimension must be >= 1")
        if K < 0:
            raise ValueError("truncation must be >= 0")
        self.d = d
        self.K = K
        ks = (tuple(int(c) - K for c in k) for k in np.ndindex(*([2 * K + 1] * d)))
        canon = [k for k in ks if _is_canonical(k)]
        canon.sort(key=lambda k: (sum(c * c for c in k), k))
        self.k = np.array(canon, dtype=np.int64).reshape(-1, d)
        self.k.setflags(write=False)
        self.norm2 = (self.k**2).sum(axis=1).astype(float)
        self.norm2.setflags(write=False)
        self.size = len(canon)
        self._index = {k: i for i, k in enumerate(canon)}

    def __repr__(self):
        return f"ModeSet(d={self.d}, K={self.K}, size={self.size})"

    def index(self, k) -> int:
        """Position of wavevector ``k`` (either sign) in this set."""
        k = tuple(int(c) for c in k)
        if not _is_canonical(k):
            k = tuple(-c for c in k)
        try:
            return self._index[k]
        except KeyError:
            raise KeyError(f"mode {k} not in truncation K={self.K}") from None

    def embedding(self, other: "ModeSet") -> np.ndarray:
        """Indices of this set's modes inside ``other`` (-1 where absent)."""
        out = np.full(self.size, -1, dtype=np.int64)
        for i, k in enumerate(map(tuple, self.k.tolist())):
            out[i] = other._index.get(k, -1)
        return out

    def grid_size(self, band: int | None = None) -> int:
        """Smallest even grid length resolving fields of this truncation exactly."""
        band = self.K if band is None else band
        n = 2 * band + 2
        return max(n, 4)

    @functools.lru_cache(maxsize=None)
    def _fft_index(self, n: int):
        if n < 2 * self.K + 1:
            raise ValueError(f"grid of {n} points cannot hold modes up to K={self.K}")
        shape = (n,) * self.d
        pos = np.ravel_multi_index(tuple((self.k % n).T), shape)
        neg = np.ravel_multi_index(tuple((-self.k % n).T), shape)
        return pos, neg


def _is_canonical(k) -> bool:
    for c in k:
        if c != 0:
            return c > 0
    return True  # zero mode


@functools.lru_cache(maxsize=None)
def mode_set(d: int, K: int) -> ModeSet:
    return ModeSet(d, K)


# --- raw coefficient <-> grid transforms -----------------------------------


def coeffs_to_grid(modes: ModeSet, cos: np.ndarray, sin: np.ndarray, n: int) -> np.ndarray:
    """Values on the uniform n^d grid; leading axes of the coefficients are kept."""
    pos, neg = modes._fft_index(n)
    lead = cos.shape[:-1]
    d = modes.d
    hat = np.zeros(lead + (n**d,), dtype=complex)
    half = 0.5 * (cos - 1j * sin)
    hat[..., pos] += half
    hat[..., neg] += np.conj(half)
    # the zero mode was added twice as a/2 + a/2 = a, which is what we want
    hat = hat.reshape(lead + (n,) * d)
    axes = tuple(range(-d, 0))
    vals = np.fft.ifftn(hat, axes=axes) * n**d
    return vals.real


def grid_to_coeffs(modes: ModeSet, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Project grid values onto ``modes``.

    Exact when the sampled function is a trigonometric polynomial of degree
    below n - K in every coordinate.
    """
    d = modes.d
    n = values.shape[-1]
    lead = values.shape[:-d]
    axes = tuple(range(-d, 0))
    hat = np.fft.fftn(values, axes=axes).reshape(lead + (n**d,)) / n**d
    pos, _ = modes._fft_index(n)
    h = hat[..., pos]
    cos = 2.0 * h.real
    sin = -2.0 * h.imag
    cos[..., 0] = h[..., 0].real
    sin[..., 0] = 0.0
    return cos, sin


def grid_points(d: int, n: int) -> np.ndarray:
    """Uniform grid of T^d as an array of shape (n,)*d + (d,)."""
    ax = TWO_PI * np.arange(n) / n
    mesh = np.meshgrid(*([ax] * d), indexing="ij")
    return np.stack(mesh, axis=-1)


# --- field types -------------------------------------------------------------


class SpectralField:
    """Immutable coefficient container shared by scalar, vector and tensor fields.

    ``cos`` and ``sin`` have shape ``shape + (M,)`` where M is the mode count.
    """

    shape: tuple = ()

    __array_ufunc__ = None

    def __init__(self, modes: ModeSet, cos, sin=None):
        cos = np.array(cos, dtype=float)
        sin = np.zeros_like(cos) if sin is None else np.array(sin, dtype=float)
        expected = self._expected_shape(modes)
        if cos.shape != expected or sin.shape != expected:
            raise ValueError(f"coefficient arrays must have shape {expected}, got {cos.shape}")
        sin[..., 0] = 0.0
        cos.setflags(write=False)
        sin.setflags(write=False)
        self.modes = modes
        self.cos = cos
        self.sin = sin

    def _expected_shape(self, modes):
        return tuple(self.shape) + (modes.size,)

    @property
    def d(self) -> int:
        return self.modes.d

    @property
    def K(self) -> int:
        return self.modes.K

    @classmethod
    def zeros(cls, d: int, K: int):
        modes = mode_set(d, K)
        shape = {ScalarField: (), VectorField: (d,), TensorField: (d, d)}[cls]
        return cls(modes, np.zeros(shape + (modes.size,)))

    def _new(self, cos, sin, modes=None):
        obj = type(self).__new__(type(self))
        obj.shape = self.shape
        SpectralField.__init__(obj, self.modes if modes is None else modes, cos, sin)
        return obj

    def _check(self, other):
        if not isinstance(other, SpectralField):
            return NotImplemented
        if other.modes is not self.modes or other.shape != self.shape:
            raise TruncationMismatch(
                f"cannot combine fields on (d={self.d}, K={self.K}, shape={self.shape}) and "
                f"(d={other.d}, K={other.K}, shape={other.shape}); resample explicitly with retruncate()"
            )
        return None

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return self._new(self.cos + other.cos, self.sin + other.sin)

    def __sub__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return self._new(self.cos - other.cos, self.sin - other.sin)

    def __neg__(self):
        return self._new(-self.cos, -self.sin)

    def __mul__(self, s):
        if isinstance(s, SpectralField):
            return NotImplemented
        return self._new(s * self.cos, s * self.sin)

    __rmul__ = __mul__

    def __truediv__(self, s):
        return self._new(self.cos / s, self.sin / s)

    def max_abs_coeff(self) -> float:
        return float(max(np.abs(self.cos).max(initial=0.0), np.abs(self.sin).max(initial=0.0)))

    def to_grid(self, n: int | None = None) -> np.ndarray:
        n = self.modes.grid_size() if n is None else n
        return coeffs_to_grid(self.modes, self.cos, self.sin, n)

    def __call__(self, theta):
        return evaluate(self, theta)


class ScalarField(SpectralField):
    shape = ()

    def __init__(self, modes: ModeSet, cos, sin=None):
        super().__init__(modes, cos, sin)

    def mean(self) -> float:
        return float(self.cos[0])

    def __repr__(self):
        return f"ScalarField(d={self.d}, K={self.K})"


class VectorField(SpectralField):
    def __init__(self, modes: ModeSet, cos, sin=None):
        self.shape = (modes.d,)
        super().__init__(modes, cos, sin)

    @property
    def div_free(self) -> bool:
        """True when every mode's coefficient vectors are orthogonal to k."""
        scale = max(self.max_abs_coeff(), 1.0)
        return divergence_residual(self) <= 1e-13 * scale

    def component(self, i: int) -> ScalarField:
        return ScalarField(self.modes, self.cos[i], self.sin[i])

    def __repr__(self):
        return f"VectorField(d={self.d}, K={self.K})"


class TensorField(SpectralField):
    """Rank-2 tensor field, used for wedge products A ^ B."""

    def __init__(self, modes: ModeSet, cos, sin=None):
        self.shape = (modes.d, modes.d)
        super().__init__(modes, cos, sin)


def scalar_field(d: int, K: int, terms=()) -> ScalarField:
    """Build a scalar field from ``(k, parity, coefficient)`` triples.

    Non-canonical ``k`` is folded onto its representative (cos is even, sin odd).
    """
    modes = mode_set(d, K)
    cos = np.zeros(modes.size)
    sin = np.zeros(modes.size)
    for k, parity, c in terms:
        i, sign = _fold(modes, k)
        if parity == COS:
            cos[i] += c
        elif parity == SIN:
            sin[i] += sign * c
        else:
            raise ValueError(f"unknown parity {parity!r}")
    return ScalarField(modes, cos, sin)


def vector_field(d: int, K: int, terms=()) -> VectorField:
    """Build a vector field from ``(k, parity, component, coefficient)`` records."""
    modes = mode_set(d, K)
    cos = np.zeros((d, modes.size))
    sin = np.zeros((d, modes.size))
    for k, parity, comp, c in terms:
        i, sign = _fold(modes, k)
        if parity == COS:
            cos[comp, i] += c
        elif parity == SIN:
            sin[comp, i] += sign * c
        else:
            raise ValueError(f"unknown parity {parity!r}")
    return VectorField(modes, cos, sin)


def _fold(modes, k):
    k = tuple(int(c) for c in k)
    if len(k) != modes.d:
        raise ValueError(f"wavevector {k} has wrong dimension for d={modes.d}")
    sign = 1.0 if _is_canonical(k) else -1.0
    return modes.index(k), sign


def constant(d: int, K: int, value) -> SpectralField:
    value = np.asarray(value, dtype=float)
    modes = mode_set(d, K)
    if value.ndim == 0:
        cos = np.zeros(modes.size)
        cos[0] = value
        return ScalarField(modes, cos)
    cos = np.zeros((d, modes.size))
    cos[:, 0] = value
    return VectorField(modes, cos)


def stack_vector(components) -> VectorField:
    comps = list(components)
    modes = comps[0].modes
    for c in comps:
        if c.modes is not modes:
            raise TruncationMismatch("components live on different truncations")
    return VectorField(modes, np.stack([c.cos for c in comps]), np.stack([c.sin for c in comps]))


def retruncate(f: SpectralField, K: int) -> SpectralField:
    """Explicit resample to truncation K: zero-pad upward, cut downward."""
    new = mode_set(f.d, K)
    if new is f.modes:
        return f
    if K >= f.K:
        idx = f.modes.embedding(new)
        cos = np.zeros(f.shape + (new.size,))
        sin = np.zeros(f.shape + (new.size,))
        cos[..., idx] = f.cos
        sin[..., idx] = f.sin
    else:
        idx = new.embedding(f.modes)
        cos = f.cos[..., idx]
        sin = f.sin[..., idx]
    return f._new(cos, sin, modes=new)


# --- evaluation --------------------------------------------------------------


def evaluate(f: SpectralField, theta) -> np.ndarray:
    """Exact trigonometric sum at points ``theta`` of shape (..., d).

    Returns shape (...) + f.shape.  Modes whose coefficients all vanish are skipped.
    """
    theta = np.asarray(theta, dtype=float)
    if f.d == 1 and (theta.ndim == 0 or theta.shape[-1] != 1):
        theta = theta[..., None]
    if theta.shape[-1] != f.d:
        raise ValueError(f"points must have trailing dimension {f.d}")
    cos = f.cos.reshape(-1, f.modes.size)
    sin = f.sin.reshape(-1, f.modes.size)
    live = np.flatnonzero((cos != 0).any(axis=0) | (sin != 0).any(axis=0))
    pts = theta.reshape(-1, f.d)
    phase = pts @ f.modes.k[live].T.astype(float)
    out = np.cos(phase) @ cos[:, live].T + np.sin(phase) @ sin[:, live].T
    return out.reshape(theta.shape[:-1] + f.shape)


def eval_scalar(f: ScalarField, theta):
    return evaluate(f, theta)


def eval_vector(u: VectorField, theta):
    return evaluate(u, theta)


def eval_jacobian(u: VectorField, theta) -> np.ndarray:
    """Matrix of partial derivatives J[..., a, b] = d u_a / d theta_b at ``theta``."""
    theta = np.asarray(theta, dtype=float)
    k = u.modes.k.astype(float)
    # d/dtheta_b of cos(k.th) = -k_b sin, of sin = k_b cos
    cos = u.sin[:, None, :] * k.T[None, :, :]
    sin = -u.cos[:, None, :] * k.T[None, :, :]
    g = TensorField(u.modes, cos, sin)
    return evaluate(g, theta)


# --- linear differential operators -----------------------------------------


def gradient(f: ScalarField) -> VectorField:
    k = f.modes.k.T.astype(float)  # (d, M)
    return VectorField(f.modes, f.sin[None, :] * k, -f.cos[None, :] * k)


def divergence(u: VectorField) -> ScalarField:
    k = u.modes.k.T.astype(float)
    return ScalarField(u.modes, (u.sin * k).sum(axis=0), -(u.cos * k).sum(axis=0))


def divergence_residual(u: VectorField) -> float:
    div = divergence(u)
    return div.max_abs_coeff()


def laplacian(f: SpectralField) -> SpectralField:
    return f._new(-f.modes.norm2 * f.cos, -f.modes.norm2 * f.sin)


def hodge_laplacian(u: VectorField) -> VectorField:
    """Hodge Laplacian on vector fields; Ricci vanishes on the flat torus, so it is -Delta."""
    return -laplacian(u)


def curl2d(u: VectorField) -> ScalarField:
    """Scalar vorticity d u_y/dx - d u_x/dy (d = 2 only)."""
    if u.d != 2:
        raise ValueError("curl2d needs d = 2")
    k = u.modes.k.astype(float)
    # d_x u_y - d_y u_x in coefficient form
    cos = k[:, 0] * u.sin[1] - k[:, 1] * u.sin[0]
    sin = -k[:, 0] * u.cos[1] + k[:, 1] * u.cos[0]
    return ScalarField(u.modes, cos, sin)


# --- products ----------------------------------------------------------------


def _product_grid(K: int) -> int:
    # products have band 2K; resolving them without aliasing needs n >= 4K + 1
    return max(4 * K + 2, 4)


def _finish(template: SpectralField, shape, vals, strict: bool):
    K = template.K
    out_modes = mode_set(template.d, 2 * K) if strict else template.modes
    cos, sin = grid_to_coeffs(out_modes, vals)
    cls = {(): ScalarField, (template.d,): VectorField, (template.d, template.d): TensorField}[tuple(shape)]
    return cls(out_modes, cos, sin)


def multiply(f: ScalarField, g: SpectralField, strict: bool = False) -> SpectralField:
    """Pointwise product of a scalar field with any field."""
    if f.modes is not g.modes:
        raise TruncationMismatch("multiply needs fields on the same truncation")
    n = _product_grid(f.K)
    fv = f.to_grid(n)
    gv = g.to_grid(n)
    return _finish(g, g.shape, fv * gv, strict)


def dot(u: VectorField, w: VectorField, strict: bool = False) -> ScalarField:
    if u.modes is not w.modes:
        raise TruncationMismatch("dot needs fields on the same truncation")
    n = _product_grid(u.K)
    vals = (u.to_grid(n) * w.to_grid(n)).sum(axis=0)
    return _finish(u, (), vals, strict)


def outer(u: VectorField, w: VectorField, strict: bool = False) -> TensorField:
    if u.modes is not w.modes:
        raise TruncationMismatch("outer needs fields on the same truncation")
    n = _product_grid(u.K)
    uv = u.to_grid(n)
    wv = w.to_grid(n)
    return _finish(u, (u.d, u.d), uv[:, None] * wv[None, :], strict)


def wedge(u: VectorField, w: VectorField, strict: bool = False) -> TensorField:
    """Antisymmetric tensor u (x) w - w (x) u."""
    t = outer(u, w, strict)
    return TensorField(t.modes, t.cos - np.swapaxes(t.cos, 0, 1), t.sin - np.swapaxes(t.sin, 0, 1))


def directional_derivative(u: VectorField, f: ScalarField, strict: bool = False) -> ScalarField:
    """u . grad f."""
    return dot(u, gradient(f), strict)


def advect(u: VectorField, w: VectorField, strict: bool = False) -> VectorField:
    """Covariant derivative (u . grad) w of the flat torus.

    The product is formed exactly at truncation 2K.  With ``strict`` the 2K
    field is returned, otherwise it is cut back to K.
    """
    if u.modes is not w.modes:
        raise TruncationMismatch("advect needs fields on the same truncation")
    n = _product_grid(u.K)
    uv = u.to_grid(n)
    k = w.modes.k.astype(float)
    # d w_a / d theta_b coefficients, shape (d_a, d_b, M)
    jc = w.sin[:, None, :] * k.T[None]
    js = -w.cos[:, None, :] * k.T[None]
    jv = coeffs_to_grid(w.modes, jc, js, n)
    vals = np.einsum("b...,ab...->a...", uv, jv)
    return _finish(w, (w.d,), vals, strict)


def lie_bracket(u: VectorField, w: VectorField, strict: bool = False) -> VectorField:
    """[u, w] = grad_u w - grad_w u."""
    return advect(u, w, strict) - advect(w, u, strict)


def apply_pointwise(f: ScalarField, func, n: int | None = None, K_out: int | None = None) -> ScalarField:
    """Apply a nonlinear function on an oversampled grid and project back.

    The default grid has at least 4K points per axis.
    """
    n = max(4 * f.K, 2 * f.K + 2, 8) if n is None else n
    vals = func(f.to_grid(n))
    modes = f.modes if K_out is None else mode_set(f.d, K_out)
    cos, sin = grid_to_coeffs(modes, vals)
    return ScalarField(modes, cos, sin)


def project_function(func, d: int, K: int, n: int | None = None) -> ScalarField:
    """Band-limited projection of a callable ``func(theta)`` (theta has shape (..., d))."""
    modes = mode_set(d, K)
    n = max(4 * K, 2 * K + 2, 8) if n is None else n
    vals = np.asarray(func(grid_points(d, n)), dtype=float)
    cos, sin = grid_to_coeffs(modes, vals)
    return ScalarField(modes, cos, sin)


# --- Helmholtz split ---------------------------------------------------------


def leray_project(w: VectorField) -> tuple[VectorField, ScalarField]:
    """Split w = P(w) + grad q with div P(w) = 0 and mean(q) = 0.

    Mode by mode the coefficient vectors are split into parts parallel and
    orthogonal to k; the k = 0 part stays entirely in P(w).
    """
    k = w.modes.k.astype(float).T  # (d, M)
    n2 = w.modes.norm2.copy()
    n2[0] = 1.0
    ka = (k * w.cos).sum(axis=0) / n2
    kb = (k * w.sin).sum(axis=0) / n2
    ka[0] = kb[0] = 0.0
    pc = w.cos - k * ka
    ps = w.sin - k * kb
    # grad(alpha cos + beta sin) has cos part beta k and sin part -alpha k
    q = ScalarField(w.modes, -kb, ka)
    return VectorField(w.modes, pc, ps), q


def project(w: VectorField) -> VectorField:
    return leray_project(w)[0]


# --- inner products ----------------------------------------------------------


def l2_inner(a: SpectralField, b: SpectralField) -> float:
    """Exact L^2 inner product over T^d (volume (2 pi)^d)."""
    if a.modes is not b.modes or a.shape != b.shape:
        raise TruncationMismatch("l2_inner needs fields of the same kind and truncation")
    w = np.full(a.modes.size, 0.5)
    w[0] = 1.0
    s = ((a.cos * b.cos + a.sin * b.sin) * w).sum()
    return float(volume(a.d) * s)


def l2_norm(a: SpectralField) -> float:
    return float(np.sqrt(max(l2_inner(a, a), 0.0)))


def energy(u: VectorField) -> float:
    return 0.5 * l2_inner(u, u)


def enstrophy(u: VectorField) -> float:
    w = curl2d(u)
    return 0.5 * l2_inner(w, w)


# --- random fields -----------------------------------------------------------


def random_scalar(rng: np.random.Generator, d: int, K: int, decay: float = 1.0) -> ScalarField:
    modes = mode_set(d, K)
    amp = 1.0 / (1.0 + modes.norm2) ** (decay / 2)
    return ScalarField(modes, rng.standard_normal(modes.size) * amp, rng.standard_normal(modes.size) * amp)


def random_vector(rng: np.random.Generator, d: int, K: int, decay: float = 1.0) -> VectorField:
    modes = mode_set(d, K)
    amp = 1.0 / (1.0 + modes.norm2) ** (decay / 2)
    c = rng.standard_normal((d, modes.size)) * amp
    s = rng.standard_normal((d, modes.size)) * amp
    return VectorField(modes, c, s)


def random_div_free(
    rng: np.random.Generator, d: int, K: int, decay: float = 1.0, energy_level: float | None = None, mean_free: bool = True
) -> VectorField:
    u = project(random_vector(rng, d, K, decay))
    if mean_free:
        cos = u.cos.copy()
        cos[:, 0] = 0.0
        u = VectorField(u.modes, cos, u.sin)
    if energy_level is not None:
        u = u * np.sqrt(energy_level / energy(u))
    return u


def taylor_green_field(K: int, amplitude: float = 1.0) -> VectorField:
    """amplitude * (sin x cos y, -cos x sin y) on T^2."""
    if K < 1:
        raise ValueError("Taylor-Green needs K >= 1")
    h = 0.5 * amplitude
    # sin x cos y = (sin(x+y) + sin(x-y)) / 2 ; cos x sin y = (sin(x+y) - sin(x-y)) / 2
    return vector_field(
        2,
        K,
        [
            ((1, 1), SIN, 0, h),
            ((1, -1), SIN, 0, h),
            ((1, 1), SIN, 1, -h),
            ((1, -1), SIN, 1, h),
        ],
    )


# --- serialization ------------------------------------------------------------


def field_to_dict(f: SpectralField) -> dict:
    kind = {ScalarField: "scalar", VectorField: "vector", TensorField: "tensor"}[type(f)]
    records = []
    comps = list(np.ndindex(*f.shape)) if f.shape else [()]
    for comp in comps:
        for parity, arr in ((COS, f.cos), (SIN, f.sin)):
            row = arr[comp] if comp else arr
            for i in np.flatnonzero(row):
                rec = {"k": f.modes.k[i].tolist(), "parity": parity, "coefficient": float(row[i])}
                if comp:
                    rec["component"] = list(comp) if len(comp) > 1 else comp[0]
                records.append(rec)
    return {"kind": kind, "d": f.d, "K": f.K, "records": records}


def field_from_dict(data: dict) -> SpectralField:
    d, K = int(data["d"]), int(data["K"])
    modes = mode_set(d, K)
    kind = data["kind"]
    shape = {"scalar": (), "vector": (d,), "tensor": (d, d)}[kind]
    cos = np.zeros(shape + (modes.size,))
    sin = np.zeros(shape + (modes.size,))
    for rec in data["records"]:
        i, sign = _fold(modes, rec["k"])
        comp = rec.get("component", ())
        comp = tuple(comp) if isinstance(comp, list) else ((comp,) if comp != () else ())
        if rec["parity"] == COS:
            cos[comp + (i,)] += rec["coefficient"]
        else:
            sin[comp + (i,)] += sign * rec["coefficient"]
    cls = {"scalar": ScalarField, "vector": VectorField, "tensor": TensorField}[kind]
    return cls(modes, cos, sin)


def dumps(f: SpectralField) -> str:
    return json.dumps(field_to_dict(f))


def loads(s: str) -> SpectralField:
    return field_from_dict(json.loads(s))
