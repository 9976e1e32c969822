"""Discretization of the open stretched cone R+ x X.

The radial half axis is carried on a uniform grid in t = log r, so that
dilations r -> lambda*r become shifts in t and the weighted Mellin
transform becomes a weighted Fourier transform.  The base X is either a
point (n = 0) or the unit circle (n = 1); circle functions are stored by
angular Fourier modes so that differential operators on X act diagonally.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DomainError, NonFiniteSampleError

__all__ = [
    "RadialGrid",
    "BaseManifold",
    "GridFunction",
    "CutoffFunction",
    "BracketFunction",
    "GroupAction",
    "sample",
    "apply_kappa",
    "cutoff_eval",
    "excision_eval",
    "precedes",
    "trig_shift",
    "trig_interpolate",
    "default_cutoff",
    "default_bracket",
    "write_gridfunction_csv",
    "read_gridfunction_csv",
]


@dataclass(frozen=True)
class RadialGrid:
    """Uniform grid in t = log r with nodes r_k = exp(t_min + k*dt)."""

    t_min: float = -8.0
    t_max: float = 8.0
    K: int = 2048

    def __post_init__(self):
        if self.K < 8:
            raise DomainError(f"need K >= 8, got {self.K}")
        if not self.t_max > self.t_min:
            raise DomainError("need t_max > t_min")

    @property
    def dt(self):
        return (self.t_max - self.t_min) / (self.K - 1)

    @cached_property
    def t(self):
        return np.linspace(self.t_min, self.t_max, self.K)

    @cached_property
    def r(self):
        return np.exp(self.t)

    @cached_property
    def trapezoid_weights(self):
        """Trapezoid weights on the t-grid (include the dt factor)."""
        w = np.full(self.K, self.dt)
        w[0] *= 0.5
        w[-1] *= 0.5
        return w

    def metadata(self):
        return {"t_min": self.t_min, "t_max": self.t_max, "K": self.K}


@dataclass(frozen=True)
class BaseManifold:
    """The base X of the cone: a point (n=0) or the circle S^1 (n=1)."""

    kind: str = "point"
    N_x: int = 1

    def __post_init__(self):
        if self.kind not in ("point", "circle"):
            raise DomainError(f"unknown base kind {self.kind!r}")
        if self.kind == "point" and self.N_x != 1:
            raise DomainError("point base has exactly one angular mode")
        if self.kind == "circle" and (self.N_x < 2 or self.N_x % 2):
            raise DomainError("circle base needs an even mode count >= 2")

    @property
    def n(self):
        return 0 if self.kind == "point" else 1

    @cached_property
    def modes(self):
        """Integer angular mode indices in FFT order."""
        if self.kind == "point":
            return np.zeros(1, dtype=int)
        return np.fft.fftfreq(self.N_x, 1.0 / self.N_x).astype(int)

    @cached_property
    def angles(self):
        return 2.0 * np.pi * np.arange(self.N_x) / self.N_x

    def angular_l2_factor(self):
        """Factor turning sum over mode coefficients into integral over X."""
        return 1.0 if self.kind == "point" else 2.0 * np.pi

    def metadata(self):
        return {"kind": self.kind, "N_x": self.N_x}


@dataclass
class GridFunction:
    """Complex samples on a log-radial grid, angular direction by modes.

    ``values[k, m]`` is the coefficient of exp(i*modes[m]*x) at radius
    r_k.  For a point base the single column holds the plain samples.
    ``closed_form`` optionally records the sampled function u(r, x) for
    operations that can re-evaluate it off the grid.
    """

    grid: RadialGrid
    base: BaseManifold
    values: np.ndarray
    closed_form: object = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (self.grid.K, self.base.N_x):
            raise DomainError(
                f"values shape {self.values.shape} != "
                f"{(self.grid.K, self.base.N_x)}"
            )

    def with_values(self, values, closed_form=None):
        return GridFunction(self.grid, self.base, values, closed_form)

    def copy(self):
        return GridFunction(self.grid, self.base, self.values.copy(), self.closed_form)

    def __add__(self, other):
        self._check_compatible(other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other):
        self._check_compatible(other)
        return self.with_values(self.values - other.values)

    def __mul__(self, scalar):
        return self.with_values(self.values * scalar)

    __rmul__ = __mul__

    def _check_compatible(self, other):
        if self.grid != other.grid or self.base != other.base:
            raise DomainError("grid functions live on different grids")

    def scale_radial(self, factor_of_r):
        """Multiply by a radial factor, evaluated on the grid nodes."""
        fac = np.asarray(factor_of_r(self.grid.r), dtype=complex)
        return self.with_values(self.values * fac[:, None])

    def sup_norm(self):
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0


def _mollifier(x):
    """s(x) = exp(-1/x) for x > 0, else 0; vectorized and overflow-safe."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    with np.errstate(divide="ignore", over="ignore"):
        out[pos] = np.exp(-1.0 / x[pos])
    return out


@dataclass(frozen=True)
class CutoffFunction:
    """Smooth cut-off: 1 on (0, a], 0 on [b, oo), via the exp(-1/x) glue."""

    a: float = 1.0
    b: float = 2.0

    def __post_init__(self):
        if not 0 < self.a < self.b:
            raise DomainError(f"need 0 < a < b, got a={self.a}, b={self.b}")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        sa = _mollifier(self.b - r)
        sb = _mollifier(r - self.a)
        with np.errstate(invalid="ignore"):
            out = np.where(sa + sb > 0, sa / np.where(sa + sb > 0, sa + sb, 1.0), 0.0)
        # both mollifiers vanish only for r <= a (plateau) handled here:
        out = np.where(r <= self.a, 1.0, out)
        out = np.where(r >= self.b, 0.0, out)
        return out if out.ndim else float(out)

    def complement(self, r):
        return 1.0 - self(r)


def cutoff_eval(omega: CutoffFunction, r):
    """Evaluate a cut-off function; values lie in [0, 1]."""
    return omega(r)


def precedes(phi: CutoffFunction, psi: CutoffFunction):
    """phi < psi in the support sense: psi == 1 on a neighbourhood of supp phi."""
    return phi.b <= psi.a


@dataclass(frozen=True)
class BracketFunction:
    """Smoothed modulus [eta]: equal to 1 for |eta| <= 1, |eta| for |eta| >= 2."""

    omega0: CutoffFunction = field(default_factory=CutoffFunction)

    def __call__(self, eta):
        eta = np.asarray(eta, dtype=float)
        a = np.abs(eta)
        w = self.omega0(a)
        out = w + (1.0 - w) * a
        return out if out.ndim else float(out)


def excision_eval(eta, omega0: CutoffFunction | None = None):
    """Excision chi(eta) = 1 - omega0(|eta|): 0 near eta = 0, 1 for |eta| >= 2."""
    omega0 = omega0 or CutoffFunction()
    eta = np.asarray(eta, dtype=float)
    out = 1.0 - omega0(np.abs(eta))
    return out if out.ndim else float(out)


def default_cutoff():
    return CutoffFunction(1.0, 2.0)


def default_bracket():
    return BracketFunction(CutoffFunction(1.0, 2.0))


def sample(closed_form, grid: RadialGrid, base: BaseManifold) -> GridFunction:
    """Sample u(r, x) on the grid; angular direction stored as Fourier modes.

    ``closed_form`` is called as f(r, x) on broadcastable arrays; a plain
    radial profile f(r) is accepted as well.
    """
    r = grid.r
    if base.kind == "point":
        vals = _call_form(closed_form, r, np.zeros_like(r))
        vals = np.asarray(vals, dtype=complex).reshape(grid.K, 1)
        _reject_nonfinite(vals, grid, base)
        return GridFunction(grid, base, vals, closed_form=closed_form)
    x = base.angles
    vals_x = _call_form(closed_form, r[:, None], x[None, :])
    vals_x = np.broadcast_to(np.asarray(vals_x, dtype=complex), (grid.K, base.N_x))
    _reject_nonfinite(vals_x, grid, base, physical=True)
    coeffs = np.fft.fft(vals_x, axis=1) / base.N_x
    return GridFunction(grid, base, coeffs, closed_form=closed_form)


def _call_form(f, r, x):
    try:
        return f(r, x)
    except TypeError:
        return f(r)


def _reject_nonfinite(vals, grid, base, physical=False):
    bad = ~np.isfinite(vals)
    if bad.any():
        k, m = np.argwhere(bad)[0]
        where = f"x index {m}" if physical else f"mode {base.modes[m]}"
        raise NonFiniteSampleError(
            f"non-finite sample at node k={k} (r={grid.r[k]:.6e}), {where}"
        )


# ---------------------------------------------------------------------------
# band-limited interpolation on the t-grid


def trig_shift(values, shift_nodes, axis=0):
    """Shift samples by a (fractional) number of nodes, zero extension.

    Evaluates the trigonometric interpolant of the zero-padded sequence at
    index + shift_nodes.  Data shifted in from outside the original window
    is zero; shifts beyond the window return zeros.
    """
    values = np.asarray(values, dtype=complex)
    values = np.moveaxis(values, axis, -1)
    K = values.shape[-1]
    if abs(shift_nodes) >= K:
        out = np.zeros_like(values)
        return np.moveaxis(out, -1, axis)
    P = 3 * K
    buf = np.zeros(values.shape[:-1] + (P,), dtype=complex)
    buf[..., K : 2 * K] = values
    freq = np.fft.fftfreq(P)
    shifted = np.fft.ifft(np.fft.fft(buf, axis=-1) * np.exp(2j * np.pi * freq * shift_nodes), axis=-1)
    out = shifted[..., K : 2 * K]
    return np.moveaxis(out, -1, axis)


def trig_interpolate(values, grid: RadialGrid, t_targets, axis=0, chunk=256):
    """Evaluate the band-limited interpolant at arbitrary t (zero extension)."""
    values = np.asarray(values, dtype=complex)
    values = np.moveaxis(values, axis, -1)
    K = values.shape[-1]
    P = 3 * K
    buf = np.zeros(values.shape[:-1] + (P,), dtype=complex)
    buf[..., K : 2 * K] = values
    coeffs = np.fft.fft(buf, axis=-1) / P
    freq = np.fft.fftfreq(P, d=grid.dt)  # cycles per unit t
    t0 = grid.t_min - K * grid.dt  # origin of the padded window
    t_targets = np.asarray(t_targets, dtype=float)
    flat = t_targets.ravel()
    out = np.empty(values.shape[:-1] + (flat.size,), dtype=complex)
    for lo in range(0, flat.size, chunk):
        hi = min(lo + chunk, flat.size)
        phase = np.exp(2j * np.pi * np.outer(freq, flat[lo:hi] - t0))
        out[..., lo:hi] = coeffs @ phase
    inside = (flat >= t0) & (flat <= grid.t_max + K * grid.dt)
    out[..., ~inside] = 0.0
    out = out.reshape(values.shape[:-1] + t_targets.shape)
    return np.moveaxis(out, -1, axis) if t_targets.ndim else out


@dataclass(frozen=True)
class GroupAction:
    """Dilation group (kappa_lambda u)(r, x) = lambda^((n+1)/2) u(lambda r, x)."""

    n: int = 0

    def __call__(self, u: GridFunction, lam: float) -> GridFunction:
        return apply_kappa(u, lam)


def apply_kappa(u: GridFunction, lam: float, extension="zero") -> GridFunction:
    """Apply the dilation group action kappa_lambda on the log grid.

    lambda*r is a grid shift by log(lambda)/dt; non-integer shifts use
    band-limited interpolation in t with zero extension outside the window.
    """
    if not lam > 0:
        raise DomainError(f"kappa_lambda needs lambda > 0, got {lam}")
    if extension != "zero":
        raise DomainError(f"unsupported extension {extension!r}")
    n = u.base.n
    pref = lam ** ((n + 1) / 2.0)
    if lam == 1.0:
        return u.copy()
    shift = np.log(lam) / u.grid.dt
    vals = pref * trig_shift(u.values, shift, axis=0)
    new_form = None
    if u.closed_form is not None:
        f = u.closed_form
        new_form = lambda r, x=0.0, _f=f, _lam=lam, _p=pref: _p * _call_form(_f, _lam * r, x)
    return GridFunction(u.grid, u.base, vals, closed_form=new_form)


# ---------------------------------------------------------------------------
# serialization: CSV body with a JSON header line


def write_gridfunction_csv(u: GridFunction, path):
    header = {**u.grid.metadata(), **u.base.metadata()}
    lines = ["# " + json.dumps(header, sort_keys=True)]
    lines.append("k,r,mode,re,im")
    modes = u.base.modes
    for k in range(u.grid.K):
        rk = u.grid.r[k]
        for j, m in enumerate(modes):
            v = u.values[k, j]
            lines.append(f"{k},{rk:.17e},{m},{v.real:.17e},{v.imag:.17e}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_gridfunction_csv(path) -> GridFunction:
    with open(path) as fh:
        head = fh.readline()
        if not head.startswith("#"):
            raise DomainError("missing JSON header line")
        meta = json.loads(head[1:].strip())
        fh.readline()  # column names
        grid = RadialGrid(meta["t_min"], meta["t_max"], meta["K"])
        base = BaseManifold(meta["kind"], meta["N_x"])
        vals = np.zeros((grid.K, base.N_x), dtype=complex)
        mode_col = {int(m): j for j, m in enumerate(base.modes)}
        for line in fh:
            if not line.strip():
                continue
            k, _r, m, re, im = line.split(",")
            vals[int(k), mode_col[int(m)]] = float(re) + 1j * float(im)
    return GridFunction(grid, base, vals)
