"""Weighted Mellin transform, Mellin/Fourier operators on R+, kernel cut-off.

On the log grid t = log r the weighted Mellin transform

    M_gamma u (1/2 - gamma + i*rho) = int e^{(1/2-gamma) t} u(e^t) e^{i rho t} dt

is a weighted Fourier transform and is evaluated by trapezoid quadrature,
which is spectrally accurate for integrands decaying at both window ends.
The module also provides the two quantizations op_r (oscillatory double
integral) and op_M (Mellin multiplier) whose agreement on edge-degenerate
differential operators is a structural identity of the calculus.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np

from .conegrid import (
    BaseManifold,
    CutoffFunction,
    GridFunction,
    RadialGrid,
    trig_interpolate,
)
from .errors import (
    AccuracyWarning,
    AliasingWarning,
    BoundaryDecayWarning,
    DomainError,
    NonIntegrableKernelError,
    PoleOnLineError,
)

__all__ = [
    "MellinLine",
    "mellin_at",
    "mellin_transform",
    "mellin_inverse",
    "MellinSymbol",
    "FourierSymbol",
    "op_mellin",
    "op_fourier",
    "support_window",
    "quantization_residual",
    "kernel_cutoff",
    "KernelCutoff",
    "stirling2",
    "write_line_samples_csv",
]

BOUNDARY_DECAY_TOL = 1e-10
RHO_DECAY_TOL = 1e-8
POLE_LINE_CLEARANCE = 1e-6


@dataclass(frozen=True)
class MellinLine:
    """Sampled weight line Gamma_{1/2-gamma} with P equispaced rho nodes."""

    gamma: float = 0.0
    rho_max: float = 64.0
    P: int = 1024

    def __post_init__(self):
        if self.P < 16:
            raise DomainError(f"need P >= 16, got {self.P}")
        if not self.rho_max > 0:
            raise DomainError("need rho_max > 0")

    @property
    def delta(self):
        """Real part of the line."""
        return 0.5 - self.gamma

    @cached_property
    def rho(self):
        return np.linspace(-self.rho_max, self.rho_max, self.P)

    @cached_property
    def z(self):
        return self.delta + 1j * self.rho

    @cached_property
    def weights(self):
        w = np.full(self.P, self.rho[1] - self.rho[0])
        w[0] *= 0.5
        w[-1] *= 0.5
        return w

    def metadata(self):
        return {"gamma": self.gamma, "rho_max": self.rho_max, "P": self.P}


def mellin_at(u: GridFunction, z, check_boundary=True):
    """Mellin transform M u(z) = int_0^oo r^{z-1} u(r, .) dr at arbitrary z.

    Returns an array of shape z.shape + (N_x,) of per-mode values.
    """
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    t = u.grid.t
    w = u.grid.trapezoid_weights
    if check_boundary:
        _warn_boundary(u, float(np.min(z.real)), float(np.max(z.real)))
    # E[p, k] = w_k exp(z_p t_k)
    E = np.exp(np.outer(z, t))
    out = (E * w) @ u.values
    return out


def _warn_boundary(u, re_lo, re_hi):
    mags = np.abs(u.values).max(axis=1)
    peak = mags.max()
    if peak == 0.0:
        return
    t = u.grid.t
    for re in {re_lo, re_hi}:
        weighted = mags * np.exp(re * t)
        wpeak = weighted.max()
        if wpeak == 0.0:
            continue
        rel = max(weighted[0], weighted[-1]) / wpeak
        if rel > BOUNDARY_DECAY_TOL:
            warnings.warn(
                f"integrand magnitude {rel:.3e} at the grid boundary for "
                f"Re z = {re:g}; weight/window mismatch",
                BoundaryDecayWarning,
                stacklevel=3,
            )
            return


def mellin_transform(u: GridFunction, gamma=None, line: MellinLine | None = None):
    """Weighted Mellin transform sampled on the line Gamma_{1/2-gamma}."""
    if line is None:
        line = MellinLine(gamma=0.0 if gamma is None else gamma)
    elif gamma is not None and line.gamma != gamma:
        raise DomainError("gamma disagrees with the supplied line")
    return mellin_at(u, line.z)


def mellin_inverse(U, line: MellinLine, grid: RadialGrid, base: BaseManifold):
    """Inverse transform u(r) = (1/2 pi) int r^{-(delta + i rho)} U d rho."""
    U = np.asarray(U, dtype=complex)
    if U.ndim == 1:
        U = U[:, None]
    if U.shape[0] != line.P:
        raise DomainError("line samples do not match the line resolution")
    peak = np.abs(U).max()
    if peak > 0:
        edge = max(np.abs(U[0]).max(), np.abs(U[-1]).max()) / peak
        if edge > RHO_DECAY_TOL:
            warnings.warn(
                f"line samples at |rho| = rho_max have relative magnitude "
                f"{edge:.3e}; inverse transform may alias",
                AliasingWarning,
                stacklevel=2,
            )
    t = grid.t
    # vals[k, m] = (1/2 pi) e^{-delta t_k} sum_p w_p U[p, m] e^{-i rho_p t_k}
    E = np.exp(-1j * np.outer(t, line.rho))
    vals = (E @ (line.weights[:, None] * U)) * np.exp(-line.delta * t)[:, None] / (2 * np.pi)
    return GridFunction(grid, base, vals)


# ---------------------------------------------------------------------------
# symbols


def stirling2(j, k):
    """Stirling numbers of the second kind S(j, k)."""
    return _stirling_row(j)[k] if 0 <= k <= j else 0


@lru_cache(maxsize=None)
def _stirling_row(j):
    if j == 0:
        return (1,)
    prev = _stirling_row(j - 1)
    row = [0] * (j + 1)
    for k in range(1, j + 1):
        row[k] = k * (prev[k] if k < j else 0) + prev[k - 1]
    return tuple(row)


@dataclass
class MellinSymbol:
    """Amplitude f(r, z, eta) per angular mode for op_M.

    ``fn(r, z, mode, eta)`` must broadcast over the (r, z) arrays.  Declared
    poles (if any) are used for the pole-on-line guard.
    """

    fn: object
    poles: tuple = ()
    label: str = ""

    def eval(self, r, z, mode=0, eta=0.0):
        return np.asarray(self.fn(r, z, mode, eta), dtype=complex)

    @staticmethod
    def from_z_polynomial(coeffs, label=""):
        """r-independent polynomial in z (coefficients low -> high)."""
        c = np.asarray(coeffs, dtype=complex)

        def fn(r, z, mode, eta):
            out = np.zeros(np.broadcast(r, z).shape, dtype=complex)
            for a in c[::-1]:
                out = out * z + a
            return out

        return MellinSymbol(fn, label=label or "poly")


@dataclass
class FourierSymbol:
    """Amplitude p(r, rho, eta) per angular mode for op_r (left quantization)."""

    fn: object
    order: float = 0.0
    edge_degenerate: bool = False
    label: str = ""

    def eval(self, r, rho, mode=0, eta=0.0):
        return np.asarray(self.fn(r, rho, mode, eta), dtype=complex)


def op_mellin(f, gamma, u: GridFunction, eta=0.0, line: MellinLine | None = None):
    """Weighted Mellin operator op_M^gamma(f)(eta) applied to u.

    For r-independent f this multiplies M_gamma u pointwise on the line;
    an r-dependent amplitude is evaluated at the outer variable.
    """
    if line is None:
        line = MellinLine(gamma=gamma)
    elif line.gamma != gamma:
        line = MellinLine(gamma=gamma, rho_max=line.rho_max, P=line.P)
    if f is None:
        f = MellinSymbol(lambda r, z, mode, eta: np.ones(np.broadcast(r, z).shape))
    if isinstance(f, MellinSymbol) and f.poles:
        for p in f.poles:
            d = abs(np.real(p) - line.delta)
            if d < POLE_LINE_CLEARANCE:
                raise PoleOnLineError(p, d)
    U = mellin_at(u, line.z)  # (P, N_x)
    t = u.grid.t
    r = u.grid.r
    phase = np.exp(-1j * np.outer(t, line.rho)) * np.exp(-line.delta * t)[:, None]
    out = np.empty_like(u.values)
    for jm, mode in enumerate(u.base.modes):
        fv = _eval_symbol(f, r[:, None], line.z[None, :], mode, eta)
        integ = fv * (line.weights * U[:, jm])[None, :]
        out[:, jm] = (integ * phase).sum(axis=1) / (2 * np.pi)
    return u.with_values(out)


def _eval_symbol(f, r, z, mode, eta):
    if isinstance(f, (MellinSymbol, FourierSymbol)):
        v = f.eval(r, z, mode, eta)
    else:
        v = np.asarray(f(r, z, mode, eta), dtype=complex)
    return np.broadcast_to(v, np.broadcast(r, z).shape)


SUPPORT_TOL = 1e-14


def support_window(u: GridFunction, pad_nodes=64):
    """Node index range (k_lo, k_hi) of the numerical support of u, padded."""
    mags = np.abs(u.values).max(axis=1)
    peak = mags.max()
    if peak == 0.0:
        return 0, u.grid.K - 1
    supp = np.nonzero(mags > SUPPORT_TOL * peak)[0]
    k_lo = max(0, supp[0] - pad_nodes)
    k_hi = min(u.grid.K - 1, supp[-1] + pad_nodes)
    return int(k_lo), int(k_hi)


def op_fourier(
    p,
    u: GridFunction,
    eta=0.0,
    rho_band=128.0,
    n_rho=4097,
    pad_nodes=64,
    tail_tol=1e-8,
):
    """Fourier (Kohn-Nirenberg, left) quantization op_r(p)(eta) u on R+.

    The oscillatory double integral is evaluated through the compactly
    supported u: u is put on a uniform r-quadrature grid over its support,
    hat u is formed by trapezoid quadrature, and the rho integral is
    truncated at the declared band.  The output is returned on the log
    grid, windowed to a neighbourhood of supp u (left-quantized
    differential symbols are local; nonlocal symbols are out of scope).
    """
    grid, base = u.grid, u.base
    mags = np.abs(u.values).max(axis=1)
    peak = mags.max()
    if peak == 0.0:
        return u.with_values(np.zeros_like(u.values))
    boundary = max(mags[0], mags[-1]) / peak
    if boundary > BOUNDARY_DECAY_TOL:
        warnings.warn(
            f"input has relative boundary mass {boundary:.3e}; op_r assumes "
            "compact support inside the grid",
            BoundaryDecayWarning,
            stacklevel=2,
        )
    k_lo, k_hi = support_window(u, pad_nodes)
    r_lo, r_hi = grid.r[k_lo], grid.r[k_hi]

    dr = 0.9 * np.pi / rho_band
    n_r = max(64, int(np.ceil((r_hi - r_lo) / dr)) + 1)
    r_u = np.linspace(r_lo, r_hi, n_r)
    w_r = np.full(n_r, r_u[1] - r_u[0])
    w_r[0] *= 0.5
    w_r[-1] *= 0.5

    if u.closed_form is not None and base.kind == "point":
        u_fine = np.asarray(_call_closed(u.closed_form, r_u), dtype=complex)[:, None]
    else:
        u_fine = trig_interpolate(u.values, grid, np.log(r_u), axis=0)

    rho = np.linspace(-rho_band, rho_band, n_rho)
    w_rho = np.full(n_rho, rho[1] - rho[0])
    w_rho[0] *= 0.5
    w_rho[-1] *= 0.5
    # hat u (rho) = int e^{-i r' rho} u(r') dr'
    u_hat = np.exp(-1j * np.outer(rho, r_u)) @ (w_r[:, None] * u_fine)

    out_mask = (grid.r >= r_lo / 1.5) & (grid.r <= r_hi * 1.5)
    r_out = grid.r[out_mask]
    out = np.zeros_like(u.values)
    phase = np.exp(1j * np.outer(r_out, rho))
    tail = 0.0
    for jm, mode in enumerate(base.modes):
        pv = _eval_symbol(p, r_out[:, None], rho[None, :], mode, eta)
        integ = pv * (w_rho * u_hat[:, jm])[None, :]
        out[out_mask, jm] = (phase * integ).sum(axis=1) / (2 * np.pi)
        band_edge = max(
            np.abs(pv[:, 0] * u_hat[0, jm]).max(),
            np.abs(pv[:, -1] * u_hat[-1, jm]).max(),
        )
        tail = max(tail, band_edge * rho_band / (2 * np.pi))
    scale = np.abs(out).max()
    if scale > 0 and tail > tail_tol * scale:
        warnings.warn(
            f"estimated rho-band tail {tail:.3e} exceeds {tail_tol:.1e} of the "
            "output scale; increase rho_band",
            AccuracyWarning,
            stacklevel=2,
        )
    return u.with_values(out)


def _call_closed(f, r):
    try:
        return f(r, 0.0)
    except TypeError:
        return f(r)


def quantization_residual(
    A,
    gamma,
    u: GridFunction,
    eta=0.0,
    y=0.0,
    line: MellinLine | None = None,
    rho_band=128.0,
    n_rho=4097,
):
    """Relative sup defect of op_r(p) u against op_M^gamma(f) u for A.

    p and f are the canonical Fourier/Mellin amplitudes of the
    edge-degenerate differential operator A (without the r^{-mu} factor).
    For differential A the two sides agree analytically, so the residual is
    pure quadrature error.
    """
    f = A.mellin_symbol(y=y)
    p = A.fourier_symbol(y=y)
    a = op_fourier(p, u, eta=eta, rho_band=rho_band, n_rho=n_rho)
    b = op_mellin(f, gamma, u, eta=eta, line=line)
    # compare on the oscillatory-quadrature window; outside it op_r returns
    # zero by locality and the Mellin inversion only carries weighted noise
    k_lo, k_hi = support_window(u)
    sl = slice(k_lo, k_hi + 1)
    denom = float(np.abs(b.values[sl]).max())
    num = float(np.abs(a.values[sl] - b.values[sl]).max())
    if denom < 1e-300:
        return num
    return num / denom


# ---------------------------------------------------------------------------
# kernel cut-off


@dataclass
class KernelCutoff:
    """Holomorphic symbol h(z) produced by kernel cut-off from g on Gamma_delta.

    h is the Fourier-Laplace transform of the compactly supported psi*k,
    where k is the inverse Fourier transform of g in the line variable.
    h is entire by construction; ``morera_residual`` quantifies this via a
    loop integral, and ``difference`` measures the order -infinity defect
    g - h restricted to the line.
    """

    delta: float
    t: np.ndarray
    k: np.ndarray
    psi_k: np.ndarray
    t_weights: np.ndarray
    lam: np.ndarray
    g: np.ndarray

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        flat = np.atleast_1d(z).ravel()
        # h(z) = int e^{-t (z - delta)} psi(|t|) k(t) dt
        E = np.exp(np.outer(self.delta - flat, self.t))
        out = E @ (self.t_weights * self.psi_k)
        return out.reshape(z.shape) if z.shape else complex(out[0])

    def on_line(self, lam=None):
        lam = self.lam if lam is None else np.asarray(lam, dtype=float)
        return self(self.delta + 1j * lam)

    def difference(self, lam=None):
        """d(lambda) = g(lambda) - h(delta + i lambda) on the sample grid."""
        if lam is None:
            return self.g - self.on_line()
        raise DomainError("difference is defined on the sample grid")

    def decay_report(self, n_max=4, lam_cap=50.0):
        """sup_{|lambda| <= cap} |lambda|^N |g - h| for N = 0..n_max."""
        mask = np.abs(self.lam) <= lam_cap
        d = np.abs(self.difference()[mask])
        lam = np.abs(self.lam[mask])
        return {N: float(np.max(lam**N * d)) for N in range(n_max + 1)}

    def morera_residual(self, center=None, half_width=1.0, half_height=1.0, n_gauss=48):
        """|loop integral of h| over a rectangle; ~0 certifies holomorphy."""
        c = self.delta if center is None else center
        x, w = np.polynomial.legendre.leggauss(n_gauss)
        corners = [
            c - half_width - 1j * half_height,
            c + half_width - 1j * half_height,
            c + half_width + 1j * half_height,
            c - half_width + 1j * half_height,
        ]
        total = 0.0 + 0.0j
        for a, b in zip(corners, corners[1:] + corners[:1]):
            mid, half = (a + b) / 2.0, (b - a) / 2.0
            zs = mid + half * x
            total += half * np.sum(w * self(zs))
        return abs(total)


def kernel_cutoff(
    g,
    lam_max=200.0,
    n_lam=8001,
    delta=0.0,
    psi: CutoffFunction | None = None,
    n_t=1601,
    decay_guard=1e-2,
) -> KernelCutoff:
    """Kernel cut-off: symbol samples on Gamma_delta -> entire symbol h(z).

    ``g`` is a callable g(lambda) or an array of samples on the symmetric
    grid.  The inverse Fourier transform k(t) must be integrable, which is
    checked through the decay of |g| at the band edge.
    """
    psi = psi or CutoffFunction(1.0, 2.0)
    lam = np.linspace(-lam_max, lam_max, n_lam)
    gv = np.asarray(g(lam) if callable(g) else g, dtype=complex)
    if gv.shape != lam.shape:
        raise DomainError("g samples do not match the lambda grid")
    peak = np.abs(gv).max()
    if peak > 0:
        edge = max(abs(gv[0]), abs(gv[-1])) / peak
        if edge > decay_guard:
            raise NonIntegrableKernelError(
                f"|g| at the band edge is {edge:.3e} of its peak; the kernel "
                "k(t) is not reliably integrable on this band"
            )
    w_lam = np.full(n_lam, lam[1] - lam[0])
    w_lam[0] *= 0.5
    w_lam[-1] *= 0.5
    t = np.linspace(-psi.b, psi.b, n_t)
    # k(t) = (1/2 pi) int e^{i lambda t} g(lambda) d lambda
    k = np.exp(1j * np.outer(t, lam)) @ (w_lam * gv) / (2 * np.pi)
    psi_t = psi(np.abs(t))
    w_t = np.full(n_t, t[1] - t[0])
    w_t[0] *= 0.5
    w_t[-1] *= 0.5
    return KernelCutoff(
        delta=delta, t=t, k=k, psi_k=psi_t * k, t_weights=w_t, lam=lam, g=gv
    )


def write_line_samples_csv(U, line: MellinLine, base: BaseManifold, path):
    """Serialize line samples: CSV (rho, mode, re, im) with a JSON header."""
    import json

    U = np.asarray(U, dtype=complex)
    if U.ndim == 1:
        U = U[:, None]
    lines = ["# " + json.dumps(line.metadata(), sort_keys=True)]
    lines.append("rho,mode,re,im")
    for p in range(line.P):
        for j, m in enumerate(base.modes):
            v = U[p, j]
            lines.append(f"{line.rho[p]:.17e},{m},{v.real:.17e},{v.imag:.17e}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
