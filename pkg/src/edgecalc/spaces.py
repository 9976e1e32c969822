"""Computable norms for the weighted cone scales and the edge Sobolev norm.

All norms are quadrature realizations of squared-integral formulas on the
log grid, reported with a per-term breakdown.  The scale levels B^N and
A_P^N are Hilbert levels replacing projective limits; only finitely many
levels N <= N_MAX are meaningful here.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .conegrid import (
    BaseManifold,
    CutoffFunction,
    GridFunction,
    RadialGrid,
    apply_kappa,
    default_cutoff,
    sample,
)
from .errors import ConditionWarning, DomainError, AliasingWarning

__all__ = [
    "N_MAX",
    "WeightData",
    "NormReport",
    "k00_norm",
    "k00_pairing",
    "hsg_norm",
    "hcone_norm",
    "ksg_norm",
    "bn_norm",
    "apn_norm",
    "EdgeFunction",
    "edge_norm",
    "estimate_group_bound",
    "probe_basis",
    "spectral_radial_derivative",
]

N_MAX = 4
DIVERGENCE_FLAG_TOL = 1e-6


@dataclass(frozen=True)
class WeightData:
    """Weight data (gamma, Theta) with Theta = (theta, 0], theta < 0."""

    gamma: float = 0.0
    theta: float = -1.0

    def __post_init__(self):
        if not self.theta < 0:
            raise DomainError(f"need theta < 0, got {self.theta}")


@dataclass
class NormReport:
    """Norm value with squared per-term breakdown and diagnostic flags."""

    value: float
    breakdown: list
    flags: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        total = sum(v for _, v in self.breakdown)
        if total > 0 and abs(self.value**2 - total) > 1e-12 * total:
            raise DomainError("breakdown does not sum to the squared value")

    def to_json(self):
        return json.dumps(
            {
                "value": self.value,
                "breakdown": [{"term": k, "value2": v} for k, v in self.breakdown],
                "flags": sorted(self.flags),
            },
            sort_keys=True,
        )


def _angular_factor(base: BaseManifold):
    return base.angular_l2_factor()


def _t_integral(grid: RadialGrid, weight_exp, dens):
    """int e^{weight_exp * t} dens(t) dt by trapezoid; dens >= 0 samples."""
    w = grid.trapezoid_weights
    f = np.exp(weight_exp * grid.t) * dens
    return float(np.sum(w * f)), f


def _boundary_flags(f, side_label=""):
    flags = []
    peak = f.max() if f.size else 0.0
    if peak > 0:
        if f[0] / peak > DIVERGENCE_FLAG_TOL:
            flags.append("divergent_left" + side_label)
        if f[-1] / peak > DIVERGENCE_FLAG_TOL:
            flags.append("divergent_right" + side_label)
    return flags


def spectral_radial_derivative(values, grid: RadialGrid, order=1):
    """(r d/dr)^order via the spectral t-derivative of the trig interpolant.

    Admissible inputs decay at both window ends; non-decaying inputs show
    boundary ringing which the norm routines surface through flags.
    """
    K = grid.K
    P = 3 * K
    buf = np.zeros((P,) + values.shape[1:], dtype=complex)
    buf[K : 2 * K] = values
    omega = 2j * np.pi * np.fft.fftfreq(P, d=grid.dt)
    mult = omega**order
    shape = (P,) + (1,) * (values.ndim - 1)
    out = np.fft.ifft(np.fft.fft(buf, axis=0) * mult.reshape(shape), axis=0)
    return out[K : 2 * K]


def k00_norm(u: GridFunction):
    """K^{0,0} = r^{-n/2} L^2 norm: (int |u|^2 r^n dr dx)^(1/2)."""
    n = u.base.n
    dens = (np.abs(u.values) ** 2).sum(axis=1) * _angular_factor(u.base)
    val2, _ = _t_integral(u.grid, n + 1, dens)
    return np.sqrt(val2)


def k00_pairing(u: GridFunction, w: GridFunction):
    """Sesquilinear K^{0,0} pairing <u, w> = int u conj(w) r^n dr dx."""
    n = u.base.n
    dens = (u.values * np.conj(w.values)).sum(axis=1) * _angular_factor(u.base)
    wq = u.grid.trapezoid_weights
    return complex(np.sum(wq * np.exp((n + 1) * u.grid.t) * dens))


def _derivative_table(u: GridFunction, s):
    """(r d_r)^k D_x^alpha u for k + alpha <= s, alpha acting as (i m)^alpha."""
    table = {}
    modes = u.base.modes
    radial = {0: u.values}
    for k in range(1, s + 1):
        radial[k] = spectral_radial_derivative(u.values, u.grid, order=k)
    alphas = range(s + 1) if u.base.kind == "circle" else (0,)
    for k in range(s + 1):
        for a in alphas:
            if k + a > s:
                continue
            fac = (1j * modes) ** a
            table[(k, a)] = radial[k] * fac[None, :]
    return table


def hsg_norm(u: GridFunction, s: int, gamma: float) -> NormReport:
    """Norm of the weighted space H^{s,gamma}: all (r d_r)^k D_x^alpha u in
    r^{gamma - n/2} L^2(dr dx), integer s >= 0."""
    _check_integer_s(s)
    n = u.base.n
    breakdown = []
    flags = set()
    for (k, a), v in sorted(_derivative_table(u, s).items()):
        dens = (np.abs(v) ** 2).sum(axis=1) * _angular_factor(u.base)
        # |r^{-gamma + n/2} v|^2 dr dx = e^{(-2 gamma + n + 1) t} |v|^2 dt dx
        val2, f = _t_integral(u.grid, -2 * gamma + n + 1, dens)
        breakdown.append((f"k={k},alpha={a}", val2))
        flags.update(_boundary_flags(f))
    value = np.sqrt(sum(v for _, v in breakdown))
    return NormReport(value, breakdown, sorted(flags), meta={"s": s, "gamma": gamma})


def _check_integer_s(s):
    if not isinstance(s, (int, np.integer)) or s < 0:
        raise DomainError(
            "only integer smoothness s >= 0 is supported (non-integer s is a "
            "documented restriction)"
        )


def hcone_norm(g: GridFunction, s: int) -> NormReport:
    """Surrogate cone-Sobolev norm at infinity.

    Equivalent to the chart-based pullback definition for the two admitted
    bases: sum over k + alpha <= s of the L^2(r > 1, r^n dr dx) norms of
    d_r^k (<r>^{-1} d_x)^alpha g.
    """
    _check_integer_s(s)
    n = g.base.n
    grid = g.grid
    mask = grid.r >= 1.0
    modes = g.base.modes
    breakdown = []
    flags = set()
    inv_bracket_r = 1.0 / np.sqrt(1.0 + grid.r**2)
    radial = {0: g.values}
    for k in range(1, s + 1):
        # d_r = e^{-t} d_t applied k times
        v = radial[k - 1]
        v = spectral_radial_derivative(v, grid, order=1) * np.exp(-grid.t)[:, None]
        radial[k] = v
    alphas = range(s + 1) if g.base.kind == "circle" else (0,)
    for k in range(s + 1):
        for a in alphas:
            if k + a > s:
                continue
            v = radial[k] * ((1j * modes) ** a)[None, :]
            v = v * (inv_bracket_r**a)[:, None]
            dens = (np.abs(v) ** 2).sum(axis=1) * _angular_factor(g.base)
            w = grid.trapezoid_weights
            f = np.exp((n + 1) * grid.t) * dens
            val2 = float(np.sum((w * f)[mask]))
            breakdown.append((f"k={k},alpha={a}", val2))
            if f.size and f.max() > 0 and f[-1] / f.max() > DIVERGENCE_FLAG_TOL:
                flags.add("divergent_right")
    value = np.sqrt(sum(v for _, v in breakdown))
    return NormReport(value, breakdown, sorted(flags), meta={"s": s})


def _square_partition(omega: CutoffFunction, r):
    """Smooth pair (phi_in, phi_out) with phi_in^2 + phi_out^2 == 1.

    Built from omega so that phi_in is again a cut-off function (1 near 0,
    0 beyond omega.b); the squared partition makes the s = 0, gamma = 0
    norm reproduce the K^{0,0} = r^{-n/2} L^2 identity exactly.
    """
    w = omega(r)
    denom = np.sqrt(w**2 + (1.0 - w) ** 2)
    phi_in = w / denom
    phi_out = (1.0 - w) / denom
    return phi_in, phi_out


def ksg_norm(u: GridFunction, s: int, gamma: float, omega: CutoffFunction | None = None) -> NormReport:
    """K^{s,gamma} norm: near-tip H^{s,gamma} piece glued to H^s_cone.

    The splitting uses the square partition derived from omega, one
    admissible choice of the (non-canonical) Hilbert structure.
    """
    omega = omega or default_cutoff()
    phi_in, phi_out = _square_partition(omega, u.grid.r)
    u_in = u.with_values(u.values * phi_in[:, None])
    u_out = u.with_values(u.values * phi_out[:, None])
    rep_in = hsg_norm(u_in, s, gamma)
    rep_out = hcone_norm(u_out, s)
    breakdown = [("tip:" + k, v) for k, v in rep_in.breakdown]
    breakdown += [("cone:" + k, v) for k, v in rep_out.breakdown]
    value = np.sqrt(rep_in.value**2 + rep_out.value**2)
    flags = sorted(set(rep_in.flags) | set(rep_out.flags))
    return NormReport(value, breakdown, flags, meta={"s": s, "gamma": gamma})


def bn_norm(u: GridFunction, N: int, omega: CutoffFunction | None = None) -> NormReport:
    """Hilbert level B^N = <r>^{-N} K^{N,0}: norm of <r>^N u in K^{N,0}."""
    _check_integer_s(N)
    bracket_r = np.sqrt(1.0 + u.grid.r**2)
    scaled = u.with_values(u.values * (bracket_r**N)[:, None])
    rep = ksg_norm(scaled, N, 0.0, omega=omega)
    rep.meta = {"N": N}
    return rep


def _w_weight(omega: CutoffFunction, r):
    """w(r) = 1 + (r - 1) omega(r): ~ r near the tip, == 1 at infinity."""
    return 1.0 + (r - 1.0) * omega(r)


def apn_norm(
    u: GridFunction,
    N: int,
    ptype,
    omega: CutoffFunction | None = None,
    degenerate_tol=1e-3,
) -> NormReport:
    """Hilbert level A_P^N: w^{theta'}-scaled flat part in B^N plus the
    singular coefficients, theta' = -theta - 1/(N+1).

    The singular part is projected out with the known exponents of the
    asymptotic type (module asymptotics); near-degenerate exponents are
    flagged through the projection condition number.
    """
    from .asymptotics import eval_singular_from_coeffs, project_singular

    _check_integer_s(N)
    omega = omega or default_cutoff()
    theta = ptype.weight.theta
    if not np.isfinite(theta):
        raise DomainError("A_P^N needs a finite weight interval")
    proj = project_singular(u, ptype, omega)
    if proj.condition > 1.0 / degenerate_tol:
        warnings.warn(
            f"singular projection condition number {proj.condition:.3e} "
            "(near-degenerate exponents)",
            ConditionWarning,
            stacklevel=2,
        )
    u_sing = eval_singular_from_coeffs(ptype, proj.coefficients, omega, u.grid, u.base)
    u_flat = u - u_sing
    theta_p = -theta - 1.0 / (N + 1)
    wpow = _w_weight(omega, u.grid.r) ** (-theta_p)
    flat_scaled = u_flat.with_values(u_flat.values * wpow[:, None])
    rep_flat = bn_norm(flat_scaled, N, omega=omega)
    coeff2 = float(sum(np.sum(np.abs(c) ** 2) for c in proj.coefficients))
    breakdown = [("flat:" + k, v) for k, v in rep_flat.breakdown]
    breakdown.append(("singular_coefficients", coeff2))
    value = np.sqrt(rep_flat.value**2 + coeff2)
    flags = list(rep_flat.flags)
    if proj.condition > 1.0 / degenerate_tol:
        flags.append("ill_conditioned_projection")
    return NormReport(
        value, breakdown, sorted(set(flags)), meta={"N": N, "theta_prime": theta_p}
    )


# ---------------------------------------------------------------------------
# edge Sobolev norm


@dataclass
class EdgeFunction:
    """Samples u(y_j, r_k, mode) on a uniform y-grid times a cone grid."""

    y: np.ndarray
    grid: RadialGrid
    base: BaseManifold
    values: np.ndarray  # (len(y), K, N_x)

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float)
        self.values = np.asarray(self.values, dtype=complex)
        expect = (self.y.size, self.grid.K, self.base.N_x)
        if self.values.shape != expect:
            raise DomainError(f"values shape {self.values.shape} != {expect}")
        dy = np.diff(self.y)
        if self.y.size < 4 or not np.allclose(dy, dy[0], rtol=1e-12):
            raise DomainError("need a uniform y-grid with >= 4 nodes")

    @property
    def dy(self):
        return float(self.y[1] - self.y[0])

    def slice_y(self, j) -> GridFunction:
        return GridFunction(self.grid, self.base, self.values[j])

    @staticmethod
    def sample(fn, y, grid, base):
        y = np.asarray(y, dtype=float)
        vals = np.empty((y.size, grid.K, base.N_x), dtype=complex)
        for j, yj in enumerate(y):
            vals[j] = sample(lambda r, x, _y=yj: fn(_y, r, x), grid, base).values
        return EdgeFunction(y, grid, base, vals)


def edge_norm(u: EdgeFunction, s: int, gamma: float, omega=None) -> NormReport:
    """Weighted edge Sobolev norm at level E = K^{0,gamma} (q = 1).

    Unitary Fourier transform in y, the inverse dilation kappa_{<eta>}^{-1}
    per frequency, then the <eta>^{2s}-weighted K^{0,gamma} integral.  At
    s = 0, gamma = 0 this reproduces the flat L^2 norm.
    """
    _check_integer_s(s)
    M = u.y.size
    peak = np.abs(u.values).max()
    if peak > 0:
        edge = max(np.abs(u.values[0]).max(), np.abs(u.values[-1]).max()) / peak
        if edge > 1e-8:
            warnings.warn(
                f"y-boundary magnitude {edge:.3e}; edge norm assumes Schwartz "
                "decay in y",
                AliasingWarning,
                stacklevel=2,
            )
    eta = 2.0 * np.pi * np.fft.fftfreq(M, d=u.dy)
    # unitary continuous normalization: hat u = (dy / sqrt(2 pi)) * FFT
    u_hat = np.fft.fft(u.values, axis=0) * (u.dy / np.sqrt(2.0 * np.pi))
    d_eta = 2.0 * np.pi / (M * u.dy)
    total = 0.0
    per_eta = []
    for jm in range(M):
        slab = GridFunction(u.grid, u.base, u_hat[jm])
        br = np.sqrt(1.0 + eta[jm] ** 2)
        twisted = apply_kappa(slab, 1.0 / br)
        nrm = ksg_norm(twisted, 0, gamma, omega=omega).value
        contrib = (br ** (2 * s)) * nrm**2 * d_eta
        per_eta.append((f"eta={eta[jm]:.6g}", contrib))
        total += contrib
    value = np.sqrt(total)
    return NormReport(value, per_eta, [], meta={"s": s, "gamma": gamma})


# ---------------------------------------------------------------------------
# group-action bound


def probe_basis(grid: RadialGrid, base: BaseManifold, n_probes=20, seed=0):
    """Seeded band-limited bump probes supported well inside the grid."""
    rng = np.random.default_rng(seed)
    span = grid.t_max - grid.t_min
    lo = grid.t_min + 0.3 * span
    hi = grid.t_max - 0.3 * span
    probes = []
    for _ in range(n_probes):
        c = rng.uniform(lo, hi)
        sig = rng.uniform(0.3, 0.8)
        amp = rng.uniform(0.5, 2.0)
        if base.kind == "circle":
            m = int(rng.integers(-base.N_x // 2 + 1, base.N_x // 2))
            fn = lambda r, x, c=c, s=sig, a=amp, m=m: a * np.exp(
                -((np.log(r) - c) ** 2) / (2 * s**2)
            ) * np.exp(1j * m * x)
        else:
            fn = lambda r, x=0.0, c=c, s=sig, a=amp: a * np.exp(
                -((np.log(r) - c) ** 2) / (2 * s**2)
            )
        probes.append(sample(fn, grid, base))
    return probes


def estimate_group_bound(norm_fn, probes, lambdas):
    """Fit ||kappa_lambda|| <= c * max(lambda, 1/lambda)^M over a probe basis.

    Returns (c, M, fit_residual); c is inflated after the least-squares fit
    so the bound holds on every probe/lambda pair sampled.
    """
    lambdas = np.asarray(lambdas, dtype=float)
    if lambdas.size < 4 or np.allclose(lambdas, lambdas[0]):
        raise DomainError("need at least 4 distinct lambda samples")
    base_norms = np.array([norm_fn(p) for p in probes])
    if np.any(base_norms == 0):
        raise DomainError("probe with zero norm")
    ratios = np.empty(lambdas.size)
    for i, lam in enumerate(lambdas):
        vals = [norm_fn(apply_kappa(p, lam)) for p in probes]
        ratios[i] = max(v / b for v, b in zip(vals, base_norms))
    x = np.abs(np.log(lambdas))
    ylog = np.log(ratios)
    A = np.stack([x, np.ones_like(x)], axis=1)
    coef, *_ = np.linalg.lstsq(A, ylog, rcond=None)
    M, logc = float(coef[0]), float(coef[1])
    resid = float(np.max(np.abs(A @ coef - ylog)))
    c = float(np.exp(logc))
    growth = np.maximum(lambdas, 1.0 / lambdas) ** M
    c = max(c, float(np.max(ratios / growth)))
    return c, M, resid
