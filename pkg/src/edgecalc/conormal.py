"""Edge-degenerate operators, conormal symbols and their meromorphic inverses.

An edge-degenerate operator acts as

    A = r^{-mu} sum_{j+|alpha| <= mu} a_{j alpha}(r, y) (rho_x part) (-r d_r)^j (r eta)^alpha

with angular parts diagonal in Fourier modes.  Term ordering follows the
left-symbol convention: the factor (r eta)^alpha multiplies the result of
(-r d_r)^j, so that the Mellin amplitude of a term is literally
a_{j alpha}(r) z^j (r eta)^alpha and the quantization identity
op_r(p) = op_M^gamma(f) holds exactly for every weight.  On the Fourier
side the exact amplitude requires rewriting (-r d_r)^j in the basis
r^k (-d_r)^k, which brings in Stirling numbers of the second kind:
(-r d_r)^j = sum_k S(j,k) (-1)^{j-k} r^k (-d_r)^k.

The subordinate conormal symbol is the per-mode polynomial
sum_j a_{j0}(0, y) z^j; its roots (the non-bijectivity points of the
Fredholm family) generate the asymptotics of solutions on the model cone.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .asymptotics import extract_type
from .conegrid import (
    BaseManifold,
    BracketFunction,
    CutoffFunction,
    GridFunction,
    RadialGrid,
    default_bracket,
    default_cutoff,
)
from .errors import (
    DomainError,
    PoleOnLineError,
    WeightConditionError,
)
from .mellin import MellinLine, MellinSymbol, FourierSymbol, mellin_at, mellin_inverse, op_mellin, stirling2
from .spaces import spectral_radial_derivative

__all__ = [
    "OperatorTerm",
    "EdgeDegenerateOperator",
    "euler_operator",
    "cone_laplacian",
    "apply_operator",
    "edge_symbol",
    "edge_homogeneity_defect",
    "ConormalFamily",
    "conormal_symbol",
    "InverseConormal",
    "MeromorphicMellinSymbol",
    "invert_conormal",
    "SolveResult",
    "solve_model_cone",
    "DifferenceResult",
    "smoothing_mellin_difference",
    "mellin_edge_symbol",
    "mellin_edge_weight_change",
]

LINE_CLEARANCE = 1e-6
ROOT_CLUSTER_TOL = 1e-8


def _polyval(coeffs, x):
    """Evaluate sum_i coeffs[i] x^i (coefficients low -> high)."""
    out = np.zeros_like(np.asarray(x, dtype=complex))
    for c in np.asarray(coeffs, dtype=complex)[::-1]:
        out = out * x + c
    return out


@dataclass(frozen=True)
class OperatorTerm:
    """One term a(r, y) * [angular polynomial in (i m)] (-r d_r)^j (r eta)^alpha."""

    j: int
    alpha: int = 0
    r_poly: tuple = (1.0,)
    mode_poly: tuple = (1.0,)
    y_poly: tuple = (1.0,)

    def coefficient(self, r, y, mode, R):
        r_eff = np.minimum(np.asarray(r, dtype=float), R)
        c = _polyval(self.r_poly, r_eff)
        c = c * _polyval(self.y_poly, float(y))
        c = c * _polyval(self.mode_poly, 1j * mode)
        return c


@dataclass(frozen=True)
class EdgeDegenerateOperator:
    """Order mu and coefficient table of an edge-degenerate operator.

    Coefficients are polynomials in r, frozen to their value at r = R for
    r > R, and polynomials in (i m) on the angular side.
    """

    mu: int
    terms: tuple
    R: float = 4.0
    q: int = 1

    def __post_init__(self):
        terms = tuple(
            t if isinstance(t, OperatorTerm) else OperatorTerm(**t) for t in self.terms
        )
        object.__setattr__(self, "terms", terms)
        for t in terms:
            if t.j + abs(t.alpha) > self.mu:
                raise DomainError(
                    f"term (j={t.j}, alpha={t.alpha}) exceeds order mu={self.mu}"
                )

    def frozen_at_tip(self):
        """Coefficients frozen at r = 0 (for the principal edge symbol)."""
        new_terms = tuple(
            OperatorTerm(
                t.j,
                t.alpha,
                (complex(t.r_poly[0]),) if t.r_poly else (0.0,),
                t.mode_poly,
                t.y_poly,
            )
            for t in self.terms
        )
        return EdgeDegenerateOperator(self.mu, new_terms, self.R, self.q)

    def is_r_constant(self):
        return all(len(t.r_poly) <= 1 for t in self.terms)

    def mellin_symbol(self, y=0.0):
        """Canonical Mellin amplitude f(r, z, eta) = sum a z^j (r eta)^alpha."""

        def fn(r, z, mode, eta, _self=self, _y=y):
            out = np.zeros(np.broadcast(r, z).shape, dtype=complex)
            for t in _self.terms:
                c = t.coefficient(r, _y, mode, _self.R)
                out = out + c * z**t.j * (np.asarray(r) * eta) ** t.alpha
            return out

        return MellinSymbol(fn, label="edge-op")

    def fourier_symbol(self, y=0.0):
        """Exact left Fourier amplitude via the Stirling reordering."""

        def fn(r, rho, mode, eta, _self=self, _y=y):
            out = np.zeros(np.broadcast(r, rho).shape, dtype=complex)
            irrho = -1j * np.asarray(r) * np.asarray(rho)
            for t in _self.terms:
                c = t.coefficient(r, _y, mode, _self.R)
                radial = np.zeros(np.broadcast(r, rho).shape, dtype=complex)
                for k in range(0, t.j + 1):
                    s = stirling2(t.j, k) * (-1.0) ** (t.j - k)
                    if s:
                        radial = radial + s * irrho**k
                out = out + c * radial * (np.asarray(r) * eta) ** t.alpha
            return out

        return FourierSymbol(fn, order=self.mu, edge_degenerate=True, label="edge-op")

    def to_json_dict(self):
        return {
            "mu": self.mu,
            "R": self.R,
            "terms": [
                {
                    "j": t.j,
                    "alpha": t.alpha,
                    "r_poly": [float(np.real(c)) for c in t.r_poly],
                    "mode_poly": [float(np.real(c)) for c in t.mode_poly],
                    "y_poly": [float(np.real(c)) for c in t.y_poly],
                }
                for t in self.terms
            ],
        }

    @staticmethod
    def from_json_dict(d):
        terms = tuple(
            OperatorTerm(
                int(t["j"]),
                int(t.get("alpha", 0)),
                tuple(t.get("r_poly", [1.0])),
                tuple(t.get("mode_poly", [1.0])),
                tuple(t.get("y_poly", [1.0])),
            )
            for t in d["terms"]
        )
        return EdgeDegenerateOperator(int(d["mu"]), terms, float(d.get("R", 4.0)))


def euler_operator(nu=1.0 / 3.0):
    """r^{-2} [(-r d_r)^2 - nu^2] on the point base."""
    return EdgeDegenerateOperator(
        mu=2,
        terms=(
            OperatorTerm(j=2),
            OperatorTerm(j=0, r_poly=(-(nu**2),)),
        ),
    )


def cone_laplacian():
    """r^{-2} [(-r d_r)^2 + d_x^2] on the circle; mode m sees z^2 - m^2."""
    return EdgeDegenerateOperator(
        mu=2,
        terms=(
            OperatorTerm(j=2),
            OperatorTerm(j=0, mode_poly=(0.0, 0.0, 1.0)),
        ),
    )


_FD8 = np.array(
    [1.0 / 280, -4.0 / 105, 1.0 / 5, -4.0 / 5, 0.0, 4.0 / 5, -1.0 / 5, 4.0 / 105, -1.0 / 280]
)


def _fd8_dt(values, dt):
    out = np.zeros_like(values)
    K = values.shape[0]
    # straightforward stencil application on the interior
    for i, c in enumerate(_FD8):
        off = i - 4
        if c == 0.0:
            continue
        out[4 : K - 4] += c * values[4 + off : K - 4 + off]
    out /= dt
    # low-order one-sided fill at the window edges (interior checks only)
    grad = np.gradient(values, dt, axis=0)
    out[:4] = grad[:4]
    out[K - 4 :] = grad[K - 4 :]
    return out


def _radial_derivatives(u: GridFunction, j_max, method):
    """Cache of (-r d_r)^j u = (-d_t)^j u for j = 0..j_max."""
    ders = {0: u.values}
    if method == "spectral":
        for j in range(1, j_max + 1):
            ders[j] = (-1.0) ** j * spectral_radial_derivative(u.values, u.grid, order=j)
    elif method == "fd8":
        cur = u.values
        for j in range(1, j_max + 1):
            cur = -_fd8_dt(cur, u.grid.dt)
            ders[j] = cur
    else:
        raise DomainError(f"unknown derivative method {method!r}")
    return ders


def apply_operator(
    A: EdgeDegenerateOperator,
    u: GridFunction,
    y=0.0,
    eta=0.0,
    method="spectral",
) -> GridFunction:
    """Apply the operator-valued amplitude a(y, eta) to a cone function.

    Radial derivatives are spectral in t (or 8th-order finite differences
    with method="fd8" for inputs that do not decay at the window ends);
    the angular part acts diagonally on modes.
    """
    grid, base = u.grid, u.base
    j_max = max((t.j for t in A.terms), default=0)
    ders = _radial_derivatives(u, j_max, method)
    r = grid.r
    out = np.zeros_like(u.values)
    for t in A.terms:
        coeff = np.asarray(
            [t.coefficient(r, y, m, A.R) for m in base.modes], dtype=complex
        ).T  # (K, N_x)
        radial_factor = (r * eta) ** t.alpha
        out += coeff * radial_factor[:, None] * ders[t.j]
    out *= (r ** (-A.mu))[:, None]
    return u.with_values(out)


def edge_symbol(A: EdgeDegenerateOperator, y=0.0, eta=1.0):
    """Principal edge symbol: the applier with coefficients frozen at r = 0."""
    eta_arr = np.atleast_1d(eta)
    if np.allclose(eta_arr, 0.0):
        raise DomainError("edge symbol lives on T^*Y minus the zero section")
    frozen = A.frozen_at_tip()

    def applier(u, _eta=float(eta), method="spectral"):
        return apply_operator(frozen, u, y=y, eta=_eta, method=method)

    applier.operator = frozen
    applier.eta = float(eta)
    return applier


def edge_homogeneity_defect(A, y, eta, lam, probes, method="spectral"):
    """Relative defect of sigma_wedge(y, lam*eta) against
    lam^mu kappa_lam sigma_wedge(y, eta) kappa_lam^{-1} over probes."""
    from .conegrid import apply_kappa

    frozen = A.frozen_at_tip()
    worst = 0.0
    for u in probes:
        lhs = apply_operator(frozen, u, y=y, eta=lam * eta, method=method)
        inner = apply_operator(frozen, apply_kappa(u, 1.0 / lam), y=y, eta=eta, method=method)
        rhs = (lam**A.mu) * apply_kappa(inner, lam)
        scale = max(lhs.sup_norm(), 1e-300)
        worst = max(worst, (lhs - rhs).sup_norm() / scale)
    return worst


# ---------------------------------------------------------------------------
# conormal family and its inverse


@dataclass
class ConormalFamily:
    """Per-mode polynomial z -> sum_j a_{j0}(0, y) z^j (coefficients low -> high)."""

    coeffs: dict  # mode -> np.ndarray
    y: float = 0.0

    def modes(self):
        return sorted(self.coeffs)

    def eval(self, z, mode):
        return _polyval(self.coeffs[mode], z)

    def derivative(self, z, mode):
        c = self.coeffs[mode]
        dc = c[1:] * np.arange(1, len(c))
        return _polyval(dc, z)

    def degree(self, mode):
        c = np.asarray(self.coeffs[mode])
        nz = np.nonzero(np.abs(c) > 1e-14 * max(1.0, np.abs(c).max()))[0]
        return int(nz[-1]) if nz.size else -1


def conormal_symbol(A: EdgeDegenerateOperator, y=0.0, modes=(0,)) -> ConormalFamily:
    """Subordinate conormal symbol: freeze r = 0, keep alpha = 0 terms."""
    coeffs = {}
    for m in modes:
        c = np.zeros(A.mu + 1, dtype=complex)
        for t in A.terms:
            if t.alpha != 0:
                continue
            a0 = _polyval(t.r_poly, 0.0) * _polyval(t.y_poly, float(y))
            c[t.j] += a0 * _polyval(t.mode_poly, 1j * m)
        coeffs[int(m)] = c
    return ConormalFamily(coeffs, y=y)


@dataclass
class MeromorphicMellinSymbol:
    """Entire part plus pole/Laurent data per angular mode.

    ``poles`` maps mode -> tuple of (p, order, laurent) with laurent the
    principal coefficients (a_-1, ..., a_-order).  ``fn(z, mode)`` must
    evaluate the full symbol; for the smoothing class the entire part is
    absent and the symbol is the sum of its principal parts.
    """

    fn: object
    poles: dict = field(default_factory=dict)
    box: tuple | None = None
    decay_order: int = 1

    def eval(self, z, mode=0):
        return np.asarray(self.fn(z, mode), dtype=complex)

    def all_poles(self):
        out = []
        for mode, plist in self.poles.items():
            out.extend((p, order, laurent, mode) for p, order, laurent in plist)
        return out

    def as_op_symbol(self):
        """Adapter usable by op_mellin (r-independent, eta-independent)."""
        pole_locs = tuple(p for p, *_ in self.all_poles())

        def fn(r, z, mode, eta, _s=self):
            return np.broadcast_to(_s.eval(z, mode), np.broadcast(r, z).shape)

        return MellinSymbol(fn, poles=pole_locs, label="meromorphic")

    @staticmethod
    def from_pole_data(poles_by_mode, entire=None):
        def fn(z, mode, _p=poles_by_mode, _e=entire):
            z = np.asarray(z, dtype=complex)
            out = np.zeros(z.shape, dtype=complex)
            for p, order, laurent in _p.get(int(mode), ()):
                for ell, a in enumerate(laurent, start=1):
                    out = out + a / (z - p) ** ell
            if _e is not None:
                out = out + _e(z)
            return out

        return MeromorphicMellinSymbol(fn, poles=dict(poles_by_mode))


@dataclass
class InverseConormal:
    """Meromorphic inverse of a conormal family with its non-bijectivity set."""

    family: ConormalFamily
    roots: dict  # mode -> tuple of (root, multiplicity)
    symbol: MeromorphicMellinSymbol
    nonbijectivity: tuple

    def root_values(self):
        return {
            m: [abs(self.family.eval(p, m)) for p, _ in rl]
            for m, rl in self.roots.items()
        }


def invert_conormal(F: ConormalFamily, modes=None, box=None) -> InverseConormal:
    """Per-mode companion-matrix roots and the meromorphic inverse family.

    Roots are polished by Newton iteration and clustered at 1e-8 into
    multiplicities; the inverse is represented by 1/F with its pole list
    and on-demand Laurent data.
    """
    modes = list(F.modes()) if modes is None else [int(m) for m in modes]
    roots = {}
    poles_by_mode = {}
    nonbij = []
    for m in modes:
        c = np.asarray(F.coeffs[m], dtype=complex)
        deg = F.degree(m)
        if deg < 0:
            raise DomainError(f"identically-zero conormal polynomial at mode {m}")
        if deg == 0:
            roots[m] = ()
            poles_by_mode[m] = ()
            continue
        raw = np.roots(c[: deg + 1][::-1])
        polished = []
        for z0 in raw:
            z = z0
            for _ in range(3):
                dF = F.derivative(z, m)
                if abs(dF) < 1e-14:
                    break
                step = F.eval(z, m) / dF
                if not np.isfinite(step):
                    break
                z = z - step
            # Newton stalls on multiple roots; keep the better of the two
            polished.append(z if abs(F.eval(z, m)) <= abs(F.eval(z0, m)) else z0)
        clustered = _cluster_roots(polished, ROOT_CLUSTER_TOL)
        roots[m] = tuple(clustered)
        plist = []
        for p, mult in clustered:
            laurent = _inverse_laurent(c[: deg + 1], p, mult)
            plist.append((p, mult, tuple(laurent)))
            nonbij.append(p)
        poles_by_mode[m] = tuple(plist)

    def inv_fn(z, mode, _F=F):
        return 1.0 / _polyval(_F.coeffs[int(mode)], np.asarray(z, dtype=complex))

    sym = MeromorphicMellinSymbol(inv_fn, poles=poles_by_mode, box=box)
    nonbij_sorted = _dedupe_points(nonbij, ROOT_CLUSTER_TOL)
    return InverseConormal(F, roots, sym, tuple(nonbij_sorted))


def _cluster_roots(points, tol):
    pts = sorted(points, key=lambda z: (round(z.real, 12), round(z.imag, 12)))
    clusters = []
    for z in pts:
        for cl in clusters:
            if abs(z - cl[0] / cl[1]) < max(tol, tol * abs(z)):
                cl[0] += z
                cl[1] += 1
                break
        else:
            clusters.append([z, 1])
    return [(c / n, n) for c, n in clusters]


def _dedupe_points(points, tol):
    out = []
    for z in sorted(points, key=lambda z: (z.real, z.imag)):
        if not out or abs(z - out[-1]) > tol:
            out.append(z)
    return out


def _inverse_laurent(coeffs, p, mult, n_terms=None):
    """Principal Laurent coefficients (a_-1, ..., a_-mult) of 1/F at root p."""
    n_terms = mult if n_terms is None else n_terms
    c = np.asarray(coeffs, dtype=complex)
    deg = len(c) - 1
    # Taylor coefficients of F at p: F(p + s) = sum_i f_i s^i
    f = np.zeros(deg + 1, dtype=complex)
    work = c.copy()
    # repeated synthetic division by (z - p)
    for i in range(deg + 1):
        val = work[-1]
        for k in range(len(work) - 2, -1, -1):
            val = val * p + work[k]
        f[i] = val
        # divide work by (z - p)
        new = np.zeros(max(len(work) - 1, 1), dtype=complex)
        carry = 0.0
        for k in range(len(work) - 1, 0, -1):
            carry = work[k] + carry * p
            new[k - 1] = carry
        work = new
        if len(work) == 1 and i >= deg:
            break
    # F = s^mult (f_mult + f_{mult+1} s + ...); invert the bracket series
    g = f[mult : mult + n_terms].copy()
    if abs(g[0]) == 0:
        raise DomainError("inconsistent multiplicity in Laurent expansion")
    inv = np.zeros(n_terms, dtype=complex)
    inv[0] = 1.0 / g[0]
    for i in range(1, n_terms):
        acc = 0.0
        for k in range(1, min(i, len(g) - 1) + 1):
            acc += g[k] * inv[i - k]
        inv[i] = -acc / g[0]
    # 1/F = s^{-mult} sum inv_i s^i: a_{-ell} = inv[mult - ell]
    return [inv[mult - ell] for ell in range(1, mult + 1)]


# ---------------------------------------------------------------------------
# model-cone solve


@dataclass
class SolveResult:
    u: GridFunction
    residual: float
    extraction: object
    inverse: InverseConormal
    line: MellinLine


def solve_model_cone(
    A: EdgeDegenerateOperator,
    f: GridFunction,
    gamma: float,
    theta: float = -1.0,
    line: MellinLine | None = None,
    omega: CutoffFunction | None = None,
    extract: bool = True,
    im_halfwidth: float = 1.0,
) -> SolveResult:
    """Solve A u = f on the model cone by per-mode Mellin inversion.

    Requires r-constant coefficients and no (r D_y) terms; the weight line
    Gamma_{(n+1)/2 - gamma} must be free of non-bijectivity points.  The
    asymptotic type of u is extracted over the strip between the weight
    lines of gamma and gamma - |theta|.
    """
    if not A.is_r_constant():
        raise DomainError("solve_model_cone needs r-constant coefficients")
    if any(t.alpha != 0 for t in A.terms):
        raise DomainError("solve_model_cone does not accept (r D_y) terms")
    grid, base = f.grid, f.base
    n = base.n
    modes = [int(m) for m in base.modes]
    family = conormal_symbol(A, modes=modes)
    inverse = invert_conormal(family, modes=modes)
    delta = (n + 1) / 2.0 - gamma
    if line is None:
        line = MellinLine(gamma=gamma - n / 2.0)
    elif abs(line.delta - delta) > 1e-12:
        raise DomainError("supplied line does not match the weight")
    for p in inverse.nonbijectivity:
        d = abs(np.real(p) - delta)
        if d < LINE_CLEARANCE:
            raise PoleOnLineError(p, d)
    g = f.scale_radial(lambda r: r**A.mu)
    G = mellin_at(g, line.z)
    U = np.empty_like(G)
    for jm, m in enumerate(base.modes):
        U[:, jm] = G[:, jm] / family.eval(line.z, int(m))
    u = mellin_inverse(U, line, grid, base)
    Au = apply_operator(A, u, method="fd8")
    interior = (grid.t >= grid.t_min + 2.0) & (grid.t <= grid.t_max - 2.0)
    scale = max(np.abs(f.values).max(), 1e-300)
    residual = float(np.abs(Au.values[interior] - f.values[interior]).max() / scale)
    extraction = None
    if extract:
        im_max = max(
            [abs(np.imag(p)) for p in inverse.nonbijectivity] + [0.0]
        )
        box = (
            delta - abs(theta),
            delta - 1e-3,
            -(im_max + im_halfwidth),
            im_max + im_halfwidth,
        )
        extraction = extract_type(u, gamma, box, omega=omega or default_cutoff())
    return SolveResult(u, residual, extraction, inverse, line)


# ---------------------------------------------------------------------------
# smoothing Mellin operators and the weight-shift residue identity


@dataclass
class DifferenceResult:
    direct: GridFunction
    residue: GridFunction
    discrepancy: float


def _residue_sum_values(fsym, u_weighted, r_pref, lines, grid, base):
    """omega r^{j-mu} sum over poles strictly between the two weight lines
    of Res_p [r^{-z} f(z) M(u_weighted)(z)], with the orientation sign."""
    d_lo, d_hi = sorted(lines)
    out = np.zeros((grid.K, base.N_x), dtype=complex)
    t = grid.t
    for jm, mode in enumerate(base.modes):
        for p, order, laurent in fsym.poles.get(int(mode), ()):
            if not (d_lo + LINE_CLEARANCE < p.real < d_hi - LINE_CLEARANCE):
                if d_lo - LINE_CLEARANCE <= p.real <= d_lo + LINE_CLEARANCE or (
                    d_hi - LINE_CLEARANCE <= p.real <= d_hi + LINE_CLEARANCE
                ):
                    raise PoleOnLineError(p, LINE_CLEARANCE)
                continue
            # phi(z) = M(u_w)(z) r^{-z}; residue needs its Taylor at p
            H_der = []
            for s in range(order):
                scaled = u_weighted.with_values(
                    u_weighted.values * (t**s)[:, None]
                )
                H_der.append(mellin_at(scaled, np.array([p]), check_boundary=False)[0, jm])
            rad = np.exp(-p * t)
            for ell in range(1, order + 1):
                a = laurent[ell - 1]
                if a == 0:
                    continue
                # phi_{ell-1} = 1/(ell-1)! sum_s C(ell-1, s) H^(s) (-log r)^{ell-1-s} r^{-p}
                acc = np.zeros(grid.K, dtype=complex)
                for s in range(ell):
                    acc += (
                        _binom(ell - 1, s)
                        * H_der[s]
                        * (-t) ** (ell - 1 - s)
                    )
                out[:, jm] += a * acc * rad / _factorial(ell - 1)
    return out * r_pref[:, None]


def _factorial(k):
    out = 1.0
    for i in range(2, k + 1):
        out *= i
    return out


def _binom(n, k):
    return _factorial(n) / (_factorial(k) * _factorial(n - k))


def smoothing_mellin_difference(
    fsym: MeromorphicMellinSymbol,
    beta: float,
    delta_w: float,
    j: int,
    mu: float,
    u: GridFunction,
    omega: CutoffFunction | None = None,
    omega_tilde: CutoffFunction | None = None,
    gamma: float | None = None,
    line_params=(64.0, 1025),
) -> DifferenceResult:
    """Weight-shift difference of smoothing Mellin operators vs residue sum.

    g = omega r^{-mu+j} [op_M^{beta-n/2}(f) - op_M^{delta-n/2}(f)] omega~ u,
    evaluated directly and through the closed-curve residue formula; both
    are returned with their sup discrepancy.
    """
    omega = omega or default_cutoff()
    omega_tilde = omega_tilde or default_cutoff()
    if gamma is not None and not (gamma - j <= min(beta, delta_w) and max(beta, delta_w) <= gamma):
        raise WeightConditionError(
            f"weights beta={beta}, delta={delta_w} violate gamma-j <= . <= gamma"
        )
    grid, base = u.grid, u.base
    n = base.n
    u_w = u.with_values(u.values * omega_tilde(grid.r)[:, None])
    rho_max, P = line_params
    sym = fsym.as_op_symbol()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        v_beta = op_mellin(sym, beta - n / 2.0, u_w, line=MellinLine(beta - n / 2.0, rho_max, P))
        v_delta = op_mellin(sym, delta_w - n / 2.0, u_w, line=MellinLine(delta_w - n / 2.0, rho_max, P))
    pref = omega(grid.r) * grid.r ** (j - mu)
    direct = u.with_values((v_beta.values - v_delta.values) * pref[:, None])
    line_beta = (n + 1) / 2.0 - beta
    line_delta = (n + 1) / 2.0 - delta_w
    # op^beta - op^delta integrates up the beta-line and down the delta-line;
    # that surrounds the strip counter-clockwise exactly when beta < delta
    sign = 1.0 if beta < delta_w else -1.0
    if beta == delta_w:
        residue_vals = np.zeros_like(direct.values)
    else:
        residue_vals = sign * _residue_sum_values(
            fsym, u_w, pref, (line_beta, line_delta), grid, base
        )
    residue = u.with_values(residue_vals)
    discrepancy = float(np.abs(direct.values - residue.values).max())
    return DifferenceResult(direct, residue, discrepancy)


def mellin_edge_symbol(
    fsym: MeromorphicMellinSymbol,
    gamma_j: float,
    j: int,
    alpha: int,
    mu: float,
    gamma: float,
    u: GridFunction,
    eta=1.0,
    omega: CutoffFunction | None = None,
    omega_tilde: CutoffFunction | None = None,
    bracket: BracketFunction | None = None,
    line_params=(64.0, 1025),
) -> GridFunction:
    """Mellin edge symbol m(y,eta) = omega(r[eta]) r^{-mu+j}
    op_M^{gamma_j - n/2}(f) eta^alpha omega~(r[eta]) applied to u."""
    if not (gamma - j <= gamma_j <= gamma):
        raise WeightConditionError(
            f"gamma_j={gamma_j} violates gamma - j <= gamma_j <= gamma "
            f"(gamma={gamma}, j={j})"
        )
    omega = omega or default_cutoff()
    omega_tilde = omega_tilde or default_cutoff()
    bracket = bracket or default_bracket()
    grid, base = u.grid, u.base
    n = base.n
    B = float(bracket(eta))
    u_w = u.with_values(u.values * omega_tilde(grid.r * B)[:, None])
    rho_max, P = line_params
    sym = fsym.as_op_symbol()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        v = op_mellin(sym, gamma_j - n / 2.0, u_w, line=MellinLine(gamma_j - n / 2.0, rho_max, P))
    pref = omega(grid.r * B) * grid.r ** (j - mu) * (eta**alpha)
    return u.with_values(v.values * pref[:, None])


def mellin_edge_weight_change(
    fsym,
    gamma_j,
    gamma_j_tilde,
    j,
    alpha,
    mu,
    gamma,
    u,
    eta=1.0,
    omega=None,
    omega_tilde=None,
    bracket=None,
    line_params=(64.0, 1025),
) -> DifferenceResult:
    """m - m~ for two admissible weights vs the residue-sum Green term."""
    omega = omega or default_cutoff()
    omega_tilde = omega_tilde or default_cutoff()
    bracket = bracket or default_bracket()
    m1 = mellin_edge_symbol(
        fsym, gamma_j, j, alpha, mu, gamma, u, eta, omega, omega_tilde, bracket, line_params
    )
    m2 = mellin_edge_symbol(
        fsym, gamma_j_tilde, j, alpha, mu, gamma, u, eta, omega, omega_tilde, bracket, line_params
    )
    direct = m1 - m2
    grid, base = u.grid, u.base
    n = base.n
    B = float(bracket(eta))
    u_w = u.with_values(u.values * omega_tilde(grid.r * B)[:, None])
    pref = omega(grid.r * B) * grid.r ** (j - mu) * (eta**alpha)
    sign = 1.0 if gamma_j < gamma_j_tilde else -1.0
    if gamma_j == gamma_j_tilde:
        residue_vals = np.zeros_like(direct.values)
    else:
        residue_vals = sign * _residue_sum_values(
            fsym,
            u_w,
            pref,
            ((n + 1) / 2.0 - gamma_j, (n + 1) / 2.0 - gamma_j_tilde),
            grid,
            base,
        )
    residue = u.with_values(residue_vals)
    discrepancy = float(np.abs(direct.values - residue.values).max())
    return DifferenceResult(direct, residue, discrepancy)
