"""Discrete asymptotic types, analytic functionals and type extraction.

An asymptotic type prescribes exponents p_j, log-orders m_j and angular
coefficient spaces L_j of expansions sum c_jk(x) r^{-p_j} log^k r near the
tip.  Continuous asymptotics are represented operationally by a compact
carrier box together with a meromorphic contour density; pairing with
r^{-z} is a contour integral, cross-checked against the residue sum.

Extraction of a type from grid data identifies the poles of the weighted
Mellin transform of the cut-off function.  On a truncated grid the raw
quadrature of M(omega u) has no analytic continuation to the left of a
pole, so pole locations are found from the log-grid samples themselves
(a Hankel-pencil eigenvalue problem, the confluent Prony formulation of
Mellin-pole identification), polished by Gauss-Newton, and then verified
through contour moments of the tail-corrected transform: the corrected
transform minus the extracted principal parts must be entire, i.e. free
of negative Fourier content on a verification circle.

Laurent convention: M(omega(r) c r^{-p} log^k r)(z) has principal part
(-1)^k k! c / (z - p)^{k+1}; extraction reports the log-basis
coefficients c_jk, with the Laurent coefficients a_{-(k+1)} available as
(-1)^k k! c_jk.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .conegrid import (
    BaseManifold,
    CutoffFunction,
    GridFunction,
    RadialGrid,
    default_cutoff,
)
from .errors import ContourError, DomainError, StripError
from .mellin import mellin_at
from .spaces import WeightData

__all__ = [
    "Triple",
    "AsymptoticType",
    "SingularFunction",
    "eval_singular",
    "eval_singular_from_coeffs",
    "shift_type",
    "AnalyticFunctional",
    "RationalDensity",
    "pair_functional",
    "residue_pairing",
    "BranchingFamily",
    "branching_eval",
    "ProjectionResult",
    "project_singular",
    "ExtractionResult",
    "extract_type",
    "mellin_tail_closed_form",
]


# ---------------------------------------------------------------------------
# types and singular functions


@dataclass(frozen=True)
class Triple:
    """One asymptotic term: exponent p, log-order m, coefficient space L.

    L is a tuple of angular-mode coefficient vectors spanning the space the
    c_jk may come from; for a point base the single vector (1,) is used.
    """

    p: complex
    m: int
    L: tuple = ((1.0,),)

    def __post_init__(self):
        if self.m < 0:
            raise DomainError("log-order m must be >= 0")
        object.__setattr__(
            self, "L", tuple(tuple(complex(x) for x in vec) for vec in self.L)
        )

    def basis(self):
        return np.array(self.L, dtype=complex)


@dataclass(frozen=True)
class AsymptoticType:
    """Weight data plus finitely many triples (p_j, m_j, L_j)."""

    weight: WeightData
    triples: tuple = ()
    n: int = 0

    def __post_init__(self):
        trips = tuple(
            t if isinstance(t, Triple) else Triple(*t) for t in self.triples
        )
        trips = tuple(
            sorted(trips, key=lambda t: (-np.real(t.p), np.imag(t.p)))
        )
        object.__setattr__(self, "triples", trips)
        lo, hi = self.strip()
        for t in trips:
            if not (lo < np.real(t.p) < hi):
                raise StripError(
                    f"exponent p={t.p} outside the weight strip ({lo:g}, {hi:g})"
                )

    def strip(self):
        hi = (self.n + 1) / 2.0 - self.weight.gamma
        lo = hi + self.weight.theta
        return lo, hi

    def exponents(self):
        return np.array([t.p for t in self.triples], dtype=complex)

    def to_json_dict(self):
        return {
            "gamma": self.weight.gamma,
            "theta": self.weight.theta,
            "n": self.n,
            "triples": [
                {
                    "p": [float(np.real(t.p)), float(np.imag(t.p))],
                    "m": t.m,
                    "L": [[ [float(c.real), float(c.imag)] for c in vec] for vec in t.L],
                }
                for t in self.triples
            ],
        }

    @staticmethod
    def from_json_dict(d):
        triples = tuple(
            Triple(
                complex(t["p"][0], t["p"][1]),
                int(t["m"]),
                tuple(
                    tuple(complex(c[0], c[1]) for c in vec) for vec in t["L"]
                ),
            )
            for t in d.get("triples", [])
        )
        return AsymptoticType(
            WeightData(d["gamma"], d["theta"]), triples, n=d.get("n", 0)
        )


def shift_type(ptype: AsymptoticType, gamma_shift: float) -> AsymptoticType:
    """T^{-a} P = {(p_j - a, m_j, L_j)} with weight updated to gamma + a."""
    new_weight = WeightData(ptype.weight.gamma + gamma_shift, ptype.weight.theta)
    new_triples = tuple(
        Triple(t.p - gamma_shift, t.m, t.L) for t in ptype.triples
    )
    try:
        return AsymptoticType(new_weight, new_triples, n=ptype.n)
    except StripError as exc:
        raise StripError(f"shift by {gamma_shift} leaves the strip: {exc}") from exc


@dataclass
class SingularFunction:
    """Finite expansion sum_j sum_k omega(r) c_jk(x) r^{-p_j} log^k r."""

    ptype: AsymptoticType
    coefficients: list  # per triple: array (m_j + 1, N_x) of mode coefficients
    omega: CutoffFunction = field(default_factory=default_cutoff)
    validate_span: bool = True

    def __post_init__(self):
        coeffs = []
        for t, c in zip(self.ptype.triples, self.coefficients):
            c = np.atleast_2d(np.asarray(c, dtype=complex))
            if c.shape[0] != t.m + 1:
                raise DomainError(
                    f"triple with m={t.m} expects {t.m + 1} coefficient rows"
                )
            if self.validate_span:
                _check_in_span(c, t.basis())
            coeffs.append(c)
        self.coefficients = coeffs

    def eval(self, grid: RadialGrid, base: BaseManifold) -> GridFunction:
        vals = np.zeros((grid.K, base.N_x), dtype=complex)
        w = self.omega(grid.r)
        t = grid.t  # log r, principal branch (r > 0 real)
        for trip, c in zip(self.ptype.triples, self.coefficients):
            rad = np.exp(-trip.p * t)
            for k in range(trip.m + 1):
                vals += (w * rad * t**k)[:, None] * c[k][None, :]
        modes = base.modes

        def closed_form(r, x=0.0):
            r = np.asarray(r, dtype=float)
            lr = np.log(r)
            out = np.zeros(np.broadcast(r, x).shape, dtype=complex)
            for trip, c in zip(self.ptype.triples, self.coefficients):
                rad = self.omega(r) * np.exp(-trip.p * lr)
                for k in range(trip.m + 1):
                    ang = sum(
                        c[k][j] * np.exp(1j * m * np.asarray(x))
                        for j, m in enumerate(modes)
                    )
                    out = out + rad * lr**k * ang
            return out

        return GridFunction(grid, base, vals, closed_form=closed_form)


def _check_in_span(c, basis, tol=1e-10):
    for row in c:
        if not np.any(np.abs(row) > 0):
            continue
        sol, *_ = np.linalg.lstsq(basis.T, row, rcond=None)
        resid = np.linalg.norm(basis.T @ sol - row)
        if resid > tol * max(1.0, np.linalg.norm(row)):
            raise DomainError("coefficient vector outside span of L_j")


def eval_singular(sf: SingularFunction, grid: RadialGrid, base: BaseManifold | None = None):
    """Pointwise evaluation of a singular function on a grid."""
    base = base or BaseManifold()
    return sf.eval(grid, base)


def eval_singular_from_coeffs(ptype, coefficients, omega, grid, base):
    sf = SingularFunction(ptype, coefficients, omega, validate_span=False)
    return sf.eval(grid, base)


# ---------------------------------------------------------------------------
# analytic functionals as contour integrals


@dataclass
class RationalDensity:
    """Meromorphic density: declared principal parts plus an entire part.

    ``poles`` is a tuple of (p, laurent) with laurent = (a_-1, a_-2, ...);
    the entries may be scalars or per-mode vectors.
    """

    poles: tuple = ()
    entire: object = None

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.zeros(z.shape, dtype=complex) if z.ndim else 0.0 + 0.0j
        for p, laurent in self.poles:
            for ell, a in enumerate(laurent, start=1):
                out = out + np.asarray(a) / (z - p) ** ell
        if self.entire is not None:
            out = out + self.entire(z)
        return out

    def residue_pairing(self, r):
        """Exact residue sum of f(z) r^{-z}: the symbolic oracle."""
        r = np.asarray(r, dtype=float)
        lr = np.log(r)
        out = np.zeros(r.shape, dtype=complex)
        for p, laurent in self.poles:
            for ell, a in enumerate(laurent, start=1):
                # Res_p[(z-p)^{-ell} r^{-z}] = (-log r)^{ell-1} r^{-p} / (ell-1)!
                out = out + np.asarray(a) * (-lr) ** (ell - 1) * np.exp(-p * lr) / _factorial(ell - 1)
        return out


def _factorial(k):
    out = 1.0
    for i in range(2, k + 1):
        out *= i
    return out


@dataclass
class AnalyticFunctional:
    """zeta: h -> (1/2 pi i) int_C f(z) h(z) dz, carried by a compact box.

    The contour is a circle around the carrier box; all declared poles of
    the density must lie inside it.
    """

    box: tuple  # (re_lo, re_hi, im_lo, im_hi)
    density: object
    nodes: int = 256
    margin: float = 0.25

    def __post_init__(self):
        if self.nodes < 64:
            raise ContourError("contour needs at least 64 nodes")
        re_lo, re_hi, im_lo, im_hi = self.box
        if not (re_hi >= re_lo and im_hi >= im_lo):
            raise ContourError("degenerate carrier box")

    @property
    def center(self):
        re_lo, re_hi, im_lo, im_hi = self.box
        return complex((re_lo + re_hi) / 2.0, (im_lo + im_hi) / 2.0)

    def radius(self, scale=1.0):
        re_lo, re_hi, im_lo, im_hi = self.box
        half_diag = np.hypot(re_hi - re_lo, im_hi - im_lo) / 2.0
        return scale * (half_diag + self.margin)

    def contour(self, scale=1.0):
        theta = 2.0 * np.pi * np.arange(self.nodes) / self.nodes
        R = self.radius(scale)
        z = self.center + R * np.exp(1j * theta)
        dz = 1j * R * np.exp(1j * theta) * (2.0 * np.pi / self.nodes)
        self._guard_poles(R)
        return z, dz

    def _guard_poles(self, R, tol=1e-6):
        poles = getattr(self.density, "poles", ())
        for p, _ in poles:
            d = abs(abs(p - self.center) - R)
            if d < tol:
                raise ContourError(f"pole {p} within {d:.2e} of the contour")
            if abs(p - self.center) > R:
                raise ContourError(f"declared pole {p} outside the contour")

    def pair(self, r, scale=1.0):
        """<zeta, r^{-z}> by trapezoid quadrature on the contour."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        z, dz = self.contour(scale)
        fz = np.asarray(self.density(z), dtype=complex)
        # r^{-z} for each (r, node)
        rz = np.exp(-np.outer(np.log(r), z))
        return (rz * (fz * dz)[None, :]).sum(axis=1) / (2j * np.pi)


def pair_functional(zeta: AnalyticFunctional, r, scale=1.0):
    return zeta.pair(r, scale=scale)


def residue_pairing(zeta: AnalyticFunctional, r):
    if not hasattr(zeta.density, "residue_pairing"):
        raise DomainError("density does not declare residue data")
    return zeta.density.residue_pairing(np.atleast_1d(np.asarray(r, dtype=float)))


@dataclass
class BranchingFamily:
    """y-dependent meromorphic density over a fixed carrier box.

    ``density_at(y)`` returns the density for the slice; ``pole_paths``
    optionally maps y to the pole locations for carrier validation.
    Contour integration is smooth in y even across pole collisions.
    """

    y_range: tuple
    box: tuple
    density_at: object
    pole_paths: object = None
    nodes: int = 256

    def functional_at(self, y):
        lo, hi = self.y_range
        if not lo <= y <= hi:
            raise DomainError(f"y={y} outside the family range [{lo}, {hi}]")
        if self.pole_paths is not None:
            re_lo, re_hi, im_lo, im_hi = self.box
            for p in self.pole_paths(y):
                if not (re_lo <= p.real <= re_hi and im_lo <= p.imag <= im_hi):
                    raise ContourError(
                        f"pole {p} exits the carrier box at y={y}"
                    )
        return AnalyticFunctional(self.box, self.density_at(y), nodes=self.nodes)


def branching_eval(B: BranchingFamily, y, r, omega: CutoffFunction | None = None):
    """omega(r) <zeta(y), r^{-z}> for a y-slice of a branching family."""
    omega = omega or default_cutoff()
    r = np.atleast_1d(np.asarray(r, dtype=float))
    zeta = B.functional_at(y)
    return omega(r) * zeta.pair(r)


# ---------------------------------------------------------------------------
# projection with known exponents


@dataclass
class ProjectionResult:
    coefficients: list
    condition: float
    residual: float


def _fit_region(u: GridFunction, omega: CutoffFunction):
    t = u.grid.t
    mask = t <= np.log(omega.a)
    if mask.sum() < 16:
        raise DomainError("grid has too few nodes in the omega == 1 region")
    return t[mask], u.values[mask]


def project_singular(
    u: GridFunction, ptype: AsymptoticType, omega: CutoffFunction | None = None
) -> ProjectionResult:
    """Least-squares projection of u onto the singular span of the type.

    Performed on the region where omega == 1, where u agrees with its
    expansion plus a flat remainder; exact for pure singular functions.
    """
    omega = omega or default_cutoff()
    t, vals = _fit_region(u, omega)
    cols = []
    index = []
    for j, trip in enumerate(ptype.triples):
        for k in range(trip.m + 1):
            cols.append(np.exp(-trip.p * t) * t**k)
            index.append((j, k))
    if not cols:
        return ProjectionResult([], 1.0, 0.0)
    A = np.stack(cols, axis=1)
    scales = np.linalg.norm(A, axis=0)
    scales[scales == 0] = 1.0
    As = A / scales
    sol, _, _, sv = np.linalg.lstsq(As, vals, rcond=None)
    sol = sol / scales[:, None]
    condition = float(sv[0] / sv[-1]) if sv.size and sv[-1] > 0 else np.inf
    resid = float(np.linalg.norm(A @ sol - vals) / max(np.linalg.norm(vals), 1e-300))
    coefficients = []
    pos = 0
    for trip in ptype.triples:
        coefficients.append(sol[pos : pos + trip.m + 1].copy())
        pos += trip.m + 1
    return ProjectionResult(coefficients, condition, resid)


# ---------------------------------------------------------------------------
# extraction of unknown asymptotic data


def mellin_tail_closed_form(z, p, k, T):
    """Meromorphic continuation of int_{-oo}^{T} e^{(z-p) t} t^k dt.

    Equals e^{sT} sum_{i<=k} (-1)^{k-i} (k!/i!) T^i / s^{k-i+1}, s = z - p;
    this carries exactly the principal part (-1)^k k! / (z-p)^{k+1} of the
    full Mellin integral of omega r^{-p} log^k r.
    """
    z = np.asarray(z, dtype=complex)
    s = z - p
    out = np.zeros(z.shape, dtype=complex)
    for i in range(k + 1):
        out = out + (-1.0) ** (k - i) * (_factorial(k) / _factorial(i)) * T**i / s ** (
            k - i + 1
        )
    return np.exp(s * T) * out


@dataclass
class ExtractionResult:
    ptype: AsymptoticType
    coefficients: list
    laurent: list
    residual: float
    condition: float
    diagnostics: dict = field(default_factory=dict)

    def exponents(self):
        return self.ptype.exponents()


def _hankel_pencil_nodes(v, max_terms=12, sv_rel=1e-10):
    """ESPRIT-style node estimates exp(-p * dt) from a uniform sequence."""
    N = v.size
    L = N // 2
    H = np.lib.stride_tricks.sliding_window_view(v, L).T  # (L, N-L+1)
    U, sv, _ = np.linalg.svd(H, full_matrices=False)
    if sv[0] == 0:
        return np.array([], dtype=complex)
    rank = int(np.sum(sv > sv_rel * sv[0]))
    rank = min(rank, max_terms)
    if rank == 0:
        return np.array([], dtype=complex)
    Ur = U[:, :rank]
    phi, *_ = np.linalg.lstsq(Ur[:-1], Ur[1:], rcond=None)
    return np.linalg.eigvals(phi)


def _cluster(points, tol):
    """Greedy clustering; returns (centroid, count) pairs."""
    pts = sorted(points, key=lambda z: (z.real, z.imag))
    clusters = []
    for z in pts:
        for cl in clusters:
            if abs(z - cl[0] / cl[1]) < tol:
                cl[0] += z
                cl[1] += 1
                break
        else:
            clusters.append([z, 1])
    return [(c / n, n) for c, n in clusters]


def _design_matrix(t, poles_orders):
    cols = []
    index = []
    for j, (p, q) in enumerate(poles_orders):
        for k in range(q):
            cols.append(np.exp(-p * t) * t**k)
            index.append((j, k))
    return np.stack(cols, axis=1), index


def _fit_coefficients(t, v, poles_orders):
    A, index = _design_matrix(t, poles_orders)
    scales = np.linalg.norm(A, axis=0)
    scales[scales == 0] = 1.0
    sol, _, _, sv = np.linalg.lstsq(A / scales, v, rcond=None)
    sol = sol / scales
    cond = float(sv[0] / sv[-1]) if sv.size and sv[-1] > 0 else np.inf
    resid = np.linalg.norm(A @ sol - v)
    return sol, index, cond, resid


def _gauss_newton_polish(t, v, poles_orders, n_iter=4):
    """Joint refinement of pole locations by variable-projection GN."""
    poles = [complex(p) for p, _ in poles_orders]
    orders = [q for _, q in poles_orders]
    for _ in range(n_iter):
        po = list(zip(poles, orders))
        sol, index, _, _ = _fit_coefficients(t, v, po)
        model_cols, _ = _design_matrix(t, po)
        resid = v - model_cols @ sol
        # d model / d p_j = -t * (coefficient block of pole j)
        J = []
        for j in range(len(poles)):
            block = np.zeros_like(v)
            for i, (jj, k) in enumerate(index):
                if jj == j:
                    block = block + sol[i] * np.exp(-poles[j] * t) * t**k
            J.append(-t * block)
        J = np.stack(J, axis=1)
        # complex GN step: solve J delta = resid
        try:
            delta, *_ = np.linalg.lstsq(J, resid, rcond=None)
        except np.linalg.LinAlgError:
            break
        step = np.asarray(delta).ravel()
        if not np.all(np.isfinite(step)):
            break
        poles = [p - d for p, d in zip(poles, step)]
        if np.max(np.abs(step)) < 1e-13:
            break
    return list(zip(poles, orders))


def extract_type(
    u: GridFunction,
    gamma: float,
    box: tuple,
    omega: CutoffFunction | None = None,
    max_terms=12,
    cluster_tol=5e-3,
    coeff_floor=1e-8,
    boundary_tol=1e-6,
    sv_rel=1e-10,
    contour_nodes=512,
    fit_degree=40,
) -> ExtractionResult:
    """Extract the asymptotic type of u over a search box in the z-plane.

    box = (re_lo, re_hi, im_lo, im_hi).  Exponents are the Mellin poles of
    M_{gamma - n/2}(omega u); see the module docstring for the method and
    the Laurent sign convention.  A pole within ``boundary_tol`` of the box
    boundary is rejected as undecidable.
    """
    omega = omega or default_cutoff()
    base = u.base
    n = base.n
    re_lo, re_hi, im_lo, im_hi = box
    t_fit, vals_fit = _fit_region(u, omega)

    per_mode = []
    scale_all = np.abs(u.values).max()
    for jm in range(base.N_x):
        v = vals_fit[:, jm]
        if np.abs(v).max() <= coeff_floor * max(scale_all, 1e-300):
            per_mode.append([])
            continue
        # prewhiten around the box centre, subsample against Im aliasing
        w_ctr = 0.5 * (re_lo + re_hi)
        target = 240
        sub = max(1, v.size // target)
        dt_sub = (t_fit[1] - t_fit[0]) * sub
        while sub > 1 and np.pi / dt_sub <= max(abs(im_lo), abs(im_hi)) + 1.0:
            sub -= 1
            dt_sub = (t_fit[1] - t_fit[0]) * sub
        ts = t_fit[::sub]
        vs = v[::sub] * np.exp(w_ctr * ts)
        vs_scale = np.abs(vs).max()
        nodes = _hankel_pencil_nodes(vs / vs_scale, max_terms=max_terms, sv_rel=sv_rel)
        cands = []
        for mu in nodes:
            if abs(mu) < 1e-12 or not np.isfinite(mu):
                continue
            p = w_ctr - np.log(mu) / dt_sub
            cands.append(complex(p))
        clusters = _cluster(cands, cluster_tol)
        # fit all candidates so out-of-box signal is absorbed, report in-box
        po_all = [(p, q) for p, q in clusters]
        if not po_all:
            per_mode.append([])
            continue
        po_all = _gauss_newton_polish(t_fit, v, po_all)
        sol, index, cond, _ = _fit_coefficients(t_fit, v, po_all)
        kept = []
        vscale = np.abs(v).max()
        for j, (p, q) in enumerate(po_all):
            cj = np.array([sol[i] for i, (jj, k) in enumerate(index) if jj == j])
            # trim the log-order by the last significant coefficient
            sig = np.nonzero(np.abs(cj) > coeff_floor * vscale)[0]
            if sig.size == 0:
                continue
            m_eff = int(sig[-1])
            inside = (re_lo - 1e-4 <= p.real <= re_hi + 1e-4) and (
                im_lo - 1e-4 <= p.imag <= im_hi + 1e-4
            )
            if not inside:
                continue
            d_edge = min(
                abs(p.real - re_lo), abs(p.real - re_hi),
                abs(p.imag - im_lo), abs(p.imag - im_hi),
            )
            if d_edge < boundary_tol:
                raise ContourError(
                    f"pole {p} within {d_edge:.2e} of the search-box boundary"
                )
            kept.append((complex(p), m_eff, cj[: m_eff + 1], cond))
        per_mode.append(kept)

    merged = _merge_modes(per_mode, base, tol=1e-6)
    theta = min(re_lo - ((n + 1) / 2.0 - gamma), -1e-6)
    weight = WeightData(gamma, theta)
    triples = []
    coefficients = []
    laurent = []
    for p, m_eff, cmat in merged:
        basis = _span_basis(cmat)
        triples.append(Triple(p, m_eff, tuple(map(tuple, basis))))
        coefficients.append(cmat)
        laur = np.array(
            [(-1.0) ** k * _factorial(k) * cmat[k] for k in range(m_eff + 1)]
        )
        laurent.append(laur)
    ptype = AsymptoticType(weight, tuple(triples), n=n)
    # AsymptoticType sorts its triples; align coefficient lists with it
    sort_key = sorted(
        range(len(merged)), key=lambda i: (-merged[i][0].real, merged[i][0].imag)
    )
    coefficients = [coefficients[i] for i in sort_key]
    laurent = [laurent[i] for i in sort_key]

    residual = _verification_residual(
        u, gamma, omega, ptype, coefficients, box,
        nodes=contour_nodes, degree=fit_degree,
    )
    cond = max((k[3] for mode in per_mode for k in mode), default=1.0)
    return ExtractionResult(
        ptype,
        coefficients,
        laurent,
        residual,
        cond,
        diagnostics={"modes_with_signal": sum(1 for m in per_mode if m)},
    )


def _merge_modes(per_mode, base, tol):
    """Merge per-mode extraction results into mode-vector coefficients."""
    merged = []  # list of [p_sum, count, m_eff, {mode: coeffs}]
    for jm, kept in enumerate(per_mode):
        for p, m_eff, cj, _ in kept:
            for entry in merged:
                if abs(p - entry[0] / entry[1]) < max(tol * 10, 1e-6):
                    entry[0] += p
                    entry[1] += 1
                    entry[2] = max(entry[2], m_eff)
                    entry[3][jm] = cj
                    break
            else:
                merged.append([p, 1, m_eff, {jm: cj}])
    out = []
    for p_sum, cnt, m_eff, mode_map in merged:
        p = p_sum / cnt
        cmat = np.zeros((m_eff + 1, base.N_x), dtype=complex)
        for jm, cj in mode_map.items():
            cmat[: cj.size, jm] = cj
        out.append((p, m_eff, cmat))
    return out


def _span_basis(cmat, tol=1e-10):
    nz = cmat[np.linalg.norm(cmat, axis=1) > tol * max(1.0, np.abs(cmat).max())]
    if nz.size == 0:
        return np.zeros((1, cmat.shape[1]), dtype=complex)
    U, sv, Vh = np.linalg.svd(nz)
    rank = int(np.sum(sv > tol * sv[0])) if sv.size else 0
    return Vh[: max(rank, 1)]


def _verification_residual(u, gamma, omega, ptype, coefficients, box, nodes, degree):
    """Negative-frequency content of the corrected transform minus the
    extracted principal parts on a verification circle (entire <=> none)."""
    base = u.base
    n = base.n
    re_lo, re_hi, im_lo, im_hi = box
    center = complex((re_lo + re_hi) / 2.0, (im_lo + im_hi) / 2.0)
    R = np.hypot(re_hi - re_lo, im_hi - im_lo) / 2.0 + 0.25
    theta = 2.0 * np.pi * np.arange(nodes) / nodes
    z = center + R * np.exp(1j * theta)
    wu = u.with_values(u.values * omega(u.grid.r)[:, None])
    F = mellin_at(wu, z, check_boundary=False)  # (nodes, N_x), entire quadrature
    T = u.grid.t_min
    for trip, cmat in zip(ptype.triples, coefficients):
        for k in range(trip.m + 1):
            tail = mellin_tail_closed_form(z, trip.p, k, T)
            pp = (-1.0) ** k * _factorial(k) / (z - trip.p) ** (k + 1)
            # corrected transform minus principal part: entire remainder
            F = F + np.outer(tail - pp, cmat[k])
    spec = np.fft.fft(F, axis=0) / nodes
    freqs = np.fft.fftfreq(nodes, 1.0 / nodes).astype(int)
    bad = (freqs < 0) | (freqs > degree)
    resid = np.abs(spec[bad]).max() if np.any(bad) else 0.0
    scale = max(np.abs(F).max(), 1e-300)
    return float(resid / scale)
