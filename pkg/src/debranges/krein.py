"""Constructive pipeline from a finite-rank reproducing-kernel space to an
Hermite-Biehler pair and multiplier factorizing its kernel.

The model: H is spanned by n orthonormal rows over a discrete measure on m
distinct points (m >= n+1), so that multiplication by the independent
variable is a symmetric operator with defect one.  Every stage of the
construction is then exact linear algebra:

* the compression J of multiplication to H and its domain D (dim n-1),
* the defect vector xi spanning Ran(A - w)^perp,
* the one-parameter family of self-adjoint completions A~(theta),
* the scalar resolvent function Psi and its zero set S,
* the entire-function space with kernel  K(x, y) = sum_j rho_j m_j(x) m_j(y),
  where m_j are the leave-one-out products over the spectrum of A~,
* the integrable pair (A, B) read off from two kernel columns, symmetrized
  to real coefficients, and the multiplier Phi = xi / (R Omega).

Leave-one-out products are evaluated by prefix/suffix cumulative products --
never by dividing out a root -- which keeps the end-to-end factorization
residual near 1e-11 up to n = 12.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy import integrate

from .spaces import HermiteBiehler, Multiplier, RealEntireFunction, hb_check

__all__ = [
    "FiniteRankSpace",
    "MultiplicationOperator",
    "SpectralMeasure",
    "KreinArtifacts",
    "PipelineStageError",
    "KreinPoleError",
    "DivisionResult",
    "make_polynomial_space",
    "division_check",
    "mult_domain",
    "deficiency_subspace",
    "selfadjoint_extension",
    "extension_interlacing",
    "krein_transform",
    "find_S",
    "parseval_check",
    "canonical_R",
    "extract_integrable_pair",
    "extract_AB",
    "omega_symmetrize",
    "assemble_E_phi",
    "run_pipeline",
    "discrete_sine_fxi",
]


class PipelineStageError(RuntimeError):
    """A pipeline stage invariant failed; carries the stage name."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


class KreinPoleError(ValueError):
    """The transform was evaluated at a pole (a zero of Psi)."""


@dataclass(frozen=True)
class FiniteRankSpace:
    """n-dimensional space of functions on m weighted points, m >= n+1.

    ``basis`` is n x m with rows orthonormal in l2(points, weights).
    """

    points: np.ndarray
    weights: np.ndarray
    basis: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        wts = np.asarray(self.weights, dtype=float)
        bas = np.asarray(self.basis, dtype=float)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", wts)
        object.__setattr__(self, "basis", bas)

    @property
    def m(self) -> int:
        return len(self.points)

    @property
    def n(self) -> int:
        return self.basis.shape[0]

    @classmethod
    def from_span(cls, points, weights, rows) -> "FiniteRankSpace":
        """Orthonormalize spanning rows against the weighted product."""
        pts = np.asarray(points, dtype=float)
        wts = np.asarray(weights, dtype=float)
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        sqw = np.sqrt(wts)
        q, r = np.linalg.qr((rows * sqw).T)
        if np.abs(np.diag(r)).min() < 1e-12 * np.abs(np.diag(r)).max():
            raise ValueError("spanning rows are numerically dependent")
        q = q * np.sign(np.diag(r))
        return cls(points=pts, weights=wts, basis=(q.T / sqw))

    @classmethod
    def from_json_dict(cls, data: Mapping) -> "FiniteRankSpace":
        missing = {"points", "weights"} - set(data)
        if missing or not ({"n", "basis"} & set(data)):
            raise ValueError(
                "space document needs 'points', 'weights', and either 'n' or 'basis'"
            )
        pts, wts = data["points"], data["weights"]
        if "basis" in data:
            return cls.from_span(pts, wts, data["basis"])
        return make_polynomial_space(pts, wts, int(data["n"]))

    def validate(self) -> None:
        """All structural invariants; raises ValueError on the first breach."""
        pts, wts, bas = self.points, self.weights, self.basis
        if pts.ndim != 1 or wts.shape != pts.shape:
            raise ValueError("points and weights must be matching 1-d arrays")
        if not (np.isfinite(pts).all() and np.isfinite(wts).all()):
            raise ValueError("points and weights must be finite")
        if len(np.unique(pts)) != len(pts):
            raise ValueError("points must be distinct")
        if (wts <= 0).any():
            raise ValueError("weights must be positive")
        n, m = bas.shape
        if n < 2:
            raise ValueError(f"need n >= 2 basis rows, got {n}")
        if m != len(pts):
            raise ValueError("basis columns must match the point count")
        if m < n + 1:
            raise ValueError(f"need m >= n+1 points, got m={m}, n={n}")
        gram = bas @ (wts[:, None] * bas.T)
        if np.abs(gram - np.eye(n)).max() > 1e-12:
            raise ValueError("basis rows are not orthonormal to 1e-12")
        # non-degeneracy: every point is seen by some basis row
        diag = (bas**2).sum(axis=0)  # K_H(t_i, t_i)
        if (diag <= 0).any() or diag.min() < 1e-24 * diag.max():
            raise ValueError("degenerate point: every evaluation functional must be nonzero")
        # no single-point functions: the projection of each indicator leaves a residual
        proj = wts[None, :] * (bas.T @ bas)  # values of P_H delta_i, columns over i
        resid_sq = np.einsum("ij,ij->j", proj - np.eye(m), wts[:, None] * (proj - np.eye(m))) / wts
        if (np.sqrt(np.maximum(resid_sq, 0.0)) <= 1e-10).any():
            raise ValueError("an indicator function lies in the span (division uniqueness fails)")

    def values(self, coords: np.ndarray) -> np.ndarray:
        """Point values of the element with the given basis coordinates."""
        return np.asarray(coords) @ self.basis

    def kernel_matrix(self) -> np.ndarray:
        """Reproducing kernel K_H(t_i, t_j) on the point set."""
        return self.basis.T @ self.basis

    def compression(self) -> np.ndarray:
        """The n x n compression of multiplication by t to H."""
        return self.basis @ (self.weights[:, None] * self.points[:, None] * self.basis.T)


def make_polynomial_space(points, weights, n: int) -> FiniteRankSpace:
    """Span of the first n orthonormal polynomials of the discrete measure."""
    pts = np.asarray(points, dtype=float)
    wts = np.asarray(weights, dtype=float)
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    if pts.ndim != 1 or len(np.unique(pts)) != len(pts):
        raise ValueError("points must be a 1-d array of distinct values")
    if len(pts) < n + 1:
        raise ValueError(f"need at least n+1 = {n + 1} distinct points, got {len(pts)}")
    space = FiniteRankSpace.from_span(pts, wts, np.vander(pts, n, increasing=True).T)
    space.validate()
    return space


class DivisionResult(NamedTuple):
    quotient: np.ndarray | None
    residual: float
    passed: bool


def division_check(space: FiniteRankSpace, f: np.ndarray, k: float, tolerance: float = 1e-10) -> DivisionResult:
    """Least-squares division of f (vanishing at k) by (t - k) inside the space.

    Solves min_g sum_i w_i |f(t_i) - (t_i - k) g(t_i)|^2 over g in H and
    passes iff the weighted residual is <= tolerance * ||f||.  The quotient
    is unique because no indicator function lies in H; the solve's design
    matrix is checked for full rank.
    """
    f = np.asarray(f, dtype=float)
    fnorm = float(np.linalg.norm(f))
    idx = np.flatnonzero(np.isclose(space.points, k, rtol=0.0, atol=1e-12))
    if len(idx) != 1:
        raise ValueError(f"k={k!r} is not a point of the space")
    fvals = space.values(f)
    if abs(fvals[idx[0]]) > 1e-10 * max(fnorm, 1e-300):
        raise ValueError(f"f does not vanish at k={k!r}: |f(k)| = {abs(fvals[idx[0]]):.3e}")
    sqw = np.sqrt(space.weights)
    design = (sqw * (space.points - k))[:, None] * space.basis.T
    sv = np.linalg.svd(design, compute_uv=False)
    if sv[-1] < 1e-10 * sv[0]:
        return DivisionResult(None, math.inf, False)
    g, *_ = np.linalg.lstsq(design, sqw * fvals, rcond=None)
    residual = float(np.linalg.norm(design @ g - sqw * fvals))
    passed = residual <= tolerance * max(fnorm, 1e-300)
    return DivisionResult(g if passed else None, residual, passed)


@dataclass(frozen=True)
class MultiplicationOperator:
    """Multiplication by t on its natural domain D = {f in H : tf in H}."""

    domain_basis: np.ndarray  # n x dimD, orthonormal columns (coordinates)
    action: np.ndarray  # n x dimD, coordinates of t*f for each domain column
    compression: np.ndarray  # n x n compression of multiplication to H
    defect: np.ndarray | None  # unit vector spanning D^perp, None if D = H
    dim_domain: int


def mult_domain(space: FiniteRankSpace) -> MultiplicationOperator:
    """Compute D as the null space of (I - P_H) M restricted to H.

    Raises on numerical rank ambiguity (normalized singular values inside
    [1e-10, 1e-6]) and flags spaces with dim D < n - 1, which cannot carry
    the defect-one structure.
    """
    n = space.n
    V = space.basis.T  # m x n values
    J = space.compression()
    resid = space.points[:, None] * V - V @ J  # (I - P_H) M on basis elements
    _, sv, vt = np.linalg.svd(resid)
    sv = np.concatenate([sv, np.zeros(max(0, n - len(sv)))])
    top = sv[0] if sv[0] > 0 else 1.0
    rel = sv / top
    if ((rel > 1e-10) & (rel < 1e-6)).any():
        raise ValueError(f"ill-conditioned multiplication domain: singular values {rel}")
    null_mask = rel <= 1e-10
    dim_d = int(null_mask.sum()) if sv[0] > 0 else n
    if dim_d < n - 1:
        raise ValueError(
            f"dim D = {dim_d} < n-1 = {n - 1}: the space does not satisfy the division property"
        )
    if dim_d == n:
        return MultiplicationOperator(np.eye(n), J.copy(), J, None, n)
    domain = vt[null_mask].T
    defect = vt[~null_mask][0]
    op = MultiplicationOperator(domain, J @ domain, J, defect, dim_d)
    sym = domain.T @ J @ domain
    if np.abs(sym - sym.T).max() > 1e-12 * max(1.0, np.abs(sym).max()):
        raise ValueError("multiplication is not symmetric on its domain")
    return op


def deficiency_subspace(space: FiniteRankSpace, op: MultiplicationOperator, w: complex) -> np.ndarray:
    """Unit vector spanning Ran(A - w)^perp, with defect-dimension and
    nonvanishing checks.

    The complement of (J - w) D inside H is C (J - wbar)^{-1} h0 where h0
    spans D^perp.  The phase is fixed by rotating the largest coordinate to
    the positive real axis.
    """
    w = complex(w)
    if w.imag == 0.0:
        raise ValueError(f"the base point must be nonreal, got {w!r}")
    if op.defect is None:
        raise ValueError("deficiency indices are (0, 0): multiplication is already self-adjoint")
    n = space.n
    for probe in (w, w.conjugate()):
        ran = (op.compression - probe * np.eye(n)) @ op.domain_basis
        sv = np.linalg.svd(ran, compute_uv=False)
        rank = int((sv > 1e-12 * sv[0]).sum())
        if n - rank != 1:
            raise ValueError(f"deficiency dimension at {probe} is {n - rank}, expected 1")
    xi = np.linalg.solve(op.compression - w.conjugate() * np.eye(n, dtype=complex), op.defect.astype(complex))
    xi = xi / np.linalg.norm(xi)
    pivot = int(np.argmax(np.abs(xi)))
    xi = xi * (xi[pivot].conjugate() / abs(xi[pivot]))
    vals = space.values(xi)
    if np.abs(vals).min() <= 1e-10 * np.abs(vals).max():
        raise ValueError("the defect vector vanishes at a point of the space")
    return xi


def _assert_simple_spectrum(matrix: np.ndarray, rel_gap: float = 1e-10) -> np.ndarray:
    eigs = np.linalg.eigvalsh(matrix)
    span = max(eigs[-1] - eigs[0], 1.0)
    if len(eigs) > 1 and np.diff(eigs).min() < rel_gap * span:
        raise ValueError(
            "the completion has a numerically repeated eigenvalue; perturb theta and retry"
        )
    return eigs


def selfadjoint_extension(space: FiniteRankSpace, op: MultiplicationOperator, theta: float) -> np.ndarray:
    """The self-adjoint completion of multiplication fixed by the free
    diagonal entry theta in the defect direction.

    A~(theta) = J + (theta - <J h0, h0>) h0 h0^T agrees with multiplication
    on D and sweeps the whole one-parameter family as theta runs over R.
    """
    if op.defect is None or op.dim_domain != space.n - 1:
        raise ValueError("the completion family requires dim D = n - 1")
    h0 = op.defect
    atil = op.compression + (float(theta) - h0 @ op.compression @ h0) * np.outer(h0, h0)
    _assert_simple_spectrum(atil)
    return atil


def extension_interlacing(space: FiniteRankSpace, op: MultiplicationOperator, theta1: float, theta2: float):
    """Sorted spectra of two completions; checks disjointness and strict interlacing."""
    e1 = np.linalg.eigvalsh(selfadjoint_extension(space, op, theta1))
    e2 = np.linalg.eigvalsh(selfadjoint_extension(space, op, theta2))
    span = max(e1[-1], e2[-1]) - min(e1[0], e2[0])
    gap = min(abs(a - b) for a in e1 for b in e2)
    merged = np.sort(np.concatenate([e1, e2]))
    labels = [0 if v in e1 else 1 for v in merged]
    alternating = all(labels[i] != labels[i + 1] for i in range(len(labels) - 1))
    return e1, e2, gap > 1e-12 * max(span, 1.0), alternating


@dataclass(frozen=True)
class SpectralMeasure:
    """Spectral measure of the completion at the defect vector."""

    atoms: np.ndarray
    masses: np.ndarray

    def total_mass(self) -> float:
        return float(self.masses.sum())


@dataclass
class KreinArtifacts:
    """Everything the pipeline produces, stage by stage."""

    space: FiniteRankSpace
    w: complex
    extension_param: float
    op: MultiplicationOperator
    xi: np.ndarray  # coordinates, unit norm
    xi_values: np.ndarray
    atil: np.ndarray
    atoms: np.ndarray  # eigenvalues of A~
    eigvecs: np.ndarray  # columns
    c: np.ndarray  # <xi, e_j>
    psi: SpectralMeasure
    lc: complex  # leading coefficient of the Psi numerator
    rho: np.ndarray  # weights of the entire-space kernel
    S: list[tuple[complex, int]] = field(default_factory=list)
    R_coeffs: np.ndarray | None = None  # monic, ascending, complex
    omega: complex = 1.0
    AB: tuple[RealEntireFunction, RealEntireFunction] | None = None
    E: HermiteBiehler | None = None
    phi: np.ndarray | None = None
    probes: tuple[float, float] | None = None
    residuals: dict = field(default_factory=dict)

    # -- scalar resolvent machinery -------------------------------------

    def _loo(self, t) -> np.ndarray:
        """Leave-one-out products m_j(t) = prod_{l != j} (atom_l - t)."""
        return _leave_one_out(self.atoms, t)

    def psi_numerator_at(self, t):
        """P(t) = sum_j mass_j (atom_j - w) m_j(t), so Psi = P / prod(atom - t)."""
        loo = self._loo(t)
        return np.tensordot(self.psi.masses * (self.atoms - self.w), loo, axes=(0, 0))

    def psi_at(self, lam: complex) -> complex:
        d = self.atoms - lam
        if np.abs(d).min() == 0.0:
            raise ZeroDivisionError("Psi has a pole at an eigenvalue of the completion")
        return complex((self.psi.masses * (self.atoms - self.w) / d).sum())

    def psi_numerator_coeffs(self) -> np.ndarray:
        coeffs = np.zeros(self.space.n, dtype=complex)
        sign = (-1.0) ** (self.space.n - 1)
        for j in range(self.space.n):
            mj = sign * npoly.polyfromroots(np.delete(self.atoms, j))
            coeffs += self.psi.masses[j] * (self.atoms[j] - self.w) * mj
        return coeffs

    def xspace_kernel(self, xs, ys) -> np.ndarray:
        """Kernel of the entire-function space on xs x ys (real or complex)."""
        mx = self._loo(xs)
        my = self._loo(ys)
        return (self.rho[:, None] * mx).T @ my

    def xspace_kernel_point(self, x, y):
        return (self.rho * self._loo(np.array([x]))[:, 0] * self._loo(np.array([y]))[:, 0]).sum()

    def report(self) -> dict:
        """Stage-by-stage JSON-ready report."""
        return {
            "dimD": int(self.op.dim_domain),
            "xi": [[v.real, v.imag] for v in self.xi_values],
            "S": [{"re": z.real, "im": z.imag, "mult": m} for z, m in self.S],
            "R_coeffs": [[c.real, c.imag] for c in self.R_coeffs],
            "omega": {"re": complex(self.omega).real, "im": complex(self.omega).imag},
            "A_coeffs": list(self.AB[0].coefficients),
            "B_coeffs": list(self.AB[1].coefficients),
            "phi": list(map(float, self.phi)),
            "residuals": dict(self.residuals),
        }


def _leave_one_out(x: np.ndarray, t) -> np.ndarray:
    """m_j(t) = prod_{l != j} (x_l - t) for all j, via prefix/suffix products."""
    t_arr = np.atleast_1d(np.asarray(t))
    diffs = x[:, None] - t_arr[None, :]
    n = len(x)
    pre = np.ones_like(diffs)
    suf = np.ones_like(diffs)
    for j in range(1, n):
        pre[j] = pre[j - 1] * diffs[j - 1]
        suf[n - 1 - j] = suf[n - j] * diffs[n - j]
    return pre * suf


def _spectral_data(space, op, xi, w, theta):
    atil = selfadjoint_extension(space, op, theta)
    atoms, eigvecs = np.linalg.eigh(atil)
    c = eigvecs.T @ xi
    masses = np.abs(c) ** 2
    if abs(masses.sum() - 1.0) > 1e-10:
        raise ValueError(f"spectral masses sum to {masses.sum()}, expected 1")
    if masses.min() <= 0.0:
        raise ValueError("the defect vector is orthogonal to an eigenvector")
    lc = (-1.0) ** (space.n - 1) * complex(masses @ atoms - w)
    rho = masses * np.abs(atoms - w) ** 2 / abs(lc) ** 2
    return KreinArtifacts(
        space=space,
        w=w,
        extension_param=float(theta),
        op=op,
        xi=xi,
        xi_values=space.values(xi),
        atil=atil,
        atoms=atoms,
        eigvecs=eigvecs,
        c=c,
        psi=SpectralMeasure(atoms=atoms, masses=masses),
        lc=lc,
        rho=rho,
    )


def krein_transform(space: FiniteRankSpace, art: KreinArtifacts, f, lam: complex) -> complex:
    """The scalar component of f along xi at lam:
    f - f_xi(lam) xi in Ran(A - lam).

    Evaluated as a ratio of two rational sums over the spectrum of the
    completion; at eigenvalues the removable limit f_j conj(c_j) / |c_j|^2 is
    used, and zeros of Psi raise :class:`KreinPoleError`.
    """
    f = np.asarray(f)
    lam = complex(lam)
    scale = max(1.0, float(np.abs(art.atoms).max()))
    for z, _mult in art.S or find_S(art):
        if abs(lam - z) < 1e-9 * scale:
            raise KreinPoleError(f"lam={lam} is a pole of the transform (zero of Psi at {z})")
    fj = art.eigvecs.T @ f
    d = art.atoms - lam
    near = np.abs(d).min()
    j = int(np.abs(d).argmin())
    if near < 1e-12 * scale:
        return complex(fj[j] * art.c[j].conjugate() / art.psi.masses[j])
    weights = (art.atoms - art.w) / d
    num = (fj * art.c.conjugate() * weights).sum()
    den = (art.psi.masses * weights).sum()
    return complex(num / den)


def _cluster_roots(roots: np.ndarray, radius: float) -> list[tuple[complex, int]]:
    out: list[tuple[complex, int]] = []
    for r in roots:
        for i, (z, mult) in enumerate(out):
            if abs(r - z) <= radius:
                out[i] = ((z * mult + r) / (mult + 1), mult + 1)
                break
        else:
            out.append((complex(r), 1))
    return out


def find_S(art: KreinArtifacts, cluster_radius: float = 1e-7) -> list[tuple[complex, int]]:
    """Zeros (with multiplicity) of Psi away from the spectrum.

    Companion-matrix roots of the degree n-1 numerator; asserts the zero set
    stays off the real axis and has full cardinality n - 1.
    """
    coeffs = art.psi_numerator_coeffs()
    if abs(coeffs[-1]) < 1e-13 * np.abs(coeffs).max():
        raise ValueError("Psi numerator dropped degree; the base point w looks real")
    roots = npoly.polyroots(coeffs)
    scale = max(1.0, float(np.abs(art.atoms).max()))
    clustered = _cluster_roots(roots, cluster_radius * scale)
    total = sum(m for _, m in clustered)
    if total != art.space.n - 1:
        raise ValueError(f"expected {art.space.n - 1} zeros of Psi, found {total}")
    if min(abs(z.imag) for z, _ in clustered) <= 1e-8:
        raise ValueError("a zero of Psi sits within 1e-8 of the real axis")
    return clustered


def parseval_check(space: FiniteRankSpace, art: KreinArtifacts, f, g) -> float:
    """| <f, g> - sum_j f_xi(atom_j) conj(g_xi(atom_j)) mass_j |."""
    f = np.asarray(f)
    g = np.asarray(g)
    fj = art.eigvecs.T @ f
    gj = art.eigvecs.T @ g
    f_at = fj * art.c.conjugate() / art.psi.masses
    g_at = gj * art.c.conjugate() / art.psi.masses
    lhs = np.vdot(g, f)  # sum f conj(g)
    rhs = (f_at * g_at.conjugate() * art.psi.masses).sum()
    return float(abs(lhs - rhs))


def canonical_R(art: KreinArtifacts) -> np.ndarray:
    """Monic polynomial with zero set S: the Psi numerator divided by its
    leading coefficient.  Has no real zeros by construction."""
    coeffs = art.psi_numerator_coeffs()
    return coeffs / coeffs[-1]


def extract_integrable_pair(kernel, y1: float, y2: float):
    """Solve K(x,y) = (A(x) B(y) - B(x) A(y)) / (x - y) from two kernel columns.

    For a real symmetric kernel with K(y1, y2) != 0 the unique recombination
    of the columns F_i(x) = K(x, y_i) (x - y_i) satisfying the identity is

        A = F_1 / sqrt|kappa|,   B = sign(kappa) F_2 / sqrt|kappa|,

    with kappa = K(y1, y2)(y1 - y2).  Returns (A, B, kappa) as callables.
    """
    if y1 == y2:
        raise ValueError("probes must be distinct")
    kappa = kernel(y1, y2) * (y1 - y2)
    if kappa == 0.0:
        raise ValueError("degenerate probes: the kernel vanishes at (y1, y2)")
    sk = math.sqrt(abs(kappa))
    sgn = 1.0 if kappa > 0 else -1.0
    a = lambda t: kernel(t, y1) * (t - y1) / sk
    b = lambda t: sgn * kernel(t, y2) * (t - y2) / sk
    return a, b, kappa


def _choose_probes(art: KreinArtifacts, skip: int = 0) -> tuple[float, float, float]:
    pts = art.space.points
    ku = art.xspace_kernel(pts, pts)
    scores = np.abs(ku * (pts[:, None] - pts[None, :]))
    order = np.argsort(scores, axis=None)[::-1]
    seen = 0
    for flat in order:
        i, j = np.unravel_index(flat, scores.shape)
        if i >= j or scores[i, j] == 0.0:
            continue
        if seen == skip:
            return float(pts[i]), float(pts[j]), float(ku[i, j] * (pts[i] - pts[j]))
        seen += 1
    raise ValueError("no usable probe pair: the kernel vanishes at every off-diagonal pair")


def extract_AB(
    space: FiniteRankSpace,
    art: KreinArtifacts,
    y1: float | None = None,
    y2: float | None = None,
    tolerance: float = 1e-9,
):
    """Integrable pair for the entire-space kernel, as real-coefficient
    polynomials of degree <= n (validated on a grid).

    Probes default to the off-diagonal point pair maximizing
    |K(y1,y2)(y1-y2)|; on a residual breach the next best pair is tried.
    """
    if (y1 is None) != (y2 is None):
        raise ValueError("provide both probe points or neither")
    n = space.n
    hull = (space.points.min(), space.points.max())
    pad = 0.25 * (hull[1] - hull[0] + 1.0)
    grid = np.unique(np.concatenate([space.points, np.linspace(hull[0] - pad, hull[1] + pad, 41)]))

    attempts = range(8) if y1 is None else (None,)
    last_resid = math.inf
    for attempt in attempts:
        if attempt is None:
            p1, p2 = float(y1), float(y2)
            kappa = float(art.xspace_kernel_point(p1, p2) * (p1 - p2))
            if kappa == 0.0:
                raise ValueError("degenerate probes: the kernel vanishes at (y1, y2)")
        else:
            p1, p2, kappa = _choose_probes(art, skip=attempt)
        sk = math.sqrt(abs(kappa))
        sgn = 1.0 if kappa > 0 else -1.0

        col1 = art.rho * art._loo(np.array([p1]))[:, 0]
        col2 = art.rho * art._loo(np.array([p2]))[:, 0]
        sign = (-1.0) ** (n - 1)
        k1 = np.zeros(n)
        k2 = np.zeros(n)
        for j in range(n):
            mj = sign * npoly.polyfromroots(np.delete(art.atoms, j)).real
            k1 += col1[j] * mj
            k2 += col2[j] * mj
        a_coeffs = npoly.polymul(k1, [-p1, 1.0]) / sk
        b_coeffs = sgn * npoly.polymul(k2, [-p2, 1.0]) / sk

        def a_eval(t, _col=col1, _p1=p1, _sk=sk):
            return np.tensordot(_col, art._loo(t), axes=(0, 0)) * (np.asarray(t) - _p1) / _sk

        def b_eval(t, _col=col2, _p2=p2, _sk=sk, _sgn=sgn):
            return _sgn * np.tensordot(_col, art._loo(t), axes=(0, 0)) * (np.asarray(t) - _p2) / _sk

        kg = art.xspace_kernel(grid, grid)
        pair = (a_eval(grid), b_eval(grid))
        num = pair[0][:, None] * pair[1][None, :] - pair[1][:, None] * pair[0][None, :]
        dx = grid[:, None] - grid[None, :]
        mask = np.abs(dx) > 1e-9
        floor = 1e-6 * np.abs(kg).max()
        resid = np.abs(num[mask] / dx[mask] - kg[mask]) / np.maximum(np.abs(kg[mask]), floor)
        last_resid = float(resid.max())
        if last_resid <= tolerance:
            a_fn = RealEntireFunction(
                lambda z, _e=a_eval: complex(_e(complex(z))) if np.isscalar(z) or isinstance(z, complex) else _e(z),
                f"kernel column through y1={p1}",
                coefficients=tuple(a_coeffs),
            )
            b_fn = RealEntireFunction(
                lambda z, _e=b_eval: complex(_e(complex(z))) if np.isscalar(z) or isinstance(z, complex) else _e(z),
                f"kernel column through y2={p2}",
                coefficients=tuple(b_coeffs),
            )
            art.probes = (p1, p2)
            art.residuals["integrable_pair"] = last_resid
            return a_fn, b_fn
    raise ValueError(f"integrable-pair residual {last_resid:.3e} exceeds {tolerance} for every probe pair")


def omega_symmetrize(ab, tolerance: float = 1e-11):
    """Unimodular constant Omega = sqrt(conj(c)/c) making the pair real.

    Verifies that the (polynomial) pair has no common zero and that each
    root set is closed under conjugation, then returns Omega and the
    real-coefficient pair.
    """
    a_coeffs = np.asarray(ab[0].coefficients if isinstance(ab[0], RealEntireFunction) else ab[0], dtype=complex)
    b_coeffs = np.asarray(ab[1].coefficients if isinstance(ab[1], RealEntireFunction) else ab[1], dtype=complex)
    scale = max(np.abs(a_coeffs).max(), np.abs(b_coeffs).max())
    width = max(len(a_coeffs), len(b_coeffs))
    a_pad = np.pad(a_coeffs, (0, width - len(a_coeffs)))
    b_pad = np.pad(b_coeffs, (0, width - len(b_coeffs)))
    cos_angle = abs(np.vdot(a_pad, b_pad)) / (np.linalg.norm(a_pad) * np.linalg.norm(b_pad))
    if cos_angle > 1.0 - 1e-12:
        raise ValueError("degenerate pair: the two columns are collinear")
    ra = npoly.polyroots(a_coeffs)
    rb = npoly.polyroots(b_coeffs)
    if len(ra) and len(rb):
        gap = min(abs(x - y) for x in ra for y in rb)
        if gap < 1e-8:
            raise ValueError("the pair shares a zero: the kernel would vanish identically at it")
    for roots in (ra, rb):
        unmatched = list(roots[np.abs(roots.imag) > 1e-9])
        while unmatched:
            z = unmatched.pop()
            dist = [abs(z.conjugate() - u) for u in unmatched]
            if not dist or min(dist) > 1e-6 * max(1.0, abs(z)):
                raise ValueError(f"nonreal zeros do not come in conjugate pairs (offender {z})")
            unmatched.pop(int(np.argmin(dist)))
    out = []
    omega = None
    for coeffs in (a_coeffs, b_coeffs):
        lead = coeffs[np.abs(coeffs) > 1e-14 * scale][-1]
        om = cmath.sqrt(lead.conjugate() / lead)
        if omega is None:
            omega = om
        real = coeffs * omega
        if np.abs(real.imag).max() > tolerance * scale:
            # the square root branch may differ by a sign between A and B
            real = coeffs * (-omega)
            if np.abs(real.imag).max() > tolerance * scale:
                raise ValueError("symmetrized coefficients are not real to 1e-11")
        out.append(RealEntireFunction.from_coefficients(real.real))
    return omega, (out[0], out[1])


def assemble_E_phi(space: FiniteRankSpace, art: KreinArtifacts, tolerance: float = 1e-9):
    """Final stage: the Hermite-Biehler pair E and the multiplier Phi with
    K_H(t_i, t_j) = Phi(t_i) K_E(t_i, t_j) Phi(t_j) entrywise.

    Phi is xi / (R Omega) evaluated through the numerator of Psi (no root
    finding), then rotated by a unimodular constant to be real.
    """
    if art.AB is None:
        art.AB = extract_AB(space, art)
        art.omega, art.AB = omega_symmetrize(art.AB)
    a_fn, b_fn = art.AB
    hb = HermiteBiehler(A=a_fn, B=b_fn)
    samples = [complex(x, y) for x in np.linspace(space.points.min(), space.points.max(), 5) for y in (0.3, 1.5)]
    rep = hb_check(hb, samples)
    if not rep.passed:
        raise ValueError(f"assembled pair fails the Hermite-Biehler margin: {rep.min_margin:.3e}")
    # Phi = lc * xi / (P * Omega); P evaluated by stable products
    pvals = art.psi_numerator_at(space.points.astype(complex))
    phi_raw = art.lc * art.xi_values / (pvals * art.omega)
    pivot = phi_raw[np.argmax(np.abs(phi_raw))]
    phi = phi_raw * (pivot.conjugate() / abs(pivot))
    im_part = float(np.abs(phi.imag).max() / np.abs(phi).max())
    if im_part > 1e-9:
        raise ValueError(f"multiplier is not real after phase normalization (residual {im_part:.3e})")
    phi = phi.real
    if np.abs(phi).min() == 0.0:
        raise ValueError("multiplier vanishes at a point")
    kh = space.kernel_matrix()
    ke = art.xspace_kernel(space.points, space.points)
    resid = float(np.abs(kh - phi[:, None] * ke * phi[None, :]).max() / np.abs(kh).max())
    if resid > tolerance:
        raise ValueError(f"entrywise factorization residual {resid:.3e} exceeds {tolerance}")
    art.E = hb
    art.phi = phi
    art.residuals["factorization"] = resid
    return hb, Multiplier(values=dict(zip(map(float, space.points), map(float, phi))), descriptor="pipeline"), resid


def run_pipeline(
    space: FiniteRankSpace,
    w: complex = 1j,
    theta: float = 0.0,
    seed: int = 0,
) -> KreinArtifacts:
    """Execute every stage on a finite-rank space, asserting each invariant.

    Raises :class:`PipelineStageError` naming the first failing stage.
    """
    rng = np.random.default_rng(seed)

    def stage(name, fn):
        try:
            return fn()
        except (ValueError, np.linalg.LinAlgError) as exc:
            raise PipelineStageError(name, str(exc)) from exc

    stage("space_validation", space.validate)

    def spot_division():
        kh = space.kernel_matrix()
        diag = np.diag(kh)
        for idx in range(min(space.m, 3)):
            f = rng.standard_normal(space.n)
            f = f - (space.values(f)[idx] / diag[idx]) * space.basis[:, idx]
            if np.linalg.norm(f) < 1e-8:
                continue
            res = division_check(space, f, float(space.points[idx]))
            if not res.passed:
                raise ValueError(
                    f"division by (t - {space.points[idx]}) fails with residual {res.residual:.3e}"
                )

    stage("division_check", spot_division)
    op = stage("mult_domain", lambda: mult_domain(space))
    if op.dim_domain != space.n - 1:
        raise PipelineStageError("mult_domain", f"dim D = {op.dim_domain}, pipeline requires n - 1")
    xi = stage("deficiency_subspace", lambda: deficiency_subspace(space, op, w))
    art = stage("selfadjoint_extension", lambda: _spectral_data(space, op, xi, complex(w), theta))
    if abs(art.psi_at(complex(w)) - 1.0) > 1e-10:
        raise PipelineStageError("spectral_measure", "Psi(w) != 1 for the normalized defect vector")
    art.S = stage("find_S", lambda: find_S(art))
    art.R_coeffs = stage("canonical_R", lambda: canonical_R(art))

    def parseval_spot():
        worst = 0.0
        for _ in range(4):
            f = rng.standard_normal(space.n)
            g = rng.standard_normal(space.n)
            worst = max(worst, parseval_check(space, art, f, g) / (np.linalg.norm(f) * np.linalg.norm(g)))
        if worst > 1e-10:
            raise ValueError(f"Parseval residual {worst:.3e} exceeds 1e-10")
        art.residuals["parseval"] = worst

    stage("parseval", parseval_spot)
    ab = stage("extract_AB", lambda: extract_AB(space, art))
    art.omega, art.AB = stage("omega_symmetrize", lambda: omega_symmetrize(ab))
    stage("assemble_E_phi", lambda: assemble_E_phi(space, art))
    return art


# -- closed-form transform for the discrete sine family ------------------


class DiscreteSineTransform(NamedTuple):
    value: complex
    r_normalized: complex


def _band_fourier(b: float, f: Mapping[int, float], lam: complex, method: str) -> complex:
    """(1/sqrt(2 pi)) * integral over [-b, b] of (sum f_n e^{inx}) e^{-i lam x} dx."""
    if method == "analytic":
        total = 0.0 + 0.0j
        for n, fn in f.items():
            u = n - lam
            z = b * u
            if abs(z) < 1e-8:
                core = 2.0 * b * (1.0 - z * z / 6.0)
            else:
                core = 2.0 * cmath.sin(z) / u
            total += fn * core
        return total / math.sqrt(2.0 * math.pi)
    if method != "quad":
        raise ValueError(f"unknown method {method!r}")

    def wf(x):
        return sum(fn * cmath.exp(1j * n * x) for n, fn in f.items())

    def integrand(x, pick):
        v = wf(x) * cmath.exp(-1j * lam * x)
        return v.real if pick == 0 else v.imag

    out = 0.0 + 0.0j
    for pick, unit in ((0, 1.0), (1, 1j)):
        val, err, info = integrate.quad(integrand, -b, b, args=(pick,), epsabs=1e-13, epsrel=1e-12, limit=400, full_output=True)[:3]
        if err > 1e-9 * max(1.0, abs(val)):
            raise ArithmeticError(f"quadrature did not converge (error estimate {err:.3e})")
        out += unit * val
    return out / math.sqrt(2.0 * math.pi)


def discrete_sine_fxi(
    b: float,
    w: complex,
    f: Mapping[int, float],
    lam: complex,
    method: str = "quad",
) -> DiscreteSineTransform:
    """Closed-form scalar transform of the discrete sine family.

    value = sqrt(2 pi) (W f)^(lam) (wbar - lam) / (2 sin(b (wbar - lam)));
    the second slot is the canonical-product normalization
    (1/b) sqrt(pi/2) (W f)^(lam), which is entire in lam.

    The point lam = wbar is removable; other zeros of sin(b(wbar - lam))
    raise :class:`KreinPoleError`.
    """
    if not (0.0 < b < math.pi / 2):
        raise ValueError(f"discrete sine band must satisfy 0 < b < pi/2, got {b!r}")
    w = complex(w)
    if w.imag == 0.0:
        raise ValueError(f"the base point must be nonreal, got {w!r}")
    lam = complex(lam)
    hat = _band_fourier(b, f, lam, method)
    u = w.conjugate() - lam
    z = b * u
    if abs(z) < 1e-6:
        # u / sin(b u) -> 1/b with the sinc-inverse series
        pref = (1.0 + z * z / 6.0 + 7.0 * z**4 / 360.0) / (2.0 * b)
    else:
        s = cmath.sin(z)
        if abs(s) < 1e-12 * max(1.0, abs(z)):
            raise KreinPoleError(f"lam={lam} is a zero of Psi for the discrete sine family")
        pref = u / (2.0 * s)
    value = math.sqrt(2.0 * math.pi) * hat * pref
    r_normalized = math.sqrt(math.pi / 2.0) / b * hat
    return DiscreteSineTransform(value, r_normalized)
