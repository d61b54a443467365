"""Correlation-kernel families and generic kernel-matrix utilities.

The sine and discrete-sine kernels are closed-form; the Bessel kernel is
built on the entire series from :mod:`debranges.specfun`, with the removable
singularity on the diagonal handled by a complex-step derivative of the
numerator.  ``normality_witness`` produces the pair of band-limited functions
whose pointwise domination fails to control the norm ratio.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from . import spaces, specfun

__all__ = [
    "KernelSpec",
    "KernelMatrix",
    "PsdReport",
    "NormalityWitness",
    "discrete_sine_eval",
    "continuous_sine_eval",
    "bessel_eval",
    "kernel_grid",
    "psd_check",
    "normality_witness",
    "kernel_matrix_csv",
]

# |x - y| below this (times max(1,|x|)) routes bessel_eval to the
# complex-step limit path; the direct quotient loses ~6 digits there.
_DIAGONAL_SWITCH = 1e-6

_FAMILIES = ("continuous_sine", "discrete_sine", "bessel", "debranges_derived")


@dataclass(frozen=True)
class KernelSpec:
    """Parameters of one kernel family.

    ``allow_wide_b`` relaxes the discrete-sine band to (0, pi); the default
    range is (0, pi/2).
    """

    family: str
    b: float | None = None
    s: float | None = None
    hb: "spaces.HermiteBiehler | None" = None
    multiplier: "spaces.Multiplier | None" = None
    scale: float = 1.0
    allow_wide_b: bool = False

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}; expected one of {_FAMILIES}")
        if self.family == "discrete_sine":
            hi = math.pi if self.allow_wide_b else math.pi / 2
            if self.b is None or not (0.0 < self.b < hi):
                raise ValueError(
                    f"discrete_sine requires b in (0, {'pi' if self.allow_wide_b else 'pi/2'}), got {self.b!r}"
                )
        elif self.family == "continuous_sine":
            if self.b is None or not (self.b > 0.0 and math.isfinite(self.b)):
                raise ValueError(f"continuous_sine requires b > 0, got {self.b!r}")
        elif self.family == "bessel":
            if self.s is None or not (self.s > -1.0 and math.isfinite(self.s)):
                raise ValueError(f"bessel requires s > -1, got {self.s!r}")
        else:  # debranges_derived
            if self.hb is None or self.multiplier is None:
                raise ValueError("debranges_derived requires an HermiteBiehler pair and a multiplier")

    def evaluate(self, x: float, y: float) -> float:
        if self.family == "discrete_sine":
            return discrete_sine_eval(self.b, x, y, allow_wide_b=self.allow_wide_b)
        if self.family == "continuous_sine":
            return continuous_sine_eval(self.b, x, y)
        if self.family == "bessel":
            return bessel_eval(self.s, x, y)
        k = spaces.db_kernel_eval(self.hb, x, y)
        return self.scale * self.multiplier(x) * k * self.multiplier(y)


@dataclass(frozen=True)
class KernelMatrix:
    """Symmetric kernel values on an ordered point set."""

    points: np.ndarray
    entries: np.ndarray
    family: str | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        ent = np.asarray(self.entries, dtype=float)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "entries", ent)
        if ent.shape != (len(pts), len(pts)):
            raise ValueError(f"entries shape {ent.shape} does not match {len(pts)} points")
        scale = np.abs(ent).max() if ent.size else 0.0
        if ent.size and np.abs(ent - ent.T).max() > 1e-14 * max(scale, 1e-300):
            raise ValueError("kernel matrix is not symmetric to 1e-14")


def discrete_sine_eval(b: float, m, n, allow_wide_b: bool = False) -> float:
    """sin(b(m-n)) / (pi (m-n)) on integers, b/pi on the diagonal."""
    hi = math.pi if allow_wide_b else math.pi / 2
    if not (0.0 < b < hi):
        raise ValueError(f"discrete sine band must satisfy 0 < b < {'pi' if allow_wide_b else 'pi/2'}, got {b!r}")
    d = float(m) - float(n)
    if d == 0.0:
        return b / math.pi
    return math.sin(b * d) / (math.pi * d)


def continuous_sine_eval(b: float, x: float, y: float) -> float:
    """sin(b(x-y)) / (pi (x-y)), b/pi on the diagonal."""
    if not (b > 0.0 and math.isfinite(b)):
        raise ValueError(f"continuous sine band must satisfy b > 0, got {b!r}")
    d = float(x) - float(y)
    if d == 0.0:
        return b / math.pi
    return math.sin(b * d) / (math.pi * d)


def _bessel_numerator(s: float, t, y: float):
    # g(t) = t j_{s+1}(t) j_s(y) - y j_{s+1}(y) j_s(t); entire in t, g(y) = 0
    return (
        t * specfun.entire_bessel(s + 1.0, t) * specfun.entire_bessel(s, y)
        - y * specfun.entire_bessel(s + 1.0, y) * specfun.entire_bessel(s, t)
    )


def bessel_eval(s: float, x: float, y: float) -> float:
    """(sqrt(x) J_{s+1}(sqrt x) J_s(sqrt y) - sqrt(y) J_{s+1}(sqrt y) J_s(sqrt x)) / (2(x-y)).

    Written through the entire functions j_s of t = x, so the prefactor
    x**(s/2) y**(s/2) is exact and the diagonal limit is the complex-step
    derivative of the entire numerator at the midpoint.
    """
    if not (s > -1.0 and math.isfinite(s)):
        raise ValueError(f"bessel order must satisfy s > -1, got {s!r}")
    x = float(x)
    y = float(y)
    if not (x > 0.0 and y > 0.0 and math.isfinite(x) and math.isfinite(y)):
        raise ValueError(f"bessel kernel requires x, y > 0, got x={x!r}, y={y!r}")
    pref = x ** (s / 2.0) * y ** (s / 2.0)
    if abs(x - y) < _DIAGONAL_SWITCH * max(1.0, abs(x)):
        mid = 0.5 * (x + y)
        deriv = specfun.complex_step_derivative(lambda t: _bessel_numerator(s, t, mid), mid)
        return pref * deriv / 2.0
    return pref * _bessel_numerator(s, x, y) / (2.0 * (x - y))


def kernel_grid(spec: KernelSpec, points: Sequence[float]) -> KernelMatrix:
    """Symmetric matrix of pairwise kernel values on distinct points."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 1 or pts.size == 0:
        raise ValueError("points must be a nonempty 1-d sequence")
    if not np.isfinite(pts).all():
        raise ValueError("points must be finite")
    if len(np.unique(pts)) != len(pts):
        raise ValueError("points must be distinct")
    n = len(pts)
    entries = np.empty((n, n))
    for i in range(n):
        entries[i, i] = spec.evaluate(pts[i], pts[i])
        for j in range(i + 1, n):
            v = spec.evaluate(pts[i], pts[j])
            entries[i, j] = v
            entries[j, i] = v
    return KernelMatrix(points=pts, entries=entries, family=spec.family)


class PsdReport(NamedTuple):
    min_eigenvalue: float
    max_eigenvalue: float
    tolerance: float
    passed: bool

    def to_json(self) -> dict:
        return {
            "check": "psd",
            "min_eigenvalue": self.min_eigenvalue,
            "max_eigenvalue": self.max_eigenvalue,
            "tolerance": self.tolerance,
            "pass": self.passed,
        }


def psd_check(kmat: KernelMatrix) -> PsdReport:
    """Positive-semidefiniteness at tolerance -1e-10 * spectral radius.

    For sine families the truncation must also be a contraction:
    max eigenvalue <= 1 + 1e-10.
    """
    try:
        eigs = np.linalg.eigvalsh(kmat.entries)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"eigensolver failed on {kmat.entries.shape} kernel matrix") from exc
    radius = float(np.abs(eigs).max()) if eigs.size else 0.0
    tol = -1e-10 * radius
    ok = bool(eigs.min() >= tol) if eigs.size else True
    if kmat.family in ("continuous_sine", "discrete_sine"):
        ok = ok and bool(eigs.max() <= 1.0 + 1e-10)
    return PsdReport(float(eigs.min()), float(eigs.max()), tol, ok)


class NormalityWitness(NamedTuple):
    n: int
    pointwise_ratio_bound: float
    norm_ratio: float


def normality_witness(n: int, grid_points: int = 2001, half_width: float = 1e4, step: float = 1e-2) -> NormalityWitness:
    """Witness pair for the failure of norm domination under pointwise domination.

    With e_k(x) = sin(pi x)/(x - k): on [-1, 1] the bound
    (n-1)|e_n| <= |e_0| holds pointwise, while the band-limited norms satisfy
    ||(n-1) e_n|| = (n-1) ||e_0||.  Returns the grid maximum of the pointwise
    ratio and the raw norm ratio ||(n-1)e_n|| / ||e_0||.
    """
    if n < 2:
        raise ValueError(f"normality witness requires n >= 2, got {n}")
    xs = np.linspace(-1.0, 1.0, grid_points)
    # sin(pi x) = pi x sinc(x); e_0 has the removable value pi at x = 0
    e0 = np.pi * np.sinc(xs)
    en = np.pi * xs * np.sinc(xs) / (xs - n)
    ratio = float(np.max(np.abs(en) * (n - 1) / np.abs(e0)))

    # L2(R) norms by trapezoid on [-R, R]; |e_n(x)|^2 = pi^2 sinc(x - n)^2
    # by the shift identity sin(pi x)^2 = sin(pi (x - n))^2, which also
    # removes the on-grid singularity at x = n.
    grid = np.arange(-half_width, half_width + step / 2.0, step)
    nn = np.trapezoid((np.pi * np.sinc(grid - n)) ** 2, dx=step)
    n0 = np.trapezoid((np.pi * np.sinc(grid)) ** 2, dx=step)
    return NormalityWitness(n, ratio, float((n - 1) * math.sqrt(nn / n0)))


def kernel_matrix_csv(kmat: KernelMatrix) -> str:
    """CSV serialization: header ``x,y,K``, one row per ordered pair, 17 significant digits."""
    buf = io.StringIO()
    buf.write("x,y,K\n")
    for i, x in enumerate(kmat.points):
        for j, y in enumerate(kmat.points):
            buf.write(f"{x:.17g},{y:.17g},{kmat.entries[i, j]:.17g}\n")
    return buf.getvalue()
