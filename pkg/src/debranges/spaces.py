"""Hermite-Biehler pairs, their reproducing kernels, and the two structure checks.

An ``HermiteBiehler`` value holds two real entire functions A, B with
E = A + iB; its kernel in integrable form is

    K(x, y) = (A(x) B(y) - B(x) A(y)) / (x - y)

with the removable value A'(y)B(y) - B'(y)A(y) on the diagonal.
``factorization_check`` verifies K(x,y) = c Phi(x) K_E(x,y) Phi(y) against an
arbitrary kernel evaluator, and ``gauge_check`` recovers the zero-free gauge
W relating two pairs with the same factorized kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, NamedTuple, Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly

from . import specfun

__all__ = [
    "RealEntireFunction",
    "HermiteBiehler",
    "Multiplier",
    "sine_hb",
    "bessel_hb",
    "default_uhp_samples",
    "hb_check",
    "db_kernel_eval",
    "factorization_check",
    "gauge_check",
    "HbReport",
    "FactorizationReport",
    "GaugeReport",
]

# Same removable-singularity radius as the kernels module.
_DIAGONAL_SWITCH = 1e-6


@dataclass(frozen=True)
class RealEntireFunction:
    """An evaluable entire function, real on the real axis.

    ``descriptor`` identifies the closed form; polynomial instances carry
    their (real) coefficient list in ascending order.
    """

    fn: Callable[[complex], complex]
    descriptor: str
    coefficients: tuple[float, ...] | None = None

    def __call__(self, z):
        return self.fn(z)

    @classmethod
    def from_coefficients(cls, coefficients, descriptor: str | None = None) -> "RealEntireFunction":
        coeffs = tuple(float(c) for c in coefficients)
        arr = np.asarray(coeffs)
        return cls(
            fn=lambda z: npoly.polyval(z, arr),
            descriptor=descriptor or f"polynomial(degree={len(coeffs) - 1})",
            coefficients=coeffs,
        )

    def reality_defect(self, sample_points: Sequence[float] | None = None) -> float:
        """Max relative imaginary part on real samples plus the conjugate-symmetry gap."""
        xs = sample_points if sample_points is not None else np.linspace(-5.0, 5.0, 11)
        worst = 0.0
        for x in xs:
            v = complex(self.fn(complex(x)))
            worst = max(worst, abs(v.imag) / max(1.0, abs(v)))
        for z in (0.3 + 1.1j, -2.0 + 0.7j, 4.0 - 2.5j):
            a = complex(self.fn(z.conjugate()))
            b = complex(self.fn(z)).conjugate()
            worst = max(worst, abs(a - b) / max(1.0, abs(b)))
        return worst


@dataclass(frozen=True)
class HermiteBiehler:
    """Pair (A, B) of real entire functions with E = A + iB."""

    A: RealEntireFunction
    B: RealEntireFunction

    def E(self, z):
        return complex(self.A(z)) + 1j * complex(self.B(z))


@dataclass(frozen=True)
class Multiplier:
    """Nonvanishing weight on the kernel's domain: a closed form or a value table."""

    fn: Callable[[float], float] | None = None
    values: Mapping[float, float] | None = None
    descriptor: str = "multiplier"

    def __post_init__(self):
        if (self.fn is None) == (self.values is None):
            raise ValueError("provide exactly one of fn or values")

    def __call__(self, x: float) -> float:
        if self.fn is not None:
            v = float(self.fn(x))
        else:
            try:
                v = float(self.values[x])
            except KeyError:
                raise KeyError(f"multiplier has no value at x={x!r}") from None
        if v == 0.0:
            raise ValueError(f"multiplier vanishes at x={x!r}")
        return v

    @classmethod
    def constant(cls, c: float) -> "Multiplier":
        return cls(fn=lambda x: c, descriptor=f"constant({c!r})")

    @classmethod
    def power(cls, exponent: float) -> "Multiplier":
        return cls(fn=lambda x: x**exponent, descriptor=f"x**{exponent}")


def sine_hb(b: float) -> HermiteBiehler:
    """E(z) = e^{-ibz} as the pair (cos bz, -sin bz); kernel sin(b(x-y))/(x-y)."""
    if not (b > 0.0 and math.isfinite(b)):
        raise ValueError(f"sine pair requires b > 0, got {b!r}")
    import cmath

    return HermiteBiehler(
        A=RealEntireFunction(lambda z: cmath.cos(b * z), f"cos({b}*z)"),
        B=RealEntireFunction(lambda z: -cmath.sin(b * z), f"-sin({b}*z)"),
    )


def bessel_hb(s: float) -> HermiteBiehler:
    """The Bessel-family pair A(t) = (pi/sqrt 2) t j_{s+1}(sqrt t), B(t) = (pi/sqrt 2) j_s(sqrt t)."""
    if not (s > -1.0 and math.isfinite(s)):
        raise ValueError(f"bessel pair requires s > -1, got {s!r}")
    c = math.pi / math.sqrt(2.0)
    return HermiteBiehler(
        A=RealEntireFunction(lambda t: c * t * specfun.entire_bessel(s + 1.0, t), f"(pi/sqrt2)*t*j[{s + 1}](sqrt t)"),
        B=RealEntireFunction(lambda t: c * specfun.entire_bessel(s, t), f"(pi/sqrt2)*j[{s}](sqrt t)"),
    )


def default_uhp_samples() -> list[complex]:
    """Default upper-half-plane sample set for hb_check."""
    return [complex(x, y) for x in (-8.0, -3.0, -0.7, 0.4, 1.5, 5.0, 9.0) for y in (0.25, 1.0, 3.0)]


class HbReport(NamedTuple):
    min_margin: float
    passed: bool
    samples: tuple[complex, ...]

    def to_json(self) -> dict:
        return {
            "check": "hermite_biehler",
            "parameters": {"margin": self.min_margin},
            "grid": [[z.real, z.imag] for z in self.samples],
            "residual": self.min_margin,
            "pass": self.passed,
        }


def hb_check(hb: HermiteBiehler, samples: Sequence[complex] | None = None) -> HbReport:
    """min over samples of |E(z)| - |E(conj z)|; passes iff positive at every sample."""
    pts = tuple(samples) if samples is not None else tuple(default_uhp_samples())
    if any(z.imag <= 0 for z in pts):
        raise ValueError("all samples must have positive imaginary part")
    margin = math.inf
    for z in pts:
        margin = min(margin, abs(hb.E(z)) - abs(hb.E(z.conjugate())))
    return HbReport(margin, margin > 0.0, pts)


def db_kernel_eval(hb: HermiteBiehler, x: float, y) -> float | complex:
    """Reproducing kernel of the pair in integrable form.

    Real y: (A(x)B(y) - B(x)A(y)) / (x - y), with the complex-step limit
    near the diagonal.  Complex y uses the conjugated extension
    (A(x) conj B(y) - B(x) conj A(y)) / (x - conj y).
    """
    x = float(x)
    yc = complex(y)
    if yc.imag != 0.0:
        num = complex(hb.A(x)) * complex(hb.B(yc)).conjugate() - complex(hb.B(x)) * complex(hb.A(yc)).conjugate()
        return num / (x - yc.conjugate())
    yr = yc.real
    if abs(x - yr) < _DIAGONAL_SWITCH * max(1.0, abs(x)):
        mid = 0.5 * (x + yr)
        wronskian = lambda t: hb.A(t) * complex(hb.B(mid)).real - hb.B(t) * complex(hb.A(mid)).real
        return specfun.complex_step_derivative(wronskian, mid)
    num = complex(hb.A(x)).real * complex(hb.B(yr)).real - complex(hb.B(x)).real * complex(hb.A(yr)).real
    return num / (x - yr)


class FactorizationReport(NamedTuple):
    c: float
    max_relative_residual: float
    tolerance: float
    passed: bool
    grid: tuple[float, ...]

    def to_json(self) -> dict:
        return {
            "check": "factorization",
            "parameters": {"c": self.c, "tolerance": self.tolerance},
            "grid": list(self.grid),
            "residual": self.max_relative_residual,
            "pass": self.passed,
        }


def factorization_check(
    kernel: Callable[[float, float], float],
    phi: Multiplier,
    hb: HermiteBiehler,
    grid: Sequence[float],
    fit_constant: bool = False,
    tolerance: float = 1e-9,
) -> FactorizationReport:
    """Residual of K(x,y) = c Phi(x) K_E(x,y) Phi(y) over all grid pairs.

    With ``fit_constant`` the overall constant c is read off at the first
    off-diagonal pair whose factorized side does not vanish, otherwise c = 1.
    Residuals are relative to max(|K(x,y)|, 1e-6 * max |K|) so that entries at
    accidental kernel zeros are compared at the grid scale.
    """
    pts = [float(g) for g in grid]
    if len(pts) < 2:
        raise ValueError("factorization grid needs at least two points")
    n = len(pts)
    K = np.empty((n, n))
    F = np.empty((n, n))
    phiv = np.array([phi(x) for x in pts])
    for i in range(n):
        for j in range(n):
            K[i, j] = kernel(pts[i], pts[j])
            F[i, j] = phiv[i] * float(db_kernel_eval(hb, pts[i], pts[j])) * phiv[j]
    c = 1.0
    if fit_constant:
        scale_f = np.abs(F).max()
        for i in range(n):
            for j in range(n):
                if i != j and abs(F[i, j]) > 1e-8 * scale_f:
                    c = K[i, j] / F[i, j]
                    break
            else:
                continue
            break
        else:
            raise ValueError("cannot fit the constant: the factorized kernel vanishes at every off-diagonal pair")
    floor = 1e-6 * max(np.abs(K).max(), 1e-300)
    resid = float(np.max(np.abs(K - c * F) / np.maximum(np.abs(K), floor)))
    return FactorizationReport(float(c), resid, tolerance, resid <= tolerance, tuple(pts))


class GaugeReport(NamedTuple):
    w_samples: tuple[float, ...]
    constancy_residual: float
    zero_free: bool
    grid: tuple[float, ...]

    def to_json(self) -> dict:
        return {
            "check": "gauge",
            "parameters": {"probes_per_point": 4},
            "grid": list(self.grid),
            "residual": self.constancy_residual,
            "w_samples": list(self.w_samples),
            "pass": bool(self.constancy_residual <= 1e-8 and self.zero_free),
        }


def gauge_check(hb1: HermiteBiehler, hb2: HermiteBiehler, grid: Sequence[float], probes: int = 4) -> GaugeReport:
    """Recover the gauge W with K_1(x,y) = W(x) K_2(x,y) W(y) and test its constancy.

    For each y the candidates for W(y)^2 are the diagonal ratio
    K_1(y,y)/K_2(y,y) and the two-point probes r(x,y)^2 / r(x,x); the
    constancy residual is the relative spread of the candidates, maximized
    over y.  |W| is reported from the positive square root.
    """
    pts = [float(g) for g in grid]
    if len(pts) < probes + 1:
        raise ValueError(f"gauge grid needs at least {probes + 1} points")
    k1 = lambda a, b: float(db_kernel_eval(hb1, a, b))
    k2 = lambda a, b: float(db_kernel_eval(hb2, a, b))
    diag2 = [k2(y, y) for y in pts]
    scale2 = max(abs(v) for v in diag2)
    w_sq: list[float] = []
    worst = 0.0
    for iy, y in enumerate(pts):
        cands = []
        if abs(diag2[iy]) > 1e-12 * scale2:
            cands.append(k1(y, y) / diag2[iy])
        # probe at the best-correlated points: weak correlation amplifies
        # rounding in the squared two-point ratio
        corr = []
        for ix, x in enumerate(pts):
            if ix == iy or abs(diag2[ix]) < 1e-12 * scale2:
                continue
            c = abs(k2(x, y)) / math.sqrt(abs(diag2[ix] * diag2[iy]))
            if c > 1e-3:
                corr.append((c, x, ix))
        corr.sort(reverse=True)
        for _c, x, ix in corr[:probes]:
            r_xy = k1(x, y) / k2(x, y)
            r_xx = k1(x, x) / diag2[ix]
            if abs(r_xx) < 1e-300:
                continue
            cands.append(r_xy**2 / r_xx)
        if not cands:
            raise ValueError(f"all gauge probes degenerate at y={y}")
        mid = float(np.median(cands))
        spread = (max(cands) - min(cands)) / max(abs(mid), 1e-300)
        worst = max(worst, spread)
        w_sq.append(mid)
    w = tuple(math.sqrt(abs(v)) for v in w_sq)
    zero_free = all(v > 1e-10 for v in w)
    return GaugeReport(w, float(worst), zero_free, tuple(pts))
