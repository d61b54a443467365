"""Sampling of determinantal processes from finite kernel truncations and
Monte-Carlo verification of the defining determinant identity.

The sampler is the classical two-phase algorithm: an independent Bernoulli
draw over the eigenvectors (probability = eigenvalue), then sequential point
selection with Gram-Schmidt deflation of the selected frame.  Randomness
comes from a counter-based Philox generator keyed by the seed, with one row
of uniforms per trial, so trials are reproducible and order-independent.
The per-trial loop is JIT-compiled when numba is importable and falls back
to the same pure-Python code otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .kernels import KernelMatrix, KernelSpec

try:
    from numba import njit as _njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    _njit = None

__all__ = [
    "PointConfiguration",
    "TestFunction",
    "truncate",
    "dpp_sample",
    "sample_occupancy",
    "samples_jsonl",
    "expectation_product",
    "mc_estimate",
    "empirical_intensity",
    "McReport",
    "IntensityReport",
]

_EIG_CLAMP = 1e-10
_MIN_TRIALS = 1000


@dataclass(frozen=True)
class PointConfiguration:
    """One sorted sample with the seed that produced it."""

    points: tuple[float, ...]
    seed: int

    def __post_init__(self):
        if list(self.points) != sorted(set(self.points)):
            raise ValueError("points must be sorted and distinct")


@dataclass(frozen=True)
class TestFunction:
    """g = 1 outside its bumps; each bump rescales g on [lo, hi] by a
    bounded nonnegative multiplier."""

    __test__ = False  # not a pytest class, despite the name

    bumps: tuple[tuple[float, float, float], ...]

    def __post_init__(self):
        for lo, hi, mult in self.bumps:
            if not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
                raise ValueError(f"bump interval [{lo}, {hi}] must be finite and ordered")
            if not (0.0 <= mult < math.inf):
                raise ValueError(f"bump multiplier must be bounded and >= 0, got {mult}")

    @classmethod
    def indicator_bump(cls, lo: float, hi: float, mult: float) -> "TestFunction":
        return cls(bumps=((float(lo), float(hi), float(mult)),))

    def values(self, points: np.ndarray) -> np.ndarray:
        g = np.ones(len(points))
        for lo, hi, mult in self.bumps:
            g[(points >= lo) & (points <= hi)] *= mult
        return g


def truncate(spec: KernelSpec, window) -> KernelMatrix:
    """Kernel matrix on an integer interval [-N, N] or an explicit grid.

    Eigenvalues within 1e-10 of [0, 1] are clamped back (truncation
    roundoff); anything further out is an invalid kernel.
    """
    if isinstance(window, (int, np.integer)):
        if window < 0:
            raise ValueError(f"window half-width must be >= 0, got {window}")
        points = np.arange(-int(window), int(window) + 1, dtype=float)
    else:
        points = np.asarray(window, dtype=float)
        if points.size == 0:
            raise ValueError("window must be nonempty")
    from .kernels import kernel_grid

    km = kernel_grid(spec, points)
    eigs, vecs = np.linalg.eigh(km.entries)
    if eigs.min() < -_EIG_CLAMP or eigs.max() > 1.0 + _EIG_CLAMP:
        raise ValueError(
            f"kernel eigenvalues [{eigs.min():.3e}, {eigs.max():.3e}] leave [0, 1] by more than {_EIG_CLAMP}"
        )
    clamped = np.clip(eigs, 0.0, 1.0)
    entries = (vecs * clamped) @ vecs.T
    entries = 0.5 * (entries + entries.T)
    return KernelMatrix(points=points, entries=entries, family=spec.family)


def _sample_kernel_py(evecs, evals, uniforms, occupancy, breakdown):
    trials = uniforms.shape[0]
    m, r = evecs.shape
    for t in range(trials):
        k = 0
        sel = np.empty(r, np.int64)
        for j in range(r):
            if uniforms[t, j] < evals[j]:
                sel[k] = j
                k += 1
        if k == 0:
            continue
        V = np.empty((m, k))
        for a in range(k):
            for i in range(m):
                V[i, a] = evecs[i, sel[a]]
        ok = True
        for step in range(k):
            rem = k - step
            total = 0.0
            for i in range(m):
                row = 0.0
                for a in range(rem):
                    row += V[i, a] * V[i, a]
                total += row
            target = uniforms[t, m + step] * total
            acc = 0.0
            chosen = m - 1
            for i in range(m):
                row = 0.0
                for a in range(rem):
                    row += V[i, a] * V[i, a]
                acc += row
                if acc >= target:
                    chosen = i
                    break
            occupancy[t, chosen] = True
            # pivot column with the largest component at the chosen row
            piv = 0
            best = abs(V[chosen, 0])
            for a in range(1, rem):
                if abs(V[chosen, a]) > best:
                    best = abs(V[chosen, a])
                    piv = a
            if best < 1e-12:
                ok = False
                break
            # eliminate the chosen row from the other columns, drop the pivot
            for a in range(rem):
                if a == piv:
                    continue
                f = V[chosen, a] / V[chosen, piv]
                for i in range(m):
                    V[i, a] -= f * V[i, piv]
            if piv != rem - 1:
                for i in range(m):
                    V[i, piv] = V[i, rem - 1]
            # re-orthonormalize the remaining rem-1 columns (modified Gram-Schmidt)
            for a in range(rem - 1):
                norm = 0.0
                for i in range(m):
                    norm += V[i, a] * V[i, a]
                norm = math.sqrt(norm)
                if norm < 1e-12:
                    ok = False
                    break
                for i in range(m):
                    V[i, a] /= norm
                for bcol in range(a + 1, rem - 1):
                    dot = 0.0
                    for i in range(m):
                        dot += V[i, a] * V[i, bcol]
                    for i in range(m):
                        V[i, bcol] -= dot * V[i, a]
            if not ok:
                break
        if not ok:
            breakdown[t] = True
            for i in range(m):
                occupancy[t, i] = False
    return occupancy


_sample_kernel = _njit(cache=True)(_sample_kernel_py) if _njit is not None else _sample_kernel_py


def _trial_uniforms(seed: int, trials: int, width: int, round_: int = 0) -> np.ndarray:
    bitgen = np.random.Philox(np.random.SeedSequence(entropy=int(seed), spawn_key=(round_,)))
    return np.random.Generator(bitgen).random((trials, width))


def sample_occupancy(kmat: KernelMatrix, trials: int, seed: int) -> np.ndarray:
    """Boolean occupancy matrix (trials x points) of independent samples."""
    evals, evecs = np.linalg.eigh(kmat.entries)
    if evals.min() < -_EIG_CLAMP or evals.max() > 1.0 + _EIG_CLAMP:
        raise ValueError("kernel eigenvalues must lie in [0, 1]; run truncate first")
    evals = np.clip(evals, 0.0, 1.0)
    keep = evals > 0.0
    evecs = np.ascontiguousarray(evecs[:, keep])
    evals = np.ascontiguousarray(evals[keep])
    m = len(kmat.points)
    occupancy = np.zeros((trials, m), dtype=np.bool_)
    breakdown = np.zeros(trials, dtype=np.bool_)
    uniforms = _trial_uniforms(seed, trials, m + m)
    _sample_kernel(evecs, evals, uniforms, occupancy, breakdown)
    for round_ in range(1, 6):
        bad = np.flatnonzero(breakdown)
        if len(bad) == 0:
            return occupancy
        retry_occ = np.zeros((len(bad), m), dtype=np.bool_)
        retry_break = np.zeros(len(bad), dtype=np.bool_)
        retry_uni = _trial_uniforms(seed, trials, m + m, round_=round_)[bad]
        _sample_kernel(evecs, evals, retry_uni, retry_occ, retry_break)
        occupancy[bad] = retry_occ
        breakdown[:] = False
        breakdown[bad] = retry_break
    if breakdown.any():
        raise RuntimeError(
            f"Gram-Schmidt deflation broke down in {int(breakdown.sum())} trials after 5 retries"
        )
    return occupancy


def dpp_sample(kmat: KernelMatrix, seed: int) -> PointConfiguration:
    """One deterministic draw from the determinantal measure of the kernel."""
    occ = sample_occupancy(kmat, 1, seed)[0]
    return PointConfiguration(points=tuple(float(p) for p in kmat.points[occ]), seed=int(seed))


def samples_jsonl(samples) -> str:
    """One JSON object per line: {"seed": ..., "points": [...]}."""
    import json

    return "".join(json.dumps({"seed": cfg.seed, "points": list(cfg.points)}) + "\n" for cfg in samples)


def expectation_product(kmat: KernelMatrix, g: TestFunction) -> float:
    """E prod g(x) = det(I + (g - 1) K) over the window, by pivoted LU."""
    gv = g.values(kmat.points)
    mat = np.eye(len(gv)) + (gv - 1.0)[:, None] * kmat.entries
    return float(np.linalg.det(mat))


class McReport(NamedTuple):
    mean: float
    stderr: float


def mc_estimate(kmat: KernelMatrix, g: TestFunction, trials: int, seed: int) -> McReport:
    """Monte-Carlo mean of prod_{x in sample} g(x) with its standard error."""
    if trials < _MIN_TRIALS:
        raise ValueError(f"need at least {_MIN_TRIALS} trials, got {trials}")
    occ = sample_occupancy(kmat, trials, seed)
    gv = g.values(kmat.points)
    zero_cols = gv == 0.0
    with np.errstate(divide="ignore"):
        logs = np.where(zero_cols, 0.0, np.log(np.where(zero_cols, 1.0, gv)))
    prods = np.exp(occ @ logs)
    prods[(occ & zero_cols).any(axis=1)] = 0.0
    mean = float(math.fsum(prods) / trials)
    var = float(math.fsum((prods - mean) ** 2) / (trials - 1))
    return McReport(mean, math.sqrt(var / trials))


class IntensityReport(NamedTuple):
    points: np.ndarray
    frequency: np.ndarray
    stderr: np.ndarray


def empirical_intensity(samples, window_points: Sequence[float]) -> IntensityReport:
    """Per-point occupation frequency with binomial standard errors.

    ``samples`` is either a list of :class:`PointConfiguration` or a boolean
    occupancy matrix aligned with ``window_points``.
    """
    pts = np.asarray(window_points, dtype=float)
    if isinstance(samples, np.ndarray):
        occ = samples
        if occ.shape[1] != len(pts):
            raise ValueError("occupancy width does not match the window")
    else:
        samples = list(samples)
        occ = np.zeros((len(samples), len(pts)), dtype=bool)
        index = {float(p): i for i, p in enumerate(pts)}
        for t, cfg in enumerate(samples):
            for p in cfg.points:
                occ[t, index[float(p)]] = True
    trials = occ.shape[0]
    if trials < _MIN_TRIALS:
        raise ValueError(f"need at least {_MIN_TRIALS} samples, got {trials}")
    freq = occ.mean(axis=0)
    stderr = np.sqrt(freq * (1.0 - freq) / trials)
    return IntensityReport(pts, freq, stderr)
