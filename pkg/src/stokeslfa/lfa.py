"""Smoothing and two-grid factors, closed-form optima, and parameter search."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import symbols as sym
from .relaxation import RelaxScheme, smoother_symbol

# relative singular-value threshold for skipping a frequency
SINGULAR_RTOL = 1e-12


class AnalysisError(RuntimeError):
    """Raised when a symbol is singular at a frequency that is not excluded."""

    def __init__(self, message, theta=None):
        super().__init__(message)
        self.theta = theta


@dataclass(frozen=True)
class TwoGridSpec:
    nu1: int = 1
    nu2: int = 1
    coarsening: str = "redisc"
    samples: int = 128

    def __post_init__(self):
        if self.nu1 < 0 or self.nu2 < 0 or self.nu1 + self.nu2 < 1:
            raise ValueError("need nu1, nu2 >= 0 and nu1 + nu2 >= 1")
        if self.coarsening not in ("redisc", "galerkin"):
            raise ValueError(f"unknown coarsening {self.coarsening!r}")
        if self.samples <= 0 or self.samples % 4:
            raise ValueError("samples must be a positive multiple of 4")


@dataclass
class AnalysisResult:
    factor: float
    argmax_theta: sym.Frequency | None
    params: RelaxScheme
    skipped: int = 0
    extra: dict = field(default_factory=dict)


def spectral_radius(mats: np.ndarray) -> np.ndarray:
    return np.abs(np.linalg.eigvals(mats)).max(axis=-1)


def _frequency(t1, t2) -> sym.Frequency:
    # sampled values may sit one ulp outside the half-open interval
    lo, hi = -math.pi / 2, 3 * math.pi / 2
    wrap = lambda t: t - 2 * math.pi if t >= hi else (t + 2 * math.pi if t < lo else t)  # noqa: E731
    return sym.Frequency(wrap(float(t1)), wrap(float(t2)))


def smoothing_factor(scheme: RelaxScheme, disc: sym.Discretization, N: int = 128) -> AnalysisResult:
    """Maximum spectral radius of the smoother symbol over sampled high frequencies."""
    t1, t2 = sym.high_frequencies(N)
    rho = spectral_radius(smoother_symbol(scheme, disc, t1, t2))
    k = int(np.argmax(rho))
    return AnalysisResult(float(rho[k]), _frequency(t1[k], t2[k]), scheme)


def velocity_smoothing_factor(ratio: float, N: int = 128) -> float:
    """``max |1 - ratio * 3a/8|`` over high frequencies (damped Jacobi for the Q1 Laplacian)."""
    t1, t2 = sym.high_frequencies(N)
    a = sym.q1_scalar_symbols(t1, t2, 1.0)[0]
    return float(np.abs(1 - ratio * 3 * a / 8).max())


# --------------------------------------------------------------------------
# two-grid analysis


@dataclass
class _CoarseData:
    t1: np.ndarray
    t2: np.ndarray
    cgc: np.ndarray  # (nfreq, 4d, 4d)
    skipped: int


@lru_cache(maxsize=32)
def _coarse_correction(disc: sym.Discretization, N: int, coarsening: str) -> _CoarseData:
    t1, t2 = sym.low_frequencies(N)
    keep = ~((np.abs(t1) < 1e-14) & (np.abs(t2) < 1e-14))
    t1, t2 = t1[keep], t2[keep]
    L = sym.fine_harmonic_symbol(disc, t1, t2, sym.system_symbol)
    Lc = sym.coarse_symbol(disc, t1, t2, coarsening)
    sv = np.linalg.svd(Lc, compute_uv=False)
    ok = sv[..., -1] > SINGULAR_RTOL * sv[..., 0]
    skipped = int((~keep).sum() + (~ok).sum())
    t1, t2, L, Lc = t1[ok], t2[ok], L[ok], Lc[ok]
    P, R = sym.transfer_symbol(disc, t1, t2)
    cgc = np.eye(L.shape[-1]) - P @ np.linalg.solve(Lc, R @ L)
    return _CoarseData(t1, t2, cgc, skipped)


def coarse_grid_correction(disc: sym.Discretization, N: int = 128, coarsening: str = "redisc"):
    """``(t1, t2, I - P Lc^{-1} R L)`` over sampled non-singular low frequencies."""
    d = _coarse_correction(disc, N, coarsening)
    return d.t1, d.t2, d.cgc


def _harmonic_smoother(scheme, disc, t1, t2):
    return sym.fine_harmonic_symbol(disc, t1, t2, lambda dd, a, b: smoother_symbol(scheme, dd, a, b))


def two_grid_operator(scheme: RelaxScheme, disc: sym.Discretization, tg: TwoGridSpec):
    """``(t1, t2, S^nu2 CGC S^nu1)`` over sampled low frequencies."""
    data = _coarse_correction(disc, tg.samples, tg.coarsening)
    S = _harmonic_smoother(scheme, disc, data.t1, data.t2)
    M = data.cgc
    if tg.nu1:
        M = M @ np.linalg.matrix_power(S, tg.nu1)
    if tg.nu2:
        M = np.linalg.matrix_power(S, tg.nu2) @ M
    return data.t1, data.t2, M


def two_grid_factor(scheme: RelaxScheme, disc: sym.Discretization, tg: TwoGridSpec | None = None) -> AnalysisResult:
    tg = tg or TwoGridSpec()
    t1, t2, M = two_grid_operator(scheme, disc, tg)
    rho = spectral_radius(M)
    if not np.all(np.isfinite(rho)):
        k = int(np.argmin(np.isfinite(rho)))
        raise AnalysisError("non-finite two-grid symbol", _frequency(t1[k], t2[k]))
    k = int(np.argmax(rho))
    skipped = _coarse_correction(disc, tg.samples, tg.coarsening).skipped
    return AnalysisResult(float(rho[k]), _frequency(t1[k], t2[k]), scheme, skipped=skipped)


def two_grid_spectrum(scheme: RelaxScheme, disc: sym.Discretization, tg: TwoGridSpec):
    """All two-grid eigenvalues: ``(t1, t2, eigenvalues (nfreq, 4*dim))``."""
    t1, t2, M = two_grid_operator(scheme, disc, tg)
    return t1, t2, np.linalg.eigvals(M)


# --------------------------------------------------------------------------
# closed-form optima


@dataclass(frozen=True)
class TheoremOptimum:
    mu: Fraction
    constraints: str
    scheme: RelaxScheme  # a parameter choice inside the optimal region


def theorem_optima(disc: sym.Discretization | str, scheme: str | RelaxScheme) -> TheoremOptimum:
    kind = disc.kind if isinstance(disc, sym.Discretization) else disc
    name = scheme.kind if isinstance(scheme, RelaxScheme) else scheme
    if kind not in ("posd", "prsd"):
        raise ValueError("optimal smoothing factors are known only for the stabilized discretizations")
    third = Fraction(1, 3)
    if name == "dwj1":
        if kind == "posd":
            ratio2 = Fraction(459, 356)
            omega = float(ratio2)
            return TheoremOptimum(
                Fraction(55, 89),
                "omega/alpha2 = 459/356, 136/267 <= omega/alpha1 <= 96/89",
                RelaxScheme("dwj1", alpha1=omega * 9 / 8, alpha2=1.0, omega=omega),
            )
        return TheoremOptimum(
            Fraction(65, 97),
            "omega/alpha2 = 108/97, 128/291 <= omega/alpha1 <= 108/97",
            RelaxScheme("dwj1", alpha1=1.0, alpha2=1.0, omega=108 / 97),
        )
    if name == "dwj2":
        top, pivot = ("51/64", "459/356") if kind == "posd" else ("2/3", "108/97")
        ymax = "64/51" if kind == "posd" else "3/2"
        text = (
            f"omega/alpha1 = 8/9 and either {pivot} <= omega_J <= {top}(1+sqrt2/2) with "
            f"2/(3 y(omega_J)) <= omega <= 4/3, y = {ymax} omega_J (2 - {ymax} omega_J); "
            f"or 27/8 (1-sqrt2/2) <= omega_J <= {pivot} with the same bound using y = 8/27 omega_J (2 - 8/27 omega_J)"
        )
        return TheoremOptimum(third, text, RelaxScheme("dwj2", alpha1=1.5, omega_j=1.0, omega=4 / 3))
    if name == "bsr":
        return TheoremOptimum(third, "omega/alpha = 8/9, 3/4 <= alpha <= 3/2", RelaxScheme("bsr", alpha=1.0, omega=8 / 9))
    raise ValueError(f"no closed-form optimum for scheme {name!r}")


def y2_extremes(kind: str) -> tuple[Fraction, Fraction]:
    """Range of the distributed pressure symbol ``y2`` over high frequencies."""
    return (Fraction(8, 27), Fraction(64, 51)) if kind == "posd" else (Fraction(8, 27), Fraction(3, 2))


def dwj2_region_contains(kind: str, alpha1: float, omega: float, omega_j: float, tol: float = 1e-12) -> bool:
    """Membership in the parameter set where two-sweep DWJ attains 1/3."""
    if abs(omega / alpha1 - 8 / 9) > tol:
        return False
    lo, hi = (float(v) for v in y2_extremes(kind))
    pivot = 2 / (lo + hi)
    for y, wj_lo, wj_hi in (
        (hi, pivot, (1 + math.sqrt(2) / 2) / hi),
        (lo, (1 - math.sqrt(2) / 2) / lo, pivot),
    ):
        if wj_lo - tol <= omega_j <= wj_hi + tol:
            y3 = y * omega_j * (2 - y * omega_j)
            if y3 > 0 and 2 / (3 * y3) - tol <= omega <= 4 / 3 + tol:
                return True
    return False


# --------------------------------------------------------------------------
# parameter search


def _objective(scheme, disc, objective, N):
    if objective == "smoothing":
        return smoothing_factor(scheme, disc, N).factor
    tg = TwoGridSpec(objective.nu1, objective.nu2, objective.coarsening, N)
    return two_grid_factor(scheme, disc, tg).factor


def _evaluate_grid(scheme, disc, objective, grid, N):
    names = list(grid)
    best = None
    for values in itertools.product(*(grid[n] for n in names)):
        cand = scheme.with_params(**dict(zip(names, values)))
        try:
            f = _objective(cand, disc, objective, N)
        except (np.linalg.LinAlgError, AnalysisError):
            continue
        key = (round(f, 12), tuple(values))
        if best is None or key < best[0]:
            best = (key, cand, f)
    return best


def optimize_params(
    scheme: RelaxScheme,
    disc: sym.Discretization,
    objective="smoothing",
    grid: dict | None = None,
    N: int = 128,
    search_N: int | None = None,
    refine_step: float | None = None,
    refine_radius: int = 5,
) -> AnalysisResult:
    """Exhaustive grid search, then an optional local refinement.

    ``objective`` is ``"smoothing"`` or a :class:`TwoGridSpec` (its
    ``samples`` field is ignored in favour of ``N``/``search_N``).  Ties are
    broken by the lexicographically smallest parameter tuple.
    """
    if not grid or any(len(v) == 0 for v in grid.values()):
        raise ValueError("empty parameter grid")
    search_N = search_N or N
    best = _evaluate_grid(scheme, disc, objective, grid, search_N)
    if best is None:
        raise AnalysisError("no parameter choice gave a finite factor")
    incumbent = best[1]
    if refine_step:
        local = {}
        for name in grid:
            c = getattr(incumbent, name)
            vals = [round(c + refine_step * k, 10) for k in range(-refine_radius, refine_radius + 1)]
            local[name] = [v for v in vals if v > 0]
        best = _evaluate_grid(incumbent, disc, objective, local, search_N)
        incumbent = best[1]
    final = _objective(incumbent, disc, objective, N)
    return AnalysisResult(final, None, incumbent, extra={"search_factor": best[2], "search_N": search_N})


def parameter_sweep(scheme: RelaxScheme, disc: sym.Discretization, objective, axes: dict, N: int = 64) -> np.ndarray:
    """Factors on the tensor grid of two parameter axes, ``out[i, j]`` for ``axes[0][i], axes[1][j]``."""
    if len(axes) != 2:
        raise ValueError("a sweep needs exactly two parameter axes")
    (n1, v1), (n2, v2) = axes.items()
    for name in (n1, n2):
        if not hasattr(scheme, name) or name in ("kind", "sweeps", "inner_cycles"):
            raise ValueError(f"unknown parameter {name!r}")
    out = np.empty((len(v1), len(v2)))
    for i, a in enumerate(v1):
        for j, b in enumerate(v2):
            out[i, j] = _objective(scheme.with_params(**{n1: a, n2: b}), disc, objective, N)
    return out


# brute-force defaults: a 0.1 grid, searched at coarse sampling and re-evaluated at full sampling
_DEFAULT_RANGES = {
    "alpha": (0.5, 2.0),
    "alpha1": (0.5, 2.0),
    "alpha2": (0.5, 2.0),
    "omega": (0.1, 2.0),
    "omega_j": (0.5, 1.5),
    "delta": (0.1, 2.0),
    "sigma": (0.1, 2.0),
}
DEFAULT_STEP = 0.1


def default_grid(scheme: str, kind: str | None = None) -> dict:
    """The 0.1-step search grid over every parameter ``scheme`` reads."""
    from .relaxation import SCHEME_PARAMS

    return {name: frange(*_DEFAULT_RANGES[name], DEFAULT_STEP) for name in SCHEME_PARAMS[scheme]}


def default_search_samples(kind: str) -> int:
    return 16 if kind == "q2q1" else 32


def default_refinement(kind: str) -> tuple[float | None, int]:
    """Local refinement (step, radius) applied after the 0.1 grid search.

    Q2-Q1 optima sit between 0.1 grid points, so that case refines on a 0.05 step.
    """
    return (0.05, 2) if kind == "q2q1" else (None, 5)


def frange(lo: float, hi: float, step: float) -> list[float]:
    """Inclusive arithmetic range rounded to the step's decimals."""
    n = int(round((hi - lo) / step))
    digits = max(0, -int(math.floor(math.log10(step))) + 1)
    return [round(lo + k * step, digits) for k in range(n + 1)]
