"""Geometric multigrid for the periodic Stokes systems with block relaxation.

Levels are assembled as sparse matrices (rediscretized at each mesh width
or by Galerkin triple products).  Exact constant-coefficient solves use the
FFT; the coarsest level (2 x 2 elements) uses a dense pseudo-inverse.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from . import gridops as go
from . import symbols as sym
from .relaxation import RelaxScheme

OVERFLOW = 1e150


@dataclass(frozen=True)
class CycleSpec:
    cycle: str = "W"  # "V", "W" or "TG"
    nu1: int = 1
    nu2: int = 1
    coarsening: str = "redisc"
    coarsest_elements: int = 2  # per direction: a mesh of 4 elements

    def __post_init__(self):
        if self.cycle not in ("V", "W", "TG"):
            raise ValueError(f"unknown cycle type {self.cycle!r}")
        if self.coarsening not in ("redisc", "galerkin"):
            raise ValueError(f"unknown coarsening {self.coarsening!r}")
        if self.nu1 < 0 or self.nu2 < 0:
            raise ValueError("sweep counts must be non-negative")

    @property
    def label(self) -> str:
        return f"{self.cycle}({self.nu1},{self.nu2})"


@dataclass
class Level:
    n: int
    disc: sym.Discretization
    mats: go.SystemMatrices
    K: sp.csr_matrix
    B: sp.csr_matrix
    D: np.ndarray  # diagonal of the velocity block
    nv: int  # number of velocity unknowns
    cache: dict = field(default_factory=dict)


class Hierarchy:
    """Levels from ``n`` elements per direction down to ``coarsest`` elements."""

    def __init__(self, disc: sym.Discretization, n: int, coarsening: str = "redisc", coarsest: int = 2):
        if n < coarsest or n & (n - 1) or coarsest & (coarsest - 1):
            raise ValueError("n and the coarsest size must be powers of two with n >= coarsest")
        self.kind, self.beta, self.coarsening = disc.kind, disc.beta, coarsening
        self.nblocks = len(go.block_names(disc))
        self.levels: list[Level] = []
        self.P: list[go.Prolongation] = []  # P[l]: level l+1 -> level l
        self.R: list[sp.csr_matrix] = []
        sizes = []
        m = n
        while m >= coarsest:
            sizes.append(m)
            m //= 2
        mats = None
        for l, m in enumerate(sizes):
            d = sym.Discretization(disc.kind, h=1.0 / m, beta=disc.beta)
            if l > 0:
                P = go.prolongation(d, m)
                self.P.append(P)
                self.R.append(P.full.T.tocsr())
            if coarsening == "galerkin" and l > 0:
                mats = go.galerkin_coarsen(mats, self.P[-1])
            else:
                mats = go.assemble_system(d, m)
            self.levels.append(self._level(m, d, mats))
        self.coarsest = go.CoarsestSolver(self.levels[-1].K)

    @staticmethod
    def _level(m, d, mats):
        return Level(
            n=m, disc=d, mats=mats, K=mats.K, B=mats.B, D=mats.A.diagonal().copy(), nv=mats.A.shape[0]
        )

    def exact_solver(self, l: int):
        lev = self.levels[l]
        if "exact" not in lev.cache:
            lev.cache["exact"] = go.BlockCirculantSolver(lev.K, self.nblocks, lev.n)
        return lev.cache["exact"]

    def nullspace_projection(self, x: np.ndarray, l: int = 0) -> np.ndarray:
        """Remove the constant modes (per velocity component and pressure)."""
        lev = self.levels[l]
        half = lev.nv // 2
        out = x.copy()
        for sl in (slice(0, half), slice(half, lev.nv), slice(lev.nv, None)):
            out[sl] -= out[sl].mean()
        return out


@lru_cache(maxsize=16)
def build_hierarchy(kind: str, beta: float, n: int, coarsening: str, coarsest: int = 2) -> Hierarchy:
    return Hierarchy(sym.Discretization(kind, beta=beta), n, coarsening, coarsest)


def hierarchy_for(disc: sym.Discretization, n: int, coarsening: str = "redisc") -> Hierarchy:
    return build_hierarchy(disc.kind, disc.beta, n, coarsening)


# --------------------------------------------------------------------------
# relaxation


class _Schur:
    """Schur hierarchy ``B (alpha D)^{-1} B^T + C`` on the pressure grids for level ``l`` and below.

    Coarse Schur operators are always Galerkin products ``P^T S P``: the
    rediscretized ``S`` on a coarser mesh is not consistent with ``R = P^T``
    (about 4x too large on smooth modes, since ``D^{-1}`` does not scale like
    a finite-element matrix).
    """

    def __init__(self, hier: Hierarchy, l: int, alpha: float):
        self.mats, self.diag, self.P, self.R = [], [], [], []
        for k in range(l, len(hier.levels)):
            lev = hier.levels[k]
            if k == l:
                S = (lev.B @ sp.diags(1.0 / (alpha * lev.D)) @ lev.mats.Bt + lev.mats.C).tocsr()
            else:
                pp = hier.P[k - 1].p
                S = (pp.T @ self.mats[-1] @ pp).tocsr()
            self.mats.append(S)
            self.diag.append(S.diagonal())
            if k > l:
                pp = hier.P[k - 1].p
                self.P.append(pp)
                self.R.append(pp.T.tocsr())
        self.coarsest = go.CoarsestSolver(self.mats[-1])
        self._fft = None
        self.n = hier.levels[l].n

    def exact(self, rhs):
        if self._fft is None:
            self._fft = go.PeriodicSolver(self.mats[0], self.n)
        return self._fft.solve(rhs)

    def jacobi(self, rhs, omega_j, sweeps, k=0, x=None):
        S, dinv = self.mats[k], omega_j / self.diag[k]
        x = np.zeros_like(rhs) if x is None else x
        for _ in range(sweeps):
            x = x + dinv * (rhs - S @ x)
        return x

    def wcycle(self, rhs, omega_j, k=0, x=None):
        """One W(1,1) cycle with weighted Jacobi smoothing."""
        if k == len(self.mats) - 1:
            return self.coarsest.solve(rhs)
        x = self.jacobi(rhs, omega_j, 1, k, x)
        rc = self.R[k] @ (rhs - self.mats[k] @ x)
        ec = None
        for _ in range(2):
            ec = self.wcycle(rc, omega_j, k + 1, ec)
        x = x + self.P[k] @ ec
        return self.jacobi(rhs, omega_j, 1, k, x)


def _scheme_data(hier: Hierarchy, l: int, scheme: RelaxScheme) -> dict:
    lev = hier.levels[l]
    key = ("scheme", scheme)
    if key in lev.cache:
        return lev.cache[key]
    data: dict = {}
    k = scheme.kind
    h2 = lev.disc.h**2
    if k in ("dwj1", "dwj2"):
        data["dinv"] = 1.0 / (scheme.alpha1 * lev.D)
        if k == "dwj2":
            data["G"] = (lev.B @ lev.mats.Bt + lev.mats.C @ lev.mats.Ap).tocsr()
    else:
        data["dinv"] = 1.0 / (scheme.alpha * lev.D)
    if k in ("bsr", "ibsr", "uzawa-schur"):
        data["schur"] = _Schur(hier, l, scheme.alpha)
    if k == "uzawa-mass":
        data["mass"] = go.PeriodicSolver((lev.mats.C + scheme.delta * lev.mats.Q).tocsr(), lev.n)
    if k == "uzawa-diag":
        data["shat_inv"] = 1.0 / (scheme.sigma * h2)
    lev.cache[key] = data
    return data


def relax(hier: Hierarchy, l: int, scheme: RelaxScheme, x: np.ndarray, b: np.ndarray) -> np.ndarray:
    """One relaxation sweep on level ``l``; returns the updated iterate."""
    lev = hier.levels[l]
    data = _scheme_data(hier, l, scheme)
    r = b - lev.K @ x
    rU, rp = r[: lev.nv], r[lev.nv :]
    dinv = data["dinv"]
    k = scheme.kind
    h2 = lev.disc.h**2
    if k in ("dwj1", "dwj2"):
        dU = dinv * rU
        f = rp - lev.B @ dU
        if k == "dwj1":
            dph = f / (scheme.alpha2 * h2)
        else:
            wj = scheme.omega_j / h2
            dph = wj * (2 * f - wj * (data["G"] @ f))
        dU = dU + lev.mats.Bt @ dph
        dp = -(lev.mats.Ap @ dph)
    elif k in ("bsr", "ibsr"):
        schur = data["schur"]
        rhs = lev.B @ (dinv * rU) - rp
        if k == "bsr":
            dp = schur.exact(rhs)
        elif scheme.inner_cycles:
            dp = None
            for _ in range(scheme.inner_cycles):
                dp = schur.wcycle(rhs, scheme.omega_j, 0, dp)
        else:
            dp = schur.jacobi(rhs, scheme.omega_j, scheme.sweeps)
        dU = dinv * (rU - lev.mats.Bt @ dp)
    else:
        dU = dinv * rU
        g = lev.B @ dU - rp
        if k == "uzawa-schur":
            dp = data["schur"].exact(g)
        elif k == "uzawa-mass":
            dp = data["mass"].solve(g)
        else:
            dp = data["shat_inv"] * g
    return x + scheme.omega * np.concatenate([dU, dp])


def mg_cycle(hier: Hierarchy, cycle: CycleSpec, scheme: RelaxScheme, x: np.ndarray, b: np.ndarray, l: int = 0):
    """One multigrid cycle starting at level ``l``."""
    last = len(hier.levels) - 1
    if l == last:
        return hier.coarsest.solve(b)
    lev = hier.levels[l]
    for _ in range(cycle.nu1):
        x = relax(hier, l, scheme, x, b)
    rc = hier.R[l] @ (b - lev.K @ x)
    if cycle.cycle == "TG":
        ec = hier.exact_solver(l + 1).solve(rc)
    else:
        ec = np.zeros_like(rc)
        for _ in range(2 if cycle.cycle == "W" else 1):
            ec = mg_cycle(hier, cycle, scheme, ec, rc, l + 1)
    x = x + hier.P[l].full @ ec
    for _ in range(cycle.nu2):
        x = relax(hier, l, scheme, x, b)
    return x


# --------------------------------------------------------------------------
# measurement


@dataclass
class ConvergenceReport:
    rho_hat: float
    residual_history: list
    k: int
    seed: int
    diverged: bool = False
    overflow: bool = False
    wall_time: float = 0.0

    @property
    def label(self) -> str:
        if self.overflow or not np.isfinite(self.rho_hat):
            return "NAN"
        return f"{self.rho_hat:.3f}"


def initial_guess(hier: Hierarchy, seed: int) -> np.ndarray:
    """Seeded uniform [0, 1) values with the invisible constant modes removed."""
    rng = np.random.default_rng(seed)
    x0 = rng.random(hier.levels[0].K.shape[0])
    return hier.nullspace_projection(x0)


def measure_rho_hat(
    disc: sym.Discretization,
    cycle: CycleSpec,
    scheme: RelaxScheme,
    n: int,
    k: int = 100,
    seed: int = 0,
    x0: np.ndarray | None = None,
) -> ConvergenceReport:
    """Average residual reduction ``(|d_k| / |d_0|)^(1/k)`` for ``K x = 0``."""
    start = time.perf_counter()
    hier = hierarchy_for(disc, n, cycle.coarsening)
    K = hier.levels[0].K
    b = np.zeros(K.shape[0])
    x = initial_guess(hier, seed) if x0 is None else hier.nullspace_projection(np.asarray(x0, dtype=float))
    hist = [float(np.linalg.norm(K @ x))]
    overflow = False
    for _ in range(k):
        with np.errstate(over="ignore", invalid="ignore"):
            x = hier.nullspace_projection(mg_cycle(hier, cycle, scheme, x, b))
            res = float(np.linalg.norm(K @ x))
        hist.append(res)
        if not np.isfinite(res) or res > OVERFLOW * hist[0]:
            overflow = True
            break
    its = len(hist) - 1
    rho = (hist[-1] / hist[0]) ** (1.0 / its) if np.isfinite(hist[-1]) else float("inf")
    return ConvergenceReport(
        rho_hat=rho,
        residual_history=hist,
        k=its,
        seed=seed,
        diverged=bool(rho > 1 or overflow),
        overflow=overflow,
        wall_time=time.perf_counter() - start,
    )


# --------------------------------------------------------------------------
# work model

# multiply-adds per grid point; a 9-point stencil costs 9, a diagonal scaling 1
STENCIL = 9
RESIDUAL_BLOCKS = 7  # A (2), B^T (2), B (2), C
SCHUR_STENCIL = 25
WORK_UNITS_PER_W = 4


@dataclass(frozen=True)
class CostReport:
    scheme: str
    residual: int
    relaxation: int

    @property
    def multiply_adds_per_sweep_per_point(self) -> int:
        return self.residual + self.relaxation

    def relative_efficiency(self, rho: float, other: "CostReport") -> float:
        """``rho^(1/W)`` with ``W`` this scheme's cost relative to ``other``."""
        return efficiency(rho, self.multiply_adds_per_sweep_per_point / other.multiply_adds_per_sweep_per_point)


def efficiency(rho: float, work_ratio: float) -> float:
    """Convergence factor per unit of the reference work: ``rho^(1/work_ratio)``."""
    return float(rho ** (1.0 / work_ratio))


def cost_model(scheme: str | RelaxScheme, inner_cycles: int = 2) -> CostReport:
    """Multiply-add counts per sweep per grid point (Q1-Q1 stencils)."""
    name = scheme.kind if isinstance(scheme, RelaxScheme) else scheme
    if isinstance(scheme, RelaxScheme) and scheme.kind == "ibsr" and scheme.inner_cycles:
        inner_cycles = scheme.inner_cycles
    residual = RESIDUAL_BLOCKS * STENCIL
    grad = 2 * STENCIL  # B_x and B_y (or their transposes)
    if name == "dwj1":
        relax_cost = 3 + STENCIL + 2 * grad  # scalings, A_p, B and B^T
    elif name == "dwj2":
        pressure_residual = STENCIL + STENCIL + 2 * grad  # A_p, C, B and B^T
        relax_cost = 3 + STENCIL + 2 * grad + pressure_residual + 1
    elif name == "ibsr":
        relax_cost = 4 + 2 * grad + inner_cycles * WORK_UNITS_PER_W * SCHUR_STENCIL
    elif name == "uzawa-diag":
        relax_cost = 3 + grad
    else:
        raise ValueError(f"no cost count for scheme {name!r}")
    return CostReport(name, residual, relax_cost)


# --------------------------------------------------------------------------
# experiments from configuration files

RESULT_COLUMNS = ("experiment", "n", "cycle", "nu1", "nu2", "rho_hat", "rho_lfa", "wall_time")


@dataclass
class Experiment:
    id: str
    disc: str
    scheme: dict
    cycles: list  # [[nu1, nu2], ...]
    n: list
    cycle: str = "W"
    coarsening: str = "redisc"
    k: int = 100
    seed: int = 0
    beta: float | None = None

    def discretization(self) -> sym.Discretization:
        return sym.Discretization(self.disc, beta=self.beta)

    def relax_scheme(self) -> RelaxScheme:
        return RelaxScheme(**self.scheme)


def load_experiments(path) -> list[Experiment]:
    """Read a JSON list of experiment records (see :class:`Experiment`)."""
    with open(path) as fh:
        raw = json.load(fh)
    if isinstance(raw, dict):
        raw = [raw]
    return [Experiment(**rec) for rec in raw]


def run_experiment(exp: Experiment, with_lfa: bool = True):
    """Yield one result row per (n, cycle) combination."""
    from .lfa import TwoGridSpec, two_grid_factor

    disc = exp.discretization()
    scheme = exp.relax_scheme()
    for n in exp.n:
        for nu1, nu2 in exp.cycles:
            cyc = CycleSpec(exp.cycle, nu1, nu2, exp.coarsening)
            rep = measure_rho_hat(disc, cyc, scheme, n, exp.k, exp.seed)
            rho_lfa = float("nan")
            if with_lfa:
                rho_lfa = two_grid_factor(scheme, disc, TwoGridSpec(nu1, nu2, exp.coarsening)).factor
            yield {
                "experiment": exp.id,
                "n": n,
                "cycle": exp.cycle,
                "nu1": nu1,
                "nu2": nu2,
                "rho_hat": rep.rho_hat if not rep.overflow else float("nan"),
                "rho_lfa": rho_lfa,
                "wall_time": round(rep.wall_time, 3),
            }


def append_results(path, rows) -> None:
    import os

    new = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=RESULT_COLUMNS)
        if new:
            w.writeheader()
        for row in rows:
            w.writerow(row)


def experiment_record(exp: Experiment) -> dict:
    return asdict(exp)
