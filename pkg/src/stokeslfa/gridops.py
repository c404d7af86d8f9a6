"""Periodic grid functions, stencil operators, transfers and exact solvers.

Grid functions live on an ``n x n`` periodic element mesh of width ``h``.
Each scalar unknown is stored per sub-grid as an ``(n, n)`` array indexed
``[j, i]`` (y first).  Q1 unknowns have a single node sub-grid; each Q2
velocity component has four (node, x-edge, y-edge, cell centre).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from . import fem
from .symbols import Discretization


def block_names(disc: Discretization) -> list[str]:
    if disc.is_q2:
        return [f"{c}_{s}" for c in ("u", "v") for s in fem.SUBGRID_NAMES] + ["p"]
    return ["u", "v", "p"]


def _subgrid_of(name: str) -> int:
    return fem.SUBGRID_NAMES.index(name[2:]) if "_" in name else 0


@dataclass
class BlockGridFunction:
    """A periodic grid vector with one ``(n, n)`` array per named sub-grid."""

    n: int
    blocks: dict = field(default_factory=dict)

    @classmethod
    def zeros(cls, disc: Discretization, n: int) -> "BlockGridFunction":
        return cls(n, {name: np.zeros((n, n)) for name in block_names(disc)})

    @classmethod
    def from_vector(cls, disc: Discretization, n: int, vec) -> "BlockGridFunction":
        names = block_names(disc)
        vec = np.asarray(vec)
        if vec.shape != (len(names) * n * n,):
            raise ValueError(f"vector of length {vec.size} does not fit {len(names)} blocks of {n}x{n}")
        parts = vec.reshape(len(names), n, n)
        return cls(n, {name: parts[k].copy() for k, name in enumerate(names)})

    def vector(self) -> np.ndarray:
        return np.concatenate([b.ravel() for b in self.blocks.values()])

    def to_csv(self, path) -> None:
        """Write columns ``block, n, index, value`` with row-major ``index = j*n + i``."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["block", "n", "index", "value"])
            for name, arr in self.blocks.items():
                for idx, v in enumerate(arr.ravel()):
                    w.writerow([name, self.n, idx, repr(float(v))])

    @classmethod
    def from_csv(cls, path) -> "BlockGridFunction":
        blocks: dict = {}
        n = None
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                n = int(row["n"])
                arr = blocks.setdefault(row["block"], np.zeros(n * n))
                arr[int(row["index"])] = float(row["value"])
        if n is None:
            raise ValueError(f"{path}: no grid values")
        return cls(n, {k: v.reshape(n, n) for k, v in blocks.items()})


# --------------------------------------------------------------------------
# stencils


@dataclass
class Stencil:
    """Constant-coefficient coupling from a trial sub-grid to a test sub-grid.

    ``entries`` maps offsets ``(ox, oy)`` in units of h (half-integers allowed
    between staggered sub-grids) to values.
    """

    entries: dict
    test: int = 0
    trial: int = 0

    def _shift(self, offset):
        tx, ty = fem.SUBGRID_OFFSETS[self.test]
        sx, sy = fem.SUBGRID_OFFSETS[self.trial]
        dx = Fraction(offset[0]) + tx - sx
        dy = Fraction(offset[1]) + ty - sy
        if dx.denominator != 1 or dy.denominator != 1:
            raise ValueError(f"offset {offset} does not connect sub-grids {self.trial} -> {self.test}")
        return int(dx), int(dy)

    def apply(self, u: np.ndarray) -> np.ndarray:
        out = np.zeros_like(u, dtype=float)
        for off, val in self.entries.items():
            dx, dy = self._shift(off)
            out += float(val) * np.roll(u, shift=(-dy, -dx), axis=(0, 1))
        return out

    def scaled(self, s) -> "Stencil":
        return Stencil({k: v * s for k, v in self.entries.items()}, self.test, self.trial)

    def transpose(self) -> "Stencil":
        return Stencil({(-k[0], -k[1]): v for k, v in self.entries.items()}, self.trial, self.test)

    def compose(self, other: "Stencil") -> "Stencil":
        """``self @ other``: apply ``other`` first."""
        if other.test != self.trial:
            raise ValueError("sub-grid mismatch in stencil composition")
        out: dict = {}
        for k1, v1 in self.entries.items():
            for k2, v2 in other.entries.items():
                k = (k1[0] + k2[0], k1[1] + k2[1])
                out[k] = out.get(k, 0) + v1 * v2
        return Stencil({k: v for k, v in out.items() if v != 0}, self.test, other.trial)

    def __add__(self, other: "Stencil") -> "Stencil":
        if (self.test, self.trial) != (other.test, other.trial):
            raise ValueError("sub-grid mismatch in stencil sum")
        out = dict(self.entries)
        for k, v in other.entries.items():
            out[k] = out.get(k, 0) + v
        return Stencil({k: v for k, v in out.items() if v != 0}, self.test, self.trial)

    def center(self):
        return self.entries.get((0, 0), 0)

    def row_sum(self):
        return sum(self.entries.values())

    def as_matrix(self, xs, ys) -> np.ndarray:
        """Dense layout with north (largest y offset) in the first row."""
        return np.array([[self.entries.get((x, y), 0) for x in xs] for y in sorted(ys, reverse=True)])


def _family(data, test, trial):
    return fem.stencils_1d(data[0], test, trial)


def _tensor(sy, sx, hpow, h, scale=1):
    fam = fem.tensor_stencils(sy, sx)
    factor = Fraction(scale)
    return {
        key: Stencil({k: v * factor for k, v in ent.items()}, key[0], key[1]) for key, ent in fam.items()
    }, h**hpow


class StencilSet(NamedTuple):
    """Exact (rational) stencils of every block, with their h scalings."""

    A: dict  # (test, trial) -> Stencil, one velocity component, h^0
    Bx: dict  # test velocity sub-grid -> Stencil (B^T, x part), times h
    By: dict
    Ap: Stencil  # Q1 Laplacian, h^0
    Q: Stencil  # Q1 mass, times h^2
    P: Stencil  # piecewise-constant projection part, times h^2


def exact_stencils(disc: Discretization) -> StencilSet:
    """Stencils derived from the 1D element matrices by tensor products."""
    q1 = fem.Q1_ELEMENT
    vel = fem.Q2_ELEMENT if disc.is_q2 else fem.Q1_ELEMENT
    if disc.is_q2:
        kv, mv = _family(fem.Q2_STIFFNESS, vel, vel), _family(fem.Q2_MASS, vel, vel)
        mvp, gvp = _family(fem.Q2Q1_MASS, vel, q1), _family(fem.Q2Q1_GRADIENT, vel, q1)
    else:
        kv, mv = _family(fem.Q1_STIFFNESS, q1, q1), _family(fem.Q1_MASS, q1, q1)
        mvp, gvp = mv, _family(fem.Q1_GRADIENT, q1, q1)
    k1, m1 = _family(fem.Q1_STIFFNESS, q1, q1), _family(fem.Q1_MASS, q1, q1)
    pi1 = _family(fem.Q1_PROJECTION, q1, q1)

    A = _sum_families(fem.tensor_stencils(kv, mv), fem.tensor_stencils(mv, kv))
    Bx = {t: Stencil(e, t, 0) for (t, _), e in fem.tensor_stencils(mvp, gvp).items()}
    By = {t: Stencil(e, t, 0) for (t, _), e in fem.tensor_stencils(gvp, mvp).items()}
    Ap = Stencil(_sum_families(fem.tensor_stencils(k1, m1), fem.tensor_stencils(m1, k1))[(0, 0)].entries)
    Q = Stencil(fem.tensor_stencils(m1, m1)[(0, 0)])
    P = Stencil(fem.tensor_stencils(pi1, pi1)[(0, 0)])
    return StencilSet(A=A, Bx=Bx, By=By, Ap=Ap, Q=Q, P=P)


def _sum_families(f1, f2):
    out = {}
    for key in set(f1) | set(f2):
        s = Stencil(dict(f1.get(key, {})), key[0], key[1])
        if key in f2:
            s = s + Stencil(dict(f2[key]), key[0], key[1])
        out[key] = s
    return out


def stabilization_stencil(disc: Discretization, st: StencilSet | None = None) -> Stencil:
    """Stencil of ``C`` (including beta and h scaling), as floats."""
    st = st or exact_stencils(disc)
    h = disc.h
    if disc.kind == "posd":
        return st.Ap.scaled(disc.beta * h**2)
    if disc.kind == "prsd":
        return (st.Q + st.P.scaled(-1)).scaled(disc.beta * h**2)
    return Stencil({})


def apply_operator(disc: Discretization, x: BlockGridFunction) -> BlockGridFunction:
    """Matrix-free ``K x`` with ``K = [[A, B^T], [B, -C]]`` on the periodic grid."""
    names = block_names(disc)
    if set(x.blocks) != set(names):
        raise ValueError(f"grid function blocks {sorted(x.blocks)} do not match {names}")
    st = exact_stencils(disc)
    h = disc.h
    out = BlockGridFunction.zeros(disc, x.n)
    k = disc.nsub
    vel = [names[:k], names[k : 2 * k]]
    p = x.blocks["p"]
    for comp, grad in zip(vel, (st.Bx, st.By)):
        for tname in comp:
            t = _subgrid_of(tname)
            acc = out.blocks[tname]
            for sname in comp:
                s = _subgrid_of(sname)
                if (t, s) in st.A:
                    acc += st.A[(t, s)].apply(x.blocks[sname])
            acc += h * grad[t].apply(p)
            # divergence row: B = (B^T)^T
            out.blocks["p"] += h * grad[t].transpose().apply(x.blocks[tname])
    C = stabilization_stencil(disc, st)
    if C.entries:
        out.blocks["p"] -= C.apply(p)
    return out


# --------------------------------------------------------------------------
# sparse assembly


@dataclass
class SystemMatrices:
    """Assembled blocks on one periodic level (CSR)."""

    n: int
    A: sp.csr_matrix  # both velocity components
    Bt: sp.csr_matrix
    C: sp.csr_matrix
    Ap: sp.csr_matrix
    Q: sp.csr_matrix

    @property
    def B(self):
        return self.Bt.T.tocsr()

    @property
    def K(self):
        return sp.bmat([[self.A, self.Bt], [self.B, -self.C]], format="csr")


def assemble_system(disc: Discretization, n: int) -> SystemMatrices:
    """Assemble all blocks on ``n x n`` periodic elements of width ``disc.h``."""
    h = disc.h
    q1 = fem.Q1_ELEMENT
    vel = fem.Q2_ELEMENT if disc.is_q2 else q1
    types = (2, 2) if disc.is_q2 else (1, 1)

    def m1d(data, test, trial):
        return fem.periodic_matrix_1d(data[0], test, trial, n, h, data[1])

    k1, m1 = m1d(fem.Q1_STIFFNESS, q1, q1), m1d(fem.Q1_MASS, q1, q1)
    if disc.is_q2:
        kv, mv = m1d(fem.Q2_STIFFNESS, vel, vel), m1d(fem.Q2_MASS, vel, vel)
        mvp, gvp = m1d(fem.Q2Q1_MASS, vel, q1), m1d(fem.Q2Q1_GRADIENT, vel, q1)
    else:
        kv, mv = k1, m1
        mvp, gvp = m1, m1d(fem.Q1_GRADIENT, q1, q1)
    Acomp = fem.kron2d(kv, mv, n, n, types, types) + fem.kron2d(mv, kv, n, n, types, types)
    A = sp.block_diag([Acomp, Acomp], format="csr")
    Btx = fem.kron2d(mvp, gvp, n, n, types, (1, 1))
    Bty = fem.kron2d(gvp, mvp, n, n, types, (1, 1))
    Bt = sp.vstack([Btx, Bty], format="csr")
    Ap = (sp.kron(k1, m1) + sp.kron(m1, k1)).tocsr()
    Q = sp.kron(m1, m1, format="csr")
    if disc.kind == "posd":
        C = disc.beta * h**2 * Ap
    elif disc.kind == "prsd":
        pi1 = m1d(fem.Q1_PROJECTION, q1, q1)
        C = disc.beta * (Q - sp.kron(pi1, pi1, format="csr"))
    else:
        C = sp.csr_matrix((n * n, n * n))
    return SystemMatrices(n=n, A=A, Bt=Bt, C=C.tocsr(), Ap=Ap, Q=Q)


class Prolongation(NamedTuple):
    vel: sp.csr_matrix  # both velocity components
    p: sp.csr_matrix

    @property
    def full(self):
        return sp.block_diag([self.vel, self.p], format="csr")


def prolongation(disc: Discretization, n_coarse: int) -> Prolongation:
    """Bilinear (Q1) / biquadratic (Q2) nodal interpolation from ``n_coarse`` to ``2*n_coarse``."""
    nf = 2 * n_coarse
    p1 = fem.prolongation_1d(fem.Q1_ELEMENT, n_coarse)
    pp = fem.kron2d(p1, p1, nf, n_coarse)
    if disc.is_q2:
        p2 = fem.prolongation_1d(fem.Q2_ELEMENT, n_coarse)
        pu = fem.kron2d(p2, p2, nf, n_coarse, (2, 2), (2, 2))
    else:
        pu = pp
    return Prolongation(vel=sp.block_diag([pu, pu], format="csr"), p=pp)


def transfer(x: BlockGridFunction, direction: str, disc: Discretization) -> BlockGridFunction:
    """Prolong (to ``2n``) or restrict (to ``n/2``, the transpose) a grid function."""
    if direction == "prolong":
        P = prolongation(disc, x.n).full
        return BlockGridFunction.from_vector(disc, 2 * x.n, P @ x.vector())
    if direction == "restrict":
        if x.n % 2:
            raise ValueError("restriction needs an even number of elements")
        P = prolongation(disc, x.n // 2).full
        return BlockGridFunction.from_vector(disc, x.n // 2, P.T @ x.vector())
    raise ValueError(f"unknown transfer direction {direction!r}")


def galerkin_coarsen(fine: SystemMatrices, P: Prolongation) -> SystemMatrices:
    """Coarse blocks by sparse triple products ``P^T X P``."""
    pv, pp = P.vel, P.p

    def rap(m, left, right):
        return (left.T @ m @ right).tocsr()

    return SystemMatrices(
        n=fine.n // 2,
        A=rap(fine.A, pv, pv),
        Bt=rap(fine.Bt, pv, pp),
        C=rap(fine.C, pp, pp),
        Ap=rap(fine.Ap, pp, pp),
        Q=rap(fine.Q, pp, pp),
    )


# --------------------------------------------------------------------------
# exact solvers


class PeriodicSolver:
    """Exact solver for a translation-invariant operator on one periodic sub-grid.

    The operator is diagonalized by the 2D DFT; modes with (numerically)
    zero eigenvalue get zero coefficient, giving the minimum-norm solution.
    """

    def __init__(self, op, n: int, rtol: float = 1e-10):
        self.n = n
        if isinstance(op, Stencil):
            delta = np.zeros((n, n))
            delta[0, 0] = 1.0
            kernel = op.apply(delta)
        elif isinstance(op, np.ndarray) and op.shape == (n, n):
            kernel = op
        else:
            e0 = np.zeros(n * n)
            e0[0] = 1.0
            kernel = np.asarray(op @ e0).reshape(n, n)
        self.eigenvalues = np.fft.fft2(kernel)
        scale = np.abs(self.eigenvalues).max()
        mask = np.abs(self.eigenvalues) > rtol * scale
        self._inv = np.zeros_like(self.eigenvalues)
        self._inv[mask] = 1.0 / self.eigenvalues[mask]

    def solve(self, rhs):
        shape = np.shape(rhs)
        r = np.asarray(rhs).reshape(self.n, self.n)
        x = np.fft.ifft2(np.fft.fft2(r) * self._inv).real
        return x.reshape(shape)


def fft_solve(op, rhs: np.ndarray) -> np.ndarray:
    """Minimum-norm solve of a periodic constant-coefficient problem on one sub-grid."""
    rhs = np.asarray(rhs)
    n = rhs.shape[0] if rhs.ndim == 2 else int(round(np.sqrt(rhs.size)))
    return PeriodicSolver(op, n).solve(rhs)


class CoarsestSolver:
    """Minimum-norm least-squares solve via a precomputed pseudo-inverse."""

    def __init__(self, K):
        dense = K.toarray() if sp.issparse(K) else np.asarray(K)
        self.pinv = sla.pinv(dense)

    def solve(self, rhs):
        return self.pinv @ rhs


def coarsest_solve(K, rhs) -> np.ndarray:
    return CoarsestSolver(K).solve(rhs)


class BlockCirculantSolver:
    """Exact minimum-norm solver for a translation-invariant multi-block operator.

    Every block is an ``n x n`` periodic sub-grid and the operator commutes
    with whole-cell shifts, so the 2D DFT of each block reduces it to one
    small dense system per wavenumber.
    """

    def __init__(self, K, nblocks: int, n: int, rcond: float = 1e-10):
        self.n, self.nblocks = n, nblocks
        K = sp.csc_matrix(K)
        m = n * n
        sym_ = np.empty((n, n, nblocks, nblocks), dtype=complex)
        for j in range(nblocks):
            col = K[:, j * m].toarray().reshape(nblocks, n, n)
            sym_[:, :, :, j] = np.moveaxis(np.fft.fft2(col), 0, -1)
        # threshold against the global scale: at wavenumber 0 every entry is roundoff
        u, s, vh = np.linalg.svd(sym_)
        keep = s > rcond * s.max()
        sinv = np.where(keep, 1.0 / np.where(keep, s, 1.0), 0.0)
        self.pinv = np.conj(np.swapaxes(vh, -1, -2)) @ (sinv[..., None] * np.conj(np.swapaxes(u, -1, -2)))

    def solve(self, rhs):
        r = np.asarray(rhs).reshape(self.nblocks, self.n, self.n)
        rh = np.moveaxis(np.fft.fft2(r), 0, -1)[..., None]
        xh = (self.pinv @ rh)[..., 0]
        return np.fft.ifft2(np.moveaxis(xh, -1, 0)).real.ravel()
