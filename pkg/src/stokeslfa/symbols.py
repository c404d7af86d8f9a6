"""Fourier symbols of the Stokes discretization blocks and grid transfers.

All functions broadcast over arrays of frequencies ``(t1, t2)`` and return
arrays whose trailing axes hold the symbol matrix.  Fourier modes are
``exp(i*theta.x/h)`` evaluated at the (possibly staggered) points of each
sub-grid, with ``theta`` in ``[-pi/2, 3*pi/2)^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

KINDS = ("posd", "prsd", "q2q1")
DEFAULT_BETA = {"posd": 1.0 / 24.0, "prsd": 1.0, "q2q1": 0.0}

# Diagonal entries of the assembled velocity Laplacian (h-independent in 2D):
# Q1 centre 8/3; Q2 node, x-edge, y-edge, cell.
Q1_DIAGONAL = np.array([8.0 / 3.0])
Q2_DIAGONAL = np.array([112.0 / 45.0, 176.0 / 45.0, 176.0 / 45.0, 256.0 / 45.0])

HARMONICS = ((0, 0), (1, 0), (0, 1), (1, 1))


@dataclass(frozen=True)
class Discretization:
    """One of the three Stokes discretizations on a uniform mesh of width ``h``."""

    kind: str
    h: float = 1.0 / 128.0
    beta: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown discretization {self.kind!r}; expected one of {KINDS}")
        if not self.h > 0:
            raise ValueError("mesh width must be positive")
        if self.beta is None:
            object.__setattr__(self, "beta", DEFAULT_BETA[self.kind])

    @property
    def is_q2(self) -> bool:
        return self.kind == "q2q1"

    @property
    def nsub(self) -> int:
        """Velocity sub-grids per component."""
        return 4 if self.is_q2 else 1

    @property
    def dim(self) -> int:
        return 2 * self.nsub + 1

    def coarse(self) -> "Discretization":
        return replace(self, h=2.0 * self.h)


@dataclass(frozen=True)
class Frequency:
    theta1: float
    theta2: float

    def __post_init__(self):
        for t in (self.theta1, self.theta2):
            if not (-math.pi / 2 <= t < 3 * math.pi / 2):
                raise ValueError(f"frequency component {t} outside [-pi/2, 3pi/2)")

    @property
    def is_low(self) -> bool:
        return self.theta1 < math.pi / 2 and self.theta2 < math.pi / 2


def frequency_samples(N: int) -> np.ndarray:
    """``theta_k = -pi/2 + 2*pi*k/N`` for ``k = 0..N-1``."""
    if N <= 0 or N % 4:
        raise ValueError("N must be a positive multiple of 4")
    return -np.pi / 2 + 2 * np.pi * np.arange(N) / N


def high_frequencies(N: int):
    t = frequency_samples(N)
    t1, t2 = np.meshgrid(t, t, indexing="ij")
    mask = (t1 >= np.pi / 2) | (t2 >= np.pi / 2)
    return t1[mask], t2[mask]


def low_frequencies(N: int):
    t = frequency_samples(N)
    t = t[t < np.pi / 2]
    t1, t2 = np.meshgrid(t, t, indexing="ij")
    return t1.ravel(), t2.ravel()


# --------------------------------------------------------------------------
# scalar Q1 symbols


def q1_scalar_symbols(t1, t2, h):
    """Stiffness ``a``, mass ``m`` and gradient symbols ``b1``, ``b2`` for Q1."""
    c1, c2 = np.cos(t1), np.cos(t2)
    a = (2.0 / 3.0) * (4 - c1 - c2 - 2 * c1 * c2)
    m = (h**2 / 9.0) * (4 + 2 * c1 + 2 * c2 + c1 * c2)
    b1 = (1j * h / 3.0) * np.sin(t1) * (2 + c2)
    b2 = (1j * h / 3.0) * (2 + c1) * np.sin(t2)
    return a, m, b1, b2


def stabilization_symbol(disc: Discretization, t1, t2):
    """Symbol ``c`` of the (negated) pressure-pressure block, including beta."""
    if disc.is_q2:
        raise ValueError("the stable Q2-Q1 discretization has no stabilization term")
    c1, c2 = np.cos(t1), np.cos(t2)
    h = disc.h
    if disc.kind == "posd":
        a = (2.0 / 3.0) * (4 - c1 - c2 - 2 * c1 * c2)
        return disc.beta * a * h**2
    mass = (4 + 2 * c1 + 2 * c2 + c1 * c2) / 9.0
    proj = (1 + c1) * (1 + c2) / 4.0
    return disc.beta * (mass - proj) * h**2


# --------------------------------------------------------------------------
# Q2 symbols


def q2_1d_symbols(theta, h):
    """1D Q2 stiffness and mass symbols, ordered (node, cell centre)."""
    theta = np.asarray(theta, dtype=float)
    c, ch = np.cos(theta), np.cos(theta / 2)
    A = np.empty(theta.shape + (2, 2))
    A[..., 0, 0] = 14 + 2 * c
    A[..., 0, 1] = A[..., 1, 0] = -16 * ch
    A[..., 1, 1] = 16
    M = np.empty_like(A)
    M[..., 0, 0] = 8 - 2 * c
    M[..., 0, 1] = M[..., 1, 0] = 4 * ch
    M[..., 1, 1] = 16
    return A / (3 * h), M * (h / 30)


def _kron2(ay, mx):
    # (..., 2, 2) x (..., 2, 2) -> (..., 4, 4), y index outer
    out = np.einsum("...ab,...cd->...acbd", ay, mx)
    return out.reshape(out.shape[:-4] + (4, 4))


def _q2_gradient_x(t1, t2, h):
    bn = (1j * h / 9) * np.sin(t1)
    bx = (4j * h / 9) * np.sin(t1 / 2)
    by = (2j * h / 9) * np.sin(t1) * np.cos(t2 / 2)
    bc = (8j * h / 9) * np.sin(t1 / 2) * np.cos(t2 / 2)
    return bn, bx, by, bc


def q2_component_symbols(t1, t2, h):
    """Velocity Laplacian ``A2`` (4x4) and gradient columns ``Bx``, ``By`` (4,).

    Sub-grid order is node, x-edge, y-edge, cell centre.
    """
    t1, t2 = np.broadcast_arrays(np.asarray(t1, dtype=float), np.asarray(t2, dtype=float))
    A1, M1 = q2_1d_symbols(t1, h)
    A2_, M2_ = q2_1d_symbols(t2, h)
    A2 = _kron2(A2_, M1) + _kron2(M2_, A1)
    bn, bx, by, bc = _q2_gradient_x(t1, t2, h)
    Bx = np.stack([bn, bx, by, bc], axis=-1)
    # argument swap exchanges the roles of the x- and y-edge sub-grids
    sn, sx, sy, sc = _q2_gradient_x(t2, t1, h)
    By = np.stack([sn, sy, sx, sc], axis=-1)
    return A2, Bx, By


# --------------------------------------------------------------------------
# block assembly


class Blocks(NamedTuple):
    """Symbol blocks of ``[[A, G], [G^H, -c]]`` plus pressure Laplacian/mass."""

    A: np.ndarray  # (..., 2k, 2k) velocity Laplacian
    G: np.ndarray  # (..., 2k) gradient column
    c: np.ndarray  # (...) stabilization symbol
    ap: np.ndarray  # (...) Q1 pressure Laplacian
    mp: np.ndarray  # (...) Q1 pressure mass


def velocity_diagonal(disc: Discretization) -> np.ndarray:
    """Diagonal of the assembled velocity operator, one entry per velocity sub-grid."""
    d = Q2_DIAGONAL if disc.is_q2 else Q1_DIAGONAL
    return np.concatenate([d, d])


def blocks(disc: Discretization, t1, t2) -> Blocks:
    t1, t2 = np.broadcast_arrays(np.asarray(t1, dtype=float), np.asarray(t2, dtype=float))
    a, m, b1, b2 = q1_scalar_symbols(t1, t2, disc.h)
    k = disc.nsub
    A = np.zeros(t1.shape + (2 * k, 2 * k))
    if disc.is_q2:
        A2, gx, gy = q2_component_symbols(t1, t2, disc.h)
        A[..., :4, :4] = A2
        A[..., 4:, 4:] = A2
        G = np.concatenate([gx, gy], axis=-1)
        c = np.zeros(t1.shape)
    else:
        A[..., 0, 0] = a
        A[..., 1, 1] = a
        G = np.stack([b1, b2], axis=-1)
        c = stabilization_symbol(disc, t1, t2)
    return Blocks(A=A, G=G, c=c, ap=a, mp=m)


def assemble(A, G, corner):
    """Build ``[[A, G], [G^H, corner]]`` batched."""
    n = A.shape[-1]
    out = np.zeros(A.shape[:-2] + (n + 1, n + 1), dtype=complex)
    out[..., :n, :n] = A
    out[..., :n, n] = G
    out[..., n, :n] = np.conj(G)
    out[..., n, n] = corner
    return out


def system_symbol(disc: Discretization, t1, t2) -> np.ndarray:
    """Symbol of the full saddle-point operator (3x3 for Q1-Q1, 9x9 for Q2-Q1)."""
    bl = blocks(disc, t1, t2)
    return assemble(bl.A, bl.G, -bl.c)


# --------------------------------------------------------------------------
# grid transfers

# Nodal interpolation weights in 1D: {fine type: {parity: {coarse type: {d: w}}}},
# where d = (fine point - coarse point) / h.
_Q1_WEIGHTS = {0: {0: {0: {0.0: 1.0}}, 1: {0: {1.0: 0.5, -1.0: 0.5}}}}
_Q2_WEIGHTS = {
    0: {0: {0: {0.0: 1.0}}, 1: {1: {0.0: 1.0}}},
    1: {
        0: {0: {0.5: 3 / 8, -1.5: -1 / 8}, 1: {-0.5: 3 / 4}},
        1: {0: {1.5: -1 / 8, -0.5: 3 / 8}, 1: {0.5: 3 / 4}},
    },
}


def _prolongation_1d_symbol(theta, weights, ntypes):
    """``c[a, s, t]``: coefficient of harmonic ``theta + pi*a`` on fine type ``s``
    when prolongating the coarse mode on coarse type ``t``."""
    theta = np.asarray(theta, dtype=float)
    out = np.zeros(theta.shape + (2, ntypes, ntypes), dtype=complex)
    for s, by_parity in weights.items():
        delta = 0.5 * s
        for p, by_coarse in by_parity.items():
            for t, taps in by_coarse.items():
                g = sum(w * np.exp(-1j * theta * d) for d, w in taps.items())
                for a in (0, 1):
                    out[..., a, s, t] += 0.5 * g * np.exp(-1j * np.pi * a * (p + delta))
    return out


def _prolongation_2d_symbol(t1, t2, q2: bool):
    weights, nt = (_Q2_WEIGHTS, 2) if q2 else (_Q1_WEIGHTS, 1)
    cx = _prolongation_1d_symbol(t1, weights, nt)
    cy = _prolongation_1d_symbol(t2, weights, nt)
    blocks_ = []
    for a1, a2 in HARMONICS:
        # [(sy, sx), (ty, tx)] = cy[a2][sy, ty] * cx[a1][sx, tx]
        blk = np.einsum("...ac,...bd->...abcd", cy[..., a2, :, :], cx[..., a1, :, :])
        blocks_.append(blk.reshape(blk.shape[:-4] + (nt * nt, nt * nt)))
    return np.stack(blocks_, axis=-3)  # (..., 4 harmonics, nsub, nsub)


def harmonics(t1, t2):
    """The four aliasing frequencies ``theta + pi*alpha`` in harmonic order."""
    t1 = np.asarray(t1, dtype=float)
    t2 = np.asarray(t2, dtype=float)
    h1 = np.stack([t1 + np.pi * a1 for a1, _ in HARMONICS], axis=-1)
    h2 = np.stack([t2 + np.pi * a2 for _, a2 in HARMONICS], axis=-1)
    return h1, h2


def transfer_symbol(disc: Discretization, t1, t2):
    """Stacked prolongation ``P`` (4*dim x dim) and restriction ``R`` (dim x 4*dim).

    ``t1, t2`` is the low frequency of the harmonic quadruple.  Restriction is
    the transpose of prolongation, whose symbol is ``4 * P^H``.
    """
    t1, t2 = np.broadcast_arrays(np.asarray(t1, dtype=float), np.asarray(t2, dtype=float))
    d = disc.dim
    k = disc.nsub
    pv = _prolongation_2d_symbol(t1, t2, disc.is_q2)
    pp = _prolongation_2d_symbol(t1, t2, False)
    P = np.zeros(t1.shape + (4, d, d), dtype=complex)
    P[..., :k, :k] = pv
    P[..., k : 2 * k, k : 2 * k] = pv
    P[..., 2 * k, 2 * k] = pp[..., 0, 0]
    P = P.reshape(t1.shape + (4 * d, d))
    R = 4 * np.conj(np.swapaxes(P, -1, -2))
    return P, R


def fine_harmonic_symbol(disc: Discretization, t1, t2, func):
    """Block-diagonal ``diag(func(theta^alpha))`` over the four harmonics."""
    h1, h2 = harmonics(t1, t2)
    per = func(disc, h1, h2)  # (..., 4, d, d)
    d = per.shape[-1]
    out = np.zeros(per.shape[:-3] + (4 * d, 4 * d), dtype=complex)
    for i in range(4):
        out[..., i * d : (i + 1) * d, i * d : (i + 1) * d] = per[..., i, :, :]
    return out


def coarse_symbol(disc: Discretization, t1, t2, coarsening: str = "redisc"):
    """Coarse operator symbol at ``2*theta``: rediscretized at ``2h`` or Galerkin."""
    if coarsening == "redisc":
        return system_symbol(disc.coarse(), 2 * np.asarray(t1), 2 * np.asarray(t2))
    if coarsening == "galerkin":
        P, R = transfer_symbol(disc, t1, t2)
        L = fine_harmonic_symbol(disc, t1, t2, system_symbol)
        return R @ L @ P
    raise ValueError(f"unknown coarsening {coarsening!r}")
