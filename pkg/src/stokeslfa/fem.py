"""Exact one-dimensional finite-element data and tensor-product assembly.

Every two-dimensional operator used here (Q1/Q2 stiffness, Q1 mass, the
mixed gradient blocks, the piecewise-constant projection) is a sum of
Kronecker products of one-dimensional periodic matrices.  Element matrices
are kept as exact fractions in element units; the mesh width enters only
through an explicit power of ``h``.

Sub-grid types follow the staggering of the biquadratic velocity:
``0`` nodes, ``1`` x-edge midpoints, ``2`` y-edge midpoints, ``3`` cell
centres.  One-dimensional types are ``0`` (node) and ``1`` (midpoint).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction as F

import numpy as np
import scipy.sparse as sp

# Offsets of the 2D sub-grid types in units of h, as (dx, dy).
SUBGRID_OFFSETS = {0: (F(0), F(0)), 1: (F(1, 2), F(0)), 2: (F(0), F(1, 2)), 3: (F(1, 2), F(1, 2))}
SUBGRID_NAMES = ("N", "X", "Y", "C")


@dataclass(frozen=True)
class Element1D:
    """A 1D element: local dof positions (in element units) and their types."""

    positions: tuple
    types: tuple

    @property
    def ntypes(self):
        return max(self.types) + 1


Q1_ELEMENT = Element1D(positions=(F(0), F(1)), types=(0, 0))
Q2_ELEMENT = Element1D(positions=(F(0), F(1), F(1, 2)), types=(0, 0, 1))


def _frac_matrix(rows, scale=1):
    return [[F(v) * scale for v in row] for row in rows]


# (matrix, power of h); matrices are indexed [test local dof, trial local dof].
Q1_STIFFNESS = (_frac_matrix([[1, -1], [-1, 1]]), -1)
Q1_MASS = (_frac_matrix([[2, 1], [1, 2]], F(1, 6)), 1)
Q1_GRADIENT = (_frac_matrix([[-1, 1], [-1, 1]], F(1, 2)), 0)
# integral of the element mean against each test function, i.e. (1/h)(int phi_i)(int phi_j)
Q1_PROJECTION = (_frac_matrix([[1, 1], [1, 1]], F(1, 4)), 1)

Q2_STIFFNESS = (_frac_matrix([[7, 1, -8], [1, 7, -8], [-8, -8, 16]], F(1, 3)), -1)
Q2_MASS = (_frac_matrix([[4, -1, 2], [-1, 4, 2], [2, 2, 16]], F(1, 30)), 1)
# Q2 test functions against Q1 trial functions
Q2Q1_MASS = (_frac_matrix([[F(1, 6), 0], [0, F(1, 6)], [F(1, 3), F(1, 3)]]), 1)
Q2Q1_GRADIENT = (_frac_matrix([[F(-1, 6), F(1, 6)], [F(-1, 6), F(1, 6)], [F(-2, 3), F(2, 3)]]), 0)


def stencils_1d(matrix, test: Element1D, trial: Element1D):
    """Assemble 1D stencils ``{(test type, trial type): {offset: value}}``.

    Offsets are in units of h from the test dof to the trial dof.
    """
    out = {}
    for i, ti in enumerate(test.types):
        for j, tj in enumerate(trial.types):
            value = matrix[i][j]
            offset = trial.positions[j] - test.positions[i]
            entry = out.setdefault((ti, tj), {})
            entry[offset] = entry.get(offset, F(0)) + value
    for entry in out.values():
        for k in [k for k, v in entry.items() if v == 0]:
            del entry[k]
    return out


def tensor_stencils(sy, sx):
    """Tensor product of two 1D stencil families, y outer and x inner.

    Returns ``{(test subgrid, trial subgrid): {(ox, oy): value}}``.
    """
    nty = 1 + max(t for t, _ in sy)
    ntx = 1 + max(t for t, _ in sx)
    nsy = 1 + max(s for _, s in sy)
    nsx = 1 + max(s for _, s in sx)
    out = {}
    for ty in range(nty):
        for tx in range(ntx):
            for s_y in range(nsy):
                for s_x in range(nsx):
                    ey = sy.get((ty, s_y), {})
                    ex = sx.get((tx, s_x), {})
                    entry = {}
                    for oy, vy in ey.items():
                        for ox, vx in ex.items():
                            entry[(ox, oy)] = vy * vx
                    if entry:
                        out[(ty * ntx + tx, s_y * nsx + s_x)] = entry
    return out


def periodic_matrix_1d(matrix, test: Element1D, trial: Element1D, n: int, h: float, hpow: int):
    """Assemble a 1D periodic matrix on ``n`` elements.

    Global dofs are ordered type-major: all nodes, then all midpoints.
    """
    rows, cols, vals = [], [], []
    for e in range(n):
        for i, ti in enumerate(test.types):
            gi = _global_index(e, test, i, n)
            for j, _ in enumerate(trial.types):
                v = matrix[i][j]
                if v == 0:
                    continue
                rows.append(gi)
                cols.append(_global_index(e, trial, j, n))
                vals.append(float(v))
    mat = sp.coo_matrix((vals, (rows, cols)), shape=(test.ntypes * n, trial.ntypes * n)).tocsr()
    mat.sum_duplicates()
    return mat * (h**hpow)


def _global_index(e, elem: Element1D, local, n):
    pos = elem.positions[local]
    t = elem.types[local]
    if t == 0:
        return (e + int(pos)) % n
    return n + e


def subgrid_permutation(n: int, nty: int, ntx: int):
    """Map the kron ordering (ty, jy, tx, ix) to sub-grid-major (ty, tx, jy, ix).

    Returns ``perm`` with ``new_vector = old_vector[perm]``.
    """
    ty, tx, jy, ix = np.meshgrid(np.arange(nty), np.arange(ntx), np.arange(n), np.arange(n), indexing="ij")
    old = ((ty * n + jy) * ntx + tx) * n + ix
    return old.ravel()


def kron2d(my, mx, n_test: int, n_trial: int, test_types=(1, 1), trial_types=(1, 1)):
    """2D operator ``my (x) mx`` reordered so each sub-grid is a contiguous block."""
    mat = sp.kron(my, mx, format="csr")
    pt = subgrid_permutation(n_test, *test_types)
    ps = subgrid_permutation(n_trial, *trial_types)
    return mat[pt][:, ps].tocsr()


def prolongation_1d(elem: Element1D, n_coarse: int):
    """Nodal interpolation from ``n_coarse`` periodic elements to ``2*n_coarse``.

    Coarse basis functions are evaluated at the fine dof locations.
    """
    nf = 2 * n_coarse
    fine_pos, coarse_pos = _dof_positions(elem, nf), _dof_positions(elem, n_coarse)
    rows, cols, vals = [], [], []
    for fi, xf in enumerate(fine_pos):
        # xf in fine element units; coarse element index and local coordinate
        xc = xf / 2
        e = int(xc) % n_coarse
        t = xc - int(xc)
        for j in range(len(elem.positions)):
            w = _basis_value(elem, j, t)
            if w == 0:
                continue
            rows.append(fi)
            cols.append(_global_index(e, elem, j, n_coarse))
            vals.append(float(w))
    mat = sp.coo_matrix((vals, (rows, cols)), shape=(len(fine_pos), len(coarse_pos))).tocsr()
    mat.sum_duplicates()
    return mat


def _dof_positions(elem: Element1D, n: int):
    pos = [F(i) for i in range(n)]
    if elem.ntypes == 2:
        pos += [F(i) + F(1, 2) for i in range(n)]
    return pos


def _basis_value(elem: Element1D, local: int, t):
    """Lagrange basis function ``local`` at local coordinate ``t`` in [0, 1)."""
    val = F(1)
    for k, pk in enumerate(elem.positions):
        if k != local:
            val *= (t - pk) / (elem.positions[local] - pk)
    return val
