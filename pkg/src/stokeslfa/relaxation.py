"""Error-propagation symbols of the block relaxation schemes.

Every scheme is written as ``S = I - omega * X * M^{-1} * L`` with ``L`` the
system symbol, ``M`` the symbol of the approximate (block) solve and ``X``
the distributor (identity except for the distributive schemes).  Closed
forms for the eigenvalues of the Q1-Q1 schemes are provided separately and
serve as an independent check of the dense route.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from . import symbols as sym

SCHEMES = ("dwj1", "dwj2", "bsr", "ibsr", "uzawa-schur", "uzawa-mass", "uzawa-diag")

# Parameters read by each scheme; the rest are ignored.
SCHEME_PARAMS = {
    "dwj1": ("alpha1", "alpha2", "omega"),
    "dwj2": ("alpha1", "omega_j", "omega"),
    "bsr": ("alpha", "omega"),
    "ibsr": ("alpha", "omega", "omega_j"),
    "uzawa-schur": ("alpha", "omega"),
    "uzawa-mass": ("alpha", "omega", "delta"),
    "uzawa-diag": ("alpha", "omega", "sigma"),
}


@dataclass(frozen=True)
class RelaxScheme:
    """A relaxation method and its parameters."""

    kind: str
    alpha: float = 1.0
    alpha1: float = 1.0
    alpha2: float = 1.0
    omega: float = 1.0
    omega_j: float = 1.0
    delta: float = 1.0
    sigma: float = 1.0
    sweeps: int = 2
    inner_cycles: int = 0

    def __post_init__(self):
        if self.kind not in SCHEMES:
            raise ValueError(f"unknown relaxation scheme {self.kind!r}; expected one of {SCHEMES}")
        if self.omega < 0:
            raise ValueError("omega must be non-negative")
        for name in SCHEME_PARAMS[self.kind]:
            if name == "omega":
                continue
            # omega_j = 0 in DWJ2 switches the pressure update off
            if self.kind == "dwj2" and name == "omega_j" and self.omega_j == 0:
                continue
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive for {self.kind}")
        if self.kind == "ibsr" and self.sweeps < 1:
            raise ValueError("IBSR needs at least one Jacobi sweep")
        if self.inner_cycles < 0:
            raise ValueError("inner_cycles must be non-negative")

    def with_params(self, **kw) -> "RelaxScheme":
        return replace(self, **kw)

    def params(self) -> dict:
        out = {k: getattr(self, k) for k in SCHEME_PARAMS[self.kind]}
        if self.kind == "ibsr":
            out["sweeps"] = self.sweeps
            if self.inner_cycles:
                out["inner_cycles"] = self.inner_cycles
        return out


def _batch(t1, t2):
    return np.broadcast_arrays(np.asarray(t1, dtype=float), np.asarray(t2, dtype=float))


@lru_cache(maxsize=None)
def schur_diagonal_unit(kind: str) -> float:
    """``diag(B D^{-1} B^T + C) / h^2`` at ``alpha = 1`` split as (schur part, C part).

    Returned as the Schur part only; add ``diag(C)/h^2`` separately.
    """
    from .gridops import exact_stencils

    disc = sym.Discretization(kind, h=1.0)
    st = exact_stencils(disc)
    diag = sym.velocity_diagonal(disc)[: disc.nsub]
    total = 0.0
    for grad in (st.Bx, st.By):
        for t, stencil in grad.items():
            total += float(sum(v * v for v in stencil.entries.values())) / diag[t]
    return total


def stabilization_diagonal_unit(disc: sym.Discretization) -> float:
    """``diag(C) / h^2``."""
    if disc.kind == "posd":
        return disc.beta * 8.0 / 3.0
    if disc.kind == "prsd":
        return disc.beta * (4.0 / 9.0 - 1.0 / 4.0)
    return 0.0


def schur_diagonal(scheme: RelaxScheme, disc: sym.Discretization) -> float:
    """Diagonal of ``S = B (alpha D)^{-1} B^T + C``."""
    return disc.h**2 * (schur_diagonal_unit(disc.kind) / scheme.alpha + stabilization_diagonal_unit(disc))


def ibsr_schur_symbols(scheme: RelaxScheme, disc: sym.Discretization, t1, t2):
    """``(varsigma, gamma, tau, eta)`` for inexact Braess-Sarazin.

    ``varsigma`` is the symbol of ``B (alpha D)^{-1} B^T``, ``tau`` that of the
    full approximate Schur complement, ``gamma = -diag(S)/omega_J`` and ``eta``
    the pressure entry of the IBSR preconditioner after ``sweeps`` Jacobi sweeps.
    """
    t1, t2 = _batch(t1, t2)
    bl = sym.blocks(disc, t1, t2)
    dinv = 1.0 / (scheme.alpha * sym.velocity_diagonal(disc))
    varsigma = np.sum(np.abs(bl.G) ** 2 * dinv, axis=-1)
    gamma = -schur_diagonal(scheme, disc) / scheme.omega_j
    tau = varsigma + bl.c
    w = -1.0 / gamma
    # m Jacobi sweeps from zero: X_m = w * sum_k (1 - w tau)^k approximates tau^{-1}
    amp = 1.0 - w * tau
    x = np.zeros_like(tau)
    term = np.ones_like(tau)
    for _ in range(scheme.sweeps):
        x = x + term
        term = term * amp
    x = w * x
    eta = -1.0 / x + varsigma
    return varsigma, np.full(tau.shape, gamma), tau, eta


def _velocity_block(scheme, disc, alpha, shape):
    d = sym.velocity_diagonal(disc) * alpha
    out = np.zeros(shape + (d.size, d.size))
    idx = np.arange(d.size)
    out[..., idx, idx] = d
    return out


def _dwj_pressure_inverse(scheme, disc, bl):
    """Inverse of the pressure entry of the DWJ preconditioner."""
    h2 = disc.h**2
    if scheme.kind == "dwj1":
        return np.full(bl.c.shape, 1.0 / (scheme.alpha2 * h2))
    g = np.sum(np.abs(bl.G) ** 2, axis=-1) + bl.c * bl.ap
    wj = scheme.omega_j / h2
    return 2 * wj - wj**2 * g


def preconditioner_symbol(scheme: RelaxScheme, disc: sym.Discretization, t1, t2):
    """``(M, X)``: approximate-solve symbol and distributor (``None`` if identity)."""
    t1, t2 = _batch(t1, t2)
    bl = sym.blocks(disc, t1, t2)
    h2 = disc.h**2
    shape = t1.shape
    k = scheme.kind
    if k in ("dwj1", "dwj2"):
        dim = bl.G.shape[-1]
        X = sym.assemble(np.broadcast_to(np.eye(dim), shape + (dim, dim)), bl.G, -bl.ap)
        X[..., dim, :dim] = 0.0
        with np.errstate(divide="ignore"):
            corner = 1.0 / _dwj_pressure_inverse(scheme, disc, bl)
        M = sym.assemble(_velocity_block(scheme, disc, scheme.alpha1, shape), 0 * bl.G, corner)
        M[..., dim, :dim] = np.conj(bl.G)
        return M, X
    Dv = _velocity_block(scheme, disc, scheme.alpha, shape)
    if k == "bsr":
        return sym.assemble(Dv, bl.G, -bl.c), None
    if k == "ibsr":
        *_, eta = ibsr_schur_symbols(scheme, disc, t1, t2)
        return sym.assemble(Dv, bl.G, eta), None
    if k == "uzawa-schur":
        varsigma = np.sum(np.abs(bl.G) ** 2 / np.diagonal(Dv, axis1=-2, axis2=-1), axis=-1)
        shat = varsigma + bl.c
    elif k == "uzawa-mass":
        shat = bl.c + scheme.delta * bl.mp
    else:
        shat = np.full(shape, scheme.sigma * h2)
    M = sym.assemble(Dv, 0 * bl.G, -shat)
    M[..., -1, :-1] = np.conj(bl.G)
    return M, None


def smoother_symbol(scheme: RelaxScheme, disc: sym.Discretization, t1, t2) -> np.ndarray:
    """Error-propagation symbol ``S(theta)``, shape ``(..., dim, dim)``."""
    L = sym.system_symbol(disc, t1, t2)
    M, X = preconditioner_symbol(scheme, disc, t1, t2)
    if X is not None:
        # block lower-triangular solve; stays finite when the pressure inverse vanishes
        bl = sym.blocks(disc, *_batch(t1, t2))
        k = L.shape[-1] - 1
        Zv = L[..., :k, :] / np.diagonal(M, axis1=-2, axis2=-1)[..., :k, None]
        Zp = _dwj_pressure_inverse(scheme, disc, bl)[..., None] * (
            L[..., k, :] - np.einsum("...i,...ij->...j", np.conj(bl.G), Zv)
        )
        Z = np.concatenate([Zv, Zp[..., None, :]], axis=-2)
    else:
        Z = np.linalg.solve(M, L)
    if X is not None:
        Z = X @ Z
    return np.eye(L.shape[-1]) - scheme.omega * Z


# --------------------------------------------------------------------------
# closed forms (Q1-Q1 only)


@dataclass
class ClosedFormEigs:
    """Closed-form eigenvalue data; ``smoother`` holds the predicted eigenvalues of ``S``."""

    y1: np.ndarray
    y2: np.ndarray
    y3: np.ndarray
    lambda1: np.ndarray
    lambda2: np.ndarray
    lambda3: np.ndarray
    smoother: np.ndarray


def _quadratic_roots(c2, c1, c0):
    """Roots of ``c2 x^2 + c1 x + c0`` (batched, complex)."""
    c2, c1, c0 = (np.asarray(v, dtype=complex) for v in (c2, c1, c0))
    root = np.sqrt(c1 * c1 - 4 * c2 * c0)
    # cancellation-free form; requires c2 != 0 and q != 0
    q = -0.5 * (c1 + np.where(np.real(np.conj(c1) * root) >= 0, root, -root))
    return q / c2, c0 / q


def closed_form_eigs(scheme: RelaxScheme, disc: sym.Discretization, t1, t2) -> ClosedFormEigs:
    if disc.is_q2:
        raise ValueError("closed-form eigenvalues exist only for the stabilized Q1-Q1 discretizations")
    t1, t2 = _batch(t1, t2)
    a, m, b1, b2 = sym.q1_scalar_symbols(t1, t2, disc.h)
    c = sym.stabilization_symbol(disc, t1, t2)
    h2 = disc.h**2
    b = np.real(-(b1 * b1 + b2 * b2))
    y1 = 3 * a / 8
    y2 = (b + a * c) / h2
    y3 = scheme.omega_j * y2 * (2 - scheme.omega_j * y2)
    kappa = 8 * scheme.alpha / 3
    lam1 = np.ones_like(a)
    lam2 = 3 * a / (8 * scheme.alpha)
    with np.errstate(divide="ignore", invalid="ignore"):
        lam3 = (a * c + b) / (kappa * c + b)
    k = scheme.kind
    w = scheme.omega
    if k == "dwj1":
        s = [1 - w / scheme.alpha1 * y1] * 2 + [1 - w / scheme.alpha2 * y2]
    elif k == "dwj2":
        s = [1 - w / scheme.alpha1 * y1] * 2 + [1 - w * y3]
    elif k == "bsr":
        s = [1 - w * lam1, 1 - w * lam2, 1 - w * lam3]
    else:
        # velocity root a = kappa*lambda, plus a quadratic from the pressure coupling
        if k == "ibsr":
            *_, eta = ibsr_schur_symbols(scheme, disc, t1, t2)
            r1, r2 = _quadratic_roots(b - kappa * eta, a * eta - kappa * c - 2 * b, a * c + b)
        else:
            if k == "uzawa-schur":
                shat = b / kappa + c
            elif k == "uzawa-mass":
                shat = c + scheme.delta * m
            else:
                shat = np.full_like(a, scheme.sigma * h2)
            r1, r2 = _quadratic_roots(-kappa * shat, a * shat + kappa * c + b, -(a * c + b))
        lam1, lam3 = r1, r2
        s = [1 - w * lam2, 1 - w * r1, 1 - w * r2]
    return ClosedFormEigs(y1, y2, y3, lam1, lam2, lam3, np.stack(s, axis=-1))


def bsr_determinant(scheme: RelaxScheme, disc: sym.Discretization, t1, t2, lam):
    """Factored ``det(L - lam*M)`` for exact (``pi_E``) or inexact (``pi_I``) BSR."""
    a, _, b1, b2 = sym.q1_scalar_symbols(t1, t2, disc.h)
    c = sym.stabilization_symbol(disc, t1, t2)
    b = np.real(-(b1 * b1 + b2 * b2))
    kappa = 8 * scheme.alpha / 3
    if scheme.kind == "bsr":
        return (1 - lam) * (a - kappa * lam) * ((1 - lam) * (-b) + (kappa * lam - a) * c)
    if scheme.kind == "ibsr":
        *_, eta = ibsr_schur_symbols(scheme, disc, t1, t2)
        return -(a - kappa * lam) * ((b - kappa * eta) * lam**2 + (a * eta - kappa * c - 2 * b) * lam + a * c + b)
    raise ValueError("determinant factorization is available for bsr and ibsr only")
