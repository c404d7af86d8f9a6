"""Registry of the reproducible convergence tables.

Each cycle table lists six cycle variants and carries reference values for
the LFA two-grid prediction (``h = 1/128``) and the measured averaged
factors on ``n = 64`` and ``n = 128`` element meshes.  ``None`` marks an
overflowed reference entry; any reference above 1 is a divergent run.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .relaxation import RelaxScheme

CYCLES = ((0, 1), (1, 0), (1, 1), (1, 2), (2, 1), (2, 2))


@dataclass(frozen=True)
class TableSpec:
    id: str
    title: str
    disc: str
    scheme: RelaxScheme
    cycle: str = "W"
    lfa_scheme: RelaxScheme | None = None  # scheme whose two-grid factor is listed, if different
    lfa: tuple | None = None
    measured: dict = field(default_factory=dict)  # n -> tuple over CYCLES
    inner_cycles: dict = field(default_factory=dict)  # n -> tuple over CYCLES

    @property
    def analysis_scheme(self) -> RelaxScheme:
        return self.lfa_scheme or self.scheme

    def scheme_for(self, n: int, column: int) -> RelaxScheme:
        if n in self.inner_cycles:
            return self.scheme.with_params(inner_cycles=self.inner_cycles[n][column])
        return self.scheme


@dataclass(frozen=True)
class LFARow:
    label: str
    scheme: RelaxScheme
    mu: float
    rho: float


@dataclass(frozen=True)
class LFATable:
    """Smoothing and two-grid factors (nu1 + nu2 = 1) for several parameter sets."""

    id: str
    title: str
    disc: str
    rows: tuple


def _ibsr(alpha, omega, omega_j, sweeps=2, **kw):
    return RelaxScheme("ibsr", alpha=alpha, omega=omega, omega_j=omega_j, sweeps=sweeps, **kw)


_POSD_BSR = RelaxScheme("bsr", alpha=1.0, omega=8 / 9)
_PRSD_BSR = RelaxScheme("bsr", alpha=1.2, omega=8 * 1.2 / 9)
_Q2_BSR = RelaxScheme("bsr", alpha=1.1, omega=1.05)
_DWJ2 = RelaxScheme("dwj2", alpha1=1.5, omega_j=1.0, omega=4 / 3)
_DWJ2_MEASURED = {64: (0.324, 0.324, 0.112, 0.074, 0.075, 0.074), 128: (0.324, 0.324, 0.112, 0.075, 0.075, 0.073)}

TABLES = {
    t.id: t
    for t in (
        TableSpec(
            "posd-dwj-w",
            "DWJ, Poisson-stabilized Q1-Q1, W-cycles",
            "posd",
            RelaxScheme("dwj1", alpha1=1.451, alpha2=1.0, omega=1.290),
            lfa=(0.618, 0.618, 0.382, 0.236, 0.236, 0.146),
            measured={
                64: (0.564, 0.568, 0.349, 0.215, 0.214, 0.133),
                128: (0.561, 0.568, 0.348, 0.215, 0.214, 0.132),
            },
        ),
        TableSpec(
            "posd-dwj2-w",
            "DWJ with two pressure Jacobi sweeps, Poisson-stabilized Q1-Q1, W-cycles",
            "posd",
            _DWJ2,
            lfa=(0.338, 0.338, 0.115, 0.078, 0.078, 0.061),
            measured=_DWJ2_MEASURED,
        ),
        TableSpec(
            "prsd-dwj-w",
            "DWJ, projection-stabilized Q1-Q1, W-cycles",
            "prsd",
            RelaxScheme("dwj1", alpha1=1.0, alpha2=1.0, omega=108 / 97),
            lfa=(0.670, 0.670, 0.449, 0.300, 0.300, 0.201),
            measured={
                64: (0.652, 0.652, 0.436, 0.291, 0.292, 0.196),
                128: (0.651, 0.652, 0.435, 0.291, 0.291, 0.195),
            },
        ),
        TableSpec(
            "prsd-dwj2-w",
            "DWJ with two pressure Jacobi sweeps, projection-stabilized Q1-Q1, W-cycles",
            "prsd",
            _DWJ2,
            lfa=(0.333, 0.333, 0.112, 0.079, 0.079, 0.062),
            measured=_DWJ2_MEASURED,
        ),
        TableSpec(
            "posd-bsr-w",
            "Exact Braess-Sarazin, Poisson-stabilized Q1-Q1, W-cycles",
            "posd",
            _POSD_BSR,
            lfa=(0.333, 0.333, 0.111, 0.079, 0.079, 0.062),
            measured={
                64: (0.324, 0.323, 0.112, 0.075, 0.075, 0.058),
                128: (0.323, 0.323, 0.112, 0.075, 0.075, 0.058),
            },
        ),
        TableSpec(
            "posd-ibsr2-tg",
            "Inexact Braess-Sarazin (2 Jacobi sweeps), Poisson-stabilized Q1-Q1, two-grid cycles",
            "posd",
            _ibsr(1.1, 1.0, 1.0),
            cycle="TG",
            lfa=(0.366, 0.366, 0.167, 0.128, 0.128, 0.106),
            measured={
                64: (0.352, 0.353, 0.160, 0.120, 0.120, 0.100),
                128: (0.352, 0.353, 0.160, 0.122, 0.122, 0.100),
            },
        ),
        TableSpec(
            "posd-ibsr2-w",
            "Inexact Braess-Sarazin (2 Jacobi sweeps), Poisson-stabilized Q1-Q1, W-cycles",
            "posd",
            _ibsr(1.1, 1.0, 1.0),
            lfa=(0.366, 0.366, 0.167, 0.128, 0.128, 0.106),
            measured={
                64: (0.456, 0.453, 0.245, 0.197, 0.200, 0.167),
                128: (0.459, 0.462, 0.257, 0.206, 0.211, 0.175),
            },
        ),
        TableSpec(
            "posd-ibsr-innerw",
            "Inexact Braess-Sarazin with inner W(1,1) Schur cycles, Poisson-stabilized Q1-Q1, W-cycles",
            "posd",
            _ibsr(1.0, 8 / 9, 1.0),
            lfa_scheme=_POSD_BSR,
            lfa=(0.333, 0.333, 0.111, 0.079, 0.079, 0.062),
            measured={
                64: (0.368, 0.346, 0.131, 0.075, 0.075, 0.059),
                128: (0.343, 0.351, 0.111, 0.075, 0.075, 0.063),
            },
            inner_cycles={64: (2, 2, 2, 2, 2, 1), 128: (2, 2, 2, 2, 2, 1)},
        ),
        TableSpec(
            "prsd-bsr-w",
            "Exact Braess-Sarazin, projection-stabilized Q1-Q1, W-cycles",
            "prsd",
            _PRSD_BSR,
            lfa=(0.673, 0.673, 0.111, 0.079, 0.079, 0.062),
            measured={
                64: (0.585, 0.585, 0.112, 0.075, 0.075, 0.058),
                128: (0.584, 0.584, 0.112, 0.075, 0.075, 0.058),
            },
        ),
        TableSpec(
            "prsd-ibsr2-tg",
            "Inexact Braess-Sarazin (2 Jacobi sweeps), projection-stabilized Q1-Q1, two-grid cycles",
            "prsd",
            _ibsr(1.2, 0.9, 1.2),
            cycle="TG",
            lfa=(0.445, 0.445, 0.319, 0.262, 0.262, 0.225),
            measured={
                64: (0.418, 0.420, 0.301, 0.251, 0.250, 0.212),
                128: (0.420, 0.420, 0.304, 0.250, 0.249, 0.212),
            },
        ),
        TableSpec(
            "prsd-ibsr2-w",
            "Inexact Braess-Sarazin (2 Jacobi sweeps), projection-stabilized Q1-Q1, W-cycles",
            "prsd",
            _ibsr(1.2, 0.9, 1.2),
            lfa=(0.445, 0.445, 0.319, 0.262, 0.262, 0.225),
            measured={
                64: (0.739, 0.740, 0.340, 0.304, 0.299, 0.268),
                128: (0.736, 0.735, 0.342, 0.309, 0.311, 0.276),
            },
        ),
        TableSpec(
            "prsd-ibsr-innerw",
            "Inexact Braess-Sarazin with inner W(1,1) Schur cycles, projection-stabilized Q1-Q1, W-cycles",
            "prsd",
            _ibsr(1.2, 16 / 15, 1.1),
            lfa_scheme=RelaxScheme("bsr", alpha=1.2, omega=16 / 15),
            lfa=(0.673, 0.673, 0.111, 0.079, 0.079, 0.062),
            measured={
                64: (0.680, 0.677, 0.112, 0.075, 0.075, 0.059),
                128: (0.659, 0.662, 0.112, 0.075, 0.075, 0.067),
            },
            inner_cycles={64: (4, 1, 3, 2, 2, 1), 128: (1, 1, 3, 2, 2, 1)},
        ),
        TableSpec(
            "q2q1-ibsr2",
            "Inexact Braess-Sarazin (2 Jacobi sweeps), Q2-Q1, W-cycles",
            "q2q1",
            _ibsr(1.1, 1.05, 1.0),
            lfa_scheme=_Q2_BSR,
            lfa=(4.893, 4.893, 0.249, 0.109, 0.109, 0.090),
            measured={
                64: (None, None, 0.434, 0.131, 0.130, 0.085),
                128: (None, None, 0.437, 0.130, 0.130, 0.085),
            },
        ),
        TableSpec(
            "q2q1-ibsr3",
            "Inexact Braess-Sarazin (3 Jacobi sweeps), Q2-Q1, W-cycles",
            "q2q1",
            _ibsr(1.1, 1.05, 1.0, sweeps=3),
            lfa_scheme=_Q2_BSR,
            lfa=(4.893, 4.893, 0.249, 0.109, 0.109, 0.090),
            measured={
                64: (491.373, 492.094, 0.240, 0.104, 0.104, 0.085),
                128: (None, None, 0.240, 0.104, 0.104, 0.085),
            },
        ),
    )
}

LFA_TABLES = {
    t.id: t
    for t in (
        LFATable(
            "posd-ibsr-lfa",
            "Inexact Braess-Sarazin parameter choices, Poisson-stabilized Q1-Q1",
            "posd",
            (
                LFARow("1 sweep (optimized)", _ibsr(1.2, 1.1, 0.7, sweeps=1), 0.679, 0.679),
                LFARow("1 sweep", _ibsr(1.0, 8 / 9, 1.0, sweeps=1), 0.669, 0.735),
                LFARow("2 sweeps (optimized)", _ibsr(1.1, 1.0, 1.0), 0.366, 0.366),
                LFARow("2 sweeps", _ibsr(1.0, 8 / 9, 1.0), 0.461, 0.461),
            ),
        ),
        LFATable(
            "prsd-ibsr-lfa",
            "Inexact Braess-Sarazin parameter choices, projection-stabilized Q1-Q1",
            "prsd",
            (
                LFARow("1 sweep (optimized)", _ibsr(1.6, 0.8, 1.0, sweeps=1), 0.714, 0.714),
                LFARow("1 sweep", _ibsr(1.2, 16 / 15, 1.0, sweeps=1), 0.718, 1.027),
                LFARow("2 sweeps (optimized)", _ibsr(1.2, 0.9, 1.2), 0.494, 0.445),
                LFARow("2 sweeps", _ibsr(1.2, 16 / 15, 1.0), 0.431, 0.549),
            ),
        ),
    )
}


def is_divergent(reference) -> bool:
    return reference is None or reference > 1


def table_ids() -> list[str]:
    return sorted(set(TABLES) | set(LFA_TABLES))


def get_table(table_id: str):
    if table_id in TABLES:
        return TABLES[table_id]
    if table_id in LFA_TABLES:
        return LFA_TABLES[table_id]
    raise KeyError(f"unknown table id {table_id!r}; known: {', '.join(table_ids())}")
