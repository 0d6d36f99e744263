"""Sufficient entanglement criteria for Bell-diagonal states.

Each criterion exists as a single-state predicate returning a
:class:`CriterionVerdict` and as a vectorised ``*_scores`` function over a
batch of coordinate rows, which is what the pipeline uses.  Thresholds are
one-sided: a state is only reported as detected beyond ``threshold + eps``,
so rounding noise yields "not detected" rather than a wrong label.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any

import numpy as np

from .weyl import (
    bell_projectors,
    bell_vectors,
    density_from_coords,
    dimension_of,
    index_of,
    omega,
    partial_transpose,
    point_of,
    realign,
    validate_coords,
)

EPS_PPT = 1e-10
EPS_DET = 1e-9


class UnsupportedCriterion(ValueError):
    pass


class Criterion(str, enum.Enum):
    E1 = "E1"
    E2 = "E2"
    E3 = "E3"
    E4 = "E4"
    E5 = "E5"
    S1 = "S1"
    S2 = "S2"


ENTANGLEMENT = (Criterion.E2, Criterion.E3, Criterion.E4, Criterion.E5)
SEPARABILITY = (Criterion.S1, Criterion.S2)


@dataclass(frozen=True)
class CriterionVerdict:
    """Outcome of one criterion on one state.

    ``margin`` is the signed distance past the detection threshold; it is
    positive exactly when ``detected`` is true.
    """

    criterion: Criterion
    detected: bool
    score: float
    margin: float
    info: dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not np.isfinite(self.score):
            raise ValueError(f"{self.criterion.value}: non-finite score")
        if self.detected and not self.margin > 0:
            raise ValueError(f"{self.criterion.value}: detected with margin {self.margin}")


def verdict(criterion: Criterion, score: float, margin: float, **info) -> CriterionVerdict:
    return CriterionVerdict(criterion, bool(margin > 0), float(score), float(margin), info)


# --- E1: positive partial transpose ---------------------------------------


@lru_cache(maxsize=None)
def _pt_stack(d: int) -> np.ndarray:
    s = partial_transpose(bell_projectors(d), d)
    s.setflags(write=False)
    return s


def ppt_min_eigenvalues(C: np.ndarray) -> np.ndarray:
    """Smallest eigenvalue of the partial transpose for each coordinate row."""
    C = np.atleast_2d(C)
    d = dimension_of(C)
    mats = np.tensordot(C, _pt_stack(d), axes=(1, 0))
    return np.linalg.eigvalsh(mats)[:, 0]


def e1_ppt(c) -> CriterionVerdict:
    c = validate_coords(c)
    d = dimension_of(c)
    rho_pt = partial_transpose(density_from_coords(c), d)
    lam = float(np.linalg.eigvalsh(rho_pt)[0])
    return verdict(Criterion.E1, lam, -lam - EPS_PPT)


def e1_margins(C: np.ndarray) -> np.ndarray:
    return -ppt_min_eigenvalues(C) - EPS_PPT


# --- E2: realignment --------------------------------------------------------


@lru_cache(maxsize=None)
def _realign_stack(d: int) -> np.ndarray:
    s = realign(bell_projectors(d), d)
    s.setflags(write=False)
    return s


def realignment_norms(C: np.ndarray) -> np.ndarray:
    """Trace norm of the realigned matrix for each coordinate row."""
    C = np.atleast_2d(C)
    d = dimension_of(C)
    mats = np.tensordot(C, _realign_stack(d), axes=(1, 0))
    return np.linalg.svd(mats, compute_uv=False).sum(axis=-1)


def e2_realignment(c) -> CriterionVerdict:
    c = validate_coords(c)
    d = dimension_of(c)
    score = float(np.linalg.svd(realign(density_from_coords(c), d), compute_uv=False).sum())
    return verdict(Criterion.E2, score, score - 1.0 - EPS_DET)


# --- E3: quasi-pure concurrence ---------------------------------------------


@lru_cache(maxsize=None)
def _reflections(d: int) -> np.ndarray:
    """``table[p, i]`` is the index of ``2 p - i`` in Z_d x Z_d."""
    table = np.empty((d * d, d * d), dtype=np.intp)
    for p in range(d * d):
        n, m = point_of(p, d)
        for i in range(d * d):
            k, l = point_of(i, d)
            table[p, i] = index_of(2 * n - k, 2 * m - l, d)
    table.setflags(write=False)
    return table


def quasipure_terms(C: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(S, centre)``: the terms ``S_{k,l}`` and the argmax index.

    Ties for the largest coordinate go to the smallest flat index.
    """
    C = np.atleast_2d(np.asarray(C, dtype=float))
    d = dimension_of(C)
    centre = np.argmax(C, axis=1)
    rows = np.arange(C.shape[0])[:, None]
    reflected = C[rows, _reflections(d)[centre]]
    diag = np.zeros_like(C)
    diag[rows[:, 0], centre] = (1.0 - 2.0 / d) * C[rows[:, 0], centre]
    inner = diag + reflected / d**2
    S = np.sqrt(np.clip(d / (2.0 * (d - 1)) * C * inner, 0.0, None))
    return S, centre


def quasipure_concurrence(C: np.ndarray) -> np.ndarray:
    S, centre = quasipure_terms(C)
    rows = np.arange(S.shape[0])
    top = S[rows, centre]
    return np.maximum(0.0, 2.0 * top - S.sum(axis=1))


def e3_quasipure(c) -> CriterionVerdict:
    c = validate_coords(c)
    score = float(quasipure_concurrence(c)[0])
    return verdict(Criterion.E3, score, score - EPS_DET)


# --- E4: mutually unbiased bases --------------------------------------------


@dataclass(frozen=True)
class MubSet:
    """Four mutually unbiased bases of C^3 plus the pairing used by E4.

    ``bases[k, i]`` is the ``i``-th vector of basis ``k``.  In the basis
    ``shifted`` the second party measures ``conj(vector (i + shift) mod d)``
    instead of ``conj(vector i)``.
    """

    d: int
    bases: np.ndarray = field(repr=False)
    shifted: int = 0
    shift: int = 2

    def __post_init__(self):
        b = self.bases
        if b.shape != (self.d + 1, self.d, self.d):
            raise ValueError("need d + 1 bases of d vectors each")
        if not 0 <= self.shifted < self.d + 1:
            raise ValueError("shifted basis index out of range")

    def max_unbiasedness_error(self) -> float:
        b = self.bases
        gram = np.abs(np.einsum("kia,lja->klij", b.conj(), b)) ** 2
        err = 0.0
        eye = np.eye(self.d)
        for k in range(self.d + 1):
            for l in range(self.d + 1):
                target = eye if k == l else np.full((self.d, self.d), 1.0 / self.d)
                err = max(err, float(np.abs(gram[k, l] - target).max()))
        return err

    def measurement_pairs(self) -> list[tuple[np.ndarray, np.ndarray]]:
        """``(first, second)`` vector pairs entering ``I_{d+1}``."""
        pairs = []
        for k, basis in enumerate(self.bases):
            s = self.shift if k == self.shifted else 0
            for i in range(self.d):
                pairs.append((basis[i], basis[(i + s) % self.d].conj()))
        return pairs

    @property
    def bound(self) -> float:
        m = self.d + 1
        return 1.0 + (m - 1) / self.d


def mub_set(d: int = 3, order: tuple[int, ...] | None = None, shifted: int = 0, shift: int = 2) -> MubSet:
    """Computational basis followed by the quadratic-phase Fourier bases.

    Basis ``r + 1`` has vectors ``d**-0.5 * sum_j w^{r j^2 + s j} |j>``.  The
    construction is unbiased for odd prime ``d``; E4 is only used at ``d = 3``.
    """
    if d != 3:
        raise UnsupportedCriterion("the MUB criterion is implemented for d = 3 only")
    w = omega(d)
    j = np.arange(d)
    bases = [np.eye(d, dtype=complex)]
    for r in range(d):
        bases.append(np.array([w ** ((r * j * j + s * j) % d) for s in range(d)]) / np.sqrt(d))
    bases = np.array(bases)
    if order is not None:
        if sorted(order) != list(range(d + 1)):
            raise ValueError("order must be a permutation of the basis indices")
        bases = bases[list(order)]
    bases.setflags(write=False)
    return MubSet(d, bases, shifted, shift)


def mub_predictability(rho: np.ndarray, mubs: MubSet) -> float:
    """Sum of mutual predictabilities evaluated on a full density matrix."""
    total = 0.0
    for a, b in mubs.measurement_pairs():
        v = np.kron(a, b)
        total += float(np.real(v.conj() @ rho @ v))
    return total


def mub_weights(mubs: MubSet) -> np.ndarray:
    """Vector ``m`` with ``I_{d+1}(rho) = m . c`` for Bell-diagonal ``rho``."""
    omegas = bell_vectors(mubs.d)
    m = np.zeros(mubs.d**2)
    for a, b in mubs.measurement_pairs():
        m += np.abs(omegas.conj() @ np.kron(a, b)) ** 2
    return m


def e4_mub(c, mubs: MubSet) -> CriterionVerdict:
    c = validate_coords(c)
    if dimension_of(c) != 3 or mubs.d != 3:
        raise UnsupportedCriterion("the MUB criterion is implemented for d = 3 only")
    score = mub_predictability(density_from_coords(c), mubs)
    return verdict(Criterion.E4, score, score - mubs.bound - EPS_DET)
