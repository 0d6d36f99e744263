"""Sufficient separability criteria and the store of known separable vertices.

S1 asks whether a state is a convex mixture of known separable Bell-diagonal
states (the kernel).  S2 is the Weyl-coefficient bound.  Both only ever
certify separability; failing them says nothing about entanglement.
"""

from __future__ import annotations

import enum
import hashlib
import json
import logging
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from pathlib import Path

import numpy as np
from scipy.optimize import linprog

from .criteria import (
    EPS_DET,
    Criterion,
    CriterionVerdict,
    e1_margins,
    mub_set,
    mub_weights,
    quasipure_concurrence,
    realignment_norms,
    verdict,
)
from .symmetry import ORBIT_DECIMALS, SymmetryGroup
from .weyl import bell_projectors, dimension_of, index_of, validate_coords, weyl_coefficients
from .witness import extremal_products, random_product_overlaps

log = logging.getLogger(__name__)

LP_RESIDUAL_TOL = 1e-9
LP_WEIGHT_TOL = 1e-12
LP_MAX_ITER = 100_000
S2_BOUND = 2.0
KERNEL_FORMAT = 1


class Provenance(str, enum.Enum):
    LINE_STATE = "LINE_STATE"
    TWIRLED_PRODUCT = "TWIRLED_PRODUCT"
    SYMMETRY_IMAGE = "SYMMETRY_IMAGE"


class UnsupportedDimension(ValueError):
    pass


class InvalidKernel(ValueError):
    pass


def _is_prime(n: int) -> bool:
    return n >= 2 and all(n % p for p in range(2, int(n**0.5) + 1))


def phase_space_lines(d: int) -> list[tuple[int, ...]]:
    """All lines of Z_d x Z_d as sorted tuples of flat indices (prime ``d``)."""
    if not _is_prime(d):
        raise UnsupportedDimension(f"line states need prime d, got {d}")
    directions = [(0, 1)] + [(1, s) for s in range(d)]
    lines = set()
    for dk, dl in directions:
        for k in range(d):
            for l in range(d):
                lines.add(tuple(sorted(index_of(k + t * dk, l + t * dl, d) for t in range(d))))
    return sorted(lines)


def line_states(d: int) -> np.ndarray:
    """Equal mixtures of the ``d`` Bell projectors on each phase-space line."""
    lines = phase_space_lines(d)
    out = np.zeros((len(lines), d * d))
    for r, line in enumerate(lines):
        out[r, list(line)] = 1.0 / d
    return out


# --- vertex validation ------------------------------------------------------


def entanglement_flags(V: np.ndarray) -> np.ndarray:
    """True where E1, E2, E3 or (d = 3) E4 fires on a row of ``V``."""
    V = np.atleast_2d(V)
    d = dimension_of(V)
    bad = e1_margins(V) > 0
    bad |= realignment_norms(V) - 1.0 - EPS_DET > 0
    bad |= quasipure_concurrence(V) - EPS_DET > 0
    if d == 3:
        mubs = mub_set(3)
        bad |= V @ mub_weights(mubs) - mubs.bound - EPS_DET > 0
    return bad


def _checksum(d: int, vertices: np.ndarray, provenance: list[Provenance]) -> str:
    h = hashlib.sha256()
    h.update(f"{d}\n".encode())
    h.update(np.ascontiguousarray(vertices, dtype="<f8").tobytes())
    h.update(",".join(p.value for p in provenance).encode())
    return h.hexdigest()


@dataclass(frozen=True)
class KernelStore:
    """Known separable vertices.  Construction validates every vertex."""

    d: int
    vertices: np.ndarray = field(repr=False)
    provenance: tuple[Provenance, ...] = field(repr=False)

    def __post_init__(self):
        V = np.array(self.vertices, dtype=float).reshape(-1, self.d * self.d)
        prov = tuple(Provenance(p) for p in self.provenance)
        if len(prov) != len(V):
            raise InvalidKernel("one provenance tag per vertex is required")
        for c in V:
            validate_coords(c, self.d)
        if len(V) and entanglement_flags(V).any():
            raise InvalidKernel("a kernel vertex is detected as entangled")
        V.setflags(write=False)
        object.__setattr__(self, "vertices", V)
        object.__setattr__(self, "provenance", prov)

    def __len__(self) -> int:
        return len(self.vertices)

    @cached_property
    def checksum(self) -> str:
        return _checksum(self.d, self.vertices, list(self.provenance))

    @cached_property
    def _keys(self) -> set[bytes]:
        return {r.tobytes() for r in _round(self.vertices)}

    def is_orbit_closed(self, group: SymmetryGroup) -> bool:
        """True when every image of every vertex is itself a vertex."""
        if group.d != self.d:
            raise ValueError("dimension mismatch between kernel and group")
        imgs = self.vertices[:, group.gather_indices].reshape(-1, self.d * self.d)
        return all(r.tobytes() in self._keys for r in _round(imgs))


def _round(V: np.ndarray) -> np.ndarray:
    # adding 0.0 turns -0.0 into 0.0 so the bytes compare equal
    return np.round(V, ORBIT_DECIMALS) + 0.0


def line_kernel(d: int) -> KernelStore:
    V = line_states(d)
    return KernelStore(d, V, (Provenance.LINE_STATE,) * len(V))


def save_kernel(path: str | Path, store: KernelStore) -> None:
    doc = {
        "format": KERNEL_FORMAT,
        "d": store.d,
        "vertices": [[float(x) for x in v] for v in store.vertices],
        "provenance": [p.value for p in store.provenance],
        "checksum": store.checksum,
    }
    Path(path).write_text(json.dumps(doc, indent=None, separators=(",", ":")) + "\n")


def load_kernel(path: str | Path) -> KernelStore:
    doc = json.loads(Path(path).read_text())
    store = KernelStore(int(doc["d"]), np.array(doc["vertices"], dtype=float), tuple(doc["provenance"]))
    if doc.get("checksum") != store.checksum:
        raise InvalidKernel(f"checksum mismatch in {path}")
    return store


# --- kernel extension ---------------------------------------------------------


class CandidateStrategy(str, enum.Enum):
    # twirls of Haar-random product states
    TWIRLED = "twirled"
    # twirls of product states optimising a random linear functional
    EXTREMAL = "extremal"


EXTREMAL_RESTARTS = 8


def candidate_coords(strategy: CandidateStrategy, n: int, seed: int, d: int) -> np.ndarray:
    rng = np.random.default_rng([int(seed), 2])
    strategy = CandidateStrategy(strategy)
    if strategy is CandidateStrategy.TWIRLED:
        return random_product_overlaps(rng, n, d)
    kappas = rng.uniform(-1.0, 1.0, ((n + 1) // 2, d * d))
    return extremal_products(kappas, EXTREMAL_RESTARTS, rng)[:n]


def extend_kernel(
    store: KernelStore,
    n_candidates: int,
    seed: int,
    group: SymmetryGroup,
    prune: bool = False,
    strategy: CandidateStrategy | str = CandidateStrategy.TWIRLED,
) -> KernelStore:
    """Add separable candidates and all their symmetry images.

    Candidates are twirled pure product states, hence separable.  With
    ``prune`` a candidate already inside the current hull is dropped with its
    orbit.  Vertices failing validation are logged and excluded.  The line
    states and every existing vertex are kept, so the result is orbit closed
    whenever the input is.
    """
    d = store.d
    if group.d != d:
        raise ValueError("dimension mismatch between kernel and group")
    if n_candidates <= 0:
        return store
    cand = candidate_coords(strategy, n_candidates, seed, d)
    cand = np.clip(cand, 0.0, None)
    cand /= cand.sum(axis=1, keepdims=True)

    bad = entanglement_flags(cand)
    if bad.any():
        log.warning("excluded %d candidate vertices failing validation", int(bad.sum()))
    cand = cand[~bad]
    if prune and len(store):
        inside = np.array([s1_hull_membership(c, store).detected for c in cand], dtype=bool)
        cand = cand[~inside]

    keys = set(store._keys)
    new_v, new_p = [], []
    for c in cand:
        images = c[group.gather_indices]
        for j, (img, key) in enumerate(zip(images, _round(images))):
            kb = key.tobytes()
            if kb in keys:
                continue
            keys.add(kb)
            new_v.append(img)
            new_p.append(Provenance.TWIRLED_PRODUCT if j == 0 else Provenance.SYMMETRY_IMAGE)
    if not new_v:
        return store
    new_v = np.array(new_v)
    bad = entanglement_flags(new_v)
    if bad.any():
        log.warning("excluded %d symmetry images failing validation", int(bad.sum()))
    keep = np.flatnonzero(~bad)
    V = np.concatenate([store.vertices, new_v[keep]])
    P = store.provenance + tuple(new_p[i] for i in keep)
    return KernelStore(d, V, P)


def build_kernel(
    d: int,
    group: SymmetryGroup,
    n_candidates: int = 0,
    seed: int = 0,
    strategy: CandidateStrategy | str = CandidateStrategy.TWIRLED,
    prune: bool = False,
) -> KernelStore:
    """Line states, optionally extended by ``n_candidates`` orbit-closed candidates."""
    return extend_kernel(line_kernel(d), n_candidates, seed, group, prune=prune, strategy=strategy)


# --- S1: hull membership ------------------------------------------------------


def hull_certificate_residual(V: np.ndarray, lam: np.ndarray, c: np.ndarray) -> float:
    """Infinity-norm residual of ``sum lam_i V_i = c`` including normalisation."""
    return float(max(np.abs(lam @ V - c).max(), abs(lam.sum() - 1.0)))


def _restricted_lp(W: np.ndarray, c: np.ndarray):
    """``min ||W^T lam - c||_1`` over the probability simplex for columns ``W``."""
    n, m = W.shape
    # variables: lam (n), excess p (m), deficit q (m)
    cost = np.concatenate([np.zeros(n), np.ones(2 * m)])
    A_eq = np.zeros((m + 1, n + 2 * m))
    A_eq[:m, :n] = W.T
    A_eq[:m, n : n + m] = -np.eye(m)
    A_eq[:m, n + m :] = np.eye(m)
    A_eq[m, :n] = 1.0
    b_eq = np.concatenate([c, [1.0]])
    return linprog(
        cost,
        A_eq=A_eq,
        b_eq=b_eq,
        bounds=(0, None),
        method="highs",
        options={
            "maxiter": LP_MAX_ITER,
            "primal_feasibility_tolerance": 1e-10,
            "dual_feasibility_tolerance": 1e-10,
        },
    )


LP_INITIAL_COLUMNS = 64
LP_COLUMNS_PER_ROUND = 64
LP_MAX_ROUNDS = 500
LP_PRICING_TOL = 1e-11


def s1_hull_membership(c, store: KernelStore) -> CriterionVerdict:
    """Is ``c`` a convex combination of kernel vertices?

    Minimises ``||V^T lam - c||_1`` over the probability simplex by column
    generation: HiGHS solves the problem on a working set of vertices and the
    duals price all others, adding improving ones until none is left, which
    makes the working-set optimum the full optimum.  The returned weights are
    then re-checked independently: the state counts as separable only if they
    are non-negative, sum to one and reproduce ``c`` to ``LP_RESIDUAL_TOL``
    in the infinity norm.  The score is that residual and
    ``margin = LP_RESIDUAL_TOL - residual``.
    """
    c = validate_coords(c, store.d)
    if len(store) == 0:
        raise InvalidKernel("kernel store is empty")
    V = store.vertices
    n, m = V.shape
    k0 = min(n, LP_INITIAL_COLUMNS)
    cols = np.argpartition(-(V @ c), k0 - 1)[:k0] if k0 < n else np.arange(n)
    in_set = np.zeros(n, dtype=bool)
    in_set[cols] = True
    rounds = 0
    while True:
        rounds += 1
        res = _restricted_lp(V[cols], c)
        if res.status == 1:
            return verdict(Criterion.S1, 1.0, -1.0, status="iteration_limit", inconclusive=True)
        if res.x is None:
            return verdict(Criterion.S1, 1.0, -1.0, status=f"solver_status_{res.status}", inconclusive=True)
        if res.fun <= 0.0:
            break
        y = res.eqlin.marginals
        # reduced cost of lam_i is -(V_i . y_c + y_norm)
        gain = V @ y[:m] + y[m]
        gain[in_set] = -np.inf
        cand = np.flatnonzero(gain > LP_PRICING_TOL)
        if cand.size == 0:
            break
        if rounds >= LP_MAX_ROUNDS:
            return verdict(Criterion.S1, 1.0, -1.0, status="round_limit", inconclusive=True)
        if cand.size > LP_COLUMNS_PER_ROUND:
            cand = cand[np.argpartition(-gain[cand], LP_COLUMNS_PER_ROUND - 1)[:LP_COLUMNS_PER_ROUND]]
        in_set[cand] = True
        cols = np.concatenate([cols, cand])

    lam = np.zeros(n)
    lam[cols] = res.x[: len(cols)]
    if lam.min() < -LP_WEIGHT_TOL:
        return verdict(Criterion.S1, 1.0, -1.0, status="negative_weights", inconclusive=True)
    lam = np.clip(lam, 0.0, None)
    residual = hull_certificate_residual(V, lam, c)
    margin = LP_RESIDUAL_TOL - residual
    info = {"status": "ok", "l1_distance": float(res.fun), "rounds": rounds}
    if margin > 0:
        support = np.flatnonzero(lam > 0)
        info["certificate"] = {int(i): float(lam[i]) for i in support}
    return verdict(Criterion.S1, residual, margin, **info)


# --- S2: Weyl coefficients ----------------------------------------------------


@lru_cache(maxsize=None)
def _weyl_matrix(d: int) -> np.ndarray:
    """Row ``i`` holds the Weyl coefficients of Bell projector ``i``."""
    P = bell_projectors(d)
    M = np.array([weyl_coefficients(p) for p in P])
    M.setflags(write=False)
    return M


def weyl_norms(C: np.ndarray) -> np.ndarray:
    """``sum |s|`` of the Weyl coefficients, one value per coordinate row."""
    C = np.atleast_2d(C)
    d = dimension_of(C)
    return np.abs(C @ _weyl_matrix(d)).sum(axis=1)


def s2_margins(C: np.ndarray) -> np.ndarray:
    return S2_BOUND - EPS_DET - weyl_norms(C)


def s2_weyl_criterion(c) -> CriterionVerdict:
    c = validate_coords(c)
    d = dimension_of(c)
    rho = np.tensordot(c, bell_projectors(d), axes=(-1, 0))
    score = float(np.abs(weyl_coefficients(rho)).sum())
    return verdict(Criterion.S2, score, S2_BOUND - EPS_DET - score)
