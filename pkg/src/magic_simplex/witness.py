"""Numerical Bell-diagonal entanglement witnesses (criterion E5).

A witness ``W = sum kappa_{k,l} P_{k,l}`` has ``tr[rho W] = c . kappa`` on the
magic simplex.  Its separable range ``[L, U]`` is found by locally optimising
``tr[W (a (x) b)(a (x) b)^†]`` over pure product states from many random
starts; bounds are widened by ``BOUND_MARGIN`` before use.
"""

from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .criteria import EPS_DET, Criterion, CriterionVerdict, verdict
from .optimize import bfgs_minimize
from .weyl import dimension_of, omega, validate_coords

log = logging.getLogger(__name__)

BOUND_MARGIN = 1e-6
DEFAULT_RESTARTS = 50
GENERATOR_VERSION = "bfgs-orbit-plateau-3"
CHUNK_WITNESSES = 32


class OptimizationError(RuntimeError):
    pass


# --- product-state chart ------------------------------------------------------


def n_params(d: int) -> int:
    """Angles per pure product state: ``2 (d - 1)`` for each factor."""
    return 4 * (d - 1)


def pure_state(angles: np.ndarray, d: int) -> tuple[np.ndarray, np.ndarray]:
    """Normalised vectors and their angle derivatives.

    ``angles[..., :d-1]`` are hyperspherical polar angles (range ``[0, pi/2]``
    covers all amplitudes), ``angles[..., d-1:]`` are relative phases of
    components ``1 .. d-1``.  The chart is anchored at ``|0>`` (all angles 0).
    Returns ``(v, dv)`` with shapes ``(n, d)`` and ``(n, 2(d-1), d)``.
    """
    angles = np.atleast_2d(angles)
    n = angles.shape[0]
    m = d - 1
    theta, phi = angles[:, :m], angles[:, m:]
    s, c = np.sin(theta), np.cos(theta)

    r = np.ones((n, d))
    dr = np.zeros((n, m, d))
    for j in range(d):
        for i in range(min(j, m)):
            r[:, j] *= s[:, i]
        if j < m:
            r[:, j] *= c[:, j]
    for j in range(d):
        for i in range(min(j + 1, m)):
            # derivative of r_j with respect to theta_i
            term = np.ones(n)
            for q in range(min(j, m)):
                term = term * (c[:, q] if q == i else s[:, q])
            if j < m:
                term = term * (-s[:, j] if i == j else c[:, j])
            elif i == j:
                term = np.zeros(n)
            dr[:, i, j] = term

    phase = np.ones((n, d), dtype=complex)
    phase[:, 1:] = np.exp(1j * phi)
    v = r * phase
    dv = np.zeros((n, 2 * m, d), dtype=complex)
    dv[:, :m, :] = dr * phase[:, None, :]
    for i in range(m):
        dv[:, m + i, i + 1] = 1j * v[:, i + 1]
    return v, dv


def product_vectors(params: np.ndarray, d: int) -> tuple[np.ndarray, np.ndarray]:
    params = np.atleast_2d(params)
    if params.shape[1] != n_params(d):
        raise ValueError(f"expected {n_params(d)} angles for d={d}")
    h = 2 * (d - 1)
    a, _ = pure_state(params[:, :h], d)
    b, _ = pure_state(params[:, h:], d)
    return a, b


def product_state(params: np.ndarray, d: int) -> np.ndarray:
    """Density matrix ``|a><a| (x) |b><b|`` for one angle vector."""
    a, b = product_vectors(params, d)
    psi = np.kron(a[0], b[0])
    return np.outer(psi, psi.conj())


@lru_cache(maxsize=None)
def _overlap_tables(d: int):
    w = omega(d)
    k = np.arange(d)
    F = w ** (-np.outer(k, k) % d) / np.sqrt(d)  # F[k, m]
    shift = (k[None, :] + k[:, None]) % d  # shift[l, m] = m + l
    back = (k[None, :] - k[:, None]) % d  # back[l, j] = j - l
    return F, shift, back


def bell_amplitudes(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``z[n, k, l] = <Omega_{k,l}| a_n (x) b_n>`` for batches of vectors."""
    d = a.shape[-1]
    F, shift, _ = _overlap_tables(d)
    T = a[:, None, :] * b[:, shift]  # T[n, l, m] = a_m b_{m+l}
    return np.swapaxes(T @ F.T, 1, 2)


def product_overlaps(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Simplex coordinates of the twirled product states ``a_n (x) b_n``."""
    z = bell_amplitudes(np.atleast_2d(a), np.atleast_2d(b))
    return (np.abs(z) ** 2).reshape(z.shape[0], -1)


def witness_objective(params: np.ndarray, kappa: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Values ``sum kappa_{k,l} |<Omega_{k,l}|a (x) b>|^2`` and angle gradients.

    ``params`` has one angle vector per row, ``kappa`` one coefficient vector
    per row (or a single vector shared by all rows).
    """
    params = np.atleast_2d(params)
    n = params.shape[0]
    d = dimension_of(np.asarray(kappa))
    h = 2 * (d - 1)
    F, shift, back = _overlap_tables(d)
    a, da = pure_state(params[:, :h], d)
    b, db = pure_state(params[:, h:], d)
    K = np.broadcast_to(np.asarray(kappa, dtype=float), (n, d * d)).reshape(n, d, d)

    B = b[:, shift]
    z = np.swapaxes((a[:, None, :] * B) @ F.T, 1, 2)  # z[n, k, l]
    f = np.einsum("nkl,nkl->n", K, (z * z.conj()).real)

    Q = K * z.conj()
    R = np.swapaxes(Q, 1, 2) @ F  # R[n, l, m] = sum_k Q[n,k,l] F[k,m]
    Ga = (R * B).sum(axis=1)
    Hm = R * a[:, None, :]
    Gb = Hm[:, np.arange(d)[:, None], back].sum(axis=1)

    grad = np.empty((n, 2 * h))
    grad[:, :h] = 2.0 * np.einsum("nm,nim->ni", Ga, da).real
    grad[:, h:] = 2.0 * np.einsum("nm,nim->ni", Gb, db).real
    return f, grad


def random_angles(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    m = d - 1
    out = np.empty((n, n_params(d)))
    for half in (0, 2 * m):
        out[:, half : half + m] = rng.uniform(0.0, np.pi / 2, (n, m))
        out[:, half + m : half + 2 * m] = rng.uniform(0.0, 2 * np.pi, (n, m))
    return out


def wrap_angles(params: np.ndarray) -> np.ndarray:
    """Reduce angles modulo 2 pi; the chart is periodic so the state is unchanged."""
    return np.mod(params, 2 * np.pi)


# --- bounds -----------------------------------------------------------------


def _stream(seed: int, purpose: int) -> np.random.Generator:
    return np.random.default_rng([int(seed) & (2**64 - 1), purpose])


def vectors_to_angles(v: np.ndarray) -> np.ndarray:
    """Chart angles of unit vectors (one per row), inverse of :func:`pure_state`."""
    v = np.atleast_2d(v)
    d = v.shape[1]
    m = d - 1
    v = v * np.exp(-1j * np.angle(v[:, :1]))
    r = np.abs(v)
    out = np.empty((v.shape[0], 2 * m))
    for j in range(m):
        out[:, j] = np.arctan2(np.sqrt((r[:, j + 1 :] ** 2).sum(axis=1)), r[:, j])
    out[:, m:] = np.angle(v[:, 1:])
    return out


def _tangent_frames(v: np.ndarray) -> np.ndarray:
    """Real tangent directions ``(n, 2(d-1), d)`` of the unit sphere at ``v``
    orthogonal to the phase direction (complex orthogonal complement)."""
    n, d = v.shape
    out = np.empty((n, 2 * (d - 1), d), dtype=complex)
    for r in range(n):
        q, _ = np.linalg.qr(np.column_stack([v[r], np.eye(d)]))
        comp = q[:, 1:d]
        out[r, 0::2] = comp.T
        out[r, 1::2] = 1j * comp.T
    return out


def _local_points(a, b, Ta, Tb, x):
    """Product vectors ``normalise(a + Ta.x_a), normalise(b + Tb.x_b)``.

    ``a, b`` have shape ``(n, d)``, ``x`` has shape ``(n, s, 4(d-1))``.
    """
    h = Ta.shape[1]
    A = a[:, None, :] + np.einsum("nsi,nid->nsd", x[..., :h], Ta)
    B = b[:, None, :] + np.einsum("nsi,nid->nsd", x[..., h:], Tb)
    A /= np.linalg.norm(A, axis=-1, keepdims=True)
    B /= np.linalg.norm(B, axis=-1, keepdims=True)
    return A, B


PLATEAU_STEPS = (0.1, 0.2, 0.35)
PLATEAU_ANGLES = 4
PLATEAU_REL_CURVATURE = 0.05
FD_STEP = 1e-3


def plateau_starts(params: np.ndarray, kappa: np.ndarray) -> list[np.ndarray]:
    """Restart points along nearly flat directions of local maxima.

    ``params[r]`` is a local maximiser of ``kappa[r] . t``.  Near line-state
    vertices the objective is almost flat along a few directions and a
    slightly higher maximum can hide behind a tiny barrier; plain random
    restarts rarely reach it.  The Hessian is estimated by finite differences
    in a chart centred at the optimum (angle charts are singular there) and
    points are placed along its flattest eigen-directions.
    """
    n = params.shape[0]
    d = dimension_of(kappa)
    dim = n_params(d)
    a, b = product_vectors(params, d)
    Ta, Tb = _tangent_frames(a), _tangent_frames(b)

    E = np.eye(dim) * FD_STEP
    pairs = np.array([si * E[i] + sj * E[j] for i in range(dim) for j in range(dim) for si in (1, -1) for sj in (1, -1)])
    A, B = _local_points(a, b, Ta, Tb, np.broadcast_to(pairs, (n,) + pairs.shape))
    vals = np.einsum("nsk,nk->ns", product_overlaps(A.reshape(-1, d), B.reshape(-1, d)).reshape(n, -1, d * d), kappa)
    vals = vals.reshape(n, dim, dim, 2, 2)
    H = (vals[..., 0, 0] - vals[..., 0, 1] - vals[..., 1, 0] + vals[..., 1, 1]) / (4 * FD_STEP**2)
    H = 0.5 * (H + np.swapaxes(H, 1, 2))
    w, V = np.linalg.eigh(H)

    out = []
    for r in range(n):
        scale = np.abs(w[r]).max()
        flat = V[r][:, np.abs(w[r]) <= PLATEAU_REL_CURVATURE * max(scale, 1e-12)]
        if flat.shape[1] == 0:
            out.append(np.zeros((0, dim)))
            continue
        dirs = [flat[:, i] for i in range(flat.shape[1])]
        for i in range(flat.shape[1] - 1):
            for t in np.arange(1, PLATEAU_ANGLES) * np.pi / (2 * PLATEAU_ANGLES):
                dirs.append(np.cos(t) * flat[:, i] + np.sin(t) * flat[:, i + 1])
                dirs.append(np.cos(t) * flat[:, i] - np.sin(t) * flat[:, i + 1])
        steps = np.array([sg * s * u for u in dirs for s in PLATEAU_STEPS for sg in (1, -1)])
        A, B = _local_points(a[r : r + 1], b[r : r + 1], Ta[r : r + 1], Tb[r : r + 1], steps[None])
        out.append(np.concatenate([vectors_to_angles(A[0]), vectors_to_angles(B[0])], axis=1))
    return out


def _minimise_rows(x0: np.ndarray, signed_kappa: np.ndarray):
    def fg(x, rows):
        return witness_objective(x, signed_kappa[rows])

    return bfgs_minimize(fg, x0)


ORBIT_SEEDS = 6


def _improve(best_f, best_x, owners, res) -> list[tuple[int, int]]:
    """Fold results ``res`` (row ``r`` belongs to ``owners[r]``) into the bests."""
    improved = []
    order = {}
    for r, key in enumerate(owners):
        if np.isfinite(res.fun[r]) and (key not in order or res.fun[r] < res.fun[order[key]]):
            order[key] = r
    for key, r in order.items():
        if res.fun[r] < best_f[key] - 1e-12:
            best_f[key], best_x[key] = res.fun[r], res.x[r]
            improved.append(key)
    return improved


def orbit_seed_starts(points: np.ndarray, kappa: np.ndarray, sign: float, count: int) -> np.ndarray:
    """Starts from symmetry images of known local optima.

    The symmetries map twirled product states to twirled product states, so
    every image of a local optimum found so far is a valid separable point and
    often lies in a basin the random starts missed.  Returns chart angles of
    the ``count`` images with the best distinct values of ``sign * kappa . t``.
    """
    from .symmetry import generate_group, product_action

    d = dimension_of(kappa)
    G = generate_group(d)
    a, b = product_vectors(points, d)
    t = product_overlaps(a, b)
    vals = sign * (t[:, G.gather_indices] @ kappa)  # (points, |G|)
    flat = vals.ravel()
    _, first = np.unique(np.round(flat, 10), return_index=True)
    pick = first[:count]
    out = []
    for f in pick:
        i, g = divmod(int(f), vals.shape[1])
        ga, gb = product_action(G.elements[g], a[i], b[i])
        out.append(np.concatenate([vectors_to_angles(ga)[0], vectors_to_angles(gb)[0]]))
    return np.array(out).reshape(-1, points.shape[1])


def _search(kappas: np.ndarray, starts: list[np.ndarray], plateau_rounds: int = 2, orbit_seeds: int = ORBIT_SEEDS):
    """Local min and max searches for several witnesses in one batch.

    Every start is optimised for both senses.  The best symmetry images of
    all those optima seed ``orbit_seeds`` further searches per sense (see
    :func:`orbit_seed_starts`).  Finally the best point of each (witness,
    sense) is refined by :func:`plateau_starts` restarts for up to
    ``plateau_rounds`` rounds while that keeps improving.  Returns
    ``(best_f, best_x, counts)`` indexed by ``[witness, sense]`` where sense 0
    minimises ``kappa . t`` and sense 1 minimises ``-kappa . t``.
    """
    nw = len(starts)
    senses = (1.0, -1.0)
    rows_k = np.concatenate([np.full(2 * st.shape[0], j) for j, st in enumerate(starts)])
    sign = np.concatenate([np.repeat(senses, st.shape[0]) for st in starts])
    x0 = np.concatenate([np.concatenate([st, st]) for st in starts])
    res = _minimise_rows(x0, kappas[rows_k] * sign[:, None])

    best_f = np.full((nw, 2), np.inf)
    best_x = np.zeros((nw, 2, x0.shape[1]))
    counts = np.zeros((nw, 2), dtype=int)
    finite = np.isfinite(res.fun)
    for j in range(nw):
        for si, sg in enumerate(senses):
            counts[j, si] = np.count_nonzero((rows_k == j) & (sign == sg) & finite)
    _improve(best_f, best_x, [(int(j), 0 if sg > 0 else 1) for j, sg in zip(rows_k, sign)], res)

    if orbit_seeds > 0:
        seeds, owners = [], []
        for j in range(nw):
            pts = res.x[(rows_k == j) & finite]
            if len(pts) == 0:
                continue
            for si, sg in enumerate(senses):
                x = orbit_seed_starts(pts, kappas[j], sg, orbit_seeds)
                seeds.append(x)
                owners += [(j, si)] * len(x)
        if owners:
            rows = np.array([j for j, _ in owners])
            sg = np.array([senses[si] for _, si in owners])
            r2 = _minimise_rows(np.concatenate(seeds), kappas[rows] * sg[:, None])
            _improve(best_f, best_x, owners, r2)

    todo = [(j, si) for j in range(nw) for si in range(2) if counts[j, si]]
    for _ in range(plateau_rounds):
        if not todo:
            break
        sg = np.array([senses[si] for _, si in todo])
        pk = np.array([kappas[j] for j, _ in todo]) * -sg[:, None]
        hop = plateau_starts(np.array([best_x[key] for key in todo]), pk)
        owners = [key for key, h in zip(todo, hop) for _ in range(len(h))]
        if not owners:
            break
        rows = np.array([j for j, _ in owners])
        signs = np.array([senses[si] for _, si in owners])
        r2 = _minimise_rows(np.concatenate(hop), kappas[rows] * signs[:, None])
        todo = _improve(best_f, best_x, owners, r2)
    return best_f, best_x, counts


def _optimize_many(kappas: np.ndarray, starts: list[np.ndarray]) -> list[tuple[float, float, int]]:
    """``(min, max, usable starts)`` of ``kappa . t`` for each witness."""
    best_f, _, counts = _search(kappas, starts)
    nw = len(starts)
    out = []
    for j in range(nw):
        if counts[j].min() == 0:
            out.append((np.nan, np.nan, 0))
        else:
            out.append((float(best_f[j, 0]), float(-best_f[j, 1]), int(counts[j].min())))
    return out


def extremal_products(kappas: np.ndarray, restarts: int, rng: np.random.Generator) -> np.ndarray:
    """Twirled product states minimising and maximising each ``kappa . t``.

    Returns ``(2 * len(kappas), d**2)`` coordinates; such points lie on the
    boundary of the separable part of the simplex.
    """
    kappas = np.atleast_2d(kappas)
    d = dimension_of(kappas)
    starts = [random_angles(rng, restarts, d) for _ in kappas]
    _, best_x, counts = _search(kappas, starts)
    a, b = product_vectors(best_x.reshape(-1, best_x.shape[-1]), d)
    t = product_overlaps(a, b)
    return t[(counts > 0).reshape(-1)]


def optimize_bounds(kappa, restarts: int = DEFAULT_RESTARTS, seed: int = 0) -> tuple[float, float]:
    """Separable range ``(L, U)`` of ``W = sum kappa P`` with safety margin.

    Minimum and maximum over ``restarts`` random starts each; the returned
    interval is widened by ``BOUND_MARGIN`` on both sides.
    """
    kappa = np.asarray(kappa, dtype=float)
    d = dimension_of(kappa)
    if np.any(np.abs(kappa) > 1.0):
        raise ValueError("witness coefficients must lie in [-1, 1]")
    if restarts < 1:
        raise ValueError("need at least one restart")
    starts = random_angles(_stream(seed, 1), restarts, d)
    lo, hi, ok = _optimize_many(kappa[None, :], [starts])[0]
    if ok == 0:
        raise OptimizationError("all restarts produced non-finite objectives")
    return lo - BOUND_MARGIN, hi + BOUND_MARGIN


# --- witnesses and their store ------------------------------------------------


@dataclass(frozen=True)
class Witness:
    d: int
    kappa: np.ndarray
    lower: float
    upper: float
    restarts: int
    seed: int
    id: int = 0
    generator_version: str = GENERATOR_VERSION

    def __post_init__(self):
        if not self.lower <= self.upper:
            raise ValueError("witness bounds must satisfy L <= U")
        if np.any(np.abs(self.kappa) > 1.0):
            raise ValueError("witness coefficients must lie in [-1, 1]")

    def value(self, c) -> float:
        return witness_value(self, c)


def witness_value(w: Witness, c) -> float:
    c = np.asarray(c, dtype=float)
    if c.shape[-1] != w.d * w.d:
        raise ValueError("dimension mismatch between witness and state")
    return float(c @ w.kappa)


def witness_seed(master_seed: int, index: int) -> int:
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(index),))
    return int(ss.generate_state(1, np.uint64)[0])


def random_product_overlaps(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    """Twirled coordinates of ``n`` Haar-random pure product states."""

    def haar(m):
        v = rng.standard_normal((m, d)) + 1j * rng.standard_normal((m, d))
        return v / np.linalg.norm(v, axis=1, keepdims=True)

    return product_overlaps(haar(n), haar(n))


def _witness_chunk(args) -> list[Witness]:
    idx, restarts, seed, d = args
    seeds = [witness_seed(seed, i) for i in idx]
    kappas = np.array([_stream(s, 0).uniform(-1.0, 1.0, d * d) for s in seeds])
    starts = [random_angles(_stream(s, 1), restarts, d) for s in seeds]
    out = []
    for i, s, kap, (lo, hi, ok) in zip(idx, seeds, kappas, _optimize_many(kappas, starts)):
        if ok == 0:
            log.warning("witness %d: optimisation failed, skipped", i)
            continue
        out.append(Witness(d, kap, lo - BOUND_MARGIN, hi + BOUND_MARGIN, restarts, s, id=i))
    return out


def generate_witness_set(
    count: int,
    restarts: int = DEFAULT_RESTARTS,
    seed: int = 0,
    d: int = 3,
    progress=None,
    workers: int = 1,
) -> list[Witness]:
    """Random witnesses ``kappa ~ U[-1, 1]^{d^2}`` with optimised bounds.

    Witness ``i`` draws everything from its own stream derived from
    ``(seed, i)``, so the result does not depend on ``workers``; witnesses
    whose optimisation fails are skipped and logged.
    """
    if count < 1:
        raise ValueError("count must be positive")
    jobs = [(range(lo, min(count, lo + CHUNK_WITNESSES)), restarts, seed, d) for lo in range(0, count, CHUNK_WITNESSES)]
    out: list[Witness] = []
    if workers <= 1 or len(jobs) == 1:
        results = map(_witness_chunk, jobs)
        pool = None
    else:
        pool = ProcessPoolExecutor(workers)
        results = pool.map(_witness_chunk, jobs)
    try:
        for chunk in results:
            out.extend(chunk)
            if progress is not None:
                progress(len(out), count)
    finally:
        if pool is not None:
            pool.shutdown()
    return out


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def witness_record(w: Witness) -> str:
    kappa = ", ".join(_fmt(x) for x in w.kappa)
    return (
        f'{{"id": {w.id}, "d": {w.d}, "kappa": [{kappa}], "lower": {_fmt(w.lower)}, '
        f'"upper": {_fmt(w.upper)}, "restarts": {w.restarts}, "seed": {w.seed}, '
        f'"generator_version": {json.dumps(w.generator_version)}}}'
    )


def save_witnesses(path: str | Path, witnesses: Iterable[Witness]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for w in witnesses:
            fh.write(witness_record(w) + "\n")


def load_witnesses(path: str | Path) -> list[Witness]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            r = json.loads(line)
            out.append(
                Witness(
                    int(r["d"]),
                    np.array(r["kappa"], dtype=float),
                    float(r["lower"]),
                    float(r["upper"]),
                    int(r["restarts"]),
                    int(r["seed"]),
                    id=int(r.get("id", len(out))),
                    generator_version=r.get("generator_version", "unknown"),
                )
            )
    return out


def file_fingerprint(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()[:16]


# --- detection -----------------------------------------------------------------


@dataclass(frozen=True)
class WitnessArrays:
    """Dense view of a witness list for vectorised detection."""

    kappa: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    ids: np.ndarray

    @classmethod
    def from_witnesses(cls, witnesses: Sequence[Witness]) -> WitnessArrays:
        if not witnesses:
            return cls(np.zeros((0, 0)), np.zeros(0), np.zeros(0), np.zeros(0, dtype=int))
        return cls(
            np.array([w.kappa for w in witnesses]),
            np.array([w.lower for w in witnesses]),
            np.array([w.upper for w in witnesses]),
            np.array([w.id for w in witnesses]),
        )

    def __len__(self) -> int:
        return len(self.ids)

    def take(self, idx) -> WitnessArrays:
        idx = np.asarray(idx, dtype=int)
        return WitnessArrays(self.kappa[idx], self.lower[idx], self.upper[idx], self.ids[idx])

    def violations(self, C: np.ndarray) -> np.ndarray:
        """``max(L - v, v - U)`` for every (row, witness) pair."""
        V = np.atleast_2d(C) @ self.kappa.T
        return np.maximum(self.lower - V, V - self.upper)

    def best(self, C: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Largest violation per row and the id of the witness achieving it."""
        if len(self) == 0:
            n = np.atleast_2d(C).shape[0]
            return np.full(n, -np.inf), np.full(n, -1)
        viol = self.violations(C)
        j = np.argmax(viol, axis=1)
        return viol[np.arange(viol.shape[0]), j], self.ids[j]


def e5_detect(c, witnesses: Sequence[Witness] | WitnessArrays) -> CriterionVerdict:
    c = validate_coords(c)
    arrays = witnesses if isinstance(witnesses, WitnessArrays) else WitnessArrays.from_witnesses(witnesses)
    if len(arrays) == 0:
        return verdict(Criterion.E5, 0.0, -1.0, empty_witness_set=True, witness_id=None)
    viol, wid = arrays.best(c)
    score = float(viol[0])
    return verdict(Criterion.E5, score, score - EPS_DET, witness_id=int(wid[0]))
