"""Uniform random and lattice generation of magic-simplex states."""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass

import numpy as np

from .weyl import index_of

DEFAULT_LATTICE_CAP = 10**8
CHUNK = 4096


class Region(str, enum.Enum):
    SIMPLEX = "simplex"
    ENCLOSURE = "enclosure"
    FAMILY_A = "family_a"
    LATTICE = "lattice"


class LatticeTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class SampleSpec:
    """What to sample.

    ``lattice_range`` is the per-coordinate interval gridded by the lattice;
    ``None`` means ``[0, 1/d]``, i.e. the box of the enclosure polytope.
    """

    d: int
    region: Region
    count: int = 0
    seed: int = 0
    steps: int = 1
    lattice_range: tuple[float, float] | None = None
    lattice_cap: int = DEFAULT_LATTICE_CAP

    def __post_init__(self):
        object.__setattr__(self, "region", Region(self.region))
        if self.d < 2:
            raise ValueError("d must be at least 2")
        if self.count < 0:
            raise ValueError("count must be non-negative")
        if self.steps < 1:
            raise ValueError("steps must be at least 1")
        if self.region is Region.FAMILY_A and self.d != 3:
            raise ValueError("family A is defined for d = 3 only")


def chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    """Independent generator for chunk ``chunk`` of a run seeded by ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(chunk),)))


def _chunked(count: int, seed: int, draw) -> np.ndarray:
    parts = []
    done = 0
    chunk = 0
    while done < count:
        want = min(CHUNK, count - done)
        parts.append(draw(chunk_rng(seed, chunk), want))
        done += want
        chunk += 1
    if not parts:
        return np.zeros((0, 0))
    return np.concatenate(parts)


def dirichlet_flat(rng: np.random.Generator, n: int, dim: int) -> np.ndarray:
    """``n`` uniform points on the ``(dim-1)``-simplex from normalised exponentials."""
    e = rng.standard_exponential((n, dim))
    return e / e.sum(axis=1, keepdims=True)


def sample_simplex(spec: SampleSpec) -> np.ndarray:
    """``spec.count`` uniform points of the magic simplex, shape ``(count, d**2)``."""
    dim = spec.d**2
    if spec.count == 0:
        return np.zeros((0, dim))
    return _chunked(spec.count, spec.seed, lambda rng, n: dirichlet_flat(rng, n, dim))


def _rejection(rng: np.random.Generator, n: int, dim: int, accept) -> np.ndarray:
    """Keep drawing batches of ``n`` candidates until ``n`` are accepted."""
    got = []
    have = 0
    while have < n:
        cand = accept(dirichlet_flat(rng, n, dim))
        got.append(cand)
        have += len(cand)
    return np.concatenate(got)[:n]


def sample_enclosure(spec: SampleSpec, stats: dict | None = None) -> np.ndarray:
    """Uniform points of the enclosure polytope (all ``c <= 1/d``) by rejection.

    If ``stats`` is given, it receives the numbers of candidates drawn and
    accepted.
    """
    d = spec.d
    dim = d * d
    if spec.count == 0:
        return np.zeros((0, dim))
    tally = {"drawn": 0, "accepted": 0}

    def accept(cand):
        ok = cand.max(axis=1) <= 1.0 / d
        tally["drawn"] += len(cand)
        tally["accepted"] += int(ok.sum())
        return cand[ok]

    out = _chunked(spec.count, spec.seed, lambda rng, n: _rejection(rng, n, dim, accept))
    if stats is not None:
        stats.update(tally)
    return out


def family_a_coords(alpha, beta, gamma) -> np.ndarray:
    """Coordinates of ``a P00 + b P01 + g P02 + (1 - a - b - g) rho_mm`` (d = 3)."""
    alpha, beta, gamma = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (alpha, beta, gamma)))
    rest = (1.0 - alpha - beta - gamma) / 9.0
    c = np.repeat(rest[..., None], 9, axis=-1)
    c[..., index_of(0, 0, 3)] += alpha
    c[..., index_of(0, 1, 3)] += beta
    c[..., index_of(0, 2, 3)] += gamma
    return c


def sample_family_a(spec: SampleSpec) -> tuple[np.ndarray, np.ndarray]:
    """Uniform family-A states.

    ``(alpha, beta, gamma)`` is drawn from ``[-1, 1]^3`` and kept when every
    coordinate is non-negative.  Returns ``(params, coords)`` with shapes
    ``(count, 3)`` and ``(count, 9)``.
    """
    if spec.count == 0:
        return np.zeros((0, 3)), np.zeros((0, 9))

    def draw(rng, n):
        got, have = [], 0
        while have < n:
            p = rng.uniform(-1.0, 1.0, (n, 3))
            c = family_a_coords(p[:, 0], p[:, 1], p[:, 2])
            p = p[c.min(axis=1) >= 0.0]
            got.append(p)
            have += len(p)
        return np.concatenate(got)[:n]

    params = _chunked(spec.count, spec.seed, draw)
    coords = family_a_coords(params[:, 0], params[:, 1], params[:, 2])
    return params, np.clip(coords, 0.0, None)


def _lattice_range(spec: SampleSpec) -> tuple[float, float]:
    if spec.lattice_range is not None:
        return spec.lattice_range
    return 0.0, 1.0 / spec.d


def lattice_node_count(spec: SampleSpec) -> int:
    """Number of grid nodes ``(steps + 1)^(d^2 - 1)`` before filtering."""
    return (spec.steps + 1) ** (spec.d**2 - 1)


def sample_lattice(spec: SampleSpec) -> np.ndarray:
    """Equidistant lattice states.

    The first ``d**2 - 1`` coordinates run over ``steps + 1`` equally spaced
    values of ``lattice_range``; the last is fixed by normalisation.  Nodes
    whose last coordinate leaves the range are skipped.
    """
    lo, hi = _lattice_range(spec)
    free = spec.d**2 - 1
    s = spec.steps
    nodes = lattice_node_count(spec)
    if nodes > spec.lattice_cap:
        raise LatticeTooLarge(f"{nodes} lattice nodes exceed the cap of {spec.lattice_cap}")

    # Work in integer units: value = lo + j * (hi - lo) / s.  Then
    # sum(values) = 1 pins the last integer j_last exactly when it is integral.
    width = (hi - lo) / s
    target = (1.0 - (free + 1) * lo) / width
    target_int = int(round(target))
    integral = abs(target - target_int) < 1e-9

    out = []
    grid = np.arange(s + 1)
    # Enumerate the leading coordinates as an outer product and the last
    # free one in a vectorised block to keep memory bounded.
    head_dims = max(0, free - 4)
    tail = np.array(list(itertools.product(grid, repeat=free - head_dims)), dtype=np.int64)
    tail_sum = tail.sum(axis=1)
    for head in itertools.product(grid, repeat=head_dims):
        hsum = sum(head)
        j_last_f = target - hsum - tail_sum
        if integral:
            j_last = target_int - hsum - tail_sum
            ok = (j_last >= 0) & (j_last <= s)
        else:
            # last coordinate is off the grid; keep it if it lies in range
            last = lo + j_last_f * width
            ok = (last >= lo - 1e-12) & (last <= hi + 1e-12)
            j_last = j_last_f
        if not ok.any():
            continue
        block = np.empty((int(ok.sum()), free + 1))
        block[:, :head_dims] = np.array(head, dtype=float)
        block[:, head_dims:free] = tail[ok]
        block[:, free] = j_last[ok]
        out.append(lo + block * width)
    if not out:
        return np.zeros((0, free + 1))
    c = np.concatenate(out)
    c[:, free] = 1.0 - c[:, :free].sum(axis=1)
    return np.clip(c, 0.0, None)


def sample(spec: SampleSpec) -> np.ndarray:
    """Dispatch on ``spec.region``; family A returns coordinates only."""
    if spec.region is Region.SIMPLEX:
        return sample_simplex(spec)
    if spec.region is Region.ENCLOSURE:
        return sample_enclosure(spec)
    if spec.region is Region.FAMILY_A:
        return sample_family_a(spec)[1]
    return sample_lattice(spec)
