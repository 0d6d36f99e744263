"""Orbit-aware classification, volume estimates and detector comparison."""

from __future__ import annotations

import csv
import enum
import io
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .criteria import (
    ENTANGLEMENT,
    EPS_DET,
    EPS_PPT,
    Criterion,
    CriterionVerdict,
    MubSet,
    e1_margins,
    mub_set,
    mub_weights,
    ppt_min_eigenvalues,
    quasipure_concurrence,
    realignment_norms,
    verdict,
)
from .sampling import Region, SampleSpec, sample, sample_family_a, sample_lattice
from .separability import KernelStore, load_kernel, s1_hull_membership, weyl_norms
from .symmetry import ORBIT_DECIMALS, SymmetryGroup, generate_group
from .weyl import dimension_of
from .witness import WitnessArrays, file_fingerprint, load_witnesses

log = logging.getLogger(__name__)

STATE_CHUNK = 512
WITNESS_CHUNK = 48
AUDIT_FRACTION = 0.01


class StateClass(str, enum.Enum):
    SEP = "SEP"
    BOUND = "BOUND"
    FREE = "FREE"
    PPT_UNKNOWN = "PPT_UNKNOWN"


CLASSES = tuple(StateClass)
SEPARABILITY_CRITERIA = (Criterion.S1, Criterion.S2)
ALL_CRITERIA = (Criterion.E1, Criterion.S2, Criterion.S1) + ENTANGLEMENT


class MissingAsset(FileNotFoundError):
    pass


class ConsistencyError(RuntimeError):
    pass


# --- assets -------------------------------------------------------------------


@dataclass(frozen=True)
class Assets:
    """Everything classification needs, loaded once and never modified.

    ``mubs`` is ``None`` exactly when ``d != 3``, where E4 is not defined.
    """

    d: int
    group: SymmetryGroup
    kernel: KernelStore
    witnesses: WitnessArrays
    mubs: MubSet | None = None
    fingerprints: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.kernel is None:
            raise MissingAsset("kernel store is required")
        if self.witnesses is None:
            raise MissingAsset("witness set is required")
        if self.kernel.d != self.d or self.group.d != self.d:
            raise ValueError("asset dimensions disagree")
        if len(self.witnesses) and self.witnesses.kappa.shape[1] != self.d * self.d:
            raise ValueError("witness dimension disagrees with d")
        if self.d == 3 and self.mubs is None:
            raise MissingAsset("the MUB set is required at d = 3")

    @property
    def kernel_orbit_closed(self) -> bool:
        return _orbit_closed(self.kernel, self.group)


_closed_cache: dict[tuple[int, str], bool] = {}


def _orbit_closed(kernel: KernelStore, group: SymmetryGroup) -> bool:
    key = (id(group), kernel.checksum)
    if key not in _closed_cache:
        _closed_cache[key] = kernel.is_orbit_closed(group)
    return _closed_cache[key]


def make_assets(kernel: KernelStore, witnesses, group: SymmetryGroup | None = None, fingerprints=None) -> Assets:
    d = kernel.d
    group = group or generate_group(d)
    if witnesses is not None and not isinstance(witnesses, WitnessArrays):
        witnesses = WitnessArrays.from_witnesses(list(witnesses))
    fp = {"kernel": kernel.checksum[:16]}
    fp.update(fingerprints or {})
    return Assets(d, group, kernel, witnesses, mub_set(3) if d == 3 else None, fp)


def load_assets(d: int, witness_path, kernel_path) -> Assets:
    """Load the witness and kernel files; a missing path is a hard error."""
    for label, p in (("witness store", witness_path), ("kernel store", kernel_path)):
        if p is None:
            raise MissingAsset(f"no {label} given")
        if not Path(p).is_file():
            raise MissingAsset(f"{label} not found: {p}")
    kernel = load_kernel(kernel_path)
    ws = load_witnesses(witness_path)
    if kernel.d != d:
        raise ValueError(f"kernel store is for d={kernel.d}, not d={d}")
    if any(w.d != d for w in ws):
        raise ValueError(f"witness store contains witnesses with d != {d}")
    fp = {"witnesses": file_fingerprint(witness_path), "kernel": file_fingerprint(kernel_path)}
    return make_assets(kernel, ws, fingerprints=fp)


# --- records ------------------------------------------------------------------


@dataclass
class ClassificationRecord:
    id: int
    coords: np.ndarray
    cls: StateClass
    verdicts: dict[Criterion, CriterionVerdict | None]
    witness_id: int | None = None
    orbit_size: int = 1
    conflict: bool = False

    def detected(self, criterion: Criterion) -> bool:
        v = self.verdicts.get(criterion)
        return bool(v is not None and v.detected)

    def check(self) -> None:
        """Raise if the class contradicts the recorded verdicts."""
        free = self.detected(Criterion.E1)
        sep = any(self.detected(c) for c in SEPARABILITY_CRITERIA)
        ent = any(self.detected(c) for c in ENTANGLEMENT)
        want = (
            StateClass.FREE
            if free
            else StateClass.SEP
            if sep
            else StateClass.BOUND
            if ent
            else StateClass.PPT_UNKNOWN
        )
        if self.cls is not want:
            raise ConsistencyError(f"state {self.id}: class {self.cls.value} but verdicts imply {want.value}")


def _class_of(free: bool, sep: bool, ent: bool) -> StateClass:
    if free:
        return StateClass.FREE
    if sep:
        return StateClass.SEP
    if ent:
        return StateClass.BOUND
    return StateClass.PPT_UNKNOWN


# --- vectorised criterion kernels -----------------------------------------------


def _scatter(vecs: np.ndarray, gather: np.ndarray) -> np.ndarray:
    """Rows ``M[j, g]`` with ``(g . c) . vecs[j] == c . M[j, g]``."""
    nv, dim = vecs.shape
    M = np.zeros((nv, gather.shape[0], dim))
    rows = np.arange(gather.shape[0])[:, None]
    for j in range(nv):
        M[j, rows, gather] = vecs[j]
    return M


def orbit_sizes(C: np.ndarray, group: SymmetryGroup) -> np.ndarray:
    """Number of distinct images of each row, via the stabiliser size."""
    C = np.atleast_2d(C)
    out = np.empty(len(C), dtype=int)
    for s in range(0, len(C), STATE_CHUNK):
        part = C[s : s + STATE_CHUNK]
        imgs = np.round(part[:, group.gather_indices], ORBIT_DECIMALS)
        stab = np.all(imgs == np.round(part, ORBIT_DECIMALS)[:, None, :], axis=2).sum(axis=1)
        out[s : s + STATE_CHUNK] = len(group) // stab
    return out


def e3_orbit_scores(C: np.ndarray, gather: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Best quasi-pure concurrence over the images of each row and its element."""
    C = np.atleast_2d(C)
    n, dim = C.shape
    best = np.empty(n)
    arg = np.empty(n, dtype=int)
    step = max(1, STATE_CHUNK * 64 // gather.shape[0])
    for s in range(0, n, step):
        part = C[s : s + step]
        vals = quasipure_concurrence(part[:, gather].reshape(-1, dim)).reshape(len(part), -1)
        arg[s : s + step] = np.argmax(vals, axis=1)
        best[s : s + step] = vals[np.arange(len(part)), arg[s : s + step]]
    return best, arg


def e4_orbit_scores(C: np.ndarray, mubs: MubSet, gather: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Best mutual predictability over the images of each row."""
    M = _scatter(mub_weights(mubs)[None, :], gather)[0]
    vals = np.atleast_2d(C) @ M.T
    arg = np.argmax(vals, axis=1)
    return vals[np.arange(len(vals)), arg], arg


def e5_orbit_scores(C: np.ndarray, witnesses: WitnessArrays, gather: np.ndarray):
    """Largest witness violation over all (witness, image) pairs.

    Returns ``(violation, witness index, element index)``.  Bounds carry over
    to the image witnesses because the separable set is symmetry invariant.
    """
    C = np.atleast_2d(C)
    n = len(C)
    best = np.full(n, -np.inf)
    wj = np.full(n, -1)
    gj = np.zeros(n, dtype=int)
    ng = gather.shape[0]
    for w0 in range(0, len(witnesses), WITNESS_CHUNK):
        sl = slice(w0, w0 + WITNESS_CHUNK)
        M = _scatter(witnesses.kappa[sl], gather).reshape(-1, C.shape[1])
        lo = np.repeat(witnesses.lower[sl], ng)
        hi = np.repeat(witnesses.upper[sl], ng)
        for s in range(0, n, STATE_CHUNK):
            V = C[s : s + STATE_CHUNK] @ M.T
            viol = np.maximum(lo - V, V - hi)
            a = np.argmax(viol, axis=1)
            v = viol[np.arange(len(a)), a]
            better = v > best[s : s + STATE_CHUNK]
            idx = np.flatnonzero(better) + s
            best[idx] = v[better]
            wj[idx] = w0 + a[better] // ng
            gj[idx] = a[better] % ng
    return best, wj, gj


# --- S1 over many states --------------------------------------------------------

_worker_kernel: KernelStore | None = None


def _init_worker(kernel: KernelStore) -> None:
    global _worker_kernel
    _worker_kernel = kernel


def _s1_chunk(C: np.ndarray) -> list[CriterionVerdict]:
    return [s1_hull_membership(c, _worker_kernel) for c in C]


def default_workers() -> int:
    return os.cpu_count() or 1


def s1_many(C: np.ndarray, kernel: KernelStore, workers: int = 1) -> list[CriterionVerdict]:
    """S1 verdicts for each row; order and values do not depend on ``workers``."""
    C = np.atleast_2d(C)
    if workers <= 1 or len(C) < 64:
        return [s1_hull_membership(c, kernel) for c in C]
    parts = np.array_split(C, min(len(C), 8 * workers))
    with ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(kernel,)) as pool:
        out: list[CriterionVerdict] = []
        for chunk in pool.map(_s1_chunk, parts):
            out.extend(chunk)
    return out


def _s1_orbit(c: np.ndarray, assets: Assets) -> tuple[CriterionVerdict, int]:
    """S1 over distinct orbit elements until one is certified (unclosed kernels)."""
    from .symmetry import orbit

    first = None
    for g, img in enumerate(orbit(c, assets.group)):
        v = s1_hull_membership(img, assets.kernel)
        if first is None:
            first = v
        if v.detected:
            return v, g
    return first, 0


# --- classification -----------------------------------------------------------


def classify_batch(
    C: np.ndarray,
    assets: Assets,
    evaluate_all: bool = False,
    use_orbit: bool = True,
    workers: int = 1,
    ids: Sequence[int] | None = None,
) -> list[ClassificationRecord]:
    """Classify every row of ``C``.

    E1, S2 and E2 are unchanged by the symmetries and evaluated on the state
    itself.  S1 is too when the kernel is orbit closed (its hull is then
    invariant); otherwise orbit elements are tried in turn.  E3, E4 and E5
    take the best value over all images.  With ``use_orbit=False`` every
    criterion sees only the state itself.  Without ``evaluate_all`` a
    criterion is skipped (verdict ``None``) once the class is settled, in the
    order E1, S2, S1, E2, E3, E4, E5.
    """
    C = np.atleast_2d(np.asarray(C, dtype=float))
    if dimension_of(C) != assets.d:
        raise ValueError("state dimension disagrees with the assets")
    n = len(C)
    ids = np.arange(n) if ids is None else np.asarray(ids)
    gather = assets.group.gather_indices if use_orbit else np.arange(assets.d**2)[None, :]
    verdicts: list[dict[Criterion, CriterionVerdict | None]] = [dict.fromkeys(ALL_CRITERIA) for _ in range(n)]
    wit = [None] * n

    lam = ppt_min_eigenvalues(C)
    for i in range(n):
        verdicts[i][Criterion.E1] = verdict(Criterion.E1, lam[i], -lam[i] - EPS_PPT)
    free = np.array([v[Criterion.E1].detected for v in verdicts], dtype=bool)
    sep = np.zeros(n, dtype=bool)
    ent = np.zeros(n, dtype=bool)

    def open_rows():
        if evaluate_all:
            return np.arange(n)
        return np.flatnonzero(~free & ~sep & ~ent)

    rows = open_rows()
    if rows.size:
        scores = weyl_norms(C[rows])
        for i, s in zip(rows, scores):
            verdicts[i][Criterion.S2] = verdict(Criterion.S2, s, 2.0 - EPS_DET - s)
            sep[i] |= verdicts[i][Criterion.S2].detected

    rows = open_rows()
    if rows.size:
        if not use_orbit or assets.kernel_orbit_closed:
            for i, v in zip(rows, s1_many(C[rows], assets.kernel, workers)):
                verdicts[i][Criterion.S1] = v
                sep[i] |= v.detected
        else:
            for i in rows:
                v, g = _s1_orbit(C[i], assets)
                verdicts[i][Criterion.S1] = CriterionVerdict(v.criterion, v.detected, v.score, v.margin, {**v.info, "orbit_element": g})
                sep[i] |= v.detected

    rows = open_rows()
    if rows.size:
        norms = realignment_norms(C[rows])
        for i, s in zip(rows, norms):
            verdicts[i][Criterion.E2] = verdict(Criterion.E2, s, s - 1.0 - EPS_DET)
            ent[i] |= verdicts[i][Criterion.E2].detected

    rows = open_rows()
    if rows.size:
        best, arg = e3_orbit_scores(C[rows], gather)
        for i, s, g in zip(rows, best, arg):
            verdicts[i][Criterion.E3] = verdict(Criterion.E3, s, s - EPS_DET, orbit_element=int(g))
            ent[i] |= verdicts[i][Criterion.E3].detected

    if assets.mubs is not None:
        rows = open_rows()
        if rows.size:
            best, arg = e4_orbit_scores(C[rows], assets.mubs, gather)
            bound = assets.mubs.bound
            for i, s, g in zip(rows, best, arg):
                verdicts[i][Criterion.E4] = verdict(Criterion.E4, s, s - bound - EPS_DET, orbit_element=int(g))
                ent[i] |= verdicts[i][Criterion.E4].detected

    rows = open_rows()
    if rows.size:
        if len(assets.witnesses) == 0:
            for i in rows:
                verdicts[i][Criterion.E5] = verdict(Criterion.E5, 0.0, -1.0, empty_witness_set=True)
        else:
            best, wj, gj = e5_orbit_scores(C[rows], assets.witnesses, gather)
            for i, s, j, g in zip(rows, best, wj, gj):
                wid = int(assets.witnesses.ids[j])
                v = verdict(Criterion.E5, s, s - EPS_DET, witness_id=wid, orbit_element=int(g))
                verdicts[i][Criterion.E5] = v
                if v.detected:
                    ent[i] = True
                    wit[i] = wid

    sizes = orbit_sizes(C, assets.group) if use_orbit else np.ones(n, dtype=int)
    out = []
    for i in range(n):
        conflict = bool(sep[i] and (free[i] or ent[i]))
        rec = ClassificationRecord(
            int(ids[i]), C[i].copy(), _class_of(free[i], sep[i], ent[i]), verdicts[i], wit[i], int(sizes[i]), conflict
        )
        out.append(rec)
    return out


def classify(c, assets: Assets, evaluate_all: bool = False, use_orbit: bool = True, state_id: int = 0):
    """Single-state form of :func:`classify_batch`."""
    return classify_batch(np.asarray(c, dtype=float)[None, :], assets, evaluate_all, use_orbit, ids=[state_id])[0]


# --- volumes ------------------------------------------------------------------


@dataclass(frozen=True)
class VolumeReport:
    region: str
    d: int
    n: int
    counts: dict[StateClass, int]
    seed: int
    fingerprints: dict[str, str] = field(default_factory=dict)
    conflicts: int = 0

    def __post_init__(self):
        if sum(self.counts.values()) != self.n:
            raise ValueError("class counts must sum to N")

    @property
    def frequencies(self) -> dict[StateClass, float]:
        return {k: (v / self.n if self.n else 0.0) for k, v in self.counts.items()}

    @property
    def standard_errors(self) -> dict[StateClass, float]:
        """Binomial standard errors ``sqrt(p (1 - p) / N)``."""
        return {k: (float(np.sqrt(p * (1 - p) / self.n)) if self.n else 0.0) for k, p in self.frequencies.items()}

    @property
    def ppt_count(self) -> int:
        return self.n - self.counts[StateClass.FREE]

    @property
    def ppt_shares(self) -> dict[StateClass, float]:
        """Shares of the PPT classes relative to the number of PPT states."""
        m = self.ppt_count
        return {k: (self.counts[k] / m if m else 0.0) for k in CLASSES if k is not StateClass.FREE}

    def to_dict(self) -> dict:
        return {
            "region": self.region,
            "d": self.d,
            "n": self.n,
            "seed": self.seed,
            "counts": {k.value: v for k, v in self.counts.items()},
            "frequencies": {k.value: v for k, v in self.frequencies.items()},
            "standard_errors": {k.value: v for k, v in self.standard_errors.items()},
            "ppt_count": self.ppt_count,
            "ppt_shares": {k.value: v for k, v in self.ppt_shares.items()},
            "conflicts": self.conflicts,
            "fingerprints": dict(self.fingerprints),
        }

    def summary(self) -> str:
        lines = [f"region={self.region} d={self.d} N={self.n} seed={self.seed}"]
        f, se, ps = self.frequencies, self.standard_errors, self.ppt_shares
        for k in CLASSES:
            rel = f"  ppt-share {100 * ps[k]:.1f}%" if k in ps else ""
            lines.append(f"{k.value:<12}{self.counts[k]:>8} {100 * f[k]:6.1f}% +- {100 * se[k]:.1f}%{rel}")
        if self.conflicts:
            lines.append(f"CONFLICTS {self.conflicts}")
        return "\n".join(lines)


def report_from_records(records: Sequence[ClassificationRecord], spec: SampleSpec, fingerprints=None) -> VolumeReport:
    counts = dict.fromkeys(CLASSES, 0)
    for r in records:
        counts[r.cls] += 1
    return VolumeReport(
        spec.region.value, spec.d, len(records), counts, spec.seed, dict(fingerprints or {}), sum(r.conflict for r in records)
    )


def sample_states(spec: SampleSpec) -> np.ndarray:
    if spec.region is Region.FAMILY_A:
        return sample_family_a(spec)[1]
    return sample(spec)


def estimate_volumes(
    spec: SampleSpec, assets: Assets, evaluate_all: bool = False, workers: int = 1
) -> tuple[VolumeReport, list[ClassificationRecord]]:
    if spec.d != assets.d:
        raise ValueError("sample dimension disagrees with the assets")
    C = sample_states(spec)
    records = classify_batch(C, assets, evaluate_all=evaluate_all, workers=workers)
    return report_from_records(records, spec, assets.fingerprints), records


def free_share(spec: SampleSpec) -> tuple[float, float, int]:
    """NPT share of a sample with its binomial error; needs no assets."""
    C = sample_states(spec)
    p = float(np.mean(e1_margins(C) > 0)) if len(C) else 0.0
    return p, float(np.sqrt(p * (1 - p) / max(len(C), 1))), len(C)


# --- orbit audit ----------------------------------------------------------------


@dataclass(frozen=True)
class AuditResult:
    states: int
    elements: int
    conflicting: tuple[int, ...]


def orbit_audit(
    records: Sequence[ClassificationRecord], assets: Assets, fraction: float = AUDIT_FRACTION, seed: int = 0
) -> AuditResult:
    """Classify every orbit element of a random subsample on its own.

    Definite classes (SEP, BOUND, FREE) of the elements of one orbit must
    agree; PPT_UNKNOWN is compatible with anything.
    """
    from .symmetry import orbit

    n = len(records)
    k = min(n, max(1, int(round(fraction * n)))) if n else 0
    pick = np.sort(np.random.default_rng([int(seed), 3]).choice(n, size=k, replace=False)) if k else []
    bad = []
    total = 0
    for i in pick:
        rec = records[i]
        elems = orbit(rec.coords, assets.group)
        total += len(elems)
        sub = classify_batch(elems, assets, use_orbit=False)
        definite = {r.cls for r in sub if r.cls is not StateClass.PPT_UNKNOWN}
        if rec.cls is not StateClass.PPT_UNKNOWN:
            definite.add(rec.cls)
        if len(definite) > 1:
            bad.append(rec.id)
    return AuditResult(k, total, tuple(bad))


# --- detector comparison --------------------------------------------------------


def compare_criteria(
    records: Iterable[ClassificationRecord], criteria: Sequence[Criterion] = ENTANGLEMENT
) -> dict[tuple[Criterion, Criterion], tuple[int, int, int]]:
    """``(count A, count B, count both)`` over BOUND states for each pair.

    Needs records produced with ``evaluate_all``.
    """
    bound = [r for r in records if r.cls is StateClass.BOUND]
    for r in bound:
        if any(r.verdicts.get(c) is None for c in criteria):
            raise ValueError("comparison needs records produced with evaluate_all")
    flags = {c: np.array([r.detected(c) for r in bound], dtype=bool) for c in criteria}
    table = {}
    for a in criteria:
        for b in criteria:
            table[(a, b)] = (int(flags[a].sum()), int(flags[b].sum()), int((flags[a] & flags[b]).sum()))
    return table


def format_comparison(table: dict[tuple[Criterion, Criterion], tuple[int, int, int]]) -> str:
    out = io.StringIO()
    w = csv.writer(out, delimiter="\t", lineterminator="\n")
    w.writerow(["A", "count_A", "B", "count_B", "both"])
    for (a, b), (na, nb, both) in table.items():
        w.writerow([a.value, na, b.value, nb, both])
    return out.getvalue()


# --- lattice study --------------------------------------------------------------


def lattice_vs_random_study(d: int, steps: Sequence[int], seed: int = 0, cap: int | None = None) -> list[dict]:
    """NPT share on equidistant lattices versus equally sized random samples.

    At ``d = 2`` the lattice spans ``[0, 1]`` per coordinate (the whole
    simplex) and is compared with uniform simplex samples; at ``d = 3`` it
    spans ``[0, 1/3]`` (the enclosure polytope) against enclosure samples.
    """
    if d == 2:
        lat_range, region = (0.0, 1.0), Region.SIMPLEX
    elif d == 3:
        lat_range, region = (0.0, 1.0 / 3.0), Region.ENCLOSURE
    else:
        raise ValueError("the lattice study is defined for d = 2 and d = 3")
    rows = []
    for s in steps:
        kw = {"lattice_cap": cap} if cap is not None else {}
        L = sample_lattice(SampleSpec(d, Region.LATTICE, steps=s, lattice_range=lat_range, **kw))
        n = len(L)
        p_lat = float(np.mean(e1_margins(L) > 0)) if n else 0.0
        p_rnd, se_rnd, _ = free_share(SampleSpec(d, region, n, seed=seed + s))
        rows.append(
            {
                "steps": int(s),
                "n": n,
                "lattice_free": p_lat,
                "random_free": p_rnd,
                "random_se": se_rnd,
                "deviation_sigma": (p_lat - p_rnd) / se_rnd if se_rnd > 0 else float("inf"),
            }
        )
    return rows


# --- results file ---------------------------------------------------------------


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_results(path, records: Sequence[ClassificationRecord], d: int, meta: dict[str, str]) -> None:
    """Delimiter-separated results with ``# key=value`` metadata lines on top."""
    with open(path, "w", newline="") as fh:
        for k in sorted(meta):
            fh.write(f"# {k}={meta[k]}\n")
        w = csv.writer(fh, lineterminator="\n")
        head = ["id"] + [f"c{i}" for i in range(d * d)] + ["class"]
        for c in ALL_CRITERIA:
            head += [f"{c.value}_detected", f"{c.value}_score", f"{c.value}_margin"]
        head += ["witness_id", "orbit_size", "conflict"]
        w.writerow(head)
        for r in records:
            row = [r.id] + [_fmt(x) for x in r.coords] + [r.cls.value]
            for c in ALL_CRITERIA:
                v = r.verdicts.get(c)
                row += ["", "", ""] if v is None else [int(v.detected), _fmt(v.score), _fmt(v.margin)]
            row += ["" if r.witness_id is None else r.witness_id, r.orbit_size, int(r.conflict)]
            w.writerow(row)


def read_results(path) -> tuple[dict[str, str], list[ClassificationRecord]]:
    meta: dict[str, str] = {}
    lines = []
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                k, _, v = line[1:].strip().partition("=")
                meta[k] = v
            else:
                lines.append(line)
    records = []
    for row in csv.DictReader(lines):
        coords = np.array([float(row[k]) for k in row if k.startswith("c") and k[1:].isdigit()])
        verdicts: dict[Criterion, CriterionVerdict | None] = {}
        for c in ALL_CRITERIA:
            flag = row[f"{c.value}_detected"]
            verdicts[c] = (
                None
                if flag == ""
                else CriterionVerdict(c, flag == "1", float(row[f"{c.value}_score"]), float(row[f"{c.value}_margin"]))
            )
        wid = row["witness_id"]
        records.append(
            ClassificationRecord(
                int(row["id"]),
                coords,
                StateClass(row["class"]),
                verdicts,
                None if wid == "" else int(wid),
                int(row["orbit_size"]),
                row["conflict"] == "1",
            )
        )
    return meta, records
