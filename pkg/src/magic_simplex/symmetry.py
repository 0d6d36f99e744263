"""Entanglement-class conserving symmetries of the magic simplex.

The symmetries act on the discrete phase space ``Z_d x Z_d`` that labels the
Bell projectors, so every element is a permutation of the ``d**2`` coordinate
positions.  The group is generated by translations, momentum inversion,
quarter rotation and vertical shear and enumerated by breadth-first closure.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Callable

import numpy as np

from .weyl import dimension_of, index_of, omega, point_of, weyl_operator

DEFAULT_GROUP_CAP = 10**6
ORBIT_DECIMALS = 12


class GroupTooLarge(RuntimeError):
    pass


@dataclass(frozen=True)
class SymmetryElement:
    """Permutation ``perm`` of flat phase-space indices: ``i -> perm[i]``.

    ``word`` lists generator labels, applied left to right, whose composition
    gives ``perm``.
    """

    perm: tuple[int, ...]
    word: tuple[str, ...] = ()

    def apply(self, c: np.ndarray) -> np.ndarray:
        """Image of coordinates: the weight at ``i`` moves to ``perm[i]``."""
        c = np.asarray(c)
        out = np.empty_like(c)
        out[..., list(self.perm)] = c
        return out

    def then(self, other: SymmetryElement) -> SymmetryElement:
        """First ``self``, then ``other``."""
        perm = tuple(other.perm[i] for i in self.perm)
        return SymmetryElement(perm, self.word + other.word)

    def inverse(self) -> SymmetryElement:
        inv = [0] * len(self.perm)
        for i, p in enumerate(self.perm):
            inv[p] = i
        return SymmetryElement(tuple(inv), tuple(f"{w}^-1" for w in reversed(self.word)))

    @property
    def is_identity(self) -> bool:
        return all(i == p for i, p in enumerate(self.perm))


def point_map(d: int, f: Callable[[int, int], tuple[int, int]], label: str) -> SymmetryElement:
    """Element induced by a map on phase-space points ``(k, l)``."""
    perm = tuple(index_of(*f(*point_of(i, d)), d) for i in range(d * d))
    if sorted(perm) != list(range(d * d)):
        raise ValueError(f"{label} is not a bijection of Z_{d} x Z_{d}")
    return SymmetryElement(perm, (label,))


def translation(d: int, a: int, b: int) -> SymmetryElement:
    return point_map(d, lambda k, l: (k + a, l + b), f"T({a},{b})")


def momentum_inversion(d: int) -> SymmetryElement:
    return point_map(d, lambda k, l: (-k, l), "M")


def quarter_rotation(d: int) -> SymmetryElement:
    return point_map(d, lambda k, l: (-l, k), "R")


def vertical_shear(d: int) -> SymmetryElement:
    return point_map(d, lambda k, l: (k + l, l), "S")


def generators(d: int) -> list[SymmetryElement]:
    if d < 2:
        raise ValueError("d must be at least 2")
    return [
        translation(d, 1, 0),
        translation(d, 0, 1),
        momentum_inversion(d),
        quarter_rotation(d),
        vertical_shear(d),
    ]


@dataclass(frozen=True)
class SymmetryGroup:
    d: int
    elements: tuple[SymmetryElement, ...] = field(repr=False)

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __contains__(self, g: SymmetryElement) -> bool:
        return g.perm in self._perm_set

    @cached_property
    def _perm_set(self) -> frozenset[tuple[int, ...]]:
        return frozenset(g.perm for g in self.elements)

    @cached_property
    def permutations(self) -> np.ndarray:
        """Integer array ``(|G|, d**2)``; row ``g`` is ``g.perm``."""
        p = np.array([g.perm for g in self.elements], dtype=np.intp)
        p.setflags(write=False)
        return p

    @cached_property
    def gather_indices(self) -> np.ndarray:
        """Row ``g`` satisfies ``(g . c) == c[gather_indices[g]]``."""
        p = np.argsort(self.permutations, axis=1)
        p.setflags(write=False)
        return p

    def images(self, c: np.ndarray) -> np.ndarray:
        """All images ``g . c`` (with repeats), shape ``(|G|, d**2)``."""
        return np.asarray(c)[self.gather_indices]


def generate_group(d: int, cap: int = DEFAULT_GROUP_CAP) -> SymmetryGroup:
    """Breadth-first closure of :func:`generators` under composition."""
    if not 2 <= d <= 5:
        raise ValueError("symmetry groups are supported for 2 <= d <= 5")
    return _generate_group(d, cap)


@lru_cache(maxsize=None)
def _generate_group(d: int, cap: int) -> SymmetryGroup:
    gens = generators(d)
    identity = SymmetryElement(tuple(range(d * d)), ())
    seen = {identity.perm: identity}
    queue = deque([identity])
    while queue:
        g = queue.popleft()
        for s in gens:
            h = g.then(s)
            if h.perm not in seen:
                seen[h.perm] = h
                if len(seen) > cap:
                    raise GroupTooLarge(f"more than {cap} elements for d={d}")
                queue.append(h)
    return SymmetryGroup(d, tuple(seen.values()))


def orbit(c: np.ndarray, group: SymmetryGroup) -> np.ndarray:
    """Distinct images of ``c`` under ``group``; ``c`` itself comes first.

    Images agreeing entrywise to 12 decimals are treated as one.
    """
    c = np.asarray(c, dtype=float)
    if dimension_of(c) != group.d:
        raise ValueError("dimension mismatch between state and group")
    imgs = group.images(c)
    _, first = np.unique(np.round(imgs, ORBIT_DECIMALS), axis=0, return_index=True)
    first.sort()
    return imgs[first]


def _generator_action(label: str, a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    d = a.shape[-1]
    j = np.arange(d)
    if label == "T(1,0)":
        return a @ weyl_operator(1, 0, d).T, b
    if label == "T(0,1)":
        return a @ weyl_operator(0, 1, d).T, b
    if label == "M":
        return a.conj(), b.conj()
    if label == "R":
        F = omega(d) ** np.outer(j, j) / np.sqrt(d)
        return a @ F.T, b @ F.conj().T
    if label == "S":
        D = np.exp(-1j * np.pi * j * (j + d) / d)
        return a * D, b * D.conj()
    raise ValueError(f"no local realisation for generator {label!r}")


def product_action(g: SymmetryElement, a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Local (anti-)unitary image of product vectors under ``g``.

    The twirled coordinates of the returned pair are ``g`` applied to those
    of ``(a, b)``: translations act as a Weyl operator on the first party,
    momentum inversion as complex conjugation, the rotation as ``F (x) conj(F)``
    with the Fourier matrix and the shear as a quadratic phase ``D (x) conj(D)``.
    Rows of ``a`` and ``b`` are independent vectors.
    """
    a, b = np.atleast_2d(np.asarray(a, dtype=complex)), np.atleast_2d(np.asarray(b, dtype=complex))
    for label in g.word:
        a, b = _generator_action(label, a, b)
    return a, b
