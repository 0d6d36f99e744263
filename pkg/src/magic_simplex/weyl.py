"""Weyl operators, Bell projectors and Bell-diagonal states of two qudits.

Coordinates of a Bell-diagonal state are stored as a flat array of length
``d**2`` in row-major ``(k, l)`` order, i.e. ``c[k * d + l]`` is the weight of
the Bell projector ``P_{k,l}``.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

COORD_NEG_TOL = 1e-12
COORD_SUM_TOL = 1e-10
HERMITIAN_TOL = 1e-10


def omega(d: int) -> complex:
    """Primitive d-th root of unity ``exp(2 pi i / d)``."""
    return np.exp(2j * np.pi / d)


def index_of(k: int, l: int, d: int) -> int:
    """Flat position of the phase-space point ``(k, l)``."""
    return (k % d) * d + (l % d)


def point_of(i: int, d: int) -> tuple[int, int]:
    """Inverse of :func:`index_of`."""
    return divmod(i, d)


def dimension_of(c: np.ndarray) -> int:
    """Subsystem dimension of a coordinate vector (or batch of vectors)."""
    n = np.shape(c)[-1]
    d = int(round(np.sqrt(n)))
    if d * d != n or d < 2:
        raise ValueError(f"coordinate length {n} is not a square d**2 with d >= 2")
    return d


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@lru_cache(maxsize=None)
def _weyl(k: int, l: int, d: int) -> np.ndarray:
    w = omega(d)
    W = np.zeros((d, d), dtype=complex)
    for j in range(d):
        W[j, (j + l) % d] = w ** ((j * k) % d)
    return _frozen(W)


def weyl_operator(k: int, l: int, d: int) -> np.ndarray:
    """Weyl operator ``W_{k,l} = sum_j w^{jk} |j><j+l|`` on C^d.

    Indices are reduced modulo ``d``.  The returned array is read-only.
    """
    return _weyl(k % d, l % d, d)


@lru_cache(maxsize=None)
def bell_vectors(d: int) -> np.ndarray:
    """All Bell vectors ``|Omega_{k,l}> = (W_{k,l} (x) 1)|Omega_00>`` as rows.

    Row ``k * d + l`` holds the vector in the product basis ``|i>|j>``
    (flat index ``i * d + j``).
    """
    omega00 = np.eye(d, dtype=complex).reshape(d * d) / np.sqrt(d)
    ident = np.eye(d)
    rows = [np.kron(_weyl(k, l, d), ident) @ omega00 for k in range(d) for l in range(d)]
    return _frozen(np.array(rows))


@lru_cache(maxsize=None)
def bell_projectors(d: int) -> np.ndarray:
    """Stack of Bell projectors, shape ``(d**2, d**2, d**2)``."""
    v = bell_vectors(d)
    return _frozen(np.einsum("ni,nj->nij", v, v.conj()))


def bell_projector(k: int, l: int, d: int) -> np.ndarray:
    """Rank-one projector ``P_{k,l}`` onto ``|Omega_{k,l}>``."""
    return bell_projectors(d)[index_of(k, l, d)]


def validate_coords(c, d: int | None = None) -> np.ndarray:
    """Return a clean float copy of simplex coordinates.

    Entries in ``[-1e-12, 0)`` are clamped to zero; anything more negative, or
    a total weight off by more than ``1e-10``, raises ``ValueError``.  Works on
    a single vector or on a batch with coordinates along the last axis.
    """
    c = np.array(c, dtype=float)
    dd = dimension_of(c)
    if d is not None and dd != d:
        raise ValueError(f"expected d={d} coordinates, got d={dd}")
    if not np.all(np.isfinite(c)):
        raise ValueError("coordinates must be finite")
    if np.any(c < -COORD_NEG_TOL):
        raise ValueError(f"negative coordinate {c.min():.3e}")
    c[c < 0] = 0.0
    total = c.sum(axis=-1)
    if np.any(np.abs(total - 1.0) > COORD_SUM_TOL):
        raise ValueError("coordinates must sum to one")
    return c


def unit_coords(k: int, l: int, d: int) -> np.ndarray:
    """Coordinates of the pure Bell state ``P_{k,l}``."""
    c = np.zeros(d * d)
    c[index_of(k, l, d)] = 1.0
    return c


def maximally_mixed_coords(d: int) -> np.ndarray:
    return np.full(d * d, 1.0 / (d * d))


def density_from_coords(c) -> np.ndarray:
    """Bell-diagonal density matrix ``sum_{k,l} c_{k,l} P_{k,l}``."""
    c = validate_coords(c)
    d = dimension_of(c)
    return np.tensordot(c, bell_projectors(d), axes=(-1, 0))


def twirl_to_simplex(rho: np.ndarray) -> np.ndarray:
    """Project a two-qudit density matrix onto the magic simplex.

    Returns ``c_{k,l} = <Omega_{k,l}| rho |Omega_{k,l}>``, which equals the
    coordinates of the equal mixture of ``(W (x) conj(W)) rho (W (x) conj(W))^†``
    over all Weyl operators.  Being a mixture of local-unitary conjugations,
    the twirl maps separable states to separable Bell-diagonal states.
    """
    rho = np.asarray(rho, dtype=complex)
    n = rho.shape[0]
    d = dimension_of(np.empty(n))
    if rho.shape != (n, n):
        raise ValueError("rho must be square")
    if np.abs(rho - rho.conj().T).max() > HERMITIAN_TOL:
        raise ValueError("rho is not Hermitian")
    if abs(np.trace(rho) - 1.0) > COORD_SUM_TOL:
        raise ValueError("rho must have unit trace")
    v = bell_vectors(d)
    c = np.einsum("ni,ij,nj->n", v.conj(), rho, v).real
    return validate_coords(c)


@lru_cache(maxsize=None)
def _bipartite_weyl_stack(d: int) -> np.ndarray:
    ops = [weyl_operator(*point_of(a, d), d) for a in range(d * d)]
    stack = np.array([np.kron(A, B) for A in ops for B in ops])
    return _frozen(stack)


def weyl_coefficients(rho: np.ndarray) -> np.ndarray:
    """Weyl-representation coefficients of a bipartite operator.

    ``s[a * d**2 + b] = tr[(W_a (x) W_b)^† rho]`` where ``a`` and ``b`` are the
    flat phase-space indices of the two local Weyl operators, so that
    ``rho = d**-2 * sum s[a, b] W_a (x) W_b``.
    """
    rho = np.asarray(rho, dtype=complex)
    d = dimension_of(np.empty(rho.shape[0]))
    stack = _bipartite_weyl_stack(d)
    # tr[A^† rho] = sum_ij conj(A_ij) rho_ij
    return np.einsum("nij,ij->n", stack.conj(), rho)


def from_weyl_coefficients(s: np.ndarray, d: int) -> np.ndarray:
    """Rebuild the operator from :func:`weyl_coefficients` output."""
    return np.tensordot(np.asarray(s), _bipartite_weyl_stack(d), axes=(0, 0)) / d**2


def partial_transpose(rho: np.ndarray, d: int) -> np.ndarray:
    """Transpose on the second subsystem; batched over leading axes."""
    shape = rho.shape[:-2]
    t = rho.reshape(*shape, d, d, d, d)
    return np.swapaxes(t, -1, -3).reshape(*shape, d * d, d * d)


def realign(rho: np.ndarray, d: int) -> np.ndarray:
    """Realignment ``(|i><j| (x) |k><l|)_R = |i><k| (x) |j><l|``; batched."""
    shape = rho.shape[:-2]
    t = rho.reshape(*shape, d, d, d, d)
    return np.swapaxes(t, -2, -3).reshape(*shape, d * d, d * d)
