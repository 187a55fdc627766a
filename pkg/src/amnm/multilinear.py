"""Cochain calculus and certified defect estimation.

The central objects:

* ``LinearMap``: a linear map between algebras as a coefficient matrix.
* ``Cochain``: an n-multilinear map into a target algebra as a dense
  coefficient tensor, one slot algebra per argument.
* ``defect_cochain(phi)``: the bilinear map (a, b) -> phi(ab) - phi(a)phi(b)
  whose norm is the multiplicative defect of phi.
* ``coboundary(phi, psi)``: the degree-raising operator

      (d psi)(a_1..a_{n+1}) = phi(a_1) psi(a_2..a_{n+1})
                              + sum_j (-1)^j psi(.., a_j a_{j+1}, ..)
                              + (-1)^{n+1} psi(a_1..a_n) phi(a_{n+1})

  which is exact on coefficients for every arity.

Norm estimation supports arities 1 and 2 and always returns an interval
(`DefectEstimate`): a witness-certified lower bound plus an unfolding upper
bound.  Inequalities downstream are therefore tested in
no-falsification form, lower(LHS) <= upper(RHS).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import Algebra, Embedding
from .errors import DomainError
from .normest import (
    DEFAULT_RESTARTS,
    DEFAULT_SWEEPS,
    DefectEstimate,
    EuclideanBall,
    EuclideanTarget,
    ball_for,
    estimate_tensor_norm,
    target_for,
)

__all__ = [
    "LinearMap",
    "Cochain",
    "DefectEstimate",
    "defect_cochain",
    "coboundary",
    "restrict_first",
    "restrict_slot",
    "multilinear_norm",
    "linear_map_norm",
    "defect",
]


@dataclass
class LinearMap:
    """A linear map between algebras; ``matrix`` is dim(target) x dim(source)."""

    source: Algebra
    target: Algebra
    matrix: np.ndarray

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        if self.matrix.shape != (self.target.dim, self.source.dim):
            raise DomainError("matrix shape does not match the algebras")

    def apply(self, coords: np.ndarray) -> np.ndarray:
        return self.matrix @ coords

    def __add__(self, other: "LinearMap") -> "LinearMap":
        self._require_same_parents(other)
        return LinearMap(self.source, self.target, self.matrix + other.matrix)

    def __sub__(self, other: "LinearMap") -> "LinearMap":
        self._require_same_parents(other)
        return LinearMap(self.source, self.target, self.matrix - other.matrix)

    def _require_same_parents(self, other):
        if other.source is not self.source or other.target is not self.target:
            raise DomainError("maps have different source or target algebras")

    def preserves_unit(self, embedding: Embedding | None = None, tol: float = 1e-9) -> bool:
        """Does the map send the (embedded sub)unit to the target unit?"""
        unit_src = self.source.unit_coords if embedding is None else embedding.unit_in_parent()
        if unit_src is None or not self.target.is_unital:
            return False
        resid = np.abs(self.apply(unit_src) - self.target.unit_coords).max()
        return bool(resid <= tol * max(1.0, np.abs(self.target.unit_coords).max()))


def identity_map(algebra: Algebra) -> LinearMap:
    return LinearMap(algebra, algebra, np.eye(algebra.dim, dtype=complex))


@dataclass
class Cochain:
    """An n-multilinear map given by its dense coefficient tensor.

    ``tensor`` has shape (dim(target), dim(slot_1), ..., dim(slot_n)).
    Restriction may re-express individual slots in subalgebra coordinates,
    so each slot carries its own algebra.
    """

    slots: tuple[Algebra, ...]
    target: Algebra
    tensor: np.ndarray

    def __post_init__(self):
        self.slots = tuple(self.slots)
        if not self.slots:
            raise DomainError("cochains have arity at least 1")
        self.tensor = np.asarray(self.tensor, dtype=complex)
        expected = (self.target.dim,) + tuple(s.dim for s in self.slots)
        if self.tensor.shape != expected:
            raise DomainError(f"tensor shape {self.tensor.shape} != expected {expected}")

    @property
    def arity(self) -> int:
        return len(self.slots)

    def evaluate(self, *coord_vectors: np.ndarray) -> np.ndarray:
        if len(coord_vectors) != self.arity:
            raise DomainError("wrong number of arguments")
        out = self.tensor
        for x in coord_vectors:
            out = np.tensordot(out, np.asarray(x, dtype=complex), axes=(1, 0))
        return out

    def __add__(self, other: "Cochain") -> "Cochain":
        return Cochain(self.slots, self.target, self.tensor + other.tensor)

    def __sub__(self, other: "Cochain") -> "Cochain":
        return Cochain(self.slots, self.target, self.tensor - other.tensor)


def _target_multiply_left(target: Algebra, coeffs: np.ndarray, tensor: np.ndarray) -> np.ndarray:
    """(coeffs-element) * tensor pointwise in the target algebra.

    ``coeffs`` may be a vector (fixed element) or a matrix whose columns are
    indexed by a new leading slot.
    """
    c = target.structure
    if coeffs.ndim == 1:
        return np.einsum("p,pqt,q...->t...", coeffs, c, tensor)
    return np.einsum("pi,pqt,q...->ti...", coeffs, c, tensor)


def _target_multiply_right(target: Algebra, tensor: np.ndarray, coeffs: np.ndarray) -> np.ndarray:
    c = target.structure
    flat = tensor.reshape(tensor.shape[0], -1)
    if coeffs.ndim == 1:
        out = np.einsum("pqt,pR,q->tR", c, flat, coeffs)
        return out.reshape((target.dim,) + tensor.shape[1:])
    out = np.einsum("pqt,pR,qj->tRj", c, flat, coeffs)
    return out.reshape((target.dim,) + tensor.shape[1:] + (coeffs.shape[1],))


def defect_cochain(phi: LinearMap) -> Cochain:
    """The bilinear map (a, b) -> phi(ab) - phi(a)phi(b)."""
    a, b = phi.source, phi.target
    lin = np.einsum("ijm,tm->tij", a.structure, phi.matrix)
    quad = np.einsum("pqt,pi,qj->tij", b.structure, phi.matrix, phi.matrix)
    return Cochain((a, a), b, lin - quad)


def coboundary(phi: LinearMap, psi: Cochain) -> Cochain:
    """The degree-raising operator d^n attached to phi, exact on coefficients."""
    n = psi.arity
    if n < 1:
        raise DomainError("coboundary needs arity at least 1")
    for s in psi.slots:
        if s is not phi.source:
            raise DomainError("coboundary requires all slots equal to the map's source")
    a, b = phi.source, phi.target
    d = a.dim
    total = _target_multiply_left(b, phi.matrix, psi.tensor)
    for j in range(1, n + 1):
        # fold slots j, j+1 (1-based) of the (n+1)-slot output through the product
        contracted = np.tensordot(psi.tensor, a.structure, axes=(j, 2))
        # axes now: (target, slots without j, i, i'); move (i, i') into place j
        contracted = np.moveaxis(contracted, (n - 1 + 1, n - 1 + 2), (j, j + 1))
        total = total + ((-1) ** j) * contracted
    last = _target_multiply_right(b, psi.tensor, phi.matrix)
    total = total + ((-1) ** (n + 1)) * last
    return Cochain((a,) * (n + 1), b, total)


def restrict_slot(psi: Cochain, slot: int, embedding: Embedding) -> Cochain:
    """Re-express one slot in subalgebra coordinates."""
    if psi.slots[slot] is not embedding.parent:
        raise DomainError("embedding parent does not match the slot algebra")
    tensor = np.tensordot(psi.tensor, embedding.matrix, axes=(slot + 1, 0))
    tensor = np.moveaxis(tensor, -1, slot + 1)
    slots = list(psi.slots)
    slots[slot] = embedding.sub
    return Cochain(tuple(slots), psi.target, tensor)


def restrict_first(embedding: Embedding, psi: Cochain) -> Cochain:
    """Restriction in the first variable; its norm is the D x A x ... defect
    functional when applied to a defect cochain."""
    return restrict_slot(psi, 0, embedding)


def multilinear_norm(
    psi: Cochain,
    restarts: int = DEFAULT_RESTARTS,
    sweeps: int = DEFAULT_SWEEPS,
    seed: int = 0,
    slot_order=None,
    mode: str | None = None,
) -> DefectEstimate:
    """Certified interval for the norm of an arity-1 or arity-2 cochain.

    Arity 1 with Euclidean source and target balls is solved exactly by SVD.
    ``mode`` overrides every slot and the target to the given norm mode's
    coordinate treatment (only "frobenius" is supported as an override).
    """
    if psi.arity > 2:
        raise DomainError("norm estimation supports arities 1 and 2 only")
    if mode not in (None, "frobenius"):
        raise DomainError("mode override supports only 'frobenius'")
    if mode == "frobenius":
        balls = [EuclideanBall(s.dim) for s in psi.slots]
        target = EuclideanTarget(psi.target.dim)
    else:
        balls = [ball_for(s) for s in psi.slots]
        target = target_for(psi.target)
    if psi.arity == 1 and all(isinstance(b, EuclideanBall) for b in balls) and isinstance(target, EuclideanTarget):
        mat = psi.tensor
        if not mat.any():
            return DefectEstimate(0.0, 0.0, [np.zeros(psi.slots[0].dim, dtype=complex)], 0, seed)
        _, s, vh = np.linalg.svd(mat)
        sigma = float(s[0])
        witness = [vh[0].conj()]
        return DefectEstimate(sigma, sigma, witness, 0, seed)
    return estimate_tensor_norm(psi.tensor, balls, target, restarts, sweeps, seed, slot_order)


def linear_map_norm(
    phi: LinearMap,
    restarts: int = DEFAULT_RESTARTS,
    sweeps: int = DEFAULT_SWEEPS,
    seed: int = 0,
) -> DefectEstimate:
    """Operator norm interval; exact (SVD) when both norms are Euclidean."""
    chain = Cochain((phi.source,), phi.target, phi.matrix)
    return multilinear_norm(chain, restarts, sweeps, seed)


def defect(
    phi: LinearMap,
    left: Embedding | None = None,
    right: Embedding | None = None,
    restarts: int = DEFAULT_RESTARTS,
    sweeps: int = DEFAULT_SWEEPS,
    seed: int = 0,
    slot_order=None,
) -> DefectEstimate:
    """Multiplicative defect of phi, optionally restricted per slot.

    ``left``/``right`` restrict the first/second argument to a subalgebra,
    giving the D x A, A x D and D x D defect functionals.
    """
    chain = defect_cochain(phi)
    if left is not None:
        chain = restrict_slot(chain, 0, left)
    if right is not None:
        chain = restrict_slot(chain, 1, right)
    return multilinear_norm(chain, restarts, sweeps, seed, slot_order)
