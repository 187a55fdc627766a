"""Exact diagonals for library algebras, averaging and splitting operators.

A diagonal for D is an element Delta of D (x) D with

    a . Delta = Delta . a     and     pi(Delta) = 1_D-action,

where pi multiplies the legs together.  In finite dimensions the library
diagonals satisfy both identities exactly, so the homotopy operators that
are limits in general collapse to a single evaluation:

    split(phi, w, psi)(a_1..a_n) = sum_k phi(c_k) psi(d_k, a_1..a_n).

The amenability bound K is the representation bound sum_k ||c_k|| ||d_k||,
an upper bound for the projective tensor norm; inequalities that consume K
only get stronger under this substitution.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .algebra import Algebra, Embedding
from .errors import DomainError, PreconditionError
from .jsonio import complex_to_json
from .multilinear import Cochain, LinearMap

VALID_RESIDUAL_TOL = 1e-10


@dataclass
class TensorRep:
    """An element of D (x) D as a finite sum of elementary tensors.

    ``pairs`` holds (c_k, d_k) coordinate vectors over ``algebra``;
    ``proj_bound`` is sum_k ||c_k|| ||d_k||, recomputable from the pairs.
    """

    algebra: Algebra
    pairs: list[tuple[np.ndarray, np.ndarray]]
    proj_bound: float = field(init=False)

    def __post_init__(self):
        clean = []
        for c, d in self.pairs:
            c = np.asarray(c, dtype=complex)
            d = np.asarray(d, dtype=complex)
            if c.shape != (self.algebra.dim,) or d.shape != (self.algebra.dim,):
                raise DomainError("tensor leg has wrong coordinate length")
            clean.append((c, d))
        self.pairs = clean
        self.proj_bound = float(
            sum(self.algebra.element_norm(c) * self.algebra.element_norm(d) for c, d in self.pairs)
        )

    def dense(self) -> np.ndarray:
        """Coefficient matrix W[i, j] = sum_k c_k[i] d_k[j]."""
        w = np.zeros((self.algebra.dim, self.algebra.dim), dtype=complex)
        for c, d in self.pairs:
            w += np.outer(c, d)
        return w

    def flip(self, opposite_algebra: Algebra) -> "TensorRep":
        """c (x) d -> d (x) c, re-parented to the opposite algebra."""
        return TensorRep(opposite_algebra, [(d.copy(), c.copy()) for c, d in self.pairs])

    def to_json_dict(self) -> dict:
        return {
            "pairs": [[complex_to_json(c), complex_to_json(d)] for c, d in self.pairs],
            "proj_bound": self.proj_bound,
        }


@dataclass
class DiagonalCert:
    """A tensor representation with its verification residuals.

    ``residual_commute`` = max over basis a of the dense-coefficient norm of
    a.Delta - Delta.a; ``residual_unit`` = max over basis a of
    ||a pi(Delta) - a||.  Both vanish (to 1e-10 of scale) for an exact
    diagonal; K is the representation bound, an amenability-constant upper
    bound.
    """

    rep: TensorRep
    K: float
    residual_commute: float
    residual_unit: float
    valid: bool

    def to_json_dict(self) -> dict:
        return {
            "rep": self.rep.to_json_dict(),
            "K": self.K,
            "residuals": {"commute": self.residual_commute, "unit": self.residual_unit},
            "valid": self.valid,
        }


def verify_diagonal(algebra: Algebra, rep: TensorRep) -> DiagonalCert:
    """Compute both diagonal residuals exactly over a basis of the algebra."""
    if rep.algebra is not algebra:
        raise DomainError("representation parented to a different algebra")
    d = algebra.dim
    w = rep.dense()
    scale = max(1.0, float(np.abs(w).max()))
    commute = 0.0
    basis = np.eye(d)
    for i in range(d):
        lmat = algebra.left_mult_matrix(basis[i])
        rmat = algebra.right_mult_matrix(basis[i])
        resid = lmat @ w - w @ rmat.T
        commute = max(commute, float(np.abs(resid).max()))
    pi = np.zeros(d, dtype=complex)
    for c, dd in rep.pairs:
        pi += algebra.multiply_coords(c, dd)
    unit_resid = 0.0
    for i in range(d):
        diff = algebra.multiply_coords(basis[i], pi) - basis[i]
        unit_resid = max(unit_resid, algebra.element_norm(diff))
    valid = commute <= VALID_RESIDUAL_TOL * scale and unit_resid <= VALID_RESIDUAL_TOL * max(
        1.0, max(algebra.element_norm(basis[i]) for i in range(d))
    )
    return DiagonalCert(rep, rep.proj_bound, commute, unit_resid, bool(valid))


class NoLibraryDiagonal(DomainError):
    """The algebra is not in the supported library; supply a representation
    and check it with verify_diagonal."""


def library_diagonal(algebra: Algebra) -> DiagonalCert:
    """Exact diagonal for a library algebra.

    Supported: full matrix algebras M_k (Delta = (1/k) sum e_ij (x) e_ji),
    commutative C^k (Delta = sum e_i (x) e_i), direct sums of supported
    algebras (concatenation), unitizations of supported unital algebras, and
    images of supported algebras under a recorded unital isomorphism
    (generated subalgebras spanning their parent, and structurally
    commutative subalgebras via their minimal idempotents).
    """
    rep = _library_rep(algebra)
    if rep is None:
        raise NoLibraryDiagonal(f"no library diagonal for {algebra!r}")
    cert = verify_diagonal(algebra, rep)
    if not cert.valid:
        raise NoLibraryDiagonal("constructed representation failed verification")
    return cert


def _library_rep(algebra: Algebra) -> TensorRep | None:
    name = algebra.kind.get("name")
    if name == "matrix":
        k = algebra.kind["k"]
        idx = lambda i, j: i * k + j
        pairs = []
        for i in range(k):
            for j in range(k):
                c = np.zeros(algebra.dim, dtype=complex)
                c[idx(i, j)] = 1.0 / k
                dvec = np.zeros(algebra.dim, dtype=complex)
                dvec[idx(j, i)] = 1.0
                pairs.append((c, dvec))
        return TensorRep(algebra, pairs)
    if name == "commutative":
        basis = np.eye(algebra.dim, dtype=complex)
        return TensorRep(algebra, [(basis[i], basis[i]) for i in range(algebra.dim)])
    if name == "direct_sum":
        a1, a2 = algebra.kind["summands"]
        rep1, rep2 = _library_rep(a1), _library_rep(a2)
        if rep1 is None or rep2 is None:
            return None
        d1 = a1.dim
        pairs = []
        for c, d in rep1.pairs:
            pairs.append((_pad(c, 0, algebra.dim), _pad(d, 0, algebra.dim)))
        for c, d in rep2.pairs:
            pairs.append((_pad(c, d1, algebra.dim), _pad(d, d1, algebra.dim)))
        return TensorRep(algebra, pairs)
    if name == "unitization":
        base = algebra.base
        if not base.is_unital:
            return None
        base_rep = _library_rep(base)
        if base_rep is None:
            return None
        # through the splitting (lambda, a) -> (lambda, lambda 1 + a) the
        # unitization is a direct sum of the scalars and the base
        head = np.zeros(algebra.dim, dtype=complex)
        head[0] = 1.0
        head[1:] = -base.unit_coords
        pairs = [(head, head.copy())]
        for c, d in base_rep.pairs:
            pairs.append((_pad(c, 1, algebra.dim), _pad(d, 1, algebra.dim)))
        return TensorRep(algebra, pairs)
    if name == "generated":
        parent = algebra.kind.get("parent")
        basis = algebra.kind.get("embedding_matrix")
        if parent is not None and basis is not None and algebra.dim == parent.dim:
            parent_rep = _library_rep(parent)
            if parent_rep is not None:
                proj = basis.conj().T
                return TensorRep(algebra, [(proj @ c, proj @ d) for c, d in parent_rep.pairs])
        frame = _structural_idempotent_frame(algebra)
        if frame is not None:
            return TensorRep(
                algebra, [(frame[:, i].copy(), frame[:, i].copy()) for i in range(frame.shape[1])]
            )
    return None


def _structural_idempotent_frame(algebra: Algebra):
    from .normest import minimal_idempotent_frame

    return minimal_idempotent_frame(algebra)


def _pad(coords: np.ndarray, offset: int, dim: int) -> np.ndarray:
    out = np.zeros(dim, dtype=complex)
    out[offset : offset + coords.shape[0]] = coords
    return out


def average(phi: LinearMap, embedding: Embedding, rep: TensorRep, psi: Cochain) -> Cochain:
    """The averaging operator: (a_1..a_n) -> sum_k phi(c_k) psi(d_k, a_1..a_n).

    ``psi`` has arity n+1 with first slot equal to phi's source; the legs of
    ``rep`` live in the subalgebra and enter through the embedding.  Linear
    in the representation and independent of its decomposition.
    """
    if psi.arity < 1:
        raise DomainError("averaging needs arity at least 1")
    if embedding.parent is not phi.source:
        raise DomainError("embedding must land in the map's source algebra")
    if rep.algebra is not embedding.sub:
        raise DomainError("representation must live on the embedded subalgebra")
    if psi.slots[0] is not phi.source:
        raise DomainError("first slot of the cochain must be the map's source")
    b = phi.target
    out = np.zeros((b.dim,) + psi.tensor.shape[2:], dtype=complex)
    for c, d in rep.pairs:
        phi_c = phi.apply(embedding.embed_coords(c))
        psi_d = np.tensordot(psi.tensor, embedding.embed_coords(d), axes=(1, 0))
        flat = psi_d.reshape(b.dim, -1)
        prod = np.einsum("pqt,p,qR->tR", b.structure, phi_c, flat)
        out += prod.reshape(out.shape)
    return Cochain(psi.slots[1:], b, out)


def split(phi: LinearMap, embedding: Embedding, cert: DiagonalCert, psi: Cochain) -> Cochain:
    """The splitting operator: averaging against a verified exact diagonal."""
    if not cert.valid:
        raise PreconditionError("refusing to split against an unverified diagonal")
    return average(phi, embedding, cert.rep, psi)
