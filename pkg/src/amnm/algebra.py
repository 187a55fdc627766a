"""Finite-dimensional normed algebras presented by structure constants.

An algebra is a basis e_1..e_d with product e_i e_j = sum_k c[i,j,k] e_k,
an (optional) identity element, and one of three norms:

* ``spectral``: largest singular value of the matrix realization; requires
  realizing matrices for the basis.
* ``frobenius``: Euclidean norm of the coordinate vector.  When a
  realization exists the basis is Frobenius-orthonormal, so this equals the
  Frobenius norm of the realized matrix.
* ``unitization-composite``: |lambda| + ||a|| for an element (lambda, a) of
  a unitization, using the base algebra's norm for a.

Associativity, the identity law and submultiplicativity (sampled) are
checked eagerly at construction; everything downstream assumes them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError
from .jsonio import complex_from_json, complex_to_json
from .rng import complex_gaussian, stream

ASSOC_TOL = 1e-9
UNIT_TOL = 1e-9
RANK_TOL = 1e-9
SUBMULT_TOL = 1e-9
_SUBMULT_SAMPLES = 200
_CHECK_SEED = 0x5EED  # fixed; construction-time checks must not consume user streams

NORM_MODES = ("spectral", "frobenius", "unitization-composite")


class Algebra:
    """A finite-dimensional normed algebra over the complex numbers."""

    def __init__(
        self,
        structure: np.ndarray,
        unit_coords=None,
        norm_mode: str = "frobenius",
        realization=None,
        labels=None,
        kind: dict | None = None,
        base: "Algebra | None" = None,
        check: bool = True,
    ):
        structure = np.asarray(structure, dtype=complex)
        if structure.ndim != 3 or len(set(structure.shape)) != 1:
            raise ConfigError("structure tensor must be d x d x d")
        self.structure = structure
        self.dim = structure.shape[0]
        self.unit_coords = None if unit_coords is None else np.asarray(unit_coords, dtype=complex)
        if norm_mode not in NORM_MODES:
            raise ConfigError(f"unknown norm mode {norm_mode!r}")
        self.norm_mode = norm_mode
        self.realization = None if realization is None else np.asarray(realization, dtype=complex)
        self.labels = list(labels) if labels is not None else [f"e{i + 1}" for i in range(self.dim)]
        self.kind = kind or {}
        self.base = base
        self._cache: dict = {}
        if norm_mode == "spectral" and self.realization is None:
            raise ConfigError("spectral mode requires a matrix realization")
        if norm_mode == "unitization-composite" and base is None:
            raise ConfigError("unitization-composite mode requires a base algebra")
        if check:
            self._check_invariants()

    # -- construction-time invariants -------------------------------------

    def _check_invariants(self) -> None:
        c = self.structure
        left = np.einsum("ijm,mkl->ijkl", c, c)
        right = np.einsum("jkm,iml->ijkl", c, c)
        scale = max(1.0, float(np.abs(c).max()) ** 2)
        if np.abs(left - right).max() > ASSOC_TOL * scale:
            raise ConfigError("structure constants are not associative")
        if self.unit_coords is not None:
            if self.unit_coords.shape != (self.dim,):
                raise ConfigError("unit coordinate vector has wrong length")
            basis = np.eye(self.dim)
            for i in range(self.dim):
                lhs = self.multiply_coords(self.unit_coords, basis[i])
                rhs = self.multiply_coords(basis[i], self.unit_coords)
                if np.abs(lhs - basis[i]).max() > UNIT_TOL or np.abs(rhs - basis[i]).max() > UNIT_TOL:
                    raise ConfigError("unit coordinates are not a two-sided identity")
        if self.realization is not None:
            if self.realization.shape[0] != self.dim or self.realization.shape[1] != self.realization.shape[2]:
                raise ConfigError("realization must be one square matrix per basis element")
            flat = self.realization.reshape(self.dim, -1)
            gram = flat @ flat.conj().T
            if np.abs(gram - np.eye(self.dim)).max() > 1e-8:
                raise ConfigError("realized basis must be Frobenius-orthonormal")
            prod = np.einsum("iab,jbc->ijac", self.realization, self.realization)
            via_struct = np.einsum("ijk,kac->ijac", self.structure, self.realization)
            pscale = max(1.0, float(np.abs(prod).max()))
            if np.abs(prod - via_struct).max() > ASSOC_TOL * pscale:
                raise ConfigError("realizing matrices do not reproduce the structure constants")
        if self.norm_mode == "spectral" and self.unit_coords is not None:
            if abs(self.element_norm(self.unit_coords) - 1.0) > 1e-8:
                raise ConfigError("spectral mode requires ||1|| = 1")
        self._check_submultiplicative()

    def _check_submultiplicative(self) -> None:
        rng = stream(_CHECK_SEED, self.dim)
        a = complex_gaussian(rng, (_SUBMULT_SAMPLES, self.dim))
        b = complex_gaussian(rng, (_SUBMULT_SAMPLES, self.dim))
        ab = np.einsum("si,sj,ijk->sk", a, b, self.structure)
        na, nb, nab = (self._batch_norms(m) for m in (a, b, ab))
        good = (na > 0) & (nb > 0)
        if np.any(nab[good] > na[good] * nb[good] * (1.0 + SUBMULT_TOL) + 1e-12):
            raise ConfigError("norm is not submultiplicative on sampled pairs")

    def _batch_norms(self, coords: np.ndarray) -> np.ndarray:
        if self.norm_mode == "spectral":
            mats = np.tensordot(coords, self.realization, axes=(1, 0))
            return np.linalg.svd(mats, compute_uv=False)[..., 0]
        if self.norm_mode == "frobenius":
            return np.linalg.norm(coords, axis=1)
        return np.abs(coords[:, 0]) + self.base._batch_norms(coords[:, 1:])

    # -- arithmetic --------------------------------------------------------

    def multiply_coords(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.einsum("i,j,ijk->k", x, y, self.structure)

    def left_mult_matrix(self, x: np.ndarray) -> np.ndarray:
        """Matrix of y -> x*y acting on coordinates."""
        return np.einsum("i,ijk->kj", x, self.structure)

    def right_mult_matrix(self, x: np.ndarray) -> np.ndarray:
        """Matrix of y -> y*x acting on coordinates."""
        return np.einsum("j,ijk->ki", x, self.structure)

    def realize(self, coords: np.ndarray) -> np.ndarray:
        if self.realization is None:
            raise ConfigError("algebra has no matrix realization")
        return np.tensordot(coords, self.realization, axes=(0, 0))

    def element_norm(self, coords: np.ndarray) -> float:
        coords = np.asarray(coords, dtype=complex)
        if self.norm_mode == "spectral":
            mat = self.realize(coords)
            return 0.0 if not mat.any() else float(np.linalg.svd(mat, compute_uv=False)[0])
        if self.norm_mode == "frobenius":
            return float(np.linalg.norm(coords))
        return abs(coords[0]) + self.base.element_norm(coords[1:])

    def coords_ball_factor(self) -> float:
        """c with ||coords(a)||_2 <= c for every a in the unit ball."""
        if self.norm_mode == "spectral":
            return float(np.sqrt(self.realization.shape[1]))
        if self.norm_mode == "frobenius":
            return 1.0
        return max(1.0, self.base.coords_ball_factor())

    # -- element helpers ----------------------------------------------------

    def element(self, coords) -> "Element":
        coords = np.asarray(coords, dtype=complex)
        if coords.shape != (self.dim,):
            raise DomainError("coordinate vector has wrong length")
        return Element(coords, self)

    def basis_element(self, i: int) -> "Element":
        coords = np.zeros(self.dim, dtype=complex)
        coords[i] = 1.0
        return Element(coords, self)

    @property
    def is_unital(self) -> bool:
        return self.unit_coords is not None

    def unit(self) -> "Element":
        if self.unit_coords is None:
            raise DomainError("algebra has no unit")
        return Element(self.unit_coords.copy(), self)

    def __repr__(self):
        name = self.kind.get("name", "algebra")
        return f"Algebra({name}, dim={self.dim}, norm={self.norm_mode})"

    # -- serialization -------------------------------------------------------

    def to_json_dict(self) -> dict:
        doc = {
            "dim": self.dim,
            "labels": self.labels,
            "structure": complex_to_json(self.structure),
            "unit": None if self.unit_coords is None else complex_to_json(self.unit_coords),
            "norm_mode": self.norm_mode,
        }
        if self.realization is not None:
            doc["realization"] = complex_to_json(self.realization)
        return doc

    @classmethod
    def from_json_dict(cls, doc: dict) -> "Algebra":
        structure = complex_from_json(doc["structure"])
        unit = None if doc.get("unit") is None else complex_from_json(doc["unit"])
        realization = None
        if doc.get("realization") is not None:
            realization = complex_from_json(doc["realization"])
        return cls(structure, unit, doc["norm_mode"], realization, doc.get("labels"))


@dataclass
class Element:
    """An algebra element as a coordinate vector over its parent's basis."""

    coords: np.ndarray
    parent: Algebra

    def __post_init__(self):
        self.coords = np.asarray(self.coords, dtype=complex)
        if self.coords.shape != (self.parent.dim,):
            raise DomainError("coordinate length does not match the algebra dimension")

    def __mul__(self, other: "Element") -> "Element":
        if other.parent is not self.parent:
            raise DomainError("elements live in different algebras")
        return Element(self.parent.multiply_coords(self.coords, other.coords), self.parent)

    def __add__(self, other: "Element") -> "Element":
        if other.parent is not self.parent:
            raise DomainError("elements live in different algebras")
        return Element(self.coords + other.coords, self.parent)

    def __sub__(self, other: "Element") -> "Element":
        if other.parent is not self.parent:
            raise DomainError("elements live in different algebras")
        return Element(self.coords - other.coords, self.parent)

    def __rmul__(self, scalar) -> "Element":
        return Element(scalar * self.coords, self.parent)

    def norm(self) -> float:
        return self.parent.element_norm(self.coords)


def multiply(a: Element, b: Element) -> Element:
    """Product of two elements of the same algebra."""
    return a * b


def element_norm(a: Element) -> float:
    return a.norm()


@dataclass
class Embedding:
    """A subalgebra D together with its inclusion into a parent algebra.

    ``matrix`` has orthonormal columns (parent coords x sub coords), so it is
    isometric for coordinate Euclidean norms.
    """

    sub: Algebra
    parent: Algebra
    matrix: np.ndarray

    def embed_coords(self, coords: np.ndarray) -> np.ndarray:
        return self.matrix @ coords

    def project_coords(self, coords: np.ndarray) -> np.ndarray:
        """Coordinates in D of a parent element lying in D's span."""
        return self.matrix.conj().T @ coords

    def unit_in_parent(self) -> np.ndarray:
        return self.embed_coords(self.sub.unit_coords)


def identity_embedding(algebra: Algebra) -> Embedding:
    return Embedding(algebra, algebra, np.eye(algebra.dim, dtype=complex))


# -- constructors ------------------------------------------------------------


def build_full_matrix_algebra(k: int, norm_mode: str = "spectral") -> Algebra:
    """M_k with the matrix-unit basis e_11, e_12, ..., e_kk."""
    if k < 1:
        raise DomainError("matrix size must be at least 1")
    dim = k * k
    idx = lambda i, j: i * k + j
    structure = np.zeros((dim, dim, dim), dtype=complex)
    realization = np.zeros((dim, k, k), dtype=complex)
    labels = []
    for i in range(k):
        for j in range(k):
            realization[idx(i, j), i, j] = 1.0
            labels.append(f"e{i + 1}{j + 1}")
    for i in range(k):
        for j in range(k):
            for l in range(k):
                # e_ij e_jl = e_il
                structure[idx(i, j), idx(j, l), idx(i, l)] = 1.0
    unit = np.zeros(dim, dtype=complex)
    for i in range(k):
        unit[idx(i, i)] = 1.0
    return Algebra(structure, unit, norm_mode, realization, labels, kind={"name": "matrix", "k": k})


def build_commutative_algebra(k: int, norm_mode: str = "spectral") -> Algebra:
    """C^k with pointwise product; realized as diagonal matrix units."""
    if k < 1:
        raise DomainError("dimension must be at least 1")
    structure = np.zeros((k, k, k), dtype=complex)
    realization = np.zeros((k, k, k), dtype=complex)
    for i in range(k):
        structure[i, i, i] = 1.0
        realization[i, i, i] = 1.0
    unit = np.ones(k, dtype=complex)
    return Algebra(structure, unit, norm_mode, realization, kind={"name": "commutative", "k": k})


def direct_sum(a1: Algebra, a2: Algebra) -> Algebra:
    """Block algebra with componentwise product and vanishing cross terms.

    The shared norm mode is applied to the whole: block-diagonal spectral
    norm (= max of summand norms) or coordinate Euclidean norm.
    """
    if a1.norm_mode != a2.norm_mode:
        raise ConfigError("direct summands must share a norm mode")
    if a1.norm_mode == "unitization-composite":
        raise ConfigError("direct sums of unitizations are not supported")
    d1, d2 = a1.dim, a2.dim
    dim = d1 + d2
    structure = np.zeros((dim, dim, dim), dtype=complex)
    structure[:d1, :d1, :d1] = a1.structure
    structure[d1:, d1:, d1:] = a2.structure
    unit = None
    if a1.is_unital and a2.is_unital:
        unit = np.concatenate([a1.unit_coords, a2.unit_coords])
    realization = None
    if a1.realization is not None and a2.realization is not None:
        k1, k2 = a1.realization.shape[1], a2.realization.shape[1]
        realization = np.zeros((dim, k1 + k2, k1 + k2), dtype=complex)
        realization[:d1, :k1, :k1] = a1.realization
        realization[d1:, k1:, k1:] = a2.realization
    labels = [f"L.{s}" for s in a1.labels] + [f"R.{s}" for s in a2.labels]
    kind = {"name": "direct_sum", "dims": (d1, d2)}
    alg = Algebra(structure, unit, a1.norm_mode, realization, labels, kind=kind)
    alg.kind["summands"] = (a1, a2)
    return alg


def summand_embeddings(sum_algebra: Algebra) -> tuple[Embedding, Embedding]:
    """Embeddings of the two summands of a direct sum."""
    if sum_algebra.kind.get("name") != "direct_sum":
        raise DomainError("not a direct sum")
    a1, a2 = sum_algebra.kind["summands"]
    d1, d2 = a1.dim, a2.dim
    m1 = np.zeros((d1 + d2, d1), dtype=complex)
    m1[:d1] = np.eye(d1)
    m2 = np.zeros((d1 + d2, d2), dtype=complex)
    m2[d1:] = np.eye(d2)
    return Embedding(a1, sum_algebra, m1), Embedding(a2, sum_algebra, m2)


def summand_quotient(sum_algebra: Algebra, keep: int) -> tuple[Algebra, np.ndarray]:
    """Quotient of a direct sum by the other summand (coordinates dropped).

    Returns the kept summand and the coordinate matrix of the quotient map.
    """
    if sum_algebra.kind.get("name") != "direct_sum":
        raise DomainError("not a direct sum")
    a1, a2 = sum_algebra.kind["summands"]
    d1, d2 = a1.dim, a2.dim
    if keep == 0:
        qmat = np.zeros((d1, d1 + d2), dtype=complex)
        qmat[:, :d1] = np.eye(d1)
        return a1, qmat
    if keep == 1:
        qmat = np.zeros((d2, d1 + d2), dtype=complex)
        qmat[:, d1:] = np.eye(d2)
        return a2, qmat
    raise DomainError("keep must be 0 or 1")


def _orthonormal_columns(vectors: np.ndarray) -> np.ndarray:
    """Rank-revealing orthonormal basis (columns) for the span of columns."""
    if vectors.size == 0:
        return vectors
    u, s, _ = np.linalg.svd(vectors, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return u[:, :0]
    rank = int(np.sum(s > RANK_TOL * s[0]))
    return u[:, :rank]


def generated_subalgebra(
    parent: Algebra, generators: list[Element], unital: bool = True
) -> tuple[Algebra, Embedding]:
    """Smallest (optionally unital) subalgebra containing the generators.

    Iterates products and re-orthonormalizes until the span stabilizes; the
    returned basis is Frobenius-orthonormal in parent coordinates, and the
    embedding matrix has orthonormal columns.
    """
    if parent.norm_mode == "unitization-composite":
        raise ConfigError("generate inside the base algebra, then unitize")
    cols = []
    for g in generators:
        if g.parent is not parent:
            raise DomainError("generator does not belong to the parent algebra")
        cols.append(g.coords)
    if unital:
        if not parent.is_unital:
            raise DomainError("unital closure requested in a non-unital algebra")
        cols.append(parent.unit_coords)
    if not cols:
        raise DomainError("need at least one generator")
    basis = _orthonormal_columns(np.stack(cols, axis=1))
    while True:
        prods = [
            parent.multiply_coords(basis[:, i], basis[:, j])
            for i in range(basis.shape[1])
            for j in range(basis.shape[1])
        ]
        enlarged = _orthonormal_columns(np.concatenate([basis] + [p[:, None] for p in prods], axis=1))
        if enlarged.shape[1] == basis.shape[1]:
            basis = enlarged
            break
        basis = enlarged
    dim_d = basis.shape[1]
    structure = np.zeros((dim_d, dim_d, dim_d), dtype=complex)
    proj = basis.conj().T
    for i in range(dim_d):
        for j in range(dim_d):
            prod = parent.multiply_coords(basis[:, i], basis[:, j])
            coeffs = proj @ prod
            if np.linalg.norm(prod - basis @ coeffs) > 1e-8 * max(1.0, np.linalg.norm(prod)):
                raise ConfigError("closure failed: product left the candidate span")
            structure[i, j] = coeffs
    unit_coords = None
    if unital:
        unit_coords = proj @ parent.unit_coords
    else:
        unit_coords = _find_internal_unit(structure)
    realization = None
    if parent.realization is not None:
        realization = np.tensordot(basis.T, parent.realization, axes=(1, 0))
    sub = Algebra(
        structure,
        unit_coords,
        parent.norm_mode,
        realization,
        kind={"name": "generated"},
        base=parent.base,
    )
    sub.kind["parent"] = parent
    emb = Embedding(sub, parent, basis)
    sub.kind["embedding_matrix"] = basis
    return sub, emb


def _find_internal_unit(structure: np.ndarray):
    """Solve for a two-sided identity of the structure tensor, if one exists."""
    d = structure.shape[0]
    # unit u satisfies sum_i u_i c[i,j,k] = delta_jk and sum_j u_j c[i,j,k] = delta_ik
    lhs = np.concatenate(
        [
            structure.reshape(d, d * d).T,  # rows (j,k), cols i
            np.einsum("ijk->jik", structure).reshape(d, d * d).T,
        ]
    )
    target = np.concatenate([np.eye(d).reshape(-1), np.eye(d).reshape(-1)])
    sol, *_ = np.linalg.lstsq(lhs, target, rcond=None)
    residual = np.abs(lhs @ sol - target).max()
    if residual > 1e-9:
        return None
    return sol


def unitize(algebra: Algebra) -> Algebra:
    """Adjoin a unit: (l1, a1)(l2, a2) = (l1 l2, l1 a2 + l2 a1 + a1 a2),
    with the l1-sum norm |lambda| + ||a||."""
    d = algebra.dim
    dim = d + 1
    structure = np.zeros((dim, dim, dim), dtype=complex)
    structure[0, 0, 0] = 1.0
    for i in range(d):
        structure[0, i + 1, i + 1] = 1.0
        structure[i + 1, 0, i + 1] = 1.0
    structure[1:, 1:, 1:] = algebra.structure
    unit = np.zeros(dim, dtype=complex)
    unit[0] = 1.0
    labels = ["1#"] + list(algebra.labels)
    out = Algebra(
        structure,
        unit,
        "unitization-composite",
        None,
        labels,
        kind={"name": "unitization"},
        base=algebra,
    )
    return out


def opposite(algebra: Algebra) -> Algebra:
    """Same space and norm, product reversed (structure transposed in the
    first two indices; realizing matrices transposed)."""
    structure = np.swapaxes(algebra.structure, 0, 1)
    realization = None
    if algebra.realization is not None:
        realization = np.swapaxes(algebra.realization, 1, 2)
    base = None if algebra.base is None else opposite(algebra.base)
    kind = {"name": algebra.kind.get("name", ""), "opposite_of": algebra}
    if algebra.kind.get("name") == "matrix":
        kind["k"] = algebra.kind["k"]
    if algebra.kind.get("name") == "commutative":
        kind["k"] = algebra.kind["k"]
    out = Algebra(
        structure,
        None if algebra.unit_coords is None else algebra.unit_coords.copy(),
        algebra.norm_mode,
        realization,
        algebra.labels,
        kind=kind,
        base=base,
    )
    if algebra.kind.get("name") == "direct_sum":
        a1, a2 = algebra.kind["summands"]
        out.kind["summands"] = (opposite(a1), opposite(a2))
        out.kind["dims"] = algebra.kind["dims"]
    return out
