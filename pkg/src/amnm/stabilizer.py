"""The improving operator and the stabilization iteration.

``improve`` sends a unit-preserving map phi to phi + split(phi, defect
cochain of phi); one application shrinks the left-restricted defect
quadratically while preserving unit values and exact right-modularity.

``stabilize`` iterates until the left-restricted defect's certified lower
bound passes the tolerance, switches to the opposite algebras, applies one
further improvement there to kill the right-restricted defect, and records
per-step certificate comparisons:

    step n:     ||F^n - F^{n-1}||_lower  vs  K L delta0 2^{-(n-1)}
    defect n:   defDA(F^n)_lower        vs  3 delta0 2^{-2n-1}
    norms:      ||F^n||_lower           vs  5L/4
    total:      ||final - input||_lower vs  12 K^2 L^3 delta0

with delta0 the max of the two one-sided defect upper estimates at the
input.  All comparisons are no-falsification: certified lower of the left
side against the stated bound built from certified uppers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .algebra import Algebra, Embedding, opposite, unitize
from .diagonal import DiagonalCert, split, verify_diagonal
from .errors import DomainError, FalsificationError, PreconditionError
from .multilinear import DefectEstimate, LinearMap, defect, defect_cochain, linear_map_norm

UNIT_PRESERVE_TOL = 1e-9
STRUCTURAL_ZERO_TOL = 1e-10
SELF_MODULAR_TOL = 1e-8
IDEAL_TOL = 1e-9


@dataclass
class StabilizeConfig:
    """Knobs for the stabilization iteration.

    ``L`` is the declared norm bound of the input map, ``tol`` the target for
    the left-restricted defect's lower estimate, ``check_claim_bounds``
    switches the certificate comparisons (and their preconditions) on.
    """

    tol: float = 1e-10
    max_iter: int = 50
    L: float = 1.0
    seed: int = 0
    check_claim_bounds: bool = True
    restarts: int = 32
    sweeps: int = 200

    def __post_init__(self):
        if self.tol <= 0:
            raise DomainError("tol must be positive")
        if self.max_iter < 1:
            raise DomainError("max_iter must be at least 1")
        if self.L < 1:
            raise DomainError("declared norm bound must be at least 1")


@dataclass
class IterateRecord:
    step: int
    step_norm: DefectEstimate
    def_da: DefectEstimate
    def_dd: DefectEstimate
    norm_phi: DefectEstimate
    claim_step_bound: float
    claim_defect_bound: float
    step_ok: bool
    defect_ok: bool
    norm_ok: bool

    def to_json_dict(self) -> dict:
        return {
            "step": self.step,
            "step_norm": {"lower": self.step_norm.lower, "upper": self.step_norm.upper},
            "def_da": {"lower": self.def_da.lower, "upper": self.def_da.upper},
            "def_dd": {"lower": self.def_dd.lower, "upper": self.def_dd.upper},
            "norm_phi": {"lower": self.norm_phi.lower, "upper": self.norm_phi.upper},
            "claim_step_bound": self.claim_step_bound,
            "claim_defect_bound": self.claim_defect_bound,
            "satisfied": {"step": self.step_ok, "defect": self.defect_ok, "norm": self.norm_ok},
        }


@dataclass
class StabilizeReport:
    iterates: list[IterateRecord]
    final_map: LinearMap
    total_distance: DefectEstimate
    theorem_bound: float
    delta0: float
    K: float
    L: float
    converged: bool
    switch_applied: bool
    distance_ok: bool
    self_modular_residual: float
    notes: list[str] = field(default_factory=list)

    @property
    def all_claims_ok(self) -> bool:
        return all(r.step_ok and r.defect_ok and r.norm_ok for r in self.iterates) and self.distance_ok

    def to_json_dict(self) -> dict:
        return {
            "iterates": [r.to_json_dict() for r in self.iterates],
            "final_distance": {"lower": self.total_distance.lower, "upper": self.total_distance.upper},
            "theorem_bound": self.theorem_bound,
            "delta0": self.delta0,
            "K": self.K,
            "L": self.L,
            "converged": self.converged,
            "switch_applied": self.switch_applied,
            "claims_satisfied": self.all_claims_ok,
            "self_modular_residual": self.self_modular_residual,
            "notes": list(self.notes),
        }

    def csv_rows(self) -> list[dict]:
        return [
            {
                "iter": r.step,
                "step_norm_lo": r.step_norm.lower,
                "step_norm_hi": r.step_norm.upper,
                "def_da_lo": r.def_da.lower,
                "def_da_hi": r.def_da.upper,
                "claim_step": r.claim_step_bound,
                "claim_defect": r.claim_defect_bound,
            }
            for r in self.iterates
        ]


def _require_unit_preserving(phi: LinearMap, emb: Embedding) -> None:
    if not phi.preserves_unit(emb, UNIT_PRESERVE_TOL):
        raise PreconditionError("map does not send the subalgebra unit to the target unit")


def improve(phi: LinearMap, emb: Embedding, cert: DiagonalCert) -> LinearMap:
    """One application of the improving operator: phi + split of its defect."""
    _require_unit_preserving(phi, emb)
    correction = split(phi, emb, cert, defect_cochain(phi))
    return LinearMap(phi.source, phi.target, phi.matrix + correction.tensor)


def right_modular_residual(phi: LinearMap, emb: Embedding) -> float:
    """Max basis-pair residual of phi(a x) = phi(a) phi(x) for x in D."""
    chain = defect_cochain(phi)
    restricted = np.tensordot(chain.tensor, emb.matrix, axes=(2, 0))
    return float(np.abs(restricted).max())


def left_modular_residual(phi: LinearMap, emb: Embedding) -> float:
    chain = defect_cochain(phi)
    restricted = np.tensordot(chain.tensor, emb.matrix, axes=(1, 0))
    return float(np.abs(restricted).max())


@dataclass
class ImproveReport:
    unit_preserved: bool
    step_bound_ok: bool
    defect_bound_ok: bool
    right_modularity_input: float
    right_modularity_output: float
    right_modularity_preserved: bool
    step_norm: DefectEstimate
    def_da_in: DefectEstimate
    def_da_out: DefectEstimate
    def_dd_in: DefectEstimate
    norm_phi: DefectEstimate


def improve_report(
    phi: LinearMap,
    emb: Embedding,
    cert: DiagonalCert,
    seed: int = 0,
    restarts: int = 32,
    sweeps: int = 200,
) -> tuple[LinearMap, ImproveReport]:
    """Apply the improving operator and check its four contract properties.

    (i) unit preservation is exact; (ii) the step is bounded by
    K ||phi|| defDA(phi); (iii) the new left defect is bounded by
    3 K^2 ||phi||^2 defDD(phi) defDA(phi); (iv) exact right-modularity is
    preserved.  (ii) and (iii) are tested in no-falsification form.
    """
    k_const = cert.K
    improved = improve(phi, emb, cert)
    scale = max(1.0, float(np.abs(phi.matrix).max()) ** 2)

    unit_resid = np.abs(improved.apply(emb.unit_in_parent()) - phi.target.unit_coords).max()
    unit_ok = bool(unit_resid <= STRUCTURAL_ZERO_TOL * scale)

    step = linear_map_norm(improved - phi, restarts, sweeps, seed=seed)
    norm_phi = linear_map_norm(phi, restarts, sweeps, seed=seed + 1)
    dda_in = defect(phi, left=emb, restarts=restarts, sweeps=sweeps, seed=seed + 2)
    ddd_in = defect(phi, left=emb, right=emb, restarts=restarts, sweeps=sweeps, seed=seed + 3)
    dda_out = defect(improved, left=emb, restarts=restarts, sweeps=sweeps, seed=seed + 4)

    step_ok = step.lower <= k_const * norm_phi.upper * dda_in.upper * (1 + 1e-9) + 1e-12
    defect_ok = (
        dda_out.lower
        <= 3.0 * k_const**2 * norm_phi.upper**2 * ddd_in.upper * dda_in.upper * (1 + 1e-9) + 1e-12
    )

    rm_in = right_modular_residual(phi, emb)
    rm_out = right_modular_residual(improved, emb)
    rm_preserved = True
    if rm_in <= STRUCTURAL_ZERO_TOL * scale:
        rm_preserved = bool(rm_out <= STRUCTURAL_ZERO_TOL * scale)

    report = ImproveReport(
        unit_ok, bool(step_ok), bool(defect_ok), rm_in, rm_out, rm_preserved,
        step, dda_in, dda_out, ddd_in, norm_phi,
    )
    return improved, report


def opposite_switch(phi: LinearMap, source_op: Algebra | None = None, target_op: Algebra | None = None) -> LinearMap:
    """Identical matrix, re-parented to the opposite algebras."""
    source_op = source_op if source_op is not None else opposite(phi.source)
    target_op = target_op if target_op is not None else opposite(phi.target)
    return LinearMap(source_op, target_op, phi.matrix.copy())


def opposite_embedding(emb: Embedding, parent_op: Algebra, sub_op: Algebra) -> Embedding:
    return Embedding(sub_op, parent_op, emb.matrix.copy())


def stabilize(
    phi: LinearMap, emb: Embedding, cert: DiagonalCert, config: StabilizeConfig
) -> StabilizeReport:
    """Iterate the improving operator, then switch sides and improve once.

    Stops when the left-restricted defect's lower estimate passes
    ``config.tol`` (or at ``max_iter``, flagged non-converged).  With
    ``check_claim_bounds`` the combined-constant precondition
    K^2 L^2 delta0 <= 1/8 is enforced up front and every recorded
    certificate comparison is required.
    """
    _require_unit_preserving(phi, emb)
    if not cert.valid:
        raise PreconditionError("diagonal certificate is not valid")
    k_const = cert.K
    L = config.L
    seed = config.seed
    counter = _SeedCounter(seed)
    notes = [
        "amenability constant uses the representation bound; theorem_bound is an upper envelope",
    ]

    dda0 = defect(phi, left=emb, restarts=config.restarts, sweeps=config.sweeps, seed=counter.next())
    dad0 = defect(phi, right=emb, restarts=config.restarts, sweeps=config.sweeps, seed=counter.next())
    delta0 = max(dda0.upper, dad0.upper)
    norm0 = linear_map_norm(phi, config.restarts, config.sweeps, seed=counter.next())

    frobenius_mode = phi.source.norm_mode == "frobenius" or phi.target.norm_mode == "frobenius"
    if frobenius_mode:
        notes.append("norm_ge_one_may_fail: frobenius-mode run; bounds relying on ||phi|| >= 1 are reported, not asserted")

    if config.check_claim_bounds:
        if norm0.lower > L * (1 + 1e-9):
            raise PreconditionError(
                f"precondition violated: certified ||phi|| lower {norm0.lower} exceeds declared L={L}"
            )
        if k_const**2 * L**2 * delta0 > 0.125 * (1 + 1e-12):
            raise PreconditionError(
                f"precondition violated: K^2 L^2 delta0 = {k_const**2 * L**2 * delta0} > 1/8"
            )

    iterates: list[IterateRecord] = []
    current = phi
    dda = dda0
    converged = dda.lower <= config.tol
    n = 0
    while not converged and n < config.max_iter:
        n += 1
        improved = improve(current, emb, cert)
        step = linear_map_norm(improved - current, config.restarts, config.sweeps, seed=counter.next())
        dda = defect(improved, left=emb, restarts=config.restarts, sweeps=config.sweeps, seed=counter.next())
        ddd = defect(improved, left=emb, right=emb, restarts=config.restarts, sweeps=config.sweeps, seed=counter.next())
        norm_n = linear_map_norm(improved, config.restarts, config.sweeps, seed=counter.next())
        claim_step = k_const * L * delta0 * 2.0 ** (-(n - 1))
        claim_defect = 3.0 * delta0 * 2.0 ** (-2 * n - 1)
        rec = IterateRecord(
            n,
            step,
            dda,
            ddd,
            norm_n,
            claim_step,
            claim_defect,
            step_ok=bool(step.lower <= claim_step * (1 + 1e-9) + 1e-15),
            defect_ok=bool(dda.lower <= claim_defect * (1 + 1e-9) + 1e-15),
            norm_ok=bool(norm_n.lower <= 1.25 * L * (1 + 1e-9)),
        )
        iterates.append(rec)
        current = improved
        converged = dda.lower <= config.tol

    switch_applied = False
    if converged:
        # opposite-side pass: one improvement on the opposite algebras kills
        # the right-restricted defect because the both-restricted defect is
        # already below tolerance
        a_op = opposite(phi.source)
        b_op = opposite(phi.target)
        d_op = opposite(emb.sub)
        emb_op = opposite_embedding(emb, a_op, d_op)
        rep_op = cert.rep.flip(d_op)
        cert_op = verify_diagonal(d_op, rep_op)
        if not cert_op.valid:
            raise PreconditionError("flipped diagonal failed verification on the opposite algebra")
        phi_op = opposite_switch(current, a_op, b_op)
        improved_op = improve(phi_op, emb_op, cert_op)
        current = LinearMap(phi.source, phi.target, improved_op.matrix)
        switch_applied = True

    total = linear_map_norm(current - phi, config.restarts, config.sweeps, seed=counter.next())
    theorem_bound = 12.0 * k_const**2 * L**3 * delta0
    distance_ok = bool(total.lower <= theorem_bound * (1 + 1e-9) + 1e-15)
    if config.check_claim_bounds and converged and not frobenius_mode:
        if not distance_ok:
            raise FalsificationError(
                f"total distance lower {total.lower} exceeds 12 K^2 L^3 delta0 = {theorem_bound}"
            )

    self_mod = max(
        left_modular_residual(current, emb),
        right_modular_residual(current, emb),
    )
    return StabilizeReport(
        iterates,
        current,
        total,
        theorem_bound,
        delta0,
        k_const,
        L,
        converged,
        switch_applied,
        distance_ok,
        self_mod,
        notes,
    )


class _SeedCounter:
    def __init__(self, seed: int):
        self.seed = seed
        self._n = 0

    def next(self) -> int:
        self._n += 1
        return (self.seed << 8) + self._n


def unitize_map(psi: LinearMap, unitized_source: Algebra | None = None) -> LinearMap:
    """Extend psi: A -> B to the unitization, (lambda, a) -> lambda 1_B + psi(a)."""
    if not psi.target.is_unital:
        raise DomainError("target must be unital to extend over the adjoined unit")
    source_u = unitized_source if unitized_source is not None else unitize(psi.source)
    matrix = np.zeros((psi.target.dim, source_u.dim), dtype=complex)
    matrix[:, 0] = psi.target.unit_coords
    matrix[:, 1:] = psi.matrix
    return LinearMap(source_u, psi.target, matrix)


def unitized_embedding(emb: Embedding, parent_u: Algebra, sub_u: Algebra) -> Embedding:
    """Embedding of the unitized subalgebra into the unitized parent."""
    matrix = np.zeros((parent_u.dim, sub_u.dim), dtype=complex)
    matrix[0, 0] = 1.0
    matrix[1:, 1:] = emb.matrix
    return Embedding(sub_u, parent_u, matrix)


def stabilize_via_unitization(
    psi: LinearMap, emb0: Embedding, config: StabilizeConfig
) -> tuple[StabilizeReport, LinearMap]:
    """Route a map with no unit constraint through the forced unitization.

    The source and the subalgebra both get a unit adjoined, the library
    diagonal is extended by the direct-sum-with-scalars construction and
    re-verified, and the ordinary iteration runs on the extension.  Returns
    the report together with the restriction of the final map to the
    original source, which is self-modular over the original subalgebra.
    """
    from .diagonal import library_diagonal

    a_u = unitize(psi.source)
    d_u = unitize(emb0.sub)
    emb_u = unitized_embedding(emb0, a_u, d_u)
    psi_u = unitize_map(psi, a_u)
    cert_u = library_diagonal(d_u)
    report = stabilize(psi_u, emb_u, cert_u, config)
    restricted = LinearMap(psi.source, psi.target, report.final_map.matrix[:, 1:])
    return report, restricted


@dataclass
class IdealData:
    """A two-sided ideal with its local identity.

    ``emb`` embeds the ideal J into the ambient algebra; ``e_coords`` (in
    ambient coordinates) acts as a two-sided identity on J, the
    finite-dimensional stand-in for a bounded approximate identity, with
    bound M = ||e||.
    """

    emb: Embedding
    e_coords: np.ndarray

    def __post_init__(self):
        self.e_coords = np.asarray(self.e_coords, dtype=complex)
        parent, q = self.emb.parent, self.emb.matrix
        proj = q @ q.conj().T
        for i in range(parent.dim):
            basis = np.zeros(parent.dim)
            basis[i] = 1.0
            for j in range(q.shape[1]):
                x = q[:, j]
                for prod in (parent.multiply_coords(basis, x), parent.multiply_coords(x, basis)):
                    resid = np.linalg.norm(prod - proj @ prod)
                    if resid > IDEAL_TOL * max(1.0, np.linalg.norm(prod)):
                        raise PreconditionError("subalgebra is not a two-sided ideal")
        for j in range(q.shape[1]):
            x = q[:, j]
            if (
                np.abs(parent.multiply_coords(self.e_coords, x) - x).max() > IDEAL_TOL
                or np.abs(parent.multiply_coords(x, self.e_coords) - x).max() > IDEAL_TOL
            ):
                raise PreconditionError("e is not a two-sided identity on the ideal")

    @property
    def bound(self) -> float:
        return self.emb.parent.element_norm(self.e_coords)


@dataclass
class DecomposeCert:
    multiplicative_residual: float
    vanishes_on_ideal: float
    defect_tensor_residual: float
    ok: bool


def decompose_over_ideal(theta: LinearMap, ideal: IdealData) -> tuple[LinearMap, LinearMap, DecomposeCert]:
    """Split a J-self-modular map as (homomorphism) + (part vanishing on J).

    With p = theta(e), the pieces are phi(a) = p theta(a) and
    theta_s = theta - phi.  The certificate checks that phi is multiplicative
    on all basis pairs, theta_s vanishes on J, and the defect cochains of
    theta_s and theta agree as tensors.
    """
    parent = theta.source
    if ideal.emb.parent is not parent:
        raise DomainError("ideal does not live in the map's source")
    q = ideal.emb.matrix
    scale = max(1.0, float(np.abs(theta.matrix).max()) ** 2)

    def _maxabs(arr):
        return float(np.abs(arr).max()) if arr.size else 0.0

    # self-modularity over J on basis pairs
    chain = defect_cochain(theta)
    right_resid = _maxabs(np.tensordot(chain.tensor, q, axes=(2, 0)))
    left_resid = _maxabs(np.tensordot(chain.tensor, q, axes=(1, 0)))
    if max(right_resid, left_resid) > IDEAL_TOL * scale:
        worst = np.unravel_index(
            np.abs(chain.tensor).argmax(), chain.tensor.shape
        )
        raise PreconditionError(
            f"map is not self-modular over the ideal; worst basis pair {worst[1:]} "
            f"residual {max(right_resid, left_resid):.3e}"
        )
    b = theta.target
    p = theta.apply(ideal.e_coords)
    left_p = b.left_mult_matrix(p)
    phi = LinearMap(parent, b, left_p @ theta.matrix)
    theta_s = theta - phi

    phi_chain = defect_cochain(phi)
    mult_resid = _maxabs(phi_chain.tensor)
    vanish = _maxabs(theta_s.matrix @ q)
    tensor_resid = _maxabs(defect_cochain(theta_s).tensor - chain.tensor)
    ok = (
        mult_resid <= IDEAL_TOL * scale
        and vanish <= IDEAL_TOL * scale
        and tensor_resid <= IDEAL_TOL * scale
    )
    return phi, theta_s, DecomposeCert(mult_resid, vanish, tensor_resid, bool(ok))
