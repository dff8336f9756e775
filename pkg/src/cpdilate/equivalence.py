"""Unitary equivalence of minimal dilations of one instance.

Any two minimal joint Stinespring representations of the same instance
are related by unitaries U1 : K1 -> K1' and U2 : K2 -> K2' that
intertwine the whole diagram: U1 S_i = S_i', U1 pi(a) = pi'(a) U1,
U2 W_i = W_i', U2 Psi(x) = Psi'(x) U1.

Numerically, U1 is the least-squares solution matching the K1 spanning
family ``pi(e_alpha) S_i e_beta`` of one representation to the other's,
index by index, and U2 likewise on ``Psi(f_gamma) S_i e_beta``.  On
minimal inputs the solve is consistent (tiny residual) and the solution
unitary; a large residual certifies that the two data do not dilate the
same instance.  W-intertwining is checked in H2 coordinates through the
recorded K2 embeddings, since each W_i maps H2 onto a subspace of K2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cpmaps import Instance
from .dilation import DilationData, check_shapes
from .errors import InconsistentSpansError, NotMinimalError
from .linalg import (
    DEFAULT_CUTOFF,
    DEFAULT_TOL,
    numerical_rank,
    rel_residual,
    solve_lsq,
)

__all__ = ["EquivalenceWitness", "rotate_dilation", "build_unitaries", "verify_diagram"]

_WITNESS_RESIDUALS = (
    "u1_unitarity",
    "u2_unitarity",
    "u1_S_intertwine",
    "u1_pi_intertwine",
    "u2_W_intertwine",
    "u2_psi_intertwine",
)


@dataclass(eq=False)
class EquivalenceWitness:
    """The recovered unitaries plus the residuals of the diagram."""

    u1: np.ndarray = field(repr=False)  # (r1', r1)
    u2: np.ndarray = field(repr=False)  # (r2', r2)
    u1_unitarity: float
    u2_unitarity: float
    u1_S_intertwine: float
    u1_pi_intertwine: float
    u2_W_intertwine: float
    u2_psi_intertwine: float
    u1_solve_residual: float
    u2_solve_residual: float

    def residual_items(self) -> list[tuple[str, float]]:
        items = [(name, getattr(self, name)) for name in _WITNESS_RESIDUALS]
        items += [
            ("u1_solve_residual", self.u1_solve_residual),
            ("u2_solve_residual", self.u2_solve_residual),
        ]
        return items

    def to_dict(self) -> dict:
        return {name: float(value) for name, value in self.residual_items()}


def rotate_dilation(
    data: DilationData,
    q1: np.ndarray,
    q2: np.ndarray,
    w_rotations=None,
) -> DilationData:
    """Equivalent representation in rotated coordinates.

    q1 and q2 are unitaries on the K1 and K2 coordinate spaces; the
    optional ``w_rotations`` re-bases each coisometry's rows.  The
    result represents the same instance, so recovering (q1, q2) is the
    canonical test case for ``build_unitaries``.
    """
    q1 = np.asarray(q1, dtype=complex)
    q2 = np.asarray(q2, dtype=complex)
    if q1.shape != (data.r1, data.r1) or q2.shape != (data.r2, data.r2):
        raise ValueError("rotation shapes must match (r1, r1) and (r2, r2)")
    if w_rotations is None:
        w_ops = data.w_ops
    else:
        w_ops = tuple(r @ w for r, w in zip(w_rotations, data.w_ops))
    return DilationData(
        r1=data.r1,
        r2=data.r2,
        pi_action=np.einsum("xy,ayz,wz->axw", q1, data.pi_action, q1.conj()),
        s_ops=np.einsum("xy,iyh->ixh", q1, data.s_ops),
        psi_action=np.einsum("xy,gyz,wz->gxw", q2, data.psi_action, q1.conj()),
        k2_embed=data.k2_embed @ q2.conj().T,
        w_ops=w_ops,
        k2i_dims=data.k2i_dims,
        pi_welldef=data.pi_welldef,
        psi_welldef=data.psi_welldef,
    )


def _k1_span(data: DilationData) -> np.ndarray:
    """Columns pi(e_alpha) S_i e_beta, ordered (alpha, i, beta)."""
    cols = np.einsum("axy,iyh->xaih", data.pi_action, data.s_ops)
    return cols.reshape(data.r1, -1)


def _k2_span(data: DilationData) -> np.ndarray:
    """Columns Psi(f_gamma) S_i e_beta, ordered (gamma, i, beta)."""
    cols = np.einsum("grx,ixh->rgih", data.psi_action, data.s_ops)
    return cols.reshape(data.r2, -1)


def _diagram_residuals(
    u1: np.ndarray,
    u2: np.ndarray,
    inst: Instance,
    data_a: DilationData,
    data_b: DilationData,
) -> dict[str, float]:
    eye_a1 = np.eye(data_a.r1, dtype=complex)
    eye_b1 = np.eye(data_b.r1, dtype=complex)
    eye_a2 = np.eye(data_a.r2, dtype=complex)
    eye_b2 = np.eye(data_b.r2, dtype=complex)

    res = {
        "u1_unitarity": max(
            rel_residual(u1.conj().T @ u1, eye_a1), rel_residual(u1 @ u1.conj().T, eye_b1)
        ),
        "u2_unitarity": max(
            rel_residual(u2.conj().T @ u2, eye_a2), rel_residual(u2 @ u2.conj().T, eye_b2)
        ),
    }

    res["u1_S_intertwine"] = max(
        (
            rel_residual(u1 @ data_a.s_ops[i], data_b.s_ops[i])
            for i in range(inst.n)
        ),
        default=0.0,
    )
    res["u1_pi_intertwine"] = max(
        (
            rel_residual(u1 @ data_a.pi_action[a], data_b.pi_action[a] @ u1)
            for a in range(inst.algebra.dim)
        ),
        default=0.0,
    )
    res["u2_psi_intertwine"] = max(
        (
            rel_residual(u2 @ data_a.psi_action[g], data_b.psi_action[g] @ u1)
            for g in range(inst.module.dim)
        ),
        default=0.0,
    )

    # U2 W_i = W_i' read in H2 coordinates: conjugating the range
    # projector W_i* W_i by the embedded U2 must give W_i'* W_i'.
    u2_h2 = data_b.k2_embed @ u2 @ data_a.k2_embed.conj().T  # (h2, h2)
    res["u2_W_intertwine"] = max(
        (
            rel_residual(
                u2_h2 @ (data_a.w_ops[i].conj().T @ data_a.w_ops[i]),
                data_b.w_ops[i].conj().T @ data_b.w_ops[i],
            )
            for i in range(inst.n)
        ),
        default=0.0,
    )
    return res


def build_unitaries(
    inst: Instance,
    data_a: DilationData,
    data_b: DilationData,
    tol: float = DEFAULT_TOL,
    rank_cutoff: float = DEFAULT_CUTOFF,
) -> EquivalenceWitness:
    """Recover the unitaries relating two minimal dilations.

    Solves one least-squares system per unitary over the full matched
    spanning family and certifies consistency by the solve residual.
    Raises NotMinimalError when either input fails the span conditions
    and InconsistentSpansError when the solve residual exceeds ``tol``
    (the two data are not dilations of the same instance).
    """
    check_shapes(inst, data_a)
    check_shapes(inst, data_b)

    x_a, x_b = _k1_span(data_a), _k1_span(data_b)
    y_a, y_b = _k2_span(data_a), _k2_span(data_b)
    for label, span, r in (
        ("first", x_a, data_a.r1),
        ("second", x_b, data_b.r1),
        ("first", y_a, data_a.r2),
        ("second", y_b, data_b.r2),
    ):
        if numerical_rank(span, rank_cutoff) < r:
            raise NotMinimalError(f"{label} dilation is not minimal (span rank defect)")

    sol1, res1 = solve_lsq(x_a.T, x_b.T)
    u1 = sol1.T
    if res1 > tol:
        raise InconsistentSpansError(
            f"K1 spanning families do not match (residual {res1:.3e} > {tol:.1e}); "
            "the two data do not dilate the same instance"
        )
    sol2, res2 = solve_lsq(y_a.T, y_b.T)
    u2 = sol2.T
    if res2 > tol:
        raise InconsistentSpansError(
            f"K2 spanning families do not match (residual {res2:.3e} > {tol:.1e})"
        )

    res = _diagram_residuals(u1, u2, inst, data_a, data_b)
    return EquivalenceWitness(
        u1=u1,
        u2=u2,
        u1_solve_residual=res1,
        u2_solve_residual=res2,
        **res,
    )


def verify_diagram(
    witness: EquivalenceWitness,
    inst: Instance,
    data_a: DilationData,
    data_b: DilationData,
    tol: float = DEFAULT_TOL,
) -> bool:
    """Recompute all six diagram residuals from the witness unitaries
    and return whether every one is within ``tol``."""
    check_shapes(inst, data_a)
    check_shapes(inst, data_b)
    res = _diagram_residuals(witness.u1, witness.u2, inst, data_a, data_b)
    return all(v <= tol for v in res.values())
