"""Joint Stinespring dilation of a compatible (cp family, module tuple) pair.

The construction is the finite-dimensional GNS-style quotient:

1.  The raw space is the n-fold direct sum of ``A (x) H1`` with basis
    indexed by (slot i, algebra unit alpha, H1 basis beta), flattened
    lexicographically with the slot slowest.  The sesquilinear form
    ``<(a_i (x) xi_i), (b_j (x) eta_j)> = sum_ij <xi_i, phi_ij(a_i* b_j) eta_j>``
    becomes an explicit Gram matrix on that basis.
2.  Complete n-positivity makes the Gram PSD; its numerical null space
    is the quotient kernel.  Eigenvalue truncation at a relative cutoff
    yields the factor ``F`` with ``F* F = G``, whose rows are canonical
    coordinates on the quotient space K1 (dimension r1).
3.  Left multiplication by algebra units preserves the kernel, so
    ``pi(e) = F L_e F^+`` is the induced unital *-representation on K1;
    the slot isometries S_i are the F-columns over the unit element.
4.  K2 is the span inside H2 of all Phi_i applied to module units;
    ``Psi`` is solved by least squares from its defining relation on the
    raw spanning family, and the W_i are coisometries onto the per-slot
    ranges.  Large solve residuals mean the input was not a valid
    instance, and are reported as well-definedness failures.

Everything is verified basis-by-basis: all asserted identities are
sesquilinear or multiplicative in their arguments, so checking canonical
basis (pairs) is equivalent to checking all elements.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cpmaps import CPBlockMap, Instance, ModuleCPTuple
from .errors import ShapeMismatchError, WellDefinednessError
from .linalg import (
    DEFAULT_CUTOFF,
    DEFAULT_TOL,
    frob,
    hermitian_eig,
    matrix_norms,
    numerical_rank,
    rank_truncate,
    rel_residual,
    svd_orthobasis,
)

__all__ = [
    "GramFactorization",
    "DilationData",
    "VerificationReport",
    "build_gram",
    "build_pi",
    "build_S",
    "build_psi",
    "build_W",
    "dilate",
    "verify_dilation",
]


@dataclass(eq=False)
class GramFactorization:
    """Gram matrix of the raw-space form and its rank-revealing factor.

    ``factor`` has shape (r1, raw_dim) and satisfies ``F* F = gram`` up
    to cutoff accuracy; applying it to raw coordinates is the quotient
    map onto K1.
    """

    raw_dim: int
    gram: np.ndarray = field(repr=False)
    r1: int
    factor: np.ndarray = field(repr=False)
    kept_eigenvalues: np.ndarray = field(repr=False)
    kept_eigenvectors: np.ndarray = field(repr=False)

    @property
    def factor_pinv(self) -> np.ndarray:
        """Pseudo-inverse of the factor, from the kept eigenpairs."""
        if self.r1 == 0:
            return np.zeros((self.raw_dim, 0), dtype=complex)
        return self.kept_eigenvectors / np.sqrt(self.kept_eigenvalues)


@dataclass(eq=False)
class DilationData:
    """Minimal joint Stinespring data for one instance.

    ``pi_action[alpha]`` is the representation on K1 evaluated at the
    algebra unit alpha, ``s_ops[i]`` maps H1 into K1, ``psi_action[gamma]``
    maps K1 into K2 coordinates, ``k2_embed`` isometrically embeds K2
    into H2, and ``w_ops[i]`` holds an orthonormal row basis of the
    per-slot range inside H2 (a coisometry from H2).
    """

    r1: int
    r2: int
    pi_action: np.ndarray = field(repr=False)   # (dim_A, r1, r1)
    s_ops: np.ndarray = field(repr=False)       # (n, r1, h1)
    psi_action: np.ndarray = field(repr=False)  # (dim_V, r2, r1)
    k2_embed: np.ndarray = field(repr=False)    # (h2, r2)
    w_ops: tuple[np.ndarray, ...] = field(repr=False)  # each (k2i, h2)
    k2i_dims: tuple[int, ...]
    pi_welldef: float = 0.0
    psi_welldef: float = 0.0


_RESIDUAL_NAMES = (
    "phi_reconstruction",
    "Phi_reconstruction",
    "pi_multiplicativity",
    "pi_star",
    "pi_unital",
    "psi_representation",
    "psi_module_action",
    "w_coisometry",
    "w_reading_agreement",
)


@dataclass(eq=False)
class VerificationReport:
    """Named residuals of every identity the dilation must satisfy."""

    phi_reconstruction: float
    Phi_reconstruction: float
    pi_multiplicativity: float
    pi_star: float
    pi_unital: float
    psi_representation: float
    psi_module_action: float
    s_isometry_defect: tuple[float, ...]
    w_coisometry: float
    w_reading_agreement: float
    minimality_k1_defect: float
    minimality_k2_defect: float
    diag_unital_defects: tuple[float, ...]
    s_isometry_in_pass: bool
    tolerance: float
    passed: bool

    def residual_items(self) -> list[tuple[str, float]]:
        items = [(name, getattr(self, name)) for name in _RESIDUAL_NAMES]
        items += [(f"s_isometry_defect[{i}]", v) for i, v in enumerate(self.s_isometry_defect)]
        items += [
            ("minimality_k1_defect", self.minimality_k1_defect),
            ("minimality_k2_defect", self.minimality_k2_defect),
        ]
        return items

    def to_dict(self) -> dict:
        return {
            **{name: getattr(self, name) for name in _RESIDUAL_NAMES},
            "s_isometry_defect": list(self.s_isometry_defect),
            "minimality_k1_defect": self.minimality_k1_defect,
            "minimality_k2_defect": self.minimality_k2_defect,
            "diag_unital_defects": list(self.diag_unital_defects),
            "s_isometry_in_pass": self.s_isometry_in_pass,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def _max_rel(actual: np.ndarray, expected: np.ndarray) -> float:
    """Max over leading axes of the per-matrix relative residual."""
    if expected.size == 0:
        return 0.0
    denom = np.maximum(matrix_norms(expected), 1.0)
    return float((matrix_norms(actual - expected) / denom).max())


def build_gram(cp: CPBlockMap, rel_cutoff: float = DEFAULT_CUTOFF) -> GramFactorization:
    """Assemble and factor the Gram matrix of the raw-space form.

    Entry [(i, alpha, beta), (j, alpha', beta')] is
    ``phi_ij(e_alpha* e_alpha')[beta, beta']``; matrix-unit relations
    make most products vanish.  Raises NotPSDError when the form has a
    kept-scale negative direction, which is exactly failure of complete
    n-positivity.
    """
    n, dim_a, h1 = cp.n, cp.algebra.dim, cp.h1
    raw_dim = n * dim_a * h1
    prod = cp.algebra.product_table
    adj = cp.algebra.adjoint_table

    g6 = np.zeros((n, dim_a, h1, n, dim_a, h1), dtype=complex)
    for alpha in range(dim_a):
        row = prod[adj[alpha]]
        for alpha2 in range(dim_a):
            t = row[alpha2]
            if t >= 0:
                g6[:, alpha, :, :, alpha2, :] = cp.action[:, :, t].transpose(0, 2, 1, 3)
    gram = g6.reshape(raw_dim, raw_dim)

    eig = hermitian_eig(gram, tol_herm=1e-10)
    r1, factor = rank_truncate(eig, rel_cutoff)
    return GramFactorization(
        raw_dim=raw_dim,
        gram=gram,
        r1=r1,
        factor=factor,
        kept_eigenvalues=eig.eigenvalues[:r1],
        kept_eigenvectors=eig.eigenvectors[:, :r1],
    )


def build_pi(g: GramFactorization, cp: CPBlockMap) -> tuple[np.ndarray, float]:
    """Representation of the algebra on K1 induced by left multiplication.

    For each algebra unit, raw-space left multiplication permutes basis
    columns, so ``F L`` is a gather of factor columns and
    ``pi(e) = (F L) F^+`` is its least-squares realization on the
    quotient.  The returned residual is the worst relative defect of
    ``pi(e) F = F L``; theory makes it vanish for valid inputs.
    """
    n, dim_a, h1 = cp.n, cp.algebra.dim, cp.h1
    f6 = g.factor.reshape(g.r1, n, dim_a, h1)
    fp = g.factor_pinv
    prod = cp.algebra.product_table

    pi_action = np.zeros((dim_a, g.r1, g.r1), dtype=complex)
    worst = 0.0
    for gamma in range(dim_a):
        fl6 = np.zeros_like(f6)
        row = prod[gamma]
        mask = row >= 0
        fl6[:, :, mask, :] = f6[:, :, row[mask], :]
        fl = fl6.reshape(g.r1, g.raw_dim)
        pi_action[gamma] = fl @ fp
        worst = max(worst, frob(pi_action[gamma] @ g.factor - fl) / max(frob(fl), 1.0))
    return pi_action, worst


def build_S(g: GramFactorization, cp: CPBlockMap) -> np.ndarray:
    """Slot maps S_i : H1 -> K1, the factor columns over the unit element."""
    n, dim_a, h1 = cp.n, cp.algebra.dim, cp.h1
    f6 = g.factor.reshape(g.r1, n, dim_a, h1)
    s = f6[:, :, cp.algebra.identity_indices, :].sum(axis=2)
    return s.transpose(1, 0, 2)  # (n, r1, h1)


def build_psi(
    g: GramFactorization,
    cp: CPBlockMap,
    tup: ModuleCPTuple,
    rel_cutoff: float = DEFAULT_CUTOFF,
) -> tuple[np.ndarray, np.ndarray, int, float]:
    """Module representation on the quotient plus the K2 embedding.

    K2 is the column span inside H2 of all Phi_i on module units (each
    raw spanning vector of K1 is sent by Psi(x) to such a column).  For
    each module unit f, the defining relation prescribes Psi(f) on every
    factor column, so Psi(f) is the least-squares solution of
    ``Psi(f) F = R_f`` where R_f gathers the prescribed images in K2
    coordinates.  Returns (psi_action, k2_embed, r2, worst residual).
    """
    n, dim_a, h1 = cp.n, cp.algebra.dim, cp.h1
    dim_v, h2 = tup.module.dim, tup.h2

    cols = tup.action.transpose(2, 0, 1, 3).reshape(h2, n * dim_v * h1)
    k2_embed = svd_orthobasis(cols, rel_cutoff)
    r2 = k2_embed.shape[1]

    proj = np.einsum("ry,igyh->igrh", k2_embed.conj().T, tup.action)  # (n, dim_V, r2, h1)
    fp = g.factor_pinv
    act_table = tup.module.action_table

    psi_action = np.zeros((dim_v, r2, g.r1), dtype=complex)
    worst = 0.0
    for gamma in range(dim_v):
        r6 = np.zeros((r2, n, dim_a, h1), dtype=complex)
        row = act_table[gamma]
        mask = row >= 0
        r6[:, :, mask, :] = proj[:, row[mask]].transpose(2, 0, 1, 3)
        rmat = r6.reshape(r2, g.raw_dim)
        psi_action[gamma] = rmat @ fp
        worst = max(worst, frob(psi_action[gamma] @ g.factor - rmat) / max(frob(rmat), 1.0))
    return psi_action, k2_embed, r2, worst


def build_W(tup: ModuleCPTuple, rel_cutoff: float = DEFAULT_CUTOFF) -> tuple[tuple[np.ndarray, ...], tuple[int, ...]]:
    """Per-slot coisometries onto the ranges [Phi_i(V) H1] inside H2.

    Row i holds an orthonormal basis of the span of all Phi_i(f) columns;
    a zero map yields a zero-row coisometry.
    """
    h2 = tup.h2
    ws, dims = [], []
    for i in range(tup.n):
        cols = tup.action[i].transpose(1, 0, 2).reshape(h2, -1)
        w = svd_orthobasis(cols, rel_cutoff).conj().T
        ws.append(w)
        dims.append(w.shape[0])
    return tuple(ws), tuple(dims)


def dilate(
    inst: Instance,
    cutoff: float = DEFAULT_CUTOFF,
    welldef_tol: float = DEFAULT_TOL,
) -> DilationData:
    """Run the full construction on a valid instance.

    The output is minimal by construction: K1 is spanned by the images
    ``pi(e) S_i H1`` (they are exactly the factor columns) and K2 by
    ``Psi(f) S_i H1``.  Raises NotPSDError for inputs that are not
    completely n-positive and WellDefinednessError when a quotient map
    fails to close at ``welldef_tol``.
    """
    g = build_gram(inst.cp, cutoff)
    pi_action, pi_res = build_pi(g, inst.cp)
    if pi_res > welldef_tol:
        raise WellDefinednessError(
            f"left multiplication does not descend to the quotient "
            f"(residual {pi_res:.3e} > {welldef_tol:.1e})"
        )
    s_ops = build_S(g, inst.cp)
    psi_action, k2_embed, r2, psi_res = build_psi(g, inst.cp, inst.tup, cutoff)
    if psi_res > welldef_tol:
        raise WellDefinednessError(
            f"module map is inconsistent on the spanning family "
            f"(residual {psi_res:.3e} > {welldef_tol:.1e})"
        )
    w_ops, k2i_dims = build_W(inst.tup, cutoff)
    return DilationData(
        r1=g.r1,
        r2=r2,
        pi_action=pi_action,
        s_ops=s_ops,
        psi_action=psi_action,
        k2_embed=k2_embed,
        w_ops=w_ops,
        k2i_dims=k2i_dims,
        pi_welldef=pi_res,
        psi_welldef=psi_res,
    )


def check_shapes(inst: Instance, data: DilationData) -> None:
    """Raise ShapeMismatchError unless data is shaped for the instance."""
    dim_a, dim_v = inst.algebra.dim, inst.module.dim
    n, h1, h2 = inst.n, inst.h1, inst.h2
    if data.pi_action.shape != (dim_a, data.r1, data.r1):
        raise ShapeMismatchError("pi action shape does not match instance")
    if data.s_ops.shape != (n, data.r1, h1):
        raise ShapeMismatchError("slot map shape does not match instance")
    if data.psi_action.shape != (dim_v, data.r2, data.r1):
        raise ShapeMismatchError("psi action shape does not match instance")
    if data.k2_embed.shape != (h2, data.r2):
        raise ShapeMismatchError("K2 embedding shape does not match instance")
    if len(data.w_ops) != n or any(w.shape != (k, h2) for w, k in zip(data.w_ops, data.k2i_dims)):
        raise ShapeMismatchError("coisometry shapes do not match instance")


def verify_dilation(
    inst: Instance,
    data: DilationData,
    tol: float = DEFAULT_TOL,
    rank_cutoff: float = DEFAULT_CUTOFF,
) -> VerificationReport:
    """Check every asserted identity of the dilation on canonical bases.

    All quantities are relative residuals with denominator
    ``max(|expected|_F, 1)``.  The slot-isometry defect
    ``|S_i* S_i - 1|`` equals the unitality defect of phi_ii exactly, so
    it only participates in the pass verdict when every phi_ii is unital
    at the tolerance; it is always reported.
    """
    check_shapes(inst, data)
    cp, tup = inst.cp, inst.tup
    alg, mod = inst.algebra, inst.module
    dim_a, dim_v = alg.dim, mod.dim
    n, h1 = inst.n, inst.h1
    pi, s, psi = data.pi_action, data.s_ops, data.psi_action

    # phi_ij(e) = S_i* pi(e) S_j
    recon = np.einsum("ixh,axy,jyk->ijahk", s.conj(), pi, s)
    phi_rec = _max_rel(recon, cp.action)

    # pi is a unital *-homomorphism
    prod, adj = alg.product_table, alg.adjoint_table
    pi_mult = 0.0
    for alpha in range(dim_a):
        expected = np.zeros_like(pi)
        row = prod[alpha]
        mask = row >= 0
        expected[mask] = pi[row[mask]]
        pi_mult = max(pi_mult, _max_rel(np.matmul(pi[alpha], pi), expected))
    pi_star = _max_rel(pi.conj().transpose(0, 2, 1), pi[adj])
    pi_one = pi[alg.identity_indices].sum(axis=0)
    pi_unital = rel_residual(pi_one, np.eye(data.r1, dtype=complex))

    # Psi(f)* Psi(g) = pi(<f, g>)
    lhs = np.einsum("gxr,dxs->gdrs", psi.conj(), psi)
    expected = np.zeros((dim_v, dim_v, data.r1, data.r1), dtype=complex)
    mask = mod.inner_table >= 0
    expected[mask] = pi[mod.inner_table[mask]]
    psi_rep = _max_rel(lhs, expected)

    # Psi(f . e) = Psi(f) pi(e)
    psi_mod = 0.0
    for alpha in range(dim_a):
        row = mod.action_table[:, alpha]
        expected = np.zeros_like(psi)
        mask = row >= 0
        expected[mask] = psi[row[mask]]
        psi_mod = max(psi_mod, _max_rel(np.matmul(psi, pi[alpha]), expected))

    # Phi_i(f) = W_i* Psi(f) S_i, read both directly through the K2
    # embedding and through the range projector; the two must agree.
    emb = np.einsum("yr,grx,ixh->igyh", data.k2_embed, psi, s)  # (n, dim_V, h2, h1)
    direct = _max_rel(emb, tup.action)
    projected = 0.0
    agreement = 0.0
    for i in range(n):
        p_i = data.w_ops[i].conj().T @ data.w_ops[i]
        proj_emb = np.einsum("yz,gzh->gyh", p_i, emb[i])
        projected = max(projected, _max_rel(proj_emb, tup.action[i]))
        denom = np.maximum(matrix_norms(tup.action[i]), 1.0)
        agreement = max(agreement, float((matrix_norms(emb[i] - proj_emb) / denom).max()))
    phi_tuple_rec = max(direct, projected)

    # Slot-isometry and coisometry defects
    s_defect = tuple(
        float(np.linalg.norm(s[i].conj().T @ s[i] - np.eye(h1), 2)) for i in range(n)
    )
    w_coiso = 0.0
    for w in data.w_ops:
        k = w.shape[0]
        w_coiso = max(w_coiso, rel_residual(w @ w.conj().T, np.eye(k, dtype=complex)))

    # Minimality: the span families must exhaust K1 and K2
    m1 = np.einsum("axy,iyh->xaih", pi, s).reshape(data.r1, dim_a * n * h1)
    k1_defect = float(data.r1 - numerical_rank(m1, rank_cutoff))
    m2 = np.einsum("grx,ixh->rgih", psi, s).reshape(data.r2, dim_v * n * h1)
    k2_defect = float(data.r2 - numerical_rank(m2, rank_cutoff))

    unital_defects = tuple(float(v) for v in cp.diag_unital_defects())
    s_in_pass = all(v <= tol for v in unital_defects)

    named = {
        "phi_reconstruction": phi_rec,
        "Phi_reconstruction": phi_tuple_rec,
        "pi_multiplicativity": pi_mult,
        "pi_star": pi_star,
        "pi_unital": pi_unital,
        "psi_representation": psi_rep,
        "psi_module_action": psi_mod,
        "w_coisometry": w_coiso,
        "w_reading_agreement": agreement,
    }
    passed = all(v <= tol for v in named.values())
    passed = passed and k1_defect == 0.0 and k2_defect == 0.0
    if s_in_pass:
        passed = passed and all(v <= tol for v in s_defect)

    return VerificationReport(
        **named,
        s_isometry_defect=s_defect,
        minimality_k1_defect=k1_defect,
        minimality_k2_defect=k2_defect,
        diag_unital_defects=unital_defects,
        s_isometry_in_pass=s_in_pass,
        tolerance=tol,
        passed=passed,
    )
