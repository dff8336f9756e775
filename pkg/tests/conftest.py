"""Shared oracles for the test suite.

These are deliberately written against the element-level API (explicit
products, adjoints, basis expansion) rather than the index-table fast
paths used by the library, so they can serve as independent references.
"""

from __future__ import annotations

import numpy as np

from cpdilate.cpmaps import CPBlockMap


def brute_force_gram(cp: CPBlockMap) -> np.ndarray:
    """Double-loop Gram of the raw-space form, entry by entry.

    Row (i, alpha, beta), column (j, alpha2, beta2) gets
    ``<e_beta, phi_ij(e_alpha* e_alpha2) e_beta2>`` computed through
    actual element arithmetic and linear basis expansion.
    """
    alg = cp.algebra
    n, dim_a, h1 = cp.n, alg.dim, cp.h1
    labels = [(i, a, b) for i in range(n) for a in range(dim_a) for b in range(h1)]
    raw = len(labels)
    gram = np.zeros((raw, raw), dtype=complex)
    basis = [alg.basis_element(a) for a in range(dim_a)]
    for row, (i, alpha, beta) in enumerate(labels):
        left = basis[alpha].adjoint()
        for col, (j, alpha2, beta2) in enumerate(labels):
            prod = left * basis[alpha2]
            mat = apply_phi_oracle(cp, i, j, prod)
            gram[row, col] = mat[beta, beta2]
    return gram


def apply_phi_oracle(cp: CPBlockMap, i: int, j: int, a) -> np.ndarray:
    """phi_ij(a) by explicit per-coefficient summation."""
    acc = np.zeros((cp.h1, cp.h1), dtype=complex)
    for alpha, (b, p, q) in enumerate(cp.algebra.basis_labels):
        coeff = a.blocks[b][p, q]
        if coeff != 0.0:
            acc = acc + coeff * cp.action[i, j, alpha]
    return acc


def transpose_map(n_slots: int = 1) -> CPBlockMap:
    """phi_11 = matrix transpose on M2, all other slots zero: the
    standard non-completely-positive reference point."""
    from cpdilate.algebra import AlgebraDescriptor

    desc = AlgebraDescriptor((2,))
    action = np.zeros((n_slots, n_slots, 4, 2, 2), dtype=complex)
    for alpha, (_, p, q) in enumerate(desc.basis_labels):
        action[0, 0, alpha, q, p] = 1.0  # e_pq -> e_qp
    return CPBlockMap(desc, n_slots, 2, action)


def scalar_family(n: int, entries) -> CPBlockMap:
    """A = C, h1 = 1: phi_ij multiplies by entries[i][j]."""
    from cpdilate.algebra import AlgebraDescriptor

    desc = AlgebraDescriptor((1,))
    action = np.asarray(entries, dtype=complex).reshape(n, n, 1, 1, 1)
    return CPBlockMap(desc, n, 1, action)
