"""Pure numpy/scipy Lindblad right-hand side on block-packed density matrices.

Same contract as the compiled ``_rhs_cy`` module:

* ``prepare(layout, h_data, h_indices, h_indptr, jump_src, jump_w, coeffs)``
  builds a plan. ``h_*`` is the CSR form of ``Heff = H - i sum_k r_k A_k^dag A_k``
  in the charge-sorted basis; it must not couple different blocks. Jump ``k``
  is monomial: row ``i`` holds ``jump_w[k, i]`` at column ``jump_src[k, i]``
  (-1 for an empty row), again in the sorted basis. ``coeffs[k] = 2 r_k``.
* ``lindblad_rhs(plan, rho, out, hermitian)`` writes
  ``-i(Heff rho - rho Heff^dag) + sum_k coeffs[k] A_k rho A_k^dag`` into ``out``.
  With ``hermitian`` the caller promises ``rho`` is Hermitian.
"""
import numpy as np
import scipy.sparse as sp


class Plan:
    def __init__(self, layout, h_data, h_indices, h_indptr, jump_src, jump_w, coeffs):
        self.layout = layout
        d = layout.dim
        heff = sp.csr_matrix((h_data, h_indices, h_indptr), shape=(d, d))
        self.h_blocks = []
        for b in range(layout.n_blocks):
            s, m = layout.starts[b], layout.sizes[b]
            hb = heff[s:s + m, s:s + m]
            self.h_blocks.append((hb.tocsr(), hb.conj().T.tocsr()))
        self.gathers = []
        for k in range(jump_src.shape[0]):
            src = jump_src[k]
            for b in range(layout.n_blocks):
                s, m = layout.starts[b], layout.sizes[b]
                rows = np.flatnonzero(src[s:s + m] >= 0)
                if rows.size == 0:
                    continue
                sources = src[s + rows]
                sb = layout.block_of[sources]
                if np.any(sb != sb[0]):
                    raise ValueError("jump operator does not shift the charge uniformly")
                w = jump_w[k, s + rows]
                weight = coeffs[k] * np.outer(w, w.conj())
                self.gathers.append((b, int(sb[0]), np.ix_(rows, rows),
                                     np.ix_(layout.local[sources], layout.local[sources]), weight))


def prepare(layout, h_data, h_indices, h_indptr, jump_src, jump_w, coeffs):
    return Plan(layout, h_data, h_indices, h_indptr, jump_src, jump_w, coeffs)


def lindblad_rhs(plan, rho, out, hermitian):
    layout = plan.layout
    for b, (h, hd) in enumerate(plan.h_blocks):
        r = layout.block(rho, b)
        o = layout.block(out, b)
        y = h @ r
        if hermitian:
            np.multiply(y, -1j, out=o)
            o += o.conj().T
        else:
            z = (hd.T @ r.T).T  # r @ Heff^dag
            np.subtract(z, y, out=o)
            o *= 1j
    for b, sb, dst, src, weight in plan.gathers:
        layout.block(out, b)[dst] += weight * layout.block(rho, sb)[src]


def hermitize(plan, rho):
    layout = plan.layout
    for b in range(layout.n_blocks):
        r = layout.block(rho, b)
        r += r.conj().T.copy()
        r *= 0.5


def axpy(x, alpha, y, out):
    """``out <- x + alpha * y`` (``alpha`` real, 1-D arrays)."""
    np.multiply(y, alpha, out=out)
    out += x
