"""Block-packed storage for density matrices commuting with a conserved charge.

When the Hamiltonian conserves an integer charge ``q`` and every jump operator
shifts it by a fixed amount, a density matrix that starts block-diagonal in
``q`` stays block-diagonal. Only the diagonal blocks are stored, row-major and
concatenated, in the basis sorted (stably) by charge.
"""
from __future__ import annotations

import numpy as np


class BlockLayout:
    def __init__(self, charge: np.ndarray | None, dim: int | None = None):
        if charge is None:
            if dim is None:
                raise ValueError("need a charge array or a dimension")
            charge = np.zeros(dim, dtype=np.int64)
        charge = np.real_if_close(np.asarray(charge))
        if np.iscomplexobj(charge) or np.abs(charge - np.round(charge)).max(initial=0.0) > 1e-9:
            raise ValueError("charges must be integers")
        charge = np.round(charge).astype(np.int64)
        self.charge = charge
        self.dim = d = charge.size
        self.perm = np.argsort(charge, kind="stable")  # perm[p] = original index at sorted position p
        self.inv = np.empty(d, dtype=np.int64)
        self.inv[self.perm] = np.arange(d)
        values, sizes = np.unique(charge[self.perm], return_counts=True)
        self.values = values
        self.sizes = sizes.astype(np.int64)
        self.starts = np.concatenate([[0], np.cumsum(self.sizes)[:-1]]).astype(np.int64)
        self.offsets = np.concatenate([[0], np.cumsum(self.sizes**2)[:-1]]).astype(np.int64)
        self.size = int((self.sizes**2).sum())
        self.block_of = np.repeat(np.arange(len(self.sizes)), self.sizes).astype(np.int64)
        self.local = (np.arange(d) - self.starts[self.block_of]).astype(np.int64)
        m = self.sizes[self.block_of]
        self.diag_index = self.offsets[self.block_of] + self.local * (m + 1)

    @property
    def n_blocks(self) -> int:
        return len(self.sizes)

    @property
    def trivial(self) -> bool:
        return self.n_blocks == 1

    def block(self, vec: np.ndarray, b: int) -> np.ndarray:
        m, o = self.sizes[b], self.offsets[b]
        return vec[o:o + m * m].reshape(m, m)

    def packed_index(self, rows, cols) -> np.ndarray:
        """Packed position of original-basis entries ``(rows, cols)``; -1 across blocks."""
        pr, pc = self.inv[np.asarray(rows)], self.inv[np.asarray(cols)]
        br, bc = self.block_of[pr], self.block_of[pc]
        idx = self.offsets[br] + self.local[pr] * self.sizes[br] + self.local[pc]
        return np.where(br == bc, idx, -1)

    def off_block_norm(self, dense: np.ndarray) -> float:
        q = self.charge
        mask = q[:, None] != q[None, :]
        return float(np.abs(dense[mask]).max(initial=0.0))

    def pack(self, dense: np.ndarray, tol: float = 1e-12) -> np.ndarray:
        dense = np.asarray(dense)
        if not self.trivial and self.off_block_norm(dense) > tol:
            raise ValueError("matrix has entries coupling different charge sectors")
        p = dense[np.ix_(self.perm, self.perm)]
        out = np.empty(self.size, dtype=complex)
        for b in range(self.n_blocks):
            s, m = self.starts[b], self.sizes[b]
            self.block(out, b)[...] = p[s:s + m, s:s + m]
        return out

    def unpack(self, vec: np.ndarray) -> np.ndarray:
        p = np.zeros((self.dim, self.dim), dtype=complex)
        for b in range(self.n_blocks):
            s, m = self.starts[b], self.sizes[b]
            p[s:s + m, s:s + m] = self.block(vec, b)
        return p[np.ix_(self.inv, self.inv)]

    def trace(self, vec: np.ndarray) -> complex:
        return complex(vec[self.diag_index].sum())

    def arrays(self) -> dict[str, np.ndarray]:
        return {"block_of": self.block_of, "local": self.local, "starts": self.starts,
                "sizes": self.sizes, "offsets": self.offsets}
