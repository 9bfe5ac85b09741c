"""Quadratures, EPR variance, entanglement witness, fidelity and populations."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fockspace import (
    BOSONIC,
    QUBIT,
    CompositeSpace,
    DensityMatrix,
    Ket,
    Operator,
    SpaceMismatchError,
    annihilation,
    embed,
    expectation,
    identity,
    number,
    variance,
)

COLUMNS = ("V", "fidelity", "n1", "n2", "pg1", "pg2", "trace_err")


def _factor_of(space: CompositeSpace, kind: str, which: int) -> int:
    idx = [k for k, f in enumerate(space.factors) if f.kind == kind]
    if not 1 <= which <= len(idx):
        raise IndexError(f"{kind} factor {which} out of range (space has {len(idx)})")
    return idx[which - 1]


def quadratures(space: CompositeSpace, mode: int) -> tuple[Operator, Operator]:
    """``X = (a + a^dag)/sqrt(2)`` and ``P = -i(a - a^dag)/sqrt(2)`` for mode 1 or 2."""
    k = _factor_of(space, BOSONIC, mode)
    a = embed(annihilation(space.factors[k].cutoff), k, space)
    ad = a.dag()
    return (a + ad) / np.sqrt(2), (-1j / np.sqrt(2)) * (a - ad)


def epr_operators(space: CompositeSpace) -> tuple[Operator, Operator]:
    x1, p1 = quadratures(space, 1)
    x2, p2 = quadratures(space, 2)
    return x1 + x2, p1 - p2


def epr_variance(state: Ket | DensityMatrix) -> float:
    """Total variance ``Var(X1 + X2) + Var(P1 - P2)``."""
    u, v = epr_operators(state.space)
    return variance(u, state) + variance(v, state)


def ideal_variance(zeta: float) -> float:
    """``2 exp(-2 zeta)`` for the ideal two-mode squeezed vacuum."""
    if zeta < 0:
        raise ValueError("zeta must be non-negative")
    return 2.0 * np.exp(-2.0 * zeta)


def ideal_variance_from_ratio(ratio: float) -> float:
    """Same quantity written with ``ratio = tanh(zeta)``: ``2 (1 - r) / (1 + r)``."""
    return 2.0 * (1.0 - ratio) / (1.0 + ratio)


def entanglement_witness(V: float) -> bool:
    """True when ``V < 2`` (sufficient for entanglement; necessary only for Gaussian states)."""
    if V < 0:
        raise ValueError("a total variance cannot be negative")
    return V < 2.0


def fidelity(rho: DensityMatrix, target: Ket, clamp_tol: float = 1e-9) -> float:
    if rho.space != target.space:
        raise SpaceMismatchError("state and target live on different spaces")
    f = float(np.vdot(target.vector, rho.matrix @ target.vector).real)
    if -clamp_tol <= f < 0:
        return 0.0
    if 1 < f <= 1 + clamp_tol:
        return 1.0
    return f


def _qubit_ground_projector(space: CompositeSpace, which: int) -> Operator:
    k = _factor_of(space, QUBIT, which)
    return embed(Operator(CompositeSpace.single(space.factors[k]), np.diag([1.0, 0.0])), k, space)


def populations(state: Ket | DensityMatrix) -> dict[str, float]:
    """Mean photon numbers and qubit ground/excited populations."""
    space = state.space
    out = {}
    for m in (1, 2):
        k = _factor_of(space, BOSONIC, m)
        out[f"n{m}"] = expectation(embed(number(space.factors[k].cutoff), k, space), state).real
    pg = [_qubit_ground_projector(space, q) for q in (1, 2)]
    for q in (1, 2):
        out[f"pg{q}"] = expectation(pg[q - 1], state).real
    eye = identity(space)
    out["p_ee"] = expectation((eye - pg[0]) @ (eye - pg[1]), state).real
    return out


def _trace_product(coo, rho: np.ndarray) -> complex:
    """``Tr(A rho)`` for ``A`` in COO form."""
    return complex(np.dot(coo.data, rho[coo.col, coo.row]))


@dataclass
class ObservableSet:
    """Precomputed operators for recording the fixed observable columns along a trajectory."""

    space: CompositeSpace
    target: Ket | None = None

    def __post_init__(self):
        u, v = epr_operators(self.space)
        ops = {"u": u, "u2": u @ u, "v": v, "v2": v @ v}
        for m in (1, 2):
            k = _factor_of(self.space, BOSONIC, m)
            ops[f"n{m}"] = embed(number(self.space.factors[k].cutoff), k, self.space)
        for q in (1, 2):
            ops[f"pg{q}"] = _qubit_ground_projector(self.space, q)
        self._ops = {name: op.data.tocoo() for name, op in ops.items()}
        if self.target is not None and self.target.space != self.space:
            raise SpaceMismatchError("target lives on a different space")

    def __call__(self, rho: np.ndarray) -> dict[str, float]:
        """Record from a dense density matrix."""
        ev = {name: _trace_product(op, rho).real for name, op in self._ops.items()}
        fid = np.nan
        if self.target is not None:
            psi = self.target.vector
            fid = float(np.vdot(psi, rho @ psi).real)
        return self._assemble(ev, fid, np.trace(rho).real)

    def bind(self, layout):
        """Recorder over block-packed states of ``layout``.

        Entries of an observable that connect different blocks meet zeros of
        the packed state and are dropped.
        """
        gathers = {}
        for name, op in self._ops.items():
            idx = layout.packed_index(op.col, op.row)
            keep = idx >= 0
            gathers[name] = (idx[keep], op.data[keep])
        fid_gather = None
        if self.target is not None:
            psi = self.target.vector
            sup = np.flatnonzero(psi)
            rows, cols = np.meshgrid(sup, sup, indexing="ij")
            idx = layout.packed_index(rows.ravel(), cols.ravel())
            w = (psi[sup].conj()[:, None] * psi[sup][None, :]).ravel()
            keep = idx >= 0
            fid_gather = (idx[keep], w[keep])

        def record(vec: np.ndarray) -> dict[str, float]:
            ev = {name: float(np.dot(w, vec[i]).real) for name, (i, w) in gathers.items()}
            fid = float(np.dot(fid_gather[1], vec[fid_gather[0]]).real) if fid_gather else np.nan
            return self._assemble(ev, fid, layout.trace(vec).real)

        return record

    @staticmethod
    def _assemble(ev: dict[str, float], fid: float, tr: float) -> dict[str, float]:
        V = ev["u2"] - ev["u"] ** 2 + ev["v2"] - ev["v"] ** 2
        return {
            "V": V,
            "fidelity": fid,
            "n1": ev["n1"],
            "n2": ev["n2"],
            "pg1": ev["pg1"],
            "pg2": ev["pg2"],
            "trace_err": abs(tr - 1.0),
        }
