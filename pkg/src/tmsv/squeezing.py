"""Two-mode squeeze operator, squeezed vacuum and the steady target state.

``S(zeta) = exp(zeta (a1 a2 - a1^dag a2^dag))``; applied to the vacuum it gives
amplitudes ``(-tanh zeta)^n / cosh zeta`` on ``|n, n>``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
from scipy.special import gammaln

from .fockspace import BOSONIC, CompositeSpace, Ket, Operator, annihilation
from .model import EffectiveParams, check_canonical

MAX_RATIO = 1 - 1e-6
TAIL_TOLERANCE = 1e-4
TAIL_LIMIT = 1e-3


class CutoffInsufficientError(ValueError):
    pass


def tail_mass(ratio: float, cutoff: int) -> float:
    """Per-mode squeezed-vacuum population above ``cutoff``: ``ratio^(2(cutoff+1))``."""
    return float(ratio ** (2 * (cutoff + 1)))


def select_cutoff(ratio: float, tail: float = TAIL_TOLERANCE, minimum: int = 1) -> int:
    """Smallest cutoff N with ``ratio^(2(N+1)) <= tail``."""
    if not 0 <= ratio < 1:
        raise ValueError("ratio must lie in [0, 1)")
    if ratio == 0:
        return minimum
    n = int(np.ceil(np.log(tail) / (2 * np.log(ratio)) - 1 - 1e-12))
    while tail_mass(ratio, n) > tail:
        n += 1
    return max(n, minimum)


def _check_zeta(zeta: float):
    if not np.isfinite(zeta) or zeta < 0:
        raise ValueError("zeta must be finite and non-negative")
    if zeta >= np.arctanh(MAX_RATIO):
        raise ValueError(f"zeta={zeta} exceeds the numerical squeezing guard")


def _mode_factors(space: CompositeSpace) -> tuple[int, int]:
    idx = [k for k, f in enumerate(space.factors) if f.kind == BOSONIC]
    if len(idx) != 2:
        raise ValueError("need exactly two bosonic factors")
    return idx[0], idx[1]


def _lift(mode_matrix: np.ndarray, space: CompositeSpace, modes: tuple[int, int]) -> sp.csr_matrix:
    """Place an operator on the two (adjacent, trailing) mode factors of ``space``."""
    m1, m2 = modes
    if (m1, m2) != (len(space) - 2, len(space) - 1):
        raise ValueError("mode factors must be the last two factors")
    lead = int(np.prod(space.dims[:m1])) if m1 else 1
    return sp.kron(sp.identity(lead, format="csr"), sp.csr_matrix(mode_matrix), format="csr")


def _sector_exponential(zeta: float, d: int, cutoff1: int, cutoff2: int):
    """Chain ``|k+d, k>`` of the ``n1 - n2 = d`` sector and ``S`` restricted to it."""
    k = np.arange(max(0, -d), min(cutoff2, cutoff1 - d) + 1)
    # <k-1+d, k-1| a1 a2 |k+d, k> = sqrt((k+d) k)
    hop = np.sqrt((k[1:] + d) * k[1:])
    gen = np.zeros((k.size, k.size))
    gen[np.arange(k.size - 1), np.arange(1, k.size)] = zeta * hop
    gen -= gen.T
    return k, la.expm(gen)


def mode_squeeze_matrix(zeta: float, cutoff1: int, cutoff2: int) -> sp.csr_matrix:
    """S(zeta) on the two-mode space of dimension ``(cutoff1+1)(cutoff2+1)``.

    The generator conserves ``n1 - n2``, so the exponential is taken one
    sector at a time.
    """
    n2 = cutoff2 + 1
    rows, cols, vals = [], [], []
    for d in range(-cutoff2, cutoff1 + 1):
        k, block = _sector_exponential(zeta, d, cutoff1, cutoff2)
        idx = (k + d) * n2 + k
        r, c = np.nonzero(block)
        rows.append(idx[r])
        cols.append(idx[c])
        vals.append(block[r, c])
    dim = (cutoff1 + 1) * n2
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                         shape=(dim, dim))


def squeeze_columns(zeta: float, cutoff: int, states) -> np.ndarray:
    """Columns ``S |n1, n2>`` for the listed two-mode states, on a cutoff-``cutoff`` space."""
    n = cutoff + 1
    out = np.zeros((n * n, len(states)), dtype=float)
    sectors = {}
    for j, (n1, n2) in enumerate(states):
        d = n1 - n2
        if d not in sectors:
            sectors[d] = _sector_exponential(zeta, d, cutoff, cutoff)
        k, block = sectors[d]
        out[(k + d) * n + k, j] = block[:, n2 - k[0]]
    return out


def squeeze_operator(zeta: float, space: CompositeSpace) -> Operator:
    _check_zeta(zeta)
    modes = _mode_factors(space)
    c1, c2 = space.factors[modes[0]].cutoff, space.factors[modes[1]].cutoff
    return Operator(space, _lift(mode_squeeze_matrix(zeta, c1, c2), space, modes))


def interior_mask(cutoff: int, inner: int) -> np.ndarray:
    """Two-mode basis states of a cutoff-``cutoff`` space with ``n1, n2 <= inner``."""
    occ = np.arange(cutoff + 1)
    return ((occ[:, None] <= inner) & (occ[None, :] <= inner)).reshape(-1)


def tmsv_amplitudes(zeta: float, cutoff: int) -> np.ndarray:
    """Untruncated-series amplitudes of ``|n, n>`` for ``n = 0..cutoff``."""
    n = np.arange(cutoff + 1)
    return (-np.tanh(zeta)) ** n / np.cosh(zeta)


def tmsv_state(zeta: float, space: CompositeSpace) -> Ket:
    """Analytic truncated squeezed vacuum on a two-mode space, renormalized.

    ``space`` must consist of exactly two bosonic factors.
    """
    _check_zeta(zeta)
    if len(space) != 2 or any(f.kind != BOSONIC for f in space.factors):
        raise ValueError("tmsv_state needs a two-mode space; use target_state for the full system")
    c1, c2 = (f.cutoff for f in space.factors)
    n = min(c1, c2)
    mass = tail_mass(np.tanh(zeta), n)
    if mass > TAIL_LIMIT:
        raise CutoffInsufficientError(f"tail mass {mass:.2e} above {TAIL_LIMIT:g} at cutoff {n}")
    v = np.zeros(space.dim, dtype=complex)
    amps = tmsv_amplitudes(zeta, n)
    for k, amp in enumerate(amps):
        v[space.index((k, k))] = amp
    return Ket(space, v).normalized()


def target_state(zeta: float, space: CompositeSpace) -> Ket:
    """``|g>|g>`` on the qubits tensored with the squeezed vacuum on the modes (canonical order)."""
    check_canonical(space)
    modes = CompositeSpace(space.factors[2:])
    tm = tmsv_state(zeta, modes)
    v = np.zeros(space.dim, dtype=complex)
    v[: modes.dim] = tm.vector  # qubits in |g, g> occupy the leading block
    return Ket(space, v)


@dataclass(frozen=True)
class BogoliubovReport:
    interior_deviation_1: float
    interior_deviation_2: float
    boundary_deviation: float
    interior_cutoff: int
    working_cutoff: int

    @property
    def interior_deviation(self) -> float:
        return max(self.interior_deviation_1, self.interior_deviation_2)


def _mode_pair(cutoff: int):
    """Real sparse ``a1, a2`` on the two-mode space (mode 1 is the slow index)."""
    a = sp.diags(np.sqrt(np.arange(1, cutoff + 1)), 1, format="csr")
    eye = sp.identity(cutoff + 1, format="csr")
    return sp.kron(a, eye, format="csr"), sp.kron(eye, a, format="csr")


def _max_abs(m) -> float:
    return float(np.abs(m.data).max(initial=0.0)) if sp.issparse(m) else float(np.abs(m).max(initial=0.0))


def leak_padding(ratio: float, inner: int, tol: float = 1e-15) -> int:
    """Extra cutoff so that ``S`` applied to states with ``n <= inner`` loses less than ``tol``.

    The amplitude ``k`` steps up a sector chain is bounded by
    ``binom(inner + k, k) ratio^k``.
    """
    if ratio == 0:
        return 0
    k = np.arange(1, 100000)
    log_bound = gammaln(inner + k + 1) - gammaln(k + 1) - gammaln(inner + 1) + k * np.log(ratio)
    hit = np.flatnonzero((log_bound < np.log(tol)) & (np.diff(np.append(log_bound, -np.inf)) < 0))
    return int(k[hit[0]])


def bogoliubov_check(effective: EffectiveParams, cutoff: int, margin: int = 4,
                     padding: int | None = None) -> BogoliubovReport:
    """Compare ``S^dag (T1 a1 + T2 a2^dag) S`` with ``sqrt(T1^2 - T2^2) a1`` (and the mode-2 mirror).

    The interior deviation is measured on ``n1, n2 <= cutoff - margin``, with
    the interior columns of ``S`` evaluated on a padded working space so that
    it measures the identity and not the truncation. ``boundary_deviation``
    is the largest deviation over the whole space when ``S`` is truncated at
    ``cutoff`` itself.
    """
    inner = max(cutoff - margin, 0)
    if padding is None:
        padding = leak_padding(effective.ratio, inner)
    work = cutoff + padding
    t1, t2, ge = effective.theta1, effective.theta2, effective.g_eff
    zeta = effective.zeta

    states = [(n1, n2) for n1 in range(inner + 1) for n2 in range(inner + 1)]
    cols = squeeze_columns(zeta, work, states)
    a1, a2 = _mode_pair(work)
    a1_in, a2_in = _mode_pair(inner)
    dev1 = cols.T @ ((t1 * a1 + t2 * a2.T) @ cols) - ge * a1_in.toarray()
    dev2 = cols.T @ ((t1 * a2 + t2 * a1.T) @ cols) - ge * a2_in.toarray()

    S = mode_squeeze_matrix(zeta, cutoff, cutoff)
    b1, b2 = _mode_pair(cutoff)
    bare1 = S.T @ (t1 * b1 + t2 * b2.T) @ S - ge * b1
    bare2 = S.T @ (t1 * b2 + t2 * b1.T) @ S - ge * b2
    return BogoliubovReport(
        interior_deviation_1=float(np.abs(dev1).max()),
        interior_deviation_2=float(np.abs(dev2).max()),
        boundary_deviation=max(_max_abs(bare1), _max_abs(bare2)),
        interior_cutoff=inner,
        working_cutoff=work,
    )
