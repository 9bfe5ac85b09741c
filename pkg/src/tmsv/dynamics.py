"""Lindblad master-equation dynamics.

Dissipators follow the factor-2 convention

    D[A] rho = 2 A rho A^dag - A^dag A rho - rho A^dag A,

so a jump listed with rate ``r`` depletes populations at ``2 r``. In the more
common ``(1/2)``-convention the same physics has rate ``2 r``.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from . import _core
from .fockspace import CompositeSpace, DensityMatrix, Operator, SpaceMismatchError, is_monomial
from .model import EffectiveParams, build_effective_H, build_transformed_H, canonical_ops, excitation_number

log = logging.getLogger(__name__)

DIRECT_MAX_DIM = 64


class IntegrationDivergedError(RuntimeError):
    def __init__(self, t: float, drift: float):
        super().__init__(f"trace drift {drift:.3e} at t={t:.6g} us")
        self.t = t
        self.drift = drift


class NotConvergedError(RuntimeError):
    pass


class DimensionTooLargeError(ValueError):
    pass


class NonUniqueSteadyStateWarning(RuntimeWarning):
    def __init__(self, dimension: int):
        super().__init__(f"steady-state null space has dimension {dimension}")
        self.dimension = dimension


@dataclass(frozen=True, eq=False)
class LindbladModel:
    """Hamiltonian (static ``Operator`` or callable ``t -> Operator``) plus ``(rate, jump)`` pairs.

    A time-dependent Hamiltonian must declare ``max_frequency``, the largest
    angular frequency it contains; it bounds the integrator step.

    ``charge`` optionally names an integer per basis state that the Hamiltonian
    conserves and that every jump shifts by a fixed amount; the integrator then
    stores only the charge-diagonal blocks of the state.
    """

    space: CompositeSpace
    hamiltonian: Operator | Callable[[float], Operator]
    jumps: tuple[tuple[float, Operator], ...] = ()
    max_frequency: float | None = None
    charge: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "jumps", tuple((float(r), A) for r, A in self.jumps))
        if self.charge is not None:
            q = np.asarray(self.charge)
            if q.shape != (self.space.dim,):
                raise ValueError("charge must give one integer per basis state")
            object.__setattr__(self, "charge", q)
        for rate, A in self.jumps:
            if rate < 0:
                raise ValueError(f"negative rate {rate}")
            if A.space != self.space:
                raise SpaceMismatchError("jump operator lives on a different space")
        if isinstance(self.hamiltonian, Operator):
            if self.hamiltonian.space != self.space:
                raise SpaceMismatchError("Hamiltonian lives on a different space")
            if not self.hamiltonian.is_hermitian(1e-12):
                raise ValueError(f"Hamiltonian is not Hermitian "
                                 f"(deviation {self.hamiltonian.hermiticity_error():.2e})")
        elif callable(self.hamiltonian):
            if self.max_frequency is None or not self.max_frequency > 0:
                raise ValueError("time-dependent Hamiltonians must declare a positive max_frequency")
        else:
            raise TypeError("hamiltonian must be an Operator or a callable")

    @property
    def is_static(self) -> bool:
        return isinstance(self.hamiltonian, Operator)

    def H(self, t: float) -> Operator:
        return self.hamiltonian if self.is_static else self.hamiltonian(t)

    def frequency_scale(self) -> float:
        """Largest frequency scale used for the default step.

        For a static model: largest absolute diagonal entry of H plus its
        largest absolute row sum, plus twice the total dissipation rate scale.
        """
        if self.max_frequency is not None:
            base = float(self.max_frequency)
        else:
            h = self.hamiltonian.data
            diag = np.abs(h.diagonal()).max(initial=0.0)
            rows = np.asarray(abs(h).sum(axis=1)).ravel().max(initial=0.0)
            base = float(diag + rows)
        damp = sum(2 * r * (A.dag() @ A).max_abs() for r, A in self.jumps)
        return max(base + damp, 1e-300)


def default_dt(model: LindbladModel) -> float:
    return 0.02 / model.frequency_scale()


def _as_matrix(rho) -> np.ndarray:
    if isinstance(rho, DensityMatrix):
        return rho.matrix
    return np.asarray(rho, dtype=complex)


def dissipator(A: Operator, rho: DensityMatrix | np.ndarray) -> np.ndarray:
    """``2 A rho A^dag - A^dag A rho - rho A^dag A``."""
    if isinstance(rho, DensityMatrix) and rho.space != A.space:
        raise SpaceMismatchError("operator and state live on different spaces")
    m = _as_matrix(rho)
    if m.shape != (A.dim, A.dim):
        raise SpaceMismatchError("operator and matrix dimensions differ")
    a = A.data
    ad = a.conj().T
    ada = ad @ a
    return 2 * np.asarray((a @ m) @ ad) - np.asarray(ada @ m) - np.asarray(m @ ada)


class Generator:
    """A model prepared for repeated right-hand-side evaluation by the numerical core.

    States are handled as block-packed vectors (see :class:`tmsv._core.BlockLayout`).
    If the model declares a conserved ``charge`` and ``use_charge`` is set,
    only charge-diagonal blocks are stored; otherwise a single dense block is used.
    """

    def __init__(self, model: LindbladModel, backend: str | None = None, use_charge: bool = True):
        self.model = model
        self.backend = _core.get_backend(backend)
        d = self.dim = model.space.dim
        active = [(r, A) for r, A in model.jumps if r != 0]
        charge = model.charge if use_charge else None
        if charge is not None and not all(is_monomial(A) for _, A in active):
            log.info("non-monomial jump operator: using dense storage")
            charge = None
        self.layout = _core.BlockLayout(charge, dim=d)
        inv = self.layout.inv
        damping = sp.csr_matrix((d, d), dtype=complex)
        src_rows, w_rows, coeffs, general = [], [], [], []
        for rate, A in active:
            damping = damping + rate * (A.data.conj().T @ A.data)
            if is_monomial(A):
                coo = A.data.tocoo()
                src = np.full(d, -1, dtype=np.int64)
                w = np.zeros(d, dtype=complex)
                src[inv[coo.row]] = inv[coo.col]
                w[inv[coo.row]] = coo.data
                if not self.layout.trivial:
                    self._check_shift(coo)
                src_rows.append(src)
                w_rows.append(w)
                coeffs.append(2 * rate)
            else:
                general.append((2 * rate, A.data.tocsr(), A.data.conj().T.tocsr()))
        self._damping = sp.csr_matrix(damping)
        self.jump_src = np.array(src_rows, dtype=np.int64).reshape(-1, d)
        self.jump_w = np.array(w_rows, dtype=complex).reshape(-1, d)
        self.coeffs = np.array(coeffs, dtype=float)
        self.general = general
        self._plan = self._prepare(model.hamiltonian) if model.is_static else None

    def _check_shift(self, coo):
        q = self.layout.charge
        shifts = np.unique(q[coo.row] - q[coo.col])
        if shifts.size > 1:
            raise ValueError("jump operator does not shift the declared charge uniformly")

    def _prepare(self, H: Operator):
        lay = self.layout
        heff = (H.data - 1j * self._damping).tocoo()
        rows, cols = lay.inv[heff.row], lay.inv[heff.col]
        if not lay.trivial and np.any(lay.block_of[rows] != lay.block_of[cols]):
            raise ValueError("Hamiltonian does not conserve the declared charge")
        m = sp.csr_matrix((heff.data, (rows, cols)), shape=heff.shape)
        m.sum_duplicates()
        m.sort_indices()
        return self.backend.prepare(lay, m.data.astype(complex), m.indices.astype(np.int32),
                                    m.indptr.astype(np.int32), self.jump_src, self.jump_w, self.coeffs)

    def pack(self, rho) -> np.ndarray:
        return self.layout.pack(_as_matrix(rho))

    def unpack(self, vec: np.ndarray) -> np.ndarray:
        return self.layout.unpack(vec)

    def __call__(self, vec: np.ndarray, t: float = 0.0, out: np.ndarray | None = None,
                 hermitian: bool = False) -> np.ndarray:
        if out is None:
            out = np.empty(self.layout.size, dtype=complex)
        plan = self._plan if self._plan is not None else self._prepare(self.model.H(t))
        self.backend.lindblad_rhs(plan, vec, out, hermitian)
        if self.general:
            d = self.dim
            r, o = vec.reshape(d, d), out.reshape(d, d)
            for c, a, ad in self.general:
                o += c * np.asarray((a @ r) @ ad)
        return out

    def hermitize(self, vec: np.ndarray):
        plan = self._plan if self._plan is not None else self._prepare(self.model.H(0.0))
        self.backend.hermitize(plan, vec)


def _generator_for(model: LindbladModel, rho0: DensityMatrix) -> Generator:
    """Block storage unless ``rho0`` holds coherences between charge sectors."""
    gen = Generator(model)
    if not gen.layout.trivial and gen.layout.off_block_norm(rho0.matrix) > 1e-12:
        log.info("initial state couples charge sectors: using dense storage")
        gen = Generator(model, use_charge=False)
    return gen


def _diagonal_charge(op: Operator) -> np.ndarray:
    return np.real(op.data.diagonal())


def effective_model(effective: EffectiveParams, space: CompositeSpace, gamma_r: float,
                    gamma_phi: float = 0.0, kappa=(0.0, 0.0), g_xi=None) -> LindbladModel:
    """Sideband Hamiltonian with qubit relaxation and dephasing and photon loss.

    Jumps in order: relaxation ``sigma_-`` of each qubit, dephasing ``sigma_z``
    of each qubit, loss ``a`` of each mode. The state is stored in blocks of
    ``e1 - e2 + n1 - n2``.
    """
    o = canonical_ops(space)
    k1, k2 = np.broadcast_to(np.asarray(kappa, dtype=float), (2,))
    jumps = [(gamma_r, o.sm[0]), (gamma_r, o.sm[1]),
             (gamma_phi, o.sz[0]), (gamma_phi, o.sz[1]),
             (k1, o.a[0]), (k2, o.a[1])]
    return LindbladModel(space, build_effective_H(effective, space, g_xi), tuple(jumps),
                         charge=_diagonal_charge(excitation_number(space)))


def transformed_model(effective: EffectiveParams, space: CompositeSpace, gamma_r: float,
                      gamma_phi: float = 0.0) -> LindbladModel:
    """Squeezed-frame model: two independent Jaynes-Cummings pairs with qubit decay (no photon loss).

    Uses the same block charge as :func:`effective_model`, which the squeeze
    transformation leaves unchanged.
    """
    o = canonical_ops(space)
    jumps = [(gamma_r, o.sm[0]), (gamma_r, o.sm[1]), (gamma_phi, o.sz[0]), (gamma_phi, o.sz[1])]
    return LindbladModel(space, build_transformed_H(effective, space), tuple(jumps),
                         charge=_diagonal_charge(excitation_number(space)))


def rhs(model: LindbladModel, rho: DensityMatrix | np.ndarray, t: float = 0.0) -> np.ndarray:
    """``-i[H(t), rho] + sum_j rate_j D[A_j] rho`` for arbitrary (not necessarily Hermitian) ``rho``."""
    if isinstance(rho, DensityMatrix) and rho.space != model.space:
        raise SpaceMismatchError("state and model live on different spaces")
    gen = Generator(model, use_charge=False)
    return gen.unpack(gen(gen.pack(rho), t))


@dataclass(frozen=True)
class EvolveOptions:
    t_final: float
    dt: float | None = None
    sample_stride: int = 1
    trace_tolerance: float = 1e-8
    convergence_tolerance: float | None = None
    store_states: bool = False

    def __post_init__(self):
        if self.t_final < 0:
            raise ValueError("t_final must be non-negative")
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be positive")
        if int(self.sample_stride) != self.sample_stride or self.sample_stride < 1:
            raise ValueError("sample_stride must be an integer >= 1")


@dataclass
class Trajectory:
    times: np.ndarray
    records: dict[str, np.ndarray]
    states: list[np.ndarray] | None = None
    dt: float = 0.0
    trace_drift: float = 0.0
    final_state: DensityMatrix | None = field(default=None, repr=False)

    def __len__(self):
        return len(self.times)

    def final(self, name: str) -> float:
        return float(self.records[name][-1])

    def rows(self, columns: Sequence[str]):
        for k, t in enumerate(self.times):
            yield [t] + [self.records[c][k] for c in columns]


Recorder = Callable[[np.ndarray], dict[str, float]]


class _RK4:
    """Classic fourth-order Runge-Kutta on packed states, with preallocated stages."""

    def __init__(self, gen: Generator):
        self.gen = gen
        self.k1, self.k2, self.k3, self.k4, self.tmp, self.spare = (
            np.empty(gen.layout.size, dtype=complex) for _ in range(6))

    def step(self, rho: np.ndarray, t: float, dt: float) -> np.ndarray:
        """Advance ``rho`` by ``dt``; returns the new state (``rho`` becomes scratch)."""
        gen, core = self.gen, self.gen.backend
        k1, k2, k3, k4, tmp = self.k1, self.k2, self.k3, self.k4, self.tmp
        gen(rho, t, out=k1, hermitian=True)
        core.axpy(rho, 0.5 * dt, k1, tmp)
        gen(tmp, t + 0.5 * dt, out=k2, hermitian=True)
        core.axpy(rho, 0.5 * dt, k2, tmp)
        gen(tmp, t + 0.5 * dt, out=k3, hermitian=True)
        core.axpy(rho, dt, k3, tmp)
        gen(tmp, t + dt, out=k4, hermitian=True)
        # rho + dt/6 (k1 + 2 k2 + 2 k3 + k4)
        core.axpy(k1, 1.0, k4, tmp)
        core.axpy(tmp, 2.0, k2, k1)
        core.axpy(k1, 2.0, k3, tmp)
        new = self.spare
        core.axpy(rho, dt / 6.0, tmp, new)
        gen.hermitize(new)
        self.spare = rho
        return new


def _bind_recorder(recorder, layout):
    if recorder is None:
        return lambda vec: {"trace_err": abs(layout.trace(vec) - 1)}
    if hasattr(recorder, "bind"):
        return recorder.bind(layout)
    return lambda vec: recorder(layout.unpack(vec))


def evolve(model: LindbladModel, rho0: DensityMatrix, options: EvolveOptions,
           recorder=None, generator: Generator | None = None,
           on_sample: Callable[[float, dict], None] | None = None) -> Trajectory:
    """Fixed-step classic RK4 integration, hermitizing after every step.

    ``recorder`` maps a density matrix to a dict of named real values (or is
    an object with a ``bind(layout)`` method returning such a map over packed
    states). It is called at ``t = 0``, every ``sample_stride`` steps and at
    the final time. ``on_sample(t, record)`` is invoked as each sample is
    taken, so partial output survives a diverging run.
    """
    if rho0.space != model.space:
        raise SpaceMismatchError("initial state and model live on different spaces")
    dt = options.dt if options.dt is not None else default_dt(model)
    if not model.is_static and dt > 0.05 / model.max_frequency * (1 + 1e-12):
        raise ValueError(f"dt={dt} too large for a time-dependent model with max frequency "
                         f"{model.max_frequency}; need dt <= 0.05/max_frequency")
    n_steps = int(np.ceil(options.t_final / dt - 1e-9)) if options.t_final > 0 else 0
    if n_steps:
        dt = options.t_final / n_steps
    gen = generator or _generator_for(model, rho0)
    lay, core = gen.layout, gen.backend
    record = _bind_recorder(recorder, lay)
    rho = gen.pack(rho0.matrix)
    stepper = _RK4(gen)

    times, rows, states = [], [], []

    def sample(t):
        times.append(t)
        rows.append(record(rho))
        if on_sample is not None:
            on_sample(t, rows[-1])
        if options.store_states:
            states.append(lay.unpack(rho))

    sample(0.0)
    log.debug("evolve: %d steps of dt=%.3e us, %d blocks, packed size %d",
              n_steps, dt, lay.n_blocks, lay.size)
    for step in range(1, n_steps + 1):
        t = step * dt
        rho = stepper.step(rho, (step - 1) * dt, dt)
        drift = abs(lay.trace(rho) - 1)
        if not np.isfinite(drift) or drift >= options.trace_tolerance:
            raise IntegrationDivergedError(t, drift)
        if step % options.sample_stride == 0 or step == n_steps:
            sample(t)

    keys = rows[0].keys()
    records = {k: np.array([r[k] for r in rows]) for k in keys}
    return Trajectory(
        times=np.array(times),
        records=records,
        states=states if options.store_states else None,
        dt=dt,
        trace_drift=abs(lay.trace(rho) - 1),
        final_state=DensityMatrix(model.space, lay.unpack(rho)),
    )


def liouvillian(model: LindbladModel, t: float = 0.0) -> sp.csr_matrix:
    """Sparse ``d^2 x d^2`` generator acting on row-major ``rho.reshape(-1)``.

    Uses ``vec(A rho B) = (A kron B^T) vec(rho)``; built independently of the
    numerical core so the two can be checked against each other.
    """
    d = model.space.dim
    eye = sp.identity(d, dtype=complex, format="csr")
    H = model.H(t).data
    L = -1j * (sp.kron(H, eye) - sp.kron(eye, H.T))
    for rate, A in model.jumps:
        if rate == 0:
            continue
        a = A.data
        ada = a.conj().T @ a
        L = L + rate * (2 * sp.kron(a, a.conj()) - sp.kron(ada, eye) - sp.kron(eye, ada.T))
    return sp.csr_matrix(L)


@dataclass(frozen=True)
class SteadyState:
    state: DensityMatrix
    method: str
    residual: float
    smallest_singular_value: float | None = None
    second_singular_value: float | None = None
    nullity: int = 1
    time: float | None = None


def steady_state(model: LindbladModel, method: str = "direct", options: EvolveOptions | None = None,
                 rho0: DensityMatrix | None = None, null_tol: float = 1e-9) -> SteadyState:
    """Stationary state of a static model.

    ``direct``: singular-value decomposition of the vectorized generator. The
    generator is first split into the connected components of its sparsity
    graph (independent blocks), each of which is decomposed densely.
    ``evolve``: RK4 integration from ``rho0`` (default: the first basis state)
    until ``max|rhs| < options.convergence_tolerance``.
    """
    if not model.is_static:
        raise ValueError("steady states need a static Hamiltonian")
    if method == "direct":
        return _steady_direct(model, null_tol)
    if method == "evolve":
        if options is None or options.convergence_tolerance is None:
            raise ValueError("the evolve method needs options with a convergence_tolerance")
        return _steady_evolve(model, options, rho0)
    raise ValueError(f"unknown steady-state method {method!r}")


def _steady_direct(model: LindbladModel, null_tol: float) -> SteadyState:
    d = model.space.dim
    if d > DIRECT_MAX_DIM:
        raise DimensionTooLargeError(f"direct steady state needs dimension <= {DIRECT_MAX_DIM}, got {d}")
    L = liouvillian(model)
    pattern = (abs(L) + abs(L).T).tocsr()
    n_comp, labels = connected_components(pattern, directed=False)
    scale = max(abs(L).max(), 1.0)
    diag_idx = np.arange(d) * (d + 1)
    null_vectors, singular = [], []
    for c in range(n_comp):
        idx = np.flatnonzero(labels == c)
        block = L[idx][:, idx].toarray()
        _, s, vh = la.svd(block, lapack_driver="gesdd")
        singular.extend(s.tolist())
        for k in np.flatnonzero(s < null_tol * scale):
            v = np.zeros(d * d, dtype=complex)
            v[idx] = vh[k].conj()
            null_vectors.append(v)
    singular = np.sort(np.array(singular))
    nullity = len(null_vectors)
    if nullity == 0:
        raise NotConvergedError(f"no null vector below tolerance; smallest singular value {singular[0]:.3e}")
    if nullity != 1:
        warnings.warn(NonUniqueSteadyStateWarning(nullity), stacklevel=3)
    traced = [v for v in null_vectors if abs(v[diag_idx].sum()) > 1e-8]
    if not traced:
        raise NotConvergedError("null space contains no trace-carrying element")
    v = traced[0]
    rho = v.reshape(d, d) / v[diag_idx].sum()
    rho = 0.5 * (rho + rho.conj().T)
    residual = float(np.abs(rhs(model, rho)).max())
    return SteadyState(DensityMatrix(model.space, rho), "direct", residual,
                       float(singular[0]), float(singular[1]) if singular.size > 1 else None, nullity)


def _steady_evolve(model, options, rho0) -> SteadyState:
    space = model.space
    if rho0 is None:
        m = np.zeros((space.dim, space.dim), dtype=complex)
        m[0, 0] = 1
        rho0 = DensityMatrix(space, m)
    gen = _generator_for(model, rho0)
    lay = gen.layout
    dt = options.dt if options.dt is not None else default_dt(model)
    tol = options.convergence_tolerance
    check_every = 50 * options.sample_stride
    stepper = _RK4(gen)
    rho = gen.pack(rho0.matrix)
    buf = np.empty_like(rho)
    step, t = 0, 0.0
    while True:
        if step % check_every == 0 or t >= options.t_final:
            res = float(np.abs(gen(rho, t, out=buf, hermitian=True)).max())
            if res < tol:
                return SteadyState(DensityMatrix(space, lay.unpack(rho)), "evolve", res, time=t)
            if t >= options.t_final:
                raise NotConvergedError(f"residual {res:.3e} above {tol:.1e} at t_final={options.t_final}")
        rho = stepper.step(rho, t, dt)
        step += 1
        t = step * dt
        drift = abs(lay.trace(rho) - 1)
        if not np.isfinite(drift) or drift >= options.trace_tolerance:
            raise IntegrationDivergedError(t, drift)


def trace_distance(rho: DensityMatrix | np.ndarray, sigma: DensityMatrix | np.ndarray,
                   charge: np.ndarray | None = None) -> float:
    """``(1/2) || rho - sigma ||_1``.

    With ``charge`` both states are taken to be block-diagonal in it (entries
    across blocks are ignored) and the eigenvalues are computed per block.
    """
    diff = _as_matrix(rho) - _as_matrix(sigma)
    diff = 0.5 * (diff + diff.conj().T)
    if charge is None:
        return 0.5 * float(np.abs(np.linalg.eigvalsh(diff)).sum())
    lay = _core.BlockLayout(charge)
    packed = lay.pack(diff, tol=np.inf)
    return 0.5 * float(sum(np.abs(np.linalg.eigvalsh(lay.block(packed, b))).sum()
                           for b in range(lay.n_blocks)))
