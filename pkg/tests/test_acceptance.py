"""End-to-end acceptance checks; each prints one PASS/FAIL line (collected in the terminal summary)."""
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from acceptance_log import report
from tmsv.dynamics import (
    EvolveOptions,
    LindbladModel,
    dissipator,
    effective_model,
    evolve,
    rhs,
    steady_state,
)
from tmsv.fockspace import (
    CompositeSpace,
    DensityMatrix,
    Operator,
    annihilation,
    basis,
    mode,
    number,
    pauli,
    qubit,
    zero,
)
from tmsv.model import CircuitParams, EffectiveParams, circuit_to_params
from tmsv.observables import ObservableSet, epr_variance, ideal_variance, ideal_variance_from_ratio
from tmsv.squeezing import target_state
from tmsv.validation import check_bogoliubov, check_rwa, check_transformed_frame

HEADLINE = EffectiveParams.from_thetas(40.0, 30.0)
GAMMA = 20.0
CUTOFF = 16
DT = 2e-3
T_LONG = 20.0


def _run(initial, effective=HEADLINE, cutoff=CUTOFF, t_final=T_LONG, dt=DT, stride=5):
    space = CompositeSpace.canonical(cutoff)
    model = effective_model(effective, space, GAMMA, GAMMA)
    obs = ObservableSet(space, target_state(effective.zeta, space))
    t0 = time.perf_counter()
    traj = evolve(model, basis(space, initial).dm(), EvolveOptions(t_final=t_final, dt=dt, sample_stride=stride),
                  recorder=obs)
    return traj, time.perf_counter() - t0


def _min_eig(state: DensityMatrix) -> float:
    return float(np.linalg.eigvalsh(state.matrix).min())


@pytest.fixture(scope="module")
def headline():
    return _run((0, 0, 0, 0))


@pytest.fixture(scope="module")
def headline_excited_modes():
    return _run((0, 0, 1, 1))


# -- 1, 2: headline steady state ------------------------------------------------------

def test_criterion_01_headline_variance(headline):
    traj, wall = headline
    V = traj.final("V")
    ok_main = abs(V - 2 / 7) <= 0.01

    eff = EffectiveParams.from_ratio(0.5, 40.0)
    fast, fast_wall = _run((0, 0, 0, 0), effective=eff, cutoff=7, t_final=8.0)
    V_fast = fast.final("V")
    ok_fast = abs(V_fast - 2 * 0.5 / 1.5) <= 0.01 and fast_wall < 60

    ok = report(1, ok_main and ok_fast,
                f"V={V:.4f} (target 0.2857+-0.01, {traj.times[-1]:.0f} us, {wall:.0f} s); "
                f"fast r=0.5: V={V_fast:.4f} (target 0.6667+-0.01) in {fast_wall:.1f} s (< 60 s)")
    assert ok


def test_criterion_02_target_convergence(headline):
    traj, _ = headline
    fid, pg1, pg2 = traj.final("fidelity"), traj.final("pg1"), traj.final("pg2")
    ok = report(2, fid > 0.99 and pg1 > 0.99 and pg2 > 0.99,
                f"fidelity={fid:.5f}, pg1={pg1:.5f}, pg2={pg2:.5f} (each > 0.99)")
    assert ok


# -- 3: closed form ----------------------------------------------------------------

def test_criterion_03_ideal_variance_identity():
    ratios = np.linspace(0.0, 0.99, 100)
    dev = max(abs(ideal_variance(np.arctanh(r)) - ideal_variance_from_ratio(r)) for r in ratios)
    ok = report(3, dev < 1e-12, f"max |2exp(-2 zeta) - 2(1-r)/(1+r)| = {dev:.2e} over 100 ratios (< 1e-12)")
    assert ok


# -- 4: preparation time ---------------------------------------------------------

def settle_time(times: np.ndarray, V: np.ndarray, rel: float = 0.05) -> float:
    """First time after which ``V`` stays within ``rel`` of its final value."""
    outside = np.flatnonzero(np.abs(V - V[-1]) > rel * abs(V[-1]))
    if outside.size == 0:
        return float(times[0])
    k = outside[-1] + 1
    return float(times[min(k, len(times) - 1)])


def test_criterion_04_preparation_time(headline):
    traj, _ = headline
    t_s = settle_time(traj.times, traj.records["V"])
    V_half = float(np.interp(0.5, traj.times, traj.records["V"]))
    ok = report(4, 0.1 <= t_s <= 0.5,
                f"settle time (5% band) = {t_s:.3f} us (band [0.1, 0.5] us); V(0.5 us)={V_half:.4f}")
    assert ok


# -- 5: photon loss ------------------------------------------------------------------

def _steady_V(kappa: float, dt: float) -> tuple[float, float]:
    space = CompositeSpace.canonical(CUTOFF)
    model = effective_model(HEADLINE, space, GAMMA, GAMMA, kappa=kappa)
    opts = EvolveOptions(t_final=40.0, dt=dt, convergence_tolerance=1e-5)
    ss = steady_state(model, "evolve", opts, rho0=basis(space, (0, 0, 0, 0)).dm())
    return epr_variance(ss.state), ss.time


def test_criterion_05_resonator_decay():
    ideal = 2 / 7
    # dt 2e-3 leaves the RK4 stability region once kappa = 20 (largest generator eigenvalue ~2100/us)
    V_strong, t_strong = _steady_V(20.0, 1e-3)
    V_weak, t_weak = _steady_V(2.0, DT)
    ok = report(5, V_strong > ideal + 0.1 and abs(V_weak - ideal) <= 0.05,
                f"kappa=20: V={V_strong:.4f} (> {ideal + 0.1:.4f}, settled at {t_strong:.1f} us); "
                f"kappa=2: V={V_weak:.4f} (within 0.05 of {ideal:.4f}, settled at {t_weak:.1f} us)")
    assert ok


# -- 6: initial-state independence ------------------------------------------------------

def test_criterion_06_initial_state_independence(headline, headline_excited_modes):
    a, b = headline[0].final("V"), headline_excited_modes[0].final("V")
    ok = report(6, abs(a - b) < 1e-3,
                f"|V(vacuum) - V(|1,1,g,g>)| = {abs(a - b):.2e} at {T_LONG:.0f} us (< 1e-3)")
    assert ok


# -- 7, 8, 9: validation checks ------------------------------------------------------

def test_criterion_07_transformed_frame():
    res = check_transformed_frame(ratio=0.5, cutoff=3, n_times=10)
    ok = report(7, res.value < 1e-6, f"max trace distance {res.value:.2e} at 10 times, cutoff 3 (< 1e-6)")
    assert ok


def test_criterion_08_bogoliubov():
    res = check_bogoliubov(ratio=0.75, cutoff=16)
    ok = report(8, res.value < 1e-4, f"interior deviation {res.value:.2e} at r=0.75, cutoff 16 (< 1e-4)")
    assert ok


def test_criterion_09_rwa():
    res = check_rwa()
    ok = report(9, res.value < 0.02, f"overlap deficit {res.value:.4f} over one exchange period (< 0.02)")
    assert ok


# -- 10: integrator oracles ----------------------------------------------------------

def test_criterion_10_decay_oracles():
    space_q = CompositeSpace.single(qubit())
    gamma = 2.0
    model = LindbladModel(space_q, zero(space_q), [(gamma, pauli("minus"))])
    q = evolve(model, basis(space_q, (1,)).dm(), EvolveOptions(t_final=3 / gamma, dt=1e-3 / gamma, sample_stride=5),
               recorder=lambda rho: {"pe": rho[1, 1].real})
    err_q = np.abs(q.records["pe"] - np.exp(-2 * gamma * q.times)).max()

    kappa, n0 = 1.5, 3
    space_m = CompositeSpace.single(mode(6))
    nop = number(6).matrix
    model = LindbladModel(space_m, zero(space_m), [(kappa, annihilation(6))])
    c = evolve(model, basis(space_m, (n0,)).dm(),
               EvolveOptions(t_final=3 / kappa, dt=1e-3 / kappa, sample_stride=5),
               recorder=lambda rho: {"n": np.trace(nop @ rho).real})
    err_c = np.abs(c.records["n"] - n0 * np.exp(-2 * kappa * c.times)).max()
    ok = report(10, err_q < 1e-6 and err_c < 1e-6,
                f"qubit decay max error {err_q:.1e}, cavity decay max error {err_c:.1e} (each < 1e-6)")
    assert ok


# -- 11: circuit --------------------------------------------------------------------

def test_criterion_11_circuit_frequency():
    circuit = CircuitParams(capacitance_pf=np.array([12.0, 12.0]), inductance_ph=np.array([250.0, 250.0]),
                            mutual_ph=np.full((2, 2), 20.0), persistent_current_na=500.0)
    f = circuit_to_params(circuit).nu_ghz
    ok = report(11, bool(np.all(np.abs(f - 2.9) <= 0.05)), f"nu/2pi = {f[0]:.4f} GHz (2.9 +- 0.05)")
    assert ok


# -- 12: invariants over random generic models ---------------------------------------

INVARIANTS = {"trace": [0, 0.0], "hermiticity": [0, 0.0], "positivity": [0, 0.0], "dissipator": [0, 0.0]}
N_CASES = 100


def _note(name: str, value: float):
    entry = INVARIANTS[name]
    entry[0] += 1
    entry[1] = max(entry[1], value) if name != "positivity" else min(entry[1], value)


def _space(n_qubits: int, cutoff: int) -> CompositeSpace:
    return CompositeSpace(tuple([qubit()] * n_qubits + [mode(cutoff)]))


def _random_complex(rng, d):
    return rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))


def _random_state(rng, d, rank):
    a = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def _random_model(rng, space, n_jumps):
    d = space.dim
    h = _random_complex(rng, d)
    H = Operator(space, 0.5 * (h + h.conj().T))
    jumps = [(float(rng.uniform(0.0, 2.0)), Operator(space, _random_complex(rng, d) / np.sqrt(d)))
             for _ in range(n_jumps)]
    return LindbladModel(space, H, jumps)


case = dict(seed=st.integers(0, 2**32 - 1), n_qubits=st.integers(0, 2), cutoff=st.integers(1, 3),
            n_jumps=st.integers(1, 3))


@settings(max_examples=N_CASES)
@given(**case, rank=st.integers(1, 4))
def test_invariant_trace_and_positivity(seed, n_qubits, cutoff, n_jumps, rank):
    rng = np.random.default_rng(seed)
    space = _space(n_qubits, cutoff)
    model = _random_model(rng, space, n_jumps)
    rho0 = DensityMatrix(space, _random_state(rng, space.dim, min(rank, space.dim)))
    traj = evolve(model, rho0, EvolveOptions(t_final=1.0, dt=5e-3, sample_stride=50, store_states=True))
    drift = max(abs(np.trace(s).real - 1) for s in traj.states)
    herm = max(np.abs(s - s.conj().T).max() for s in traj.states)
    low = min(np.linalg.eigvalsh(0.5 * (s + s.conj().T)).min() for s in traj.states)
    _note("trace", drift)
    _note("hermiticity", herm)
    _note("positivity", low)
    assert drift < 1e-8
    assert herm < 1e-9
    assert low >= -1e-7


@settings(max_examples=N_CASES)
@given(**case)
def test_invariant_rhs_hermiticity(seed, n_qubits, cutoff, n_jumps):
    rng = np.random.default_rng(seed)
    space = _space(n_qubits, cutoff)
    model = _random_model(rng, space, n_jumps)
    rho = _random_state(rng, space.dim, space.dim)
    out = rhs(model, rho)
    dev = np.abs(out - out.conj().T).max()
    _note("hermiticity", dev)
    assert dev < 1e-9


@settings(max_examples=N_CASES)
@given(seed=st.integers(0, 2**32 - 1), dim=st.integers(2, 24), hermitian_input=st.booleans())
def test_invariant_dissipator_traceless(seed, dim, hermitian_input):
    rng = np.random.default_rng(seed)
    space = CompositeSpace.single(mode(dim - 1))
    A = Operator(space, _random_complex(rng, dim) / np.sqrt(dim))
    rho = _random_state(rng, dim, dim) if hermitian_input else _random_complex(rng, dim) / dim
    tr = abs(np.trace(dissipator(A, rho)))
    _note("dissipator", tr)
    assert tr < 1e-10


def test_criterion_12_invariant_summary():
    counts = {k: v[0] for k, v in INVARIANTS.items()}
    # each hypothesis test above must have run its full quota
    enough = all(c >= N_CASES for c in counts.values())
    tr, herm, pos, dis = (INVARIANTS[k][1] for k in ("trace", "hermiticity", "positivity", "dissipator"))
    ok = report(12, enough and tr < 1e-8 and herm < 1e-9 and pos >= -1e-7 and dis < 1e-10,
                f"trace drift {tr:.1e}, hermiticity {herm:.1e}, min eigenvalue {pos:.1e}, "
                f"dissipator trace {dis:.1e}; cases {counts}")
    assert ok
