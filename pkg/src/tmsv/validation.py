"""Consistency checks of the reduced models.

* Bogoliubov identity behind the squeezed-frame picture.
* Equivalence of the lab-frame and squeezed-frame master equations.
* Rotating-wave reduction of the drive-dressed Hamiltonian to the static
  sideband Hamiltonian, by direct propagation of both.
"""
from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as la

from .dynamics import (
    EvolveOptions,
    LindbladModel,
    effective_model,
    evolve,
    trace_distance,
    transformed_model,
)
from .fockspace import CompositeSpace, DensityMatrix, basis
from .model import (
    EffectiveParams,
    HarmonicTerm,
    SystemParams,
    build_effective_H,
    drive_frequencies,
    first_order_terms,
)
from .squeezing import bogoliubov_check, select_cutoff, squeeze_operator

log = logging.getLogger(__name__)

BOGOLIUBOV_BOUND = 1e-4
FRAME_BOUND = 1e-6
RWA_BOUND = 0.02


@dataclass
class CheckResult:
    name: str
    value: float
    bound: float
    details: dict = field(default_factory=dict)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.value) and self.value < self.bound)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d


# -- Bogoliubov ---------------------------------------------------------------

def check_bogoliubov(ratio: float = 0.75, cutoff: int = 16, theta1: float = 40.0) -> CheckResult:
    t0 = time.perf_counter()
    rep = bogoliubov_check(EffectiveParams.from_ratio(ratio, theta1), cutoff)
    return CheckResult("bogoliubov", rep.interior_deviation, BOGOLIUBOV_BOUND, {
        "ratio": ratio, "cutoff": cutoff, "interior_cutoff": rep.interior_cutoff,
        "working_cutoff": rep.working_cutoff, "boundary_deviation": rep.boundary_deviation,
    }, time.perf_counter() - t0)


# -- lab frame vs squeezed frame ----------------------------------------------

def _sampled_states(model: LindbladModel, rho0: DensityMatrix, t_final: float, n_times: int, dt: float):
    steps = int(round(t_final / dt))
    if steps % n_times:
        raise ValueError("t_final/dt must be a multiple of n_times")
    traj = evolve(model, rho0, EvolveOptions(t_final=t_final, dt=dt, sample_stride=steps // n_times,
                                             store_states=True))
    return traj.times[1:], traj.states[1:]


def frame_distances(effective: EffectiveParams, cutoff: int, gamma_r: float, gamma_phi: float,
                    t_final: float, n_times: int, dt: float, sideband_form: bool):
    """Trace distances between lab-frame states and squeezed-frame states mapped back.

    With ``sideband_form`` the squeezed frame uses the Jaynes-Cummings form of
    the Hamiltonian; otherwise ``S^dag H S`` built on the same truncated space.
    """
    space = CompositeSpace.canonical(cutoff)
    lab = effective_model(effective, space, gamma_r, gamma_phi)
    S = squeeze_operator(effective.zeta, space)
    if sideband_form:
        squeezed = transformed_model(effective, space, gamma_r, gamma_phi)
    else:
        squeezed = LindbladModel(space, S.dag() @ lab.hamiltonian @ S, lab.jumps[:4], charge=lab.charge)
    psi0 = basis(space, (0, 0, 0, 0))
    rho0 = psi0.dm()
    times, lab_states = _sampled_states(lab, rho0, t_final, n_times, dt)
    phi0 = S.dag().data @ psi0.vector
    _, sq_states = _sampled_states(squeezed, DensityMatrix(space, np.outer(phi0, phi0.conj())),
                                   t_final, n_times, dt)
    s = S.data
    dist = []
    for a, b in zip(lab_states, sq_states):
        sb = np.asarray(s @ b)
        mapped = np.asarray(s.conj() @ sb.T).T  # S b S^dag
        dist.append(trace_distance(a, mapped, charge=lab.charge))
    return times, np.array(dist)


def check_transformed_frame(ratio: float = 0.5, cutoff: int = 3, theta1: float = 40.0,
                            gamma_r: float = 20.0, gamma_phi: float = 20.0, t_final: float = 0.25,
                            n_times: int = 10, dt: float = 1e-3,
                            working_cutoff: int | None = None) -> CheckResult:
    """Lab-frame evolution against the conjugated squeezed-frame evolution (no photon loss).

    Two comparisons enter the checked value (their maximum):

    * ``S^dag H S`` on the cutoff-``cutoff`` space, where the equivalence is
      exact because the qubit jumps commute with ``S``;
    * the Jaynes-Cummings form of the squeezed-frame Hamiltonian, on a working
      cutoff large enough that truncation is negligible (at the small cutoff
      itself the two forms differ at the truncation boundary).
    """
    t0 = time.perf_counter()
    eff = EffectiveParams.from_ratio(ratio, theta1)
    times, conj = frame_distances(eff, cutoff, gamma_r, gamma_phi, t_final, n_times, dt, False)
    if working_cutoff is None:
        working_cutoff = select_cutoff(ratio, tail=1e-14, minimum=cutoff)
    _, jc = frame_distances(eff, working_cutoff, gamma_r, gamma_phi, t_final, n_times, dt, True)
    return CheckResult("transformed_frame", float(max(conj.max(), jc.max())), FRAME_BOUND, {
        "ratio": ratio, "cutoff": cutoff, "times_us": times.tolist(),
        "conjugated_trace_distance": conj.tolist(),
        "sideband_form_working_cutoff": working_cutoff,
        "sideband_form_max_trace_distance": float(jc.max()),
    }, time.perf_counter() - t0)


# -- rotating-wave reduction --------------------------------------------------

def _phi(x: float, h: float) -> complex:
    """``int_0^h exp(i x t) dt``."""
    return h * np.exp(0.5j * x * h) * np.sinc(x * h / (2 * np.pi))


def _psi(x: float, h: float) -> complex:
    """``int_0^h t exp(i x t) dt``."""
    y = x * h
    if abs(y) < 1e-3:
        return h * h * (0.5 + 1j * y / 3 - y * y / 8)
    return h * np.exp(1j * y) / (1j * x) + (np.exp(1j * y) - 1) / (x * x)


def _double(w: float, wp: float, h: float) -> complex:
    """``int_0^h dt1 int_0^t1 dt2 exp(i w t1) exp(i wp t2)``."""
    if wp == 0:
        return _psi(w, h)
    return (_phi(w + wp, h) - _phi(w, h)) / (1j * wp)


class HarmonicPropagator:
    """Propagator for ``H(t) = sum_w B_w exp(i w t)`` over steps of fixed length.

    Each step applies ``exp(Omega1 + Omega2)``, the first two Magnus terms with
    the time integrals of the exponentials done exactly. The step is then
    limited by the slow part of ``H`` only; terms oscillating much faster than
    ``1/step`` are integrated exactly through second order, which includes
    their dispersive (Bloch-Siegert type) shifts.
    """

    def __init__(self, terms: Sequence[HarmonicTerm], step: float, merge: float = 1e-9):
        self.step = h = float(step)
        comps: dict[float, np.ndarray] = {}

        def add(w, m):
            key = round(w / merge) * merge
            comps[key] = comps.get(key, 0) + m

        for term in terms:
            m = term.amplitude * term.op.matrix
            add(term.frequency, m)
            add(-term.frequency, m.conj().T)
        self.frequencies = np.array(sorted(comps))
        gen: dict[float, np.ndarray] = {}
        for w in self.frequencies:
            gen[w] = gen.get(w, 0) - 1j * _phi(w, h) * comps[w]
        for w in self.frequencies:
            bw = comps[w]
            for wp in self.frequencies:
                c = -0.5 * _double(w, wp, h)
                bwp = comps[wp]
                key = round((w + wp) / merge) * merge
                gen[key] = gen.get(key, 0) + c * (bw @ bwp - bwp @ bw)
        self._keys = np.array(list(gen))
        self._gens = np.array([gen[k] for k in self._keys])

    def step_generator(self, t: float) -> np.ndarray:
        return np.tensordot(np.exp(1j * self._keys * t), self._gens, axes=1)

    def run(self, psi0: np.ndarray, n_steps: int):
        """Yield ``(t, psi)`` after each step."""
        psi = np.asarray(psi0, dtype=complex)
        for k in range(n_steps):
            psi = la.expm(self.step_generator(k * self.step)) @ psi
            yield (k + 1) * self.step, psi


@dataclass(frozen=True)
class RwaSettings:
    """Scaled parameters, in units of ``theta1``."""

    theta1: float = 40.0
    ratio: float = 0.75
    xi: float = 0.05
    nu: tuple[float, float] = (50.0, 150.0)
    delta: float = 1e7
    cutoff: int = 3
    step: float = 2e-3


def rwa_system(s: RwaSettings) -> SystemParams:
    """Uniform couplings ``g = theta1 / xi``; drive ratios chosen to give the target Thetas."""
    g = s.theta1 / s.xi
    xi2 = s.ratio * s.theta1 / g
    return SystemParams(delta=s.delta * s.theta1, nu=np.array(s.nu) * s.theta1, g=np.full((2, 2), g),
                        xi=np.array([[s.xi, xi2], [xi2, s.xi]]))


def rwa_deficit(s: RwaSettings = RwaSettings()):
    """Largest ``1 - |<psi_static|psi_driven>|^2`` over one exchange period ``2 pi / g_eff``."""
    params = rwa_system(s)
    space = CompositeSpace.canonical(s.cutoff)
    terms = first_order_terms(params, drive_frequencies(params.delta, params.nu), space)
    prop = HarmonicPropagator(terms, s.step / s.theta1)
    eff = EffectiveParams.from_ratio(s.ratio, s.theta1)
    w, v = la.eigh(build_effective_H(eff, space).matrix)
    psi0 = basis(space, (0, 0, 0, 0)).vector
    c0 = v.conj().T @ psi0
    period = 2 * np.pi / eff.g_eff
    n_steps = int(np.ceil(period / prop.step))
    worst = 0.0
    for t, psi in prop.run(psi0, n_steps):
        ref = v @ (np.exp(-1j * w * t) * c0)
        worst = max(worst, 1.0 - abs(np.vdot(ref, psi)) ** 2)
    return worst, n_steps, period


def check_rwa(settings: RwaSettings = RwaSettings()) -> CheckResult:
    t0 = time.perf_counter()
    deficit, n_steps, period = rwa_deficit(settings)
    details = asdict(settings)
    details.update(n_steps=n_steps, period_us=period,
                   scaling_note="frequencies scaled to theta1; nu/theta1 far below the physical ratio")
    return CheckResult("rwa", float(deficit), RWA_BOUND, details, time.perf_counter() - t0)


def run_all(bogoliubov: dict | None = None, frame: dict | None = None, rwa: dict | None = None) -> list[CheckResult]:
    out = []
    for fn, kw in ((check_bogoliubov, bogoliubov), (check_transformed_frame, frame)):
        out.append(fn(**(kw or {})))
        log.info("%s: %.3e (bound %.1e)", out[-1].name, out[-1].value, out[-1].bound)
    out.append(check_rwa(RwaSettings(**(rwa or {}))))
    log.info("rwa: %.3e (bound %.1e)", out[-1].value, out[-1].bound)
    return out
