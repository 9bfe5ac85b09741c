"""Parameter containers and Hamiltonian builders.

Units: every frequency and rate is angular, in inverse microseconds.
Circuit inputs use pF, pH, nA; resonator frequencies are also reported in
GHz (cyclic) for comparison with hardware numbers.

All builders act on the canonical space ``(qubit 1, qubit 2, mode 1, mode 2)``
(see :meth:`tmsv.fockspace.CompositeSpace.canonical`). Matrices for the
coupling, drive and coefficient arrays are indexed ``[qubit, resonator]``
with zero-based indices.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import constants

from .fockspace import (
    BOSONIC,
    QUBIT,
    CompositeSpace,
    Operator,
    annihilation,
    embed,
    pauli,
    zero,
)


class UnsqueezableConfigurationError(ValueError):
    """Theta2 >= Theta1: the squeeze parameter atanh(Theta2/Theta1) is undefined."""


class InconsistentSymmetryError(ValueError):
    """The two coupling products that should equal Theta1 (or Theta2) disagree."""


class NegativeDriveFrequencyError(ValueError):
    """Red-sideband drive frequency delta - nu would be non-positive."""


def _pair(x, name) -> np.ndarray:
    arr = np.broadcast_to(np.asarray(x, dtype=float), (2,)).copy()
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return arr


def _square(x, name) -> np.ndarray:
    arr = np.broadcast_to(np.asarray(x, dtype=float), (2, 2)).copy()
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return arr


@dataclass(frozen=True)
class SystemParams:
    """Bare-system parameters (angular frequencies and rates in 1/us).

    ``g[lam, l]`` and ``xi[lam, l]`` couple qubit ``lam`` to resonator ``l``.
    Rates use the factor-2 dissipator convention of :func:`tmsv.dynamics.dissipator`.
    """

    delta: float
    nu: np.ndarray
    g: np.ndarray
    xi: np.ndarray
    gamma_r: float = 0.0
    gamma_phi: float = 0.0
    kappa: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        object.__setattr__(self, "nu", _pair(self.nu, "nu"))
        object.__setattr__(self, "g", _square(self.g, "g"))
        object.__setattr__(self, "xi", _square(self.xi, "xi"))
        object.__setattr__(self, "kappa", _pair(self.kappa, "kappa"))
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if np.any(self.nu <= 0):
            raise ValueError("resonator frequencies must be positive")
        if np.any(self.g < 0):
            raise ValueError("couplings must be non-negative")
        if np.any(self.xi < 0) or np.any(self.xi >= 1):
            raise ValueError("drive ratios xi must lie in [0, 1)")
        if self.gamma_r < 0 or self.gamma_phi < 0 or np.any(self.kappa < 0):
            raise ValueError("rates must be non-negative")

    @classmethod
    def symmetric(cls, *, g: float, xi1: float, xi2: float, delta: float = 100.0,
                  nu: float = 50.0, gamma_r: float = 0.0, gamma_phi: float = 0.0,
                  kappa: float = 0.0) -> "SystemParams":
        """All couplings equal to ``g``; ``xi1`` on the Theta1 links, ``xi2`` on the Theta2 links."""
        xi = np.array([[xi1, xi2], [xi2, xi1]])
        return cls(delta=delta, nu=np.array([nu, nu]), g=np.full((2, 2), g), xi=xi,
                   gamma_r=gamma_r, gamma_phi=gamma_phi, kappa=np.array([kappa, kappa]))

    @property
    def g_xi(self) -> np.ndarray:
        return self.g * self.xi


@dataclass(frozen=True)
class CircuitParams:
    """LC resonators inductively coupled to flux qubits.

    capacitance_pf, inductance_ph: per resonator.
    mutual_ph: ``[qubit, resonator]`` mutual inductance.
    persistent_current_na: qubit persistent current.
    epsilon: static flux bias energy in 1/us (0 at the degeneracy point).
    """

    capacitance_pf: np.ndarray
    inductance_ph: np.ndarray
    mutual_ph: np.ndarray
    persistent_current_na: float
    epsilon: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "capacitance_pf", _pair(self.capacitance_pf, "capacitance"))
        object.__setattr__(self, "inductance_ph", _pair(self.inductance_ph, "inductance"))
        object.__setattr__(self, "mutual_ph", _square(self.mutual_ph, "mutual inductance"))
        if (np.any(self.capacitance_pf <= 0) or np.any(self.inductance_ph <= 0)
                or np.any(self.mutual_ph <= 0) or not self.persistent_current_na > 0):
            raise ValueError("capacitance, inductance, mutual inductance and persistent current must be positive")


@dataclass(frozen=True)
class CircuitDerived:
    nu: np.ndarray  # angular, 1/us
    nu_ghz: np.ndarray  # cyclic, GHz
    g: np.ndarray  # angular, 1/us


def circuit_to_params(circuit: CircuitParams) -> CircuitDerived:
    """Resonator frequencies ``1/sqrt(LC)`` and couplings ``M I_p sqrt(nu / (2 hbar L))``."""
    L = circuit.inductance_ph * 1e-12
    C = circuit.capacitance_pf * 1e-12
    nu_si = 1.0 / np.sqrt(L * C)  # rad/s
    M = circuit.mutual_ph * 1e-12
    ip = circuit.persistent_current_na * 1e-9
    g_si = M * ip * np.sqrt(nu_si[None, :] / (2 * constants.hbar * L[None, :]))
    return CircuitDerived(nu=nu_si * 1e-6, nu_ghz=nu_si / (2 * np.pi) / 1e9, g=g_si * 1e-6)


@dataclass(frozen=True)
class EffectiveParams:
    theta1: float
    theta2: float
    zeta: float
    g_eff: float

    @classmethod
    def from_thetas(cls, theta1: float, theta2: float) -> "EffectiveParams":
        theta1, theta2 = float(theta1), float(theta2)
        if theta2 < 0:
            raise ValueError("theta2 must be non-negative")
        if not theta1 > theta2:
            raise UnsqueezableConfigurationError(
                f"need theta1 > theta2 for a finite squeeze parameter (theta1={theta1}, theta2={theta2})")
        r = theta2 / theta1
        return cls(theta1, theta2, float(np.arctanh(r)), float(np.sqrt(theta1**2 - theta2**2)))

    @classmethod
    def from_ratio(cls, ratio: float, theta1: float) -> "EffectiveParams":
        return cls.from_thetas(theta1, ratio * theta1)

    @property
    def ratio(self) -> float:
        return self.theta2 / self.theta1


def effective_params(g, xi, rtol: float = 1e-6) -> EffectiveParams:
    """Theta1 = g11 xi11 = g22 xi22, Theta2 = g12 xi12 = g21 xi21 (averaged if within ``rtol``)."""
    gx = _square(g, "g") * _square(xi, "xi")
    pairs = {"theta1": (gx[0, 0], gx[1, 1]), "theta2": (gx[0, 1], gx[1, 0])}
    vals = {}
    for name, (p, q) in pairs.items():
        scale = max(abs(p), abs(q))
        if scale > 0 and abs(p - q) > rtol * scale:
            raise InconsistentSymmetryError(f"{name} products disagree: {p} vs {q}")
        vals[name] = 0.5 * (p + q)
    return EffectiveParams.from_thetas(vals["theta1"], vals["theta2"])


@dataclass(frozen=True)
class DrivePlan:
    omega_d: np.ndarray  # [qubit, tone]

    def __post_init__(self):
        w = _square(self.omega_d, "omega_d")
        if np.any(w <= 0):
            raise NegativeDriveFrequencyError("drive frequencies must be positive")
        object.__setattr__(self, "omega_d", w)


def drive_frequencies(delta: float, nu) -> DrivePlan:
    """Sideband resonance conditions: qubit 1 red on mode 1 and blue on mode 2; qubit 2 the mirror."""
    nu = _pair(nu, "nu")
    if delta <= nu.max():
        raise NegativeDriveFrequencyError(f"delta={delta} must exceed both resonator frequencies {nu.tolist()}")
    n1, n2 = nu
    return DrivePlan(np.array([[delta - n1, delta + n2], [delta + n1, delta - n2]]))


# -- operators on the canonical space ---------------------------------------------------------

@dataclass(frozen=True)
class CanonicalOps:
    space: CompositeSpace
    sp: tuple[Operator, Operator]  # sigma_plus per qubit
    sm: tuple[Operator, Operator]
    sz: tuple[Operator, Operator]
    a: tuple[Operator, Operator]
    ad: tuple[Operator, Operator]


def check_canonical(space: CompositeSpace):
    kinds = tuple(f.kind for f in space.factors)
    if kinds != (QUBIT, QUBIT, BOSONIC, BOSONIC):
        raise ValueError("expected the canonical (qubit, qubit, mode, mode) space")


@lru_cache(maxsize=16)
def canonical_ops(space: CompositeSpace) -> CanonicalOps:
    check_canonical(space)
    sp_ = tuple(embed(pauli("plus"), k, space) for k in (0, 1))
    sm_ = tuple(embed(pauli("minus"), k, space) for k in (0, 1))
    sz_ = tuple(embed(pauli("z"), k, space) for k in (0, 1))
    a_ = tuple(embed(annihilation(space.factors[k].cutoff), k, space) for k in (2, 3))
    ad_ = tuple(x.dag() for x in a_)
    return CanonicalOps(space, sp_, sm_, sz_, a_, ad_)


def build_H0(params: SystemParams, space: CompositeSpace) -> Operator:
    o = canonical_ops(space)
    h = zero(space)
    for lam in range(2):
        h = h + (params.delta / 2) * o.sz[lam] + params.nu[lam] * (o.ad[lam] @ o.a[lam])
    return h


def build_HI(params: SystemParams, space: CompositeSpace) -> Operator:
    o = canonical_ops(space)
    h = zero(space)
    for lam in range(2):
        for l in range(2):
            h = h + params.g[lam, l] * ((o.sp[lam] + o.sm[lam]) @ (o.ad[l] + o.a[l]))
    return h


def drive_coefficients(params: SystemParams, plan: DrivePlan, t: float) -> np.ndarray:
    """Per-qubit coefficient of sigma_z in the bichromatic drive at time ``t``."""
    w = plan.omega_d
    return -(params.xi * w * np.cos(w * t)).sum(axis=1)


def build_Hd(params: SystemParams, plan: DrivePlan, t: float, space: CompositeSpace) -> Operator:
    o = canonical_ops(space)
    c = drive_coefficients(params, plan, t)
    return c[0] * o.sz[0] + c[1] * o.sz[1]


@dataclass(frozen=True)
class HarmonicTerm:
    """``amplitude * exp(i * frequency * t) * op + h.c.``"""

    op: Operator
    amplitude: complex
    frequency: float


def _sum_terms(terms, space: CompositeSpace, t: float) -> Operator:
    h = zero(space)
    for term in terms:
        piece = (term.amplitude * np.exp(1j * term.frequency * t)) * term.op
        h = h + piece + piece.dag()
    return h


def interaction_coupling_terms(params: SystemParams, space: CompositeSpace) -> list[HarmonicTerm]:
    """Coupling part of the Hamiltonian after removing the free evolution."""
    o = canonical_ops(space)
    terms = []
    for lam in range(2):
        for l in range(2):
            g = params.g[lam, l]
            terms.append(HarmonicTerm(o.sp[lam] @ o.ad[l], g, params.delta + params.nu[l]))
            terms.append(HarmonicTerm(o.sp[lam] @ o.a[l], g, params.delta - params.nu[l]))
    return terms


def build_interaction_picture_H(params: SystemParams, plan: DrivePlan, t: float,
                                space: CompositeSpace) -> Operator:
    """Interaction-picture coupling with oscillating phases plus the (unchanged) drive term."""
    return _sum_terms(interaction_coupling_terms(params, space), space, t) + build_Hd(params, plan, t, space)


def first_order_terms(params: SystemParams, plan: DrivePlan, space: CompositeSpace) -> list[HarmonicTerm]:
    """Harmonic decomposition of the drive-dressed coupling to first order in ``xi``.

    Each coupling ``sigma_+ g exp(i(delta +- nu) t) a^(dag)`` is multiplied by
    ``1 - sum_l xi_l (exp(i w_l t) - exp(-i w_l t))``.
    """
    terms = []
    for base in interaction_coupling_terms(params, space):
        lam = _qubit_of(base.op, space)
        terms.append(base)
        for l in range(2):
            xi, w = params.xi[lam, l], plan.omega_d[lam, l]
            if xi == 0:
                continue
            terms.append(HarmonicTerm(base.op, -xi * base.amplitude, base.frequency + w))
            terms.append(HarmonicTerm(base.op, xi * base.amplitude, base.frequency - w))
    return terms


def _qubit_of(op: Operator, space: CompositeSpace) -> int:
    o = canonical_ops(space)
    # sigma_+^lam annihilates every state with qubit lam excited
    for lam in range(2):
        if (op @ o.sp[lam]).max_abs() == 0:
            return lam
    raise ValueError("term does not raise a single qubit")


def build_first_order_H(params: SystemParams, plan: DrivePlan, t: float, space: CompositeSpace) -> Operator:
    return _sum_terms(first_order_terms(params, plan, space), space, t)


def build_effective_H(effective: EffectiveParams, space: CompositeSpace, g_xi=None) -> Operator:
    """Static sideband Hamiltonian.

    With ``g_xi`` (a 2x2 array of coupling products) the general asymmetric form
    is built; otherwise the symmetric Theta1/Theta2 form.
    """
    if g_xi is None:
        t1, t2 = effective.theta1, effective.theta2
        g_xi = np.array([[t1, t2], [t2, t1]])
    g_xi = _square(g_xi, "g_xi")
    o = canonical_ops(space)
    h = (o.sp[0] @ (g_xi[0, 0] * o.a[0] + g_xi[0, 1] * o.ad[1])
         + o.sp[1] @ (g_xi[1, 0] * o.ad[0] + g_xi[1, 1] * o.a[1]))
    return h + h.dag()


def build_transformed_H(effective: EffectiveParams, space: CompositeSpace) -> Operator:
    o = canonical_ops(space)
    h = effective.g_eff * (o.a[0] @ o.sp[0] + o.a[1] @ o.sp[1])
    return h + h.dag()


def excitation_number(space: CompositeSpace) -> Operator:
    """``e1 - e2 + n1 - n2``, conserved by the sideband Hamiltonian.

    Qubit 1 exchanges excitations with mode 1 and pairs with mode 2; qubit 2
    does the mirror image, so its excitation enters with the opposite sign.
    """
    o = canonical_ops(space)
    return (o.sp[0] @ o.sm[0] - o.sp[1] @ o.sm[1]
            + o.ad[0] @ o.a[0] - o.ad[1] @ o.a[1])


@dataclass(frozen=True)
class FluxQubit:
    """Two-level flux qubit ``-(eps sigma_z + Delta sigma_x) / 2`` in the persistent-current basis."""

    epsilon: float
    gap: float

    @property
    def hamiltonian(self) -> Operator:
        return -0.5 * (self.epsilon * pauli("z") + self.gap * pauli("x"))

    @property
    def omega_q(self) -> float:
        return float(np.hypot(self.epsilon, self.gap))

    @property
    def theta(self) -> float:
        """Mixing angle with ``tan(theta) = gap / epsilon``."""
        return float(np.arctan2(self.gap, self.epsilon))

    def coupling_operator(self) -> Operator:
        """Persistent-current coupling ``sigma_z`` rewritten in the energy eigenbasis."""
        th = self.theta
        return np.cos(th) * pauli("z") - np.sin(th) * pauli("x")

    def eigenbasis_hamiltonian(self) -> Operator:
        return (self.omega_q / 2) * pauli("z")


def flux_qubit_H(epsilon: float, gap: float) -> FluxQubit:
    return FluxQubit(float(epsilon), float(gap))
