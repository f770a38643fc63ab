"""Two-qubit-plus-readout-resonator spectrum in a single resonator Fock sector.

The system Hamiltonian is block diagonal in the resonator Fock basis.  Within
the sector of occupation ``n`` it reduces to a 4x4 matrix on the two-qubit
space (bare ordering ``|00>, |01>, |10>, |11>``) that is diagonalized exactly
by a real rotation of the ``{|01>, |10>}`` block.  This module holds the
parameter container, that diagonalization, the one-parameter family of
candidate measurement bases indexed by the mixing angle, and the closed-form
crossover estimates used to locate the bare/dressed transition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Optional

import numpy as np

__all__ = [
    "SystemParams",
    "BasisAngle",
    "EigenSystem",
    "CrossoverEstimates",
    "mixing_angle",
    "eigenenergies",
    "qubit_hamiltonian",
    "propagator",
    "n_of_gamma",
    "crossover_estimates",
]


@dataclass(frozen=True)
class SystemParams:
    """Physical parameters of the coupled two-qubit readout problem.

    All frequencies are angular frequencies in one consistent unit; every
    distance reported by this toolkit depends only on the ratios
    ``omega1/chi``, ``omega2/chi``, ``J/chi`` together with ``alpha`` and
    ``n_max``, so the unit itself never matters (``t_m * chi = pi/2``).
    """

    omega1: float  # qubit-1 frequency
    omega2: float  # qubit-2 frequency
    J: float       # effective qubit-qubit exchange coupling
    chi: float     # dispersive shift of the readout resonator, nonzero
    alpha: float = 2.0   # coherent probe amplitude, real >= 0
    n_max: int = 40      # Fock truncation of the resonator

    def __post_init__(self):
        if self.chi == 0:
            raise ValueError("chi must be nonzero (measurement time diverges)")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if int(self.n_max) != self.n_max or self.n_max < 0:
            raise ValueError("n_max must be a non-negative integer")

    @classmethod
    def from_delta0(cls, delta0: float, J: float, chi: float,
                    alpha: float = 2.0, n_max: int = 40) -> "SystemParams":
        """Symmetric-gauge constructor: omega1 = -delta0, omega2 = +delta0.

        The qubit-frequency sum only conjugates every channel by a fixed
        product phase and drops out of all distances, so this gauge is the
        default when only the half-detuning is specified.
        """
        return cls(omega1=-delta0, omega2=delta0, J=J, chi=chi,
                   alpha=alpha, n_max=n_max)

    @property
    def delta0(self) -> float:
        """Half detuning (omega2 - omega1)/2."""
        return 0.5 * (self.omega2 - self.omega1)

    @property
    def omega_sum(self) -> float:
        return self.omega1 + self.omega2

    @property
    def t_m(self) -> float:
        """Measurement interaction time pi / (2 |chi|)."""
        return math.pi / (2.0 * abs(self.chi))

    def delta_n(self, n: float) -> float:
        """Effective detuning delta0 + chi*n in Fock sector n."""
        return self.delta0 + self.chi * n

    def rescaled(self, lam: float) -> "SystemParams":
        """Scale all frequencies by lam > 0; leaves every basis angle and
        distance invariant."""
        return replace(self, omega1=lam * self.omega1, omega2=lam * self.omega2,
                       J=lam * self.J, chi=lam * self.chi)

    def shifted(self, d_omega: float) -> "SystemParams":
        """Shift both qubit frequencies by a common offset (gauge move)."""
        return replace(self, omega1=self.omega1 + d_omega,
                       omega2=self.omega2 + d_omega)


@dataclass(frozen=True)
class BasisAngle:
    """Mixing angle gamma in (-pi/4, pi/4] naming a candidate measurement basis.

    ``rotation`` maps bare states to the gamma-dressed states ordered
    ``(|00>, |0~1~>, |1~0~>, |11>)``: identity on ``span{|00>, |11>}`` and a
    real rotation by gamma on ``span{|01>, |10>}``.  gamma = 0 is the bare
    basis; gamma = gamma_0 (the n = 0 mixing angle) is the dressed basis.
    """

    gamma: float

    @property
    def rotation(self) -> np.ndarray:
        c, s = math.cos(self.gamma), math.sin(self.gamma)
        r = np.array([[1.0, 0.0, 0.0, 0.0],
                      [0.0, c, -s, 0.0],
                      [0.0, s, c, 0.0],
                      [0.0, 0.0, 0.0, 1.0]])
        r.flags.writeable = False
        return r


@dataclass(frozen=True)
class EigenSystem:
    """Exact eigendata of one Fock sector: occupation, mixing angle, and the
    four energies ordered (|00>, upper mixed, lower mixed, |11>)."""

    n: float
    gamma: float
    energies: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.energies, dtype=float)
        e.flags.writeable = False
        object.__setattr__(self, "energies", e)


class CrossoverEstimates(NamedTuple):
    chi_c: Optional[float]
    alpha_c: Optional[float]


def _sgn(x: float) -> float:
    # sign convention with sgn(0) = +1, so the rotation becomes the identity
    # as J -> 0 and remains continuous from the delta_n -> 0+ side
    return 1.0 if x >= 0 else -1.0


def mixing_angle(params: SystemParams, n: float) -> BasisAngle:
    """Mixing angle gamma_n of Fock sector n, with tan(2 gamma_n) = J/delta_n.

    The branch is fixed so that sin(gamma_n) carries the sign of J*delta_n
    and gamma_n -> 0 as J -> 0.  At the sector degeneracy delta_n = 0 the
    continuous limit from delta_n -> 0+ is used, gamma = sgn(J) * pi/4.

    Raises ValueError when delta_n = 0 and J = 0 (no preferred basis).
    """
    dn = params.delta_n(n)
    if dn == 0.0:
        if params.J == 0.0:
            raise ValueError("undefined mixing angle: delta_n = 0 and J = 0")
        return BasisAngle(_sgn(params.J) * math.pi / 4.0)
    return BasisAngle(0.5 * math.atan(params.J / dn))


def eigenenergies(params: SystemParams, n: float) -> EigenSystem:
    """Exact sector-n energies.

    ``(-(w1+w2)/2 + chi n,  sgn(delta_n) r,  -sgn(delta_n) r,  (w1+w2)/2 - chi n)``
    with ``r = sqrt(delta_n^2 + J^2)``.  The middle pair belongs to the mixed
    eigenvectors ``(cos g, sin g)`` and ``(-sin g, cos g)`` of the
    ``{|01>, |10>}`` block.
    """
    dn = params.delta_n(n)
    r = math.hypot(dn, params.J)
    half_sum = 0.5 * params.omega_sum
    energies = np.array([-half_sum + params.chi * n,
                         _sgn(dn) * r,
                         -_sgn(dn) * r,
                         half_sum - params.chi * n])
    gamma = mixing_angle(params, n).gamma if (dn != 0.0 or params.J != 0.0) else 0.0
    return EigenSystem(n=n, gamma=gamma, energies=energies)


def qubit_hamiltonian(params: SystemParams, n: float) -> np.ndarray:
    """4x4 sector-n Hamiltonian in the bare ordering (|00>,|01>,|10>,|11>)."""
    dn = params.delta_n(n)
    half_sum = 0.5 * params.omega_sum
    h = np.zeros((4, 4))
    h[0, 0] = -half_sum + params.chi * n
    h[1, 1] = dn
    h[2, 2] = -dn
    h[3, 3] = half_sum - params.chi * n
    h[1, 2] = h[2, 1] = params.J
    return h


def propagator(params: SystemParams, n: float, t: float) -> np.ndarray:
    """exp(-i H_n t) through the exact two-level block rotation.

    Unitary to machine precision because the rotation is exactly orthogonal
    and the phases are applied on the eigenbasis.
    """
    sector = eigenenergies(params, n)
    r = BasisAngle(sector.gamma).rotation
    phases = np.exp(-1j * sector.energies * t)
    return (r * phases) @ r.T


def n_of_gamma(params: SystemParams, gamma: float) -> float:
    """Resonator occupation n(gamma) whose sector is diagonal in the
    gamma-rotated basis: n = (omega1 - omega2 + 2 J cot(2 gamma)) / (2 chi).

    Inverse of :func:`mixing_angle` wherever n(gamma) >= 0.  gamma = 0 is
    rejected: the bare basis is only reached as n -> infinity.
    """
    if gamma == 0.0:
        raise ValueError("bare basis corresponds to n -> infinity")
    cot = math.cos(2.0 * gamma) / math.sin(2.0 * gamma)
    return (params.omega1 - params.omega2 + 2.0 * params.J * cot) / (2.0 * params.chi)


def crossover_estimates(params: SystemParams) -> CrossoverEstimates:
    """Closed-form bare/dressed crossover estimates.

    ``chi_c = sqrt(delta0^2 + J^2) / alpha^2`` (needs alpha > 0) and
    ``alpha_c = sqrt(sqrt(delta0^2 + J^2) / chi)`` (needs chi > 0).  An
    estimate whose defining ratio is undefined is reported as None.
    """
    r = math.hypot(params.delta0, params.J)
    chi_c = r / params.alpha ** 2 if params.alpha > 0 else None
    alpha_c = math.sqrt(r / params.chi) if params.chi > 0 else None
    return CrossoverEstimates(chi_c=chi_c, alpha_c=alpha_c)
