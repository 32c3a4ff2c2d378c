"""Penning trap parameters, trap units and the initial coherent-state covariance.

Trap units set hbar = m = omega_z = 1. Phase-space ordering throughout the
package is ``R = (x, p_x, y, p_y, z, p_z)``.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import constants

__all__ = [
    "InvalidParametersError",
    "TrapParameters",
    "UnitSystem",
    "PROTON_OMEGA_C_SI",
    "PROTON_OMEGA_Z_SI",
    "radial_frequency",
    "temperature_to_dimensionless",
    "initial_covariance",
    "normal_mode_transform",
]

# proton in the classic Brown-Gabrielse trap, angular frequencies in rad/s
PROTON_OMEGA_C_SI = 484e6
PROTON_OMEGA_Z_SI = 63.2e6


class InvalidParametersError(ValueError):
    pass


def radial_frequency(omega_c, omega_z):
    """``omega_perp = sqrt(omega_c**2/4 - omega_z**2/2)``.

    Raises InvalidParametersError unless the trapping condition
    ``omega_c**2/4 > omega_z**2/2`` holds strictly.
    """
    rad = omega_c**2 / 4 - omega_z**2 / 2
    if not np.isfinite(rad) or rad <= 0:
        raise InvalidParametersError(
            f"trapping condition violated: omega_c={omega_c}, omega_z={omega_z}"
        )
    return float(np.sqrt(rad))


@dataclass(frozen=True)
class TrapParameters:
    """Trap frequencies and particle constants, in trap units by default."""

    omega_c: float = PROTON_OMEGA_C_SI / PROTON_OMEGA_Z_SI
    omega_z: float = 1.0
    mass: float = 1.0
    hbar: float = 1.0
    omega_perp: float = field(init=False)

    def __post_init__(self):
        for name in ("omega_c", "omega_z", "mass", "hbar"):
            v = getattr(self, name)
            if not np.isfinite(v) or v <= 0:
                raise InvalidParametersError(f"{name} must be positive, got {v}")
        object.__setattr__(self, "omega_perp", radial_frequency(self.omega_c, self.omega_z))

    @property
    def omega_plus(self):
        """Modified cyclotron frequency."""
        return self.omega_c / 2 + self.omega_perp

    @property
    def omega_minus(self):
        """Magnetron frequency."""
        return self.omega_c / 2 - self.omega_perp

    @classmethod
    def from_si(cls, omega_c_si, omega_z_si):
        """Build trap-unit parameters from SI angular frequencies (rad/s)."""
        return cls(omega_c=omega_c_si / omega_z_si)


@dataclass(frozen=True)
class UnitSystem:
    """Conversion between SI and trap units, fixed by the axial frequency."""

    omega_z_si: float = PROTON_OMEGA_Z_SI

    def __post_init__(self):
        if not np.isfinite(self.omega_z_si) or self.omega_z_si <= 0:
            raise InvalidParametersError(f"omega_z_si must be positive, got {self.omega_z_si}")

    @property
    def time_unit_s(self):
        return 1.0 / self.omega_z_si

    def seconds_to_trap_time(self, seconds):
        return seconds * self.omega_z_si

    def theta(self, t_kelvin):
        return temperature_to_dimensionless(t_kelvin, self)


def temperature_to_dimensionless(t_kelvin, units=UnitSystem()):
    """Bath temperature in trap energy units, ``k_B T / (hbar omega_z)``."""
    if not np.isfinite(t_kelvin) or t_kelvin <= 0:
        raise InvalidParametersError(f"temperature must be positive, got {t_kelvin} K")
    return constants.k * t_kelvin / (constants.hbar * units.omega_z_si)


def normal_mode_transform(trap):
    """Symplectic map from ``(x, p_x, y, p_y)`` to radial normal-mode quadratures.

    Returns ``(S, freqs)`` where ``S @ (x, p_x, y, p_y)`` gives
    ``(Q_a, P_a, Q_b, P_b)`` and ``H_perp = sum_k freqs[k]/2 (Q_k**2 + P_k**2)``.
    One of ``freqs`` is the cyclotron ``omega_+``, the other is
    ``-omega_-``: the magnetron mode carries negative energy.
    """
    w = trap.omega_perp
    m, hbar = trap.mass, trap.hbar
    sx = np.sqrt(m * w / hbar)
    sp = 1.0 / np.sqrt(m * w * hbar)
    # dimensionless oscillator quadratures at the radial frequency
    scale = np.diag([sx, sp, sx, sp])
    r = np.sqrt(0.5)
    # circular modes: Q_a = (X - P_y)/sqrt2, P_a = (P_x + Y)/sqrt2, ...
    circ = r * np.array([
        [1.0, 0.0, 0.0, -1.0],
        [0.0, 1.0, 1.0, 0.0],
        [1.0, 0.0, 0.0, 1.0],
        [0.0, 1.0, -1.0, 0.0],
    ])
    # H_perp = hbar*w/2 (N_a + N_b) + hbar*omega_c/2 * L_z/hbar, L_z/hbar = (N_b - N_a)/2
    freqs = np.array([w - trap.omega_c / 2, w + trap.omega_c / 2])
    return circ @ scale, freqs


def initial_covariance(trap):
    """Covariance matrix of a Penning-trap coherent state.

    Each radial normal mode (cyclotron and magnetron) and the axial mode is
    put in its vacuum, ``I/2`` in dimensionless normal-mode quadratures, and mapped
    back to ``(x, p_x, y, p_y, z, p_z)``. Because the circular-mode transform
    is orthogonal in oscillator units, the radial block equals the ground
    state of an isotropic oscillator at ``omega_perp``.
    """
    s, _ = normal_mode_transform(trap)
    s_inv = np.linalg.inv(s)
    hbar, m = trap.hbar, trap.mass
    sigma = np.zeros((6, 6))
    sigma[:4, :4] = 0.5 * s_inv @ s_inv.T
    sigma[4, 4] = hbar / (2 * m * trap.omega_z)
    sigma[5, 5] = hbar * m * trap.omega_z / 2
    return 0.5 * (sigma + sigma.T)
