"""Electric permittivities and the optical context shared by all solvers.

Length convention: every public length argument in the package is measured
in micrometres; ``OpticalContext.k0`` is in rad/um.  Internally the solvers
work in the dimensionless convention omega/c = 1 (lengths scaled by k0) and
convert at their API boundaries.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.constants as const

from .errors import OutOfTable

__all__ = [
    "OpticalContext",
    "DrudeModel",
    "silver_reference",
    "drude_eps",
    "load_permittivity_table",
    "silver_context",
]


@dataclass(frozen=True)
class OpticalContext:
    """Vacuum wavelength, permittivities and physical constants of one run.

    ``eps1`` is the (lossless, positive) surrounding dielectric and ``eps2``
    the conductor permittivity, Re eps2 < 0, Im eps2 >= 0.
    """

    lambda0_um: float
    eps1: float
    eps2: complex
    c: float = const.c
    eps0: float = const.epsilon_0
    mu0: float = const.mu_0
    hbar: float = const.hbar

    def __post_init__(self):
        if self.lambda0_um <= 0:
            raise ValueError("lambda0 must be positive")
        if self.eps1 <= 0:
            raise ValueError("eps1 must be positive")
        if self.eps2.real >= 0:
            raise ValueError("conductor requires Re eps2 < 0")
        if self.eps2.imag < 0:
            raise ValueError("passive conductor requires Im eps2 >= 0")

    @property
    def k0(self) -> float:
        """Vacuum wavevector 2 pi / lambda0, rad/um."""
        return 2.0 * np.pi / self.lambda0_um

    @property
    def omega(self) -> float:
        """Angular frequency, rad/s."""
        return 2.0 * np.pi * self.c / (self.lambda0_um * 1e-6)

    @property
    def eps_ratio(self) -> complex:
        """eps2 / eps1."""
        return self.eps2 / self.eps1

    @property
    def k1(self) -> float:
        """Wavevector in the surrounding dielectric, rad/um."""
        return np.sqrt(self.eps1) * self.k0

    def lossless(self) -> "OpticalContext":
        """Copy with Im eps2 suppressed."""
        return OpticalContext(self.lambda0_um, self.eps1, complex(self.eps2.real, 0.0))


@dataclass(frozen=True)
class DrudeModel:
    """Free-electron permittivity eps(omega) = 1 - omega_p^2/omega^2."""

    omega_p: float

    def eps(self, omega: float) -> float:
        return 1.0 - (self.omega_p / omega) ** 2

    def d_omega_eps(self, omega: float) -> float:
        """d(omega * eps)/d omega = 1 + omega_p^2/omega^2 (exact)."""
        return 1.0 + (self.omega_p / omega) ** 2

    @classmethod
    def pinned(cls, eps_re: float, omega: float) -> "DrudeModel":
        """Model whose permittivity equals ``eps_re`` at ``omega``."""
        if eps_re >= 1.0:
            raise ValueError("Drude model needs eps < 1")
        return cls(omega_p=omega * np.sqrt(1.0 - eps_re))


def drude_eps(model: DrudeModel, omega: float) -> complex:
    """Permittivity of ``model`` at angular frequency ``omega`` (> 0)."""
    if omega <= 0:
        raise ValueError("omega must be positive")
    return complex(model.eps(omega))


# Shipped silver table.  The 1.00 um row is the reference value for silver
# at room temperature; the shoulder rows are Drude-extrapolated from that
# anchor (Re: 1 - 51 lam^2, Im: 0.6 lam^3) so that interpolation behaves
# sensibly near 1 um.  Replace with a measured CSV for quantitative work
# away from 1 um.
_SILVER_TABLE = np.array([
    # lambda_um   re_eps        im_eps
    [0.80, 1.0 - 51.0 * 0.80**2, 0.6 * 0.80**3],
    [0.90, 1.0 - 51.0 * 0.90**2, 0.6 * 0.90**3],
    [1.00, -50.0, 0.6],
    [1.10, 1.0 - 51.0 * 1.10**2, 0.6 * 1.10**3],
    [1.20, 1.0 - 51.0 * 1.20**2, 0.6 * 1.20**3],
])


def _interp_table(table: np.ndarray, lambda0_um: float) -> complex:
    lam = table[:, 0]
    if lambda0_um < lam[0] or lambda0_um > lam[-1]:
        raise OutOfTable(
            f"lambda0 = {lambda0_um} um outside table [{lam[0]}, {lam[-1]}] um")
    re = np.interp(lambda0_um, lam, table[:, 1])
    im = np.interp(lambda0_um, lam, table[:, 2])
    return complex(re, im)


def silver_reference(lambda0_um: float) -> complex:
    """Tabulated silver permittivity, linearly interpolated in wavelength."""
    return _interp_table(_SILVER_TABLE, lambda0_um)


def load_permittivity_table(path: str | Path) -> np.ndarray:
    """Read a CSV with header ``lambda_um,re_eps,im_eps`` into a sorted table."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"lambda_um", "re_eps", "im_eps"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise OutOfTable(f"CSV must have header {sorted(required)}")
        for rec in reader:
            rows.append((float(rec["lambda_um"]), float(rec["re_eps"]),
                         float(rec["im_eps"])))
    if not rows:
        raise OutOfTable("empty permittivity table")
    table = np.array(sorted(rows))
    return table


def table_permittivity(table: np.ndarray, lambda0_um: float) -> complex:
    """Interpolate a table produced by :func:`load_permittivity_table`."""
    return _interp_table(table, lambda0_um)


def silver_context(lambda0_um: float = 1.0, eps1: float = 2.0) -> OpticalContext:
    """The package default: silver wire/tip in eps1 at lambda0 (1 um)."""
    return OpticalContext(lambda0_um, eps1, silver_reference(lambda0_um))
