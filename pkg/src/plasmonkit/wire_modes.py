"""Guided modes of an infinite cylinder: dispersion, fields, quantization.

Covers the conducting nanowire (fundamental TM0 plasmon, higher-order
cutoffs, quasistatic limit) and the dielectric fiber (degenerate m = +-1
fundamental mode) with the same boundary-value machinery.

All dispersion work is done in the dimensionless convention omega/c = 1:
wavevectors in units of k0, lengths in units of 1/k0.  Public functions
take lengths in micrometres and convert at entry.

Scaled field convention (used by the overlap integrals in ``outcoupling``):
E is dimensionless and H carries the prefactor -i*k_i (i.e. the SI factor
1/(omega mu0) is absorbed), so the coupled-mode equations take the clean
form P dC/dz~ = i K C with z~ = k0 z.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
import scipy.special as sp
from scipy.integrate import quad
from scipy.optimize import brentq

from .errors import (
    BranchPoint,
    LossyModeRejected,
    NoConvergence,
    NoCutoffFound,
    NoMode,
    OutOfValidity,
)
from .materials import OpticalContext

__all__ = [
    "GuidedMode",
    "QuantizedMode",
    "mode_residual",
    "solve_tm0",
    "solve_quasistatic_C",
    "chi",
    "chi_prime",
    "cutoff_radius",
    "m1_asymptotics",
    "mode_fields",
    "quantize",
    "solve_fiber_fundamental",
]

_BRANCH_TOL = 1e-12


def perp_wavevector(eps: complex, kp: complex) -> complex:
    """Transverse wavevector sqrt(eps - kp^2) on the Im >= 0 branch (k0 = 1)."""
    s = np.sqrt(complex(eps) - kp * kp + 0j)
    if s.imag < 0 or (s.imag == 0 and s.real < 0):
        s = -s
    return s


def chi(x: complex, eps1: float, eps2: complex) -> complex:
    """chi(x) = eps1 I0(x) K0'(x) - eps2 K0(x) I0'(x); zero at the plasmon pole."""
    return eps1 * sp.iv(0, x) * (-sp.kv(1, x)) - eps2 * sp.kv(0, x) * sp.iv(1, x)


def chi_prime(x: complex, eps1: float, eps2: complex) -> complex:
    """d chi/dx, from I0'' = I0 - I1/x and K0'' = K0 + K1/x."""
    i0, i1, k0v, k1v = sp.iv(0, x), sp.iv(1, x), sp.kv(0, x), sp.kv(1, x)
    return (eps1 * (-i1 * k1v + i0 * (k0v + k1v / x))
            - eps2 * (-k1v * i1 + k0v * (i0 - i1 / x)))


def solve_quasistatic_C(eps_ratio: complex) -> complex:
    """Quasistatic constant C_-1: root of eps2/eps1 = K0' I0 / (K0 I0').

    Solved as chi(C) = 0 with eps1 = 1, eps2 = eps_ratio.  Real ratios are
    bisected on (1e-3, 3); complex ratios continue the real root by Newton.
    """
    er = complex(eps_ratio)
    if er.real >= -1.0:
        raise NoMode("quasistatic surface mode requires Re(eps2/eps1) < -1")
    c_real = brentq(lambda c: chi(c, 1.0, er.real).real, 1e-3, 3.0, xtol=1e-15)
    if er.imag == 0.0:
        return complex(c_real)
    c = complex(c_real)
    for frac in np.linspace(0.0, 1.0, 5)[1:]:
        target = complex(er.real, er.imag * frac)
        for _ in range(60):
            step = chi(c, 1.0, target) / chi_prime(c, 1.0, target)
            c = c - step
            if abs(step) < 1e-14 * abs(c):
                break
        else:
            raise NoConvergence("Newton on quasistatic constant did not converge")
    return c


def quasistatic_C_asymptote(eps_ratio: float) -> float:
    """Small-C asymptote: root of eps_ratio = 2/((gamma - log 2 + log C) C^2)."""
    gamma_e = np.euler_gamma
    f = lambda c: eps_ratio - 2.0 / ((gamma_e - np.log(2.0) + np.log(c)) * c * c)
    return brentq(f, 1e-6, 0.69, xtol=1e-15)  # log factor changes sign at C ~ 0.7


# ----------------------------------------------------------------------
# Mode residual (full retarded equation) and helpers, scaled units.
# ----------------------------------------------------------------------

def _residual_from_perp(m: int, kp: complex, k1p: complex, k2p: complex,
                        r: float, eps_out: float, eps_in: complex) -> complex:
    jm = sp.jv(m, k2p * r)
    jmp = sp.jvp(m, k2p * r)
    hm = sp.hankel1(m, k1p * r)
    hmp = sp.h1vp(m, k1p * r)
    t1 = jmp / (k2p * jm) - hmp / (k1p * hm)
    t2 = eps_in * jmp / (k2p * jm) - eps_out * hmp / (k1p * hm)
    lhs = (m * m * kp * kp / (r * r)) * (1.0 / k2p**2 - 1.0 / k1p**2) ** 2
    return lhs - t1 * t2


def _residual_scaled(m: int, kp: complex, r: float, eps_out: float,
                     eps_in: complex) -> complex:
    """LHS - RHS of the determinant mode equation at scaled radius r = k0 R."""
    for eps in (eps_out, eps_in):
        if abs(kp * kp - eps) < _BRANCH_TOL:
            raise BranchPoint(f"kpar at branch point sqrt({eps})")
    k1p = perp_wavevector(eps_out, kp)
    k2p = perp_wavevector(eps_in, kp)
    return _residual_from_perp(m, kp, k1p, k2p, r, eps_out, eps_in)


def _tm0_factor_scaled(kp: complex, r: float, eps_out: float,
                       eps_in: complex) -> complex:
    """TM factor of the m = 0 residual (zero on the TM0 branch)."""
    k1p = perp_wavevector(eps_out, kp)
    k2p = perp_wavevector(eps_in, kp)
    return (eps_in * sp.jvp(0, k2p * r) / (k2p * sp.jv(0, k2p * r))
            - eps_out * sp.h1vp(0, k1p * r) / (k1p * sp.hankel1(0, k1p * r)))


def _te0_factor_scaled(kp: complex, r: float, eps_out: float,
                       eps_in: complex) -> complex:
    k1p = perp_wavevector(eps_out, kp)
    k2p = perp_wavevector(eps_in, kp)
    return (sp.jvp(0, k2p * r) / (k2p * sp.jv(0, k2p * r))
            - sp.h1vp(0, k1p * r) / (k1p * sp.hankel1(0, k1p * r)))


def mode_residual(m: int, kpar: complex, R_um: float, ctx: OpticalContext,
                  eps_in: complex | None = None) -> complex:
    """Mode-equation residual at (m, kpar); zero iff kpar is a guided mode.

    ``kpar`` in rad/um.  ``eps_in`` defaults to the conductor ``ctx.eps2``;
    pass a positive permittivity for a dielectric fiber core.
    """
    eps_in = ctx.eps2 if eps_in is None else eps_in
    return _residual_scaled(m, kpar / ctx.k0, ctx.k0 * R_um, ctx.eps1, eps_in)


def _tm0_real_root(r: float, eps1: float, e2r: float) -> float:
    """Lossless TM0 root kp (units of k0) by bracketed bisection.

    Real formulation: |eps2| I1(kap2 r)/(kap2 I0) = eps1 K1(kap1 r)/(kap1 K0)
    with kap_i = sqrt(kp^2 - eps_i), monotone crossing on (sqrt(eps1), inf).
    """
    def f(kp):
        kap1 = np.sqrt(kp * kp - eps1)
        kap2 = np.sqrt(kp * kp - e2r)
        return (-e2r * sp.iv(1, kap2 * r) / (kap2 * sp.iv(0, kap2 * r))
                - eps1 * sp.kv(1, kap1 * r) / (kap1 * sp.kv(0, kap1 * r)))
    lo = np.sqrt(eps1) * (1.0 + 1e-12)
    cq = solve_quasistatic_C(e2r / eps1).real
    flat_spp = np.sqrt(eps1 * e2r / (eps1 + e2r)).real
    hi = max(3.0 * cq / r, 2.0 * flat_spp, 1.5 * lo)
    if f(lo) >= 0.0:
        raise NoMode("no TM0 surface mode: residual does not change sign")
    while f(hi) < 0.0:
        hi *= 2.0
        if hi > 1e8:
            raise NoConvergence("TM0 bracket expansion failed")
    return brentq(f, lo, hi, xtol=1e-15, rtol=8.9e-16)


def _newton_complex(fun: Callable[[complex], complex], z0: complex,
                    tol: float = 1e-13, maxit: int = 60) -> complex:
    z = complex(z0)
    for _ in range(maxit):
        h = 1e-8 * max(abs(z), 1e-8)
        d = (fun(z + h) - fun(z - h)) / (2.0 * h)
        step = fun(z) / d
        z = z - step
        if abs(step) < tol * max(abs(z), 1.0):
            return z
    raise NoConvergence("complex Newton did not converge")


@dataclass(frozen=True)
class GuidedMode:
    """One guided mode of a two-region cylinder.

    ``kpar`` in rad/um, ``R_um`` in micrometres; ``eps_in``/``eps_out`` are
    the core and surrounding permittivities; a1, a2, b1, b2 the (scaled)
    field coefficients of the general cylinder solution (a = TE-like,
    b = TM-like; a = 0 for the TM0 plasmon).
    """

    m: int
    kpar: complex
    R_um: float
    eps_in: complex
    eps_out: float
    ctx: OpticalContext
    a1: complex
    a2: complex
    b1: complex
    b2: complex
    # set when kpar sits so close to sqrt(eps_out) k0 that eps - kp^2 cancels
    kperp_out_explicit: complex | None = None

    # -- scaled quantities -------------------------------------------------
    @property
    def kp(self) -> complex:
        """kpar / k0."""
        return self.kpar / self.ctx.k0

    @property
    def r(self) -> float:
        """k0 R."""
        return self.ctx.k0 * self.R_um

    @property
    def kperp_out(self) -> complex:
        """Transverse wavevector outside, rad/um, branch Im >= 0."""
        if self.kperp_out_explicit is not None:
            return self.kperp_out_explicit
        return perp_wavevector(self.eps_out, self.kp) * self.ctx.k0

    @property
    def kperp_in(self) -> complex:
        return perp_wavevector(self.eps_in, self.kp) * self.ctx.k0

    @property
    def kappa_out(self) -> complex:
        """Evanescent decay constant kappa_1perp = -i k_1perp, rad/um."""
        return -1j * self.kperp_out

    @property
    def lambda_pl_um(self) -> float:
        """Guided wavelength 2 pi / Re kpar, um."""
        return 2.0 * np.pi / self.kpar.real

    def residual(self) -> complex:
        if self.kperp_out_explicit is not None:
            k1p = self.kperp_out_explicit / self.ctx.k0
            k2p = perp_wavevector(self.eps_in, self.kp)
            return _residual_from_perp(self.m, self.kp, k1p, k2p, self.r,
                                       self.eps_out, self.eps_in)
        return _residual_scaled(self.m, self.kp, self.r, self.eps_out, self.eps_in)

    def scale_coeffs(self, s: complex) -> "GuidedMode":
        return replace(self, a1=self.a1 * s, a2=self.a2 * s,
                       b1=self.b1 * s, b2=self.b2 * s)

    # -- fields ------------------------------------------------------------
    def fields_cyl_scaled(self, rho_s, phi=0.0, z_s=0.0):
        """Scaled cylindrical field components at k0*(rho, z).

        Returns (Erho, Ephi, Ez, Hrho, Hphi, Hz), each shaped like ``rho_s``.
        H absorbs the SI factor 1/(omega mu0) as described in the module
        docstring.  Includes the phase e^{i m phi + i kp z}.
        """
        rho_s = np.asarray(rho_s, dtype=float)
        phi_arr = np.broadcast_to(np.asarray(phi, dtype=float), rho_s.shape)
        inside = rho_s < self.r
        m, kp = self.m, self.kp
        out = [np.zeros(rho_s.shape, dtype=complex) for _ in range(6)]
        for region, mask in (("in", inside), ("out", ~inside)):
            if not np.any(mask):
                continue
            if region == "in":
                eps, a, b = self.eps_in, self.a2, self.b2
                F, Fp = sp.jv, sp.jvp
                kperp = perp_wavevector(eps, kp)
            else:
                eps, a, b = complex(self.eps_out), self.a1, self.b1
                F, Fp = sp.hankel1, sp.h1vp
                kperp = self.kperp_out / self.ctx.k0
            ki = np.sqrt(eps)
            x = kperp * rho_s[mask]
            fm, fpm = F(m, x), Fp(m, x)
            rho_safe = np.where(rho_s[mask] == 0.0, 1e-300, rho_s[mask])
            phase = np.exp(1j * (m * phi_arr[mask] + kp * z_s))
            erho = (1j * m / (ki * rho_safe) * a * fm
                    + 1j * kp * kperp / eps * b * fpm) * phase
            ephi = (-kperp / ki * a * fpm
                    - m * kp / (eps * rho_safe) * b * fm) * phase
            ez = kperp**2 / eps * b * fm * phase
            hrho = -1j * ki * (1j * kp * kperp / eps * a * fpm
                               + 1j * m / (ki * rho_safe) * b * fm) * phase
            hphi = 1j * ki * (m * kp / (eps * rho_safe) * a * fm
                              + kperp / ki * b * fpm) * phase
            hz = -1j * ki * kperp**2 / eps * a * fm * phase
            for arr, val in zip(out, (erho, ephi, ez, hrho, hphi, hz)):
                arr[mask] = val
        return tuple(out)

    def fields_cart_scaled(self, xs, ys):
        """Scaled Cartesian components (Ex, Ey, Ez, Hx, Hy, Hz) at k0*(x, y)."""
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        rho = np.hypot(xs, ys)
        phi = np.arctan2(ys, xs)
        erho, ephi, ez, hrho, hphi, hz = self.fields_cyl_scaled(rho, phi)
        c, s = np.cos(phi), np.sin(phi)
        return (erho * c - ephi * s, erho * s + ephi * c, ez,
                hrho * c - hphi * s, hrho * s + hphi * c, hz)


def mode_fields(mode: GuidedMode, rho_um, z_um=0.0, phi=0.0):
    """(E, H) cylindrical 3-vectors at radius rho (um), height z, angle phi.

    Components are returned in the scaled convention of :class:`GuidedMode`.
    """
    k0 = mode.ctx.k0
    erho, ephi, ez, hrho, hphi, hz = mode.fields_cyl_scaled(
        np.asarray(rho_um, dtype=float) * k0, phi=phi, z_s=k0 * np.asarray(z_um))
    return (np.stack([erho, ephi, ez], axis=-1),
            np.stack([hrho, hphi, hz], axis=-1))


def solve_tm0(R_um: float, ctx: OpticalContext, lossless: bool = False,
              n_continuation: int = 6) -> GuidedMode:
    """Fundamental TM0 plasmon of a conducting nanowire of radius R.

    Real-axis bisection of the lossless problem seeds a complex Newton
    iteration, with Im eps2 switched on gradually (continuation) to stay on
    the physical branch.  ``lossless=True`` suppresses Im eps2 entirely.
    """
    r = ctx.k0 * R_um
    eps1 = ctx.eps1
    e2 = complex(ctx.eps2.real, 0.0) if lossless else ctx.eps2
    kp = complex(_tm0_real_root(r, eps1, ctx.eps2.real))
    if e2.imag != 0.0:
        for frac in np.linspace(0.0, 1.0, n_continuation + 1)[1:]:
            e2t = complex(e2.real, e2.imag * frac)
            kp = _newton_complex(lambda k: _tm0_factor_scaled(k, r, eps1, e2t), kp)
    k1p = perp_wavevector(eps1, kp)
    k2p = perp_wavevector(e2, kp)
    b2 = 1.0 + 0.0j
    b1 = b2 * k2p * sp.jvp(0, k2p * r) / (k1p * sp.h1vp(0, k1p * r))
    return GuidedMode(m=0, kpar=kp * ctx.k0, R_um=R_um, eps_in=e2,
                      eps_out=eps1, ctx=ctx, a1=0.0, a2=0.0, b1=b1, b2=b2)


def cutoff_radius(m: int, ctx: OpticalContext) -> float:
    """Cutoff radius (um) below which the |m| >= 2 plasmon branch vanishes.

    Root of the O(1/delta) matching condition of the mode equation expanded
    about kpar = sqrt(eps1) k0, with Im eps2 treated as zero.
    """
    if m < 2:
        raise ValueError("cutoff formula holds for m >= 2")
    eps1, e2 = ctx.eps1, ctx.eps2.real
    if not (eps1 > 0 and e2 < 0 and eps1 + e2 < 0):
        raise NoCutoffFound("outside the regime eps1>0, eps2<0, eps1+eps2<0")
    root_d = np.sqrt(eps1 - e2)  # sqrt(eps2 - eps1) = i root_d

    def f(r):
        x = root_d * r
        third = (eps1 + e2) * sp.ivp(m, x) / (sp.iv(m, x) * root_d)
        return (m / r) * (eps1 + e2) / (e2 - eps1) - r * eps1 / (m - 1) - third

    grid = np.geomspace(1e-3, 5.0, 400)
    vals = np.array([f(r) for r in grid])
    sign_change = np.nonzero(np.diff(np.sign(vals)) != 0)[0]
    if sign_change.size == 0:
        raise NoCutoffFound("no sign change of the cutoff function on (1e-3, 5)/k0")
    i = sign_change[0]
    r_star = brentq(f, grid[i], grid[i + 1], xtol=1e-14)
    return r_star / ctx.k0


def m1_asymptotics(R_um: float, ctx: OpticalContext) -> tuple[float, float]:
    """Nanowire-limit m = 1 branch: (delta, kappa_out) in rad/um.

    delta = kpar - sqrt(eps1) k0 shrinks exponentially as R -> 0; valid for
    k0 R <~ 0.3 (raises OutOfValidity beyond).
    """
    r = ctx.k0 * R_um
    if r > 0.3:
        raise OutOfValidity("m=1 asymptotics documented for k0 R <= 0.3")
    eps1, e2 = ctx.eps1, ctx.eps2.real
    expo = (eps1 + e2) / (r * r * eps1 * (e2 - eps1))
    delta = 2.0 / (r * r * np.sqrt(eps1)) * np.exp(-2.0 * expo)
    kappa = np.sqrt(2.0 * delta * np.sqrt(eps1))
    return delta * ctx.k0, kappa * ctx.k0


def m1_kappa_closed_form(R_um: float, ctx: OpticalContext) -> float:
    """kappa_out from the companion closed form (2/R) exp(-...), rad/um."""
    r = ctx.k0 * R_um
    eps1, e2 = ctx.eps1, ctx.eps2.real
    expo = (eps1 + e2) / (r * r * eps1 * (e2 - eps1))
    return (2.0 / r) * np.exp(-expo) * ctx.k0


# ----------------------------------------------------------------------
# Quantization (lossless TM0) and the Drude density of states.
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class QuantizedMode:
    """TM0 plasmon normalized to a single quantum hbar*omega in length L."""

    mode: GuidedMode
    L_um: float
    b1_norm: complex        # V/m, field coefficient outside after normalization
    Vtilde: float           # dimensionless mode-volume parameter
    Veff_um3: float         # = Vtilde R^2 L
    dos: float              # states per (rad/s), both propagation directions
    energy_scale: float     # multiplies |E_scaled|^2 integrals to Joules

    def g_at(self, d_um: float, p0: float = 1.0) -> float:
        """Emitter-plasmon coupling (rad/s) for a radial dipole at rho = d.

        Exact route: g = (p0/hbar) |b1 kp k1perp / k1^2 * H0'(k1perp d)|
        with the normalized field coefficient.
        """
        md = self.mode
        kp = md.kp
        k1p = perp_wavevector(md.eps_out, kp)
        val = (kp * k1p / md.eps_out) * sp.h1vp(0, k1p * md.ctx.k0 * d_um)
        return p0 * abs(self.b1_norm * val) / md.ctx.hbar

    def g_closed_form(self, d_um: float, p0: float = 1.0) -> float:
        """Nanowire-limit closed form (2/pi) p0 sqrt(omega/(hbar eps0 Veff)) K1."""
        md = self.mode
        kap = md.kappa_out.real
        veff_m3 = self.Veff_um3 * 1e-18
        return (2.0 / np.pi) * p0 * np.sqrt(
            md.ctx.omega / (md.ctx.hbar * md.ctx.eps0 * veff_m3)) \
            * sp.kv(1, kap * d_um)


def _tm0_energy_integral_scaled(mode: GuidedMode) -> float:
    """W = int |eps| |E_scaled|^2 2 pi rho~ drho~  (electric, Drude-weighted)."""
    kp = mode.kp
    r = mode.r
    eps1 = mode.eps_out
    e2 = mode.eps_in
    k1p = perp_wavevector(eps1, kp)
    k2p = perp_wavevector(e2, kp)

    def dens_out(x):
        erho = mode.b1 * 1j * kp * k1p / eps1 * sp.h1vp(0, k1p * x)
        ez = mode.b1 * k1p**2 / eps1 * sp.hankel1(0, k1p * x)
        return eps1 * (abs(erho) ** 2 + abs(ez) ** 2) * 2.0 * np.pi * x

    def dens_in(x):
        erho = mode.b2 * 1j * kp * k2p / e2 * sp.jvp(0, k2p * x)
        ez = mode.b2 * k2p**2 / e2 * sp.jv(0, k2p * x)
        return abs(e2) * (abs(erho) ** 2 + abs(ez) ** 2) * 2.0 * np.pi * x

    decay = abs(k1p.imag) if k1p.imag != 0 else abs(k1p)
    win, _ = quad(dens_in, 0.0, r, limit=300)
    wout, _ = quad(dens_out, r, r + 60.0 / decay, limit=300)
    return win + wout


def vtilde_integral(C: float, eps1: float, eps2_abs: float) -> float:
    """Dimensionless mode-volume parameter from its double-integral form."""
    k1c, i1c = sp.kv(1, C), sp.iv(1, C)
    inner, _ = quad(lambda x: x * (sp.iv(1, x) ** 2 + sp.iv(0, x) ** 2), 0.0, C)
    outer, _ = quad(lambda x: x * (sp.kv(1, x) ** 2 + sp.kv(0, x) ** 2), C, np.inf,
                    limit=200)
    return (8.0 * eps1**2 / (np.pi * C * C)) * (
        (k1c**2 / (i1c**2 * eps2_abs)) * inner + outer / eps1)


def quantize(mode: GuidedMode, L_um: float) -> QuantizedMode:
    """Normalize a lossless TM0 mode to energy hbar*omega in length L.

    The energy functional is the Drude-simplified electric-only form
    eps0 int |eps| |E|^2 dV (the magnetic term is smaller by O((k0 R)^2)
    in the nanowire limit and is dropped, matching the closed-form Vtilde).
    """
    if abs(mode.eps_in.imag) > 0 or abs(mode.kpar.imag) > 1e-9 * abs(mode.kpar):
        raise LossyModeRejected("quantization requires a lossless mode")
    ctx = mode.ctx
    w_scaled = _tm0_energy_integral_scaled(mode)  # per unit scaled length
    # hbar omega = eps0 * s^2 * (L~ / k0^3) * W  with E_SI = s E_scaled
    k0_m = ctx.k0 * 1e6  # rad/m
    L_scaled = ctx.k0 * L_um
    s = np.sqrt(ctx.hbar * ctx.omega * k0_m**3 / (ctx.eps0 * L_scaled * w_scaled))
    b1_norm = s * mode.b1
    C = solve_quasistatic_C(ctx.eps2.real / ctx.eps1).real
    vt = vtilde_integral(C, ctx.eps1, abs(ctx.eps2.real))
    veff = vt * mode.R_um**2 * L_um
    # Drude scaling law for the density of states, both directions.
    dC = _dC_deps2(ctx)
    dos = (L_um / (np.pi * mode.R_um)) * dC * 2.0 * abs(ctx.eps2.real) / ctx.omega
    energy_scale = ctx.eps0 * s**2 / k0_m**3
    return QuantizedMode(mode=mode, L_um=L_um, b1_norm=b1_norm, Vtilde=vt,
                         Veff_um3=veff, dos=dos, energy_scale=energy_scale)


def _dC_deps2(ctx: OpticalContext) -> float:
    """dC_-1/d eps2 of the quasistatic root (real, lossless)."""
    eps1, e2 = ctx.eps1, ctx.eps2.real
    C = solve_quasistatic_C(e2 / eps1).real
    return float((sp.kv(0, C) * sp.iv(1, C) / chi_prime(C, eps1, e2)).real)


def group_velocity_qs(R_um: float, ctx: OpticalContext) -> float:
    """Quasistatic Drude group velocity (um * rad/s) of the TM0 plasmon.

    From the density-of-states scaling dk/domega = (1/R) dC/deps2 * 2|eps2|/omega.
    """
    dkdw = (1.0 / R_um) * _dC_deps2(ctx) * 2.0 * abs(ctx.eps2.real) / ctx.omega
    return 1.0 / dkdw


# ----------------------------------------------------------------------
# Dielectric fiber fundamental mode (m = +-1).
# ----------------------------------------------------------------------

def _boundary_matrix(m: int, kp: complex, r: float, eps_out: float,
                     eps_in: complex, k1p: complex | None = None,
                     k2p: complex | None = None) -> np.ndarray:
    """4x4 continuity matrix (rows Ez, Ephi, Hz, Hphi; cols a1, b1, a2, b2)."""
    k1 = np.sqrt(complex(eps_out))
    k2 = np.sqrt(complex(eps_in))
    k1p = perp_wavevector(eps_out, kp) if k1p is None else k1p
    k2p = perp_wavevector(eps_in, kp) if k2p is None else k2p
    hm, hmp = sp.hankel1(m, k1p * r), sp.h1vp(m, k1p * r)
    jm, jmp = sp.jv(m, k2p * r), sp.jvp(m, k2p * r)
    return np.array([
        [0.0, k1p**2 / eps_out * hm, 0.0, -(k2p**2) / eps_in * jm],
        [-k1p / k1 * hmp, -m * kp / (eps_out * r) * hm,
         k2p / k2 * jmp, m * kp / (eps_in * r) * jm],
        [k1p**2 / k1 * hm, 0.0, -(k2p**2) / k2 * jm, 0.0],
        [m * kp / (k1 * r) * hm, k1p * hmp,
         -m * kp / (k2 * r) * jm, -k2p * jmp],
    ], dtype=complex)


def solve_fiber_fundamental(Rg_um: float, eps_core: float, ctx: OpticalContext,
                            m: int = 1) -> GuidedMode:
    """Fundamental hybrid m = +-1 mode of a dielectric cylinder (no cutoff).

    Picks the largest-kpar m = 1 root of the full mode equation inside the
    guidance window (sqrt(eps1) k0, sqrt(eps_core) k0); the field
    coefficients come from the null vector of the boundary matrix.
    """
    if eps_core <= ctx.eps1:
        raise NoMode("fiber requires eps_core > eps1")
    r = ctx.k0 * Rg_um
    eps1 = ctx.eps1
    vsq = (eps_core - eps1) * r * r  # (k0 Rg)^2 (eps_c - eps1) = u^2 + w^2

    def f_logw(u):
        # w = kappa_out * Rg; kp, kperp built from w^2 without cancellation
        w = np.exp(u)
        kp = np.sqrt(eps1 + (w / r) ** 2)
        k1p = 1j * w / r
        k2p = np.sqrt(vsq - w * w) / r
        return _residual_from_perp(1, kp, k1p, k2p, r, eps1, eps_core).real

    u_hi = np.log(np.sqrt(vsq)) - 1e-12
    grid = np.linspace(u_hi, np.log(1e-12), 700)
    vals = np.array([f_logw(u) for u in grid])
    ok = np.isfinite(vals)
    u_root = None
    for i in range(len(grid) - 1):  # largest-w (fundamental) root first
        if not (ok[i] and ok[i + 1]) or np.sign(vals[i]) == np.sign(vals[i + 1]):
            continue
        # residual values ~1/w^2 drown in float noise near the branch point;
        # only accept crossings the evaluation can actually resolve
        if max(abs(vals[i]), abs(vals[i + 1])) > 1e12:
            continue
        cand = brentq(f_logw, grid[i + 1], grid[i], xtol=1e-14)
        # root (residual collapses) vs pole (residual explodes); the absolute
        # floor covers the ~O(1) cancellation noise of the huge internal terms
        if abs(f_logw(cand)) < max(10.0, 1e-3 * max(abs(vals[i]), abs(vals[i + 1]))):
            u_root = cand
            break
    if u_root is None:
        # exponentially-weakly-guided regime: kpar - sqrt(eps1) k0 below double
        # resolution; use the small-R expansion of the m = 1 branch
        expo = (eps1 + eps_core) / (r * r * eps1 * (eps_core - eps1))
        delta = 2.0 / (r * r * np.sqrt(eps1)) * np.exp(-2.0 * expo)
        w_est = r * np.sqrt(2.0 * delta * np.sqrt(eps1))
        if not np.isfinite(w_est) or w_est > 1e-10:
            raise NoConvergence("no m=1 fiber root found in the guidance window")
        u_root = np.log(w_est)
    w = np.exp(u_root)
    kp = float(np.sqrt(eps1 + (w / r) ** 2))
    k1p = 1j * w / r
    k2p = complex(np.sqrt(vsq - w * w) / r)
    M = _boundary_matrix(abs(m), kp, r, eps1, eps_core, k1p=k1p, k2p=k2p)
    _, sv, vh = np.linalg.svd(M)
    if w > 1e-8 and sv[-1] > 1e-6 * sv[0]:
        raise NoConvergence("boundary matrix has no null vector at the root")
    a1, b1, a2, b2 = vh[-1].conj()
    if m < 0:
        # m -> -m flips the sign of the TE-like (a) coefficients
        a1, a2 = -a1, -a2
    return GuidedMode(m=m, kpar=kp * ctx.k0, R_um=Rg_um, eps_in=complex(eps_core),
                      eps_out=eps1, ctx=ctx, a1=a1, a2=a2, b1=b1, b2=b2,
                      kperp_out_explicit=k1p * ctx.k0)
