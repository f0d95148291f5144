"""Quasistatic emission near a paraboloidal nanotip plus eikonal propagation.

The tip surface is rho(z) = sqrt(w z) (apex at the origin, curvature length
w); the emitter sits on the axis at z = -d.  Rates are evaluated in
parabolic coordinates through v0 = sqrt(w/2), v' = sqrt(v0^2 + 2 d) and are
exact rewrites of the (v0, v') closed forms; in particular the heating rate
keeps the full v'^3 (v'-v0)^3 dependence (its 1/d^3 near-contact shorthand
is recovered for d << w).

An effective rate Gamma~_pl(R) multiplies the emission rate by the eikonal
propagation factor exp(-2 int Im kpar(rho(z)) dz) up to the radius R where
the taper becomes a cylinder.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.special as sp
from scipy.optimize import minimize, minimize_scalar

from .errors import (
    ConstraintInfeasible,
    OutOfValidity,
    QuasistaticViolated,
    ValidityWarning,
)
from .materials import OpticalContext
from .wire_emission import EmissionBudget, alpha_nonrad_coefficient
from .wire_modes import chi_prime, solve_quasistatic_C, solve_tm0

__all__ = [
    "TipGeometry",
    "TipEmission",
    "tip_rates",
    "alpha_pl_tilde_coefficient",
    "eikonal_transmission",
    "adiabatic_check",
    "optimize_tip",
]


@dataclass(frozen=True)
class TipGeometry:
    """Paraboloid rho(z) = sqrt(w z) truncated at radius R, emitter at z = -d.

    Lengths in um; v0 and vprime are the parabolic-coordinate equivalents
    (units sqrt(um)).
    """

    w_um: float
    R_um: float
    d_um: float

    def __post_init__(self):
        if min(self.w_um, self.R_um, self.d_um) <= 0:
            raise ValueError("tip lengths must be positive")

    @property
    def z0_um(self) -> float:
        """Taper length R^2/w at which rho reaches R."""
        return self.R_um**2 / self.w_um

    @property
    def v0(self) -> float:
        return np.sqrt(self.w_um / 2.0)

    @property
    def vprime(self) -> float:
        return np.sqrt(self.v0**2 + 2.0 * self.d_um)


@dataclass(frozen=True)
class TipEmission:
    """Budget plus propagation bookkeeping for one tip configuration."""

    geometry: TipGeometry
    budget: EmissionBudget
    transmission: float
    beta_max: float
    z_c_um: float
    R_c_um: float

    @property
    def p_error_eff(self) -> float:
        """P~_E = 1 - transmission * Gamma_pl/(Gamma_pl + Gamma')."""
        b = self.budget
        return 1.0 - self.transmission * b.gamma_pl / (b.gamma_pl + b.gamma_other)

    @property
    def alpha_pl_tilde(self) -> float:
        return self.budget.alpha_pl


def alpha_pl_tilde_coefficient(ctx: OpticalContext) -> float:
    """alpha~_pl = 24 pi C^3 (eps1-eps2) I1(C) I0(C) / (eps1^{3/2} chi'(C))."""
    eps1, e2r = ctx.eps1, ctx.eps2.real
    C = solve_quasistatic_C(e2r / eps1).real
    chip = chi_prime(C, eps1, e2r).real
    return float(24.0 * np.pi / eps1**1.5 * C**3
                 * (eps1 - e2r) * sp.iv(1, C) * sp.iv(0, C) / chip)


def _rates_parabolic(v0: float, vp: float, ctx: OpticalContext,
                     orientation: str) -> tuple[float, float, float]:
    """(rad, nonrad, pl) in the parabolic (v0, v') parameterization, k0 = 1.

    v0, v' carry sqrt(length) in units of sqrt(1/k0)."""
    eps1 = ctx.eps1
    eps = ctx.eps_ratio
    ratio = (v0 / vp) ** 2
    imfac = ((eps - 1.0) / (eps + 1.0)).imag
    if orientation == "axial":
        grad = abs(1.0 - ratio * (1.0 - eps)) ** 2
        gnr = 3.0 / (8.0 * eps1**1.5) * imfac / (vp**3 * (vp - v0) ** 3)
        C = solve_quasistatic_C(ctx.eps2.real / eps1).real
        chip = chi_prime(C, eps1, ctx.eps2.real).real
        q0 = C / v0
        gpl = (3.0 * np.pi / eps1**1.5 * C**3 / (v0**4 * vp**2)
               * sp.kv(1, q0 * vp) ** 2
               * (eps1 - ctx.eps2.real) * sp.iv(1, C) * sp.iv(0, C) / chip)
    elif orientation == "perpendicular":
        grad = abs(1.0 + (1.0 - eps) / (1.0 + eps) * ratio) ** 2
        gnr = 3.0 / (16.0 * eps1**1.5) * imfac / (vp**3 * (vp - v0) ** 3)
        gpl = 0.0  # no m = 0 pole is excited by a transverse on-axis dipole
    else:
        raise ValueError("orientation must be 'axial' or 'perpendicular'")
    return grad, gnr, gpl


def tip_rates(w_um: float, d_um: float, ctx: OpticalContext,
              orientation: str = "axial") -> EmissionBudget:
    """Emission budget of an on-axis dipole a distance d below the apex.

    Quasistatic validity |k_i| max(w, d) << 1 is warned against softly and
    enforced as a hard error at |k_i| w > 0.5.
    """
    k_mag = max(abs(np.sqrt(complex(ctx.eps1))), abs(np.sqrt(ctx.eps2)))
    if k_mag * ctx.k0 * w_um > 0.5:
        raise QuasistaticViolated("|k_i| w > 0.5: quasistatic rates invalid")
    if k_mag * ctx.k0 * max(w_um, d_um) > 0.1:
        warnings.warn("|k_i| max(w, d) > 0.1: quasistatic accuracy degrades",
                      ValidityWarning, stacklevel=2)
    k0 = ctx.k0
    v0 = np.sqrt(k0 * w_um / 2.0)
    vp = np.sqrt(v0**2 + 2.0 * k0 * d_um)
    grad, gnr, gpl = _rates_parabolic(v0, vp, ctx, orientation)
    return EmissionBudget(gamma_rad=grad, gamma_nonrad=gnr, gamma_pl=gpl,
                          alpha_pl=alpha_pl_tilde_coefficient(ctx),
                          alpha_nonrad=alpha_nonrad_coefficient(ctx))


def tip_rates_wd_shorthand(w_um: float, d_um: float, ctx: OpticalContext
                           ) -> tuple[float, float, float]:
    """Axial rates in the (w, d) shorthand with the 1/d^3 heating rate.

    The heating shorthand is the d << w limit of the parabolic form (they
    differ by [t/(1+2t-sqrt(1+2t))]^3 with t = 2d/w); exposed for tests.
    """
    eps1 = ctx.eps1
    eps = ctx.eps_ratio
    k0 = ctx.k0
    w, d = k0 * w_um, k0 * d_um
    imfac = ((eps - 1.0) / (eps + 1.0)).imag
    grad = abs(1.0 + (eps - 1.0) / (1.0 + 4.0 * d / w)) ** 2
    gnr = 3.0 / (8.0 * eps1**1.5) * imfac / d**3
    C = solve_quasistatic_C(ctx.eps2.real / eps1).real
    gpl = (alpha_pl_tilde_coefficient(ctx) / (w**3 * (1.0 + 4.0 * d / w))
           * sp.kv(1, C * np.sqrt(1.0 + 4.0 * d / w)) ** 2)
    return grad, gnr, gpl


_DISPERSION_CACHE: dict = {}


def _im_kpar_spline(ctx: OpticalContext):
    """Cached spline of Im kpar(rho) (full lossy dispersion), rho in um.

    Valid for k0 rho in [2e-3, 3]; below that the quasistatic tail
    Im C / rho takes over analytically.
    """
    key = (ctx.lambda0_um, ctx.eps1, ctx.eps2)
    entry = _DISPERSION_CACHE.get(key)
    if entry is None:
        from scipy.interpolate import CubicSpline
        rho_s = np.geomspace(2e-3, 3.0, 90) / ctx.k0
        vals = np.array([solve_tm0(r, ctx).kpar.imag for r in rho_s])
        entry = (rho_s[0], rho_s[-1], CubicSpline(np.log(rho_s), vals * rho_s))
        _DISPERSION_CACHE[key] = entry
    return entry


def eikonal_transmission(w_um: float, R_um: float, ctx: OpticalContext,
                         n_nodes: int = 64) -> float:
    """Propagation survival exp(-2 int_0^{z(R)} Im kpar(rho(z)) dz).

    The local wavevector is the full lossy nanowire dispersion at radius
    rho(z); substituting rho = sqrt(w z) turns the integral into
    (2/w) int_0^R Im kpar(rho) rho drho, finite at the apex because
    Im kpar ~ Im C / rho there.
    """
    if ctx.eps2.imag == 0.0:
        return 1.0
    C = solve_quasistatic_C(ctx.eps_ratio)
    z_c = w_um / abs(C) ** 2
    if R_um**2 < w_um * z_c:
        warnings.warn("final radius below the adiabatic crossover R_c",
                      ValidityWarning, stacklevel=2)
    rho_lo, rho_hi, spline = _im_kpar_spline(ctx)
    if R_um > rho_hi:
        raise OutOfValidity("eikonal table covers k0 R <= 3")
    xg, wg = np.polynomial.legendre.leggauss(n_nodes)
    # below rho_lo the quasistatic tail Im kpar = Im C / rho integrates to
    # Im C * rho exactly
    rho_qs = min(rho_lo, 0.2 * R_um)
    nodes = 0.5 * (R_um - rho_qs) * xg + 0.5 * (R_um + rho_qs)
    weights = 0.5 * (R_um - rho_qs) * wg
    acc = C.imag * rho_qs
    # clamped log argument: below the table Im kpar * rho is flat (= Im C)
    acc += float((spline(np.log(np.maximum(nodes, rho_lo))) * weights).sum())
    return float(np.exp(-4.0 * acc / w_um))


def adiabatic_check(w_um: float, z_um: float, ctx: OpticalContext
                    ) -> tuple[float, float, float]:
    """(beta, z_c, R_c): adiabatic parameter d(1/Re kpar)/dz at z, and scales.

    beta is formed by centred differencing of the full lossy dispersion at
    rho(z +- h); z_c = w/|C|^2 and R_c = sqrt(w z_c) mark where the eikonal
    treatment stops being meaningful.
    """
    C = solve_quasistatic_C(ctx.eps_ratio)
    z_c = w_um / abs(C) ** 2
    R_c = np.sqrt(w_um * z_c)
    h = 1e-3 * z_um
    vals = []
    for z in (z_um - h, z_um + h):
        rho = np.sqrt(w_um * z)
        vals.append(1.0 / solve_tm0(rho, ctx).kpar.real)
    beta = abs((vals[1] - vals[0]) / (2.0 * h))
    return float(beta), float(z_c), float(R_c)


def beta_quasistatic(w_um: float, z_um: float, ctx: OpticalContext) -> float:
    """Closed-form beta = sqrt(w/z)/(2 Re C) in the deep nanowire limit."""
    C = solve_quasistatic_C(ctx.eps_ratio)
    return float(np.sqrt(w_um / z_um) / (2.0 * C.real))


def eikonal_loss_below_crossover(ctx: OpticalContext) -> float:
    """Estimated loss 1 - exp(-Im C / |C|) accumulated below z_c."""
    C = solve_quasistatic_C(ctx.eps_ratio)
    return float(1.0 - np.exp(-C.imag / abs(C)))


def tip_emission(w_um: float, d_um: float, R_um: float, ctx: OpticalContext,
                 transmission: float | None = None) -> TipEmission:
    """Assemble the TipEmission record for explicit (w, d, R)."""
    budget = tip_rates(w_um, d_um, ctx)
    if transmission is None:
        transmission = eikonal_transmission(w_um, R_um, ctx)
    C = solve_quasistatic_C(ctx.eps_ratio)
    z_c = w_um / abs(C) ** 2
    R_c = np.sqrt(w_um * z_c)
    z0 = R_um**2 / w_um
    # beta decreases along the taper: its maximum over the trusted stretch
    # [3 z_c, z0] sits at the lower end (or at z0 if the taper is shorter)
    beta = adiabatic_check(w_um, min(3.0 * z_c, z0), ctx)[0]
    return TipEmission(geometry=TipGeometry(w_um, R_um, d_um), budget=budget,
                       transmission=transmission, beta_max=beta,
                       z_c_um=z_c, R_c_um=R_c)


def optimize_tip(R_um: float, ctx: OpticalContext, n_w: int = 24,
                 refine: bool = True) -> tuple[float, float, TipEmission]:
    """(w, d) minimizing the effective error P~_E(R), with R >= 3 R_c enforced.

    The transmission factor depends on w only, so each w needs a single
    eikonal quadrature plus a 1-D search over the emitter position d.
    """
    C = solve_quasistatic_C(ctx.eps_ratio)
    w_cap = R_um * abs(C) / 3.0  # R_c(w) = w/|C| <= R/3
    if w_cap <= 0:
        raise ConstraintInfeasible("no admissible tip curvature")
    w_lo = min(1e-3 / ctx.k0, 0.01 * w_cap)

    def best_d(w_um, transmission):
        def pe(t):
            b = tip_rates(w_um, float(np.exp(t)) * w_um, ctx)
            return 1.0 - transmission * b.gamma_pl / (b.gamma_pl + b.gamma_other)
        res = minimize_scalar(pe, bounds=(np.log(0.05), np.log(60.0)),
                              method="bounded", options={"xatol": 1e-8})
        return float(np.exp(res.x)), float(res.fun)

    best = None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ValidityWarning)
        for w_um in np.geomspace(w_lo, w_cap, n_w):
            T = eikonal_transmission(w_um, R_um, ctx)
            xi, pe = best_d(w_um, T)
            if best is None or pe < best[2]:
                best = (w_um, xi, pe, T)
        w_opt, xi_opt, pe_opt, T_opt = best
        if refine:
            def obj(params):
                lw, lxi = params
                w = float(np.exp(lw))
                if w > w_cap or w <= 0:
                    return 1.0
                T = eikonal_transmission(w, R_um, ctx)
                b = tip_rates(w, float(np.exp(lxi)) * w, ctx)
                return 1.0 - T * b.gamma_pl / (b.gamma_pl + b.gamma_other)
            res = minimize(obj, x0=[np.log(w_opt), np.log(xi_opt)],
                           method="Nelder-Mead",
                           options={"xatol": 1e-6, "fatol": 1e-12,
                                    "maxiter": 200})
            if res.fun < pe_opt:
                w_opt = float(np.exp(res.x[0]))
                xi_opt = float(np.exp(res.x[1]))
                T_opt = eikonal_transmission(w_opt, R_um, ctx)
        d_opt = xi_opt * w_opt
        emission = tip_emission(w_opt, d_opt, R_um, ctx, transmission=T_opt)
    return w_opt, d_opt, emission
