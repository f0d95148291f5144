"""Coupled-mode transfer from a nanostructure plasmon to a dielectric fiber.

Three co-propagating modes are evolved: the TM0 plasmon of the wire/tip
(complex kpar, losses exact) and the two degenerate m = +-1 fundamental
modes of a dielectric waveguide whose axis is displaced by ``gap``.

Everything runs in scaled units (lengths * k0, H fields absorbing
1/(omega mu0)), in which the coupled-mode system reads

    P(z) dC/dz = i K(z) C,     P/K_{mu,nu}(z) = e^{i(k_nu - k_mu^*) z} *
                               (z-independent overlap integral).

Overlap integrals reduce to integrals over the two structure disks: the
permittivity-perturbation overlaps K by definition, and the cross-power
overlaps P through the Lorentz-reciprocity identity

    Pi_{mu,nu} = int E_nu . E_mu^* (eps_nu - eps_mu^*) dA / (k_nu - k_mu^*),

whose right-hand side is supported on the disks only.  Diagonal Pi entries
are normalized to 1.  The projection amplitudes additionally need the
one-sided overlaps A[g, w] = int (E_w x H_g^*) . z dA, which are computed
by a two-patch polar quadrature of the full transverse plane.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import solve_ivp

from .errors import QuadratureNotConverged, SingularOverlapMatrix, StepControlFailure
from .materials import OpticalContext
from .wire_modes import GuidedMode, solve_fiber_fundamental, solve_tm0

__all__ = [
    "CoupledModeSystem",
    "TransferResult",
    "build_overlaps",
    "integrate_coupled_modes",
    "photon_efficiency",
]


# ----------------------------------------------------------------------
# quadrature helpers (scaled transverse coordinates)
# ----------------------------------------------------------------------

def _disk_nodes(center_x: float, radius: float, n_r: int, n_phi: int):
    """Polar tensor grid on a disk centred at (center_x, 0)."""
    xg, wg = np.polynomial.legendre.leggauss(n_r)
    r = 0.5 * radius * (xg + 1.0)
    wr = 0.5 * radius * wg * r
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    wphi = 2.0 * np.pi / n_phi
    R, PHI = np.meshgrid(r, phi, indexing="ij")
    X = center_x + R * np.cos(PHI)
    Y = R * np.sin(PHI)
    W = np.broadcast_to((wr * wphi)[:, None], R.shape)
    return X.ravel(), Y.ravel(), W.ravel()


def _disk_integral(f, center_x: float, radius: float, rtol: float = 1e-4,
                   n0: int = 24) -> complex:
    """Integral of ``f(x, y)`` over a disk with node-doubling convergence."""
    prev = None
    n_r, n_phi = n0, 2 * n0
    for _ in range(5):
        X, Y, W = _disk_nodes(center_x, radius, n_r, n_phi)
        val = complex((f(X, Y) * W).sum())
        if prev is not None and abs(val - prev) <= rtol * max(abs(val), 1e-30):
            return val
        prev = val
        n_r, n_phi = int(1.5 * n_r), int(1.5 * n_phi)
    raise QuadratureNotConverged("disk overlap did not converge")


def _halfplane_polar_nodes(center_x: float, x_split: float, side: int,
                           r_inner: float, r_decay: float,
                           n_r: int, n_phi: int):
    """Polar nodes/weights covering the half-plane side*(x - x_split) < 0.

    Polar grid around (center_x, 0) with rays clipped at the split line;
    radial panels split at ``r_inner`` (the field kink at the structure
    surface) and at the decay scale ``r_decay``.
    """
    phi = np.pi * (np.arange(n_phi) + 0.5) / n_phi * 2.0 - np.pi
    wphi = 2.0 * np.pi / n_phi
    xg, wg = np.polynomial.legendre.leggauss(n_r)
    rmax_cap = r_inner + 14.0 * r_decay
    xs, ys, ws = [], [], []
    for p in phi:
        c = np.cos(p)
        t = side * (x_split - center_x) / (side * c) if side * c > 1e-12 else np.inf
        rmax = min(rmax_cap, t)
        if rmax <= 0:
            continue
        breaks = [b for b in (r_inner, r_inner + 2.0 * r_decay) if b < rmax]
        edges = np.array([0.0, *breaks, rmax])
        for a, b in zip(edges[:-1], edges[1:]):
            r = 0.5 * (b - a) * xg + 0.5 * (a + b)
            xs.append(center_x + r * c)
            ys.append(r * np.sin(p))
            ws.append((0.5 * (b - a) * wg) * r * wphi)
    return (np.concatenate(xs), np.concatenate(ys), np.concatenate(ws))


def _plane_cross_power(mode_a: GuidedMode, mode_b: GuidedMode,
                       gap_s: float, rtol: float = 2e-4) -> complex:
    """A = int (E_a x H_b^*) . z dA over the whole plane (scaled units).

    mode_a centred at the origin, mode_b at (gap_s, 0).  Split at the
    midline between the axes; each half integrated in polar coordinates
    around its own axis (the point singularities at the axes are integrable
    and killed by the polar Jacobian).
    """
    kap_a = max(abs(mode_a.kappa_out) / mode_a.ctx.k0, 0.05)
    kap_b = max(abs(mode_b.kappa_out) / mode_b.ctx.k0, 0.05)

    def integrand(x, y):
        exa, eya, _, _, _, _ = mode_a.fields_cart_scaled(x, y)
        _, _, _, hxb, hyb, hzb = mode_b.fields_cart_scaled(x - gap_s, y)
        # (E_a x H_b^*) . z = Ex Hy^* - Ey Hx^*
        return exa * np.conj(hyb) - eya * np.conj(hxb)

    x_split = 0.5 * gap_s
    prev = None
    n_r, n_phi = 40, 56
    decay = 1.0 / min(kap_a, kap_b)
    for _ in range(4):
        val = 0.0 + 0.0j
        for cx, side, r_in in ((0.0, +1, mode_a.r), (gap_s, -1, mode_b.r)):
            xs, ys, ws = _halfplane_polar_nodes(cx, x_split, side, r_in,
                                                decay, n_r, n_phi)
            val += complex((integrand(xs, ys) * ws).sum())
        if prev is not None and abs(val - prev) <= rtol * max(abs(val), 1e-25):
            return val
        prev = val
        n_r, n_phi = int(1.4 * n_r), int(1.4 * n_phi)
    raise QuadratureNotConverged("plane cross-power overlap did not converge")


def _self_power(mode: GuidedMode) -> float:
    """2 Re int (E x H^*) . z dA of one mode about its own axis (scaled)."""
    xg, wg = np.polynomial.legendre.leggauss(160)
    kap = abs(mode.kappa_out) / mode.ctx.k0
    if kap < 1e-6:
        kap = 1e-6
    rmax = mode.r + 40.0 / kap
    total = 0.0
    for a, b in ((0.0, mode.r), (mode.r, rmax)):
        r = 0.5 * (b - a) * xg + 0.5 * (a + b)
        wr = 0.5 * (b - a) * wg
        erho, ephi, _, hrho, hphi, _ = mode.fields_cyl_scaled(r)
        sz = erho * np.conj(hphi) - ephi * np.conj(hrho)
        total += float((2.0 * np.real(sz) * 2.0 * np.pi * r * wr).sum())
    return total


# ----------------------------------------------------------------------
# system assembly
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class CoupledModeSystem:
    """Plasmon + two degenerate fiber modes with their overlap matrices.

    ``Pi``/``kappa`` are the z-independent parts; the full matrices carry
    the phase factors e^{i(k_nu - k_mu^*) z} (``P_at``/``K_at``).  All in
    scaled units (lengths * k0).
    """

    modes: tuple[GuidedMode, GuidedMode, GuidedMode]
    gap_um: float
    Pi: np.ndarray          # 3x3, diagonal = 1
    kappa: np.ndarray       # 3x3 permittivity-perturbation overlaps
    A_proj: np.ndarray      # one-sided overlaps A[g_i, nu], shape (2, 3)

    @property
    def kvec(self) -> np.ndarray:
        """Scaled propagation constants (kpar/k0) of the three modes."""
        return np.array([m.kp for m in self.modes])

    def P_at(self, z_s: float) -> np.ndarray:
        k = self.kvec
        ph = np.exp(1j * (k[None, :] - np.conj(k)[:, None]) * z_s)
        return self.Pi * ph

    def K_at(self, z_s: float) -> np.ndarray:
        k = self.kvec
        ph = np.exp(1j * (k[None, :] - np.conj(k)[:, None]) * z_s)
        return self.kappa * ph


@dataclass(frozen=True)
class TransferResult:
    """Amplitude trajectories and the projected single-photon efficiency."""

    z_um: np.ndarray
    C: np.ndarray             # shape (3, nz): plasmon, fiber +1, fiber -1
    c_proj: np.ndarray        # shape (2, nz): projected fiber amplitudes
    efficiency: float         # max_z 2 |c_proj|^2
    L_ex_um: float            # argmax position (coupling length)

    def efficiency_at(self, iz: int) -> float:
        return float(2.0 * abs(self.c_proj[0, iz]) ** 2)


def build_overlaps(structure_mode: GuidedMode, fiber_mode: GuidedMode,
                   gap_um: float) -> CoupledModeSystem:
    """Assemble the 3x3 coupled-mode system for one geometry.

    ``structure_mode`` is the (possibly lossy) nanostructure mode centred at
    the origin; ``fiber_mode`` one of the degenerate m = +-1 fiber modes,
    centred at (gap, 0).  Both are renormalized so the diagonal power
    overlaps equal one.
    """
    ctx = structure_mode.ctx
    k0 = ctx.k0
    gap_s = k0 * gap_um
    if gap_um <= structure_mode.R_um + fiber_mode.R_um:
        raise ValueError("axis separation must exceed the sum of radii")

    w = structure_mode.scale_coeffs(1.0 / np.sqrt(_self_power(structure_mode)))
    gplus = fiber_mode if fiber_mode.m > 0 else replace(
        fiber_mode, m=abs(fiber_mode.m))
    gplus = gplus.scale_coeffs(1.0 / np.sqrt(_self_power(gplus)))
    gminus = replace(gplus, m=-gplus.m, a1=-gplus.a1, a2=-gplus.a2)
    modes = (w, gplus, gminus)

    eps_w = structure_mode.eps_in
    eps_g = fiber_mode.eps_in
    eps1 = ctx.eps1
    r_w = structure_mode.r
    r_g = fiber_mode.r

    def e_dot(mode_nu, mode_mu, x, y):
        # E_nu . E_mu^* with each mode in its own frame
        off_nu = gap_s if mode_nu is not w else 0.0
        off_mu = gap_s if mode_mu is not w else 0.0
        exn, eyn, ezn, _, _, _ = mode_nu.fields_cart_scaled(x - off_nu, y)
        exm, eym, ezm, _, _, _ = mode_mu.fields_cart_scaled(x - off_mu, y)
        return exn * np.conj(exm) + eyn * np.conj(eym) + ezn * np.conj(ezm)

    def disk_dot(mode_nu, mode_mu, which: str) -> complex:
        if which == "wire":
            return _disk_integral(lambda x, y: e_dot(mode_nu, mode_mu, x, y),
                                  0.0, r_w)
        return _disk_integral(lambda x, y: e_dot(mode_nu, mode_mu, x, y),
                              gap_s, r_g)

    # K_{mu,nu} = int E_nu . E_mu^* (eps_T - eps_nu): the perturbation seen by
    # mode nu is the *other* structure's cross-section
    kappa = np.zeros((3, 3), dtype=complex)
    for i, mu in enumerate(modes):
        for j, nu in enumerate(modes):
            if nu is w:
                kappa[i, j] = (eps_g - eps1) * disk_dot(nu, mu, "fiber")
            else:
                kappa[i, j] = (eps_w - eps1) * disk_dot(nu, mu, "wire")

    # Pi off-diagonals from the reciprocity identity (disk-supported); if the
    # two propagation constants coincide (0/0) fall back to the direct
    # whole-plane power quadrature
    Pi = np.eye(3, dtype=complex)
    kv = [m.kp for m in modes]
    for i, j, mu, nu in ((0, 1, w, gplus), (0, 2, w, gminus),
                         (1, 0, gplus, w), (2, 0, gminus, w)):
        dk = kv[j] - np.conj(kv[i])
        if abs(dk) > 1e-9:
            num = ((eps1 - np.conj(eps_w if mu is w else eps_g))
                   * disk_dot(nu, mu, "wire" if mu is w else "fiber")
                   + ((eps_g if nu is not w else eps_w) - eps1)
                   * disk_dot(nu, mu, "fiber" if nu is not w else "wire"))
            Pi[i, j] = num / dk
        else:
            # Pi = A[mu,nu] + conj(A[nu,mu]); translation invariance lets the
            # first-listed mode sit at the origin in both quadratures
            a_part = _plane_cross_power(nu, mu, gap_s)
            b_part = np.conj(_plane_cross_power(mu, nu, gap_s))
            Pi[i, j] = a_part + b_part
    # the two degenerate fiber modes are power-orthogonal exactly

    # one-sided projections A[g_i, nu] = int (E_nu x H_{g_i}^*) . z
    A = np.zeros((2, 3), dtype=complex)
    A[0, 1] = A[1, 2] = 0.5
    for i, g in ((0, gplus), (1, gminus)):
        A[i, 0] = _plane_cross_power(w, g, gap_s)
    return CoupledModeSystem(modes=modes, gap_um=gap_um, Pi=Pi, kappa=kappa,
                             A_proj=A)


def integrate_coupled_modes(system: CoupledModeSystem, C_init: np.ndarray,
                            L_um: float, n_out: int = 400,
                            rtol: float = 1e-10) -> TransferResult:
    """Evolve P(z) dC/dz = i K(z) C over [0, L] and project onto the fiber.

    Controlled-step DOP853 on the slowly varying amplitudes; the projected
    amplitudes c_proj include the residual plasmon cross term.
    """
    ctx = system.modes[0].ctx
    L_s = ctx.k0 * L_um
    Pi = system.Pi
    cond = np.linalg.cond(Pi)
    if not np.isfinite(cond) or cond > 1e12:
        raise SingularOverlapMatrix(f"cond(P) = {cond:.3g}")
    kv = system.kvec
    M = np.linalg.solve(Pi, system.kappa)

    def rhs(z, cvec):
        # P(z)^{-1} K(z) = D(z)^{-1} (Pi^{-1} kappa) D(z), D = diag(e^{i k z})
        c = cvec[:3] + 1j * cvec[3:]
        ph = np.exp(1j * kv * z)
        dc = 1j * (M @ (ph * c)) / ph
        return np.concatenate([dc.real, dc.imag])

    z_eval = np.linspace(0.0, L_s, n_out)
    y0 = np.concatenate([np.asarray(C_init, complex).real,
                         np.asarray(C_init, complex).imag])
    sol = solve_ivp(rhs, (0.0, L_s), y0, t_eval=z_eval, method="DOP853",
                    rtol=rtol, atol=1e-12)
    if not sol.success:
        raise StepControlFailure(sol.message)
    C = sol.y[:3] + 1j * sol.y[3:]

    # projections: c_proj,i(z) = 2 sum_nu C_nu e^{i(k_nu - k_gi) z} A[i, nu]
    c_proj = np.zeros((2, z_eval.size), dtype=complex)
    for i in range(2):
        kg = kv[i + 1]
        for nu in range(3):
            c_proj[i] += (2.0 * system.A_proj[i, nu] * C[nu]
                          * np.exp(1j * (kv[nu] - kg) * z_eval))
    eff = 2.0 * np.abs(c_proj[0]) ** 2
    imax = int(np.argmax(eff))
    return TransferResult(z_um=z_eval / ctx.k0, C=C, c_proj=c_proj,
                          efficiency=float(eff[imax]),
                          L_ex_um=float(z_eval[imax] / ctx.k0))


def guided_power(system: CoupledModeSystem, result: TransferResult) -> np.ndarray:
    """sum_{mu,nu} C_mu^* C_nu P_{mu,nu}(z) along the trajectory."""
    out = np.empty(result.z_um.size)
    k0 = system.modes[0].ctx.k0
    for i, z in enumerate(result.z_um * k0):
        c = result.C[:, i]
        out[i] = float(np.real(np.conj(c) @ system.P_at(z) @ c))
    return out


def _propagate_eig(system: CoupledModeSystem, C_init: np.ndarray,
                   z_s: np.ndarray) -> np.ndarray:
    """Exact trajectories via eigendecomposition of the constant matrix.

    In the full-amplitude frame C~ = e^{i k z} C the system is
    dC~/dz = i (diag(k) + Pi^{-1} kappa) C~; diagonalize once and evaluate
    at every z.  Returns C (slow frame), shape (3, nz).
    """
    kv = system.kvec
    M = np.diag(kv) + np.linalg.solve(system.Pi, system.kappa)
    lam, V = np.linalg.eig(M)
    a = np.linalg.solve(V, np.asarray(C_init, complex))
    Ct = V @ (np.exp(1j * lam[:, None] * z_s[None, :]) * a[:, None])
    return Ct * np.exp(-1j * kv[:, None] * z_s[None, :])


def _projected_efficiency(system: CoupledModeSystem, C: np.ndarray,
                          z_s: np.ndarray) -> np.ndarray:
    """2 |c_proj,1(z)|^2 for a trajectory in the slow frame."""
    kv = system.kvec
    c_proj = np.zeros(z_s.size, dtype=complex)
    for nu in range(3):
        c_proj += (2.0 * system.A_proj[0, nu] * C[nu]
                   * np.exp(1j * (kv[nu] - kv[1]) * z_s))
    return 2.0 * np.abs(c_proj) ** 2


def photon_efficiency(R_um: float, ctx: OpticalContext, structure: str = "tip",
                      Rg_grid=None, gap_grid=None, L_max_lpl: float = 16.0,
                      eps_core: float = 13.0, inject: float | None = None,
                      ) -> dict:
    """Optimized single-photon generation efficiency 2 |C_proj|^2.

    Maximizes over the fiber radius Rg, the axis gap and the coupling
    length; the injected amplitude is sqrt(1 - P_E~) from the structure's
    optimized budget (``inject`` overrides, e.g. for idealized tests).
    For the wire, the reported coupling length is doubled (both
    propagation directions, assumed perfectly recombined).
    """
    from .tip_emission import optimize_tip
    from .wire_emission import optimize_emitter_wire

    if inject is None:
        if structure == "tip":
            _, _, em = optimize_tip(R_um, ctx)
            inject = 1.0 - em.p_error_eff
        elif structure == "wire":
            _, budget = optimize_emitter_wire(R_um, ctx)
            inject = 1.0 - budget.p_error
        else:
            raise ValueError("structure must be 'wire' or 'tip'")
    plasmon = solve_tm0(R_um, ctx)
    lpl = plasmon.lambda_pl_um
    if Rg_grid is None:
        Rg_grid = np.linspace(0.3, 1.0, 10) / ctx.k0

    best = None
    c0 = np.array([np.sqrt(inject), 0.0, 0.0], dtype=complex)
    z_s = np.linspace(0.0, ctx.k0 * L_max_lpl * lpl, 600)
    for Rg in np.atleast_1d(Rg_grid):
        fiber = solve_fiber_fundamental(Rg, eps_core, ctx)
        if abs(fiber.kappa_out) / ctx.k0 < 1e-3:
            continue  # fiber mode essentially unbound: no transfer possible
        if gap_grid is not None:
            gaps = gap_grid
        else:
            base = R_um + Rg
            kap = min(abs(plasmon.kappa_out), abs(fiber.kappa_out).real)
            gaps = base + np.array([0.05, 0.15, 0.3, 0.6, 1.2]) / kap
        for gap in np.atleast_1d(gaps):
            if gap <= R_um + Rg:
                continue
            system = build_overlaps(plasmon, fiber, gap)
            C = _propagate_eig(system, c0, z_s)
            eff = _projected_efficiency(system, C, z_s)
            # ansatz admissibility: the projected efficiency must stay below
            # the actual guided power (superposed unperturbed modes stop
            # being trustworthy at very strong overlap)
            power = np.array([np.real(np.conj(C[:, i]) @ system.P_at(z) @ C[:, i])
                              for i, z in enumerate(z_s)])
            if np.any(eff > power + 1e-6):
                continue
            imax = int(np.argmax(eff))
            if best is None or eff[imax] > best["efficiency"]:
                lex = z_s[imax] / ctx.k0
                best = {
                    "efficiency": float(eff[imax]),
                    "Rg_um": float(Rg),
                    "gap_um": float(gap),
                    "L_ex_um": lex * (2.0 if structure == "wire" else 1.0),
                    "L_ex_over_lpl": lex / lpl
                    * (2.0 if structure == "wire" else 1.0),
                    "inject": float(inject),
                    "fiber_kp_over_k0": float(fiber.kp.real),
                }
    if best is None:
        raise SingularOverlapMatrix("no admissible (Rg, gap) candidate")
    return best
