"""Experiment drivers behind the command-line subcommands."""

from __future__ import annotations

import math
import time
import warnings
from datetime import datetime, timezone

import numpy as np

from . import identities as ids
from .comb import (Absorber, axis_gaussian_field, comb_solve, delta_green_direct, mode_equation_residual,
                   recorded_mode, zero_mode_fraction)
from .config import RunConfig
from .errors import InvalidInputError, PrecisionLossError, RegimeWarning
from .fraccalc import mittag_leffler
from .ftse import ftse_solve, ftse_spectral_solution, project
from .greens import (GreensQuery, greens_free_quadrature, greens_laplace, greens_stationary_phase,
                     greens_time, greens_u_integral, i_ab)
from .grids import XGrid
from .hamiltonians import (HamiltonianSpec, ScaledOperator, build_hamiltonian, eigenpairs,
                           load_potential_csv)
from .report import Check, LedgerEntry, RunManifest, Table, check
from .transforms import BromwichContour, kernel_fourier

FTSE_SIGNS = {"minus_i": -1.0, "plus_i": 1.0}


def _manifest(cfg: RunConfig) -> RunManifest:
    return RunManifest(cfg.experiment, cfg.to_json(), cfg.digest(),
                       started=datetime.now(timezone.utc).isoformat(timespec="seconds"))


def _c(z) -> str:
    z = complex(z)
    return f"{z.real:.9g}{z.imag:+.9g}i"


def hamiltonian_from_config(cfg: RunConfig, nx=None, dx=None):
    nx = nx or cfg.nx
    dx = dx or cfg.dx
    grid = XGrid.centered(nx, nx * dx)
    pot = None
    if cfg.hamiltonian == "tabulated":
        pot = load_potential_csv(cfg.potential_csv)
    spec = HamiltonianSpec(cfg.hamiltonian, grid, cfg.hbar, cfg.boundary, pot, cfg.omega)
    return spec, build_hamiltonian(spec)


# identities ----------------------------------------------------------------------

def run_identities(cfg: RunConfig) -> RunManifest:
    m = _manifest(cfg)
    t0 = time.perf_counter()
    a = cfg.alpha
    if a == 1:
        m.add(check("caputo_alpha1_is_derivative", ids.reduction_caputo(), 1e-10))
        m.add(check("integral_alpha1_is_antiderivative", ids.reduction_integral(), 1e-10))
        m.add(check("power_law_alpha1", ids.reduction_power_law(), 1e-12))
        m.add(check("mittag_leffler_alpha1_exp", ids.ml_exponential(), 1e-12))
    else:
        m.add(check("caputo_of_constant", ids.caputo_constant(a), 0.0, "exact zero required"))
        m.add(check("frac_integral_of_constant", ids.frac_integral_constant(a), 1e-10))
        m.add(check("semigroup", ids.semigroup(a, 0.3), 1e-6))
        m.add(check("rl_power_law_interior", ids.rl_power(a), 1e-5))
        m.add(check("caputo_rl_relation", ids.caputo_rl_relation(a), 1e-6))
        order = ids.l1_order(a)
        m.add(check("l1_order_deviation", abs(order - (2 - a)), 0.2, f"order {order:.3f}"))
        m.add(check("laplace_caputo_rule", ids.laplace_caputo_rule(a), 1e-5))
        m.add(check("laplace_convolution_rule", ids.laplace_convolution_rule(a), 1e-5))
        m.add(check("weyl_exp_fixed_point", ids.weyl_exp(a), 1e-4))
        m.add(check("mittag_leffler_alpha1_exp", ids.ml_exponential(), 1e-12))
        ml = complex(mittag_leffler(0.5, -1.0))
        oracle = ids.ml_half_minus_one_oracle()
        m.add(check("mittag_leffler_half_at_minus1", abs(ml - oracle), 1e-6,
                    f"value {ml.real:.10f}, series oracle {oracle:.10f}, quoted 0.427584 off by {abs(ml - 0.427584):.1e}"))
        m.add(check("mittag_leffler_half_vs_erfc", ids.ml_half_vs_erfc(), 1e-10))
        m.add(check("bromwich_pairs", ids.bromwich_pairs(), 1e-8))
        m.add(check("kernel_vs_quadrature", ids.kernel_vs_quadrature(), 1e-8))
        k_d, k_p = kernel_fourier(1.0, 0.0, 1.0, "derived"), kernel_fourier(1.0, 0.0, 1.0, "paper")
        m.ledger.append(LedgerEntry("y-Fourier kernel at s=1, l=0", _c(k_p), _c(k_d),
                                    f"{abs(k_p - k_d) / abs(k_d):.3g} relative; quadrature matches derived to "
                                    f"{m.checks[-1].value:.1e}"))
    m.duration_s = time.perf_counter() - t0
    return m


# equivalence ----------------------------------------------------------------------

def _rel(a, b):
    num = np.linalg.norm(a - b, axis=-1)
    den = np.linalg.norm(b, axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.where(den > 0, num / np.where(den > 0, den, 1), np.where(num > 0, np.inf, 0.0))
    return r


def equivalence_run(cfg: RunConfig, scale: int = 1) -> dict:
    """One comb run plus FTSE runs of both signs; ``scale`` divides dx, dy, dt."""
    nx, ny = cfg.nx * scale, cfg.ny * scale
    dx, dy, dt = cfg.dx / scale, cfg.dy / scale, cfg.dt / scale
    n = cfg.n_steps * scale
    hb = cfg.hbar
    spec, H = hamiltonian_from_config(cfg, nx, dx)
    width = cfg.source_width * dy
    if ny * dy < 8 * max(width, dy):
        raise InvalidInputError("y-domain must exceed 8 initial packet widths")
    absorber = Absorber(cfg.absorber_fraction, cfg.absorber_strength, 2)
    x = spec.x_grid.points
    g = cfg.initial_amplitude * np.exp(-x ** 2 / (2 * cfg.sigma_x ** 2))
    f0 = axis_gaussian_field(g, dx, ny, dy, hb, width=width)
    tr = comb_solve(f0, H, dt, n, cfg.save_stride * scale, absorber=absorber,
                    record_modes=tuple(cfg.modes), abort_on_leak=True)
    m0 = recorded_mode(tr, 0.0)
    errs = {}
    for name, sg in FTSE_SIGNS.items():
        H_eff = ScaledOperator(H, sg * 1j / (math.sqrt(2) * hb))
        ft = ftse_solve(m0.fields[0], H_eff, cfg.alpha, dt, n, hbar=hb)
        errs[name] = _rel(ft.psi, m0.fields)
    return {"traj": tr, "H": H, "errors": errs, "dt": dt, "dy": dy, "ny": ny, "scale": scale}


def run_equivalence(cfg: RunConfig) -> RunManifest:
    m = _manifest(cfg)
    t0 = time.perf_counter()
    ref = equivalence_run(cfg)
    tr, H = ref["traj"], ref["H"]
    stride = cfg.save_stride
    errs = ref["errors"]
    worst = {k: float(np.max(v)) for k, v in errs.items()}
    best = min(worst, key=worst.get) if cfg.ftse_sign == "auto" else cfg.ftse_sign
    other = "plus_i" if best == "minus_i" else "minus_i"
    m.info["resolved_ftse_sign"] = best
    zero = not np.any(tr.snapshots[0].values)
    rows = [[float(t), float(errs["minus_i"][k]), float(errs["plus_i"][k])]
            for k, t in enumerate(tr.step_times) if k % stride == 0]
    m.tables["equivalence_l0"] = Table(["t", "rel_err_minus_i", "rel_err_plus_i"], rows)
    m.add(check("l0_best_sign_error", worst[best], 5e-2, f"sign {best}"))
    ratio = worst[other] / worst[best] if worst[best] > 0 else (math.inf if worst[other] > 0 else 0.0)
    if zero:
        m.add(Check("sign_separation", "pass", 0.0, None, "zero data: all errors vanish"))
    else:
        m.add(check("sign_separation", ratio, 10.0, f"{other} / {best}", below=False))
    if cfg.refine and not zero:
        fine = equivalence_run(cfg, 2)
        wf = float(np.max(fine["errors"][best]))
        m.add(Check("refinement_decreases_error", "pass" if wf < worst[best] else "fail", wf, worst[best],
                    f"{worst[best]:.3e} -> {wf:.3e}"))
        m.info["refined_best_sign_error"] = wf
    # information outside the l = 0 sector
    frac_rows = []
    for t, snap in zip(tr.times, tr.snapshots):
        frac_rows.append([float(t), 1.0 - zero_mode_fraction(snap) if not zero else 0.0])
    m.tables["zero_mode_fraction"] = Table(["t", "norm_fraction_outside_l0"], frac_rows)
    m0 = recorded_mode(tr, 0.0).fields
    if not zero:
        m.add(check("norm_outside_l0_final", frac_rows[-1][1], 1e-3, below=False))
        dn = abs(np.linalg.norm(m0[-1]) - np.linalg.norm(m0[0])) * math.sqrt(tr.snapshots[0].dx)
        m.add(check("l0_norm_not_conserved", dn, 100 * 1e-10, below=False))
    # mode-equation residuals
    kernel_sign = None
    res_rows = []
    for l in cfg.modes:
        mt = recorded_mode(tr, l)
        rep = mode_equation_residual(mt, H, cfg.hbar, tr.axis, "exact_laplace", lattice=(ref["ny"], ref["dy"]))
        for k, s in enumerate(rep.abscissa):
            res_rows.append([float(l), float(s.real), float(s.imag)] + [float(rep.residuals[v][k])
                                                                        for v in ("derived", "paper", "axis", "lattice")])
        if l == 0.0:
            kernel_sign = min(("derived", "paper"), key=rep.summary.get) \
                if cfg.sign_convention == "auto" else cfg.sign_convention
            m.info["resolved_kernel_sign"] = kernel_sign
            m.add(check("exact_laplace_residual_l0", rep.summary[kernel_sign], 1e-4,
                        f"lattice kernel {rep.summary['lattice']:.2e}, un-closed {rep.summary['axis']:.2e}"))
            m.ledger.append(LedgerEntry("y-Fourier kernel sign (mode equation, l=0)", f"{rep.summary['paper']:.3e}",
                                        f"{rep.summary['derived']:.3e}",
                                        f"ratio {rep.summary['paper'] / max(rep.summary['derived'], 1e-300):.1f}; "
                                        f"resolved {kernel_sign}"))
    m.tables["mode_residuals"] = Table(["l", "re_s", "im_s", "derived", "paper", "axis", "lattice"], res_rows)
    mt0 = recorded_mode(tr, 0.0)
    ftse_rep = mode_equation_residual(mt0, H, cfg.hbar, tr.axis, "ftse_l0")
    m.ledger.append(LedgerEntry("l=0 FTSE effective generator sign", f"plus_i residual {ftse_rep.summary['plus_i']:.3e}",
                                f"minus_i residual {ftse_rep.summary['minus_i']:.3e}",
                                f"trajectory errors: minus_i {worst['minus_i']:.3e}, plus_i {worst['plus_i']:.3e}"))
    for l in cfg.modes:
        if l == 0.0:
            continue
        mt = recorded_mode(tr, l)
        pr = mode_equation_residual(mt, H, cfg.hbar, tr.axis, "comb_ftse_printed").summary["printed"]
        closure = mode_equation_residual(mt, H, cfg.hbar, tr.axis, "exact_laplace").summary["derived"]
        m.add(Check(f"comb_ftse_printed_l{l:.4g}", "report", pr, None, "report only"))
        m.ledger.append(LedgerEntry(f"printed comb FTSE, l={l:.4g}", f"time-domain residual {pr:.3e}",
                                    f"Laplace closure residual {closure:.3e}", "report only"))
    m.info["leakage_max"] = float(tr.leakage.max())
    m.info["norm_drift"] = float(np.max(np.abs(tr.norms - tr.norms[0])))
    m.duration_s = time.perf_counter() - t0
    return m


# Green's functions ----------------------------------------------------------------

def run_greens_compare(cfg: RunConfig) -> RunManifest:
    m = _manifest(cfg)
    t0 = time.perf_counter()
    hb = cfg.hbar
    conv = "derived" if cfg.sign_convention == "auto" else cfg.sign_convention
    contour = BromwichContour(n_samples=max(64, cfg.contour_samples + cfg.contour_samples % 2),
                              tol=cfg.contour_tol)
    rows, worst = [], 0.0
    for lam in cfg.lambdas:
        for y in cfg.ys:
            for t in cfg.ts:
                try:
                    a = greens_time(lam, y, t, hb, contour, conv)
                    b = greens_u_integral(GreensQuery(y, t, hb, lam=lam), conv)
                except PrecisionLossError as e:
                    rows.append(["bromwich_vs_u", lam, y, t, math.nan, math.nan, e.estimate])
                    worst = math.inf
                    continue
                err = abs(a.value - b.value) / abs(b.value)
                worst = max(worst, err)
                rows.append(["bromwich", lam, y, t, a.value.real, a.value.imag, a.error_estimate])
                rows.append(["u_integral", lam, y, t, b.value.real, b.value.imag, b.error_estimate])
    m.tables["routes"] = Table(["route", "lambda", "y", "t", "re_G", "im_G", "error_estimate"], rows)
    m.add(check("bromwich_vs_u_integral", worst, 1e-6))
    if 0.0 in cfg.lambdas and 0.0 in cfg.ys:
        for conv_ in ("paper", "derived"):
            for t in cfg.ts:
                g = greens_time(0.0, 0.0, t, hb, contour, conv_).value
                # i hbar / (hbar^2 kappa) inverted with s^{-1/2} <-> 1/sqrt(pi t)
                closed = (1 - 1j) / (2 * math.sqrt(math.pi * hb * t)) * (-1 if conv_ == "paper" else 1)
                m.add(check(f"closed_form_{conv_}_t{t:g}", abs(g - closed) / abs(closed), 1e-6))
        m.ledger.append(LedgerEntry("Laplace-domain Green function at lambda=0, y=0, s=1",
                                    _c(greens_laplace(0, 0, 1, 1, "paper")), _c(greens_laplace(0, 0, 1, 1, "derived")),
                                    "overall sign; the derived form solves the sourced equation (direct simulation)"))
    if cfg.direct_check:
        drows, dworst = [], 0.0
        for lam in cfg.lambdas:
            G = delta_green_direct(lam, np.array(cfg.ys), np.array(cfg.ts), hb)
            for i, t in enumerate(cfg.ts):
                for j, y in enumerate(cfg.ys):
                    ref = greens_u_integral(GreensQuery(y, t, hb, lam=lam), "derived").value
                    e = abs(G[i, j] - ref) / abs(ref)
                    dworst = max(dworst, e)
                    drows.append([lam, y, t, G[i, j].real, G[i, j].imag, e])
        m.tables["direct_simulation"] = Table(["lambda", "y", "t", "re_G", "im_G", "rel_err_vs_u_integral"], drows)
        m.add(check("direct_simulation_vs_u_integral", dworst, 1e-2))
    # I(A, B)
    irows, iworst = [], 0.0
    for A in (0.1, 0.5, 1.0, 3.0, 10.0):
        for B in (0.1, 0.5, 1.0, 3.0, 10.0):
            r = i_ab(A, B)
            e = abs(r.value - r.closed_form) / abs(r.closed_form)
            iworst = max(iworst, e)
            irows.append([A, B, r.value.real, r.closed_form.real, r.paper_form.real, e])
    m.tables["i_ab"] = Table(["A", "B", "quadrature", "bessel_k_form", "printed_form", "rel_err"], irows)
    m.add(check("i_ab_vs_bessel_k", iworst, 1e-8))
    r11 = i_ab(1, 1)
    m.ledger.append(LedgerEntry("I(A,B) closed form at A=B=1", _c(r11.paper_form), _c(r11.closed_form),
                                f"quadrature {r11.value.real:.10f}; printed off by "
                                f"{abs(r11.paper_form - r11.value) / abs(r11.value):.3g} relative"))
    # stationary phase
    srows, errs = [], []
    d = cfg.dx_abs
    for ht in cfg.sp_times:
        t = ht / hb
        y = ht  # keeps the stationary point xi0 = |y|/(hbar t) = 1 fixed
        q = greens_free_quadrature(d, y, t, hb).value
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RegimeWarning)
            g = greens_stationary_phase(d, y, t, hb, "generic").value
            p = greens_stationary_phase(d, y, t, hb, "paper_printed").value
        e = abs(g - q) / abs(q)
        errs.append(e)
        srows.append([ht, y, q.real, q.imag, g.real, g.imag, p.real, p.imag, e, abs(p - q) / abs(q)])
        m.ledger.append(LedgerEntry(f"long-time free Green function, hbar t={ht:g}", _c(p), _c(g),
                                    f"vs quadrature: printed {abs(p - q) / abs(q):.3g}, generic {e:.3g}"))
    m.tables["stationary_phase"] = Table(["hbar_t", "y", "re_quad", "im_quad", "re_generic", "im_generic",
                                          "re_printed", "im_printed", "rel_err_generic", "rel_err_printed"], srows)
    mono = all(b < a for a, b in zip(errs, errs[1:]))
    m.add(Check("stationary_phase_monotone", "pass" if mono else "fail", errs[-1], None,
                " > ".join(f"{e:.2e}" for e in errs)))
    m.duration_s = time.perf_counter() - t0
    return m


# convergence ----------------------------------------------------------------------

def run_convergence(cfg: RunConfig) -> RunManifest:
    """Order of the FTSE stepper against the Mittag-Leffler solution and of the comb splitting."""
    m = _manifest(cfg)
    t0 = time.perf_counter()
    a = cfg.alpha
    grid = XGrid.centered(64, 64 * cfg.dx)
    spec = HamiltonianSpec(cfg.hamiltonian if cfg.hamiltonian != "tabulated" else "harmonic", grid, cfg.hbar,
                           cfg.boundary, omega=cfg.omega)
    H = build_hamiltonian(spec)
    pairs = eigenpairs(spec, 64)
    psi0 = np.exp(-grid.points ** 2 / 2).astype(complex)
    c = project(pairs, psi0)
    scaling = -1j / math.sqrt(2) if a < 1 else 1.0
    H_eff = ScaledOperator(H, scaling)
    exact = ftse_spectral_solution(pairs, c, a, cfg.hbar, 1.0, scaling)
    rows, errs, dts = [], [], []
    for k in range(4):
        dt = 0.02 / 2 ** k
        tr = ftse_solve(psi0, H_eff, a, dt, int(round(1 / dt)), hbar=cfg.hbar, save_stride=int(round(1 / dt)))
        e = float(np.linalg.norm(tr.psi[-1] - exact) / np.linalg.norm(exact))
        rows.append(["ftse", dt, e])
        errs.append(e)
        dts.append(dt)
    order = float(np.polyfit(np.log(dts), np.log(errs), 1)[0])
    target = 2 - a if a < 1 else 2.0
    m.add(check("ftse_order_deviation", abs(order - target), 0.3, f"order {order:.3f}, expected {target:.2f}"))
    # comb splitting self-convergence
    g2 = XGrid.centered(64, 20.0)
    H2 = build_hamiltonian(HamiltonianSpec("free", g2, cfg.hbar))
    f0 = axis_gaussian_field(np.exp(-g2.points ** 2 / 2), g2.step, 128, 40 / 128, cfg.hbar, width=1.0)
    finals = []
    for k in range(4):
        dt = 0.02 / 2 ** k
        n = int(round(0.5 / dt))
        finals.append(comb_solve(f0, H2, dt, n, n).snapshots[-1].values)
    diffs = [np.linalg.norm(finals[k] - finals[k + 1]) / np.linalg.norm(finals[-1]) for k in range(3)]
    corder = float(np.log2(diffs[0] / diffs[1]) + np.log2(diffs[1] / diffs[2])) / 2
    for k, dd in enumerate(diffs):
        rows.append(["comb_self", 0.02 / 2 ** k, float(dd)])
    m.add(check("comb_splitting_order_deviation", abs(corder - 2), 0.3, f"order {corder:.3f}"))
    l1 = ids.l1_order(a) if a < 1 else 2.0
    m.add(check("l1_scheme_order_deviation", abs(l1 - (2 - a)) if a < 1 else 0.0, 0.2, f"order {l1:.3f}"))
    m.tables["convergence"] = Table(["study", "dt", "error"], rows)
    m.duration_s = time.perf_counter() - t0
    return m


RUNNERS = {
    "identities": run_identities,
    "equivalence": run_equivalence,
    "greens_compare": run_greens_compare,
    "convergence": run_convergence,
}
