"""Acceptance criteria AC1-AC10, one test each.

Every test prints a single ``[ACn] PASS|FAIL: ...`` line (outside pytest's
capture) and then asserts the criterion at its stated tolerance.
"""
import json
import time

import numpy as np
import pytest

from superliouville import cli
from superliouville.blowup import SequenceSpec, detect_concentration, generate_sequence, local_mass
from superliouville.clifford2d import norm2
from superliouville.diagnostics import (charge_alpha, compute_T, green_convolve, holomorphy_residual,
                                        asymptotic_fit_u, spinor_asymptotic_check, spinor_charge_xi0,
                                        stress_tensor)
from superliouville.geometry import (ConformalMap, Grid, SolutionPair, conformal_transform,
                                     flat_metric, kelvin_transform)
from superliouville.operators import energy_E, residual, residual_norms
from superliouville.quadrature import annulus_mask, integrate
from superliouville.solutions import family
from superliouville.solver import Layout, SolverConfig, linearize, newton_solve

FOUR_PI = 4 * np.pi
LEVELS = (129, 257, 513)


@pytest.fixture
def verdict(capsys):
    def check(tag, ok, detail):
        with capsys.disabled():
            print(f"\n[{tag}] {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, detail

    return check


def _ratios(vals):
    return [a / b for a, b in zip(vals, vals[1:])]


def _rate_ok(vals, exact=1e-12):
    """4x +- 20% per halving, unless the values are at rounding level."""
    if max(vals) < exact:
        return True
    return all(3.2 <= r <= 4.8 for r in _ratios(vals))


def test_ac1_exact_solution_residuals(verdict):
    t0 = time.perf_counter()
    lines, ok = [], True
    for name in ("scalar_bubble", "spinor_bubble", "sphere_killing"):
        ru, rp = zip(*(residual_norms(family(name, Grid.square(8.0, n))) for n in LEVELS))
        rates = _rate_ok(ru) and _rate_ok(rp)
        absolute = ru[-1] < 1e-3 and rp[-1] < 1e-3
        ok &= rates and absolute
        lines.append(f"{name}: r_u={['%.2e' % v for v in ru]} r_psi={['%.2e' % v for v in rp]} "
                     f"rates={'ok' if rates else 'BAD'} abs@513={'ok' if absolute else 'BAD'}")
    dt = time.perf_counter() - t0
    ok &= dt < 30
    verdict("AC1", ok, "; ".join(lines) + f"; {dt:.1f}s")


def test_ac2_charge_quantization(verdict):
    t0 = time.perf_counter()
    g = Grid.square(100.0, 513)
    alpha = charge_alpha(family("spinor_bubble", g), tail="fitted")
    s = family("scalar_bubble", g)
    e2 = float(integrate(np.exp(2 * s.u), g))
    dt = time.perf_counter() - t0
    ok = (abs(alpha / FOUR_PI - 1) <= 0.01 and abs(2 * e2 / FOUR_PI - 1) <= 0.01
          and abs(e2 / (2 * np.pi) - 1) <= 0.01 and dt < 60)
    verdict("AC2", ok, f"alpha/4pi={alpha / FOUR_PI:.6f}, int 2e^2u/4pi={2 * e2 / FOUR_PI:.6f}, "
                       f"int e^2u/2pi={e2 / (2 * np.pi):.6f}, {dt:.1f}s")


def test_ac3_conformal_invariance(verdict):
    p = family("spinor_bubble", Grid.square(8.0, 513))
    # common truncation: [-4,4]^2 for the original, its preimage for the image
    E0 = energy_E(p.crop((-4, 4, -4, 4)))
    Ed = energy_E(conformal_transform(p, ConformalMap.dilation(2.0), grid=Grid.square(2.0, 301)))
    b = (0.3, -0.2)
    tgrid = Grid((-4 - b[0], -4 - b[1]), 8 / 400, 401, 401)
    Et = energy_E(conformal_transform(p, ConformalMap.translation(b), grid=tgrid))
    rd, rt = abs(E0 - Ed) / abs(E0), abs(E0 - Et) / abs(E0)
    verdict("AC3", rd <= 1e-3 and rt <= 1e-3,
            f"E={E0:.6f}, dilation rel diff {rd:.2e}, translation rel diff {rt:.2e}")


def test_ac4_holomorphic_quantity(verdict):
    lines, ok = [], True
    for name in ("scalar_bubble", "spinor_bubble"):
        tm, hr, div = [], [], []
        for n in LEVELS:
            p = family(name, Grid.square(8.0, n))
            T = compute_T(p)
            tm.append(float(np.abs(T)[1:-1, 1:-1].max()))
            hr.append(holomorphy_residual(p, T=T))
            st = stress_tensor(p)
            d1, d2 = st.divergence(p.grid)
            div.append(float(np.hypot(d1, d2)[2:-2, 2:-2].max()))
            if n == LEVELS[-1]:
                trace = float(np.abs(st.T11 + st.T22).max())
                quarter = float(np.abs(0.25 * (st.T11 - 1j * st.T12) - T).max())
        good = (_rate_ok(tm) and _rate_ok(hr) and tm[-1] < 1e-4 and hr[-1] < 1e-4
                and trace < 1e-10 and _rate_ok(div) and quarter < 1e-4)
        ok &= good
        lines.append(f"{name}: T_max={['%.2e' % v for v in tm]} holo={['%.2e' % v for v in hr]} "
                     f"div={['%.2e' % v for v in div]} |T11+T22|={trace:.1e} quarter-diff={quarter:.1e}")
    g = Grid.square(8.0, 257)
    X, Y = g.coords()
    rng = np.random.default_rng(7)
    u = sum(rng.normal() * np.sin(rng.uniform(0.3, 1.5) * X + rng.uniform(0, 6)) *
            np.cos(rng.uniform(0.3, 1.5) * Y + rng.uniform(0, 6)) for _ in range(6))
    psi = np.stack([np.cos(0.7 * X) * (1 + 0.5j * Y) / (1 + X * X), 0.3 * np.exp(-0.1 * (X * X + Y * Y)) + 0j])
    junk = SolutionPair(g, flat_metric(g), u, psi)
    neg_t = float(np.abs(compute_T(junk))[1:-1, 1:-1].max())
    neg_h = holomorphy_residual(junk, gate=None)
    ok &= neg_t > 0.1 and neg_h > 0.1
    lines.append(f"control: T_max={neg_t:.2e} holo={neg_h:.2e}")
    verdict("AC4", ok, "; ".join(lines))


def test_ac5_asymptotics(verdict):
    p = family("spinor_bubble", Grid.square(100.0, 513))
    slope = asymptotic_fit_u(p, (20, 80))[0]
    checks = [spinor_asymptotic_check(p, (a, 2 * a)) for a in (5, 10, 20, 40)]
    halving = _ratios(checks)
    xi = float(np.sqrt(norm2(spinor_charge_xi0(p))))
    ok = (abs(slope / -2 - 1) <= 0.02 and all(1.4 <= r <= 2.6 for r in halving)
          and abs(xi / (2 * np.sqrt(2) * np.pi) - 1) <= 0.02)
    verdict("AC5", ok, f"slope={slope:.5f}, check={['%.4f' % c for c in checks]}, "
                       f"ratios={['%.3f' % r for r in halving]}, |xi0|/(2 sqrt2 pi)={xi / (2 * np.sqrt(2) * np.pi):.5f}")


def test_ac6_green_function(verdict):
    scale = np.sqrt(2.0)  # ||psi||_inf of the unit spinor bubble
    coarse = green_convolve(family("spinor_bubble", Grid.square(8.0, 129)))
    t0 = time.perf_counter()
    mid = green_convolve(family("spinor_bubble", Grid.square(8.0, 257)), method="direct")
    dt = time.perf_counter() - t0
    fine = green_convolve(family("spinor_bubble", Grid.square(8.0, 513)))
    m = [coarse.match / scale, mid.match / scale, fine.match / scale]
    ok = m[1] < 0.05 and m[0] > m[1] > m[2] and dt < 300
    verdict("AC6", ok, f"match/|psi| at 129,257,513 = {['%.4f' % v for v in m]}, "
                       f"residual={mid.residual:.2e}, direct 257^2 sum {dt:.1f}s")


def test_ac7_newton_solver(verdict):
    g = Grid.square(8.0, 129)
    p0 = family("spinor_bubble", g)
    rng = np.random.default_rng(2024)
    p = p0.replace(u=p0.u * (1 + 0.01 * rng.standard_normal(g.shape) * g.interior()))
    rep = newton_solve(p, SolverConfig())
    h = rep.residual_history
    ratios = _ratios(h)
    superlinear = any(b / a < 0.1 for a, b in zip(h, h[1:]))

    lay = Layout(g)
    lin = linearize(p)
    r0 = lay.pack(*residual(p))
    fd = []
    for _ in range(10):
        du, dpsi = lay.unpack(rng.standard_normal(lay.size))
        Lw = lay.pack(*lin.apply(du, dpsi))
        e = [np.abs((lay.pack(*residual(p.replace(u=p.u + eps * du, psi=p.psi + eps * dpsi))) - r0) / eps
                    - Lw).max() for eps in (1e-3, 1e-4)]
        fd.append(e[0] / e[1])
    fd_ok = all(5 <= r <= 20 for r in fd)
    ok = rep.converged and h[-1] < 1e-10 and rep.iterations <= 10 and superlinear and fd_ok
    verdict("AC7", ok, f"iterations={rep.iterations}, history={['%.1e' % v for v in h]}, "
                       f"min ratio={min(1 / r for r in ratios):.1e}, "
                       f"FD error ratio (eps 1e-3/1e-4) in [{min(fd):.1f}, {max(fd):.1f}]")


def test_ac8_blowup_harness(verdict):
    g = Grid.square(1.0, 257)
    seq = generate_sequence(SequenceSpec.geometric("scalar_bubble", g, 7))
    rep = detect_concentration(seq, delta=0.5)
    near = len(rep.sigma1) == 1 and max(abs(c) for c in rep.sigma1[0]) <= g.h
    m_last = local_mass(seq[-1], (0.0, 0.0), 0.5)
    sub = all(any(max(abs(a - c), abs(b - d)) <= g.h for c, d in rep.sigma1) for a, b in rep.sigma2)
    const = detect_concentration(generate_sequence(SequenceSpec.geometric("scalar_bubble", g, 7, base=1.0)))
    ok = (near and abs(m_last / (2 * np.pi) - 1) <= 0.05 and all(a >= np.pi for a in rep.masses)
          and rep.classification == "blowup_minus_infinity_outside" and sub
          and const.sigma1 == [] and const.classification == "bounded")
    verdict("AC8", ok, f"sigma1={rep.sigma1}, sigma2={rep.sigma2}, mass(B_0.5)/2pi={m_last / (2 * np.pi):.4f}, "
                       f"alphas={['%.4f' % a for a in rep.masses]}, class={rep.classification}; "
                       f"constant: sigma1={const.sigma1}, class={const.classification}")


def test_ac9_kelvin_transform(verdict):
    g = Grid.square(8.0, 513)
    p = family("spinor_bubble", g)
    k = kelvin_transform(p)
    errs = []
    for a, b in ((0.25, 0.5), (0.5, 2.0), (1.0, 4.0)):
        out_m, in_m = annulus_mask(g, a, b), annulus_mask(g, 1 / b, 1 / a)
        errs.append(abs(integrate(np.exp(2 * k.u), g, out_m) / integrate(np.exp(2 * p.u), g, in_m) - 1))
        errs.append(abs(integrate(norm2(k.psi) ** 2, g, out_m) / integrate(norm2(p.psi) ** 2, g, in_m) - 1))
    inner = Grid.square(2.0, 257)
    kk = kelvin_transform(k, grid=inner)
    ref = family("spinor_bubble", inner)
    m = np.isfinite(kk.u)
    du = float(np.abs(kk.u - ref.u)[m].max())
    dpsi = float(np.abs(kk.psi - ref.psi)[:, m].max())
    near0 = (g.radius() < 0.5) & np.isfinite(k.u)
    bound_u = float(np.abs(k.u[near0]).max())
    bound_psi = float(np.sqrt(norm2(k.psi[:, near0])).max())
    ok = max(errs) <= 0.01 and du <= 1e-4 and dpsi <= 1e-4 and bound_u < 5 and bound_psi < 5
    verdict("AC9", ok, f"max annulus mass error {max(errs):.2e}, double-Kelvin |du|={du:.1e} "
                       f"|dpsi|={dpsi:.1e}, sup near 0: |v|={bound_u:.3f} |phi|={bound_psi:.3f}")


def test_ac10_determinism(tmp_path, verdict):
    conf = {"grid": {"half_width": 8, "n": 129}, "solution": {"family": "spinor_bubble"},
            "gates": {"alpha": {"target": FOUR_PI, "rel_tol": 0.05}}}
    path = tmp_path / "verify.json"
    path.write_text(json.dumps(conf))
    codes = [cli.main(["verify", "--config", str(path), "--out", str(tmp_path / d), "--serial"])
             for d in ("a", "b")]
    same = all((tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
               for f in ("diagnostics.json", "gates.json"))
    verdict("AC10", codes == [0, 0] and same, f"exit codes {codes}, byte-identical JSON: {same}")
