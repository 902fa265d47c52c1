"""Model tests: channel statistics, target formulas, the stacked aggregates,
and the equivalence between the physical-model evaluator and the stacked
constraint forms."""

import os

import numpy as np
import pytest

import cogrelay as cr
from cogrelay.exceptions import DegenerateRelayChannel, ModeII
from conftest import drawn_instance, scalar_instance

DATA = os.path.join(os.path.dirname(__file__), "data")


def random_solution(rng, m, n):
    w = rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))
    v = rng.standard_normal(m * n) + 1j * rng.standard_normal(m * n)
    return cr.DownlinkSolution(w=w, v=v, p=None, method="optimal")


# --- generation ---

def test_phase_only_magnitudes_exact():
    cfg = cr.SystemConfig(seed=1)
    ch = cr.generate_instance(cfg, 0)
    # unit distances for every CBS-relative link
    assert np.allclose(np.abs(ch.h), 1.0, rtol=0, atol=0)
    # PBS->PU at distance 2, alpha 3.5
    assert np.allclose(np.abs(ch.h0p), 2.0 ** -1.75, rtol=0, atol=0)
    assert abs(2.0 ** -1.75 - 0.29730) < 1e-5


def test_generate_deterministic_and_stream_independent():
    cfg = cr.SystemConfig(seed=42)
    a = cr.generate_instance(cfg, 7)
    b = cr.generate_instance(cfg, 7)
    assert np.array_equal(a.h0p, b.h0p) and np.array_equal(a.f, b.f)
    assert np.array_equal(a.g, b.g) and np.array_equal(a.h, b.h)
    c = cr.generate_instance(cfg, 8)
    assert not np.array_equal(a.h, c.h)


def test_rayleigh_mode_differs_and_is_deterministic():
    cfg = cr.SystemConfig(seed=42, fading="rayleigh")
    a = cr.generate_instance(cfg, 0)
    b = cr.generate_instance(cfg, 0)
    assert np.array_equal(a.h, b.h)
    assert np.std(np.abs(a.h)) > 0.05   # magnitudes actually fade


def test_pbs_beam_default_and_override():
    cfg = cr.SystemConfig(seed=5)
    ch = cr.generate_instance(cfg, 0)
    assert np.allclose(ch.f, ch.h0p / np.linalg.norm(ch.h0p), atol=1e-15)
    fixed = np.array([1.0, 0.0], dtype=complex)
    ch2 = cr.generate_instance(cr.SystemConfig(seed=5, f_override=fixed), 0)
    assert np.array_equal(ch2.f, fixed)
    with pytest.raises(ValueError):
        cr.generate_instance(cr.SystemConfig(seed=5, f_override=2.0 * fixed), 0)


def test_config_validation():
    with pytest.raises(ValueError):
        cr.SystemConfig(K=0)
    with pytest.raises(ValueError):
        cr.SystemConfig(P0=-1.0)
    with pytest.raises(ValueError):
        cr.SystemConfig(alpha=0.0)
    with pytest.raises(ValueError):
        cr.SystemConfig(fading="nakagami")
    with pytest.raises(ValueError):
        cr.SystemConfig(Nm=(1.0, 1.0))   # wrong length for M=3


# --- targets ---

def test_cu_targets():
    cfg = cr.SystemConfig(seed=1, r_cu=0.5)
    ch = cr.generate_instance(cfg, 0)
    assert cr.sinr_targets(cfg, ch).gamma[0] == pytest.approx(1.0, abs=1e-15)
    cfg2 = cr.SystemConfig(seed=1, r_cu=2.0)
    assert cr.sinr_targets(cfg2, ch).gamma[2] == pytest.approx(15.0, abs=1e-12)


def test_pu_residual_target_value():
    # r0=2, P0=10, MRT beam at distance 2 with K=2 gives |h0p^H f|^2 = 2^-2.5
    cfg = cr.SystemConfig(seed=3, P0=10.0, r0=2.0)
    ch = cr.generate_instance(cfg, 0)
    t = cr.sinr_targets(cfg, ch)
    assert t.gamma0p == pytest.approx(1.5 - 2.0 ** -2.5, abs=1e-12)
    assert t.gamma0p == pytest.approx(1.32322, abs=1e-5)


def test_targets_monotone_in_rate():
    cfg = cr.SystemConfig(seed=1)
    ch = cr.generate_instance(cfg, 0)
    prev = -1.0
    for r in (0.0, 0.2, 0.5, 1.0, 2.0, 3.0):
        g = cr.sinr_targets(cr.SystemConfig(seed=1, r_cu=r), ch).gamma[0]
        assert g > prev
        prev = g
    prev = -np.inf
    for r0 in (0.5, 1.0, 2.0, 3.0):
        g0 = cr.sinr_targets(cr.SystemConfig(seed=1, r0=r0), ch).gamma0p
        assert g0 > prev
        prev = g0


# --- stacked problem ---

def test_build_stacked_scalar_values():
    _, _, _, sp = scalar_instance()
    assert sp.h0[0] == 1.0 + 0j
    assert sp.hbar0[0, 0] == 1.0 + 0j
    assert sp.hbar[0][0, 0] == pytest.approx(np.sqrt(2.0))
    assert sp.dv[0] == pytest.approx(2.0)
    assert np.array_equal(sp.noise, [1.0, 1.0])


def test_stacked_off_block_entries_exactly_zero():
    _, _, _, sp = drawn_instance(0)
    m, n = sp.M, sp.N
    for j in range(m):
        outside = np.ones(m * n, dtype=bool)
        outside[j * n:(j + 1) * n] = False
        assert np.all(sp.hbar0[j][outside] == 0)
        for mu in range(m):
            assert np.all(sp.hbar[mu][j][outside] == 0)


def test_build_stacked_mode_ii():
    cfg = cr.SystemConfig(seed=1)
    ch = cr.generate_instance(cfg, 0)
    t = cr.Targets(gamma0p=-0.3, gamma=np.ones(3))
    with pytest.raises(ModeII):
        cr.build_stacked(ch, t, cfg)


def test_build_stacked_degenerate_backhaul():
    cfg, ch, t, _ = scalar_instance()
    dead = cr.ChannelSet(h0p=ch.h0p, f=ch.f, g=np.zeros_like(ch.g), h=ch.h)
    with pytest.raises(DegenerateRelayChannel):
        cr.build_stacked(dead, t, cfg)


# --- evaluation ---

def test_evaluate_zero_solution():
    cfg, ch, _, sp = drawn_instance(1)
    zero = cr.DownlinkSolution(w=np.zeros((3, 4), complex), v=np.zeros(12, complex))
    rep = cr.evaluate_solution(ch, zero, cfg)
    assert np.all(rep.cu == 0.0)
    direct = cfg.P0 * abs(np.vdot(ch.h0p, ch.f)) ** 2 / cfg.N1p
    assert rep.pu_total == pytest.approx(direct, rel=1e-14)
    assert cr.total_power(zero, sp) == 0.0


def test_evaluate_scalar_worked_powers():
    cfg, ch, t, sp = scalar_instance()
    sol = cr.DownlinkSolution(w=np.array([[np.sqrt(11.0 / 7.0)]], dtype=complex),
                              v=np.array([np.sqrt(2.0 / 7.0)], dtype=complex),
                              p=np.array([2.0 / 7.0, 11.0 / 7.0]))
    rep = cr.evaluate_solution(ch, sol, cfg)
    assert rep.pu_relay == pytest.approx(0.1, rel=1e-12)
    assert rep.cu[0] == pytest.approx(1.0, rel=1e-12)
    assert cr.total_power(sol, sp) == pytest.approx(15.0 / 7.0, rel=1e-14)


def test_evaluate_orthogonal_beam_gives_zero_cu():
    cfg = cr.SystemConfig(K=1, M=1, N=2, P0=1.0, d_pbs_pu=1.0)
    ch = cr.ChannelSet(h0p=np.array([1.0 + 0j]), f=np.array([1.0 + 0j]),
                       g=np.array([[1.0 + 0j, 0.0 + 0j]]),
                       h=np.array([[[1.0 + 0j, 0.0], [0.0, 1.0 + 0j]]]))
    sol = cr.DownlinkSolution(w=np.array([[1.0 + 0j, 0.0]]),   # orthogonal to h11 = e2
                              v=np.zeros(2, complex))
    rep = cr.evaluate_solution(ch, sol, cfg)
    assert rep.cu[0] == 0.0


def test_relay_matrix_examples():
    a = cr.relay_matrix(np.array([1.0, 0.0]), np.array([0.0, 1.0]))
    assert a[0, 1] == 1.0 and np.count_nonzero(a) == 1
    assert np.all(cr.relay_matrix(np.zeros(2), np.ones(2)) == 0)
    # worked instance: relay power P0 ||A g||^2 + Ns ||A||_F^2 = p0 * dv
    amp = cr.relay_matrix(np.array([np.sqrt(2.0 / 7.0)]), np.array([1.0 + 0j]))
    relay_power = 1.0 * np.sum(np.abs(amp @ [1.0]) ** 2) + 1.0 * np.sum(np.abs(amp) ** 2)
    assert relay_power == pytest.approx(4.0 / 7.0, rel=1e-14)
    assert relay_power == pytest.approx((2.0 / 7.0) * 2.0, rel=1e-14)


def stacked_constraint_values(sp, sol):
    """Constraint left-hand sides straight from the stacked aggregates."""
    m = sp.M
    num = abs(np.vdot(sp.h0, sol.v)) ** 2
    den = sum(abs(np.vdot(sp.ch.h[j, 0], sol.w[j])) ** 2 for j in range(m)) \
        + np.sum(np.abs(sp.hbar0 @ sol.v) ** 2) + sp.config.N2p
    pu = num / den
    cu = np.empty(m)
    for mu in range(m):
        sig = abs(np.vdot(sp.ch.h[mu, mu + 1], sol.w[mu])) ** 2
        d = sum(abs(np.vdot(sp.ch.h[mu, j + 1], sol.w[j])) ** 2
                for j in range(m) if j != mu) \
            + np.sum(np.abs(sp.hbar[mu] @ sol.v) ** 2) + sp.noise[mu + 1]
        cu[mu] = sig / d
    return pu, cu


def test_physical_vs_stacked_equivalence():
    rng = np.random.default_rng(21)
    for idx in range(6):
        cfg, ch, _, sp = drawn_instance(idx)
        sol = random_solution(rng, sp.M, sp.N)
        rep = cr.evaluate_solution(ch, sol, cfg)
        pu, cu = stacked_constraint_values(sp, sol)
        assert rep.pu_relay == pytest.approx(pu, rel=1e-10)
        assert np.allclose(rep.cu, cu, rtol=1e-10)


def test_total_power_matches_physical_objective():
    rng = np.random.default_rng(22)
    for idx in range(6):
        cfg, ch, _, sp = drawn_instance(idx)
        sol = random_solution(rng, sp.M, sp.N)
        relays = [cr.relay_matrix(sol.v_blocks(sp.N)[j], ch.g[j]) for j in range(sp.M)]
        ns = cfg.ns_cbs()
        physical = np.sum(np.abs(sol.w) ** 2) \
            + cfg.P0 * sum(np.sum(np.abs(relays[j] @ ch.g[j]) ** 2) for j in range(sp.M)) \
            + sum(ns[j] * np.sum(np.abs(relays[j]) ** 2) for j in range(sp.M))
        assert cr.total_power(sol, sp) == pytest.approx(float(physical), rel=1e-10)


def test_sinr_report_nonnegative():
    rng = np.random.default_rng(23)
    cfg, ch, _, sp = drawn_instance(2)
    rep = cr.evaluate_solution(ch, random_solution(rng, sp.M, sp.N), cfg)
    assert rep.pu_relay >= 0 and rep.pu_total >= 0 and np.all(rep.cu >= 0)
    assert rep.rate_pu >= 0 and np.all(rep.rate_cu >= 0)


# --- channel files ---

def test_channel_file_round_trip(tmp_path):
    cfg = cr.SystemConfig(seed=77, fading="rayleigh")
    ch = cr.generate_instance(cfg, 3)
    path = tmp_path / "ch.txt"
    cr.save_channels(ch, path)
    ch2 = cr.load_channels(path)
    for a, b in ((ch.h0p, ch2.h0p), (ch.f, ch2.f), (ch.g, ch2.g), (ch.h, ch2.h)):
        assert np.array_equal(a, b)


def test_golden_channel_regression():
    golden = cr.load_channels(os.path.join(DATA, "golden_seed2026_0.txt"))
    regen = cr.generate_instance(cr.SystemConfig(seed=2026), 0)
    assert np.array_equal(golden.h0p, regen.h0p)
    assert np.array_equal(golden.g, regen.g)
    assert np.array_equal(golden.h, regen.h)
    # frozen spot values guard both the file format and the stream layout
    assert golden.h0p[0] == complex(-0.14061086223470887, 0.2619483404603476)
    assert golden.h[2, 3, 1] == complex(-0.6421192923077862, 0.7666047315573703)


def test_load_rejects_foreign_file(tmp_path):
    bad = tmp_path / "x.txt"
    bad.write_text("not a channel file\n")
    with pytest.raises(ValueError):
        cr.load_channels(bad)
