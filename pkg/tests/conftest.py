"""Shared instance builders for the test suite."""

import numpy as np

import cogrelay as cr


def scalar_instance(gamma0p=0.1, gamma1=1.0):
    """Single-CBS, single-antenna instance with unit channels and unit
    powers; targets supplied directly. Ground truth for gamma0p=0.1,
    gamma1=1: lam* = (4/7, 11/7), p = (2/7, 11/7), total 15/7."""
    cfg = cr.SystemConfig(K=1, M=1, N=1, P0=1.0, d_pbs_pu=1.0)
    ch = cr.ChannelSet(h0p=np.array([1.0 + 0j]), f=np.array([1.0 + 0j]),
                       g=np.array([[1.0 + 0j]]),
                       h=np.ones((1, 2, 1), dtype=np.complex128))
    t = cr.Targets(gamma0p=gamma0p, gamma=np.array([float(gamma1)]))
    sp = cr.build_stacked(ch, t, cfg)
    return cfg, ch, t, sp


def drawn_instance(index, seed=3, r_cu=1.0, **overrides):
    """One generated realization at the default geometry (K=2, M=3, N=4,
    PBS SNR 10 dB) with its stacked problem; raises ModeII when the direct
    link suffices."""
    cfg = cr.SystemConfig(seed=seed, r_cu=r_cu, **overrides)
    ch = cr.generate_instance(cfg, index)
    t = cr.sinr_targets(cfg, ch)
    sp = cr.build_stacked(ch, t, cfg)
    return cfg, ch, t, sp


def random_scalar_channels(rng):
    """Random single-CBS scalar-channel instance in the style of the worked
    one: magnitudes uniform in [0.3, 2], uniform phases."""
    def draw():
        return rng.uniform(0.3, 2.0) * np.exp(2j * np.pi * rng.random())
    h10, h11, g1 = draw(), draw(), draw()
    cfg = cr.SystemConfig(K=1, M=1, N=1, P0=1.0, d_pbs_pu=1.0)
    ch = cr.ChannelSet(h0p=np.array([1.0 + 0j]), f=np.array([1.0 + 0j]),
                       g=np.array([[g1]]),
                       h=np.array([[[h10], [h11]]], dtype=np.complex128))
    return cfg, ch, h10, h11, g1
