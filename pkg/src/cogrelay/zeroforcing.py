"""Closed-form zero-forcing designs.

Both schemes use interference-nulling transmit beamformers for the CUs and
differ in the relay direction:

  * CZF points each relay block into the orthogonal complement of all CU
    channels (CUs protected, PU pays the projection loss).
  * PZF matches each relay block to the PU channel outright (PU prioritized,
    CUs absorb the relay leakage).

Powers then decouple and follow in closed form from the tight constraints.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import (DimensionDeficit, ModeII, OutOfRegime, PuInfeasible,
                         ZeroProjection)
from .model import DownlinkSolution
from .numerics import hermitian_solve

_PROJ_RTOL = 1e-12


@dataclass(frozen=True)
class Theorem3Report:
    """Single-CBS/single-CU closed-form comparison of the two ZF schemes."""

    p_czf: float        # CZF total power
    p_pzf: float        # PZF total power
    difference: float   # p_czf - p_pzf (closed form)
    rho: float          # |h10^H h11| / (||h10|| ||h11||)
    winner: str         # threshold prediction: "pzf" | "czf" | "tie"


def _null_project(vec, nulled_cols):
    """Project vec onto the orthogonal complement of span(nulled_cols)."""
    mat = np.stack(nulled_cols, axis=1)           # (N, count)
    gram = mat.conj().T @ mat
    coef = hermitian_solve(gram, mat.conj().T @ vec)
    return vec - mat @ coef


def zf_transmit_directions(ch):
    """Unit transmit beamformers nulled toward the PU and all other CUs.

    Needs more antennas than nulled directions: N >= M + 1.

    Raises:
        DimensionDeficit: N <= M.
        ZeroProjection: an own channel lies in the nulled span.
    """
    m, n = ch.M, ch.N
    if n <= m:
        raise DimensionDeficit(f"transmit nulling needs N > M, got N={n}, M={m}")
    w = np.empty((m, n), dtype=np.complex128)
    for mu in range(m):
        nulled = [ch.h[mu, 0]] + [ch.h[mu, nu + 1] for nu in range(m) if nu != mu]
        proj = _null_project(ch.h[mu, mu + 1], nulled)
        nrm2 = float(np.sum(np.abs(proj) ** 2))
        own2 = float(np.sum(np.abs(ch.h[mu, mu + 1]) ** 2))
        if nrm2 < _PROJ_RTOL * own2:
            raise ZeroProjection(f"CU {mu + 1} channel lies in the nulled span")
        w[mu] = proj / np.sqrt(nrm2)
    return w


def _relay_powers(vbar, w, targets, sp):
    """Stream powers from the tight constraints at fixed unit directions.

    Common to both ZF schemes; PZF additionally compensates the relay power
    leaking into each CU.
    """
    m = sp.M
    nm = sp.noise[1:]
    gain_pu = abs(np.vdot(sp.h0, vbar)) ** 2
    self_noise = float(np.sum(np.abs(sp.hbar0 @ vbar) ** 2))
    denom = gain_pu - targets.gamma0p * self_noise
    if denom <= 0.0:
        raise PuInfeasible("relay direction cannot outpace its own forwarded noise")
    p0 = targets.gamma0p * sp.config.N2p / denom
    gains_w = np.array([abs(np.vdot(sp.ch.h[mu, mu + 1], w[mu])) ** 2 for mu in range(m)])
    leak = np.array([float(np.sum(np.abs(sp.hbar[mu] @ vbar) ** 2)) for mu in range(m)])
    p_cu = targets.gamma * (nm + p0 * leak) / gains_w
    return np.concatenate(([p0], p_cu))


def czf_solve(ch, targets, sp):
    """Conventional zero-forcing design: relay blocks orthogonal to every CU
    channel, co-phased toward the PU, powers from the decoupled constraints.

    Raises:
        ModeII: targets.gamma0p <= 0.
        DimensionDeficit / ZeroProjection: nulling impossible.
        PuInfeasible: PU constraint unreachable along this direction.
    """
    if targets.gamma0p <= 0:
        raise ModeII("no cooperation needed")
    m, n = ch.M, ch.N
    if n <= m:
        raise DimensionDeficit(f"relay nulling needs N > M, got N={n}, M={m}")
    w = zf_transmit_directions(ch)
    blocks = np.empty((m, n), dtype=np.complex128)
    gnorm2 = np.sum(np.abs(ch.g) ** 2, axis=1)
    for j in range(m):
        proj = _null_project(ch.h[j, 0], [ch.h[j, nu + 1] for nu in range(m)])
        nrm2 = float(np.sum(np.abs(proj) ** 2))
        pu2 = float(np.sum(np.abs(ch.h[j, 0]) ** 2))
        if nrm2 < _PROJ_RTOL * pu2:
            raise ZeroProjection(f"CBS {j + 1} PU channel lies in the CU span")
        blocks[j] = proj * gnorm2[j]
    vbar = blocks.reshape(m * n)
    vbar = vbar / np.linalg.norm(vbar)
    p = _relay_powers(vbar, w, targets, sp)
    return DownlinkSolution(w=np.sqrt(p[1:])[:, None] * w, v=np.sqrt(p[0]) * vbar,
                            p=p, method="czf")


def pzf_solve(ch, targets, sp):
    """Prior zero-forcing design: relay blocks matched to the PU channel;
    CU powers compensate the uncontrolled relay leakage.

    Raises: same as czf_solve.
    """
    if targets.gamma0p <= 0:
        raise ModeII("no cooperation needed")
    m, n = ch.M, ch.N
    if n <= m:
        raise DimensionDeficit(f"transmit nulling needs N > M, got N={n}, M={m}")
    w = zf_transmit_directions(ch)
    vbar = ch.h[:, 0, :].reshape(m * n).copy()
    vbar = vbar / np.linalg.norm(vbar)
    p = _relay_powers(vbar, w, targets, sp)
    return DownlinkSolution(w=np.sqrt(p[1:])[:, None] * w, v=np.sqrt(p[0]) * vbar,
                            p=p, method="pzf")


def theorem3_powers(ch, targets, config):
    """Closed-form CZF/PZF total powers and their difference for M = 1.

    The difference has the sign of (1 - gamma_1) scaled by rho^2, so PZF wins
    exactly when the CU asks for less than half a bit per channel use.

    Raises:
        OutOfRegime: M != 1 or the backhaul is too weak (||g1||^2 <=
            gamma0p * Ns1 makes the closed forms blow up).
        ZeroProjection: parallel PU/CU channels (1 - rho^2 < 1e-12).
    """
    if ch.M != 1:
        raise OutOfRegime(f"closed forms require M = 1, got M = {ch.M}")
    h10, h11 = ch.h[0, 0], ch.h[0, 1]
    gn2 = float(np.sum(np.abs(ch.g[0]) ** 2))
    ns1 = float(config.ns_cbs()[0])
    n1 = float(config.noise_cu()[0])
    g0p, g1 = targets.gamma0p, float(targets.gamma[0])
    if gn2 <= g0p * ns1:
        raise OutOfRegime("backhaul too weak: ||g1||^2 <= gamma0p * Ns1")
    nh10 = float(np.sum(np.abs(h10) ** 2))
    nh11 = float(np.sum(np.abs(h11) ** 2))
    rho2 = abs(np.vdot(h10, h11)) ** 2 / (nh10 * nh11)
    if 1.0 - rho2 < 1e-12:
        raise ZeroProjection("PU and CU channels are (numerically) parallel")

    scale = config.P0 * gn2 + ns1
    base = g0p * config.N2p * scale / (nh10 * (gn2 - g0p * ns1))
    cu_term = g1 * n1 / (nh11 * (1.0 - rho2))
    p_czf = cu_term + base / (1.0 - rho2)
    p_pzf = g1 * base * rho2 / (1.0 - rho2) + cu_term + base
    difference = base * rho2 / (1.0 - rho2) * (1.0 - g1)
    if rho2 == 0.0 or g1 == 1.0:
        winner = "tie"
    else:
        winner = "pzf" if g1 < 1.0 else "czf"
    return Theorem3Report(p_czf=float(p_czf), p_pzf=float(p_pzf),
                          difference=float(difference),
                          rho=float(np.sqrt(rho2)), winner=winner)
