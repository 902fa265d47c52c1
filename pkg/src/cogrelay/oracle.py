"""Independent verification machinery: KKT checks, the analytic single-CBS
scalar solution, and a brute-force power grid search.

Nothing here sits on any solve path; tests and acceptance runs use these
routines to cross-examine solver output.
"""

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import InfeasibleScalar, NoFeasibleGridPoint
from .model import relay_matrix
from .solvers import _cu_quotient, _relay_quotient

_TINY = 1e-300


@dataclass(frozen=True, eq=False)
class KktReport:
    """Optimality certificate pieces for a (solution, dual) pair.

    slacks[i] = achieved/target - 1 for the PU relay constraint (i = 0) and
    the CU constraints; dual_margins[i] = 1 - lam_i * quotient_i / target_i
    (the scalar form of dual feasibility, >= 0 when feasible, = 0 at the
    optimum); gap is the relative duality gap.
    """

    slacks: np.ndarray
    dual_margins: np.ndarray
    gap: float

    def csv_rows(self):
        names = ["pu_relay"] + [f"cu_{m}" for m in range(1, len(self.slacks))]
        rows = [[name, self.slacks[i], self.dual_margins[i]]
                for i, name in enumerate(names)]
        rows.append(["duality_gap", self.gap, ""])
        return rows


def kkt_verify(sol, lam, sp):
    """Constraint slacks, dual-feasibility margins, and duality gap.

    Never raises: reports whatever it measures.
    """
    m = sp.M
    lam = np.asarray(lam, dtype=float)
    gam0 = sp.targets.gamma0p
    gam = sp.targets.gamma

    slacks = np.empty(m + 1)
    num = abs(np.vdot(sp.h0, sol.v)) ** 2
    den = sum(abs(np.vdot(sp.ch.h[j, 0], sol.w[j])) ** 2 for j in range(m)) \
        + float(np.sum(np.abs(sp.hbar0 @ sol.v) ** 2)) + sp.config.N2p
    slacks[0] = num / den / gam0 - 1.0 if gam0 > 0 else math.inf
    for mu in range(m):
        sig = abs(np.vdot(sp.ch.h[mu, mu + 1], sol.w[mu])) ** 2
        noise = sum(abs(np.vdot(sp.ch.h[mu, j + 1], sol.w[j])) ** 2
                    for j in range(m) if j != mu) \
            + float(np.sum(np.abs(sp.hbar[mu] @ sol.v) ** 2)) + sp.noise[mu + 1]
        slacks[mu + 1] = sig / noise / gam[mu] - 1.0 if gam[mu] > 0 else math.inf

    margins = np.empty(m + 1)
    q0, _ = _relay_quotient(lam[0], lam[1:], sp)
    margins[0] = 1.0 - lam[0] * q0 / gam0 if gam0 > 0 else 1.0
    for mu in range(m):
        q, _ = _cu_quotient(lam, sp, mu)
        margins[mu + 1] = 1.0 - lam[mu + 1] * q / gam[mu] if gam[mu] > 0 else 1.0

    total = float(np.sum(np.abs(sol.w) ** 2) + np.sum(sp.dv * np.abs(sol.v) ** 2))
    gap = abs(float(sp.noise @ lam) - total) / max(total, _TINY)
    return KktReport(slacks=slacks, dual_margins=margins, gap=gap)


def scalar_closed_form(gamma0p, gamma1, h10=1.0, h11=1.0, g1=1.0,
                       p0=1.0, ns1=1.0, n2p=1.0, n1=1.0):
    """Exact solution of the single-CBS, single-antenna instance.

    Reduces the two tight constraints to a 2x2 fixed point and solves it in
    closed form; serves as ground truth for the iterative solvers.

    Returns:
        (lam, powers, total) with lam = [lam0, lam1], powers = [p0, p1].

    Raises:
        InfeasibleScalar: the coupling is too strong for any finite power.
    """
    a10, a11, ag = abs(h10) ** 2, abs(h11) ** 2, abs(g1) ** 2
    scale = p0 * ag + ns1
    denom = ag - gamma0p * (gamma1 * scale + ns1)
    if denom <= 0.0:
        raise InfeasibleScalar(f"feasibility margin {denom:.6g} <= 0")
    lam0 = gamma0p * (1.0 + gamma1) * scale / (a10 * denom)
    lam1 = gamma1 * (1.0 + lam0 * a10) / a11
    p0_dl = gamma0p * (gamma1 * a10 * n1 / a11 + n2p) / (a10 * ag * denom)
    p1_dl = gamma1 * (p0_dl * scale * ag + n1 / a11)
    total = p1_dl + p0_dl * scale * ag
    return np.array([lam0, lam1]), np.array([p0_dl, p1_dl]), float(total)


def _grid_coefficients(beams, sp):
    """Per-unit-power constraint coefficients, computed on the physical model
    (relay matrices materialized), not through the stacked aggregates."""
    m, n = sp.M, sp.N
    ch = sp.ch
    ns = sp.config.ns_cbs()
    p0sys = sp.config.P0
    vb = beams.v.reshape(m, n)
    relays = [relay_matrix(vb[j], ch.g[j]) for j in range(m)]
    fwd = [relays[j] @ ch.g[j] for j in range(m)]

    sig_pu = abs(sum(np.vdot(ch.h[j, 0], fwd[j]) for j in range(m))) ** 2
    noise_pu = sum(ns[j] * np.sum(np.abs(ch.h[j, 0].conj() @ relays[j]) ** 2)
                   for j in range(m))
    w_to_pu = np.array([abs(np.vdot(ch.h[j, 0], beams.w[j])) ** 2 for j in range(m)])

    sig_cu = np.array([abs(np.vdot(ch.h[mu, mu + 1], beams.w[mu])) ** 2 for mu in range(m)])
    w_to_cu = np.array([[abs(np.vdot(ch.h[j, mu + 1], beams.w[j])) ** 2 if j != mu else 0.0
                         for j in range(m)] for mu in range(m)])
    relay_to_cu = np.array([sum(p0sys * abs(np.vdot(ch.h[j, mu + 1], fwd[j])) ** 2
                                + ns[j] * np.sum(np.abs(ch.h[j, mu + 1].conj() @ relays[j]) ** 2)
                                for j in range(m))
                            for mu in range(m)])
    relay_power = sum(p0sys * np.sum(np.abs(fwd[j]) ** 2)
                      + ns[j] * np.sum(np.abs(relays[j]) ** 2) for j in range(m))
    return (float(sig_pu), float(noise_pu), w_to_pu, sig_cu, w_to_cu, relay_to_cu,
            float(relay_power))


def grid_power_search(beams, sp, targets, resolution=1000, zoom_stages=3):
    """Brute-force minimum-power search over stream powers at fixed unit
    directions.

    Searches a log grid per power axis spanning [1e-4, 1e4] times an
    interference-free analytic anchor, then zooms around the best feasible
    cell. Only intended for M <= 2 (the grid is (M+1)-dimensional).

    Raises:
        NoFeasibleGridPoint: nothing in the bracket satisfies every
            constraint.
    """
    m = sp.M
    if m > 2:
        raise ValueError("grid search is only sized for M <= 2")
    (sig_pu, noise_pu, w_to_pu, sig_cu, w_to_cu, relay_to_cu,
     relay_power) = _grid_coefficients(beams, sp)
    gam0, gam = targets.gamma0p, targets.gamma
    if gam0 <= 0 and np.all(gam <= 0):
        return np.zeros(m + 1)

    anchors = np.empty(m + 1)
    anchors[0] = gam0 * sp.config.N2p / sig_pu if gam0 > 0 and sig_pu > 0 else 0.0
    for mu in range(m):
        anchors[mu + 1] = gam[mu] * sp.noise[mu + 1] / sig_cu[mu] if gam[mu] > 0 else 0.0
    if gam0 > 0 and sig_pu <= 0:
        raise NoFeasibleGridPoint("relay direction has zero coherent PU gain")

    def feasible_mask(pp):
        # pp: list of M+1 broadcastable power grids
        ok = np.ones(np.broadcast_shapes(*[np.shape(p) for p in pp]), dtype=bool)
        if gam0 > 0:
            den = sum(w_to_pu[j] * pp[j + 1] for j in range(m)) \
                + noise_pu * pp[0] + sp.config.N2p
            ok &= pp[0] * sig_pu >= gam0 * den
        for mu in range(m):
            if gam[mu] <= 0:
                continue
            den = sum(w_to_cu[mu, j] * pp[j + 1] for j in range(m)) \
                + relay_to_cu[mu] * pp[0] + sp.noise[mu + 1]
            ok &= pp[mu + 1] * sig_cu[mu] >= gam[mu] * den
        return ok

    lo = np.where(anchors > 0, anchors * 1e-4, 0.0)
    hi = np.where(anchors > 0, anchors * 1e4, 0.0)
    best = None
    for stage in range(zoom_stages):
        axes = []
        for i in range(m + 1):
            if anchors[i] == 0.0:
                axes.append(np.zeros(1))
            else:
                axes.append(np.geomspace(lo[i], hi[i], resolution))
        mesh = np.meshgrid(*axes, indexing="ij", sparse=True)
        ok = feasible_mask(mesh)
        if not np.any(ok):
            if stage == 0:
                raise NoFeasibleGridPoint("no grid point satisfies all constraints")
            break
        total = mesh[0] * relay_power + sum(mesh[i + 1] for i in range(m))
        total = np.broadcast_to(total, ok.shape)
        flat = np.where(ok.reshape(-1), total.reshape(-1), np.inf)
        idx = np.unravel_index(int(np.argmin(flat)), ok.shape)
        best = np.array([axes[i][idx[i]] for i in range(m + 1)])
        for i in range(m + 1):
            if anchors[i] == 0.0:
                continue
            k = idx[i]
            lo[i] = axes[i][max(k - 1, 0)]
            hi[i] = axes[i][min(k + 1, len(axes[i]) - 1)]
    return best
