"""Optimal solvers for the joint relay/beamformer power minimization.

Two routes to the same optimum of the dual problem over the nonnegative dual
vector lam = [lam_0, lam_1, ..., lam_M] (lam_0 prices the PU relay
constraint, lam_m the CU constraints):

  * ``solve_fixed_point``: monotone fixed-point iteration on the dual
    updates (linear convergence), plus a message-passing simulation of its
    distributed form in ``solve_fixed_point_distributed``.
  * ``solve_matrix_iteration``: virtual-uplink matrix iteration (superlinear
    convergence) seeded by an eigen-system feasibility balance.

``recover_downlink`` turns a converged dual point into physical beamformers
and powers; at the optimum all SINR constraints are tight and the downlink
total power equals the dual objective noise^T lam (strong duality).
"""

import math
import weakref
from dataclasses import dataclass, field

import numpy as np

from .exceptions import (DegenerateDirection, Diverged, Infeasible, Inconclusive,
                         NegativePower, NoConvergence, ZeroGain)
from .model import DownlinkSolution
from .numerics import (dominant_eigpair, hermitian_solve, linear_solve_real,
                       psd_solve_trusted)

_TINY = 1e-300


@dataclass(frozen=True, eq=False)
class BeamSet:
    """Unit-norm virtual-uplink directions: w[m] receives CU m+1 at its CBS,
    v is the stacked relay receive direction."""

    w: np.ndarray   # (M, N)
    v: np.ndarray   # (M*N,)

    def __post_init__(self):
        norms = np.linalg.norm(self.w, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-12) or abs(np.linalg.norm(self.v) - 1.0) > 1e-12:
            raise ValueError("beam vectors must be unit norm")


@dataclass(frozen=True, eq=False)
class CouplingMatrices:
    """Nonnegative linear system encoding all tight SINR constraints at fixed
    beams: feasible duals satisfy lam >= diag(d) (F lam + sigma)."""

    F: np.ndarray       # (M+1, M+1) cross-coupling gains
    d: np.ndarray       # (M+1,) diagonal of D: target / own-signal gain
    sigma: np.ndarray   # (M+1,) uplink noise-side constants
    noise: np.ndarray   # (M+1,) downlink noise powers

    @property
    def df(self):
        return self.d[:, None] * self.F


@dataclass
class ConvergenceTrace:
    """Per-iteration dual vectors and objectives of one solver run."""

    lambdas: list = field(default_factory=list)
    objectives: list = field(default_factory=list)

    def append(self, lam, objective):
        self.lambdas.append(np.array(lam, dtype=float))
        self.objectives.append(float(objective))

    def __len__(self):
        return len(self.lambdas)

    def rel_changes(self):
        """Relative total-power change per iteration (first entry vs zero)."""
        out = []
        prev = 0.0
        for obj in self.objectives:
            out.append(abs(obj - prev) / max(abs(obj), _TINY))
            prev = obj
        return out

    def error_ratios(self, lam_star):
        """||lam^(i+1) - lam*|| / ||lam^(i) - lam*|| wherever defined."""
        errs = [np.linalg.norm(lam - lam_star) for lam in self.lambdas]
        return [e1 / e0 if e0 > 0 else math.nan for e0, e1 in zip(errs, errs[1:])]

    def csv_rows(self, lam_star=None):
        """Rows (iter, lambda_0..lambda_M, dual_objective, err_ratio)."""
        star = self.lambdas[-1] if lam_star is None else lam_star
        ratios = [math.nan] + self.error_ratios(star)
        rows = []
        for i, (lam, obj) in enumerate(zip(self.lambdas, self.objectives)):
            rows.append([i, *lam.tolist(), obj, ratios[i]])
        return rows


@dataclass(frozen=True)
class ConvergenceOrder:
    kind: str                # "linear" | "superlinear"
    rate: float | None = None


@dataclass
class MessageLog:
    """Scalars exchanged between CBS nodes in the distributed run.

    Entries are (round, node, name, value); node 0 denotes the coordinator
    share of the final uplink-to-downlink conversion matrix.
    """

    entries: list = field(default_factory=list)
    n_rounds: int = 0

    def record(self, rnd, node, name, value):
        self.entries.append((rnd, node, name, float(value)))

    @property
    def total(self):
        return len(self.entries)

    def csv_rows(self):
        return [[rnd, node, name, value, i + 1]
                for i, (rnd, node, name, value) in enumerate(self.entries)]


@dataclass(frozen=True, eq=False)
class LocalView:
    """What CBS_j knows locally: its own channels to the PU and every CU,
    its backhaul gain and noise figures, and the shared targets."""

    j: int
    h: np.ndarray        # (M+1, N): row 0 to the PU, row m to CU_m
    gnorm2: float
    ns: float
    p0: float
    gamma_own: float
    gamma0p: float


class _Derived:
    """Per-instance constants reused across solver iterations."""

    __slots__ = ("hconj", "eye_n", "scale", "ns", "hbar_flat", "habs2")

    def __init__(self, sp):
        self.hconj = np.conj(sp.ch.h)                       # (M, M+1, N)
        self.eye_n = np.eye(sp.N, dtype=np.complex128)
        self.ns = sp.config.ns_cbs()
        self.scale = sp.config.P0 * sp.gnorm2 + self.ns     # (M,)
        self.hbar_flat = np.ascontiguousarray(sp.hbar.reshape(-1, sp.hbar.shape[-1]))
        # scalar-antenna shortcut: channel power per link
        self.habs2 = np.abs(sp.ch.h[:, :, 0]) ** 2 if sp.N == 1 else None


_DERIVED_CACHE = weakref.WeakKeyDictionary()


def _derived(sp):
    der = _DERIVED_CACHE.get(sp)
    if der is None:
        der = _Derived(sp)
        _DERIVED_CACHE[sp] = der
    return der


def _cu_quotient(lam, sp, mu):
    """Own-channel gain of CU mu+1 under the dual-MMSE whitening at lam."""
    der = _derived(sp)
    hs = sp.ch.h[mu]                       # (M+1, N)
    weights = np.asarray(lam, dtype=float).copy()
    weights[mu + 1] = 0.0
    if der.habs2 is not None:              # N == 1: the whitening is a scalar
        denom = 1.0 + float(weights @ der.habs2[mu])
        return float(der.habs2[mu, mu + 1]) / denom, hs[mu + 1] / denom
    b = der.eye_n + (hs.T * weights) @ der.hconj[mu]
    sol = psd_solve_trusted(b, hs[mu + 1])
    return float(np.vdot(hs[mu + 1], sol).real), sol


def _relay_quotient(lam0, cu_duals, sp):
    """Quotient h0^H A(lam)^{-1} h0 of the stacked relay system and the
    unnormalized relay direction A^{-1} h0.

    A is block diagonal (one block per CBS), so the global solve decouples
    into M solves of size N.
    """
    der = _derived(sp)
    m, n = sp.M, sp.N
    x = np.empty(m * n, dtype=np.complex128)
    q0 = 0.0
    weights = np.empty(m + 1)
    for j in range(m):
        hs = sp.ch.h[j]
        weights[0] = lam0 * der.ns[j] / der.scale[j]
        weights[1:] = cu_duals
        if der.habs2 is not None:          # N == 1: scalar whitening
            denom = der.scale[j] * (1.0 + float(weights @ der.habs2[j]))
            x[j] = hs[0, 0] / denom
            q0 += sp.gnorm2[j] * float(der.habs2[j, 0]) / denom
            continue
        b = der.eye_n + (hs.T * weights) @ der.hconj[j]
        y = psd_solve_trusted(b, hs[0]) / der.scale[j]
        x[j * n:(j + 1) * n] = y
        q0 += sp.gnorm2[j] * float(np.vdot(hs[0], y).real)
    return q0, x


def fixed_point_step(lam, sp, order="gauss-seidel"):
    """One sweep of the dual fixed-point updates.

    The CU duals are all refreshed from the incoming lam. With the default
    "gauss-seidel" order the relay dual then uses those just-updated CU
    duals (the listing's step order); "jacobi" evaluates it at the incoming
    duals instead, which is the form the linear-rate analysis describes.
    Both orders converge to the same fixed point.
    """
    lam = np.asarray(lam, dtype=float)
    gam = sp.targets.gamma
    out = np.empty(sp.M + 1)
    for mu in range(sp.M):
        if gam[mu] <= 0.0:
            out[mu + 1] = 0.0
            continue
        q, _ = _cu_quotient(lam, sp, mu)
        out[mu + 1] = gam[mu] / q
    if sp.targets.gamma0p <= 0.0:
        out[0] = 0.0
    else:
        cu_duals = out[1:] if order == "gauss-seidel" else lam[1:]
        q0, _ = _relay_quotient(lam[0], cu_duals, sp)
        out[0] = sp.targets.gamma0p / q0
    return out


def _max_rel_change(new, old):
    return float(np.max(np.abs(new - old) / np.maximum(np.abs(new), _TINY)))


def solve_fixed_point(sp, tol=1e-10, max_iter=100_000, ceiling=1e12,
                      order="gauss-seidel"):
    """Run the dual fixed-point iteration from lam = 0 until the max-norm
    relative change drops below tol.

    Returns:
        (lam_star, trace)

    Raises:
        Diverged: an iterate exceeded the ceiling or the cap was reached;
            both signal that the SINR targets are infeasible.
    """
    lam = np.zeros(sp.M + 1)
    trace = ConvergenceTrace()
    trace.append(lam, 0.0)
    for _ in range(max_iter):
        new = fixed_point_step(lam, sp, order=order)
        if not np.all(np.isfinite(new)) or np.max(new) > ceiling:
            raise Diverged("dual iterates exceeded the ceiling; targets look infeasible")
        trace.append(new, float(sp.noise @ new))
        if _max_rel_change(new, lam) < tol:
            return new, trace
        lam = new
    raise Diverged(f"no convergence within {max_iter} iterations")


def uplink_beams(lam, sp):
    """Virtual-uplink MMSE directions at the dual point lam, unit-normalized.

    Raises:
        DegenerateDirection: a direction vanished before normalization.
    """
    lam = np.asarray(lam, dtype=float)
    w = np.empty((sp.M, sp.N), dtype=np.complex128)
    for mu in range(sp.M):
        _, raw = _cu_quotient(lam, sp, mu)
        nrm = np.linalg.norm(raw)
        if nrm < 1e-14:
            raise DegenerateDirection(f"receive direction of CU {mu + 1} vanished")
        w[mu] = raw / nrm
    _, raw = _relay_quotient(lam[0], lam[1:], sp)
    nrm = np.linalg.norm(raw)
    if nrm < 1e-14:
        raise DegenerateDirection("relay direction vanished")
    return BeamSet(w=w, v=raw / nrm)


def coupling_matrices(beams, sp):
    """Assemble the tight-constraint coupling system at fixed beams.

    Row/column 0 is the relay constraint; row m is CU m. F[i, j] is the gain
    with which stream j's power interferes with stream i in the virtual
    uplink, d[i] = target_i / own_gain_i, sigma[i] the uplink noise constant.

    Raises:
        ZeroGain: an own-signal gain |h^H beam|^2 fell below 1e-18.
    """
    der = _derived(sp)
    m = sp.M
    f = np.zeros((m + 1, m + 1))
    f[0, 0] = float(np.sum(np.abs(sp.hbar0 @ beams.v) ** 2))
    leak = np.abs(der.hbar_flat @ beams.v) ** 2
    f[0, 1:] = leak.reshape(m, m).sum(axis=1)

    own = np.empty(m)
    for mu in range(m):
        gains = np.abs(der.hconj[mu] @ beams.w[mu]) ** 2   # (M+1,) |h_{mu,n}^H w|^2
        own[mu] = gains[mu + 1]
        f[mu + 1, 0] = gains[0]
        f[mu + 1, 1:] = gains[1:]
        f[mu + 1, mu + 1] = 0.0

    gain_v = abs(np.vdot(sp.h0, beams.v)) ** 2
    if gain_v < 1e-18 or np.any(own < 1e-18):
        raise ZeroGain("a user has (numerically) zero gain under these beams")
    d = np.concatenate(([max(sp.targets.gamma0p, 0.0) / gain_v],
                        sp.targets.gamma / own))
    sigma = np.concatenate(([float(np.sum(sp.dv * np.abs(beams.v) ** 2))],
                            np.ones(m)))
    return CouplingMatrices(F=f, d=d, sigma=sigma, noise=sp.noise)


def sinr_balance(sp, power_budget, tol=1e-10, max_rounds=500):
    """Feasibility probe: jointly balanced SINR margin C under a total
    uplink budget, via alternating eigen-system power steps and MMSE beam
    updates.

    The targets are feasible at the budget iff C >= 1. Zero targets make the
    constraints vacuous and return C = inf.

    Returns:
        (C, lam, beams) with beams = MMSE directions at the returned lam.
    """
    m = sp.M
    lam = np.zeros(m + 1)
    beams = uplink_beams(lam, sp)
    c_prev = None
    c = None
    warm = None
    for _ in range(max_rounds):
        cm = coupling_matrices(beams, sp)
        df = cm.df
        dsig = cm.d * cm.sigma
        if not np.any(dsig > 0.0):
            return math.inf, np.zeros(m + 1), beams
        ext = np.zeros((m + 2, m + 2))
        ext[:m + 1, :m + 1] = df
        ext[:m + 1, m + 1] = dsig
        ext[m + 1, :m + 1] = cm.noise @ df / power_budget
        ext[m + 1, m + 1] = cm.noise @ dsig / power_budget
        rho, vec = dominant_eigpair(ext, start=warm)
        if rho <= _TINY:
            return math.inf, np.zeros(m + 1), beams
        warm = vec
        c = 1.0 / rho
        lam = np.maximum(vec[:m + 1] / max(vec[m + 1], _TINY), 0.0)
        beams = uplink_beams(lam, sp)
        if c_prev is not None and abs(c - c_prev) <= tol * max(abs(c), 1.0):
            return c, lam, beams
        c_prev = c
    return c, lam, beams


def solve_matrix_iteration(sp, tol=1e-10, max_iter=1000, probe_budget=None):
    """Matrix-iteration solver: alternate exact dual power solves
    lam = (I - DF)^{-1} D sigma with MMSE beam updates, from a feasible
    balanced start.

    Returns:
        (lam_star, beams, trace); beams are the MMSE directions at lam_star.

    Raises:
        Infeasible: the feasibility probe certified C < 1 at the probe
            budget (default 1e6 * total noise power).
        Singular: (I - DF) lost invertibility.
        NoConvergence: iteration cap reached.
    """
    if probe_budget is None:
        probe_budget = 1e6 * float(np.sum(sp.noise))
    c, lam, beams = sinr_balance(sp, probe_budget)
    if math.isinf(c):
        trace = ConvergenceTrace()
        trace.append(np.zeros(sp.M + 1), 0.0)
        return np.zeros(sp.M + 1), beams, trace
    if c < 1.0:
        raise Infeasible(f"balanced margin C = {c:.6g} < 1 at budget {probe_budget:.3g}")
    trace = ConvergenceTrace()
    trace.append(lam, float(sp.noise @ lam))
    eye = np.eye(sp.M + 1)
    for _ in range(max_iter):
        cm = coupling_matrices(beams, sp)
        new = linear_solve_real(eye - cm.df, cm.d * cm.sigma)
        if np.any(new < 0.0):
            raise Infeasible("negative dual in the exact power solve")
        trace.append(new, float(sp.noise @ new))
        beams = uplink_beams(new, sp)
        if _max_rel_change(new, lam) < tol:
            return new, beams, trace
        lam = new
    raise NoConvergence(f"matrix iteration did not settle in {max_iter} rounds")


def recover_downlink(lam, beams, sp):
    """Physical transmit design from a converged dual point.

    Solves the M+1 tight downlink SINR constraints for the stream powers and
    scales the (unchanged) uplink directions:
    v = sqrt(p0) v~, w_m = sqrt(p_m) w~_m.

    Raises:
        Singular: the tight-constraint system lost invertibility.
        NegativePower: a power came out negative (non-converged input).
    """
    cm = coupling_matrices(beams, sp)
    mat = np.eye(sp.M + 1) - cm.d[:, None] * cm.F.T
    p = linear_solve_real(mat, cm.d * cm.noise)
    if np.min(p) < -1e-12 * max(np.max(np.abs(p)), 1.0):
        raise NegativePower(f"recovered powers contain {np.min(p):.3e}")
    p = np.maximum(p, 0.0)
    w = np.sqrt(p[1:])[:, None] * beams.w
    v = np.sqrt(p[0]) * beams.v
    return DownlinkSolution(w=w, v=v, p=p, method="optimal")


def classify_convergence(trace, lam_star):
    """Classify a dual iteration's tail as linear (with its asymptotic ratio)
    or superlinear, from the error-norm ratios against lam_star.

    Raises:
        Inconclusive: fewer than 5 clean ratios before the precision floor.
    """
    lam_star = np.asarray(lam_star, dtype=float)
    errs = [float(np.linalg.norm(lam - lam_star)) for lam in trace.lambdas]
    floor = 1e-10 * (1.0 + float(np.linalg.norm(lam_star)))
    ratios = [e1 / e0 for e0, e1 in zip(errs, errs[1:])
              if e0 > floor and e1 > floor]
    if len(ratios) < 5:
        raise Inconclusive(f"only {len(ratios)} usable error ratios")
    tail = ratios[-5:]
    falling = all(b < a for a, b in zip(tail, tail[1:]))
    if falling and tail[-1] < 0.5 * tail[0]:
        return ConvergenceOrder(kind="superlinear")
    return ConvergenceOrder(kind="linear", rate=float(np.median(tail)))


def signaling_ratio(n_rounds, num_cbs, num_antennas):
    """Scalars exchanged by the distributed solver over a full-CSI exchange:
    (2 * n_rounds * M + (M+1)^2) / (2 N M^2)."""
    if min(n_rounds, num_cbs, num_antennas) < 1:
        raise ValueError("all arguments must be >= 1")
    return (2 * n_rounds * num_cbs + (num_cbs + 1) ** 2) / (2 * num_antennas * num_cbs ** 2)


# --- distributed implementation (deterministic round-based simulation) ---

def local_views(sp):
    """Split the instance into what each CBS can see locally."""
    ns = sp.config.ns_cbs()
    return [LocalView(j=j, h=sp.ch.h[j], gnorm2=float(sp.gnorm2[j]), ns=float(ns[j]),
                      p0=sp.config.P0, gamma_own=float(sp.targets.gamma[j]),
                      gamma0p=sp.targets.gamma0p)
            for j in range(sp.M)]


def _local_cu_dual(view, lam):
    if view.gamma_own <= 0.0:
        return 0.0
    weights = np.asarray(lam, dtype=float).copy()
    weights[view.j + 1] = 0.0
    b = np.eye(view.h.shape[1], dtype=np.complex128) + (view.h.T * weights) @ view.h.conj()
    own = view.h[view.j + 1]
    q = float(np.vdot(own, hermitian_solve(b, own)).real)
    return view.gamma_own / q


def _local_alpha(view, lam0, cu_duals):
    """CBS_j's additive share of the relay-constraint quotient, from local
    CSI only: the block-diagonal structure of the stacked system decouples
    the global solve into per-CBS pieces."""
    scale = view.p0 * view.gnorm2 + view.ns
    weights = np.concatenate(([lam0 * view.ns], cu_duals * scale))
    mat = scale * np.eye(view.h.shape[1], dtype=np.complex128) \
        + (view.h.T * weights) @ view.h.conj()
    h_pu = view.h[0]
    return view.gnorm2 * float(np.vdot(h_pu, hermitian_solve(mat, h_pu)).real)


def cbs_alphas(lam, sp):
    """Per-CBS relay-quotient shares at the dual point lam (sums to the
    global quotient h0^H A(lam)^{-1} h0)."""
    lam = np.asarray(lam, dtype=float)
    return np.array([_local_alpha(view, lam[0], lam[1:]) for view in local_views(sp)])


def solve_fixed_point_distributed(sp, tol=1e-10, max_iter=100_000, ceiling=1e12):
    """Message-passing form of the fixed-point solver.

    Each round: every CBS updates its own CU dual from local CSI and the
    previously received duals, broadcasts it, then computes and broadcasts
    its relay-quotient share; every node forms the common relay dual from
    the shares. After convergence the coordinator shares the
    (M+1)x(M+1) uplink-to-downlink conversion matrix.

    Returns:
        (lam_star, trace, log); the lam trajectory matches the centralized
        solver's round for round.

    Raises:
        Diverged: same contract as solve_fixed_point.
    """
    views = local_views(sp)
    m = sp.M
    lam = np.zeros(m + 1)
    trace = ConvergenceTrace()
    trace.append(lam, 0.0)
    log = MessageLog()
    rounds = 0
    converged = False
    for rnd in range(1, max_iter + 1):
        new = np.empty(m + 1)
        for view in views:
            new[view.j + 1] = _local_cu_dual(view, lam)
            log.record(rnd, view.j + 1, "lambda", new[view.j + 1])
        alphas = np.empty(m)
        for view in views:
            alphas[view.j] = _local_alpha(view, lam[0], new[1:])
            log.record(rnd, view.j + 1, "alpha", alphas[view.j])
        new[0] = sp.targets.gamma0p / float(np.sum(alphas)) if sp.targets.gamma0p > 0 else 0.0
        if not np.all(np.isfinite(new)) or np.max(new) > ceiling:
            raise Diverged("distributed dual iterates exceeded the ceiling")
        trace.append(new, float(sp.noise @ new))
        rounds = rnd
        if _max_rel_change(new, lam) < tol:
            converged = True
            lam = new
            break
        lam = new
    if not converged:
        raise Diverged(f"no convergence within {max_iter} rounds")
    log.n_rounds = rounds

    # coordinator share: the downlink power conversion matrix (I - D F^T)^{-1} D
    beams = uplink_beams(lam, sp)
    cm = coupling_matrices(beams, sp)
    conv = np.linalg.inv(np.eye(m + 1) - cm.d[:, None] * cm.F.T) * cm.d[None, :]
    for i in range(m + 1):
        for j in range(m + 1):
            log.record(rounds + 1, 0, f"conversion_{i}{j}", conv[i, j])
    return lam, trace, log
