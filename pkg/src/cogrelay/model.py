"""Network model: instance generation, SINR targets, the stacked relay
reformulation, and evaluation of candidate solutions.

.conventions:
    * All powers are linear and noise-normalized.
    * Rates are bps/Hz under the two-phase protocol, rate = 0.5*log2(1+SINR).
    * Channel vectors are column vectors; ``np.vdot(h, x)`` is ``h^H x``.
"""

from dataclasses import dataclass, field
import numpy as np

from .exceptions import DegenerateRelayChannel, ModeII

FADING_MODES = ("phase-only", "rayleigh")


def _pervec(value, count, name):
    """Broadcast a scalar (or pass through a length-``count`` sequence)."""
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.shape == (1,):
        arr = np.full(count, arr[0])
    if arr.shape != (count,):
        raise ValueError(f"{name} must be scalar or length {count}")
    return arr


@dataclass(frozen=True, eq=False)
class SystemConfig:
    """Static parameters of one primary/cognitive network.

    Attributes:
        K: PBS antenna count.
        M: number of CBS/CU pairs.
        N: antennas per CBS.
        P0: PBS transmit power.
        N1p, N2p: PU noise power in phase I / phase II.
        Nsm: CBS receive noise power (scalar or per CBS).
        Nm: CU noise power (scalar or per CU).
        r0: PU target rate (bps/Hz).
        r_cu: CU target rates (scalar or per CU, bps/Hz).
        alpha: path-loss exponent.
        d_*: link distances (PBS-PU defaults to 2, everything else to 1).
        fading: "phase-only" draws unit-modulus entries scaled by d^(-alpha/2);
            "rayleigh" additionally multiplies each entry by a CN(0,1) draw.
        seed: base seed of the per-realization random streams.
        f_override: fixed unit PBS beam; default is matched transmission
            h0p/||h0p||.
    """

    K: int = 2
    M: int = 3
    N: int = 4
    P0: float = 10.0
    N1p: float = 1.0
    N2p: float = 1.0
    Nsm: object = 1.0
    Nm: object = 1.0
    r0: float = 2.0
    r_cu: object = 1.0
    alpha: float = 3.5
    d_pbs_pu: float = 2.0
    d_pbs_cbs: float = 1.0
    d_cbs_pu: float = 1.0
    d_cbs_cu: float = 1.0
    fading: str = "phase-only"
    seed: int = 0
    f_override: object = None

    def __post_init__(self):
        if min(self.K, self.M, self.N) < 1:
            raise ValueError("K, M, N must all be >= 1")
        if min(self.P0, self.N1p, self.N2p) <= 0:
            raise ValueError("powers must be positive")
        if np.any(self.ns_cbs() <= 0) or np.any(self.noise_cu() <= 0):
            raise ValueError("noise powers must be positive")
        if self.r0 < 0 or np.any(self.rates_cu() < 0):
            raise ValueError("rates must be >= 0")
        if self.alpha <= 0:
            raise ValueError("path-loss exponent must be positive")
        if min(self.d_pbs_pu, self.d_pbs_cbs, self.d_cbs_pu, self.d_cbs_cu) <= 0:
            raise ValueError("distances must be positive")
        if self.fading not in FADING_MODES:
            raise ValueError(f"fading must be one of {FADING_MODES}")

    def ns_cbs(self):
        return _pervec(self.Nsm, self.M, "Nsm")

    def noise_cu(self):
        return _pervec(self.Nm, self.M, "Nm")

    def rates_cu(self):
        return _pervec(self.r_cu, self.M, "r_cu")


@dataclass(frozen=True, eq=False)
class ChannelSet:
    """One realization of every channel in the network.

    Attributes:
        h0p: (K,) PBS->PU channel.
        f:   (K,) unit-norm PBS transmit beam.
        g:   (M, N) effective PBS->CBS_j channel, g_j = G_j f.
        h:   (M, M+1, N); h[j, 0] is CBS_j->PU, h[j, m] is CBS_j->CU_m.
    """

    h0p: np.ndarray
    f: np.ndarray
    g: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        if abs(np.linalg.norm(self.f) - 1.0) > 1e-12:
            raise ValueError("PBS beam f must be unit norm")
        m, mp1, n = self.h.shape
        if mp1 != m + 1 or self.g.shape != (m, n) or self.h0p.shape != self.f.shape:
            raise ValueError("inconsistent channel dimensions")

    @property
    def M(self):
        return self.h.shape[0]

    @property
    def N(self):
        return self.h.shape[2]


@dataclass(frozen=True, eq=False)
class Targets:
    """SINR targets: gamma0p is the residual demand on the relay path after
    crediting the direct PU link; gamma[m] is CU m+1's target."""

    gamma0p: float
    gamma: np.ndarray

    @property
    def cooperation_needed(self):
        return self.gamma0p > 0


@dataclass(frozen=True, eq=False)
class StackedProblem:
    """Aggregates of the rank-1-relay reformulation.

    With the stacked relay vector v = [v_1; ...; v_M] (each block length N):
        * |h0^H v|^2 is the coherent PU signal power,
        * ||hbar0 v||^2 collects forwarded CBS self-noise hitting the PU,
        * ||hbar[m] v||^2 collects total relay power leaking into CU m+1,
        * v^H diag(dv) v is the relay transmit power.
    """

    h0: np.ndarray       # (M*N,)
    hbar0: np.ndarray    # (M, M*N), block-diagonal rows
    hbar: np.ndarray     # (M, M, M*N)
    dv: np.ndarray       # (M*N,) positive
    gnorm2: np.ndarray   # (M,)
    targets: Targets
    noise: np.ndarray    # (M+1,) = [N2p, N_1, ..., N_M]
    ch: ChannelSet
    config: SystemConfig

    @property
    def M(self):
        return self.ch.M

    @property
    def N(self):
        return self.ch.N


@dataclass(frozen=True, eq=False)
class DownlinkSolution:
    """A candidate transmit design.

    Attributes:
        w: (M, N) CU transmit beamformers.
        v: (M*N,) stacked relay vector; CBS_j's relay matrix is v_j g_j^H.
        p: (M+1,) stream powers [p0, p_1..p_M] for direction+power methods,
            else None.
        method: provenance tag, one of "optimal" | "czf" | "pzf".
    """

    w: np.ndarray
    v: np.ndarray
    p: object = None
    method: str = "optimal"

    def v_blocks(self, n):
        return self.v.reshape(-1, n)


@dataclass(frozen=True, eq=False)
class SinrReport:
    pu_relay: float        # relay-path SINR fraction (excludes the P0 factor)
    pu_total: float        # end-to-end PU SINR after MRC
    cu: np.ndarray         # (M,) CU SINRs
    rate_pu: float
    rate_cu: np.ndarray


def realization_rng(seed, index, stream=0):
    """Independent, reproducible random stream for one realization."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index, stream)))


def _draw_channel(rng, shape, distance, config):
    mag = distance ** (-config.alpha / 2.0)
    ch = mag * np.exp(2j * np.pi * rng.random(shape))
    if config.fading == "rayleigh":
        gauss = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        ch = ch * gauss / np.sqrt(2.0)
    return ch


def generate_instance(config, index):
    """Draw the channel realization for (config.seed, index).

    Deterministic: the same pair always yields a bit-identical ChannelSet,
    independent of how many other realizations were drawn before.
    """
    rng = realization_rng(config.seed, index)
    h0p = _draw_channel(rng, (config.K,), config.d_pbs_pu, config)
    g_full = _draw_channel(rng, (config.M, config.N, config.K), config.d_pbs_cbs, config)
    h = np.empty((config.M, config.M + 1, config.N), dtype=np.complex128)
    h[:, 0, :] = _draw_channel(rng, (config.M, config.N), config.d_cbs_pu, config)
    h[:, 1:, :] = _draw_channel(rng, (config.M, config.M, config.N), config.d_cbs_cu, config)
    if config.f_override is not None:
        f = np.asarray(config.f_override, dtype=np.complex128)
    else:
        f = h0p / np.linalg.norm(h0p)
    g = g_full @ f
    return ChannelSet(h0p=h0p, f=f, g=g, h=h)


def sinr_targets(config, ch):
    """SINR targets from the rate requirements.

    gamma0p <= 0 means the direct PU link alone already supports r0 under the
    two-phase protocol (no cooperation needed); that is a valid outcome here,
    reported rather than raised.
    """
    direct = abs(np.vdot(ch.h0p, ch.f)) ** 2 / config.N1p
    gamma0p = (2.0 ** (2.0 * config.r0) - 1.0) / config.P0 - direct
    gamma = 2.0 ** (2.0 * config.rates_cu()) - 1.0
    return Targets(gamma0p=float(gamma0p), gamma=gamma)


def build_stacked(ch, targets, config):
    """Assemble the stacked aggregates consumed by every solver.

    Raises:
        ModeII: targets.gamma0p <= 0 (no cooperation regime).
        DegenerateRelayChannel: some ||g_j|| = 0.
    """
    if targets.gamma0p <= 0:
        raise ModeII("direct link meets the PU target; route to no-cooperation handling")
    m, n = ch.M, ch.N
    gnorm2 = np.sum(np.abs(ch.g) ** 2, axis=1)
    if np.any(gnorm2 == 0.0):
        raise DegenerateRelayChannel("a PBS->CBS effective channel has zero norm")
    ns = config.ns_cbs()
    relay_weight = (config.P0 * gnorm2 + ns) * gnorm2   # per-CBS diag of D_v

    h0 = (gnorm2[:, None] * ch.h[:, 0, :]).reshape(m * n)
    hbar0 = np.zeros((m, m * n), dtype=np.complex128)
    hbar = np.zeros((m, m, m * n), dtype=np.complex128)
    for j in range(m):
        cols = slice(j * n, (j + 1) * n)
        hbar0[j, cols] = np.sqrt(ns[j] * gnorm2[j]) * ch.h[j, 0, :].conj()
        for mu in range(m):
            hbar[mu, j, cols] = np.sqrt((config.P0 * gnorm2[j] + ns[j]) * gnorm2[j]) \
                * ch.h[j, mu + 1, :].conj()
    dv = np.repeat(relay_weight, n)
    noise = np.concatenate(([config.N2p], config.noise_cu()))
    return StackedProblem(h0=h0, hbar0=hbar0, hbar=hbar, dv=dv, gnorm2=gnorm2,
                          targets=targets, noise=noise, ch=ch, config=config)


def relay_matrix(v_j, g_j):
    """Rank-1 relay matrix v_j g_j^H of one CBS."""
    return np.outer(np.asarray(v_j), np.asarray(g_j).conj())


def evaluate_solution(ch, sol, config):
    """Achieved SINRs of a candidate design, evaluated on the physical model.

    The relay matrices are materialized as v_j g_j^H and the SINRs computed
    from the received-signal expressions directly, so this is an independent
    check of anything derived through the stacked aggregates.
    """
    m, n = ch.M, ch.N
    ns = config.ns_cbs()
    nm = config.noise_cu()
    vb = sol.v_blocks(n)
    relays = [relay_matrix(vb[j], ch.g[j]) for j in range(m)]
    fwd_sig = np.array([relays[j] @ ch.g[j] for j in range(m)])   # A_j g_j

    cu = np.zeros(m)
    for mu in range(m):
        hmu = ch.h[:, mu + 1, :]                                  # h_{j,m} over j
        sig = abs(np.vdot(hmu[mu], sol.w[mu])) ** 2
        interf = sum(abs(np.vdot(hmu[j], sol.w[j])) ** 2 for j in range(m) if j != mu)
        relay_in = sum(config.P0 * abs(np.vdot(hmu[j], fwd_sig[j])) ** 2
                       + ns[j] * np.sum(np.abs(hmu[j].conj() @ relays[j]) ** 2)
                       for j in range(m))
        cu[mu] = sig / (interf + relay_in + nm[mu])

    h0 = ch.h[:, 0, :]
    num = abs(sum(np.vdot(h0[j], fwd_sig[j]) for j in range(m))) ** 2
    den = sum(abs(np.vdot(h0[j], sol.w[j])) ** 2 for j in range(m)) \
        + sum(ns[j] * np.sum(np.abs(h0[j].conj() @ relays[j]) ** 2) for j in range(m)) \
        + config.N2p
    pu_relay = num / den
    direct = abs(np.vdot(ch.h0p, ch.f)) ** 2 / config.N1p
    pu_total = config.P0 * (direct + pu_relay)
    return SinrReport(pu_relay=float(pu_relay), pu_total=float(pu_total), cu=cu,
                      rate_pu=0.5 * np.log2(1.0 + pu_total),
                      rate_cu=0.5 * np.log2(1.0 + cu))


def total_power(sol, sp):
    """Total CBS transmit power of a design: sum_j ||w_j||^2 + v^H D_v v."""
    return float(np.sum(np.abs(sol.w) ** 2) + np.sum(sp.dv * np.abs(sol.v) ** 2))


# --- channel file round-trip (golden-instance regression format) ---

_FILE_MAGIC = "# cogrelay channels v1"


def _fmt_cvec(vec):
    return " ".join(f"{float(z.real)!r},{float(z.imag)!r}" for z in vec)


def _parse_cvec(text, n):
    parts = text.split()
    if len(parts) != n:
        raise ValueError(f"expected {n} complex entries, got {len(parts)}")
    out = np.empty(n, dtype=np.complex128)
    for i, tok in enumerate(parts):
        re_s, im_s = tok.split(",")
        out[i] = complex(float(re_s), float(im_s))
    return out


def save_channels(ch, path):
    """Write a ChannelSet as human-readable text.

    Layout: header with K/M/N, then h0p, f, g_1..g_M, then h_jm row-major in
    (j, m) with m = 0..M. Complex entries are "re,im" pairs at full precision.
    """
    m, n = ch.M, ch.N
    lines = [_FILE_MAGIC,
             f"K {len(ch.h0p)}", f"M {m}", f"N {n}",
             f"h0p {_fmt_cvec(ch.h0p)}", f"f {_fmt_cvec(ch.f)}"]
    for j in range(m):
        lines.append(f"g {j + 1} {_fmt_cvec(ch.g[j])}")
    for j in range(m):
        for mu in range(m + 1):
            lines.append(f"h {j + 1} {mu} {_fmt_cvec(ch.h[j, mu])}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_channels(path):
    """Inverse of save_channels; exact round-trip."""
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0] != _FILE_MAGIC:
        raise ValueError("not a cogrelay channel file")
    header = {}
    body = {}
    for ln in lines[1:]:
        key, _, rest = ln.partition(" ")
        if key in ("K", "M", "N"):
            header[key] = int(rest)
        elif key in ("h0p", "f"):
            body[key] = rest
        elif key == "g":
            j, _, vec = rest.partition(" ")
            body[("g", int(j))] = vec
        elif key == "h":
            j, _, rest2 = rest.partition(" ")
            mu, _, vec = rest2.partition(" ")
            body[("h", int(j), int(mu))] = vec
        else:
            raise ValueError(f"unrecognized line key: {key!r}")
    k, m, n = header["K"], header["M"], header["N"]
    h0p = _parse_cvec(body["h0p"], k)
    f = _parse_cvec(body["f"], k)
    g = np.array([_parse_cvec(body[("g", j + 1)], n) for j in range(m)])
    h = np.array([[_parse_cvec(body[("h", j + 1, mu)], n) for mu in range(m + 1)]
                  for j in range(m)])
    return ChannelSet(h0p=h0p, f=f, g=g, h=h)
