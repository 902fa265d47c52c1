"""Joint AF-relay and coordinated-beamforming power minimization for a
cognitive system that relays a primary user's signal in exchange for
spectrum access.

Typical flow:

    cfg = SystemConfig()
    ch = generate_instance(cfg, index=0)
    t = sinr_targets(cfg, ch)
    sp = build_stacked(ch, t, cfg)          # raises ModeII if no help needed
    lam, beams, _ = solve_matrix_iteration(sp)
    sol = recover_downlink(lam, beams, sp)
    report = evaluate_solution(ch, sol, cfg)
"""

from . import exceptions
from .model import (ChannelSet, DownlinkSolution, SinrReport, StackedProblem,
                    SystemConfig, Targets, build_stacked, evaluate_solution,
                    generate_instance, load_channels, realization_rng,
                    relay_matrix, save_channels, sinr_targets, total_power)
from .numerics import dominant_eigpair, hermitian_solve, linear_solve_real
from .oracle import KktReport, grid_power_search, kkt_verify, scalar_closed_form
from .solvers import (BeamSet, ConvergenceOrder, ConvergenceTrace,
                      CouplingMatrices, MessageLog, cbs_alphas,
                      classify_convergence, coupling_matrices,
                      fixed_point_step, recover_downlink, signaling_ratio,
                      sinr_balance, solve_fixed_point,
                      solve_fixed_point_distributed, solve_matrix_iteration,
                      uplink_beams)
from .zeroforcing import (Theorem3Report, czf_solve, pzf_solve,
                          theorem3_powers, zf_transmit_directions)

__version__ = "0.1.0"
