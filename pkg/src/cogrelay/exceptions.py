"""Exception types raised across the package."""


class CogrelayError(Exception):
    """Base class for all library errors."""


# --- linear algebra kernel ---

class NotPositiveDefinite(CogrelayError):
    """Hermitian solve hit a nonpositive pivot: matrix is not PD."""


class Singular(CogrelayError):
    """Real linear solve hit a vanishing pivot: matrix is singular."""


class NoConvergence(CogrelayError):
    """Power iteration did not converge within the iteration cap."""


# --- network model ---

class ModeII(CogrelayError):
    """Direct primary link already meets its target; no cooperation needed."""


class DegenerateRelayChannel(CogrelayError):
    """A backhaul channel g_j has zero norm; the relay weighting collapses."""


# --- optimal solvers ---

class Diverged(CogrelayError):
    """Dual fixed-point iterates grew past the ceiling: targets infeasible."""


class Infeasible(CogrelayError):
    """Feasibility probe certified the SINR targets cannot be met."""


class DegenerateDirection(CogrelayError):
    """A beamforming direction vanished before normalization."""


class ZeroGain(CogrelayError):
    """A user's effective channel gain under the current beams is zero."""


class NegativePower(CogrelayError):
    """Downlink power recovery produced a negative entry (bad input state)."""


class Inconclusive(CogrelayError):
    """Too few clean iterations to classify a convergence order."""


# --- zero-forcing ---

class DimensionDeficit(CogrelayError):
    """Not enough antennas to null the required directions (needs N > M)."""


class ZeroProjection(CogrelayError):
    """The wanted channel lies (numerically) inside the nulled span."""


class PuInfeasible(CogrelayError):
    """Relay direction cannot reach the primary-user target at any power."""


class OutOfRegime(CogrelayError):
    """Closed-form comparison only defined for M=1 with a viable backhaul."""


# --- oracle ---

class InfeasibleScalar(CogrelayError):
    """The single-CBS scalar instance has no finite-power solution."""


class NoFeasibleGridPoint(CogrelayError):
    """Exhaustive power grid contains no point meeting all constraints."""


# --- experiment harness ---

class NoFeasibleInstance(CogrelayError):
    """Could not draw a feasible realization within the attempt cap."""
