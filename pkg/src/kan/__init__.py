"""
Kolmogorov-Arnold network: spline activations and the layered network.

Model JSON I/O lives in `src.kan.serialization`; it depends on the symbolic
edge types, so it is not re-exported here.
"""

from .splines import Activation, KnotVector, make_knots  # noqa: F401
from .network import ForwardCache, InputMeta, Network, RegPenalty, init_network, forward, backward  # noqa: F401
