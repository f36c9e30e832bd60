"""Mild-solution solver for the Prandtl boundary-layer equations with a
Robin (Navier-slip) wall condition.

The pipeline: a gauge transform turns the Robin condition into a Neumann one,
half-line heat potentials turn the PDE into an integral equation, and Picard
iteration solves the fixed point.  Independent finite-difference oracles and
analyticity diagnostics check every step.
"""

__version__ = "0.1.0"

from .fields import (  # noqa: F401
    Field2D,
    Gauge,
    Grid,
    Trajectory,
    cumint_y,
    d2dy2,
    ddx,
    ddy,
    make_grid,
)
