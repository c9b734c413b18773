"""q-deformed differential calculus on the circle and its quantum metric."""

from .qcalc import (
    ApproxConstant,
    QDeformation,
    QOverflowError,
    delta_q,
    epsilon_M,
    gamma_M,
    psi_q,
    q_integer,
)

__version__ = "0.1.0"
