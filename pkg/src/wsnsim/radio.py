"""First-order radio energy model.

All energies are in joules, packet sizes in bits, distances in meters.
"""

from .model import RadioParams


def tx_cost(radio: RadioParams, k: int, d: float) -> float:
    """Energy to transmit ``k`` bits over ``d`` meters.

    Free-space (d**2) loss below the crossover distance d0, multipath
    (d**4) loss at and beyond it.
    """
    if k == 0:
        return 0.0
    d2 = d * d
    if d < radio.d0:
        return k * radio.e_elec + k * radio.eps_fs * d2
    return k * radio.e_elec + k * radio.eps_mp * d2 * d2


def rx_cost(radio: RadioParams, k: int) -> float:
    return k * radio.e_elec


def aggregation_cost(radio: RadioParams, k: int, signals: int) -> float:
    """Energy to fuse ``signals`` packets of ``k`` bits into one."""
    return radio.e_da * k * signals
