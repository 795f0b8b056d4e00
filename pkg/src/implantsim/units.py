"""Power unit conversions."""

import numpy as np


def dbm_to_w(p_dbm):
    """dBm to watts; ``-inf`` maps to 0 W."""
    out = 10.0 ** ((np.asarray(p_dbm, dtype=float) - 30.0) / 10.0)
    return float(out) if np.ndim(out) == 0 else out


def w_to_dbm(p_w):
    """Watts to dBm; 0 W maps to ``-inf``."""
    p = np.asarray(p_w, dtype=float)
    with np.errstate(divide="ignore"):
        out = 10.0 * np.log10(p) + 30.0
    return float(out) if np.ndim(out) == 0 else out
