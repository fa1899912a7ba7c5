"""Quantized Wiener filter: linear precoder aware of 1-bit distortion, plus a
diagonal analog power stage applied after the DAC.

The analog gains are a reconstruction: d_n is proportional to the RMS of
antenna n's pre-quantization signal, sigma_s2 * ||P[n, :]||^2, rescaled so the
total radiated power equals E_tx.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from onebitmiso.errors import NumericalError
from onebitmiso.modulation.constellation import quantize_1bit
from onebitmiso.precoding.lut_precoder import ChannelRealization

logger = logging.getLogger(__name__)

RHO_Q = 1.0 - 2.0 / np.pi

_MAX_CONDITION = 1e12


@dataclass(frozen=True)
class QwfPrecoder:
    digital: np.ndarray
    g_qwf: float
    analog: np.ndarray
    rho_q: float = RHO_Q

    @property
    def radiated_power(self) -> float:
        return float(np.sum(self.analog ** 2))


def nondiag(a: np.ndarray) -> np.ndarray:
    return a - np.diag(np.diag(a))


def system_matrix(h: np.ndarray, etx: float, rho_q: float = RHO_Q) -> np.ndarray:
    """H^H H - rho_q nondiag(H^H H) + (M / E_tx) I_N."""
    m, n = h.shape
    gram = h.conj().T @ h
    return gram - rho_q * nondiag(gram) + (m / etx) * np.eye(n)


def build_qwf(
    channel: ChannelRealization, etx: float, sigma_s2: float, rho_q: float = RHO_Q
) -> QwfPrecoder:
    """Build P_QWF, g_QWF and the analog gains for one channel and linear E_tx."""
    h = channel.matrix
    a = system_matrix(h, etx, rho_q)
    cond = float(np.linalg.cond(a))
    if not np.isfinite(cond) or cond > _MAX_CONDITION:
        raise NumericalError("QWF system matrix is singular", condition_number=cond)
    try:
        # A^{-1} H^H; A is Hermitian
        b = scipy.linalg.solve(a, h.conj().T, assume_a="her")
    except (scipy.linalg.LinAlgError, ValueError) as e:
        raise NumericalError(f"QWF solve failed: {e}", condition_number=cond) from e

    # tr(A^{-2} H^H H) = ||A^{-1} H^H||_F^2 for Hermitian A
    trace = float(np.sum(np.abs(b) ** 2))
    if trace <= 0.0:
        raise NumericalError("QWF precoder is zero for an all-zero channel", condition_number=cond)
    g_qwf = np.sqrt(sigma_s2 * (1.0 - rho_q) / etx) * np.sqrt(trace)
    digital = b / g_qwf

    row_power = sigma_s2 * np.sum(np.abs(digital) ** 2, axis=1)
    analog = np.sqrt(etx * row_power / np.sum(row_power))
    logger.debug(
        "QWF built: g=%.4e, analog gains in [%.3e, %.3e], cond=%.2e",
        g_qwf, analog.min(), analog.max(), cond,
    )
    return QwfPrecoder(digital=digital, g_qwf=float(g_qwf), analog=analog, rho_q=rho_q)


def qwf_transmit(precoder: QwfPrecoder, s: np.ndarray) -> np.ndarray:
    """D Q(P_QWF s) for symbol vectors of shape (M,) or (B, M)."""
    s = np.asarray(s, dtype=complex)
    linear = s @ precoder.digital.T
    return precoder.analog * quantize_1bit(linear)
