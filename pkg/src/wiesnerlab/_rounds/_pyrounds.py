"""Pure-Python round-sampling kernel (fallback backend).

Same contract as the compiled kernel in _crounds.pyx; see package __init__.
"""

import math

import numpy as np


def sample_transfer_rounds(m_pass, probe, n_rounds, uniforms):
    """Sample up to n_rounds of postselected probe evolution.

    Each round applies the 2×2 map m_pass to the probe, passes verification
    with probability ‖m_pass·probe‖² (probe normalized at round start), and
    renormalizes on pass. uniforms[k] decides round k+1; exactly one uniform
    is consumed per executed round.

    Returns (caught_round, probe_out): caught_round 0 means all rounds passed
    and probe_out is the final normalized probe; caught_round k > 0 means
    verification k failed and probe_out is the normalized probe at the start
    of round k.
    """
    m00 = complex(m_pass[0, 0])
    m01 = complex(m_pass[0, 1])
    m10 = complex(m_pass[1, 0])
    m11 = complex(m_pass[1, 1])
    p0 = complex(probe[0])
    p1 = complex(probe[1])
    us = uniforms.tolist()
    for k in range(n_rounds):
        v0 = m00 * p0 + m01 * p1
        v1 = m10 * p0 + m11 * p1
        p = (v0.real * v0.real + v0.imag * v0.imag
             + v1.real * v1.real + v1.imag * v1.imag)
        if us[k] < (p if p < 1.0 else 1.0):
            inv = 1.0 / math.sqrt(p)
            p0 = v0 * inv
            p1 = v1 * inv
        else:
            return k + 1, np.array([p0, p1], dtype=np.complex128)
    return 0, np.array([p0, p1], dtype=np.complex128)
