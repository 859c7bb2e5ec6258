"""Hamiltonian matrix assembly kernels (numba-compiled with numpy twin).

Both paths build the same symmetrized matrix

    M_ij = q_i^2 delta_ij + sqrt(w_i w_j) q_i q_j K(q_i, q_j),
    K(p, q) = -alpha/(2l+1) min(p,q)^l / max(p,q)^(l+1) + gamma (p q)^l,

filling the upper triangle once and mirroring, so M == M.T holds exactly.
"""

import numpy as np

from ._accel import NUMBA_ENABLED, njit


def _assemble_impl(q, w, alpha, l, gamma):
    n = q.shape[0]
    m = np.empty((n, n))
    pref = -alpha / (2.0 * l + 1.0)
    for i in range(n):
        qi = q[i]
        swi = np.sqrt(w[i])
        for j in range(i, n):
            qj = q[j]
            lo = qi if qi < qj else qj
            hi = qj if qi < qj else qi
            kern = pref * lo**l / hi ** (l + 1) + gamma * (qi * qj) ** l
            val = swi * np.sqrt(w[j]) * qi * qj * kern
            m[i, j] = val
            m[j, i] = val
        m[i, i] += qi * qi
    return m


def assemble_numpy(q, w, alpha, l, gamma):
    """Vectorized assembly; symmetric bit-for-bit by elementwise symmetry."""
    lo = np.minimum.outer(q, q)
    hi = np.maximum.outer(q, q)
    kern = (-alpha / (2.0 * l + 1.0)) * lo**l / hi ** (l + 1)
    if gamma != 0.0:
        sep = q**l
        kern = kern + gamma * np.multiply.outer(sep, sep)
    sw = np.sqrt(w)
    m = np.multiply.outer(sw * q, sw * q) * kern
    m[np.diag_indices_from(m)] += q * q
    return m


assemble_loops_py = _assemble_impl

if NUMBA_ENABLED:
    assemble_loops_jit = njit(cache=True)(_assemble_impl)
    assemble = assemble_loops_jit
else:
    assemble_loops_jit = None
    assemble = assemble_numpy
