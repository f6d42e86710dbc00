"""Compiled Metropolis inner loops.

All randomness is passed in as arrays, so the kernels are pure functions of
their inputs and the same seed gives the same trajectory with or without JIT.
"""

import math

from numba import njit


@njit(cache=True)
def metropolis_sweeps(state, linear, indptr, indices, coeffs, temps, orders, uniforms):
    """Single-bit-flip Metropolis, one sweep per entry of ``temps``; ``state`` is updated in place."""
    n = state.shape[0]
    for s in range(temps.shape[0]):
        t = temps[s]
        for k in range(n):
            i = orders[s, k]
            field = linear[i]
            for p in range(indptr[i], indptr[i + 1]):
                if state[indices[p]]:
                    field += coeffs[p]
            delta = field if state[i] == 0 else -field
            if delta <= 0.0 or uniforms[s, k] < math.exp(-delta / t):
                state[i] = 1 - state[i]


@njit(cache=True)
def path_integral_sweeps(replicas, linear, indptr, indices, coeffs, slice_temp, couplings,
                         orders, uniforms):
    """Replica-coupled Metropolis for path-integral simulated quantum annealing.

    ``replicas`` has shape (slices, n). Each slice sees the classical energy at
    temperature ``slice_temp`` and is tied to its periodic neighbours along the
    imaginary-time axis by the dimensionless coupling ``couplings[s]``.
    """
    m, n = replicas.shape
    for s in range(couplings.shape[0]):
        jperp = couplings[s]
        for r in range(m):
            up = replicas[(r + 1) % m]
            down = replicas[(r - 1) % m]
            x = replicas[r]
            for k in range(n):
                i = orders[s, r, k]
                field = linear[i]
                for p in range(indptr[i], indptr[i + 1]):
                    if x[indices[p]]:
                        field += coeffs[p]
                d_classic = field if x[i] == 0 else -field
                sigma = 2 * x[i] - 1
                neighbours = (2 * up[i] - 1) + (2 * down[i] - 1)
                d_action = d_classic / slice_temp + 2.0 * jperp * sigma * neighbours
                if d_action <= 0.0 or uniforms[s, r, k] < math.exp(-d_action):
                    x[i] = 1 - x[i]
