"""Pure numpy implementation of the susceptibility kernel.

Mirrors ``_kernels.pyx`` exactly; used when the compiled extension is not
available or ``EITMEM_PURE_PYTHON`` is set.
"""

import numpy as np


def chi_channels(omega, bfield, pop, dg, cc, off, zp, zs,
                 delta_p, delta_c, gamma, gamma0):
    """Population-weighted probe response summed over Zeeman channels.

    For every (omega, B) pair each channel's 5x5 Bloch system is reduced
    analytically: the excited coherences are eliminated in favour of the
    ground-state coherence, leaving

        chi_m = -p_m * (A + B**2 / (2 (D_s - C)))

    with A = sum d^2/(2 D_F), B = sum d c/(2 D_F), C = sum c^2/(4 D_F).

    Args:
        omega: (N,) envelope angular frequencies, rad/s.
        bfield: (K,) magnetic fields, gauss.
        pop: (M,) ground populations.
        dg, cc, off, zp: (M, F) probe dipoles, control Rabi frequencies,
            zero-field excited offsets and probe Zeeman coefficients
            (rad/s per gauss).
        zs: (M,) two-photon Zeeman coefficients, rad/s per gauss.

    Returns:
        (N, K) complex array.
    """
    omega = np.asarray(omega, dtype=float)
    bfield = np.asarray(bfield, dtype=float)
    out = np.zeros((omega.size, bfield.size), dtype=complex)
    w = omega[:, None]
    b = bfield[None, :]
    half_gamma = 0.5j * gamma
    for m in range(len(pop)):
        if pop[m] == 0.0:
            continue
        # controls are scaled by their largest value so that B^2/(D_s - C)
        # keeps its finite limit when Omega_c underflows at two-photon resonance
        scale = np.max(np.abs(cc[m]))
        A = np.zeros_like(out)
        Bc = np.zeros_like(out)
        C = np.zeros_like(out)
        coupled = False
        for f in range(dg.shape[1]):
            d = dg[m, f]
            c = cc[m, f] / scale if scale > 0 else 0.0
            if d == 0.0 and c == 0.0:
                continue
            inv = 1.0 / (w + delta_p + zp[m, f] * b - off[m, f] + half_gamma)
            if d != 0.0:
                A += (0.5 * d * d) * inv
            if c != 0.0:
                C += (0.25 * c * c) * inv
                if d != 0.0:
                    Bc += (0.5 * d * c) * inv
                    coupled = True
        term = A
        if coupled:
            Ds = w + delta_p - delta_c + zs[m] * b + 1j * gamma0
            with np.errstate(over="ignore", invalid="ignore"):
                den = 2.0 * (Ds / scale / scale - C)
            ok = np.isfinite(den)
            # an overflowing denominator means the dark-state term vanishes
            term = A + np.where(ok, Bc * Bc / np.where(ok, den, 1.0), 0.0)
        out -= pop[m] * term
    return out
