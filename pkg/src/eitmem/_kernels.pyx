# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled susceptibility kernel. Same contract as ``_kernels_py.chi_channels``.

The inner loop works on real and imaginary parts separately; complex
division through the C complex type is several times slower.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, isinf

cnp.import_array()


def chi_channels(omega, bfield, pop, dg, cc, off, zp, zs,
                 double delta_p, double delta_c, double gamma, double gamma0):
    cdef double[::1] w = np.ascontiguousarray(omega, dtype=np.float64).ravel()
    cdef double[::1] b = np.ascontiguousarray(bfield, dtype=np.float64).ravel()
    cdef double[::1] p = np.ascontiguousarray(pop, dtype=np.float64)
    cdef double[:, ::1] d = np.ascontiguousarray(dg, dtype=np.float64)
    cc_arr = np.ascontiguousarray(cc, dtype=np.float64)
    # controls are scaled by their largest value per channel (see the numpy version)
    scale_arr = np.abs(cc_arr).max(axis=1)
    safe = np.where(scale_arr > 0, scale_arr, 1.0)
    cdef double[:, ::1] c = np.ascontiguousarray(cc_arr / safe[:, None])
    cdef double[::1] sc = np.ascontiguousarray(safe)
    cdef double[:, ::1] o = np.ascontiguousarray(off, dtype=np.float64)
    cdef double[:, ::1] z = np.ascontiguousarray(zp, dtype=np.float64)
    cdef double[::1] zsv = np.ascontiguousarray(zs, dtype=np.float64)

    cdef Py_ssize_t n_w = w.shape[0], n_b = b.shape[0]
    cdef Py_ssize_t n_m = p.shape[0], n_f = d.shape[1]
    out_arr = np.zeros((n_w, n_b), dtype=np.complex128)
    cdef double[:, :, ::1] out = out_arr.view(np.float64).reshape(n_w, n_b, 2)

    cdef Py_ssize_t i, k, m, f
    cdef double hg = 0.5 * gamma
    cdef double hg2 = hg * hg
    cdef double ar, ai, br, bi, cr, ci, x, den, ir, ii
    cdef double dr, di, b2r, b2i, tr, ti, pm, dm, cm, wk, scale
    cdef bint coupled

    for i in range(n_w):
        for k in range(n_b):
            for m in range(n_m):
                pm = p[m]
                if pm == 0.0:
                    continue
                scale = sc[m]
                ar = ai = br = bi = cr = ci = 0.0
                coupled = False
                wk = w[i] + delta_p
                for f in range(n_f):
                    dm = d[m, f]
                    cm = c[m, f]
                    if dm == 0.0 and cm == 0.0:
                        continue
                    # 1 / (x + i Gamma/2)
                    x = wk + z[m, f] * b[k] - o[m, f]
                    den = 1.0 / (x * x + hg2)
                    ir = x * den
                    ii = -hg * den
                    if dm != 0.0:
                        ar += 0.5 * dm * dm * ir
                        ai += 0.5 * dm * dm * ii
                    if cm != 0.0:
                        cr += 0.25 * cm * cm * ir
                        ci += 0.25 * cm * cm * ii
                        if dm != 0.0:
                            br += 0.5 * dm * cm * ir
                            bi += 0.5 * dm * cm * ii
                            coupled = True
                tr = ar
                ti = ai
                if coupled:
                    # B^2 / (2 (D_s - C))
                    dr = 2.0 * ((wk - delta_c + zsv[m] * b[k]) / scale / scale - cr)
                    di = 2.0 * (gamma0 / scale / scale - ci)
                    if not (isinf(dr) or isinf(di)):
                        b2r = br * br - bi * bi
                        b2i = 2.0 * br * bi
                        # Smith's division avoids overflow in dr**2 + di**2
                        if fabs(dr) >= fabs(di):
                            x = di / dr
                            den = 1.0 / (dr + di * x)
                            tr += (b2r + b2i * x) * den
                            ti += (b2i - b2r * x) * den
                        else:
                            x = dr / di
                            den = 1.0 / (dr * x + di)
                            tr += (b2r * x + b2i) * den
                            ti += (b2i * x - b2r) * den
                out[i, k, 0] -= pm * tr
                out[i, k, 1] -= pm * ti
    return out_arr
