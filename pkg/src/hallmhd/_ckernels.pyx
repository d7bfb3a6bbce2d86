# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled per-mode kernels; see ``_pykernels`` for the reference versions.

Complex arrays are walked through float64 views (real, imag interleaved) so
the inner loops stay in plain double arithmetic.
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def project_divergence(tensor, const double[::1] k1, const double[::1] k2,
                       const double[::1] k3, const double[::1] inv_ksq, bint with_curl):
    cdef const double[:, :, ::1] t = np.ascontiguousarray(tensor, dtype=np.complex128).view(np.float64)
    cdef Py_ssize_t n = k1.shape[0]
    cdef Py_ssize_t q, r, i, j
    cdef double a, b, c, w
    cdef double dr[3]
    cdef double di[3]
    cdef double pr[3]
    cdef double pi[3]
    cdef double kdr, kdi
    out = np.empty((3, n), dtype=np.complex128)
    cdef double[:, ::1] o = out.view(np.float64)
    with nogil:
        for q in range(n):
            a = k1[q]
            b = k2[q]
            c = k3[q]
            r = 2 * q
            i = r + 1
            # d_j = i (a T_0j + b T_1j + c T_2j)
            for j in range(3):
                dr[j] = -(a * t[0, j, i] + b * t[1, j, i] + c * t[2, j, i])
                di[j] = a * t[0, j, r] + b * t[1, j, r] + c * t[2, j, r]
            w = inv_ksq[q]
            kdr = (a * dr[0] + b * dr[1] + c * dr[2]) * w
            kdi = (a * di[0] + b * di[1] + c * di[2]) * w
            pr[0] = dr[0] - a * kdr
            pi[0] = di[0] - a * kdi
            pr[1] = dr[1] - b * kdr
            pi[1] = di[1] - b * kdi
            pr[2] = dr[2] - c * kdr
            pi[2] = di[2] - c * kdi
            if with_curl:
                # i (k x p)
                o[0, r] = -(b * pi[2] - c * pi[1])
                o[0, i] = b * pr[2] - c * pr[1]
                o[1, r] = -(c * pi[0] - a * pi[2])
                o[1, i] = c * pr[0] - a * pr[2]
                o[2, r] = -(a * pi[1] - b * pi[0])
                o[2, i] = a * pr[1] - b * pr[0]
            else:
                for j in range(3):
                    o[j, r] = pr[j]
                    o[j, i] = pi[j]
    return out


def duhamel_trapezoid(sources, const double[::1] decay, double h):
    src_c = np.ascontiguousarray(sources, dtype=np.complex128)
    cdef const double[:, :, ::1] s = src_c.view(np.float64)
    cdef Py_ssize_t m_count = s.shape[0]
    cdef Py_ssize_t ncomp = s.shape[1]
    cdef Py_ssize_t width = s.shape[2]
    cdef Py_ssize_t m, c, q
    cdef double e, f
    out = np.zeros(src_c.shape, dtype=np.complex128)
    acc_arr = np.array(s[0], copy=True)
    first_arr = np.array(s[0], copy=True)
    cdef double[:, :, ::1] o = out.view(np.float64)
    cdef double[:, ::1] acc = acc_arr
    cdef double[:, ::1] first = first_arr
    with nogil:
        for m in range(1, m_count):
            for c in range(ncomp):
                for q in range(width):
                    e = decay[q >> 1]
                    f = s[m, c, q]
                    acc[c, q] = e * acc[c, q] + f
                    first[c, q] = e * first[c, q]
                    o[m, c, q] = h * (acc[c, q] - 0.5 * first[c, q] - 0.5 * f)
    return out
