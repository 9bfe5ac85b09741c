# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Lindblad right-hand side on block-packed density matrices.

Contract identical to ``tmsv._core._rhs_py``.
"""
import numpy as np


cdef inline double complex _conj(double complex z) noexcept nogil:
    return z.real - 1j * z.imag


cdef class Plan:
    cdef readonly object layout
    cdef const long long[::1] block_of, local, starts, sizes, offsets
    cdef const double complex[::1] h_data
    cdef const int[::1] h_indices, h_indptr
    cdef const long long[:, ::1] jump_src
    cdef const double complex[:, ::1] jump_w
    cdef const double[::1] coeffs

    def __init__(self, layout, h_data, h_indices, h_indptr, jump_src, jump_w, coeffs):
        self.layout = layout
        self.block_of = np.ascontiguousarray(layout.block_of, dtype=np.int64)
        self.local = np.ascontiguousarray(layout.local, dtype=np.int64)
        self.starts = np.ascontiguousarray(layout.starts, dtype=np.int64)
        self.sizes = np.ascontiguousarray(layout.sizes, dtype=np.int64)
        self.offsets = np.ascontiguousarray(layout.offsets, dtype=np.int64)
        self.h_data = np.ascontiguousarray(h_data, dtype=np.complex128)
        self.h_indices = np.ascontiguousarray(h_indices, dtype=np.int32)
        self.h_indptr = np.ascontiguousarray(h_indptr, dtype=np.int32)
        self.jump_src = np.ascontiguousarray(jump_src, dtype=np.int64).reshape(-1, layout.dim)
        self.jump_w = np.ascontiguousarray(jump_w, dtype=np.complex128).reshape(-1, layout.dim)
        self.coeffs = np.ascontiguousarray(coeffs, dtype=np.float64)


def prepare(layout, h_data, h_indices, h_indptr, jump_src, jump_w, coeffs):
    return Plan(layout, h_data, h_indices, h_indptr, jump_src, jump_w, coeffs)


cdef void _hamiltonian_part(Plan p, const double complex *rho, double complex *out, bint hermitian) noexcept nogil:
    cdef Py_ssize_t n_blocks = p.sizes.shape[0]
    cdef Py_ssize_t b, s, m, o, li, lj, q, lk
    cdef double complex h, a, c
    cdef const double complex *rrow
    cdef double complex *orow
    for b in range(n_blocks):
        s = p.starts[b]
        m = p.sizes[b]
        o = p.offsets[b]
        # Y = Heff rho (block)
        for li in range(m):
            orow = out + o + li * m
            for lj in range(m):
                orow[lj] = 0
            for q in range(p.h_indptr[s + li], p.h_indptr[s + li + 1]):
                h = p.h_data[q]
                lk = p.h_indices[q] - s
                rrow = rho + o + lk * m
                for lj in range(m):
                    orow[lj] = orow[lj] + h * rrow[lj]
        if hermitian:
            for li in range(m):
                a = out[o + li * m + li]
                out[o + li * m + li] = 2 * a.imag
                for lj in range(li + 1, m):
                    c = -1j * out[o + li * m + lj] + 1j * _conj(out[o + lj * m + li])
                    out[o + li * m + lj] = c
                    out[o + lj * m + li] = _conj(c)
        else:
            for li in range(m):
                orow = out + o + li * m
                rrow = rho + o + li * m
                for lj in range(m):
                    c = 0
                    for q in range(p.h_indptr[s + lj], p.h_indptr[s + lj + 1]):
                        c = c + rrow[p.h_indices[q] - s] * _conj(p.h_data[q])
                    orow[lj] = -1j * orow[lj] + 1j * c


cdef void _jump_part(Plan p, const double complex *rho, double complex *out, bint hermitian) noexcept nogil:
    cdef Py_ssize_t n_blocks = p.sizes.shape[0]
    cdef Py_ssize_t n_jumps = p.jump_src.shape[0]
    cdef Py_ssize_t k, b, s, m, o, li, lj, j0, si, sj, sb, sm, so
    cdef double complex wi
    cdef const double complex *srow
    cdef double complex *orow
    for k in range(n_jumps):
        for b in range(n_blocks):
            s = p.starts[b]
            m = p.sizes[b]
            o = p.offsets[b]
            for li in range(m):
                si = p.jump_src[k, s + li]
                if si < 0:
                    continue
                sb = p.block_of[si]
                sm = p.sizes[sb]
                so = p.offsets[sb]
                srow = rho + so + p.local[si] * sm
                wi = p.coeffs[k] * p.jump_w[k, s + li]
                orow = out + o + li * m
                j0 = li if hermitian else 0
                for lj in range(j0, m):
                    sj = p.jump_src[k, s + lj]
                    if sj < 0:
                        continue
                    orow[lj] = orow[lj] + wi * srow[p.local[sj]] * _conj(p.jump_w[k, s + lj])
    if hermitian:
        for b in range(n_blocks):
            m = p.sizes[b]
            o = p.offsets[b]
            for li in range(m):
                out[o + li * m + li] = out[o + li * m + li].real
                for lj in range(li + 1, m):
                    out[o + lj * m + li] = _conj(out[o + li * m + lj])


def lindblad_rhs(Plan plan, const double complex[::1] rho, double complex[::1] out, bint hermitian):
    if rho.shape[0] != plan.layout.size or out.shape[0] != plan.layout.size:
        raise ValueError("packed buffers do not match the layout")
    with nogil:
        _hamiltonian_part(plan, &rho[0], &out[0], hermitian)
        _jump_part(plan, &rho[0], &out[0], hermitian)


def hermitize(Plan plan, double complex[::1] rho):
    cdef Py_ssize_t n_blocks = plan.sizes.shape[0]
    cdef Py_ssize_t b, m, o, li, lj
    cdef double complex mean
    with nogil:
        for b in range(n_blocks):
            m = plan.sizes[b]
            o = plan.offsets[b]
            for li in range(m):
                rho[o + li * m + li] = rho[o + li * m + li].real
                for lj in range(li + 1, m):
                    mean = 0.5 * (rho[o + li * m + lj] + _conj(rho[o + lj * m + li]))
                    rho[o + li * m + lj] = mean
                    rho[o + lj * m + li] = _conj(mean)


def axpy(const double complex[::1] x, double alpha, const double complex[::1] y, double complex[::1] out):
    cdef Py_ssize_t n = x.shape[0], i
    with nogil:
        for i in range(n):
            out[i] = x[i] + alpha * y[i]
