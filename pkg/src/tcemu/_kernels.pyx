# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled ordered-fold kernels (see ``_ext/fold.c``)."""

import numpy as np

from libc.stdint cimport uint16_t

cdef extern from "fold.h" nogil:
    int TC_FOLD_FMA
    int TC_FOLD_KAHAN
    int TC_FOLD_HALF_ACC
    int tc_gemm_fold(Py_ssize_t m, Py_ssize_t n, Py_ssize_t k,
                     const float *a, Py_ssize_t lda,
                     const float *b, Py_ssize_t ldb,
                     float *c, Py_ssize_t ldc, int mode)
    void tc_gemm_batched16(Py_ssize_t count, const float *a, const float *b, float *c)
    void tc_round_half(const float *src, uint16_t *dst, Py_ssize_t n)
    void tc_widen_half(const uint16_t *src, float *dst, Py_ssize_t n)
    const char *tc_simd_name()

NAME = "compiled"
SIMD = tc_simd_name().decode()


cdef _fold(const float[:, ::1] a, const float[:, ::1] b, float[:, ::1] c, int mode):
    cdef Py_ssize_t m = a.shape[0], k = a.shape[1], n = b.shape[1]
    cdef int rc
    if m == 0 or n == 0 or k == 0:
        return
    with nogil:
        rc = tc_gemm_fold(m, n, k, &a[0, 0], k, &b[0, 0], n, &c[0, 0], n, mode)
    if rc != 0:
        raise MemoryError("fold kernel could not allocate packing buffers")


def fold_fma(a, b, c, exact_products=False):
    _fold(a, b, c, TC_FOLD_FMA)


def fold_kahan(a, b, c):
    _fold(a, b, c, TC_FOLD_KAHAN)


def fold_half_accum(a, b, c):
    _fold(a, b, c, TC_FOLD_HALF_ACC)


def fold_batched16(const float[:, :, ::1] a, const float[:, :, ::1] b, float[:, :, ::1] c,
                   exact_products=False):
    cdef Py_ssize_t count = a.shape[0]
    if count == 0:
        return
    with nogil:
        tc_gemm_batched16(count, &a[0, 0, 0], &b[0, 0, 0], &c[0, 0, 0])


def round_half_bits(x):
    src = np.ascontiguousarray(x, dtype=np.float32)
    out = np.empty(src.shape, dtype=np.uint16)
    cdef const float[::1] s = src.reshape(-1)
    cdef uint16_t[::1] d = out.reshape(-1)
    cdef Py_ssize_t n = s.shape[0]
    if n:
        with nogil:
            tc_round_half(&s[0], &d[0], n)
    return out


def widen_half_bits(bits):
    src = np.ascontiguousarray(bits, dtype=np.uint16)
    out = np.empty(src.shape, dtype=np.float32)
    cdef const uint16_t[::1] s = src.reshape(-1)
    cdef float[::1] d = out.reshape(-1)
    cdef Py_ssize_t n = s.shape[0]
    if n:
        with nogil:
            tc_widen_half(&s[0], &d[0], n)
    return out
