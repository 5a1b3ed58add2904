# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled exact matrix multiply over gmpy2 rationals.

Clears denominators to one common denominator per operand, runs the
integer triple loop with raw GMP mpz arithmetic (no per-step gcd), and
canonicalizes once per output entry.
"""

import numpy as np

from libc.stdlib cimport free, malloc

from gmpy2 cimport MPQ, GMPy_MPQ_New, import_gmpy2, mpq, mpq_srcptr, mpq_t, mpz_ptr, mpz_srcptr, mpz_t


cdef extern from "gmp.h":
    void mpz_init(mpz_ptr)
    void mpz_clear(mpz_ptr)
    void mpz_set(mpz_ptr, mpz_srcptr)
    void mpz_set_si(mpz_ptr, long)
    void mpz_mul(mpz_ptr, mpz_srcptr, mpz_srcptr)
    void mpz_addmul(mpz_ptr, mpz_srcptr, mpz_srcptr)
    void mpz_lcm(mpz_ptr, mpz_srcptr, mpz_srcptr)
    void mpz_divexact(mpz_ptr, mpz_srcptr, mpz_srcptr)
    void mpq_canonicalize(mpq_t)
    mpz_ptr mpq_numref(mpq_t)
    mpz_ptr mpq_denref(mpq_t)

import_gmpy2()


def matmul(object[:, :] a, object[:, :] b):
    cdef Py_ssize_t n = a.shape[0], m = a.shape[1], p = b.shape[1]
    if b.shape[0] != m:
        raise ValueError("matmul shape mismatch")
    cdef Py_ssize_t i, j, l
    cdef mpq entry, result
    out = np.empty((n, p), dtype=object)
    cdef object[:, :] o = out
    if m == 0:
        zero = GMPy_MPQ_New(NULL)
        for i in range(n):
            for j in range(p):
                o[i, j] = zero
        return out

    cdef mpz_t da, db, dd, scale, acc
    mpz_init(da); mpz_init(db); mpz_init(dd); mpz_init(scale); mpz_init(acc)
    mpz_set_si(da, 1)
    mpz_set_si(db, 1)
    cdef mpz_t *ai = <mpz_t *> malloc(n * m * sizeof(mpz_t))
    cdef mpz_t *bi = <mpz_t *> malloc(m * p * sizeof(mpz_t))
    if ai == NULL or bi == NULL:
        free(ai); free(bi)
        raise MemoryError()
    try:
        for i in range(n):
            for l in range(m):
                entry = <mpq?> a[i, l]
                mpz_lcm(da, da, mpq_denref(MPQ(entry)))
        for l in range(m):
            for j in range(p):
                entry = <mpq?> b[l, j]
                mpz_lcm(db, db, mpq_denref(MPQ(entry)))
        for i in range(n):
            for l in range(m):
                entry = <mpq?> a[i, l]
                mpz_init(ai[i * m + l])
                mpz_divexact(scale, da, mpq_denref(MPQ(entry)))
                mpz_mul(ai[i * m + l], mpq_numref(MPQ(entry)), scale)
        for l in range(m):
            for j in range(p):
                entry = <mpq?> b[l, j]
                mpz_init(bi[l * p + j])
                mpz_divexact(scale, db, mpq_denref(MPQ(entry)))
                mpz_mul(bi[l * p + j], mpq_numref(MPQ(entry)), scale)
        mpz_mul(dd, da, db)
        for i in range(n):
            for j in range(p):
                mpz_set_si(acc, 0)
                for l in range(m):
                    mpz_addmul(acc, ai[i * m + l], bi[l * p + j])
                result = GMPy_MPQ_New(NULL)
                mpz_set(mpq_numref(MPQ(result)), acc)
                mpz_set(mpq_denref(MPQ(result)), dd)
                mpq_canonicalize(MPQ(result))
                o[i, j] = result
        for i in range(n * m):
            mpz_clear(ai[i])
        for i in range(m * p):
            mpz_clear(bi[i])
    finally:
        free(ai)
        free(bi)
        mpz_clear(da); mpz_clear(db); mpz_clear(dd); mpz_clear(scale); mpz_clear(acc)
    return out
