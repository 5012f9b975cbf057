# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled path kernels; must stay draw-for-draw identical to _kernels_py."""

import numpy as np

from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport sqrt
from libc.stdint cimport int64_t
from numpy.random cimport bitgen_t
from numpy.random.c_distributions cimport (
    random_poisson,
    random_standard_gamma,
    random_standard_normal,
)

COMPILED = True


cdef bitgen_t *_state(object gen):
    capsule = gen.bit_generator.capsule
    return <bitgen_t *> PyCapsule_GetPointer(capsule, "BitGenerator")


def euler_chunk(object gen, double s0, double[::1] dt, double[::1] sqrt_dt,
                double[::1] lam, double[::1] ae4, double[::1] ae,
                double[:, ::1] out_s, double[:, ::1] out_db):
    cdef bitgen_t *rng = _state(gen)
    cdef Py_ssize_t n = out_s.shape[0]
    cdef Py_ssize_t n_steps = dt.shape[0]
    cdef Py_ssize_t i, k
    cdef double s, sp, db
    for i in range(n):
        out_s[i, 0] = s0
    with gen.bit_generator.lock:
        for k in range(n_steps):
            # draw the whole step first: same consumption order as the
            # vectorized fallback
            for i in range(n):
                out_db[i, k] = sqrt_dt[k] * random_standard_normal(rng)
            for i in range(n):
                s = out_s[i, k]
                sp = s if s > 0.0 else 0.0
                db = out_db[i, k]
                out_s[i, k + 1] = s + (lam[k] * sp + ae4[k]) * dt[k] + 2.0 * sqrt(ae[k] * sp) * db


def exact_chunk(object gen, double s0, double[::1] deltas, double[:, ::1] out_s):
    cdef bitgen_t *rng = _state(gen)
    cdef Py_ssize_t n = out_s.shape[0]
    cdef Py_ssize_t n_steps = deltas.shape[0]
    cdef Py_ssize_t i, k
    cdef double d
    cdef int64_t[::1] counts = np.empty(n, dtype=np.int64)
    for i in range(n):
        out_s[i, 0] = s0
    with gen.bit_generator.lock:
        for k in range(n_steps):
            d = deltas[k]
            for i in range(n):
                counts[i] = random_poisson(rng, out_s[i, k] / (2.0 * d))
            for i in range(n):
                out_s[i, k + 1] = (2.0 * d) * random_standard_gamma(rng, 2.0 + counts[i])
