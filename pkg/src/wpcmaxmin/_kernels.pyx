# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled evaluation backend for packed subproblems.

Contract-identical to ``wpcmaxmin._kernels_py``; the barrier solver treats
the two as interchangeable.  Hot paths are the per-atom gradient/Hessian
assembly loops and the weighted Gram product of the constraint Jacobian.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, log

KERNELS_BACKEND = "compiled"


def constraint_values(x, pp):
    """Values g_i(x); +inf where a log atom's argument is non-positive."""
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[::1] const = pp.const
    cdef double[:, ::1] lin = pp.lin
    cdef int[::1] q_con = pp.q_con
    cdef int[::1] q_start = pp.q_start
    cdef int[::1] q_size = pp.q_size
    cdef long[::1] q_mat_off = pp.q_mat_off
    cdef double[::1] q_mats = pp.q_mats
    cdef long[::1] q_ctr_off = pp.q_ctr_off
    cdef double[::1] q_ctrs = pp.q_ctrs
    cdef int[::1] l_con = pp.l_con
    cdef double[::1] l_weight = pp.l_weight
    cdef double[::1] l_offset = pp.l_offset
    cdef int[::1] l_start = pp.l_start
    cdef int[::1] l_size = pp.l_size
    cdef long[::1] l_coef_off = pp.l_coef_off
    cdef double[::1] l_coefs = pp.l_coefs

    cdef int n_con = const.shape[0]
    cdef int dim = xv.shape[0]
    out = np.empty(n_con, dtype=np.float64)
    cdef double[::1] vals = out
    cdef int i, j, a, s, m
    cdef long mo, co
    cdef double acc, row_dot, arg

    for i in range(n_con):
        acc = const[i]
        for j in range(dim):
            acc += lin[i, j] * xv[j]
        vals[i] = acc
    for a in range(q_con.shape[0]):
        s = q_start[a]
        m = q_size[a]
        mo = q_mat_off[a]
        co = q_ctr_off[a]
        acc = 0.0
        for i in range(m):
            row_dot = 0.0
            for j in range(m):
                row_dot += q_mats[mo + i * m + j] * (xv[s + j] - q_ctrs[co + j])
            acc += (xv[s + i] - q_ctrs[co + i]) * row_dot
        vals[q_con[a]] += acc
    for a in range(l_con.shape[0]):
        s = l_start[a]
        m = l_size[a]
        co = l_coef_off[a]
        arg = l_offset[a]
        for j in range(m):
            arg += l_coefs[co + j] * xv[s + j]
        if arg <= 0.0:
            vals[l_con[a]] = INFINITY
        else:
            vals[l_con[a]] -= l_weight[a] * log(arg)
    return out


def barrier_value(x, double t, pp):
    """phi(x) = -t * objective @ x - sum ln(-g_i); +inf outside the domain."""
    vals = constraint_values(x, pp)
    cdef double[::1] vv = vals
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[::1] obj = pp.objective
    cdef double phi = 0.0
    cdef int i
    for i in range(vv.shape[0]):
        if not vv[i] < 0.0:  # catches both >= 0 and inf/nan
            return INFINITY
        phi -= log(-vv[i])
    for i in range(xv.shape[0]):
        phi -= t * obj[i] * xv[i]
    return phi


def barrier_system(x, double t, pp):
    """(phi, grad, hess, ok) of the barrier at a strictly feasible x."""
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[::1] const = pp.const
    cdef double[:, ::1] lin = pp.lin
    cdef int[::1] q_con = pp.q_con
    cdef int[::1] q_start = pp.q_start
    cdef int[::1] q_size = pp.q_size
    cdef long[::1] q_mat_off = pp.q_mat_off
    cdef double[::1] q_mats = pp.q_mats
    cdef long[::1] q_ctr_off = pp.q_ctr_off
    cdef double[::1] q_ctrs = pp.q_ctrs
    cdef int[::1] l_con = pp.l_con
    cdef double[::1] l_weight = pp.l_weight
    cdef double[::1] l_offset = pp.l_offset
    cdef int[::1] l_start = pp.l_start
    cdef int[::1] l_size = pp.l_size
    cdef long[::1] l_coef_off = pp.l_coef_off
    cdef double[::1] l_coefs = pp.l_coefs
    cdef double[::1] obj = pp.objective

    cdef int n_con = const.shape[0]
    cdef int dim = xv.shape[0]
    cdef int nq = q_con.shape[0]
    cdef int nl = l_con.shape[0]

    grows_arr = np.array(pp.lin, copy=True)
    cdef double[:, ::1] grows = grows_arr
    vals_arr = np.empty(n_con, dtype=np.float64)
    cdef double[::1] vals = vals_arr
    l_arg_arr = np.empty(nl, dtype=np.float64)
    cdef double[::1] l_arg = l_arg_arr

    cdef int i, j, a, s, m, c
    cdef long mo, co
    cdef double acc, row_dot, arg, w, phi

    for i in range(n_con):
        acc = const[i]
        for j in range(dim):
            acc += lin[i, j] * xv[j]
        vals[i] = acc
    for a in range(nq):
        s = q_start[a]
        m = q_size[a]
        mo = q_mat_off[a]
        co = q_ctr_off[a]
        c = q_con[a]
        acc = 0.0
        for i in range(m):
            row_dot = 0.0
            for j in range(m):
                row_dot += q_mats[mo + i * m + j] * (xv[s + j] - q_ctrs[co + j])
            acc += (xv[s + i] - q_ctrs[co + i]) * row_dot
            grows[c, s + i] += 2.0 * row_dot
        vals[c] += acc
    for a in range(nl):
        s = l_start[a]
        m = l_size[a]
        co = l_coef_off[a]
        c = l_con[a]
        arg = l_offset[a]
        for j in range(m):
            arg += l_coefs[co + j] * xv[s + j]
        l_arg[a] = arg
        if arg <= 0.0:
            return INFINITY, None, None, False
        vals[c] -= l_weight[a] * log(arg)
        for j in range(m):
            grows[c, s + j] -= l_weight[a] * l_coefs[co + j] / arg
    for i in range(n_con):
        if not vals[i] < 0.0:
            return INFINITY, None, None, False

    phi = 0.0
    for i in range(n_con):
        phi -= log(-vals[i])
    for j in range(dim):
        phi -= t * obj[j] * xv[j]

    grad_arr = np.empty(dim, dtype=np.float64)
    cdef double[::1] grad = grad_arr
    hess_arr = np.zeros((dim, dim), dtype=np.float64)
    cdef double[:, ::1] hess = hess_arr
    cdef double inv_neg, w2

    for j in range(dim):
        grad[j] = -t * obj[j]
    for i in range(n_con):
        inv_neg = -1.0 / vals[i]
        w2 = inv_neg * inv_neg
        for j in range(dim):
            grad[j] += grows[i, j] * inv_neg
        # Weighted Gram accumulation, upper triangle only.
        for j in range(dim):
            acc = w2 * grows[i, j]
            if acc != 0.0:
                for m in range(j, dim):
                    hess[j, m] += acc * grows[i, m]
    for a in range(nq):
        s = q_start[a]
        m = q_size[a]
        mo = q_mat_off[a]
        inv_neg = -1.0 / vals[q_con[a]]
        for i in range(m):
            for j in range(i, m):
                hess[s + i, s + j] += 2.0 * inv_neg * q_mats[mo + i * m + j]
    for a in range(nl):
        s = l_start[a]
        m = l_size[a]
        co = l_coef_off[a]
        inv_neg = -1.0 / vals[l_con[a]]
        w = l_weight[a] * inv_neg / (l_arg[a] * l_arg[a])
        for i in range(m):
            acc = w * l_coefs[co + i]
            if acc != 0.0:
                for j in range(i, m):
                    hess[s + i, s + j] += acc * l_coefs[co + j]
    # Mirror the upper triangle.
    for i in range(dim):
        for j in range(i + 1, dim):
            hess[j, i] = hess[i, j]
    return phi, grad_arr, hess_arr, True
