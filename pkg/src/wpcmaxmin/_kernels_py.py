"""Pure-NumPy evaluation backend for packed subproblems.

Mirrors the compiled extension exactly: same inputs, same outputs, same
tie-breaking.  The solver only ever calls these two entry points, so backend
selection is a drop-in swap.
"""

from __future__ import annotations

import numpy as np

KERNELS_BACKEND = "python"


def constraint_values(x: np.ndarray, pp) -> np.ndarray:
    """Values g_i(x); +inf where a log atom's argument is non-positive."""
    vals = pp.const + pp.lin @ x
    for a in range(len(pp.q_con)):
        s, m = pp.q_start[a], pp.q_size[a]
        mat = pp.q_mats[pp.q_mat_off[a]:pp.q_mat_off[a + 1]].reshape(m, m)
        diff = x[s:s + m] - pp.q_ctrs[pp.q_ctr_off[a]:pp.q_ctr_off[a + 1]]
        vals[pp.q_con[a]] += diff @ mat @ diff
    for a in range(len(pp.l_con)):
        s, m = pp.l_start[a], pp.l_size[a]
        coefs = pp.l_coefs[pp.l_coef_off[a]:pp.l_coef_off[a + 1]]
        arg = coefs @ x[s:s + m] + pp.l_offset[a]
        if arg <= 0.0:
            vals[pp.l_con[a]] = np.inf
        else:
            vals[pp.l_con[a]] -= pp.l_weight[a] * np.log(arg)
    return vals


def barrier_value(x: np.ndarray, t: float, pp) -> float:
    """phi(x) = -t * objective @ x - sum ln(-g_i); +inf outside the domain."""
    vals = constraint_values(x, pp)
    if not np.all(np.isfinite(vals)) or np.any(vals >= 0.0):
        return np.inf
    return -t * float(pp.objective @ x) - float(np.sum(np.log(-vals)))


def barrier_system(x: np.ndarray, t: float, pp):
    """(phi, grad, hess, ok) of the barrier at a strictly feasible x.

    ``ok`` is False (with phi = +inf) when x is outside the domain; grad and
    hess are then meaningless.
    """
    dim, n_con = pp.dim, pp.n_constraints
    vals = pp.const + pp.lin @ x
    grows = pp.lin.copy()
    # Quadratic atoms: value, gradient, and the constant block Hessians are
    # replayed again below once the 1/(-g) weights are known.
    q_diff = []
    for a in range(len(pp.q_con)):
        s, m = pp.q_start[a], pp.q_size[a]
        mat = pp.q_mats[pp.q_mat_off[a]:pp.q_mat_off[a + 1]].reshape(m, m)
        diff = x[s:s + m] - pp.q_ctrs[pp.q_ctr_off[a]:pp.q_ctr_off[a + 1]]
        md = mat @ diff
        vals[pp.q_con[a]] += diff @ md
        grows[pp.q_con[a], s:s + m] += 2.0 * md
        q_diff.append(md)
    l_arg = np.empty(len(pp.l_con))
    for a in range(len(pp.l_con)):
        s, m = pp.l_start[a], pp.l_size[a]
        coefs = pp.l_coefs[pp.l_coef_off[a]:pp.l_coef_off[a + 1]]
        arg = coefs @ x[s:s + m] + pp.l_offset[a]
        l_arg[a] = arg
        if arg <= 0.0:
            return np.inf, None, None, False
        vals[pp.l_con[a]] -= pp.l_weight[a] * np.log(arg)
        grows[pp.l_con[a], s:s + m] -= pp.l_weight[a] * coefs / arg
    if np.any(vals >= 0.0):
        return np.inf, None, None, False

    inv_neg = 1.0 / (-vals)
    phi = -t * float(pp.objective @ x) - float(np.sum(np.log(-vals)))
    grad = -t * pp.objective + grows.T @ inv_neg
    hess = (grows * (inv_neg**2)[:, None]).T @ grows
    for a in range(len(pp.q_con)):
        s, m = pp.q_start[a], pp.q_size[a]
        mat = pp.q_mats[pp.q_mat_off[a]:pp.q_mat_off[a + 1]].reshape(m, m)
        hess[s:s + m, s:s + m] += 2.0 * inv_neg[pp.q_con[a]] * mat
    for a in range(len(pp.l_con)):
        s, m = pp.l_start[a], pp.l_size[a]
        coefs = pp.l_coefs[pp.l_coef_off[a]:pp.l_coef_off[a + 1]]
        w = pp.l_weight[a] * inv_neg[pp.l_con[a]] / (l_arg[a] ** 2)
        hess[s:s + m, s:s + m] += w * np.outer(coefs, coefs)
    return phi, grad, hess, True
