"""Independent reference computations shared by the test modules."""
import numpy as np


def smooth_cost_direct(a, b, history, x, beta):
    t = len(history)
    total = 0.0
    for tau, y in enumerate(history, start=1):
        r = y - a @ y - b[:, None] * x
        total += beta ** (t - tau) * np.sum(r * r)
    return 0.5 * total


def batch_minimizer(history, x, beta, lam):
    """Solve the full-horizon cost with a generic conic solver."""
    import cvxpy as cp

    n = x.shape[0]
    t = len(history)
    a = cp.Variable((n, n))
    b = cp.Variable(n)
    terms = [
        beta ** (t - tau) * cp.sum_squares(y - a @ y - cp.multiply(cp.reshape(b, (n, 1), order="F"), x))
        for tau, y in enumerate(history, start=1)
    ]
    cost = 0.5 * cp.sum(terms) + lam * cp.sum(cp.abs(a))
    prob = cp.Problem(cp.Minimize(cost), [cp.diag(a) == 0])
    prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-12, tol_gap_rel=1e-12, tol_feas=1e-12)
    a_val = np.array(a.value)
    np.fill_diagonal(a_val, 0.0)
    return a_val, np.array(b.value), float(prob.value)
