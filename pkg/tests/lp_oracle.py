"""Brute-force LP optimum by enumerating basic feasible solutions."""

from itertools import combinations, product

import numpy as np


def vertex_min(c, lb, ub, A, b, feas_tol=1e-9):
    """Min of ``c.x`` over ``A x <= b, lb <= x <= ub``, or None if infeasible.

    A vertex has ``k`` tight rows and ``k`` free variables solving them; the
    other variables sit at one of their bounds.  For each set of tight rows
    all choices of free variables and bound patterns are solved in one batch.
    """
    c, lb, ub, A, b = (np.asarray(v, dtype=float) for v in (c, lb, ub, A, b))
    n = c.size
    A = A.reshape(-1, n)
    m = A.shape[0]
    best = None
    for k in range(0, min(m, n) + 1):
        combos = list(combinations(range(n), k))
        Fs = np.array(combos, dtype=int).reshape(len(combos), k)
        Ns = np.array([[j for j in range(n) if j not in F] for F in Fs], dtype=int).reshape(len(Fs), n - k)
        pats = list(product((0.0, 1.0), repeat=n - k))
        bits = np.array(pats).reshape(len(pats), n - k)
        # bound values of the fixed variables: (nF, P, n-k)
        xN = lb[Ns][:, None, :] + bits[None, :, :] * (ub[Ns] - lb[Ns])[:, None, :]
        for S in combinations(range(m), k):
            S = list(S)
            X = np.empty((len(Fs), bits.shape[0], n))
            np.put_along_axis(X, np.broadcast_to(Ns[:, None, :], xN.shape), xN, axis=2)
            keep = np.ones(len(Fs), dtype=bool)
            if k:
                AS = A[S]
                M = np.transpose(AS[:, Fs], (1, 0, 2))  # (nF, k, k)
                keep = np.abs(np.linalg.det(M)) > 1e-12
                M = np.where(keep[:, None, None], M, np.eye(k))
                rhs = b[S][None, None, :] - np.einsum("fpn,kfn->fpk", xN, AS[:, Ns])
                xF = np.linalg.solve(M[:, None, :, :], rhs[..., None])[..., 0]
                np.put_along_axis(X, np.broadcast_to(Fs[:, None, :], xF.shape), xF, axis=2)
            X = X[keep].reshape(-1, n)
            ok = np.all(X >= lb - feas_tol, axis=1) & np.all(X <= ub + feas_tol, axis=1)
            if m:
                ok &= np.all(X @ A.T <= b + feas_tol, axis=1)
            if ok.any():
                v = float((X[ok] @ c).min())
                if best is None or v < best:
                    best = v
    return best
