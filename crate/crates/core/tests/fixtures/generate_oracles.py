"""Reference values for the integration tests, computed independently of
the Rust code (numpy / scipy / cvxpy). Run from this directory:

    python3 generate_oracles.py > oracles.json

The ±1 matrices were produced by `gkit gen form --signs` and are copied in
verbatim so that both sides see identical inputs.
"""

import itertools
import json

import cvxpy as cp
import numpy as np
from scipy.optimize import linprog

SIGN_MATRICES = {
    "pm4_seed0": [[-1, -1, -1, 1], [1, -1, -1, 1], [1, -1, 1, 1], [-1, 1, 1, 1]],
    "pm5_seed1": [
        [1, 1, -1, -1, 1],
        [-1, -1, -1, -1, -1],
        [-1, 1, 1, -1, 1],
        [-1, -1, -1, -1, -1],
        [-1, -1, 1, -1, 1],
    ],
}

WEIGHTS = {3: [0.5, 1.0, 2.0], 4: [1.0, 0.25, 3.0, 1.5]}
TAGS = ["l1", "l2", "linf", "wl2"]


def signs(n):
    return [np.array(s) for s in itertools.product([-1.0, 1.0], repeat=n)]


def dual_norm(tag, g):
    if tag == "l1":
        return np.abs(g).max()
    if tag == "linf":
        return np.abs(g).sum()
    if tag == "l2":
        return np.linalg.norm(g)
    w = np.array(WEIGHTS[len(g)])
    return np.sqrt((g * g / w).sum())


def weight_vec(tag, n):
    if tag == "l2":
        return np.ones(n)
    return np.array(WEIGHTS[n])


def form_norm(a, te, tf):
    n, m = a.shape
    if te == "l1":
        return max(dual_norm(tf, a[i, :]) for i in range(n))
    if tf == "l1":
        return max(dual_norm(te, a[:, j]) for j in range(m))
    if te == "linf":
        return max(dual_norm(tf, a.T @ s) for s in signs(n))
    if tf == "linf":
        return max(dual_norm(te, a @ t) for t in signs(m))
    de = weight_vec(te, n) ** -0.5
    df = weight_vec(tf, m) ** -0.5
    return np.linalg.svd(de[:, None] * a * df[None, :], compute_uv=False)[0]


def sdp_value(a):
    n, m = a.shape
    x = cp.Variable((n + m, n + m), PSD=True)
    obj = cp.Maximize(cp.sum(cp.multiply(a, x[:n, n:])))
    prob = cp.Problem(obj, [cp.diag(x) == 1])
    prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-10, tol_gap_rel=1e-10, tol_feas=1e-10)
    return prob.value


def projective_linf_linf(c):
    """max <C, B> subject to s'Bt <= 1 for every sign pair."""
    n, m = c.shape
    rows = [np.outer(s, t).ravel() for s in signs(n) for t in signs(m)]
    res = linprog(-c.ravel(), A_ub=np.array(rows), b_ub=np.ones(len(rows)), bounds=(None, None), method="highs")
    assert res.status == 0
    return -res.fun


def projective_l1(c, tf):
    # E = l1: the row representation is optimal; cost is sum of row norms.
    def norm(tag, v):
        if tag == "l1":
            return np.abs(v).sum()
        if tag == "linf":
            return np.abs(v).max()
        if tag == "l2":
            return np.linalg.norm(v)
        return np.sqrt((np.array(WEIGHTS[len(v)]) * v * v).sum())

    return sum(norm(tf, c[i, :]) for i in range(c.shape[0]))


def nuclear(c, te, tf):
    n, m = c.shape
    de = weight_vec(te, n) ** 0.5
    df = weight_vec(tf, m) ** 0.5
    return np.linalg.svd(de[:, None] * c * df[None, :], compute_uv=False).sum()


def main():
    rng = np.random.default_rng(20261015)
    out = {"weights": {str(k): v for k, v in WEIGHTS.items()}}

    out["sign_matrices"] = []
    for name, a in SIGN_MATRICES.items():
        a = np.array(a, dtype=float)
        norm = form_norm(a, "linf", "linf")
        sdp = sdp_value(a)
        out["sign_matrices"].append(
            {"name": name, "entries": a.tolist(), "norm": norm, "sdp": sdp, "ratio": sdp / norm}
        )

    out["gaussian_forms"] = []
    for k in range(3):
        a = rng.standard_normal((3, 4))
        norms = {f"{te}/{tf}": form_norm(a, te, tf) for te in TAGS for tf in TAGS}
        out["gaussian_forms"].append(
            {
                "entries": a.tolist(),
                "norms": norms,
                "sdp": sdp_value(a),
                "projective": {
                    "linf/linf": projective_linf_linf(a),
                    "l2/l2": nuclear(a, "l2", "l2"),
                    "wl2/wl2": nuclear(a, "wl2", "wl2"),
                    "l2/wl2": nuclear(a, "l2", "wl2"),
                    "l1/linf": projective_l1(a, "linf"),
                    "l1/l2": projective_l1(a, "l2"),
                    "l1/wl2": projective_l1(a, "wl2"),
                },
            }
        )

    # inv1p on a 64-point Gauss-Legendre grid over [0, 1].
    x, w = np.polynomial.legendre.leggauss(64)
    x = (x + 1) / 2
    w = w / 2
    k = 1.0 / (1.0 + np.abs(x[:, None] - x[None, :]))
    m = np.sqrt(w)[:, None] * k.T * np.sqrt(w)[None, :]
    out["inv1p_gl64"] = {
        "points_sum": x.sum(),
        "values_sum": k.sum(),
        "values_sum_sq": (k * k).sum(),
        "op_norm": np.linalg.svd(m, compute_uv=False)[0],
        "hs_norm": np.sqrt((w[:, None] * w[None, :] * k * k).sum()),
        "double_integral": (w[:, None] * w[None, :] * k).sum(),
    }

    # Green kernel min(x,y)(1-max(x,y)): Hilbert-Schmidt norm from the
    # eigenvalue series 1/(j pi)^2, summed directly.
    j = np.arange(1, 2_000_001, dtype=float)
    out["green"] = {
        "hs_series": float(np.sqrt(np.sum(1.0 / (j * np.pi) ** 4))),
        "hs_closed_form": 1.0 / np.sqrt(90.0),
    }
    print(json.dumps(out, indent=2))


if __name__ == "__main__":
    main()
