"""Independent reference values for the kontact test suite.

Everything here is recomputed from the textbook formulas with sympy/numpy,
sharing no code with the Rust crate. Run from the repo root:

    python3 oracle/derive.py

and commit the regenerated crates/core/tests/fixtures/oracle.json.
"""

import json
from pathlib import Path

import numpy as np
import sympy as sp

OUT = Path(__file__).resolve().parent.parent / "crates/core/tests/fixtures/oracle.json"
G4 = sp.diag(1, -1, -1, -1)


# ---------------------------------------------------------------- Bjorken

def bjorken():
    t, x, y, z = sp.symbols("t x y z", real=True)
    X = [t, x, y, z]
    tau = sp.sqrt(t**2 - z**2)
    u = [t / tau, 0, 0, z / tau]
    u_low = [G4[m, m] * u[m] for m in range(4)]
    delta = sp.Matrix(4, 4, lambda m, n: G4[m, n] - u[m] * u[n])  # upper indices
    # ∇^μ u^ν = Δ^{μα} ∂_α u^ν
    grad = sp.Matrix(4, 4, lambda m, n: sum(delta[m, a] * sp.diff(u[n], X[a]) for a in range(4)))
    theta = sum(sp.diff(u[m], X[m]) for m in range(4))
    sigma = (grad + grad.T) / 2 - delta * theta / 3
    sigma_sq = sum(G4[m, m] * G4[n, n] * sigma[m, n] ** 2 for m in range(4) for n in range(4))
    dtau_dt = sp.diff(tau, t)

    rows = []
    for tv, zv in [(2, 0), (5, 3), (sp.Rational(5, 2), sp.Rational(3, 2)), (sp.Rational(17, 10), sp.Rational(-2, 5))]:
        sub = {t: tv, z: zv}
        rows.append({
            "t": float(tv),
            "z": float(zv),
            "tau": float(tau.subs(sub)),
            "theta": float(sp.simplify(theta.subs(sub))),
            "dtau_dt": float(dtau_dt.subs(sub)),
            "sigma": [[float(sp.simplify(sigma[m, n].subs(sub))) for n in range(4)] for m in range(4)],
            "sigma_sq": float(sp.simplify(sigma_sq.subs(sub))),
            "u_dot_u": float(sum(u[m] * u_low[m] for m in range(4)).subs(sub)),
        })
    identity = sp.simplify(sigma_sq - sp.Rational(2, 3) * theta**2)
    assert identity == 0, identity
    return {"points": rows, "sigma_sq_minus_two_thirds_theta_sq": 0}


# ---------------------------------------------------------------- k-contact linear algebra

def hydro_forms(k, rng):
    """η^μ covectors and dη^μ matrices at a random point, chart order as in the crate."""
    s = lambda m: m
    p = lambda m: k + m
    v = 2 * k
    xi = 2 * k + 1
    n = lambda m: 2 * k + 2 + m
    b = lambda m: 3 * k + 2 + m
    tt = lambda l, m: 4 * k + 2 + l * k + m
    dim = k * k + 4 * k + 2
    pt = rng.uniform(-2, 2, dim)
    pt[v] = rng.uniform(0.5, 2)
    g = [1] + [-1] * (k - 1)
    eta = np.zeros((k, dim))
    deta = np.zeros((k, dim, dim))
    for mu in range(k):
        # η^μ = dS^μ + ξ dN^μ − β_λ dT^{λμ} − P^μ dV
        eta[mu, s(mu)] = 1
        eta[mu, n(mu)] = pt[xi]
        eta[mu, v] = -pt[p(mu)]
        for l in range(k):
            eta[mu, tt(l, mu)] = -g[l] * pt[b(l)]
        # dη^μ = dξ∧dN^μ − g_λ dβ^λ∧dT^{λμ} − dP^μ∧dV
        def wedge(i, j, c):
            deta[mu, i, j] += c
            deta[mu, j, i] -= c
        wedge(xi, n(mu), 1)
        wedge(p(mu), v, -1)
        for l in range(k):
            wedge(b(l), tt(l, mu), -g[l])
    return eta, deta, pt, dict(s=s, p=p, v=v, xi=xi, n=n, b=b, t=tt, dim=dim, g=g)


def canonical_forms(nn, k):
    """η^α = ds^α − Σ_i p^α_i dq^i, chart (s, q, p)."""
    dim = k + nn + nn * k
    rng = np.random.default_rng(7)
    pt = rng.uniform(-2, 2, dim)
    eta = np.zeros((k, dim))
    deta = np.zeros((k, dim, dim))
    for a in range(k):
        eta[a, a] = 1
        for i in range(nn):
            pi = k + nn + a * nn + i
            qi = k + i
            eta[a, qi] = -pt[pi]
            deta[a, qi, pi] += 1  # −dp∧dq = dq∧dp
            deta[a, pi, qi] -= 1
    return eta, deta


def hddw_nullity(eta, deta):
    """Nullity of X ↦ (Σ_α ι_{X_α}dη^α, Σ_α η^α(X_α)) on (R^dim)^k (H = 0)."""
    k, dim = eta.shape
    rows = []
    for j in range(dim):
        rows.append(np.concatenate([deta[a][:, j] for a in range(k)]))
    rows.append(np.concatenate([eta[a] for a in range(k)]))
    m = np.array(rows)
    sv = np.linalg.svd(m, compute_uv=False)
    rank = int((sv > 1e-9 * sv[0]).sum())
    return k * dim - rank


def kcontact():
    rng = np.random.default_rng(11)
    out = {"canonical": [], "hydro": []}
    for nn, k in [(1, 1), (1, 2), (2, 2), (3, 3)]:
        eta, deta = canonical_forms(nn, k)
        out["canonical"].append({"n": nn, "k": k, "dim": eta.shape[1], "nullity": hddw_nullity(eta, deta)})
    for k in [2, 3, 4]:
        eta, deta, pt, ix = hydro_forms(k, rng)
        dim = ix["dim"]
        # rank conditions
        eta_rank = np.linalg.matrix_rank(eta)
        stack = np.vstack([deta[a] for a in range(k)])
        ker = np.linalg.svd(stack)[2][np.linalg.matrix_rank(stack):]
        inter = np.linalg.matrix_rank(np.vstack([eta, stack]))
        # Reeb: η^β(R_α) = δ, ι_{R_α}dη^β = 0, expected ∂/∂S^α
        reeb_dev = 0.0
        for a in range(k):
            e = np.zeros(dim)
            e[ix["s"](a)] = 1
            reeb_dev = max(reeb_dev, np.abs(eta @ e - np.eye(k)[a]).max(), np.abs(stack @ e).max())
        # polarization
        fields = []
        for l in range(k):
            for mu in range(k):
                f = np.zeros(dim)
                f[ix["s"](mu)] = ix["g"][l] * pt[ix["b"](l)]
                f[ix["t"](l, mu)] = 1
                fields.append(f)
        for mu in range(k):
            f = np.zeros(dim)
            f[ix["s"](mu)] = -pt[ix["xi"]]
            f[ix["n"](mu)] = 1
            fields.append(f)
        for mu in range(k):
            f = np.zeros(dim)
            f[ix["p"](mu)] = 1
            fields.append(f)
        F = np.array(fields)
        iso = max(np.abs(F @ deta[a] @ F.T).max() for a in range(k))
        out["hydro"].append({
            "k": k,
            "dim": dim,
            "eta_rank": int(eta_rank),
            "ker_d_eta_dim": int(ker.shape[0]),
            "intersection_trivial": bool(inter == dim),
            "reeb_max_deviation": float(reeb_dev),
            "polarization_fields": len(fields),
            "polarization_rank": int(np.linalg.matrix_rank(F)),
            "polarization_eta_max": float(np.abs(F @ eta.T).max()),
            "polarization_isotropy_max": float(iso),
            "nullity": hddw_nullity(eta, deta),
        })
    return out


# ---------------------------------------------------------------- thermodynamics

def ideal_gas():
    S, V, N = sp.symbols("S V N", positive=True)
    f = V ** sp.Rational(-2, 3) * sp.exp(sp.Rational(2, 3) * S / N)
    fv = sp.diff(f, V)
    names = ["E", "P", "V", "T", "S", "mu", "N"]
    E_, P_, V_, T_, S_, mu_, N_ = sp.symbols(names)
    H = -(P_ + fv.subs({S: S_, V: V_, N: N_})) * V_
    grad_h = sp.lambdify([E_, P_, V_, T_, S_, mu_, N_], [sp.diff(H, c) for c in (E_, P_, V_, T_, S_, mu_, N_)])
    h_fun = sp.lambdify([E_, P_, V_, T_, S_, mu_, N_], H)
    idx = {c: i for i, c in enumerate(names)}

    def rhs(x):
        # η = dE − T dS − μ dN + P dV ; dη = −dT∧dS − dμ∧dN + dP∧dV ; R = ∂/∂E
        eta = np.zeros(7)
        eta[idx["E"]] = 1
        eta[idx["S"]] = -x[idx["T"]]
        eta[idx["N"]] = -x[idx["mu"]]
        eta[idx["V"]] = x[idx["P"]]
        om = np.zeros((7, 7))
        for a, b_, c in [("T", "S", -1), ("mu", "N", -1), ("P", "V", 1)]:
            om[idx[a], idx[b_]] += c
            om[idx[b_], idx[a]] -= c
        dh = np.array(grad_h(*x), dtype=float)
        h = h_fun(*x)
        # ι_X dη = dH − (R H) η  with (ι_X dη)_j = Σ_i X^i om[i, j]
        a_mat = np.vstack([om.T, eta])
        b_vec = np.concatenate([dh - dh[idx["E"]] * eta, [-h]])
        return np.linalg.lstsq(a_mat, b_vec, rcond=None)[0]

    sub = {S: 1, V: 1, N: 1}
    x0 = np.array([float(e.subs(sub)) for e in (f, -fv, V, sp.diff(f, S), S, sp.diff(f, N), N)])

    def integrate(dt, t_end=1.0):
        x = x0.copy()
        steps = int(round(t_end / dt))
        for _ in range(steps):
            k1 = rhs(x)
            k2 = rhs(x + dt / 2 * k1)
            k3 = rhs(x + dt / 2 * k2)
            k4 = rhs(x + dt * k3)
            x = x + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        return x

    return {
        "coords": names,
        "initial": dict(zip(names, x0.tolist())),
        "final_dt_0.01": dict(zip(names, integrate(0.01).tolist())),
        "final_dt_0.1": dict(zip(names, integrate(0.1).tolist())),
    }


def entropy_current():
    """Perfect fluid, N^μ = 0: S^μ = P^μV − ξN^μ + β_λT^{λμ} against (E + PV)u^μ/T."""
    k = 4
    T, E, PV, V, xi = sp.Rational(3, 2), sp.Rational(7, 3), sp.Rational(5, 4), sp.Rational(4, 5), sp.Rational(1, 3)
    vx, vz = sp.Rational(1, 5), sp.Rational(-1, 3)
    gam = 1 / sp.sqrt(1 - vx**2 - vz**2)
    u = [gam, gam * vx, 0, gam * vz]
    beta = [c / T for c in u]
    p = PV / V
    Tmn = [[E * u[l] * u[m] - PV * (G4[l, m] - u[l] * u[m]) for m in range(k)] for l in range(k)]
    S = [p * beta[m] * V + sum(G4[l, l] * beta[l] * Tmn[l][m] for l in range(k)) for m in range(k)]
    closed = [(E + PV) * u[m] / T for m in range(k)]
    assert all(sp.simplify(a - b) == 0 for a, b in zip(S, closed))
    fields = {f"beta{m}": float(beta[m]) for m in range(k)}
    fields.update({f"P{m}": float(p * beta[m]) for m in range(k)})
    fields.update({f"N{m}": 0.0 for m in range(k)})
    fields.update({f"T{l}{m}": float(Tmn[l][m]) for l in range(k) for m in range(k)})
    fields.update({"V": float(V), "xi": float(xi)})
    return {"fields": fields, "S": [float(c) for c in closed]}


def main():
    data = {
        "bjorken": bjorken(),
        "kcontact": kcontact(),
        "ideal_gas": ideal_gas(),
        "entropy_current": entropy_current(),
    }
    OUT.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
