"""Independent oracle for the frozen constants used in the C++ tests.

Uses exact rational/algebraic arithmetic (sympy) for the mean matrices and the
dominant eigenpair, then evaluates the fluid recursions in high precision.
Run: python3 tests/oracles/fluid_oracle.py
"""
import sympy as sp


def analyse(lam, mu, mcheck_diag):
    n = len(lam)
    gamma = [(1 - mcheck_diag[i]) / (mu[i] - lam[i]) for i in range(n)]
    mc = [[mcheck_diag[i] if i == j else lam[j] * gamma[i] for j in range(n)] for i in range(n)]
    M = [[None] * n for _ in range(n)]
    M[n - 1] = list(mc[n - 1])
    for i in range(n - 2, -1, -1):
        for j in range(n):
            acc = mc[i][j] if i >= j else 0
            for k in range(i + 1, n):
                acc += mc[i][k] * M[k][j]
            M[i][j] = sp.nsimplify(acc)
    Mm = sp.Matrix(M)
    ev = Mm.eigenvals()
    rho = max(ev.keys(), key=lambda e: sp.N(e, 50))
    v = (Mm.T - rho * sp.eye(n)).nullspace()[0]
    u = (Mm - rho * sp.eye(n)).nullspace()[0]
    v = v / sum(v)
    u = u / (v.T * u)[0]
    alpha = sum(v[i] / mu[i] for i in range(n)) / (sum(sp.Rational(lam[i]) / mu[i] for i in range(n)) - 1)
    bbar = [sp.Integer(1)]
    aii = []
    for i in range(n):
        a = v[i] / alpha + lam[i] * (bbar[i] - bbar[0])
        aii.append(a)
        bbar.append(bbar[i] + a * gamma[i])
    return dict(mcheck=mc, gamma=gamma, M=Mm, rho=rho, u=u, v=v, alpha=alpha, bbar=bbar, aii=aii)


def show(name, d):
    print("==", name)
    for k in ["gamma", "M", "rho", "u", "v", "alpha", "bbar", "aii"]:
        val = d[k]
        if isinstance(val, list):
            print(k, [sp.N(x, 17) for x in val])
        elif isinstance(val, sp.MatrixBase):
            print(k, [sp.N(x, 17) for x in val])
        else:
            print(k, sp.N(val, 17), val)


R = sp.Rational
# symmetric gated: lambda = 2, mu = 3, X = 1  -> mcheck_ii = 2/3
show("gated", analyse([2, 2], [3, 3], [R(2, 3), R(2, 3)]))
# symmetric exhaustive: X = inf -> mcheck_ii = 0
show("exhaustive", analyse([2, 2], [3, 3], [0, 0]))
# geometric p = 1/2 pgf at 1/2 (support 1,2,...): sum (1/2)^k (1/2)^k = 1/3
print("geometric pgf", sum(R(1, 2) ** k * R(1, 2) ** k for k in range(1, 200)).evalf(20))
# Pareto(3, 1) mean by quadrature
x = sp.symbols("x", positive=True)
print("pareto mean", sp.integrate(x * 3 * x ** -4, (x, 1, sp.oo)))
# mean of a (k+1)-gate visit for lambda=2, mu=3
for k in [0, 1, 2, 5]:
    r = R(2, 3)
    print("visit mean k=", k, (R(1, 3) * (1 - r ** (k + 1)) / (1 - r)))
