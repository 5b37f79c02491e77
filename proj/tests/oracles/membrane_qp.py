"""Reference solution of the discrete membrane obstacle problem on a 17x17 grid.

Assembles the P1 stiffness matrix of the diagonal-split triangulation from
barycentric gradients and solves the bound-constrained QP

    min  int |grad u|^2   s.t.  u >= psi at interior nodes, u = 0 on the boundary

with cvxpy. Prints a C++ snippet with the frozen values used by the tests.
"""
import cvxpy as cp
import numpy as np

m = 17
h = 1.0 / (m - 1)
xs = np.linspace(0.0, 1.0, m)
X, Y = np.meshgrid(xs, xs, indexing="xy")  # node k = i + m*j
psi = (0.25 - (X - 0.5) ** 2 - (Y - 0.5) ** 2).ravel()
idx = lambda i, j: i + m * j

K = np.zeros((m * m, m * m))
for j in range(m - 1):
    for i in range(m - 1):
        for tri in ([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)], [idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]):
            P = np.array([[X.ravel()[v], Y.ravel()[v]] for v in tri])
            M = np.column_stack([np.ones(3), P])
            G = np.linalg.inv(M)[1:, :]  # rows: d/dx, d/dy of the three hats
            area = 0.5 * abs(np.linalg.det(M))
            K[np.ix_(tri, tri)] += area * G.T @ G

boundary = np.array([i in (0, m - 1) or j in (0, m - 1) for j in range(m) for i in range(m)])
free = ~boundary
Kf = K[np.ix_(free, free)]
u = cp.Variable(free.sum())
prob = cp.Problem(cp.Minimize(cp.quad_form(u, cp.psd_wrap(Kf))), [u >= psi[free]])
prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-14, tol_gap_rel=1e-14, tol_feas=1e-14)
full = np.zeros(m * m)
full[free] = u.value
full = np.maximum(full, np.where(free, psi, full))
energy = full @ K @ full
contact = int(np.sum(free & (np.abs(full - psi) < 1e-7)))

print(f"// energy {energy:.15e}")
print(f"// center {full[idx(8, 8)]:.15e}")
print(f"// contact nodes {contact}")
print("const double kMembraneQp[] = {")
for j in range(m):
    print("  " + ", ".join(f"{full[idx(i, j)]:.15e}" for i in range(m)) + ",")
print("};")
