"""Dense active-set QP solver for small strictly convex problems.

    minimize    0.5 x'Hx + g'x
    subject to  A_eq x  = b_eq
                A_in x <= b_in

Dual active-set iteration (Goldfarb-Idnani): start at the unconstrained
minimum, add the most binding constraint with primal/dual step lengths,
drop dual-blocked inequalities. Equalities are forced into the working set
first and never leave it. Finite termination needs H positive definite;
whole-body assembly guarantees that with a small ridge. The final working
set is re-solved once to polish the KKT residual.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class QpInfeasible(RuntimeError):
    pass


@dataclass
class QpProblem:
    H: np.ndarray
    g: np.ndarray
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    A_in: np.ndarray | None = None
    b_in: np.ndarray | None = None

    def __post_init__(self):
        n = self.g.shape[0]
        if self.H.shape != (n, n):
            raise ValueError("H must be n-by-n")
        if not np.allclose(self.H, self.H.T, atol=1e-10):
            raise ValueError("H must be symmetric")
        if self.A_eq is None:
            self.A_eq = np.zeros((0, n))
            self.b_eq = np.zeros(0)
        if self.A_in is None:
            self.A_in = np.zeros((0, n))
            self.b_in = np.zeros(0)
        if self.A_eq.shape[0] > n:
            raise ValueError("more equality rows than variables")


@dataclass
class QpSolution:
    x: np.ndarray
    objective: float
    eq_multipliers: np.ndarray
    in_multipliers: np.ndarray
    active: list[int] = field(default_factory=list)
    iterations: int = 0

    def kkt_residual(self, p: QpProblem) -> float:
        """Largest violation among stationarity, feasibility, duality."""
        stat = p.H @ self.x + p.g
        if p.A_eq.shape[0]:
            stat = stat + p.A_eq.T @ self.eq_multipliers
        if p.A_in.shape[0]:
            stat = stat + p.A_in.T @ self.in_multipliers
        parts = [np.max(np.abs(stat)) if stat.size else 0.0]
        if p.A_eq.shape[0]:
            parts.append(np.max(np.abs(p.A_eq @ self.x - p.b_eq)))
        if p.A_in.shape[0]:
            slack = p.A_in @ self.x - p.b_in
            parts.append(max(0.0, float(np.max(slack))))
            parts.append(float(np.max(np.abs(self.in_multipliers * slack))))
            parts.append(max(0.0, float(np.max(-self.in_multipliers))))
        return float(max(parts))


def solve_qp(problem: QpProblem, max_iter: int = 200, tol: float = 1e-10) -> QpSolution:
    H = np.asarray(problem.H, dtype=float)
    g = np.asarray(problem.g, dtype=float)
    n = g.shape[0]
    m_eq = problem.A_eq.shape[0]
    m_in = problem.A_in.shape[0]

    # Internal ">=" normals: equalities keep their row (two-sided), each
    # inequality a'x <= b becomes (-a)'x >= -b.
    normals = np.vstack([problem.A_eq, -problem.A_in]) if (m_eq + m_in) else np.zeros((0, n))
    bounds = np.concatenate([problem.b_eq, -problem.b_in])
    m = m_eq + m_in

    try:
        chol = np.linalg.cholesky(H)
    except np.linalg.LinAlgError:
        raise QpInfeasible("H is not positive definite") from None

    def h_solve(v):
        y = np.linalg.solve(chol, v)
        return np.linalg.solve(chol.T, y)

    x = -h_solve(g)
    active: list[int] = []
    u = np.zeros(0)
    sign = np.ones(m)  # equality normals may be entered flipped
    scale = 1.0 + float(np.max(np.abs(bounds))) if m else 1.0
    eps = tol * scale

    # Fast path: the equality-constrained optimum with zero inequality
    # multipliers is the QP optimum whenever it is feasible.
    if m_eq:
        fast = _equality_kkt(H, g, problem.A_eq, problem.b_eq)
        if fast is not None:
            x_f, lam = fast
            if m_in == 0 or np.all(problem.A_in @ x_f - problem.b_in <= eps):
                obj = float(0.5 * x_f @ H @ x_f + g @ x_f)
                return QpSolution(x_f, obj, lam, np.zeros(m_in), [], 1)
    elif m_in == 0 or np.all(problem.A_in @ x - problem.b_in <= eps):
        obj = float(0.5 * x @ H @ x + g @ x)
        return QpSolution(x, obj, np.zeros(0), np.zeros(m_in), [], 1)

    iterations = 0
    while iterations < max_iter:
        iterations += 1
        slack = normals @ x - bounds if m else np.zeros(0)
        p = -1
        for j in range(m_eq):
            if j not in active and abs(slack[j]) > eps:
                p = j
                sign[j] = -1.0 if slack[j] > 0 else 1.0
                break
        if p < 0:
            viol = [j for j in range(m_eq, m) if j not in active and slack[j] < -eps]
            if not viol:
                break
            p = min(viol)
        n_p = sign[p] * normals[p]
        s_p = sign[p] * slack[p]

        # Inner loop: drive constraint p into the working set. Its multiplier
        # u_p accumulates over partial (dual-blocked) steps.
        u_p = 0.0
        while True:
            if active:
                N = (sign[active, None] * normals[active]).T  # n x q
                Gi_np = h_solve(n_p)
                M = N.T @ h_solve(N)
                r = np.linalg.solve(M, N.T @ Gi_np)
                z = Gi_np - h_solve(N @ r)
            else:
                r = np.zeros(0)
                z = h_solve(n_p)

            zn = float(z @ n_p)
            # Dual blocking step (inequalities only).
            t1 = np.inf
            lidx = -1
            for k, j in enumerate(active):
                if j >= m_eq and r[k] > eps:
                    cand = u[k] / r[k]
                    if cand < t1:
                        t1 = cand
                        lidx = k
            t2 = -s_p / zn if zn > eps else np.inf
            t = min(t1, t2)
            if not np.isfinite(t):
                raise QpInfeasible("constraints are inconsistent")
            if zn > eps:
                x = x + t * z
                s_p = s_p + t * zn
            if len(active):
                u = u - t * r
            u_p += t
            if t == t2 and zn > eps:
                active.append(p)
                u = np.append(u, u_p)
                break
            # Dual step only: drop the blocking inequality and retry.
            if lidx < 0:
                raise QpInfeasible("constraints are inconsistent")
            active.pop(lidx)
            u = np.delete(u, lidx)
    else:
        raise QpInfeasible(f"no convergence in {max_iter} iterations")

    x, u = _polish(problem, H, g, normals, bounds, sign, active, x, u, eps)

    eq_mult = np.zeros(m_eq)
    in_mult = np.zeros(m_in)
    for k, j in enumerate(active):
        if j < m_eq:
            # Internal stationarity is Hx + g = sum u_j n_j.
            eq_mult[j] = -sign[j] * u[k]
        else:
            in_mult[j - m_eq] = u[k]
    obj = float(0.5 * x @ H @ x + g @ x)
    return QpSolution(x, obj, eq_mult, in_mult, sorted(active), iterations)


def _equality_kkt(H, g, A_eq, b_eq):
    n = H.shape[0]
    q = A_eq.shape[0]
    KKT = np.block([[H, A_eq.T], [A_eq, np.zeros((q, q))]])
    try:
        sol = np.linalg.solve(KKT, np.concatenate([-g, b_eq]))
    except np.linalg.LinAlgError:
        return None
    return sol[:n], sol[n:]


def _polish(problem, H, g, normals, bounds, sign, active, x, u, eps):
    """One KKT equality re-solve on the final working set; keep it only if
    it does not break inactive inequality feasibility."""
    q = len(active)
    if q == 0:
        return -np.linalg.solve(H, g), u
    N = (sign[active, None] * normals[active]).T
    KKT = np.block([[H, -N], [-N.T, np.zeros((q, q))]])
    rhs = np.concatenate([-g, -sign[active] * bounds[active]])
    try:
        sol = np.linalg.solve(KKT, rhs)
    except np.linalg.LinAlgError:
        return x, u
    x_new, u_new = sol[: H.shape[0]], sol[H.shape[0] :]
    if np.any(u_new[[j >= problem.A_eq.shape[0] for j in active]] < -eps):
        return x, u
    slack = normals @ x_new - bounds
    inactive = [j for j in range(normals.shape[0]) if j not in active]
    if inactive and np.min(slack[inactive]) < -10 * eps:
        return x, u
    return x_new, u_new


def enumerate_qp_oracle(problem: QpProblem) -> QpSolution:
    """Brute-force reference: try every subset of inequalities as the active
    set, solve the KKT equalities, keep KKT-consistent candidates, return
    the lowest objective. Exponential in the inequality count; test use only.
    """
    from itertools import combinations

    H, g = problem.H, problem.g
    n = g.shape[0]
    m_eq = problem.A_eq.shape[0]
    m_in = problem.A_in.shape[0]
    best: QpSolution | None = None
    for k in range(min(m_in, n - m_eq) + 1):
        for subset in combinations(range(m_in), k):
            A_act = np.vstack([problem.A_eq, problem.A_in[list(subset)]])
            b_act = np.concatenate([problem.b_eq, problem.b_in[list(subset)]])
            q = A_act.shape[0]
            KKT = np.block([[H, A_act.T], [A_act, np.zeros((q, q))]])
            rhs = np.concatenate([-g, b_act])
            try:
                sol = np.linalg.solve(KKT, rhs)
            except np.linalg.LinAlgError:
                continue
            x = sol[:n]
            mult = sol[n:]
            mu = np.zeros(m_in)
            mu[list(subset)] = mult[m_eq:]
            candidate = QpSolution(
                x, float(0.5 * x @ H @ x + g @ x), mult[:m_eq], mu, sorted(subset)
            )
            # A near-singular working set can "solve" with huge multipliers;
            # only a full KKT recheck makes the enumeration sound.
            if candidate.kkt_residual(problem) > 1e-8:
                continue
            if best is None or candidate.objective < best.objective - 1e-12:
                best = candidate
    if best is None:
        raise QpInfeasible("oracle found no KKT point")
    return best
