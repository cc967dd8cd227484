"""Exact rational linear programming.

A small dense two-phase simplex over gmpy2 rationals with Bland's rule, so
termination is guaranteed and every reported optimum is exact.  Solutions
come with certificates: an optimal solve returns a dual vector satisfying
complementary slackness, an infeasible solve returns a Farkas vector, and an
unbounded solve returns a feasible point plus an improving ray.

The variable model is deliberately narrow: variables are either free or
nonnegative, constraints are ``<=``, ``>=`` or ``==`` rows.  This covers
every use in this package (portfolio variables are free, exchange volumes
and probability masses are nonnegative).
"""

from __future__ import annotations

from dataclasses import dataclass

from .rationals import ONE, ZERO, rat

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

LE, GE, EQ = "<=", ">=", "=="


@dataclass
class LPResult:
    status: str
    objective: object = None
    x: list = None
    # Dual value per constraint row: >= 0 on ">=" rows, <= 0 on "<=" rows,
    # free on "==" rows, with b.y equal to the optimal value.
    y: list = None
    # Farkas certificate of infeasibility (one multiplier per row).
    farkas: list = None
    # Improving feasible ray when unbounded.
    ray: list = None


class LinearProgram:
    """min c.x subject to rows of the form a.x (<=|>=|==) b."""

    def __init__(self):
        self.nonneg: list[bool] = []
        self.rows: list[tuple[dict, str, object]] = []
        self.objective: dict[int, object] = {}

    def add_var(self, nonneg: bool = False) -> int:
        self.nonneg.append(nonneg)
        return len(self.nonneg) - 1

    def add_vars(self, n: int, nonneg: bool = False) -> list[int]:
        return [self.add_var(nonneg) for _ in range(n)]

    def add_constraint(self, coeffs: dict, sense: str, rhs) -> int:
        if sense not in (LE, GE, EQ):
            raise ValueError(f"unknown sense {sense!r}")
        clean = {j: rat(c) for j, c in coeffs.items() if c}
        self.rows.append((clean, sense, rat(rhs)))
        return len(self.rows) - 1

    def set_objective(self, coeffs: dict):
        self.objective = {j: rat(c) for j, c in coeffs.items() if c}

    def solve(self) -> LPResult:
        return _StandardForm(self).run()


class _StandardForm:
    """min c.z, A z = b, z >= 0 tableau with bookkeeping back to the user LP."""

    def __init__(self, lp: LinearProgram):
        self.lp = lp
        # user variable j -> plus column, optional minus column for free vars
        self.pos_col: list[int] = []
        self.neg_col: list = []
        ncols = 0
        for nn in lp.nonneg:
            self.pos_col.append(ncols)
            ncols += 1
            if nn:
                self.neg_col.append(None)
            else:
                self.neg_col.append(ncols)
                ncols += 1
        self.slack_col: list = []
        for _, sense, _ in lp.rows:
            if sense == EQ:
                self.slack_col.append(None)
            else:
                self.slack_col.append(ncols)
                ncols += 1
        self.ncols = ncols
        self.m = len(lp.rows)
        self.flipped: set[int] = set()

        self.A = [[ZERO] * ncols for _ in range(self.m)]
        self.b = [ZERO] * self.m
        for i, (coeffs, sense, rhs) in enumerate(lp.rows):
            row = self.A[i]
            for j, c in coeffs.items():
                row[self.pos_col[j]] += c
                if self.neg_col[j] is not None:
                    row[self.neg_col[j]] -= c
            sc = self.slack_col[i]
            if sc is not None:
                # a.x <= b  ->  a.x + s = b ;  a.x >= b  ->  a.x - s = b
                row[sc] = ONE if sense == LE else -ONE
            if rhs < 0:
                self.A[i] = [-v for v in row]
                rhs = -rhs
                self.flipped.add(i)
            self.b[i] = rhs

        self.c = [ZERO] * ncols
        for j, cj in lp.objective.items():
            self.c[self.pos_col[j]] += cj
            if self.neg_col[j] is not None:
                self.c[self.neg_col[j]] -= cj

    def run(self) -> LPResult:
        m, n = self.m, self.ncols
        T = [list(self.A[i]) + [ZERO] * m + [self.b[i]] for i in range(m)]
        for i in range(m):
            T[i][n + i] = ONE
        basis = [n + i for i in range(m)]

        # Phase I: min sum of artificials. Reduced costs w.r.t. the
        # artificial basis: 1 on artificial columns minus the column sums.
        cost1 = [ZERO] * (n + m + 1)
        for i in range(m):
            cost1[n + i] = ONE
        for i in range(m):
            row = T[i]
            for j in range(n + m + 1):
                if row[j]:
                    cost1[j] -= row[j]
        status = self._simplex(T, basis, cost1, allowed=n + m)
        if status == UNBOUNDED:  # pragma: no cover - phase I is bounded below
            raise RuntimeError("phase I cannot be unbounded")
        if -cost1[-1] != 0:
            # Final phase-I reduced cost on artificial i is 1 - y_i.
            farkas = [ONE - cost1[n + i] for i in range(m)]
            farkas = [-f if i in self.flipped else f for i, f in enumerate(farkas)]
            return LPResult(status=INFEASIBLE, farkas=farkas)

        # Drive artificials out of the basis; drop rows that prove redundant.
        keep = []
        for i in range(m):
            if basis[i] >= n:
                pivot_j = next((j for j in range(n) if T[i][j] != 0), None)
                if pivot_j is None:
                    continue
                self._pivot(T, basis, i, pivot_j, None)
            keep.append(i)
        if len(keep) < m:
            T = [T[i] for i in keep]
            basis = [basis[i] for i in keep]

        # Phase II. Artificials never re-enter because the entering scan is
        # restricted to the first n columns; their reduced-cost entries then
        # track -y exactly.
        cost2 = [ZERO] * (n + m + 1)
        for j in range(n):
            cost2[j] = self.c[j]
        for i, row in enumerate(T):
            cb = self.c[basis[i]] if basis[i] < n else ZERO
            if cb:
                for j in range(n + m + 1):
                    if row[j]:
                        cost2[j] -= cb * row[j]
        status = self._simplex(T, basis, cost2, allowed=n)
        if status == UNBOUNDED:
            return LPResult(
                status=UNBOUNDED,
                x=self._extract(self._std_solution(T, basis, n)),
                ray=self._extract(self._std_ray(T, basis, self._unbounded_col, n)),
            )

        z = self._std_solution(T, basis, n)
        obj = sum((self.c[j] * v for j, v in z.items()), ZERO)
        duals = [ZERO] * m
        for i in keep:
            duals[i] = -cost2[n + i]
        duals = [-d if i in self.flipped else d for i, d in enumerate(duals)]
        return LPResult(status=OPTIMAL, objective=obj, x=self._extract(z), y=duals)

    def _simplex(self, T, basis, cost, allowed: int) -> str:
        m = len(T)
        while True:
            enter = next((j for j in range(allowed) if cost[j] < 0), None)
            if enter is None:
                return OPTIMAL
            leave, best = None, None
            for i in range(m):
                a = T[i][enter]
                if a > 0:
                    ratio = T[i][-1] / a
                    if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                        best, leave = ratio, i
            if leave is None:
                self._unbounded_col = enter
                return UNBOUNDED
            self._pivot(T, basis, leave, enter, cost)

    @staticmethod
    def _pivot(T, basis, i, j, cost):
        row = T[i]
        piv = row[j]
        if piv != 1:
            inv = 1 / piv
            row = [v * inv for v in row]
            T[i] = row
        nz = [k for k, v in enumerate(row) if v]
        for r in T:
            if r is row:
                continue
            f = r[j]
            if f:
                for k in nz:
                    r[k] -= f * row[k]
        if cost is not None:
            f = cost[j]
            if f:
                for k in nz:
                    cost[k] -= f * row[k]
        basis[i] = j

    @staticmethod
    def _std_solution(T, basis, n) -> dict:
        return {bj: T[i][-1] for i, bj in enumerate(basis) if bj < n}

    @staticmethod
    def _std_ray(T, basis, enter, n) -> dict:
        z = {enter: ONE}
        for i, bj in enumerate(basis):
            if bj < n and T[i][enter]:
                z[bj] = -T[i][enter]
        return z

    def _extract(self, z: dict) -> list:
        x = []
        for j in range(len(self.lp.nonneg)):
            v = z.get(self.pos_col[j], ZERO)
            if self.neg_col[j] is not None:
                v = v - z.get(self.neg_col[j], ZERO)
            x.append(v)
        return x


def check_certificates(lp: LinearProgram, res: LPResult) -> bool:
    """Exact verification of primal/dual certificates (used by the tests)."""
    if res.status == OPTIMAL:
        _assert_primal_feasible(lp, res.x)
        n = len(lp.nonneg)
        aty = [ZERO] * n
        for i, (coeffs, sense, rhs) in enumerate(lp.rows):
            yi = res.y[i]
            if sense == GE and yi < 0:
                raise AssertionError(f"dual sign violated on >= row {i}")
            if sense == LE and yi > 0:
                raise AssertionError(f"dual sign violated on <= row {i}")
            if yi:
                for j, c in coeffs.items():
                    aty[j] += yi * c
                act = sum((c * res.x[j] for j, c in coeffs.items()), ZERO)
                if act != rhs:
                    raise AssertionError(f"complementary slackness violated on row {i}")
        for j in range(n):
            cj = lp.objective.get(j, ZERO)
            if lp.nonneg[j]:
                if aty[j] > cj:
                    raise AssertionError(f"dual infeasible at var {j}")
                if res.x[j] and aty[j] != cj:
                    raise AssertionError(f"complementary slackness violated at var {j}")
            elif aty[j] != cj:
                raise AssertionError(f"dual equality violated at free var {j}")
        by = sum((res.y[i] * lp.rows[i][2] for i in range(len(lp.rows))), ZERO)
        if by != res.objective:
            raise AssertionError("strong duality violated")
        return True
    if res.status == INFEASIBLE:
        n = len(lp.nonneg)
        aty = [ZERO] * n
        by = ZERO
        for i, (coeffs, sense, rhs) in enumerate(lp.rows):
            yi = res.farkas[i]
            if sense == GE and yi < 0:
                raise AssertionError("farkas sign violated")
            if sense == LE and yi > 0:
                raise AssertionError("farkas sign violated")
            for j, c in coeffs.items():
                aty[j] += yi * c
            by += yi * rhs
        for j in range(n):
            if lp.nonneg[j]:
                if aty[j] > 0:
                    raise AssertionError("farkas column violated")
            elif aty[j] != 0:
                raise AssertionError("farkas free column violated")
        if by <= 0:
            raise AssertionError("farkas value not positive")
        return True
    if res.status == UNBOUNDED:
        _assert_primal_feasible(lp, res.x)
        cost = sum((c * res.ray[j] for j, c in lp.objective.items()), ZERO)
        if cost >= 0:
            raise AssertionError("ray does not improve the objective")
        for coeffs, sense, _ in lp.rows:
            v = sum((c * res.ray[j] for j, c in coeffs.items()), ZERO)
            if sense == EQ and v != 0:
                raise AssertionError("ray leaves == row")
            if sense == GE and v < 0:
                raise AssertionError("ray leaves >= row")
            if sense == LE and v > 0:
                raise AssertionError("ray leaves <= row")
        for j, nn in enumerate(lp.nonneg):
            if nn and res.ray[j] < 0:
                raise AssertionError("ray leaves variable bound")
        return True
    raise AssertionError(f"unknown status {res.status}")


def _assert_primal_feasible(lp: LinearProgram, x):
    for j, nn in enumerate(lp.nonneg):
        if nn and x[j] < 0:
            raise AssertionError(f"variable {j} negative")
    for i, (coeffs, sense, rhs) in enumerate(lp.rows):
        v = sum((c * x[j] for j, c in coeffs.items()), ZERO)
        if sense == EQ and v != rhs:
            raise AssertionError(f"== row {i} violated")
        if sense == GE and v < rhs:
            raise AssertionError(f">= row {i} violated")
        if sense == LE and v > rhs:
            raise AssertionError(f"<= row {i} violated")
