"""Exact branch-and-bound for pure-binary linear programs.

The solver is deliberately free of floating point: every constraint is
scaled to integer coefficients (exact, via the LCM of the rational
denominators) and all pruning tests are integer comparisons. Branching
order is fixed (lowest variable index first, value 1 before value 0), so
identical models and limits always produce identical solutions.

Search = depth-first with three exactness-preserving ingredients:

* bounds propagation: each constraint keeps its currently achievable
  [min, max] activity; impossible constraints prune the node and forced
  variables are fixed without branching,
* incumbent pruning with an admissible objective bound: free variables
  at their favorable value, tightened through at-most-one / exactly-one
  / at-least-one constraint groups detected in the model,
* no LP relaxation anywhere.

The hot path is compiled with numba; a pure-Python engine with identical
semantics (arbitrary-precision integers) backs models whose scaled
coefficients would not fit the compiled kernel and doubles as a readable
reference implementation.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from numba import njit, objmode

from .milp import (
    STATUS_BUDGET_EXCEEDED,
    STATUS_INFEASIBLE,
    STATUS_OPTIMAL,
    BinaryProgram,
    ModelError,
    Solution,
    SENSE_EQ,
    SENSE_GE,
    SENSE_LE,
)

_INF = 1 << 62
# Scaled row/objective magnitudes above this use the big-integer engine.
_SAFE_MAGNITUDE = 1 << 59

_GROUP_PACK = 0   # sum x <= 1
_GROUP_EXACT = 1  # sum x == 1
_GROUP_COVER = 2  # sum x >= 1


@dataclass(frozen=True)
class SolveLimits:
    """Search budget. ``None`` means unlimited."""

    max_nodes: int | None = None
    time_budget: float | None = None


def _scale_terms(terms, rhs=None):
    """Return integer coefficients after multiplying by the LCM denominator."""
    denoms = [c.denominator for c, _ in terms]
    if rhs is not None:
        denoms.append(rhs.denominator)
    scale = math.lcm(*denoms) if denoms else 1
    coefs = [int(c * scale) for c, _ in terms]
    scaled_rhs = None if rhs is None else int(rhs * scale)
    return coefs, scaled_rhs, scale


class _Arrays:
    """Integer form of a model: CSR rows, CSC columns, bounds, objective."""

    def __init__(self, model: BinaryProgram):
        n = len(model.vars)
        self.n = n
        row_ptr = [0]
        row_var: list[int] = []
        row_coef: list[int] = []
        lo: list[int] = []
        hi: list[int] = []
        self.safe = True
        for c in model.constraints:
            coefs, rhs, _ = _scale_terms(c.terms, c.rhs)
            row_var.extend(v.index for _, v in c.terms)
            row_coef.extend(coefs)
            row_ptr.append(len(row_var))
            if c.sense == SENSE_LE:
                lo.append(-_INF)
                hi.append(rhs)
            elif c.sense == SENSE_GE:
                lo.append(rhs)
                hi.append(_INF)
            else:
                lo.append(rhs)
                hi.append(rhs)
            if sum(abs(a) for a in coefs) + abs(rhs) >= _SAFE_MAGNITUDE:
                self.safe = False
        self.row_ptr = row_ptr
        self.row_var = row_var
        self.row_coef = row_coef
        self.lo = lo
        self.hi = hi

        obj_coefs, _, obj_scale = _scale_terms(model.objective)
        self.obj_scale = obj_scale
        self.maximize = model.objective_sense == "max"
        sign = 1 if self.maximize else -1
        self.obj = [0] * n
        for a, (_, v) in zip(obj_coefs, model.objective):
            self.obj[v.index] = sign * a
        if sum(abs(a) for a in self.obj) >= _SAFE_MAGNITUDE:
            self.safe = False

        # Columns (var -> rows it appears in).
        counts = [0] * n
        for v in row_var:
            counts[v] += 1
        col_ptr = [0] * (n + 1)
        for v in range(n):
            col_ptr[v + 1] = col_ptr[v] + counts[v]
        col_row = [0] * len(row_var)
        col_coef = [0] * len(row_var)
        fill = col_ptr[:-1].copy()
        for r in range(len(model.constraints)):
            for k in range(row_ptr[r], row_ptr[r + 1]):
                v = row_var[k]
                col_row[fill[v]] = r
                col_coef[fill[v]] = row_coef[k]
                fill[v] += 1
        self.col_ptr = col_ptr
        self.col_row = col_row
        self.col_coef = col_coef

        self._detect_groups()

    def _detect_groups(self) -> None:
        """Greedy disjoint cover of variables by unit-coefficient groups.

        Groups feed the objective bound: an at-most-one row caps its free
        members at their single best coefficient, an exactly-one row must
        contribute exactly one member, an at-least-one row at least one.
        Only groups containing an objective variable are kept.
        """
        owner = [-1] * self.n
        g_ptr = [0]
        g_var: list[int] = []
        g_kind: list[int] = []
        nrows = len(self.lo)
        for r in range(nrows):
            members = range(self.row_ptr[r], self.row_ptr[r + 1])
            if len(members) < 2:
                continue
            if any(self.row_coef[k] != 1 for k in members):
                continue
            if self.lo[r] == 1 and self.hi[r] == 1:
                kind = _GROUP_EXACT
            elif self.hi[r] == 1 and self.lo[r] == -_INF:
                kind = _GROUP_PACK
            elif self.lo[r] == 1 and self.hi[r] == _INF:
                kind = _GROUP_COVER
            else:
                continue
            vs = [self.row_var[k] for k in members]
            if any(owner[v] >= 0 for v in vs):
                continue
            if all(self.obj[v] == 0 for v in vs):
                continue
            g = len(g_kind)
            for v in vs:
                owner[v] = g
            g_var.extend(vs)
            g_ptr.append(len(g_var))
            g_kind.append(kind)
        self.var_group = owner
        self.group_ptr = g_ptr
        self.group_var = g_var
        self.group_kind = g_kind


# State-array slots shared by the kernels.
_S_NFIXED = 0
_S_FIXEDOBJ = 1
_S_NAIVE = 2
_S_TRAIL = 3
_S_QHEAD = 4
_S_QTAIL = 5


@njit(cache=True)
def _fix(v, value, S, val, trail, col_ptr, col_row, col_coef,
         amin, amax, lo, hi, obj, var_group, g_ones, queue, in_q):
    """Fix ``v`` to ``value``; returns True on conflict. Always completes
    its bookkeeping so that the trail can be undone uniformly."""
    if val[v] >= 0:
        return val[v] != value
    val[v] = value
    trail[S[_S_TRAIL]] = v
    S[_S_TRAIL] += 1
    S[_S_NFIXED] += 1
    if value == 1:
        S[_S_FIXEDOBJ] += obj[v]
    g = var_group[v]
    if g >= 0:
        if value == 1:
            g_ones[g] += 1
    elif obj[v] > 0:
        S[_S_NAIVE] -= obj[v]
    conflict = False
    for k in range(col_ptr[v], col_ptr[v + 1]):
        r = col_row[k]
        a = col_coef[k]
        if value == 1:
            if a > 0:
                amin[r] += a
            else:
                amax[r] += a
        else:
            if a > 0:
                amax[r] -= a
            else:
                amin[r] -= a
        if amin[r] > hi[r] or amax[r] < lo[r]:
            conflict = True
        if not in_q[r]:
            in_q[r] = True
            queue[S[_S_QTAIL] % queue.shape[0]] = r
            S[_S_QTAIL] += 1
    return conflict


@njit(cache=True)
def _drain_queue(S, queue, in_q):
    while S[_S_QHEAD] < S[_S_QTAIL]:
        in_q[queue[S[_S_QHEAD] % queue.shape[0]]] = False
        S[_S_QHEAD] += 1


@njit(cache=True)
def _propagate(S, val, trail, col_ptr, col_row, col_coef,
               row_ptr, row_var, row_coef, amin, amax, lo, hi,
               obj, var_group, g_ones, queue, in_q):
    """Run forced fixings to fixpoint; returns True on conflict."""
    while S[_S_QHEAD] < S[_S_QTAIL]:
        r = queue[S[_S_QHEAD] % queue.shape[0]]
        S[_S_QHEAD] += 1
        in_q[r] = False
        if amin[r] > hi[r] or amax[r] < lo[r]:
            _drain_queue(S, queue, in_q)
            return True
        for k in range(row_ptr[r], row_ptr[r + 1]):
            v = row_var[k]
            if val[v] >= 0:
                continue
            a = row_coef[k]
            force = -1
            if hi[r] < _INF:
                slack = hi[r] - amin[r]
                if a > 0 and a > slack:
                    force = 0
                elif a < 0 and -a > slack:
                    force = 1
            if force < 0 and lo[r] > -_INF:
                surplus = amax[r] - lo[r]
                if a > 0 and a > surplus:
                    force = 1
                elif a < 0 and -a > surplus:
                    force = 0
            if force >= 0:
                if _fix(v, force, S, val, trail, col_ptr, col_row, col_coef,
                        amin, amax, lo, hi, obj, var_group, g_ones, queue, in_q):
                    _drain_queue(S, queue, in_q)
                    return True
    return False


@njit(cache=True)
def _bound(S, val, obj, group_ptr, group_var, group_kind, g_ones):
    """Admissible upper bound on any completion of the current node."""
    ub = S[_S_FIXEDOBJ] + S[_S_NAIVE]
    for g in range(group_kind.shape[0]):
        kind = group_kind[g]
        if g_ones[g] > 0:
            if kind == _GROUP_COVER:
                for k in range(group_ptr[g], group_ptr[g + 1]):
                    v = group_var[k]
                    if val[v] < 0 and obj[v] > 0:
                        ub += obj[v]
            continue
        best = -_INF
        pos_sum = 0
        for k in range(group_ptr[g], group_ptr[g + 1]):
            v = group_var[k]
            if val[v] < 0:
                if obj[v] > best:
                    best = obj[v]
                if obj[v] > 0:
                    pos_sum += obj[v]
        if best == -_INF:
            continue
        if kind == _GROUP_PACK:
            if best > 0:
                ub += best
        elif kind == _GROUP_EXACT:
            ub += best
        else:
            ub += pos_sum if pos_sum > 0 else best
    return ub


@njit(cache=True)
def _undo_to(mark, S, val, trail, col_ptr, col_row, col_coef,
             amin, amax, obj, var_group, g_ones):
    while S[_S_TRAIL] > mark:
        S[_S_TRAIL] -= 1
        v = trail[S[_S_TRAIL]]
        value = val[v]
        val[v] = -1
        S[_S_NFIXED] -= 1
        if value == 1:
            S[_S_FIXEDOBJ] -= obj[v]
        g = var_group[v]
        if g >= 0:
            if value == 1:
                g_ones[g] -= 1
        elif obj[v] > 0:
            S[_S_NAIVE] += obj[v]
        for k in range(col_ptr[v], col_ptr[v + 1]):
            r = col_row[k]
            a = col_coef[k]
            if value == 1:
                if a > 0:
                    amin[r] -= a
                else:
                    amax[r] -= a
            else:
                if a > 0:
                    amax[r] += a
                else:
                    amin[r] += a


@njit(cache=True)
def _search(n, col_ptr, col_row, col_coef, row_ptr, row_var, row_coef,
            lo, hi, obj, var_group, group_ptr, group_var, group_kind,
            max_nodes, deadline):
    """DFS over the 0/1 tree. Returns (exhausted, found, best, assign, nodes)."""
    nrows = lo.shape[0]
    val = np.full(n, -1, np.int8)
    trail = np.empty(n, np.int64)
    amin = np.zeros(nrows, np.int64)
    amax = np.zeros(nrows, np.int64)
    for r in range(nrows):
        for k in range(row_ptr[r], row_ptr[r + 1]):
            a = row_coef[k]
            if a > 0:
                amax[r] += a
            else:
                amin[r] += a
    g_ones = np.zeros(group_kind.shape[0], np.int64)
    queue = np.empty(nrows + 1, np.int64)
    in_q = np.zeros(nrows, np.bool_)
    S = np.zeros(8, np.int64)
    naive = 0
    for v in range(n):
        if var_group[v] < 0 and obj[v] > 0:
            naive += obj[v]
    S[_S_NAIVE] = naive

    best_assign = np.zeros(n, np.int8)
    best_val = -_INF
    found = False
    nodes = 0

    # Root propagation.
    for r in range(nrows):
        in_q[r] = True
        queue[S[_S_QTAIL] % queue.shape[0]] = r
        S[_S_QTAIL] += 1
    if _propagate(S, val, trail, col_ptr, col_row, col_coef, row_ptr, row_var,
                  row_coef, amin, amax, lo, hi, obj, var_group, g_ones, queue, in_q):
        return True, False, best_val, best_assign, nodes

    dec_var = np.empty(n + 1, np.int64)
    dec_try = np.empty(n + 1, np.int8)
    level_mark = np.empty(n + 1, np.int64)
    level_hint = np.empty(n + 2, np.int64)
    level = 0
    level_hint[0] = 0
    descend = True
    exhausted = True

    while True:
        if descend:
            h = level_hint[level]
            while h < n and val[h] >= 0:
                h += 1
            level_hint[level] = h
            if h == n:
                value = S[_S_FIXEDOBJ]
                if not found or value > best_val:
                    found = True
                    best_val = value
                    for v in range(n):
                        best_assign[v] = val[v]
                descend = False
                continue
            dec_var[level] = h
            dec_try[level] = 1
        else:
            # Backtrack to the deepest level with an untried branch.
            backtracked = False
            while level > 0:
                level -= 1
                _undo_to(level_mark[level], S, val, trail, col_ptr, col_row,
                         col_coef, amin, amax, obj, var_group, g_ones)
                if dec_try[level] == 1:
                    dec_try[level] = 0
                    backtracked = True
                    break
            if not backtracked:
                return exhausted, found, best_val, best_assign, nodes

        # Attempt the pending branch; at most two tries per level (1 then 0).
        while True:
            nodes += 1
            if nodes % 1024 == 0:
                over = nodes >= max_nodes
                if not over and deadline < np.inf:
                    now = 0.0
                    with objmode(now="float64"):
                        now = time.time()
                    over = now > deadline
                if over:
                    exhausted = False
                    return exhausted, found, best_val, best_assign, nodes

            level_mark[level] = S[_S_TRAIL]
            conflict = _fix(dec_var[level], dec_try[level], S, val, trail,
                            col_ptr, col_row, col_coef, amin, amax, lo, hi,
                            obj, var_group, g_ones, queue, in_q)
            if conflict:
                _drain_queue(S, queue, in_q)
            else:
                conflict = _propagate(S, val, trail, col_ptr, col_row, col_coef,
                                      row_ptr, row_var, row_coef, amin, amax,
                                      lo, hi, obj, var_group, g_ones, queue, in_q)
            if not conflict and found:
                if _bound(S, val, obj, group_ptr, group_var, group_kind,
                          g_ones) <= best_val:
                    conflict = True
            if not conflict:
                level += 1
                level_hint[level] = level_hint[level - 1]
                descend = True
                break
            _undo_to(level_mark[level], S, val, trail, col_ptr, col_row,
                     col_coef, amin, amax, obj, var_group, g_ones)
            if dec_try[level] == 1:
                dec_try[level] = 0
                continue
            descend = False
            break


def _solve_jit(arrays: _Arrays, limits: SolveLimits):
    max_nodes = limits.max_nodes if limits.max_nodes is not None else _INF
    deadline = np.inf
    if limits.time_budget is not None:
        deadline = time.time() + limits.time_budget
    return _search(
        arrays.n,
        np.asarray(arrays.col_ptr, np.int64),
        np.asarray(arrays.col_row, np.int64),
        np.asarray(arrays.col_coef, np.int64),
        np.asarray(arrays.row_ptr, np.int64),
        np.asarray(arrays.row_var, np.int64),
        np.asarray(arrays.row_coef, np.int64),
        np.asarray(arrays.lo, np.int64),
        np.asarray(arrays.hi, np.int64),
        np.asarray(arrays.obj, np.int64),
        np.asarray(arrays.var_group, np.int64),
        np.asarray(arrays.group_ptr, np.int64),
        np.asarray(arrays.group_var, np.int64),
        np.asarray(arrays.group_kind, np.int64),
        max_nodes,
        deadline,
    )


def _solve_python(arrays: _Arrays, limits: SolveLimits):
    """Reference engine: same branching order and pruning rule, Python ints.

    Used for models whose scaled coefficients exceed the compiled kernel's
    integer range, and by tests as an independent engine.
    """
    n = arrays.n
    nrows = len(arrays.lo)
    max_nodes = limits.max_nodes if limits.max_nodes is not None else None
    deadline = None
    if limits.time_budget is not None:
        deadline = time.time() + limits.time_budget

    val = [-1] * n
    amin = [0] * nrows
    amax = [0] * nrows
    for r in range(nrows):
        for k in range(arrays.row_ptr[r], arrays.row_ptr[r + 1]):
            a = arrays.row_coef[k]
            if a > 0:
                amax[r] += a
            else:
                amin[r] += a

    best = {"found": False, "val": None, "assign": None, "nodes": 0, "stop": False}

    def set_var(v, value):
        val[v] = value
        ok = True
        for k in range(arrays.col_ptr[v], arrays.col_ptr[v + 1]):
            r = arrays.col_row[k]
            a = arrays.col_coef[k]
            if value == 1:
                if a > 0:
                    amin[r] += a
                else:
                    amax[r] += a
            else:
                if a > 0:
                    amax[r] -= a
                else:
                    amin[r] -= a
            if amin[r] > arrays.hi[r] or amax[r] < arrays.lo[r]:
                ok = False
        return ok

    def unset_var(v):
        value = val[v]
        val[v] = -1
        for k in range(arrays.col_ptr[v], arrays.col_ptr[v + 1]):
            r = arrays.col_row[k]
            a = arrays.col_coef[k]
            if value == 1:
                if a > 0:
                    amin[r] -= a
                else:
                    amax[r] -= a
            else:
                if a > 0:
                    amax[r] += a
                else:
                    amin[r] += a

    def bound(fixed_obj):
        ub = fixed_obj
        for v in range(n):
            if val[v] < 0 and arrays.obj[v] > 0:
                ub += arrays.obj[v]
        return ub

    def dfs(v, fixed_obj):
        if best["stop"]:
            return
        while v < n and val[v] >= 0:
            v += 1
        if v == n:
            if not best["found"] or fixed_obj > best["val"]:
                best["found"] = True
                best["val"] = fixed_obj
                best["assign"] = val.copy()
            return
        for value in (1, 0):
            best["nodes"] += 1
            if max_nodes is not None and best["nodes"] >= max_nodes:
                best["stop"] = True
            if deadline is not None and best["nodes"] % 256 == 0 and time.time() > deadline:
                best["stop"] = True
            if best["stop"]:
                return
            ok = set_var(v, value)
            gain = arrays.obj[v] if value == 1 else 0
            if ok and (not best["found"] or bound(fixed_obj + gain) > best["val"]):
                dfs(v + 1, fixed_obj + gain)
            unset_var(v)
            if best["stop"]:
                return
    dfs(0, 0)
    exhausted = not best["stop"]
    assign = np.asarray(best["assign"], np.int8) if best["found"] else np.zeros(n, np.int8)
    best_val = best["val"] if best["found"] else -_INF
    return exhausted, best["found"], best_val, assign, best["nodes"]


def solve(model: BinaryProgram, limits: SolveLimits | None = None,
          engine: str = "auto", verify: bool = True) -> Solution:
    """Solve to proven optimality (or report infeasible / budget_exceeded).

    ``engine`` is ``auto`` (compiled kernel, falling back to the Python
    engine when scaled coefficients are too large), ``jit`` or ``python``.
    With ``verify`` the returned assignment is re-checked by the exact
    rational evaluator in :mod:`mtdsched.milp`.
    """
    limits = limits or SolveLimits()
    if engine not in ("auto", "jit", "python"):
        raise ValueError(f"unknown engine {engine!r}")
    if not model.vars:
        ok = all(c.satisfied_by({}) for c in model.constraints)
        if not ok:
            return Solution(None, None, STATUS_INFEASIBLE)
        return Solution({}, Fraction(0), STATUS_OPTIMAL)

    arrays = _Arrays(model)
    if engine == "jit" and not arrays.safe:
        raise ModelError("scaled coefficients exceed the compiled kernel's range")
    use_jit = engine == "jit" or (engine == "auto" and arrays.safe)
    runner = _solve_jit if use_jit else _solve_python
    exhausted, found, best_val, assign, nodes = runner(arrays, limits)

    if exhausted and not found:
        return Solution(None, None, STATUS_INFEASIBLE, nodes=int(nodes))
    status = STATUS_OPTIMAL if exhausted else STATUS_BUDGET_EXCEEDED
    if not found:
        return Solution(None, None, status, nodes=int(nodes))

    assignment = {v: int(assign[v.index]) for v in model.vars}
    sign = 1 if arrays.maximize else -1
    value = Fraction(sign * int(best_val), arrays.obj_scale)
    if verify:
        if not model.check_feasible(assignment):
            raise RuntimeError("solver returned an infeasible assignment (internal bug)")
        if model.objective_value(assignment) != value:
            raise RuntimeError("solver objective bookkeeping mismatch (internal bug)")
    return Solution(assignment, value, status, nodes=int(nodes))
