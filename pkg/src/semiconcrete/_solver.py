"""Small DPLL solver used for configuration-space queries.

Variables are numbered ``1..n``; a literal is ``+v`` or ``-v``. Feature
models compile into a few hundred short clauses at most, so plain unit
propagation over occurrence lists with chronological backtracking is fast
enough and keeps the search order fully deterministic.
"""

from __future__ import annotations

from typing import Iterable, Optional, Sequence


class Solver:
    def __init__(self, n_vars: int, clauses: Iterable[Sequence[int]]):
        self.n_vars = n_vars
        self.clauses = [tuple(c) for c in clauses]
        # occ[lit] -> indices of clauses containing lit; index by lit + n_vars
        self._occ: list[list[int]] = [[] for _ in range(2 * n_vars + 1)]
        self._units: list[int] = []
        self._empty = False
        for ci, clause in enumerate(self.clauses):
            if not clause:
                self._empty = True
            elif len(clause) == 1:
                self._units.append(clause[0])
            for lit in clause:
                self._occ[lit + n_vars].append(ci)

    def _assign(self, assign, trail, lit) -> bool:
        v = abs(lit)
        s = 1 if lit > 0 else -1
        cur = assign[v]
        if cur == 0:
            assign[v] = s
            trail.append(lit)
            return True
        return cur == s

    def _propagate(self, assign, trail, head: int) -> bool:
        n = self.n_vars
        clauses = self.clauses
        occ = self._occ
        while head < len(trail):
            lit = trail[head]
            head += 1
            for ci in occ[n - lit]:
                unit = 0
                free = 0
                for l in clauses[ci]:
                    val = assign[l if l > 0 else -l]
                    if val == 0:
                        free += 1
                        if free > 1:
                            break
                        unit = l
                    elif (val > 0) == (l > 0):
                        free = -1
                        break
                if free == 0:
                    return False
                if free == 1:
                    assign[abs(unit)] = 1 if unit > 0 else -1
                    trail.append(unit)
        return True

    def closure(self, assumptions: Iterable[int]) -> Optional[list[int]]:
        """Unit-propagate *assumptions*; ``None`` on conflict.

        Returns the value vector (index 0 unused): 1 true, -1 false, 0 free.
        """
        if self._empty:
            return None
        assign = [0] * (self.n_vars + 1)
        trail: list[int] = []
        for lit in list(self._units) + list(assumptions):
            if not self._assign(assign, trail, lit):
                return None
        if not self._propagate(assign, trail, 0):
            return None
        return assign

    def solve(
        self, assumptions: Iterable[int] = (), phase: Optional[Sequence[bool]] = None
    ) -> Optional[list[bool]]:
        """Return a satisfying assignment (``model[v-1]`` for var ``v``) or ``None``.

        Decisions pick the lowest free variable and try ``phase[v-1]`` first
        (default ``False``).
        """
        assign = self.closure(assumptions)
        if assign is None:
            return None
        trail = [v if assign[v] > 0 else -v for v in range(1, self.n_vars + 1) if assign[v]]
        # stack of (trail length before decision, decision literal, flipped?)
        stack: list[tuple[int, int, bool]] = []
        nxt = 1
        while True:
            while nxt <= self.n_vars and assign[nxt] != 0:
                nxt += 1
            if nxt > self.n_vars:
                return [assign[v] > 0 for v in range(1, self.n_vars + 1)]
            first = bool(phase[nxt - 1]) if phase is not None else False
            lit = nxt if first else -nxt
            mark = len(trail)
            stack.append((mark, lit, False))
            assign[nxt] = 1 if lit > 0 else -1
            trail.append(lit)
            ok = self._propagate(assign, trail, mark)
            while not ok:
                # backtrack to the most recent unflipped decision
                while stack and stack[-1][2]:
                    mark, _, _ = stack.pop()
                    for l in trail[mark:]:
                        assign[abs(l)] = 0
                    del trail[mark:]
                if not stack:
                    return None
                mark, lit, _ = stack.pop()
                for l in trail[mark:]:
                    assign[abs(l)] = 0
                del trail[mark:]
                lit = -lit
                stack.append((mark, lit, True))
                assign[abs(lit)] = 1 if lit > 0 else -1
                trail.append(lit)
                ok = self._propagate(assign, trail, mark)
            nxt = 1
