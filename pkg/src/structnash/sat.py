"""Graphical game gadget encoding satisfiability.

Clause agents sit on a line; each clause owns one literal agent per literal
and the literal agents of a variable form a second line.  Action 1 is
*true* and action 0 is *false* for every agent.  A non-trivial equilibrium
has every clause playing true and its literals spell out a satisfying
assignment; the trivial equilibrium has every clause false and every literal
consistent with all variables false.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .graphical import GraphicalGame

FALSE, TRUE = 0, 1


@dataclass(frozen=True)
class SatInstance:
    """CNF formula over variables ``1..n_vars``; literal ``-v`` negates ``v``.

    Parameters
    ----------
    n_vars : int
    clauses : tuple of tuple of int
        Each clause holds one to three literals over distinct variables.
    """

    n_vars: int
    clauses: Tuple[Tuple[int, ...], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "clauses", tuple(tuple(int(x) for x in c) for c in self.clauses))
        if not self.clauses:
            raise ValueError("instance needs at least one clause")
        for c in self.clauses:
            if not 1 <= len(c) <= 3:
                raise ValueError(f"clause {c} must hold one to three literals")
            vs = [abs(x) for x in c]
            if 0 in vs or max(vs) > self.n_vars:
                raise ValueError(f"clause {c} has an out-of-range literal")
            if len(set(vs)) != len(vs):
                raise ValueError(f"clause {c} repeats a variable")

    def occurrences(self) -> Dict[int, int]:
        out = {v: 0 for v in range(1, self.n_vars + 1)}
        for c in self.clauses:
            for x in c:
                out[abs(x)] += 1
        return out

    def satisfied_by(self, assignment: Sequence[bool]) -> bool:
        """``assignment[v - 1]`` is the value of variable ``v``."""
        return all(any(assignment[abs(x) - 1] == (x > 0) for x in c) for c in self.clauses)

    def brute_force(self) -> Optional[Tuple[bool, ...]]:
        """First satisfying assignment in lexicographic order, or None."""
        for bits in itertools.product((False, True), repeat=self.n_vars):
            if self.satisfied_by(bits):
                return bits
        return None


@dataclass
class SatGame:
    """Reduced game plus the map from gadget agents back to the formula."""

    game: GraphicalGame
    clause_agents: List[int]
    literal_agents: Dict[Tuple[int, int], int]
    literal_of: Dict[int, int]

    @property
    def n_agents(self) -> int:
        return self.game.n_agents


def _false_action(lit: int) -> int:
    """Action of a literal agent consistent with its variable being false."""
    return FALSE if lit > 0 else TRUE


def _action_for(lit: int, value: bool) -> int:
    return TRUE if (lit > 0) == value else FALSE


def _implied_value(lit: int, action: int) -> bool:
    return (action == TRUE) == (lit > 0)


def sat_reduce(inst: SatInstance) -> SatGame:
    """Graphical game whose non-trivial equilibria encode satisfying assignments.

    Raises
    ------
    ValueError
        If some variable occurs in fewer than two clauses.
    """
    short = [v for v, k in inst.occurrences().items() if k < 2]
    if short:
        raise ValueError(f"variables {short} occur in fewer than two clauses")
    m = len(inst.clauses)
    clause_agents = list(range(m))
    literal_agents: Dict[Tuple[int, int], int] = {}
    literal_of: Dict[int, int] = {}
    nxt = m
    for i, c in enumerate(inst.clauses):
        for lit in c:
            literal_agents[(i, lit)] = nxt
            literal_of[nxt] = lit
            nxt += 1
    n = nxt
    nb: List[List[int]] = [[] for _ in range(n)]
    for i in range(m):
        if i > 0:
            nb[i].append(i - 1)
        if i < m - 1:
            nb[i].append(i + 1)
    clause_of = {}
    for (i, lit), a in literal_agents.items():
        nb[i].append(a)
        nb[a].append(i)
        clause_of[a] = i
    for v in range(1, inst.n_vars + 1):
        line = [a for (i, lit), a in sorted(literal_agents.items(), key=lambda kv: kv[1]) if abs(lit) == v]
        for a, b in zip(line, line[1:]):
            nb[a].append(b)
            nb[b].append(a)
    tables = []
    for a in range(n):
        shape = (2,) * (1 + len(nb[a]))
        tab = np.zeros(shape)
        for prof in itertools.product((FALSE, TRUE), repeat=len(nb[a])):
            seen = dict(zip(nb[a], prof))
            for own in (FALSE, TRUE):
                if a < m:
                    tab[(own,) + prof] = _clause_payoff(own, seen, m, literal_of)
                else:
                    tab[(own,) + prof] = _literal_payoff(own, seen, literal_of[a], clause_of[a], literal_of)
        tables.append(tab)
    game = GraphicalGame.undirected([2] * n, nb, tables)
    return SatGame(game, clause_agents, literal_agents, literal_of)


def _clause_payoff(own: int, seen: Dict[int, int], m: int, literal_of) -> float:
    if any(seen[j] == FALSE for j in seen if j < m):
        return 1.0 if own == FALSE else 0.0
    if any(seen[j] == TRUE for j in seen if j >= m):
        return 2.0
    return 1.0 if own == FALSE else 0.0


def _literal_payoff(own: int, seen: Dict[int, int], lit: int, clause: int, literal_of) -> float:
    if seen[clause] == FALSE:
        return 1.0 if own == _false_action(lit) else 0.0
    values = {_implied_value(literal_of[j], x) for j, x in seen.items() if j != clause}
    if len(values) == 1:
        return 2.0 if own == _action_for(lit, values.pop()) else 0.0
    return 2.0 if own == _false_action(lit) else 0.0


def trivial_profile(sg: SatGame) -> np.ndarray:
    """All clauses false, every literal consistent with all variables false."""
    acts = [FALSE] * sg.n_agents
    for a, lit in sg.literal_of.items():
        acts[a] = _false_action(lit)
    return _pure(sg, acts)


def assignment_profile(sg: SatGame, assignment: Sequence[bool]) -> np.ndarray:
    """All clauses true, every literal consistent with ``assignment``."""
    acts = [TRUE] * sg.n_agents
    for a, lit in sg.literal_of.items():
        acts[a] = _action_for(lit, bool(assignment[abs(lit) - 1]))
    return _pure(sg, acts)


def _pure(sg: SatGame, actions) -> np.ndarray:
    return np.asarray(np.eye(2)[np.asarray(actions)].ravel(), dtype=float)


@dataclass
class SatVerdict:
    equilibrium: bool
    trivial: bool
    assignment: Optional[Tuple[bool, ...]]
    satisfying: bool


def sat_verify(inst: SatInstance, sg: SatGame, profile, tol: float = 1e-9) -> SatVerdict:
    """Check an equilibrium of the gadget and read off its assignment.

    Pure literals fix their variable; a variable whose literals all mix is
    set false.

    Raises
    ------
    ValueError
        If ``profile`` is not an equilibrium within ``tol``.
    """
    sigma = sg.game.indexing.check(np.asarray(profile, dtype=float))
    reg = float(sg.game.regret(sigma).max())
    if reg > tol:
        raise ValueError(f"profile is not an equilibrium (regret {reg:.3g})")
    p_true = sigma.reshape(-1, 2)[:, TRUE]
    if np.all(p_true[sg.clause_agents] <= tol):
        return SatVerdict(True, True, None, False)
    values: List[Optional[bool]] = [None] * inst.n_vars
    for a, lit in sg.literal_of.items():
        p = p_true[a]
        if p >= 1 - tol or p <= tol:
            v = _implied_value(lit, TRUE if p >= 1 - tol else FALSE)
            if values[abs(lit) - 1] is None:
                values[abs(lit) - 1] = v
    assignment = tuple(bool(v) if v is not None else False for v in values)
    return SatVerdict(True, False, assignment, inst.satisfied_by(assignment))


def pure_equilibria(sg: SatGame, chunk: int = 1 << 16) -> List[Tuple[int, ...]]:
    """Every pure equilibrium, by exhaustive vectorised search."""
    game = sg.game
    n = game.n_agents
    if n > 26:
        raise ValueError("too many agents for exhaustive search")
    out = []
    total = 1 << n
    bits = np.arange(n, dtype=np.int64)
    for start in range(0, total, chunk):
        codes = np.arange(start, min(total, start + chunk), dtype=np.int64)
        acts = (codes[:, None] >> bits[None, :]) & 1
        ok = np.ones(codes.size, bool)
        for a in range(n):
            tab = game.tables[a]
            idx = tuple(acts[:, p] for p in game.parents[a])
            mine = tab[(acts[:, a],) + idx]
            other = tab[(1 - acts[:, a],) + idx]
            ok &= mine >= other
        for c in codes[ok]:
            out.append(tuple(int(x) for x in (c >> bits) & 1))
    return out


def random_instance(rng: np.random.Generator, n_vars: int = 4, n_clauses: int = 5, max_tries: int = 10_000) -> SatInstance:
    """Random formula with clause lengths one to three and every variable used twice or more."""
    for _ in range(max_tries):
        clauses = []
        for _ in range(n_clauses):
            k = int(rng.integers(1, 4))
            vs = rng.choice(np.arange(1, n_vars + 1), size=min(k, n_vars), replace=False)
            signs = rng.choice([-1, 1], size=vs.size)
            clauses.append(tuple(int(s * v) for s, v in zip(signs, vs)))
        inst = SatInstance(n_vars, tuple(clauses))
        if min(inst.occurrences().values()) >= 2:
            return inst
    raise RuntimeError("could not draw an instance with every variable used twice")


def example_instance() -> SatInstance:
    """``(~a | b | c) & (a | ~b | c) & (~a | ~b | ~c)``."""
    return SatInstance(3, ((-1, 2, 3), (1, -2, 3), (-1, -2, -3)))
