"""
Primal network simplex for the uncapacitated transshipment problems behind d_bL.

Nodes are the atoms plus one ground node. Every atom a has supply c_a and is
joined to ground by the arcs a -> ground and ground -> a of cost 1; pair arcs
(a, b) cost |x_a - x_b|. A basis is a spanning tree rooted at ground. The tree is
kept strongly feasible (every zero-flow tree arc points towards the root) by the
last-blocking-arc leaving rule, which rules out cycling. Node potentials with the
ground at 0 are the LP row duals, i.e. the Lipschitz witness.

The solver keeps its tree between calls, so arcs added by constraint generation
are priced from the previous optimum.
"""
import logging
from collections import deque
from dataclasses import dataclass
from typing import Iterable, List, Tuple

import numpy as np

from supportlab.errors import SolverStall

logger = logging.getLogger(__name__)

PRICING_TOLERANCE = 1e-12


@dataclass(frozen=True)
class NetworkSolution:
    flow: np.ndarray
    potentials: np.ndarray
    objective: float
    dual_objective: float
    iterations: int

    @property
    def duality_gap(self) -> float:
        return abs(self.objective - self.dual_objective)


class TransshipmentNetwork:
    """Atoms 0 … m-1, ground node m, ground arcs first and pair arcs appended."""

    def __init__(self, supplies: np.ndarray):
        supplies = np.asarray(supplies, dtype=float).reshape(-1)
        m = supplies.shape[0]
        self.m = m
        self.root = m
        self.supplies = supplies
        self._tail: List[int] = []
        self._head: List[int] = []
        self._cost: List[float] = []
        self.parent = [-1] * (m + 1)
        self.pred = [-1] * (m + 1)
        self.depth = [0] * (m + 1)
        self.children: List[set] = [set() for _ in range(m + 1)]
        self.pi = np.zeros(m + 1)
        self.iterations = 0

        self._append([(a, self.root) for a in range(m)], np.ones(m))
        self._append([(self.root, a) for a in range(m)], np.ones(m))
        flow = []
        for a in range(m):
            if supplies[a] >= 0:
                arc, value, potential = a, supplies[a], 1.0
            else:
                arc, value, potential = m + a, -supplies[a], -1.0
            self.parent[a], self.pred[a], self.depth[a] = self.root, arc, 1
            self.children[self.root].add(a)
            self.pi[a] = potential
            flow.append((arc, value))
        self.flow = np.zeros(len(self._cost))
        for arc, value in flow:
            self.flow[arc] = value
        self._refresh()

    @property
    def arcs(self) -> int:
        return len(self._cost)

    def _append(self, pairs: Iterable[Tuple[int, int]], costs) -> None:
        for (a, b), cost in zip(pairs, costs):
            self._tail.append(int(a))
            self._head.append(int(b))
            self._cost.append(float(cost))

    def _refresh(self) -> None:
        self.tail = np.array(self._tail, dtype=np.int64)
        self.head = np.array(self._head, dtype=np.int64)
        self.cost = np.array(self._cost)

    def add_arcs(self, pairs, costs) -> None:
        """Append non-basic pair arcs; the current tree stays a feasible basis."""
        pairs = list(pairs)
        if not pairs:
            return
        self._append(pairs, costs)
        self._refresh()
        self.flow = np.concatenate([self.flow, np.zeros(len(pairs))])

    # -- pivoting ------------------------------------------------------------

    def _cycle(self, k: int, l: int):
        """Tree paths from k and from l up to their apex (apex excluded)."""
        path_k, path_l = [], []
        a, b = k, l
        while a != b:
            if self.depth[a] > self.depth[b]:
                path_k.append(a)
                a = self.parent[a]
            elif self.depth[b] > self.depth[a]:
                path_l.append(b)
                b = self.parent[b]
            else:
                path_k.append(a)
                a = self.parent[a]
                path_l.append(b)
                b = self.parent[b]
        return path_k, path_l

    def _pivot(self, entering: int, reduced_cost: float) -> None:
        k, l = self._tail[entering], self._head[entering]
        path_k, path_l = self._cycle(k, l)
        # Backward arcs lose flow: on k's side the cycle runs down the tree, on l's side up it.
        backward_k = [self._tail[self.pred[v]] == v for v in path_k]
        backward_l = [self._head[self.pred[v]] == v for v in path_l]
        delta = np.inf
        for v, back in zip(path_k, backward_k):
            if back:
                delta = min(delta, self.flow[self.pred[v]])
        for v, back in zip(path_l, backward_l):
            if back:
                delta = min(delta, self.flow[self.pred[v]])
        if not np.isfinite(delta):
            raise SolverStall("negative cycle of unbounded capacity in the transshipment network")

        # Last blocking arc met when walking the cycle from the apex along the entering arc.
        leave, side = -1, ""
        for v, back in zip(reversed(path_k), reversed(backward_k)):
            if back and self.flow[self.pred[v]] == delta:
                leave, side = v, "k"
        for v, back in zip(path_l, backward_l):
            if back and self.flow[self.pred[v]] == delta:
                leave, side = v, "l"

        if delta > 0:
            for v, back in zip(path_k, backward_k):
                self.flow[self.pred[v]] += -delta if back else delta
            for v, back in zip(path_l, backward_l):
                self.flow[self.pred[v]] += -delta if back else delta
        self.flow[entering] = delta

        if side == "k":
            start, attach, shift = k, l, reduced_cost
        else:
            start, attach, shift = l, k, -reduced_cost
        self._reroot(start, leave, attach, entering)
        self._shift_subtree(start, shift)

    def _reroot(self, start: int, leave: int, attach: int, entering: int) -> None:
        """Detach the subtree above ``leave`` and hang it from ``attach`` through ``start``."""
        path = [start]
        while path[-1] != leave:
            path.append(self.parent[path[-1]])
        arcs = [self.pred[v] for v in path]
        self.children[self.parent[leave]].discard(leave)
        for s in range(len(path) - 1):
            child, parent = path[s], path[s + 1]
            self.children[parent].discard(child)
            self.children[child].add(parent)
            self.parent[parent] = child
            self.pred[parent] = arcs[s]
        self.parent[start] = attach
        self.pred[start] = entering
        self.children[attach].add(start)

    def _shift_subtree(self, start: int, shift: float) -> None:
        nodes = [start]
        self.depth[start] = self.depth[self.parent[start]] + 1
        queue = deque([start])
        while queue:
            v = queue.popleft()
            for w in self.children[v]:
                self.depth[w] = self.depth[v] + 1
                nodes.append(w)
                queue.append(w)
        self.pi[nodes] += shift

    # -- exact recomputation -------------------------------------------------

    def _tree_order(self) -> List[int]:
        order = [self.root]
        queue = deque([self.root])
        while queue:
            v = queue.popleft()
            for w in sorted(self.children[v]):
                order.append(w)
                queue.append(w)
        return order

    def _recompute(self) -> None:
        """Potentials and tree flows from the tree alone, clearing pivot round-off."""
        order = self._tree_order()
        pi = np.zeros(self.m + 1)
        for v in order[1:]:
            arc = self.pred[v]
            if self._tail[arc] == v:
                pi[v] = pi[self.parent[v]] + self._cost[arc]
            else:
                pi[v] = pi[self.parent[v]] - self._cost[arc]
        self.pi = pi
        flow = np.zeros(self.arcs)
        subtree = np.append(self.supplies, 0.0)
        for v in reversed(order[1:]):
            arc = self.pred[v]
            flow[arc] = max(subtree[v] if self._tail[arc] == v else -subtree[v], 0.0)
            subtree[self.parent[v]] += subtree[v]
        self.flow = flow

    def solve(self, max_iterations: int = 200_000) -> NetworkSolution:
        """Pivot on the most negative reduced cost until none is left."""
        start = self.iterations
        while True:
            if self.m == 0:
                break
            reduced = self.cost - self.pi[self.tail] + self.pi[self.head]
            entering = int(np.argmin(reduced))
            if reduced[entering] >= -PRICING_TOLERANCE * max(1.0, float(self.cost[entering])):
                break
            if self.iterations - start >= max_iterations:
                logger.error("Network simplex hit its pivot limit", extra={"iterations": max_iterations,
                                                                           "nodes": self.m, "arcs": self.arcs,
                                                                           "error_type": "SolverStall"})
                raise SolverStall(f"network simplex did not finish in {max_iterations} pivots")
            self._pivot(entering, float(reduced[entering]))
            self.iterations += 1
        self._recompute()
        objective = float(np.dot(self.cost, self.flow))
        dual = float(np.dot(self.supplies, self.pi[:self.m]))
        logger.debug("Network simplex solved", extra={"nodes": self.m, "arcs": self.arcs,
                                                      "pivots": self.iterations - start, "objective": objective})
        return NetworkSolution(flow=self.flow.copy(), potentials=self.pi[:self.m].copy(), objective=objective,
                               dual_objective=dual, iterations=self.iterations - start)
