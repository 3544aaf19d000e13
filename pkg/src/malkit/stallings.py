"""Stallings subgroup graphs of free groups.

A finitely generated subgroup of F(X) is represented by its folded core
graph: a basepointed graph with edges labeled by generators, no vertex
having two outgoing edges with the same signed label.  Folding is done by
union-find over vertices.  Fibre products of folded graphs decide
malnormality and conjugate-intersection questions.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .words import Alphabet, Word, free_reduce_letters

try:  # vectorised component analysis for large fibre products
    import numpy as _np
    from scipy.sparse import coo_matrix as _coo
    from scipy.sparse.csgraph import connected_components as _ccomp
except ImportError:  # pragma: no cover - scipy is a hard dependency in practice
    _np = None


class StallingsError(ValueError):
    pass


def _signed_letters(n: int):
    for i in range(1, n + 1):
        yield i
        yield -i


class SubgroupGraph:
    """Folded, core, basepointed subgroup graph.

    Vertices are 0..n-1 in canonical (BFS from basepoint, label-ordered)
    numbering; the basepoint is vertex 0.  ``out[v]`` maps signed letters
    to target vertices.
    """

    __slots__ = ("alphabet", "out", "_table", "_tree_parent", "_canon")

    def __init__(self, alpha: Alphabet, out: list[dict[int, int]]):
        self.alphabet = alpha
        self.out = out
        self._table = None
        self._tree_parent = None
        self._canon = None

    # -- size & invariants ---------------------------------------------------
    @property
    def num_vertices(self) -> int:
        return len(self.out)

    @property
    def num_edges(self) -> int:
        return sum(len(d) for d in self.out) // 2

    def rank(self) -> int:
        return self.num_edges - self.num_vertices + 1

    # -- reading -------------------------------------------------------------
    def table(self) -> list[list[int]]:
        """Dense transition table: table[v][code] = target or -1, where
        code = 2*(gen) for a positive letter and 2*gen+1 for its inverse."""
        if self._table is None:
            n = len(self.alphabet)
            tbl = [[-1] * (2 * n) for _ in range(self.num_vertices)]
            for v, d in enumerate(self.out):
                for s, w in d.items():
                    code = 2 * (abs(s) - 1) + (0 if s > 0 else 1)
                    tbl[v][code] = w
            self._table = tbl
        return self._table

    def read(self, letters: Sequence[int], start: int = 0) -> int:
        """Trace a signed-letter sequence; return final vertex or -1."""
        tbl = self.table()
        v = start
        for x in letters:
            v = tbl[v][2 * (x - 1) if x > 0 else -2 * x - 1]
            if v < 0:
                return -1
        return v

    def contains(self, w: Word) -> bool:
        return self.read(w.letters) == 0

    # -- spanning tree -------------------------------------------------------
    def tree_parent(self):
        """BFS tree from the basepoint: list of (parent, signed letter into v)."""
        if self._tree_parent is None:
            n = len(self.alphabet)
            parent: list[Optional[tuple[int, int]]] = [None] * self.num_vertices
            seen = [False] * self.num_vertices
            seen[0] = True
            q = deque([0])
            while q:
                v = q.popleft()
                for s in _signed_letters(n):
                    w = self.out[v].get(s)
                    if w is not None and not seen[w]:
                        seen[w] = True
                        parent[w] = (v, s)
                        q.append(w)
            self._tree_parent = parent
        return self._tree_parent

    def path_from_basepoint(self, v: int) -> tuple[int, ...]:
        """Letters of the BFS tree path basepoint -> v."""
        parent = self.tree_parent()
        rev = []
        while v != 0:
            p, s = parent[v]
            rev.append(s)
            v = p
        return tuple(reversed(rev))

    def path_word(self, v: int) -> Word:
        return Word(self.alphabet, self.path_from_basepoint(v), reduced=True)

    # -- canonical form -------------------------------------------------------
    def canonical_form(self):
        if self._canon is None:
            edges = []
            for v, d in enumerate(self.out):
                for s, w in d.items():
                    if s > 0:
                        edges.append((v, s, w))
            self._canon = (self.alphabet.names, self.num_vertices, tuple(sorted(edges)))
        return self._canon

    def __repr__(self):
        return f"SubgroupGraph(V={self.num_vertices}, E={self.num_edges}, rank={self.rank()})"


# -- folding -----------------------------------------------------------------

class _Folder:
    """Union-find folding of a labeled graph under construction."""

    def __init__(self):
        self.parent: list[int] = []
        self.adj: list[Optional[dict[int, int]]] = []

    def new_vertex(self) -> int:
        v = len(self.parent)
        self.parent.append(v)
        self.adj.append({})
        return v

    def find(self, x: int) -> int:
        p = self.parent
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def _merge(self, a: int, b: int):
        queue = [(a, b)]
        while queue:
            a, b = queue.pop()
            a, b = self.find(a), self.find(b)
            if a == b:
                continue
            if len(self.adj[a]) < len(self.adj[b]):
                a, b = b, a
            self.parent[b] = a
            db = self.adj[b]
            self.adj[b] = None
            da = self.adj[a]
            for s, t in db.items():
                if s in da:
                    queue.append((da[s], t))
                else:
                    da[s] = t

    def add_edge(self, u: int, s: int, v: int):
        """Insert edge u --s--> v, folding as necessary."""
        u, v = self.find(u), self.find(v)
        du = self.adj[u]
        t = du.get(s)
        if t is not None:
            if self.find(t) != v:
                self._merge(t, v)
            return
        r = self.adj[v].get(-s)
        if r is not None:
            if self.find(r) != u:
                self._merge(r, u)
            return
        du[s] = v
        self.adj[v][-s] = u


def build_and_fold(alpha: Alphabet, gens: Sequence[Word]) -> SubgroupGraph:
    """Folded core graph of the subgroup generated by ``gens``.

    Builds the bouquet of generator loops at a common basepoint and folds
    with union-find; then trims non-basepoint vertices of degree <= 1 and
    renumbers canonically.
    """
    for g in gens:
        if g.alphabet != alpha:
            raise StallingsError("generator over a different alphabet")
    f = _Folder()
    bp = f.new_vertex()
    for g in gens:
        lets = g.letters
        prev = bp
        for i, s in enumerate(lets):
            nxt = bp if i == len(lets) - 1 else f.new_vertex()
            f.add_edge(f.find(prev), s, f.find(nxt))
            prev = nxt
    # collect representative adjacency, with resolved targets
    reps = [v for v in range(len(f.parent)) if f.find(v) == v]
    out = {v: {s: f.find(t) for s, t in f.adj[v].items()} for v in reps}
    bp = f.find(bp)
    # core-trim: drop degree<=1 vertices other than the basepoint
    degree = {v: len(d) for v, d in out.items()}
    stack = [v for v in reps if v != bp and degree[v] <= 1]
    dead = set()
    while stack:
        v = stack.pop()
        if v in dead:
            continue
        dead.add(v)
        for s, w in out[v].items():
            if w in dead:
                continue
            del out[w][-s]
            degree[w] -= 1
            if w != bp and degree[w] <= 1:
                stack.append(w)
        out[v] = {}
    return _canonicalize(alpha, out, bp)


def _canonicalize(alpha: Alphabet, out: dict[int, dict[int, int]], bp: int) -> SubgroupGraph:
    """BFS renumbering from the basepoint with fixed signed-label order."""
    n = len(alpha)
    number = {bp: 0}
    order = [bp]
    q = deque([bp])
    while q:
        v = q.popleft()
        for s in _signed_letters(n):
            w = out[v].get(s)
            if w is not None and w not in number:
                number[w] = len(order)
                order.append(w)
                q.append(w)
    if len(number) != sum(1 for v, d in out.items() if d or v == bp):
        raise StallingsError("subgroup graph is not connected")
    new_out: list[dict[int, int]] = [dict() for _ in order]
    for v in order:
        nv = number[v]
        for s, w in out[v].items():
            new_out[nv][s] = number[w]
    return SubgroupGraph(alpha, new_out)


def contains(g: SubgroupGraph, w: Word) -> bool:
    """Membership of ``w`` in the subgroup: does w read as a basepoint loop?"""
    if w.alphabet != g.alphabet:
        raise StallingsError("alphabet mismatch")
    return g.contains(w)


def rank(g: SubgroupGraph) -> int:
    return g.rank()


def basis(g: SubgroupGraph) -> list[Word]:
    """A free basis of the subgroup: one word per non-tree edge."""
    words = []
    for u, s, v in _nontree_edges(g):
        letters = g.path_from_basepoint(u) + (s,) + tuple(-x for x in reversed(g.path_from_basepoint(v)))
        words.append(Word(g.alphabet, free_reduce_letters(letters), reduced=True))
    return words


def _nontree_edges(g: SubgroupGraph) -> list[tuple[int, int, int]]:
    """Non-tree edges (u, s, v), s > 0 canonical orientation, sorted."""
    parent = g.tree_parent()
    tree = set()
    for v in range(g.num_vertices):
        if parent[v] is not None:
            p, s = parent[v]
            tree.add((p, s, v))
            tree.add((v, -s, p))
    edges = []
    for v, d in enumerate(g.out):
        for s, w in d.items():
            if s > 0 and (v, s, w) not in tree:
                edges.append((v, s, w))
    return sorted(edges)


def same_subgroup(g1: SubgroupGraph, g2: SubgroupGraph) -> bool:
    """Equality of subgroups: basepointed labeled-graph isomorphism, via
    canonical BFS numbering."""
    return g1.canonical_form() == g2.canonical_form()


# -- rewriting over a free basis ----------------------------------------------

class BasisRewriter:
    """Rewrites subgroup elements as words over a fixed free basis.

    The generators are folded; elements are first expressed over the
    spanning-tree basis of the folded graph (crossing word), then carried
    to the given basis through a tracked Nielsen reduction.  Every result
    is verified by substitution before being returned.
    """

    def __init__(self, alpha: Alphabet, gens: Sequence[Word]):
        self.alphabet = alpha
        self.gens = list(gens)
        self.graph = build_and_fold(alpha, gens)
        if self.graph.rank() != len(gens):
            raise StallingsError("not a free basis")
        self._edges = _nontree_edges(self.graph)
        self._edge_code = {}
        for idx, (u, s, v) in enumerate(self._edges):
            self._edge_code[(u, s)] = idx + 1
            self._edge_code[(v, -s)] = -(idx + 1)
        self._tree = None
        self._basis_over_gens = self._invert_basis()

    def _crossing(self, w: Word) -> Optional[tuple[int, ...]]:
        """Express a subgroup element over the tree basis (non-tree edges
        crossed, in order); None if the word is not in the subgroup."""
        if self._tree is None:
            parent = self.graph.tree_parent()
            tree = set()
            for v in range(self.graph.num_vertices):
                if parent[v] is not None:
                    p, s = parent[v]
                    tree.add((p, s))
                    tree.add((v, -s))
            self._tree = tree
        v = 0
        outsyms = []
        for x in w.letters:
            nxt = self.graph.out[v].get(x)
            if nxt is None:
                return None
            if (v, x) not in self._tree:
                outsyms.append(self._edge_code[(v, x)])
            v = nxt
        if v != 0:
            return None
        return free_reduce_letters(outsyms)

    def _invert_basis(self) -> list[tuple[int, ...]]:
        """Expression of each tree-basis symbol over the generator symbols,
        via Nielsen reduction with transformation tracking."""
        n = len(self.gens)
        rows = []
        for i, g in enumerate(self.gens):
            cw = self._crossing(g)
            assert cw is not None
            rows.append([cw, (i + 1,)])

        def redlen(t):
            return len(t)

        changed = True
        while changed:
            changed = False
            for j in range(n):
                uj, ej = rows[j]
                best = None
                for i in range(n):
                    if i == j:
                        continue
                    ui, ei = rows[i]
                    for e1 in (1, -1):
                        a = ui if e1 == 1 else tuple(-x for x in reversed(ui))
                        fa = ei if e1 == 1 else tuple(-x for x in reversed(ei))
                        lcand = free_reduce_letters(a + uj)
                        if redlen(lcand) < redlen(uj):
                            cand = (lcand, free_reduce_letters(fa + ej))
                            if best is None or redlen(cand[0]) < redlen(best[0]):
                                best = cand
                        rcand = free_reduce_letters(uj + a)
                        if redlen(rcand) < redlen(uj):
                            cand = (rcand, free_reduce_letters(ej + fa))
                            if best is None or redlen(cand[0]) < redlen(best[0]):
                                best = cand
                if best is not None:
                    rows[j] = [best[0], best[1]]
                    changed = True
        # a basis must have reduced to distinct single symbols
        expr = [None] * len(self._edges)
        seen = set()
        for u, e in rows:
            if len(u) != 1 or abs(u[0]) in seen:
                raise StallingsError(
                    "Nielsen reduction did not terminate at a letter tuple; "
                    "generators do not form a recognised free basis"
                )
            seen.add(abs(u[0]))
            sym = u[0]
            if sym > 0:
                expr[sym - 1] = e
            else:
                expr[-sym - 1] = tuple(-x for x in reversed(e))
        return expr  # type: ignore[return-value]

    def rewrite(self, w: Word) -> Optional[list[tuple[int, int]]]:
        """``w`` as a reduced word over the generators: list of
        (generator index, sign); None if w is not in the subgroup."""
        cw = self._crossing(w)
        if cw is None:
            return None
        out: list[int] = []
        for sym in cw:
            seg = self._basis_over_gens[abs(sym) - 1]
            if sym < 0:
                seg = tuple(-x for x in reversed(seg))
            for t in seg:
                if out and out[-1] == -t:
                    out.pop()
                else:
                    out.append(t)
        # verify by substitution
        acc: list[int] = []
        for t in out:
            img = self.gens[abs(t) - 1].letters
            if t < 0:
                img = tuple(-x for x in reversed(img))
            for u in img:
                if acc and acc[-1] == -u:
                    acc.pop()
                else:
                    acc.append(u)
        if tuple(acc) != w.letters:
            raise StallingsError("internal rewriting verification failed")
        return [(abs(t) - 1, 1 if t > 0 else -1) for t in out]

    def rewrite_word(self, w: Word, target: Alphabet) -> Optional[Word]:
        """Rewrite and re-spell over ``target`` (one name per generator)."""
        pairs = self.rewrite(w)
        if pairs is None:
            return None
        return Word(target, tuple((i + 1) * s for i, s in pairs))


def rewrite_over_generators(
    alpha: Alphabet, gens: Sequence[Word], w: Word
) -> Optional[list[tuple[int, int]]]:
    """Unique reduced expression of ``w`` over the free basis ``gens``,
    or None if w is not in the subgroup.  Raises if gens is not a basis."""
    return BasisRewriter(alpha, gens).rewrite(w)


# -- fibre products ------------------------------------------------------------

@dataclass
class FibreComponent:
    vertices: list[tuple[int, int]]
    edges: list[tuple[tuple[int, int], int, tuple[int, int]]]
    core_vertices: list[tuple[int, int]] = field(default_factory=list)
    core_edges: list[tuple[tuple[int, int], int, tuple[int, int]]] = field(default_factory=list)

    @property
    def is_forest(self) -> bool:
        return not self.core_edges


@dataclass
class FibreComponents:
    components: list[FibreComponent]
    diagonal_index: Optional[int]

    def non_diagonal(self):
        return [c for i, c in enumerate(self.components) if i != self.diagonal_index]


def fibre_product(g1: SubgroupGraph, g2: SubgroupGraph) -> FibreComponents:
    """Fibre product of folded graphs, split into connected components and
    trimmed to cyclic cores.

    The vertex set is restricted to pairs incident to at least one product
    edge; isolated pairs carry no cycles and are irrelevant to every
    verdict derived here.
    """
    if g1.alphabet != g2.alphabet:
        raise StallingsError("alphabet mismatch")
    n2 = g2.num_vertices
    nl = len(g1.alphabet)

    # group edges by positive label
    def edges_by_label(g):
        by = [[] for _ in range(nl)]
        for v, d in enumerate(g.out):
            for s, w in d.items():
                if s > 0:
                    by[s - 1].append((v, w))
        return by

    by1 = edges_by_label(g1)
    by2 = edges_by_label(g2)

    edges: list[tuple[int, int, int]] = []  # (pair_u, label, pair_v) encoded
    parent: dict[int, int] = {}

    def find(x):
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    def union(x, y):
        rx, ry = find(x), find(y)
        if rx != ry:
            parent[ry] = rx

    for lab in range(nl):
        e2 = by2[lab]
        if not e2:
            continue
        for (u1, v1) in by1[lab]:
            for (u2, v2) in e2:
                pu = u1 * n2 + u2
                pv = v1 * n2 + v2
                if pu not in parent:
                    parent[pu] = pu
                if pv not in parent:
                    parent[pv] = pv
                union(pu, pv)
                edges.append((pu, lab + 1, pv))

    comp_map: dict[int, int] = {}
    comps: list[FibreComponent] = []
    comp_edges: list[list[tuple[int, int, int]]] = []
    for (pu, lab, pv) in edges:
        root = find(pu)
        if root not in comp_map:
            comp_map[root] = len(comps)
            comps.append(FibreComponent([], []))
            comp_edges.append([])
        comp_edges[comp_map[root]].append((pu, lab, pv))

    def decode(p):
        return (p // n2, p % n2)

    # deterministic component order: by least encoded vertex
    order = sorted(range(len(comps)), key=lambda i: min(min(e[0], e[2]) for e in comp_edges[i]))
    ordered: list[FibreComponent] = []
    for i in order:
        es = comp_edges[i]
        verts = sorted({e[0] for e in es} | {e[2] for e in es})
        core_v, core_e = _trim_core(verts, es)
        ordered.append(
            FibreComponent(
                vertices=[decode(p) for p in verts],
                edges=sorted((decode(a), lab, decode(b)) for a, lab, b in es),
                core_vertices=[decode(p) for p in core_v],
                core_edges=sorted((decode(a), lab, decode(b)) for a, lab, b in core_e),
            )
        )

    diagonal_index = None
    if g1.canonical_form() == g2.canonical_form():
        bp_pair = 0  # (0, 0)
        if bp_pair in parent:
            root = find(bp_pair)
            if root in comp_map:
                diagonal_index = order.index(comp_map[root])
    return FibreComponents(ordered, diagonal_index)


def _trim_core(verts, edges):
    """Iteratively delete degree-1 vertices; what survives carries the cycles."""
    deg: dict[int, int] = {v: 0 for v in verts}
    inc: dict[int, list[int]] = {v: [] for v in verts}
    for idx, (a, _lab, b) in enumerate(edges):
        deg[a] += 1
        deg[b] += 1
        inc[a].append(idx)
        inc[b].append(idx)
    alive_v = {v: True for v in verts}
    alive_e = [True] * len(edges)
    stack = [v for v in verts if deg[v] <= 1]
    while stack:
        v = stack.pop()
        if not alive_v.get(v, False) or deg[v] > 1:
            continue
        alive_v[v] = False
        for idx in inc[v]:
            if not alive_e[idx]:
                continue
            alive_e[idx] = False
            a, _lab, b = edges[idx]
            other = b if a == v else a
            if alive_v.get(other, False):
                deg[other] -= 1
                if deg[other] <= 1:
                    stack.append(other)
    core_v = [v for v in verts if alive_v[v]]
    core_e = [e for idx, e in enumerate(edges) if alive_e[idx]]
    return core_v, core_e


# -- fast forest analysis -------------------------------------------------------

@dataclass
class _FibreAnalysis:
    all_forests: bool
    diagonal_ok: bool            # non-diagonal components all forests
    component_count: int
    failing_component: Optional[FibreComponent]          # least failing, any
    failing_nondiag_component: Optional[FibreComponent]  # least failing off-diagonal


def _edge_arrays(g: SubgroupGraph, nl: int):
    by = [[] for _ in range(nl)]
    for v, d in enumerate(g.out):
        for s, w in d.items():
            if s > 0:
                by[s - 1].append((v, w))
    return by


def _fibre_analysis(g1: SubgroupGraph, g2: SubgroupGraph) -> _FibreAnalysis:
    """Component/forest statistics of the fibre product without building the
    full edge structure: a connected component is a forest exactly when its
    edge count is one less than its vertex count."""
    if g1.alphabet != g2.alphabet:
        raise StallingsError("alphabet mismatch")
    nl = len(g1.alphabet)
    n2 = g2.num_vertices
    by1 = _edge_arrays(g1, nl)
    by2 = _edge_arrays(g2, nl)
    total = sum(len(by1[i]) * len(by2[i]) for i in range(nl))
    same = g1.canonical_form() == g2.canonical_form()

    if _np is None or total < 20000:
        fp = fibre_product(g1, g2)
        failing = None
        failing_nd = None
        for idx, comp in enumerate(fp.components):
            if comp.is_forest:
                continue
            if failing is None:
                failing = comp
            if idx != fp.diagonal_index and failing_nd is None:
                failing_nd = comp
        return _FibreAnalysis(
            all_forests=failing is None,
            diagonal_ok=failing_nd is None,
            component_count=len(fp.components),
            failing_component=failing,
            failing_nondiag_component=failing_nd,
        )

    pu_parts, pv_parts, lab_parts = [], [], []
    for lab in range(nl):
        e1, e2 = by1[lab], by2[lab]
        if not e1 or not e2:
            continue
        a1 = _np.asarray(e1, dtype=_np.int64)
        a2 = _np.asarray(e2, dtype=_np.int64)
        pu = (a1[:, 0, None] * n2 + a2[None, :, 0]).ravel()
        pv = (a1[:, 1, None] * n2 + a2[None, :, 1]).ravel()
        pu_parts.append(pu)
        pv_parts.append(pv)
        lab_parts.append(_np.full(len(pu), lab + 1, dtype=_np.int64))
    if not pu_parts:
        return _FibreAnalysis(True, True, 0, None, None)
    pu = _np.concatenate(pu_parts)
    pv = _np.concatenate(pv_parts)
    labs = _np.concatenate(lab_parts)
    nodes = _np.unique(_np.concatenate([pu, pv]))
    pu_c = _np.searchsorted(nodes, pu)
    pv_c = _np.searchsorted(nodes, pv)
    nnode = len(nodes)
    graph = _coo(
        (_np.ones(len(pu_c), dtype=_np.int8), (pu_c, pv_c)), shape=(nnode, nnode)
    )
    ncomp, comp = _ccomp(graph, directed=False)
    n_vert = _np.bincount(comp, minlength=ncomp)
    n_edge = _np.bincount(comp[pu_c], minlength=ncomp)
    bad = _np.nonzero(n_edge >= n_vert)[0]

    diag_comp = -1
    if same:
        pos = _np.searchsorted(nodes, 0)
        if pos < nnode and nodes[pos] == 0:
            diag_comp = int(comp[pos])

    def build_component(cid: int) -> FibreComponent:
        mask = comp[pu_c] == cid
        es = sorted(
            ((int(a) // n2, int(a) % n2), int(l), (int(b) // n2, int(b) % n2))
            for a, l, b in zip(pu[mask], labs[mask], pv[mask])
        )
        verts = sorted({e[0] for e in es} | {e[2] for e in es})
        core_v, core_e = _trim_core(verts, es)
        return FibreComponent(verts, es, core_v, core_e)

    failing = None
    failing_nd = None
    if len(bad):
        # deterministic: least encoded vertex among failing components
        first_node = _np.zeros(ncomp, dtype=_np.int64)
        order = _np.argsort(comp, kind="stable")
        seen = _np.unique(comp[order], return_index=True)
        first_node[seen[0]] = nodes[order[seen[1]]]
        bad_sorted = sorted(bad, key=lambda c: int(first_node[c]))
        failing = build_component(int(bad_sorted[0]))
        for c in bad_sorted:
            if int(c) != diag_comp:
                failing_nd = build_component(int(c))
                break
    return _FibreAnalysis(
        all_forests=failing is None,
        diagonal_ok=failing_nd is None,
        component_count=int(ncomp),
        failing_component=failing,
        failing_nondiag_component=failing_nd,
    )


# -- verdicts -------------------------------------------------------------------

@dataclass(frozen=True)
class IntersectionWitness:
    conjugator: Word  # g
    element: Word     # u != 1

    def as_dict(self):
        return {"witness_g": str(self.conjugator), "witness_u": str(self.element)}


@dataclass(frozen=True)
class MalnormalVerdict:
    malnormal: bool
    witness: Optional[IntersectionWitness]
    graph: SubgroupGraph
    component_count: int


@dataclass(frozen=True)
class TrivialIntersectionVerdict:
    trivial: bool
    witness: Optional[IntersectionWitness]
    component_count: int


def _component_cycle(core_vertices, core_edges):
    """A nonempty reduced cycle label based at the component's BFS root.

    BFS from the least core vertex; the first non-tree edge closes a cycle
    through the tree paths.  The label is freely reduced only (free
    reduction keeps path endpoints in a folded graph; cyclic reduction
    would move the base vertex)."""
    adj: dict[tuple[int, int], list[tuple[int, tuple[int, int], int]]] = {}
    for idx, (a, lab, b) in enumerate(core_edges):
        adj.setdefault(a, []).append((lab, b, idx))
        adj.setdefault(b, []).append((-lab, a, idx))
    root = min(core_vertices)
    parent: dict[tuple[int, int], tuple[tuple[int, int], int, int]] = {root: (root, 0, -1)}
    orderq = deque([root])
    while orderq:
        v = orderq.popleft()
        for lab, w, idx in sorted(adj[v]):
            if w not in parent:
                parent[w] = (v, lab, idx)
                orderq.append(w)
            elif idx != parent[v][2]:
                # non-tree edge v --lab--> w closes a cycle through root paths
                def path(x):
                    rev = []
                    while x != root:
                        p, s, _ = parent[x]
                        rev.append(s)
                        x = p
                    return tuple(reversed(rev))

                pv, pw = path(v), path(w)
                letters = free_reduce_letters(pv + (lab,) + tuple(-t for t in reversed(pw)))
                if letters:
                    return root, letters
    raise StallingsError("no cycle found in a non-forest component")


def _witness_from_component(
    comp: FibreComponent, g_left: SubgroupGraph, g_right: SubgroupGraph
) -> IntersectionWitness:
    """Witness (g, u) with u in <left> and g u g^-1 in <right>, read off a
    core cycle: u = P c P^-1 along the left projection, g = Q P^-1 with Q
    the right-projection basepoint path."""
    base, cyc = _component_cycle(comp.core_vertices, comp.core_edges)
    left_v, right_v = base
    alpha = g_left.alphabet
    p_letters = g_left.path_from_basepoint(left_v)
    q_letters = g_right.path_from_basepoint(right_v)
    u = Word(alpha, free_reduce_letters(p_letters + cyc + tuple(-x for x in reversed(p_letters))))
    g = Word(alpha, free_reduce_letters(q_letters + tuple(-x for x in reversed(p_letters))))
    return IntersectionWitness(conjugator=g, element=u)


def is_malnormal(alpha: Alphabet, gens: Sequence[Word]) -> MalnormalVerdict:
    """Malnormality of <gens> in the ambient free group.

    Yes exactly when every non-diagonal component of the fibre product of
    the folded graph with itself is a forest.  A "no" ships a verified
    witness (g, u): u != 1 lies in <gens> and in <gens>^g while g does not
    lie in <gens>.
    """
    graph = build_and_fold(alpha, gens)
    fa = _fibre_analysis(graph, graph)
    if not fa.diagonal_ok:
        wit = _witness_from_component(fa.failing_nondiag_component, graph, graph)
        # re-verify: u in <gens>, u in <gens>^g (g u g^-1 in <gens>), g not in <gens>
        gug = wit.conjugator * wit.element * wit.conjugator.inverse()
        assert wit.element and graph.contains(wit.element)
        assert graph.contains(gug)
        assert not graph.contains(wit.conjugator)
        return MalnormalVerdict(False, wit, graph, fa.component_count)
    return MalnormalVerdict(True, None, graph, fa.component_count)


def trivial_intersection_all_conjugates(
    alpha: Alphabet, s: Sequence[Word], t: Sequence[Word]
) -> TrivialIntersectionVerdict:
    """Is <t> ∩ <s>^g trivial for every g in the free group?

    Yes exactly when the fibre product of the folded graphs of t and s is
    a forest (every component, the diagonal included when t = s)."""
    gt = build_and_fold(alpha, t)
    gs = build_and_fold(alpha, s)
    fa = _fibre_analysis(gt, gs)
    if not fa.all_forests:
        wit = _witness_from_component(fa.failing_component, gt, gs)
        gug = wit.conjugator * wit.element * wit.conjugator.inverse()
        assert wit.element and gt.contains(wit.element)
        assert gs.contains(gug)
        return TrivialIntersectionVerdict(False, wit, fa.component_count)
    return TrivialIntersectionVerdict(True, None, fa.component_count)
