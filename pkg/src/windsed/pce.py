"""Hermite polynomial chaos: multi-index bases, nested sparse quadrature for
the standard normal weight, and Galerkin projection of black-box models.

The 1-D quadrature ladder is the nested family regenerated by
scripts/gen_quadrature_rules.py (1, 3, 7, 15 points, polynomial exactness
1/5/9/17).  Growth is delayed -- successive levels reuse a rule until the
next extension exists -- which is what makes a 16-dimensional level-1 grid
cost 33 model evaluations and a level-2 grid 513.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations_with_replacement

import numpy as np

# -- tabulated nested 1-D rules (node, weight), exact decimal constants ------
# Shared nodes repeat verbatim across rules so deduplication is exact.

_R1 = (
    ("0.0", "1.0"),
)
_R3 = (
    ("-1.73205080756887729352744634151", "0.166666666666666666666666666667"),
    ("0.0", "0.666666666666666666666666666667"),
    ("1.73205080756887729352744634151", "0.166666666666666666666666666667"),
)
_R7 = (
    ("-3.0", "0.00694444444444444444444444444444"),
    ("-1.73205080756887729352744634151", "0.0833333333333333333333333333333"),
    ("-1.0", "0.1875"),
    ("0.0", "0.444444444444444444444444444444"),
    ("1.0", "0.1875"),
    ("1.73205080756887729352744634151", "0.0833333333333333333333333333333"),
    ("3.0", "0.00694444444444444444444444444444"),
)
_R15 = (
    ("-4.58257569495584000658804719373", "0.0000158139224000116653205313553502"),
    ("-3.39116499156263406953227816331", "0.00108218889107669403155454680189"),
    ("-3.0", "0.00172637756257786838826594178276"),
    ("-2.23606797749978969640917366873", "0.0249694368131868131868131868132"),
    ("-1.73205080756887729352744634151", "0.0414410994476353953478136484672"),
    ("-1.0", "0.206570263975155279503105590062"),
    ("-0.628280862437543260472012226692", "0.0403929637020542809489768729446"),
    ("0.0", "0.367603711371827313856299363546"),
    ("0.628280862437543260472012226692", "0.0403929637020542809489768729446"),
    ("1.0", "0.206570263975155279503105590062"),
    ("1.73205080756887729352744634151", "0.0414410994476353953478136484672"),
    ("2.23606797749978969640917366873", "0.0249694368131868131868131868132"),
    ("3.0", "0.00172637756257786838826594178276"),
    ("3.39116499156263406953227816331", "0.00108218889107669403155454680189"),
    ("4.58257569495584000658804719373", "0.0000158139224000116653205313553502"),
)


def _parse(rule):
    nodes = np.array([float(x) for x, _ in rule])
    weights = np.array([float(w) for _, w in rule])
    return nodes, weights


# delayed growth: 1-D level -> rule; a rule repeats until its extension exists
_LADDER = [_parse(r) for r in (_R1, _R3, _R3, _R7, _R7, _R15)]
MAX_LEVEL = len(_LADDER) - 1  # grid level L uses 1-D levels up to L+1


def rule_1d(level: int):
    """Nodes and weights of the 1-D rule used at ladder position `level`
    (1-based)."""
    if not 1 <= level <= len(_LADDER):
        raise ValueError(f"no tabulated 1-D rule at level {level}")
    nodes, weights = _LADDER[level - 1]
    return nodes.copy(), weights.copy()


# -- Hermite polynomials ------------------------------------------------------

def hermite(k: int, x):
    """Probabilists' Hermite polynomial He_k via the three-term recurrence.

    Orthogonal under N(0,1) with <He_j He_k> = delta_jk k!.
    """
    if k < 0:
        raise ValueError("degree must be nonnegative")
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if k == 0:
        return prev if prev.ndim else float(prev)
    cur = x.copy()
    for deg in range(1, k):
        prev, cur = cur, x * cur - deg * prev
    return cur if cur.ndim else float(cur)


@dataclass(frozen=True)
class MultiIndexSet:
    """All n-tuples of total degree <= p in graded-lexicographic order
    (index 0 is the all-zeros tuple)."""

    dimension: int
    order: int
    indices: tuple

    @classmethod
    def total_degree(cls, dimension: int, order: int) -> "MultiIndexSet":
        if dimension < 1 or order < 0:
            raise ValueError("need dimension >= 1 and order >= 0")
        idx = [(0,) * dimension]
        for deg in range(1, order + 1):
            block = set()
            for combo in combinations_with_replacement(range(dimension), deg):
                t = [0] * dimension
                for c in combo:
                    t[c] += 1
                block.add(tuple(t))
            idx.extend(sorted(block, key=lambda t: [-e for e in t]))
        return cls(dimension, order, tuple(idx))

    def __len__(self):
        return len(self.indices)

    def __post_init__(self):
        expect = math.comb(self.dimension + self.order, self.order)
        if len(self.indices) != expect:
            raise ValueError(
                f"index count {len(self.indices)} != (n+p)!/(n!p!) = {expect}")
        if len(set(self.indices)) != len(self.indices):
            raise ValueError("duplicate multi-index")

    def norms_squared(self) -> np.ndarray:
        """<Psi_k^2> = prod k_i!, computed exactly."""
        return np.array(
            [float(math.prod(math.factorial(e) for e in t)) for t in self.indices]
        )


def eval_basis(idxset: MultiIndexSet, xi) -> np.ndarray:
    """Values Psi_k(xi) = prod_i He_{k_i}(xi_i) for every multi-index."""
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (idxset.dimension,):
        raise ValueError(f"point has dimension {xi.shape}, basis needs "
                         f"({idxset.dimension},)")
    maxdeg = idxset.order
    # table[d, i] = He_d(xi_i)
    table = np.ones((maxdeg + 1, idxset.dimension))
    if maxdeg >= 1:
        table[1] = xi
    for d in range(1, maxdeg):
        table[d + 1] = xi * table[d] - d * table[d - 1]
    out = np.empty(len(idxset))
    for k, t in enumerate(idxset.indices):
        v = 1.0
        for i, e in enumerate(t):
            if e:
                v *= table[e, i]
        out[k] = v
    return out


# -- sparse quadrature ---------------------------------------------------------

@dataclass(frozen=True)
class SparseGrid:
    dimension: int
    level: int
    nodes: np.ndarray    # (num_nodes, dimension)
    weights: np.ndarray  # (num_nodes,)

    def __len__(self):
        return len(self.weights)

    def integrate(self, values) -> float:
        values = np.asarray(values, dtype=float)
        if values.shape != self.weights.shape:
            raise ValueError("values/weights length mismatch")
        return math.fsum(w * v for w, v in zip(self.weights, values))


def _delta(level: int):
    """Difference rule R_level - R_{level-1} on the nodes of R_level."""
    nodes, weights = _LADDER[level - 1]
    if level == 1:
        return nodes, weights
    pnodes, pweights = _LADDER[level - 2]
    w = weights.copy()
    pos = {x: i for i, x in enumerate(nodes)}
    for x, pw in zip(pnodes, pweights):
        w[pos[x]] -= pw  # nested: every parent node reappears verbatim
    return nodes, w


def _compositions(total: int, parts: int):
    """Nonnegative integer vectors of the given length summing to total."""
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for rest in _compositions(total - head, parts - 1):
            yield (head,) + rest


def build_sparse_grid(dimension: int, level: int) -> SparseGrid:
    """Smolyak combination of the nested 1-D ladder.

    Uses the telescoping (difference-rule) form: tensor products of
    Delta_l = R_l - R_{l-1} over all 1-D level vectors with
    sum(l_i - 1) <= level.  Delayed ladder positions have Delta = 0 and
    contribute nothing, which is what produces the 33/513 node counts in
    16 dimensions at levels 1 and 2.
    """
    if dimension < 1:
        raise ValueError("dimension must be >= 1")
    if not 1 <= level <= MAX_LEVEL:
        raise ValueError(f"level must be in 1..{MAX_LEVEL} (tabulated rules)")
    deltas = [_delta(l) for l in range(1, level + 2)]
    nonzero = [l for l in range(1, level + 2)
               if l == 1 or np.any(np.abs(deltas[l - 1][1]) > 0)]
    acc: dict[tuple, float] = {}
    for surplus in range(0, level + 1):
        for comp in _compositions(surplus, dimension):
            levels = [c + 1 for c in comp]
            if any(l not in nonzero for l in levels):
                continue
            axes = [deltas[l - 1] for l in levels]
            # tensor the (typically tiny) difference rules
            grids = np.meshgrid(*[a[0] for a in axes], indexing="ij")
            wgrids = np.meshgrid(*[a[1] for a in axes], indexing="ij")
            pts = np.stack([g.ravel() for g in grids], axis=1)
            wts = np.prod(np.stack([w.ravel() for w in wgrids], axis=1), axis=1)
            for pt, w in zip(pts, wts):
                key = tuple(round(float(v), 14) for v in pt)
                acc[key] = acc.get(key, 0.0) + float(w)
    keys = sorted(acc.keys())
    nodes = np.array(keys, dtype=float).reshape(len(keys), dimension)
    weights = np.array([acc[k] for k in keys])
    return SparseGrid(dimension, level, nodes, weights)


# -- surrogate ----------------------------------------------------------------

@dataclass
class PCESurrogate:
    idxset: MultiIndexSet
    coefficients: np.ndarray
    level: int

    @property
    def dimension(self):
        return self.idxset.dimension

    @property
    def order(self):
        return self.idxset.order

    def __call__(self, xi) -> float:
        return float(self.coefficients @ eval_basis(self.idxset, xi))

    def mean(self) -> float:
        return float(self.coefficients[0])

    def variance(self) -> float:
        norms = self.idxset.norms_squared()
        return float(np.sum(self.coefficients[1:] ** 2 * norms[1:]))

    def to_text(self) -> str:
        out = [f"PCE n={self.dimension} p={self.order} level={self.level}"]
        for t, c in zip(self.idxset.indices, self.coefficients):
            out.append(" ".join(str(e) for e in t) + f" {float(c)!r}")
        return "\n".join(out) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "PCESurrogate":
        lines = [l for l in text.splitlines() if l.strip()]
        head = dict(kv.split("=") for kv in lines[0].split()[1:])
        n, p, level = int(head["n"]), int(head["p"]), int(head["level"])
        idxset = MultiIndexSet.total_degree(n, p)
        if len(lines) - 1 != len(idxset):
            raise ValueError("surrogate file has wrong coefficient count")
        coeffs = np.empty(len(idxset))
        for k, (line, t) in enumerate(zip(lines[1:], idxset.indices)):
            parts = line.split()
            if tuple(int(e) for e in parts[:n]) != t:
                raise ValueError("surrogate file indices out of order")
            coeffs[k] = float(parts[n])
        return cls(idxset, coeffs, level)


class ModelEvaluationError(Exception):
    """A model call at a quadrature node failed; carries the node."""

    def __init__(self, node, cause):
        self.node = node
        super().__init__(f"model failed at node {node}: {cause}")


def evaluate_on_grid(model, grid: SparseGrid, pool_map=None) -> np.ndarray:
    """Model values at every grid node; pool_map allows a concurrent map
    (results are reassembled in node order, so the reduction is unchanged)."""
    mapper = pool_map if pool_map is not None else map
    rows = [np.asarray(r, dtype=float) for r in grid.nodes]
    try:
        values = np.fromiter(mapper(model, rows), dtype=float, count=len(rows))
    except ModelEvaluationError:
        raise
    except Exception as exc:
        raise ModelEvaluationError("<unknown>", exc) from exc
    if not np.all(np.isfinite(values)):
        bad = int(np.flatnonzero(~np.isfinite(values))[0])
        raise ModelEvaluationError(grid.nodes[bad], "non-finite model value")
    return values


def project(model, grid: SparseGrid, idxset: MultiIndexSet,
            values: np.ndarray | None = None, pool_map=None) -> PCESurrogate:
    """Galerkin projection c_k = sum_nodes w * model * Psi_k / <Psi_k^2>.

    The model is evaluated once per node and reused for every coefficient;
    coefficient sums use compensated (fsum) reduction in fixed node order.
    """
    if grid.dimension != idxset.dimension:
        raise ValueError("grid and index set dimensions differ")
    if grid.level < idxset.order + 1:
        raise ValueError(
            f"grid level {grid.level} too low for order {idxset.order}: "
            f"an order-p projection needs level >= p+1")
    if values is None:
        values = evaluate_on_grid(model, grid, pool_map=pool_map)
    norms = idxset.norms_squared()
    basis_rows = np.empty((len(grid), len(idxset)))
    for r, node in enumerate(grid.nodes):
        basis_rows[r] = eval_basis(idxset, node)
    coeffs = np.empty(len(idxset))
    wv = grid.weights * values
    for k in range(len(idxset)):
        coeffs[k] = math.fsum(wv * basis_rows[:, k]) / norms[k]
    return PCESurrogate(idxset, coeffs, grid.level)
