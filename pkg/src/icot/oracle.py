"""Small-instance ground truth: exhaustive tree enumeration, plus export of
the clustering-tree MIO to CPLEX-LP text and a feasibility checker.

The enumeration shares the midpoint threshold grid with the local search, so
oracle-vs-search comparisons are exact. The MIO is exported for a fixed full
binary topology; rows whose definitions involve variable products or ratios
(per-cluster mean distances, the per-point silhouette ratio) are emitted as
annotated nonlinear side-table comments and evaluated numerically by the
checker instead of being fake-linearized.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InstanceTooLargeError, ValidationError
from .metrics import criterion_value, CriterionScore, silhouette_value
from .tree import (
    Branch,
    ClusterTree,
    Leaf,
    SplitRule,
    relabel_leaves,
)

ENUMERATION_BOUND = 10**7


# ---------------------------------------------------------------------------
# exhaustive enumeration
# ---------------------------------------------------------------------------


def _estimate_tree_count(n, p, max_depth):
    splits = p * max(n - 1, 0)
    count = 1
    for _ in range(max_depth):
        count = 1 + splits * count * count
    return count


def enumerate_optimal(dataset, criterion, max_depth, min_bucket=2):
    """Exhaustively search every tree up to max_depth; return the best.

    Ties are broken by fewer leaves, then by the lexicographically smallest
    preorder (feature, threshold) sequence. Refuses instances whose tree
    count bound exceeds 10^7.
    """
    bound = _estimate_tree_count(dataset.n, dataset.p, max_depth)
    if bound > ENUMERATION_BOUND:
        raise InstanceTooLargeError(
            f"instance admits up to {bound:.2e} trees; the enumeration guard "
            f"is {ENUMERATION_BOUND:.0e} (use n <= ~16, p <= 2, depth <= 2)"
        )
    X = dataset.features
    D = dataset.distances

    def subtrees(subset, depth_left):
        """Yield (node, leaf_subsets, preorder_seq) for every subtree shape."""
        yield Leaf(size=subset.size), [subset], ()
        if depth_left == 0 or subset.size < 2 * min_bucket:
            return
        for feature in range(dataset.p):
            values = np.unique(X[subset, feature])
            col = X[subset, feature]
            for b in (values[:-1] + values[1:]) / 2.0:
                mask = col < b
                lo = int(mask.sum())
                if lo < min_bucket or subset.size - lo < min_bucket:
                    continue
                rule = (feature, float(b))
                for low_node, low_leaves, low_seq in subtrees(
                    subset[mask], depth_left - 1
                ):
                    for up_node, up_leaves, up_seq in subtrees(
                        subset[~mask], depth_left - 1
                    ):
                        node = Branch(
                            SplitRule(feature, float(b)), low_node, up_node
                        )
                        yield (
                            node,
                            low_leaves + up_leaves,
                            (rule,) + low_seq + up_seq,
                        )

    best = None
    labels = np.empty(dataset.n, dtype=int)
    for node, leaf_subsets, seq in subtrees(np.arange(dataset.n), max_depth):
        for cid, subset in enumerate(leaf_subsets):
            labels[subset] = cid
        value = criterion_value(criterion, D, labels)
        key = (-value, len(leaf_subsets), seq)
        if best is None or key < best[0]:
            best = (key, node)
    tree = relabel_leaves(
        ClusterTree(
            root=best[1], n_features=dataset.p, feature_names=dataset.feature_names
        )
    )
    return tree, CriterionScore(-best[0][0], criterion)


# ---------------------------------------------------------------------------
# MIO model construction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Constraint:
    name: str
    coeffs: dict  # variable name -> coefficient
    sense: str  # "<=", "=", ">="
    rhs: float


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str  # "binary" or "continuous"
    lower: float
    upper: float


@dataclass
class MIOModel:
    variables: list = field(default_factory=list)
    linear_constraints: list = field(default_factory=list)
    objective: dict = field(default_factory=dict)
    nonlinear: list = field(default_factory=list)  # (name, expression text)
    metadata: dict = field(default_factory=dict)

    def variable_names(self):
        return {v.name for v in self.variables}

    def validate(self):
        names = self.variable_names()
        for con in self.linear_constraints:
            unknown = set(con.coeffs) - names
            if unknown:
                raise ValidationError(
                    f"constraint {con.name} references unknown variables {unknown}"
                )
        if set(self.objective) - names:
            raise ValidationError("objective references unknown variables")


def _topology(depth):
    """1-based BFS indices: branches 1..2^d-1, leaves 2^d..2^(d+1)-1."""
    branches = list(range(1, 2**depth))
    leaves = list(range(2**depth, 2 ** (depth + 1)))
    return branches, leaves


def _ancestors(t):
    """(left-branch ancestors, right-branch ancestors) of node t."""
    left, right = [], []
    while t > 1:
        parent = t // 2
        if t % 2 == 0:
            left.append(parent)
        else:
            right.append(parent)
        t = parent
    return left, right


def build_mio_model(dataset, depth, min_bucket=2, big_M=None):
    """Variable/constraint system for a fixed full binary topology.

    The linear subset (tree structure, assignment, strict routing, silhouette
    scaffolding) is exact; per-cluster mean distances and the per-point score
    ratio are recorded in the nonlinear side table.
    """
    if depth < 1:
        raise ValidationError("depth must be >= 1")
    from .dataset import min_separation_vector

    n, p = dataset.n, dataset.p
    X = dataset.features
    D = dataset.distances
    eps, eps_max = min_separation_vector(X)
    if big_M is None:
        big_M = 2.0 * float(D.max())
    elif big_M <= float(D.max()):
        raise ValidationError("big_M must exceed the maximum pairwise distance")

    branches, leaves = _topology(depth)
    model = MIOModel(
        metadata={
            "n": n,
            "p": p,
            "depth": depth,
            "n_min": min_bucket,
            "big_m": big_M,
            "eps": eps.tolist(),
            "eps_max": eps_max,
        }
    )
    add_var = model.variables.append
    add_con = model.linear_constraints.append

    for t in branches:
        for j in range(1, p + 1):
            add_var(Variable(f"a_{j}_{t}", "binary", 0.0, 1.0))
        add_var(Variable(f"b_{t}", "continuous", 0.0, 1.0))
        add_var(Variable(f"d_{t}", "binary", 0.0, 1.0))
    for t in leaves:
        for i in range(1, n + 1):
            add_var(Variable(f"z_{i}_{t}", "binary", 0.0, 1.0))
        add_var(Variable(f"l_{t}", "binary", 0.0, 1.0))
        add_var(Variable(f"K_{t}", "continuous", 0.0, float(n)))
        for i in range(1, n + 1):
            add_var(Variable(f"c_{i}_{t}", "continuous", 0.0, big_M))
    for i in range(1, n + 1):
        add_var(Variable(f"r_{i}", "continuous", 0.0, big_M))
        add_var(Variable(f"q_{i}", "continuous", 0.0, big_M))
        add_var(Variable(f"m_{i}", "continuous", 0.0, big_M))
        add_var(Variable(f"s_{i}", "continuous", -1.0, 1.0))
    add_var(Variable("S", "continuous", -1.0, 1.0))

    # tree structure
    for t in branches:
        coeffs = {f"a_{j}_{t}": 1.0 for j in range(1, p + 1)}
        coeffs[f"d_{t}"] = -1.0
        add_con(Constraint(f"split_sum_{t}", coeffs, "=", 0.0))
        add_con(
            Constraint(f"b_bound_{t}", {f"b_{t}": 1.0, f"d_{t}": -1.0}, "<=", 0.0)
        )
        if t > 1:
            add_con(
                Constraint(
                    f"parent_split_{t}",
                    {f"d_{t}": 1.0, f"d_{t // 2}": -1.0},
                    "<=",
                    0.0,
                )
            )

    # assignment
    for i in range(1, n + 1):
        add_con(
            Constraint(
                f"assign_{i}", {f"z_{i}_{t}": 1.0 for t in leaves}, "=", 1.0
            )
        )
    for t in leaves:
        for i in range(1, n + 1):
            add_con(
                Constraint(
                    f"open_{i}_{t}",
                    {f"z_{i}_{t}": 1.0, f"l_{t}": -1.0},
                    "<=",
                    0.0,
                )
            )
        coeffs = {f"z_{i}_{t}": 1.0 for i in range(1, n + 1)}
        coeffs[f"l_{t}"] = -float(min_bucket)
        add_con(Constraint(f"min_bucket_{t}", coeffs, ">=", 0.0))

    # strict routing through ancestor splits
    for t in leaves:
        left_anc, right_anc = _ancestors(t)
        for i in range(1, n + 1):
            x = X[i - 1]
            for m in right_anc:
                coeffs = {f"a_{j}_{m}": float(x[j - 1]) for j in range(1, p + 1)}
                coeffs[f"b_{m}"] = -1.0
                coeffs[f"z_{i}_{t}"] = -1.0
                add_con(Constraint(f"route_up_{i}_{t}_{m}", coeffs, ">=", -1.0))
            for m in left_anc:
                coeffs = {
                    f"a_{j}_{m}": float(x[j - 1] + eps[j - 1])
                    for j in range(1, p + 1)
                }
                coeffs[f"b_{m}"] = -1.0
                coeffs[f"z_{i}_{t}"] = 1.0 + eps_max
                add_con(
                    Constraint(
                        f"route_low_{i}_{t}_{m}", coeffs, "<=", 1.0 + eps_max
                    )
                )

    # silhouette scaffolding (linear part)
    for t in leaves:
        coeffs = {f"z_{i}_{t}": 1.0 for i in range(1, n + 1)}
        coeffs[f"K_{t}"] = -1.0
        add_con(Constraint(f"cluster_size_{t}", coeffs, "=", 0.0))
    for i in range(1, n + 1):
        add_con(
            Constraint(f"m_ge_r_{i}", {f"m_{i}": 1.0, f"r_{i}": -1.0}, ">=", 0.0)
        )
        add_con(
            Constraint(f"m_ge_q_{i}", {f"m_{i}": 1.0, f"q_{i}": -1.0}, ">=", 0.0)
        )
    coeffs = {f"s_{i}": 1.0 / n for i in range(1, n + 1)}
    coeffs["S"] = -1.0
    add_con(Constraint("silhouette_mean", coeffs, "=", 0.0))

    # nonlinear side table: definitions with variable products/ratios
    for t in leaves:
        for i in range(1, n + 1):
            model.nonlinear.append(
                (
                    f"c_{i}_{t}",
                    f"c_{i}_{t} := (sum_j d[{i},j] * z_j_{t}) / K_{t}"
                    f"  [self excluded when z_{i}_{t} = 1; skipped when K_{t} = 0]",
                )
            )
    for i in range(1, n + 1):
        model.nonlinear.append(
            (f"r_{i}", f"r_{i} := sum_t c_{i}_{t} * z_{i}_{t}")
        )
        for t in leaves:
            model.nonlinear.append(
                (
                    f"q_bound_{i}_{t}",
                    f"q_{i} <= c_{i}_{t} * (1 - z_{i}_{t}) + {big_M!r} * z_{i}_{t}",
                )
            )
        model.nonlinear.append((f"s_{i}", f"s_{i} := (q_{i} - r_{i}) / m_{i}"))

    model.objective = {"S": 1.0}
    model.validate()
    return model


# ---------------------------------------------------------------------------
# LP export (CPLEX-LP dialect)
# ---------------------------------------------------------------------------


def _term(coef, name, first):
    sign = "-" if coef < 0 else ("" if first else "+")
    mag = abs(coef)
    return f"{sign} {mag:.12g} {name}".strip() if not first else f"{sign}{mag:.12g} {name}"


def _render_expr(coeffs):
    parts = []
    for idx, (name, coef) in enumerate(sorted(coeffs.items())):
        if idx == 0:
            parts.append(f"{'-' if coef < 0 else ''}{abs(coef):.12g} {name}")
        else:
            parts.append(f"{'-' if coef < 0 else '+'} {abs(coef):.12g} {name}")
    return " ".join(parts)


_SENSE = {"<=": "<=", ">=": ">=", "=": "="}


def export_lp(model, path):
    """Write the model as deterministic CPLEX-LP text.

    Nonlinear side-table rows are emitted as structured comments of the form
    ``\\ NONLINEAR: <name> := <expression>``.
    """
    lines = ["\\ icot clustering-tree MIO export"]
    for key in sorted(model.metadata):
        lines.append(f"\\ {key} = {model.metadata[key]}")
    for name, expr in model.nonlinear:
        lines.append(f"\\ NONLINEAR: {expr}")
    lines.append("Maximize")
    lines.append(f" obj: {_render_expr(model.objective)}")
    lines.append("Subject To")
    for con in model.linear_constraints:
        lines.append(
            f" {con.name}: {_render_expr(con.coeffs)} {_SENSE[con.sense]} {con.rhs:.12g}"
        )
    lines.append("Bounds")
    for var in model.variables:
        if var.kind == "continuous":
            lines.append(f" {var.lower:.12g} <= {var.name} <= {var.upper:.12g}")
    lines.append("Binaries")
    binaries = [v.name for v in model.variables if v.kind == "binary"]
    for start in range(0, len(binaries), 8):
        lines.append(" " + " ".join(binaries[start : start + 8]))
    lines.append("End")
    text = "\n".join(lines) + "\n"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    return text


# ---------------------------------------------------------------------------
# feasibility checking
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    row: str
    lhs: float
    sense: str
    rhs: float


@dataclass
class FeasibilityReport:
    violations: list
    model_silhouette: float
    metric_silhouette: float

    @property
    def feasible(self):
        return not self.violations

    @property
    def silhouette_gap(self):
        return abs(self.model_silhouette - self.metric_silhouette)


_ROW_TOL = 1e-9


def check_linear_rows(model, values):
    """Evaluate every linear constraint at a variable assignment."""
    violations = []
    for con in model.linear_constraints:
        lhs = sum(coef * values[name] for name, coef in con.coeffs.items())
        ok = (
            lhs <= con.rhs + _ROW_TOL
            if con.sense == "<="
            else lhs >= con.rhs - _ROW_TOL
            if con.sense == ">="
            else abs(lhs - con.rhs) <= _ROW_TOL
        )
        if not ok:
            violations.append(Violation(con.name, lhs, con.sense, con.rhs))
    return violations


def derive_variables(model, tree, dataset):
    """Map a clustering tree onto the model's fixed topology.

    Shallower trees are padded with d_t = 0 nodes (points fall through to the
    rightmost descendant leaf). Branch thresholds are mapped to the smallest
    feature value on the upper side, which routes the training data
    identically and satisfies the strict-split rows together with the
    per-dimension gaps.
    """
    depth = model.metadata["depth"]
    n, p = dataset.n, dataset.p
    if tree.depth > depth:
        raise ValidationError(
            f"tree depth {tree.depth} exceeds model topology depth {depth}"
        )
    X = dataset.features
    branches, leaves = _topology(depth)
    values = {}
    for t in branches:
        for j in range(1, p + 1):
            values[f"a_{j}_{t}"] = 0.0
        values[f"b_{t}"] = 0.0
        values[f"d_{t}"] = 0.0
    for t in leaves:
        for i in range(1, n + 1):
            values[f"z_{i}_{t}"] = 0.0
        values[f"l_{t}"] = 0.0

    first_leaf = leaves[0]
    leaf_members = {t: [] for t in leaves}

    def embed(node, t, subset):
        if t >= first_leaf:
            if isinstance(node, Branch):
                raise ValidationError("tree deeper than model topology")
            leaf_members[t] = subset
            return
        if isinstance(node, Leaf):
            # padded branch: d_t = 0, all points fall through to the right
            embed(node, 2 * t + 1, subset)
            return
        j = node.rule.feature
        col = X[subset, j] if len(subset) else np.empty(0)
        mask = col < node.rule.threshold
        lower = [idx for idx, flag in zip(subset, mask) if flag]
        upper = [idx for idx, flag in zip(subset, mask) if not flag]
        values[f"a_{j + 1}_{t}"] = 1.0
        values[f"d_{t}"] = 1.0
        if upper:
            values[f"b_{t}"] = float(min(X[idx, j] for idx in upper))
        else:
            values[f"b_{t}"] = float(node.rule.threshold)
        embed(node.lower, 2 * t, lower)
        embed(node.upper, 2 * t + 1, upper)

    embed(tree.root, 1, list(range(n)))
    for t, members in leaf_members.items():
        for i in members:
            values[f"z_{i + 1}_{t}"] = 1.0
        if members:
            values[f"l_{t}"] = 1.0
        values[f"K_{t}"] = float(len(members))
    return values, leaf_members


def _model_silhouette(dataset, leaf_members):
    """Numeric evaluation of the nonlinear side-table definitions."""
    D = dataset.distances
    n = dataset.n
    nonempty = {t: m for t, m in leaf_members.items() if m}
    own = {}
    for t, members in nonempty.items():
        for i in members:
            own[i] = t
    r = np.zeros(n)
    q = np.zeros(n)
    s = np.zeros(n)
    for i in range(n):
        t_own = own[i]
        mates = [j for j in nonempty[t_own] if j != i]
        foreign = [
            float(np.mean([D[i, j] for j in members]))
            for t, members in nonempty.items()
            if t != t_own
        ]
        if not mates or not foreign:
            s[i] = 0.0
            continue
        r[i] = float(np.mean([D[i, j] for j in mates]))
        q[i] = min(foreign)
        m = max(r[i], q[i])
        s[i] = 0.0 if m == 0 else (q[i] - r[i]) / m
    return float(s.mean()), r, q


def check_feasibility(model, tree, dataset):
    """Validate a tree against the exported formulation.

    Derives (a, b, d, z, l, K) from the tree, checks every linear row, then
    recomputes the objective from the nonlinear side-table definitions and
    compares it with the silhouette criterion.
    """
    values, leaf_members = derive_variables(model, tree, dataset)
    # silhouette-layer variables are defined by side-table rows; fill them
    # from the numeric evaluation so the linear scaffolding rows (m >= r,
    # m >= q, mean) can be checked too
    layer = _silhouette_layer(dataset, leaf_members)
    values = values | layer
    violations = check_linear_rows(model, values)
    # numeric check of the nonlinear q upper-bound rows
    big_M = model.metadata["big_m"]
    _, leaves = _topology(model.metadata["depth"])
    for i in range(1, dataset.n + 1):
        for t in leaves:
            if not leaf_members[t]:
                continue
            z = values[f"z_{i}_{t}"]
            bound = values[f"c_{i}_{t}"] * (1.0 - z) + big_M * z
            if values[f"q_{i}"] > bound + _ROW_TOL:
                violations.append(
                    Violation(f"q_bound_{i}_{t}", values[f"q_{i}"], "<=", bound)
                )
    model_S, _, _ = _model_silhouette(dataset, leaf_members)
    labels = np.empty(dataset.n, dtype=int)
    for cid, (t, members) in enumerate(sorted(leaf_members.items())):
        for i in members:
            labels[i] = cid
    metric_S = silhouette_value(dataset.distances, labels)
    return FeasibilityReport(
        violations=violations,
        model_silhouette=model_S,
        metric_silhouette=metric_S,
    )


def _silhouette_layer(dataset, leaf_members):
    model_S, r, q = _model_silhouette(dataset, leaf_members)
    n = dataset.n
    values = {}
    nonempty = {t: m for t, m in leaf_members.items() if m}
    own = {i: t for t, members in nonempty.items() for i in members}
    for t, members in leaf_members.items():
        for i in range(n):
            if not members:
                values[f"c_{i + 1}_{t}"] = 0.0
            else:
                mates = [j for j in members if j != i]
                values[f"c_{i + 1}_{t}"] = (
                    float(np.mean([dataset.distances[i, j] for j in mates]))
                    if mates
                    else 0.0
                )
    for i in range(n):
        values[f"r_{i + 1}"] = float(r[i])
        values[f"q_{i + 1}"] = float(q[i])
        values[f"m_{i + 1}"] = max(float(r[i]), float(q[i]))
        m = values[f"m_{i + 1}"]
        values[f"s_{i + 1}"] = 0.0 if m == 0 else (float(q[i]) - float(r[i])) / m
        mates = [j for j in nonempty.get(own.get(i), []) if j != i]
        foreign = [t for t in nonempty if t != own.get(i)]
        if not mates or not foreign:
            values[f"s_{i + 1}"] = 0.0
    values["S"] = float(
        np.mean([values[f"s_{i + 1}"] for i in range(n)])
    )
    return values
