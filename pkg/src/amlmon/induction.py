"""Production-rule induction over labeled profiles.

Two inducers are provided: a gain-ratio decision tree with reduced-error
pruning whose root-to-leaf paths become mutually exclusive rules, and a
separate-and-conquer decision list that repeatedly grows a pruned tree,
keeps the best-covering leaf as a rule and drops the covered instances.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

_EPS = 1e-12


class RuleAlgorithm(str, enum.Enum):
    DECISION_LIST = "decision_list"
    DECISION_TREE = "decision_tree"


@dataclass(frozen=True)
class Condition:
    feature: int
    op: str  # "<=" or ">"
    threshold: float

    def holds(self, X: np.ndarray) -> np.ndarray:
        col = X[:, self.feature]
        return col <= self.threshold if self.op == "<=" else col > self.threshold

    def render(self, names: tuple[str, ...] | None = None) -> str:
        name = names[self.feature] if names else f"f{self.feature}"
        return f"{name} {self.op} {self.threshold:g}"


@dataclass(frozen=True)
class ClassificationRule:
    """Conjunction of attribute comparisons implying a cluster label.

    An empty condition list is a default rule covering everything.
    """

    conditions: tuple[Condition, ...]
    label: int
    coverage: int = 0

    def mask(self, X: np.ndarray) -> np.ndarray:
        out = np.ones(len(X), dtype=bool)
        for cond in self.conditions:
            out &= cond.holds(X)
        return out

    def matches_row(self, row: np.ndarray) -> bool:
        return all(
            (row[c.feature] <= c.threshold) == (c.op == "<=")
            for c in self.conditions
        )

    def render(self, names: tuple[str, ...] | None = None) -> str:
        if not self.conditions:
            return f"* => {self.label}"
        body = " and ".join(c.render(names) for c in self.conditions)
        return f"{body} => {self.label}"


@dataclass
class InducedRuleSet:
    algorithm: RuleAlgorithm
    rules: list[ClassificationRule]
    misclassified: int
    version: str = ""

    def predict(self, X: np.ndarray) -> np.ndarray:
        """First-match prediction. Tree rule sets are exhaustive and
        mutually exclusive, so first-match is exact for them too."""
        X = np.asarray(X, dtype=float)
        out = np.full(len(X), -1, dtype=int)
        open_rows = np.ones(len(X), dtype=bool)
        for rule in self.rules:
            if not open_rows.any():
                break
            hit = open_rows & rule.mask(X)
            out[hit] = rule.label
            open_rows &= ~hit
        return out

    def predict_row(self, row) -> int:
        row = np.asarray(row, dtype=float)
        for rule in self.rules:
            if rule.matches_row(row):
                return rule.label
        return -1

    @property
    def n_rules(self) -> int:
        return len(self.rules)


# ---------------------------------------------------------------------------
# Tree machinery

@dataclass
class _Node:
    counts: np.ndarray
    feature: int = -1
    threshold: float = 0.0
    left: "._Node | None" = None
    right: "._Node | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    @property
    def label(self) -> int:
        return int(np.argmax(self.counts))


def _entropy(counts: np.ndarray) -> float:
    total = counts.sum()
    if total <= 0:
        return 0.0
    p = counts[counts > 0] / total
    return float(-(p * np.log2(p)).sum())


def _best_split(
    X: np.ndarray, y: np.ndarray, n_classes: int, min_leaf: int
) -> tuple[int, float, float] | None:
    """Best (feature, threshold, gain_ratio) over numeric binary splits."""
    n = len(y)
    parent = _entropy(np.bincount(y, minlength=n_classes).astype(float))
    if parent <= _EPS:
        return None
    best: tuple[int, float, float] | None = None
    onehot = np.zeros((n, n_classes))
    for f in range(X.shape[1]):
        col = X[:, f]
        order = np.argsort(col, kind="mergesort")
        sorted_col = col[order]
        onehot[:] = 0.0
        onehot[np.arange(n), y[order]] = 1.0
        cum = np.cumsum(onehot, axis=0)
        cut = np.nonzero(sorted_col[:-1] < sorted_col[1:])[0]
        if len(cut) == 0:
            continue
        left_n = cut + 1
        right_n = n - left_n
        ok = (left_n >= min_leaf) & (right_n >= min_leaf)
        if not ok.any():
            continue
        cut, left_n, right_n = cut[ok], left_n[ok], right_n[ok]
        left_counts = cum[cut]
        right_counts = cum[-1] - left_counts

        def _ent(counts: np.ndarray, totals: np.ndarray) -> np.ndarray:
            p = counts / totals[:, None]
            with np.errstate(divide="ignore", invalid="ignore"):
                term = np.where(p > 0, p * np.log2(p), 0.0)
            return -term.sum(axis=1)

        gain = parent - (
            left_n / n * _ent(left_counts, left_n)
            + right_n / n * _ent(right_counts, right_n)
        )
        pl = left_n / n
        split_info = -(pl * np.log2(pl) + (1 - pl) * np.log2(1 - pl))
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where((gain > _EPS) & (split_info > _EPS), gain / split_info, -1.0)
        i = int(np.argmax(ratio))
        if ratio[i] <= 0:
            continue
        thr = (sorted_col[cut[i]] + sorted_col[cut[i] + 1]) / 2.0
        if best is None or ratio[i] > best[2]:
            best = (f, float(thr), float(ratio[i]))
    return best


def _grow(
    X: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    depth: int,
    max_depth: int,
    min_leaf: int,
) -> _Node:
    counts = np.bincount(y, minlength=n_classes).astype(float)
    node = _Node(counts=counts)
    if depth >= max_depth or len(y) < 2 * min_leaf or _entropy(counts) <= _EPS:
        return node
    split = _best_split(X, y, n_classes, min_leaf)
    if split is None:
        return node
    f, thr, _ = split
    go_left = X[:, f] <= thr
    node.feature, node.threshold = f, thr
    node.left = _grow(X[go_left], y[go_left], n_classes, depth + 1, max_depth, min_leaf)
    node.right = _grow(X[~go_left], y[~go_left], n_classes, depth + 1, max_depth, min_leaf)
    return node


def _prune(node: _Node, X: np.ndarray, y: np.ndarray) -> int:
    """Reduced-error pruning; returns the subtree's error count on (X, y).

    A node is collapsed to a leaf whenever that does not increase the
    held-out error (ties prune, favoring the smaller tree).
    """
    leaf_errors = int((y != node.label).sum())
    if node.is_leaf:
        return leaf_errors
    go_left = X[:, node.feature] <= node.threshold
    subtree_errors = _prune(node.left, X[go_left], y[go_left]) + _prune(
        node.right, X[~go_left], y[~go_left]
    )
    if leaf_errors <= subtree_errors:
        node.left = node.right = None
        return leaf_errors
    return subtree_errors


def _paths(node: _Node, prefix: tuple[Condition, ...] = ()) -> list[tuple[tuple[Condition, ...], int, int]]:
    if node.is_leaf:
        return [(prefix, node.label, int(node.counts.sum()))]
    left = _paths(node.left, prefix + (Condition(node.feature, "<=", node.threshold),))
    right = _paths(node.right, prefix + (Condition(node.feature, ">", node.threshold),))
    return left + right


def _build_pruned_tree(
    X: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    seed: int,
    max_depth: int,
    min_leaf: int,
    prune_fraction: float = 0.3,
) -> _Node:
    n = len(y)
    rng = np.random.default_rng(seed)
    if n >= 10 and prune_fraction > 0 and len(np.unique(y)) > 1:
        idx = rng.permutation(n)
        n_prune = max(int(n * prune_fraction), 1)
        prune_idx, grow_idx = idx[:n_prune], idx[n_prune:]
        root = _grow(X[grow_idx], y[grow_idx], n_classes, 0, max_depth, min_leaf)
        _prune(root, X[prune_idx], y[prune_idx])
    else:
        root = _grow(X, y, n_classes, 0, max_depth, min_leaf)
    return root


def induce_decision_tree(
    X: np.ndarray,
    y: np.ndarray,
    seed: int = 0,
    max_depth: int = 25,
    min_leaf: int = 2,
) -> InducedRuleSet:
    """Gain-ratio tree with reduced-error pruning, flattened to rules.

    The rule set partitions the feature space: every instance matches
    exactly one rule. Misclassification is counted on the full input.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    n_classes = int(y.max()) + 1 if len(y) else 1
    root = _build_pruned_tree(X, y, n_classes, seed, max_depth, min_leaf)
    rules = [
        ClassificationRule(conds, label, cover)
        for conds, label, cover in _paths(root)
    ]
    ruleset = InducedRuleSet(RuleAlgorithm.DECISION_TREE, rules, 0)
    ruleset.misclassified = int((ruleset.predict(X) != y).sum())
    return ruleset


def induce_decision_list(
    X: np.ndarray,
    y: np.ndarray,
    seed: int = 0,
    max_depth: int = 25,
    min_leaf: int = 2,
) -> InducedRuleSet:
    """Separate-and-conquer rule list ending in a total default rule."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    n_classes = int(y.max()) + 1 if len(y) else 1
    majority_all = int(np.bincount(y, minlength=n_classes).argmax()) if len(y) else 0
    rules: list[ClassificationRule] = []
    remaining = np.arange(len(y))
    round_no = 0
    while len(remaining) > 0:
        ry = y[remaining]
        if len(np.unique(ry)) == 1:
            break
        root = _build_pruned_tree(
            X[remaining], ry, n_classes, seed + round_no, max_depth, min_leaf
        )
        if root.is_leaf:
            break
        paths = _paths(root)
        # Coverage is re-counted on the live remaining set, then the
        # best-covering leaf becomes the next rule.
        best_rule = None
        best_cover: np.ndarray | None = None
        for conds, label, _ in paths:
            rule = ClassificationRule(conds, label)
            cover = rule.mask(X[remaining])
            n_cover = int(cover.sum())
            if best_cover is None or n_cover > int(best_cover.sum()):
                best_rule = ClassificationRule(conds, label, n_cover)
                best_cover = cover
        assert best_rule is not None and best_cover is not None
        if not best_cover.any():
            break
        rules.append(best_rule)
        remaining = remaining[~best_cover]
        round_no += 1
    if len(remaining) > 0:
        default_label = int(np.bincount(y[remaining], minlength=n_classes).argmax())
    else:
        default_label = majority_all
    rules.append(ClassificationRule((), default_label, len(remaining)))
    ruleset = InducedRuleSet(RuleAlgorithm.DECISION_LIST, rules, 0)
    ruleset.misclassified = int((ruleset.predict(X) != y).sum())
    return ruleset


def select_best(candidates: list[InducedRuleSet]) -> InducedRuleSet:
    """Minimal training misclassification; ties go to the smaller set,
    then to the decision list."""
    if not candidates:
        raise ValueError("no candidates")
    return min(
        candidates,
        key=lambda rs: (
            rs.misclassified,
            rs.n_rules,
            0 if rs.algorithm is RuleAlgorithm.DECISION_LIST else 1,
        ),
    )
