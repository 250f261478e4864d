# models/gwtree.py
"""Offspring laws, conditioned Galton-Watson trees and reduced subtrees.

Vertices are indexed in depth-first (preorder) order, so every parent index is
smaller than its children's and the root is vertex 0.
"""
import csv
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property, reduce

import numpy as np
from scipy import stats as sps

from utils.validators import ContractViolation, UnattainableSizeError, ValidationError

logger = logging.getLogger(__name__)

ROOT_SENTINEL = -1
POISSON_TRUNCATION = 64
GEOMETRIC_TRUNCATION = 64
REJECTION_CAP = 10 ** 6

SUM_TOLERANCE = 1e-12
MEAN_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class OffspringLaw:
    pmf: np.ndarray
    mean: float
    sigma: float
    name: str = 'explicit'
    metadata: dict = field(default_factory=dict)

    @cached_property
    def period(self):
        """gcd of the support; a tree on n vertices exists iff it divides n - 1."""
        support = np.flatnonzero(self.pmf > 0)
        return int(reduce(math.gcd, support.tolist(), 0))

    def is_attainable(self, n):
        return n == 1 or (self.period > 0 and (n - 1) % self.period == 0)


def _validated_law(pmf, name, metadata=None, renormalize=False):
    pmf = np.asarray(pmf, dtype=float)
    if pmf.ndim != 1 or pmf.size == 0:
        raise ValidationError('offspring pmf must be a non-empty list of probabilities')
    if np.any(pmf < 0) or not np.all(np.isfinite(pmf)):
        raise ValidationError('offspring pmf entries must be finite and non-negative')
    total = pmf.sum()
    if renormalize:
        pmf = pmf / total
    elif abs(total - 1.0) > SUM_TOLERANCE:
        raise ValidationError(f'offspring pmf sums to {total!r}, not 1')

    values = np.arange(pmf.size)
    mean = float(np.dot(values, pmf))
    if abs(mean - 1.0) > MEAN_TOLERANCE:
        raise ValidationError(f'offspring law is not critical: mean = {mean!r}')
    sigma_sq = float(np.dot(values * (values - 1), pmf))
    if not math.isfinite(sigma_sq) or sigma_sq <= 0:
        raise ValidationError('offspring law must have finite, strictly positive variance')

    return OffspringLaw(
        pmf=pmf,
        mean=mean,
        sigma=math.sqrt(sigma_sq),
        name=name,
        metadata=dict(metadata or {}),
    )


def make_offspring_law(law):
    """
    Build a validated critical offspring law.

    Args:
        law: One of ``"binary"``, ``"geometric-half"``, ``"poisson"``
            (Poisson(1) truncated at 64), a dict ``{"name": ..., "truncation": P}``
            or ``{"pmf": [...]}``, or an explicit pmf sequence.

    Returns:
        OffspringLaw: Law with computed mean and sigma.

    Raises:
        ValidationError: Unknown name, non-critical pmf or zero variance.
    """
    if isinstance(law, OffspringLaw):
        return law

    truncation = None
    if isinstance(law, dict):
        if 'pmf' in law:
            return _validated_law(law['pmf'], law.get('name', 'explicit'))
        truncation = law.get('truncation')
        law = law['name']

    if not isinstance(law, str):
        return _validated_law(law, 'explicit')

    name = law.lower()
    if name == 'binary':
        return _validated_law([0.5, 0.0, 0.5], 'binary')

    if name in ('geometric-half', 'geometric'):
        top = truncation or GEOMETRIC_TRUNCATION
        values = np.arange(top + 1)
        pmf = 0.5 ** (values + 1)
        tail = 0.5 ** (top + 1)
        return _validated_law(pmf, 'geometric-half', {'truncation': top, 'truncation_error': tail},
                              renormalize=True)

    if name in ('poisson', 'poisson-1-truncated'):
        top = truncation or POISSON_TRUNCATION
        values = np.arange(top + 1)
        pmf = sps.poisson.pmf(values, 1.0)
        tail = float(sps.poisson.sf(top, 1.0))
        return _validated_law(pmf, 'poisson-1-truncated', {'truncation': top, 'truncation_error': tail},
                              renormalize=True)

    raise ValidationError(f'unknown offspring law: {law!r}')


@dataclass(frozen=True, eq=False)
class RootedTree:
    n: int
    parent: np.ndarray
    offspring: np.ndarray
    depth: np.ndarray
    root: int = 0

    @cached_property
    def children(self):
        """Child lists; in preorder the children of v are listed in index order."""
        order = np.argsort(self.parent[1:], kind='stable') + 1
        bounds = np.concatenate([[0], np.cumsum(self.offspring)])
        return [order[bounds[v]:bounds[v + 1]] for v in range(self.n)]

    @cached_property
    def levels(self):
        """Vertex indices grouped by depth, shallowest first."""
        order = np.argsort(self.depth, kind='stable')
        cuts = np.flatnonzero(np.diff(self.depth[order])) + 1
        return np.split(order, cuts)

    @property
    def height(self):
        return int(self.depth.max())


def tree_from_offspring(offspring):
    """
    Decode a preorder offspring sequence (a valid Lukasiewicz word) into a tree.

    Args:
        offspring (array): Child counts in depth-first order.

    Returns:
        RootedTree: The decoded tree.

    Raises:
        ContractViolation: The sequence does not encode a single tree.
    """
    offspring = np.asarray(offspring, dtype=np.int64)
    n = offspring.size
    if n == 0 or offspring.sum() != n - 1:
        raise ContractViolation('offspring counts must sum to n - 1')

    parent = np.full(n, ROOT_SENTINEL, dtype=np.int64)
    depth = np.zeros(n, dtype=np.int64)
    counts = offspring.tolist()
    # explicit stack of (vertex, children still to attach)
    stack = [[0, counts[0]]] if counts[0] > 0 else []
    for v in range(1, n):
        if not stack:
            raise ContractViolation('offspring sequence closes the tree early')
        top = stack[-1]
        parent[v] = top[0]
        depth[v] = depth[top[0]] + 1
        top[1] -= 1
        if top[1] == 0:
            stack.pop()
        if counts[v] > 0:
            stack.append([v, counts[v]])
    if stack:
        raise ContractViolation('offspring sequence leaves open slots')

    return RootedTree(n=n, parent=parent, offspring=offspring, depth=depth)


def lukasiewicz_walk(tree):
    """Partial sums of ``offspring - 1`` in preorder; ends at -1 for a valid tree."""
    return np.cumsum(tree.offspring - 1)


def cycle_lemma_rotation(offspring):
    """Rotate a sequence with ``sum(c - 1) = -1`` into the unique valid tree encoding."""
    walk = np.cumsum(np.asarray(offspring) - 1)
    start = (int(np.argmin(walk)) + 1) % walk.size
    return np.roll(offspring, -start)


def sample_conditioned_gw(law, n, rng, rejection_cap=REJECTION_CAP):
    """
    Sample a Galton-Watson tree conditioned to have exactly ``n`` vertices.

    Offspring counts are drawn i.i.d. from the law, conditioned by rejection on
    summing to ``n - 1``; each round draws the count histogram as one
    multinomial and accepted multisets are shuffled uniformly. The cycle lemma
    then rotates the sequence into a valid preorder encoding.

    Args:
        law (OffspringLaw): Critical offspring law.
        n (int): Number of vertices.
        rng (numpy.random.Generator): Random stream.
        rejection_cap (int): Maximum number of rejection rounds.

    Returns:
        RootedTree: The sampled tree.

    Raises:
        UnattainableSizeError: Parity excludes ``n``, or the cap was exhausted.
    """
    if n < 1:
        raise ContractViolation('tree size must be >= 1')
    if n == 1:
        return tree_from_offspring([0])
    if not law.is_attainable(n):
        raise UnattainableSizeError(n, f'offspring support has period {law.period}')

    values = np.arange(law.pmf.size)
    for attempt in range(1, rejection_cap + 1):
        histogram = rng.multinomial(n, law.pmf)
        if int(np.dot(values, histogram)) == n - 1:
            break
    else:
        raise UnattainableSizeError(n, f'no acceptance in {rejection_cap} rejection rounds')

    logger.debug(f"Conditioned GW tree n={n} accepted after {attempt} rounds")
    sequence = rng.permutation(np.repeat(values, histogram))
    return tree_from_offspring(cycle_lemma_rotation(sequence))


def enumerate_trees(law, n):
    """
    Enumerate every plane tree on ``n`` vertices allowed by the law.

    Args:
        law (OffspringLaw): Offspring law.
        n (int): Vertex count (keep it small; the count grows like Catalan numbers).

    Returns:
        list: ``(RootedTree, probability)`` pairs, probabilities conditional on size n.
    """
    support = np.flatnonzero(law.pmf > 0).tolist()
    words = []

    def extend(prefix, open_slots):
        remaining = n - len(prefix)
        if remaining == 0:
            if open_slots == 0:
                words.append(list(prefix))
            return
        if open_slots == 0 or open_slots > remaining:
            return
        for c in support:
            prefix.append(c)
            extend(prefix, open_slots - 1 + c)
            prefix.pop()

    for c in support:
        extend([c], c)

    weights = np.array([np.prod(law.pmf[word]) for word in words])
    total = weights.sum()
    return [(tree_from_offspring(word), float(w / total)) for word, w in zip(words, weights)]


def vertex_heights(tree):
    """Number of vertices on the path from the root to each vertex (root: 1)."""
    return tree.depth + 1


def sample_uniform_vertices(tree, p, rng):
    """Draw ``p`` i.i.d. uniform vertices of the tree."""
    return rng.integers(0, tree.n, size=p)


@dataclass(frozen=True)
class ReducedSubtree:
    vertex_count: int
    member_flags: np.ndarray
    marked_points: tuple


def reduced_subtree(tree, points):
    """
    Smallest subtree containing the root and the given vertices.

    Args:
        tree (RootedTree): Host tree.
        points (list): Vertex indices; may be empty (the result is then ``{root}``).

    Returns:
        ReducedSubtree: Membership flags and the vertex count ``#R``.
    """
    members = np.zeros(tree.n, dtype=bool)
    members[tree.root] = True
    parent = tree.parent
    for point in points:
        v = int(point)
        if not 0 <= v < tree.n:
            raise ContractViolation(f'vertex index {v} outside 0..{tree.n - 1}')
        while not members[v]:
            members[v] = True
            v = parent[v]
    return ReducedSubtree(
        vertex_count=int(members.sum()),
        member_flags=members,
        marked_points=tuple(int(p) for p in points),
    )


def scaled_reduced_length(tree, points, sigma):
    """Discrete proxy ``sigma / sqrt(n) * #R`` for the length of the reduced tree."""
    reduced = points if isinstance(points, ReducedSubtree) else reduced_subtree(tree, points)
    return sigma * reduced.vertex_count / math.sqrt(tree.n)


def dump_parent_csv(tree, path):
    """Write the tree as one CSV line: n followed by the n parent indices."""
    with open(path, 'w', newline='') as handle:
        csv.writer(handle, lineterminator='\n').writerow([tree.n] + tree.parent.tolist())


def load_parent_csv(path):
    """Read a tree written by :func:`dump_parent_csv`."""
    with open(path, newline='') as handle:
        row = [int(cell) for cell in next(csv.reader(handle))]
    n, parent = row[0], np.array(row[1:], dtype=np.int64)
    if parent.size != n or parent[0] != ROOT_SENTINEL:
        raise ContractViolation(f'{path} is not a parent-array dump')
    offspring = np.bincount(parent[1:], minlength=n)
    return tree_from_offspring(offspring)
