"""Groups of variables and the structures (partition / tree) built from them.

A group is a set of coordinate indices with a positive weight. Group
penalties sum weighted norms over the groups of a structure. Partition
structures cover every coordinate exactly once; tree structures allow
nesting (two groups are either disjoint or one contains the other) and
store the groups in an order where each group precedes every group that
strictly contains it, which is the order its proximal operator composes in.
"""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import InvalidGroupStructure, NonPositiveParameter

PARTITION = "partition"
TREE = "tree"


@dataclass(frozen=True)
class Group:
    """A sorted set of coordinate indices with a positive weight."""

    indices: tuple
    weight: float = 1.0

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        object.__setattr__(self, "indices", idx)
        if len(idx) == 0:
            raise InvalidGroupStructure("group has no indices")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise InvalidGroupStructure(
                "group indices must be strictly increasing: %r" % (idx,)
            )
        if idx[0] < 0:
            raise InvalidGroupStructure("group indices must be nonnegative")
        w = float(self.weight)
        if not np.isfinite(w) or w <= 0:
            raise NonPositiveParameter("group weight must be positive, got %r" % w)
        object.__setattr__(self, "weight", w)

    def __len__(self):
        return len(self.indices)

    @property
    def index_array(self):
        return np.asarray(self.indices, dtype=np.intp)


@dataclass(frozen=True)
class GroupStructure:
    """An ordered list of groups over ``p`` coordinates.

    Parameters
    ----------
    groups : sequence of Group
    kind : {"partition", "tree"}
    p : int
        Ambient dimension; all group indices must lie in ``[0, p)``.
    """

    groups: tuple
    kind: str
    p: int
    _sets: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        groups = tuple(
            g if isinstance(g, Group) else Group(*g) for g in self.groups
        )
        object.__setattr__(self, "groups", groups)
        object.__setattr__(self, "_sets", tuple(frozenset(g.indices) for g in groups))
        if self.kind not in (PARTITION, TREE):
            raise InvalidGroupStructure("unknown structure kind %r" % (self.kind,))
        p = int(self.p)
        object.__setattr__(self, "p", p)
        if p < 1:
            raise InvalidGroupStructure("dimension p must be >= 1")
        if not groups:
            raise InvalidGroupStructure("structure has no groups")
        for g in groups:
            if g.indices[-1] >= p:
                raise InvalidGroupStructure(
                    "group index %d out of range for p=%d" % (g.indices[-1], p)
                )
        if self.kind == PARTITION:
            self._check_partition()
        else:
            self._check_tree()

    def _check_partition(self):
        seen = np.zeros(self.p, dtype=bool)
        for g in self.groups:
            idx = g.index_array
            if seen[idx].any():
                raise InvalidGroupStructure("partition groups overlap")
            seen[idx] = True
        if not seen.all():
            missing = int(np.flatnonzero(~seen)[0])
            raise InvalidGroupStructure(
                "partition does not cover index %d" % missing
            )

    def _check_tree(self):
        sets = self._sets
        m = len(sets)
        for i in range(m):
            for j in range(i + 1, m):
                a, b = sets[i], sets[j]
                inter = a & b
                if not inter:
                    continue
                if inter != a and inter != b:
                    raise InvalidGroupStructure(
                        "tree groups %d and %d overlap without nesting" % (i, j)
                    )
                # the stored order must put contained groups first
                if a > b:
                    raise InvalidGroupStructure(
                        "group %d strictly contains group %d but precedes it"
                        % (i, j)
                    )

    def __len__(self):
        return len(self.groups)

    def __iter__(self):
        return iter(self.groups)

    def is_partition_shaped(self):
        """True when the groups are pairwise disjoint and cover [0, p)."""
        seen = np.zeros(self.p, dtype=bool)
        for g in self.groups:
            idx = g.index_array
            if seen[idx].any():
                return False
            seen[idx] = True
        return bool(seen.all())

    def coverage_counts(self):
        """How many groups contain each coordinate."""
        counts = np.zeros(self.p, dtype=np.intp)
        for g in self.groups:
            counts[g.index_array] += 1
        return counts


def singleton_structure(p, weights=None):
    """Partition of [0, p) into singletons; weighted L1 as a group penalty."""
    if weights is None:
        weights = np.ones(p)
    weights = np.asarray(weights, dtype=float)
    groups = tuple(Group((j,), weights[j]) for j in range(p))
    return GroupStructure(groups, PARTITION, p)
