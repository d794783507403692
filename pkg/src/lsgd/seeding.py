"""Deterministic seed derivation for nested training tasks.

Every parallel unit (block, cluster, one-vs-rest class) gets a seed that is a
pure function of the run seed and the unit's index, so results never depend on
worker scheduling.
"""

_MASK64 = (1 << 64) - 1

# ascii "kmeans", xor'd in so partitioning never shares a stream with SGD
_KMEANS_TAG = 0x6B6D65616E73


def splitmix64(x: int) -> int:
    """One splitmix64 output step. Stable across platforms."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def class_seed(base: int, class_id: int) -> int:
    """Seed for the binary subproblem of one class."""
    return (base ^ splitmix64(class_id)) & _MASK64


def child_seed(base: int, index: int) -> int:
    """Seed for the index-th child task (a block of a stream, or a cluster of a block)."""
    return splitmix64((base & _MASK64) ^ splitmix64(index))


def kmeans_seed(base: int) -> int:
    """Seed for the partitioning step of a block, disjoint from SGD streams."""
    return splitmix64((base & _MASK64) ^ _KMEANS_TAG)
