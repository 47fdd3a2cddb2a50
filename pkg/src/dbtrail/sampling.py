"""Weighted random selection over a growing set of slots.

Classic binary sum tree: leaves hold weights, internal nodes hold subtree
sums. add/update/sample are all O(log n), which is what keeps tip selection
cheap as the navigation tree grows.
"""

from __future__ import annotations


class SumTree:
    def __init__(self, capacity: int = 16) -> None:
        self._capacity = max(1, capacity)
        self._tree = [0.0] * (2 * self._capacity)
        self._size = 0

    def __len__(self) -> int:
        return self._size

    @property
    def total(self) -> float:
        return self._tree[1]

    def add(self, weight: float) -> int:
        """Append a slot with the given weight; returns its index."""
        if self._size == self._capacity:
            self._grow()
        slot = self._size
        self._size += 1
        self.update(slot, weight)
        return slot

    def update(self, slot: int, weight: float) -> None:
        if not (0 <= slot < self._size):
            raise IndexError(f"slot {slot} out of range")
        if weight < 0.0:
            raise ValueError("weights must be non-negative")
        i = slot + self._capacity
        delta = weight - self._tree[i]
        while i >= 1:
            self._tree[i] += delta
            i //= 2

    def weight(self, slot: int) -> float:
        return self._tree[slot + self._capacity]

    def sample(self, u: float) -> int:
        """Slot index for u in [0, 1), proportional to slot weights."""
        if self.total <= 0.0:
            raise ValueError("cannot sample from an all-zero tree")
        target = u * self.total
        i = 1
        while i < self._capacity:
            left = 2 * i
            if target < self._tree[left]:
                i = left
            else:
                target -= self._tree[left]
                i = left + 1
        slot = i - self._capacity
        # Float drift can land on a zero-weight slot at segment boundaries;
        # step to the nearest positive slot.
        while slot < self._size and self._tree[slot + self._capacity] <= 0.0:
            slot += 1
        if slot >= self._size:
            slot = max(s for s in range(self._size) if self._tree[s + self._capacity] > 0.0)
        return slot

    def _grow(self) -> None:
        old_capacity, old_tree = self._capacity, self._tree
        self._capacity *= 2
        self._tree = [0.0] * (2 * self._capacity)
        for slot in range(self._size):
            self._tree[slot + self._capacity] = old_tree[slot + old_capacity]
        for i in range(self._capacity - 1, 0, -1):
            self._tree[i] = self._tree[2 * i] + self._tree[2 * i + 1]
