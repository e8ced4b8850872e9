"""Channel message trees: the unit of recording and differential analysis.

A message payload is a finite tree. Leaves hold numbers, strings, or
booleans; interior nodes hold an ordered sequence of labeled children. Child
order is stable across serialization, so positional comparison of two
messages from the same channel is meaningful.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Union


@dataclass(frozen=True)
class Leaf:
    value: Union[int, float, str, bool]


@dataclass(frozen=True)
class Node:
    children: tuple[tuple[str, "Tree"], ...]

    def child(self, label: str) -> "Tree":
        for lbl, sub in self.children:
            if lbl == label:
                return sub
        raise KeyError(label)


Tree = Union[Leaf, Node]


def leaf(value) -> Leaf:
    return Leaf(value)


def node(*children: tuple[str, Tree]) -> Node:
    return Node(tuple(children))


def list_node(label_prefix: str, items: list[Tree]) -> Node:
    """Node whose children are an ordered list, labeled by index."""
    return Node(tuple((f"{label_prefix}{i}", item) for i, item in enumerate(items)))


@dataclass(frozen=True)
class ChannelMessage:
    channel: str
    timestamp: float
    seq: int
    tree: Tree


def tree_to_obj(tree: Tree):
    if isinstance(tree, Leaf):
        return {"l": tree.value}
    return {"n": [[label, tree_to_obj(sub)] for label, sub in tree.children]}


def tree_from_obj(obj) -> Tree:
    if not isinstance(obj, dict):
        raise ValueError(f"malformed tree object: {obj!r}")
    if "l" in obj:
        return Leaf(obj["l"])
    if "n" in obj:
        return Node(tuple((str(label), tree_from_obj(sub)) for label, sub in obj["n"]))
    raise ValueError(f"malformed tree object: {obj!r}")


def tree_size(tree: Tree) -> int:
    if isinstance(tree, Leaf):
        return 1
    return 1 + sum(tree_size(sub) for _, sub in tree.children)
