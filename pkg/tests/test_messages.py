import random

from crashlab.messages import (Leaf, Node, leaf, list_node, node, tree_from_obj,
                               tree_size, tree_to_obj)


def test_round_trip_simple():
    t = node(("a", leaf(1.5)), ("b", leaf("hi")), ("c", leaf(True)))
    assert tree_from_obj(tree_to_obj(t)) == t


def test_round_trip_preserves_order_and_structure():
    t = node(
        ("first", list_node("i", [leaf(0.25), leaf(-3)])),
        ("second", node(("deep", node(("x", leaf(False)))))),
    )
    obj = tree_to_obj(t)
    back = tree_from_obj(obj)
    assert back == t
    assert [label for label, _ in back.children] == ["first", "second"]


def test_round_trip_random_trees():
    rng = random.Random(0)

    def rand_tree(depth):
        if depth == 0 or rng.random() < 0.3:
            return leaf(rng.choice([0.1, 2, "s", True, -7.25]))
        return Node(tuple((f"k{i}", rand_tree(depth - 1))
                          for i in range(rng.randint(1, 4))))

    for _ in range(100):
        t = rand_tree(4)
        assert tree_from_obj(tree_to_obj(t)) == t


def test_tree_size():
    t = node(("a", leaf(1)), ("b", list_node("i", [leaf(2), leaf(3)])))
    assert tree_size(t) == 5
