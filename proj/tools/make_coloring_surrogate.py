"""Writes a deterministic 120-vertex, 638-edge graph with a planted 9-coloring.

Vertices form 13 cliques of 9 ("conferences", one vertex per hidden color)
plus 3 loose vertices; the remaining edges join random vertex pairs with
different hidden colors. Chromatic number is exactly 9.
"""
import random
import sys

VERTICES, EDGES, COLORS, GROUPS = 120, 638, 9, 13


def build(seed=120):
    rng = random.Random(seed)
    order = list(range(VERTICES))
    rng.shuffle(order)
    hidden = {}
    edges = set()
    for g in range(GROUPS):
        members = order[g * COLORS:(g + 1) * COLORS]
        for c, v in enumerate(members):
            hidden[v] = c
        for a in range(COLORS):
            for b in range(a + 1, COLORS):
                edges.add((min(members[a], members[b]), max(members[a], members[b])))
    for v in order[GROUPS * COLORS:]:
        hidden[v] = rng.randrange(COLORS)
    while len(edges) < EDGES:
        u, v = rng.randrange(VERTICES), rng.randrange(VERTICES)
        if u != v and hidden[u] != hidden[v]:
            edges.add((min(u, v), max(u, v)))
    return sorted(edges)


def main(path):
    edges = build()
    with open(path, "w", newline="\n") as f:
        f.write("c games120-like surrogate: planted 9-coloring, 13 cliques of 9\n")
        f.write(f"p edge {VERTICES} {len(edges)}\n")
        for u, v in edges:
            f.write(f"e {u + 1} {v + 1}\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "games120_surrogate.col")
