"""
Instance Generator for the benchmark families
Creates house configuration (HCP) and 3-colouring (3CC) fact files.
"""

import os
import random
import sys
from typing import Iterable, List, Optional, Set

import networkx as nx

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
from stage1_program.parser import parse_facts
from stage1_program.syntax import Atom
from utils.config import Config
from utils.log import get_logger

logger = get_logger(__name__)

FAMILIES = ("hcp", "3cc")

# one block of the chain: N12 and N22 are forced to share a colour
_BLOCK_LINKS = (("n12", "n11"), ("n12", "n21"), ("n11", "n21"), ("n11", "n22"), ("n21", "n22"))


def _render(facts: Iterable[str]) -> str:
    return "".join(f"{fact}.\n" for fact in facts)


def gen_hcp(persons: int, things_per_person: int, cabinets: int, rooms: int, seed: int = 0) -> str:
    """
    Fact text of a house configuration instance.

    Args:
        persons: number of persons
        things_per_person: things owned by each person
        cabinets: size of the cabinet domain
        rooms: size of the room domain
        seed: shuffles which thing ids go to which person

    Returns:
        personTOthing/2, cabinetDomain/1 and roomDomain/1 facts, one per line
    """
    if min(persons, things_per_person, cabinets, rooms) < 1:
        raise ValueError("all counts must be at least 1")
    things = list(range(1, persons * things_per_person + 1))
    random.Random(seed).shuffle(things)

    facts = []
    for p in range(persons):
        for t in sorted(things[p * things_per_person:(p + 1) * things_per_person]):
            facts.append(f"personTOthing(p{p + 1},t{t})")
    facts.extend(f"cabinetDomain(c{c})" for c in range(1, cabinets + 1))
    facts.extend(f"roomDomain(r{r})" for r in range(1, rooms + 1))
    return _render(facts)


def chain_graph(chain_length: int, satisfiable: bool = True) -> nx.DiGraph:
    """
    Chain of 4-node blocks; each block's last node is the next block's first.

    When ``satisfiable`` is False an extra link joins the chain's first and
    last node, which are forced to share a colour.
    """
    if chain_length < 1:
        raise ValueError("chain_length must be at least 1")
    graph = nx.DiGraph()
    first = previous = ("n12", 0)
    for block in range(chain_length):
        names = {"n12": previous, "n11": ("n11", block), "n21": ("n21", block), "n22": ("n22", block)}
        graph.add_edges_from((names[a], names[b]) for a, b in _BLOCK_LINKS)
        previous = names["n22"]
    if not satisfiable:
        graph.add_edge(first, previous)
    return graph


def gen_3cc(chain_length: int, satisfiable: bool = True, seed: int = 0) -> str:
    """
    Fact text of a 3-colouring chain instance.

    Node names are a seeded permutation of n1..nk; facts are sorted, so the
    same arguments always give the same text.
    """
    graph = chain_graph(chain_length, satisfiable)
    nodes = sorted(graph.nodes, key=lambda n: (n[1], n[0]))
    labels = list(range(1, len(nodes) + 1))
    random.Random(seed).shuffle(labels)
    graph = nx.relabel_nodes(graph, {node: f"n{label}" for node, label in zip(nodes, labels)})
    return _render(sorted(f"link({u},{v})" for u, v in graph.edges))


def gen_random_graph(nodes: int, edge_probability: float, seed: int = 0) -> str:
    """Link facts of a seeded G(n, p) random graph, one direction per edge."""
    graph = nx.gnp_random_graph(nodes, edge_probability, seed=seed)
    return _render(sorted(f"link(n{u + 1},n{v + 1})" for u, v in graph.edges))


def validation_battery(family: str, count: int = 8, seed: int = 0) -> List[Set[Atom]]:
    """
    Tiny instances for reduction and soundness checks.

    HCP instances always include a person owning two things; 3CC instances
    mix short chains with small random graphs.
    """
    rng = random.Random(seed)
    texts: List[str] = []
    if family == "hcp":
        shapes = [(1, 2, 1, 1), (2, 1, 1, 1), (2, 1, 2, 1), (1, 2, 2, 1), (2, 1, 1, 2), (1, 1, 1, 1)]
        for index in range(count):
            texts.append(gen_hcp(*shapes[index % len(shapes)], seed=rng.randrange(1 << 16)))
    elif family == "3cc":
        texts.append(gen_3cc(1, True, seed))
        texts.append(gen_3cc(1, False, seed))
        while len(texts) < count:
            text = gen_random_graph(rng.randint(3, 6), 0.5, rng.randrange(1 << 16))
            if text:
                texts.append(text)
    else:
        raise ValueError(f"unknown family {family!r}, expected one of {', '.join(FAMILIES)}")
    return [parse_facts(text) for text in texts[:count]]


class InstanceGenerator:
    """Write benchmark instance files for one family."""

    def __init__(self, output_dir: Optional[str] = None):
        """Initialize instance generator."""
        self.output_dir = output_dir or Config.INSTANCES_DIR
        os.makedirs(self.output_dir, exist_ok=True)

    def write(self, name: str, text: str) -> str:
        """Write fact text to ``name`` in the output directory; returns the path."""
        path = os.path.join(self.output_dir, name)
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)
        logger.debug("Wrote %s", path)
        return path

    def hcp_family(self, count: int, seed: int = 0) -> List[str]:
        """
        Growing HCP instances: persons 2, 3, ... with 2-3 things each and
        one spare cabinet and room, so each stays satisfiable.
        """
        paths = []
        for index in range(count):
            persons = 2 + index
            things = 2 + index % 2
            cabinets = persons + 1
            rooms = persons + 1
            text = gen_hcp(persons, things, cabinets, rooms, seed + index)
            paths.append(self.write(f"hcp_{index + 1:03d}.asp", text))
        return paths

    def three_cc_family(self, count: int, min_length: int = 5, max_length: int = 50,
                        unsat_every: int = 5, seed: int = 0) -> List[str]:
        """Chains with lengths spread over [min_length, max_length]; every ``unsat_every``-th closed."""
        paths = []
        span = max(max_length - min_length, 0)
        for index in range(count):
            length = min_length + (span * index // max(count - 1, 1))
            satisfiable = not (unsat_every and (index + 1) % unsat_every == 0)
            text = gen_3cc(length, satisfiable, seed + index)
            suffix = "sat" if satisfiable else "unsat"
            paths.append(self.write(f"3cc_{index + 1:03d}_{length}_{suffix}.asp", text))
        return paths

    def family(self, family: str, count: int, seed: int = 0) -> List[str]:
        if family == "hcp":
            return self.hcp_family(count, seed)
        if family == "3cc":
            return self.three_cc_family(count, seed=seed)
        raise ValueError(f"unknown family {family!r}, expected one of {', '.join(FAMILIES)}")


def main():
    """Generate a small instance set for both families."""
    print("\nGenerating benchmark instances...")
    print("=" * 80 + "\n")

    generator = InstanceGenerator()
    for family in FAMILIES:
        paths = generator.family(family, 5)
        print(f"✓ {family}: {len(paths)} instances in {generator.output_dir}")

    print("\n✓ Instances generated successfully!")


if __name__ == "__main__":
    main()
