import re

import pytest

from graphpulse.corpus import program_source
from graphpulse.graph import from_edge_tuples
from graphpulse.graphio import gen_path, gen_two_triangles, gen_uniform
from graphpulse.parser import parse


@pytest.fixture
def toy_graph():
    # edges {0->1 w2, 0->2 w5, 1->2 w1}
    return from_edge_tuples(3, [(0, 1, 2), (0, 2, 5), (1, 2, 1)])


@pytest.fixture
def path8():
    return gen_path(8)


@pytest.fixture
def path64():
    return gen_path(64)


@pytest.fixture
def two_triangles():
    return gen_two_triangles()


@pytest.fixture
def ur100():
    return gen_uniform(100, 600, seed=9)


def load_ast(name):
    return parse(program_source(name), f"{name}.sp")


FRESH_NAME_RE = re.compile(r"_(?:t|fin|b|c)\d+")


def normalize_fresh_names(text: str) -> str:
    """Rename pass-generated identifiers by first occurrence so structural
    comparison ignores counter numbering."""
    mapping: dict[str, str] = {}

    def sub(match):
        name = match.group(0)
        if name not in mapping:
            mapping[name] = f"@fresh{len(mapping)}"
        return mapping[name]

    return FRESH_NAME_RE.sub(sub, text)
