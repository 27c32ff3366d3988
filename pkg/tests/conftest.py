import numpy as np
import pytest

from shapecone.builtins import bipyramid, parse_builtin, perturbed_bipyramid
from shapecone.config import gale_dual

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"Criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def G_bipyramid():
    return gale_dual(bipyramid())


@pytest.fixture(scope="session")
def G_box():
    return gale_dual(parse_builtin("parallelepiped"))


@pytest.fixture(scope="session")
def G_pentagon():
    return gale_dual(parse_builtin("ngon(5)"))


@pytest.fixture(scope="session")
def G_perturbed():
    return gale_dual(perturbed_bipyramid(seed=3, magnitude=0.05))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_positively_spanning(rng, n, d=3, tries=200):
    """n random unit vectors in R^d that positively span it."""
    from shapecone.config import VectorConfiguration, is_positively_spanning
    for _ in range(tries):
        V = rng.standard_normal((n, d))
        V /= np.linalg.norm(V, axis=1, keepdims=True)
        try:
            cfg = VectorConfiguration.from_rows(V, exact=False)
        except Exception:
            continue
        if is_positively_spanning(cfg):
            return cfg
    raise RuntimeError("no positively spanning configuration found")


def random_simple_polytope(rng, n, d=3, tries=200):
    """A simple polytope P(V, h) with all n inequalities facet-defining."""
    from shapecone.polytope import solve_polytope
    for _ in range(tries):
        cfg = random_positively_spanning(rng, n, d)
        h = 1.0 + 0.3 * rng.random(n)
        try:
            P = solve_polytope(cfg.Vf, h)
        except Exception:
            continue
        if len(P.facets) == n and P.is_simple and P.dim == d:
            return cfg, h, P
    raise RuntimeError("no simple polytope found")
