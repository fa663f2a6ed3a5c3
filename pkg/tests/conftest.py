import pytest

from weavergap import setsplit


@pytest.fixture(scope="session")
def gadget():
    return setsplit.equality_gadget(1, 2, 3)


@pytest.fixture(scope="session")
def gadget_instance(gadget):
    return setsplit.SetSplitInstance(n_vars=15, sets=gadget.sets)


@pytest.fixture(scope="session")
def one_set_instance():
    return setsplit.SetSplitInstance(n_vars=4, sets=((1, 2, 3, 4),))


@pytest.fixture(scope="session")
def unsat_322_instance():
    """A seeded random (3,2-2) instance verified unsatisfiable by search."""
    from weavergap import generate

    inst, _ = generate.search_unsat_322(13, 9, seed=0, attempts=100, cap=20)
    assert inst is not None
    return inst


def all_gadget_solutions(inst):
    """Exhaustive satisfying assignments of a 15-variable instance."""
    out = []
    for code in range(1 << 15):
        x = [1 if (code >> i) & 1 else -1 for i in range(15)]
        if setsplit.unsatisfied_count(inst, x) == 0:
            out.append(tuple(x))
    return out
