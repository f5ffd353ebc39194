import numpy as np
import pytest

from schemas.instance import Instance


def make_instance(clients, candidates, k, z=2):
    clients = np.asarray(clients, dtype=float)
    return Instance(
        dimension=clients.shape[1],
        clients=clients,
        candidates=np.asarray(candidates, dtype=float),
        k=k,
        objective_z=z,
    )


def random_instance(seed, n=8, m=6, k=2, d=2, z=2, box=10.0):
    rng = np.random.default_rng(seed)
    return make_instance(
        rng.uniform(0.0, box, size=(n, d)), rng.uniform(0.0, box, size=(m, d)), k, z
    )


@pytest.fixture
def line_instance():
    """Two clients at 0 and 10 with candidates at 0, 10 and 5."""
    return make_instance([[0.0, 0.0], [10.0, 0.0]], [[0.0, 0.0], [10.0, 0.0], [5.0, 0.0]], k=1)


@pytest.fixture
def two_clusters():
    rng = np.random.default_rng(3)
    left = rng.uniform(0.0, 1.0, size=(5, 2))
    right = rng.uniform(0.0, 1.0, size=(5, 2)) + np.array([50.0, 0.0])
    clients = np.vstack([left, right])
    candidates = np.vstack([left[:3], right[:3]])
    return make_instance(clients, candidates, k=2)


@pytest.fixture
def single_thread(monkeypatch):
    from conf import settings

    monkeypatch.setattr(settings, "KCLUST_THREADS", 1)
