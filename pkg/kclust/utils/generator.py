import numpy as np

from exceptions import ParameterError
from schemas.instance import Instance

DISTRIBUTIONS = ("uniform", "clustered")

# side of the sampling box and relative spread of the clustered mode
BOX = 100.0
SPREAD = 0.03


def _sample(rng: np.random.Generator, count: int, d: int, dist: str, centers: np.ndarray) -> np.ndarray:
    if dist == "uniform":
        return rng.uniform(0.0, BOX, size=(count, d))
    owners = rng.integers(len(centers), size=count)
    return centers[owners] + rng.normal(0.0, SPREAD * BOX, size=(count, d))


def generate_instance(
    n: int, m: int, k: int, d: int, z: int, seed: int, dist: str = "uniform"
) -> Instance:
    """
    Random instance in [0, 100)^d. The clustered mode draws k ground-truth
    centers uniformly and places points with Gaussian noise around them;
    candidates follow the same distribution as clients.

    Raises:
        ParameterError: For non-positive sizes, k > m, z not in {1, 2} or an
            unknown distribution.
    """
    for name, value in (("n", n), ("m", m), ("k", k), ("d", d)):
        if value < 1:
            raise ParameterError(name, f"must be positive, got {value}")
    if k > m:
        raise ParameterError("k", f"must not exceed m={m}, got {k}")
    if z not in (1, 2):
        raise ParameterError("z", f"must be 1 or 2, got {z}")
    if dist not in DISTRIBUTIONS:
        raise ParameterError("dist", f"must be one of {DISTRIBUTIONS}, got {dist!r}")
    rng = np.random.default_rng(seed)
    truth = rng.uniform(0.0, BOX, size=(k, d))
    clients = _sample(rng, n, d, dist, truth)
    candidates = _sample(rng, m, d, dist, truth)
    return Instance(dimension=d, clients=clients, candidates=candidates, k=k, objective_z=z)
