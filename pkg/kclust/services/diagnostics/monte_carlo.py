from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, Sequence, TypeVar, Union

from conf import settings
from core.logging_config import get_logger
from exceptions import ParameterError
from schemas.reports import MonteCarloEstimate

logger = get_logger(__name__)

T = TypeVar("T")


def seed_range(seeds: Union[int, Iterable[int]], start: int = 0) -> List[int]:
    """An explicit seed list, or `seeds` consecutive seeds from start."""
    if isinstance(seeds, int):
        return list(range(start, start + seeds))
    return [int(s) for s in seeds]


def require_seeds(count: int, min_seeds: Optional[int] = None) -> None:
    """
    Raises:
        ParameterError: If count is below min_seeds (settings.MONTE_CARLO_MIN_SEEDS
            by default).
    """
    floor = settings.MONTE_CARLO_MIN_SEEDS if min_seeds is None else min_seeds
    if count < floor:
        raise ParameterError("seeds", f"need at least {floor}, got {count}")


def run_seeds(
    seeds: Sequence[int], fn: Callable[[int], T], threads: Optional[int] = None
) -> List[T]:
    """fn applied to every seed, results in seed order."""
    threads = min(threads or settings.KCLUST_THREADS, max(len(seeds), 1))
    if threads <= 1:
        return [fn(seed) for seed in seeds]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, seeds))


def sweep(
    seeds: Union[int, Iterable[int]],
    fn: Callable[[int], T],
    threads: Optional[int] = None,
    min_seeds: Optional[int] = None,
) -> List[T]:
    """fn over a seed family of at least min_seeds seeds, results in seed order."""
    seeds = seed_range(seeds)
    require_seeds(len(seeds), min_seeds)
    return run_seeds(seeds, fn, threads)


def estimate(outcomes: Sequence[bool]) -> MonteCarloEstimate:
    outcomes = tuple(bool(o) for o in outcomes)
    return MonteCarloEstimate(seeds=len(outcomes), hits=sum(outcomes), outcomes=outcomes)


def monte_carlo_columns(
    seeds: Union[int, Iterable[int]],
    answers: Callable[[int], Sequence[bool]],
    threads: Optional[int] = None,
    min_seeds: Optional[int] = None,
) -> List[MonteCarloEstimate]:
    """
    One estimate per position of a callable that answers several questions
    per seed; every call must return the same number of outcomes.

    Raises:
        ParameterError: If fewer seeds than min_seeds are given.
    """
    outcomes = sweep(seeds, answers, threads, min_seeds)
    width = len(outcomes[0]) if outcomes else 0
    columns = [estimate([row[j] for row in outcomes]) for j in range(width)]
    logger.debug(
        f"monte carlo: {len(columns)} questions over {len(outcomes)} seeds, "
        f"{sum(c.hits for c in columns)} hits"
    )
    return columns


def monte_carlo(
    seeds: Union[int, Iterable[int]],
    probe: Callable[[int], bool],
    threads: Optional[int] = None,
    min_seeds: Optional[int] = None,
) -> MonteCarloEstimate:
    """
    Frequency of a boolean probe over a seed family.

    Args:
        seeds: Number of seeds (0, 1, ...) or an explicit seed list.
        probe: Called once per seed.
        threads: Worker threads; settings.KCLUST_THREADS by default.
        min_seeds: Smallest accepted family; settings.MONTE_CARLO_MIN_SEEDS
            by default.

    Returns:
        Hits, frequency and binomial sigma; sigma is 0 when every outcome agrees.

    Raises:
        ParameterError: If fewer seeds than min_seeds are given.
    """
    (result,) = monte_carlo_columns(seeds, lambda seed: (probe(seed),), threads, min_seeds)
    return result
