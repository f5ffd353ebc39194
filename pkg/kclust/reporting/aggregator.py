import statistics
from collections import defaultdict
from typing import Any, Dict, List, Sequence


def timing_stats(samples: Sequence[float]) -> Dict[str, float]:
    """Median, p95 (nearest-rank on the sorted sample), mean and population std."""
    if not samples:
        return {"median": 0.0, "p95": 0.0, "avg": 0.0, "std": 0.0}
    ordered = sorted(samples)

    def percentile(p: float) -> float:
        return ordered[int(round((p / 100.0) * (len(ordered) - 1)))]

    return {
        "median": statistics.median(ordered),
        "p95": percentile(95),
        "avg": sum(ordered) / len(ordered),
        "std": statistics.pstdev(ordered) if len(ordered) > 1 else 0.0,
    }


def summarise_bench(rows: List[Dict[str, Any]]) -> List[Dict[str, Any]]:
    """
    One summary row per size from `size,run,seconds,cost` rows, plus the
    ratio of each size's median time to the previous size's.
    """
    groups: Dict[int, List[Dict[str, Any]]] = defaultdict(list)
    for row in rows:
        groups[int(row["size"])].append(row)

    summary: List[Dict[str, Any]] = []
    previous = None
    for size in sorted(groups):
        group = groups[size]
        stats = timing_stats([float(r["seconds"]) for r in group])
        summary.append(
            {
                "size": size,
                "runs": len(group),
                "median_seconds": stats["median"],
                "p95_seconds": stats["p95"],
                "std_seconds": stats["std"],
                "median_cost": statistics.median(float(r["cost"]) for r in group),
                "time_ratio": (
                    stats["median"] / previous if previous else None
                ),
            }
        )
        previous = stats["median"]
    return summary
