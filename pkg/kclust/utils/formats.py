"""
Line-oriented text formats for instances and solutions.

Instance file: '#' comment lines and blank lines are ignored; the first data
line holds "d n m k z", followed by n client lines and m candidate lines of d
coordinates each. Coordinates are written with 17 significant digits so that
parsing a rendered instance gives it back exactly.

Solution file: "cost <9 significant digits>", "centers <ascending 0-based
indices>", then optionally one "<client> <center>" line per client.
"""

import math
from typing import Iterator, List, Optional, Tuple

import numpy as np

from exceptions import ParseError
from schemas.instance import Instance, Solution


def _data_lines(text: str) -> Iterator[Tuple[int, List[str]]]:
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        yield number, stripped.split()


def _integer(token: str, line: int, name: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise ParseError(line, f"{name} must be an integer, got {token!r}") from None


def _coordinates(tokens: List[str], line: int, d: int) -> List[float]:
    if len(tokens) != d:
        raise ParseError(line, f"expected {d} coordinates, got {len(tokens)}")
    values = []
    for token in tokens:
        try:
            value = float(token)
        except ValueError:
            raise ParseError(line, f"not a number: {token!r}") from None
        if not math.isfinite(value):
            raise ParseError(line, f"non-finite coordinate {token!r}")
        values.append(value)
    return values


def parse_instance(text: str) -> Instance:
    """
    Parse an instance file.

    Raises:
        ParseError: On a malformed header, a count mismatch or a bad
            coordinate, naming the offending line.
    """
    lines = list(_data_lines(text))
    if not lines:
        raise ParseError(None, "missing header 'd n m k z'")
    header_line, header = lines[0]
    if len(header) != 5:
        raise ParseError(header_line, f"header needs 5 integers 'd n m k z', got {len(header)}")
    d, n, m, k, z = (
        _integer(t, header_line, name) for t, name in zip(header, ("d", "n", "m", "k", "z"))
    )
    if d < 1 or n < 1 or m < 1:
        raise ParseError(header_line, "d, n and m must be positive")
    if not 1 <= k <= m:
        raise ParseError(header_line, f"k must lie in [1, m={m}], got {k}")
    if z not in (1, 2):
        raise ParseError(header_line, f"z must be 1 or 2, got {z}")

    body = lines[1:]
    if len(body) != n + m:
        # short bodies point at the last data line
        boundary = body[n][0] if len(body) > n else lines[-1][0]
        raise ParseError(
            boundary,
            f"expected {n} client and {m} candidate lines, found {len(body)} data lines",
        )
    clients = [_coordinates(tokens, line, d) for line, tokens in body[:n]]
    candidates = [_coordinates(tokens, line, d) for line, tokens in body[n:]]
    return Instance(
        dimension=d,
        clients=np.array(clients, dtype=np.float64),
        candidates=np.array(candidates, dtype=np.float64),
        k=k,
        objective_z=z,
    )


def _point_line(point: np.ndarray) -> str:
    return " ".join(format(float(v), ".17g") for v in point)


def render_instance(instance: Instance, comment: Optional[str] = None) -> str:
    lines = []
    if comment:
        lines.extend(f"# {part}" for part in comment.splitlines())
    lines.append(
        f"{instance.dimension} {instance.n} {instance.m} {instance.k} {instance.objective_z}"
    )
    lines.extend(_point_line(p) for p in instance.clients)
    lines.extend(_point_line(c) for c in instance.candidates)
    return "\n".join(lines) + "\n"


def render_solution(solution: Solution, cost: float) -> str:
    lines = [
        f"cost {format(cost, '.9g')}",
        "centers " + " ".join(str(c) for c in solution.center_indices),
    ]
    if solution.assignment is not None:
        lines.extend(f"{p} {c}" for p, c in enumerate(solution.assignment))
    return "\n".join(lines) + "\n"


def parse_solution(text: str) -> Tuple[Solution, float]:
    """
    Parse a solution file into the solution and its recorded cost.

    Raises:
        ParseError: On missing or malformed cost/centers lines, descending
            indices or a bad assignment line.
    """
    lines = list(_data_lines(text))
    if len(lines) < 2:
        raise ParseError(None, "expected 'cost' and 'centers' lines")
    (cost_line, cost_tokens), (centers_line, center_tokens) = lines[0], lines[1]
    if len(cost_tokens) != 2 or cost_tokens[0] != "cost":
        raise ParseError(cost_line, "expected 'cost <value>'")
    try:
        cost = float(cost_tokens[1])
    except ValueError:
        raise ParseError(cost_line, f"not a number: {cost_tokens[1]!r}") from None
    if center_tokens[0] != "centers":
        raise ParseError(centers_line, "expected 'centers <indices>'")
    centers = [_integer(t, centers_line, "center index") for t in center_tokens[1:]]
    if any(c < 0 for c in centers) or centers != sorted(set(centers)):
        raise ParseError(centers_line, "center indices must be distinct, ascending and non-negative")

    assignment = None
    if len(lines) > 2:
        assignment = []
        for expected, (line, tokens) in enumerate(lines[2:]):
            if len(tokens) != 2:
                raise ParseError(line, "expected '<client> <center>'")
            client = _integer(tokens[0], line, "client")
            center = _integer(tokens[1], line, "center")
            if client != expected or center not in centers:
                raise ParseError(line, f"bad assignment of client {client} to {center}")
            assignment.append(center)
    return Solution(center_indices=centers, assignment=assignment), cost
