"""
🎨 BKS COLLAPSE - COLORING ORACLE
Decides whether a set of triples admits a 0/1 assignment with exactly one 1 per
triple. Works on point indices only and shares nothing with the rule engine.
"""

import logging
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from ..errors import ColoringProblemError, ContradictoryPinError, ExhaustiveLimitError, OracleError

logger = logging.getLogger(__name__)

DEFAULT_POINT_CAP = 25
BLOCK_CELLS = 1 << 22

Triple = Tuple[int, int, int]
Pins = Union[Mapping[int, int], Iterable[Tuple[int, int]]]


class ColoringMode(str, Enum):
    EXHAUSTIVE = "exhaustive"
    BACKTRACKING = "backtracking"


@dataclass
class ColoringProblem:
    point_count: int
    triples: List[Triple]
    mode: ColoringMode = ColoringMode.BACKTRACKING
    labels: Optional[List[str]] = None

    def __post_init__(self):
        self.mode = ColoringMode(self.mode)
        if self.point_count < 0:
            raise ColoringProblemError("point count must be non-negative")
        seen = set()
        normalized = []
        for triple in self.triples:
            triple = tuple(int(i) for i in triple)
            if len(triple) != 3:
                raise ColoringProblemError(f"{triple} is not a triple")
            if any(i < 0 or i >= self.point_count for i in triple):
                raise ColoringProblemError(f"triple {triple} has an index outside 0..{self.point_count - 1}")
            if len(set(triple)) != 3:
                raise ColoringProblemError(f"triple {triple} repeats a point")
            key = tuple(sorted(triple))
            if key in seen:
                raise ColoringProblemError(f"duplicate triple {key}")
            seen.add(key)
            normalized.append(triple)
        self.triples = normalized
        if self.labels is not None and len(self.labels) != self.point_count:
            raise ColoringProblemError("one label per point is required")


@dataclass
class ColoringStats:
    nodes: int = 0
    propagations: int = 0
    wall_time: float = 0.0
    solutions: Optional[int] = None


@dataclass
class ColoringResult:
    colorable: bool
    witness: Optional[List[int]] = None
    stats: ColoringStats = field(default_factory=ColoringStats)

    @property
    def verdict(self) -> str:
        return "colorable" if self.colorable else "uncolorable"


def satisfies(triples: Sequence[Triple], assignment: Sequence[int]) -> bool:
    return all(sum(assignment[i] for i in triple) == 1 for triple in triples)


def _normalize_pins(p: ColoringProblem, pinned: Optional[Pins]) -> Dict[int, int]:
    pins: Dict[int, int] = {}
    items = pinned.items() if isinstance(pinned, Mapping) else (pinned or ())
    for index, value in items:
        index, value = int(index), int(value)
        if not 0 <= index < p.point_count:
            raise ColoringProblemError(f"pinned index {index} is out of range")
        if value not in (0, 1):
            raise ColoringProblemError(f"pinned value {value} is not 0 or 1")
        if pins.get(index, value) != value:
            raise ContradictoryPinError(f"point {index} pinned to both 0 and 1")
        pins[index] = value
    return pins


# Exhaustive enumeration

def _blocks(p: ColoringProblem, pins: Dict[int, int], cap: int) -> Iterator[np.ndarray]:
    """Every assignment extending pins, as boolean matrices of rows"""
    if p.point_count > cap:
        raise ExhaustiveLimitError(f"exhaustive mode allows at most {cap} points, got {p.point_count}")
    free = [i for i in range(p.point_count) if i not in pins]
    total = 1 << len(free)
    width = max(1, 3 * len(p.triples), p.point_count)
    size = max(1, min(total, BLOCK_CELLS // width))
    shifts = np.arange(len(free), dtype=np.int64)
    for start in range(0, total, size):
        numbers = np.arange(start, min(start + size, total), dtype=np.int64)
        rows = np.zeros((len(numbers), p.point_count), dtype=np.int8)
        if free:
            rows[:, free] = (numbers[:, None] >> shifts) & 1
        for index, value in pins.items():
            rows[:, index] = value
        yield rows


def _valid_rows(p: ColoringProblem, rows: np.ndarray) -> np.ndarray:
    if not p.triples:
        return np.ones(len(rows), dtype=bool)
    members = np.asarray(p.triples, dtype=np.int64)
    return (rows[:, members].sum(axis=2) == 1).all(axis=1)


def iter_colorings(p: ColoringProblem, pinned: Optional[Pins] = None,
                   cap: int = DEFAULT_POINT_CAP) -> Iterator[List[int]]:
    """Every satisfying assignment extending pinned, in counting order"""
    pins = _normalize_pins(p, pinned)
    for rows in _blocks(p, pins, cap):
        for row in rows[_valid_rows(p, rows)]:
            yield [int(v) for v in row]


def _exhaustive(p: ColoringProblem, pins: Dict[int, int], cap: int, stats: ColoringStats) -> Optional[List[int]]:
    witness = None
    count = 0
    for rows in _blocks(p, pins, cap):
        valid = _valid_rows(p, rows)
        stats.nodes += len(rows)
        hits = int(valid.sum())
        if hits and witness is None:
            witness = [int(v) for v in rows[int(np.argmax(valid))]]
        count += hits
    stats.solutions = count
    return witness


# Backtracking with unit propagation

class _Search:
    """Depth-first search over point values with a trail for undo"""

    def __init__(self, p: ColoringProblem, stats: ColoringStats):
        self.triples = p.triples
        self.stats = stats
        self.values = [-1] * p.point_count
        self.trail: List[int] = []
        self.queue: List[int] = []
        self.watch: List[List[int]] = [[] for _ in range(p.point_count)]
        for t, triple in enumerate(p.triples):
            for point in triple:
                self.watch[point].append(t)

    def assign(self, point: int, value: int) -> bool:
        current = self.values[point]
        if current == -1:
            self.values[point] = value
            self.trail.append(point)
            self.queue.append(point)
            return True
        return current == value

    def undo(self, mark: int) -> None:
        while len(self.trail) > mark:
            self.values[self.trail.pop()] = -1
        self.queue.clear()

    def propagate(self) -> bool:
        """A triple with a 1 forces 0s; a triple with two 0s forces a 1"""
        while self.queue:
            point = self.queue.pop()
            for t in self.watch[point]:
                triple = self.triples[t]
                states = [self.values[i] for i in triple]
                ones = states.count(1)
                open_points = [i for i, v in zip(triple, states) if v == -1]
                if ones > 1 or (ones == 0 and not open_points):
                    self.queue.clear()
                    return False
                if ones == 1:
                    forced = [(i, 0) for i in open_points]
                elif len(open_points) == 1:
                    forced = [(open_points[0], 1)]
                else:
                    continue
                for i, value in forced:
                    self.stats.propagations += 1
                    if not self.assign(i, value):
                        self.queue.clear()
                        return False
        return True

    def choose(self) -> Optional[int]:
        """Lowest open point of the open triple with fewest open points (lowest triple index on ties)"""
        best, best_open = None, 4
        for triple in self.triples:
            states = [self.values[i] for i in triple]
            if 1 in states:
                continue
            open_points = [i for i, v in zip(triple, states) if v == -1]
            if open_points and len(open_points) < best_open:
                best, best_open = min(open_points), len(open_points)
        return best

    def run(self, pins: Dict[int, int]) -> Optional[List[int]]:
        for index, value in sorted(pins.items()):
            self.assign(index, value)
        if not self.propagate():
            return None
        stack: List[List] = []
        while True:
            point = self.choose()
            if point is None:
                return [max(v, 0) for v in self.values]
            stack.append([len(self.trail), point, [1, 0]])
            while stack:
                mark, point, options = stack[-1]
                self.undo(mark)
                if not options:
                    stack.pop()
                    continue
                value = options.pop(0)
                self.stats.nodes += 1
                if self.assign(point, value) and self.propagate():
                    break
            else:
                return None


def check_consistency(p: ColoringProblem, pinned: Optional[Pins] = None,
                      cap: int = DEFAULT_POINT_CAP) -> ColoringResult:
    """Colorability restricted to assignments extending pinned"""
    pins = _normalize_pins(p, pinned)
    stats = ColoringStats()
    started = time.perf_counter()
    if p.mode == ColoringMode.EXHAUSTIVE:
        witness = _exhaustive(p, pins, cap, stats)
    else:
        witness = _Search(p, stats).run(pins)
    stats.wall_time = time.perf_counter() - started

    if witness is not None:
        if not satisfies(p.triples, witness) or any(witness[i] != v for i, v in pins.items()):
            raise OracleError("witness fails its re-check")
    result = ColoringResult(witness is not None, witness, stats)
    logger.info(f"🎨 {p.mode.value}: {result.verdict} over {p.point_count} points, {len(p.triples)} triples "
                f"({stats.nodes} nodes, {stats.propagations} propagations, {stats.wall_time:.3f}s)")
    return result


def check_coloring(p: ColoringProblem, cap: int = DEFAULT_POINT_CAP) -> ColoringResult:
    return check_consistency(p, None, cap)
