"""
Módulo Fast Marching
Resolve |∇T| = 1 em grade discreta sobre o mapa de obstáculos expandido,
com estêncil de 8 vizinhos (triângulos eixo/diagonal), e extrai caminhos por
descida gulosa em 4-vizinhança.
"""

import heapq
import math
from dataclasses import dataclass
from typing import FrozenSet, Iterable, List, Optional, Tuple

import numpy as np

from ..errors import EmbodiedError

Cell = Tuple[int, int]

SQRT2 = math.sqrt(2.0)
INV_SQRT2 = 1.0 / SQRT2

# Ordem fixa N, E, S, W (desempate da descida)
AXIS_OFFSETS: Tuple[Cell, ...] = ((-1, 0), (0, 1), (1, 0), (0, -1))
DIAGONAL_OFFSETS: Tuple[Cell, ...] = ((-1, -1), (-1, 1), (1, -1), (1, 1))


class NavigationError(EmbodiedError):
    """Conjunto de metas vazio ou caminho descontínuo."""


def inflate(obstacle: np.ndarray, radius: int) -> np.ndarray:
    """Dilatação de Chebyshev: marca toda célula a até `radius` de um obstáculo."""
    if radius < 0:
        raise ValueError(f"Raio de expansão negativo: {radius}")
    obstacle = np.asarray(obstacle, dtype=bool)
    out = obstacle.copy()
    rows, cols = obstacle.shape
    for dr in range(-radius, radius + 1):
        for dc in range(-radius, radius + 1):
            if dr == 0 and dc == 0:
                continue
            src = obstacle[max(0, -dr):rows - max(0, dr), max(0, -dc):cols - max(0, dc)]
            out[max(0, dr):rows - max(0, -dr), max(0, dc):cols - max(0, -dc)] |= src
    return out


def inflate_obstacles(semantic_map, radius: int):
    """
    Atualiza a camada `inflated` do mapa a partir de `obstacle`.

    Args:
        semantic_map: Mapa com as camadas booleanas obstacle/inflated
        radius: Raio de expansão em células (>= 0)

    Returns:
        O próprio mapa, com inflated ⊇ obstacle
    """
    semantic_map.inflated = inflate(semantic_map.obstacle, radius)
    semantic_map.inflation_radius = radius
    return semantic_map


@dataclass(frozen=True)
class CostField:
    """Tempos de chegada T (em células); inf para obstáculo/inalcançável."""
    arrival: np.ndarray
    goals: FrozenSet[Cell]

    def at(self, cell: Cell) -> float:
        r, c = cell
        rows, cols = self.arrival.shape
        if not (0 <= r < rows and 0 <= c < cols):
            return math.inf
        return float(self.arrival[r, c])

    def reachable(self, cell: Cell) -> bool:
        return math.isfinite(self.at(cell))

    def dump(self, precision: int = 3) -> str:
        """Grade em decimais de precisão fixa ('inf' para inalcançável)."""
        lines = []
        for row in self.arrival:
            lines.append(' '.join('inf' if not math.isfinite(v) else f"{v:.{precision}f}"
                                  for v in row))
        return '\n'.join(lines)


def _local_update(arrival, known, passable, cell: Cell) -> float:
    """
    Menor valor de T em `cell` a partir dos vizinhos conhecidos.

    As grades são indexadas como `grade[linha][coluna]` (listas ou arrays).
    """
    r, c = cell
    rows, cols = len(arrival), len(arrival[0])

    def inside(rr: int, cc: int) -> bool:
        return 0 <= rr < rows and 0 <= cc < cols

    def value(dr: int, dc: int) -> float:
        rr, cc = r + dr, c + dc
        if inside(rr, cc) and known[rr][cc]:
            return float(arrival[rr][cc])
        return math.inf

    best = math.inf
    for dr, dc in AXIS_OFFSETS:
        t_axis = value(dr, dc)
        if not math.isfinite(t_axis):
            continue
        best = min(best, t_axis + 1.0)
        for pr, pc in ((dc, dr), (-dc, -dr)):
            t_diag = value(dr + pr, dc + pc)
            if not math.isfinite(t_diag):
                continue
            delta = t_diag - t_axis
            if -INV_SQRT2 <= delta <= 0.0:
                best = min(best, t_axis + math.sqrt(1.0 - delta * delta))
    for dr, dc in DIAGONAL_OFFSETS:
        t_diag = value(dr, dc)
        if not math.isfinite(t_diag):
            continue
        # diagonal pura exige uma célula de eixo compartilhada livre
        corner_free = (inside(r + dr, c) and passable[r + dr][c]) \
            or (inside(r, c + dc) and passable[r][c + dc])
        if corner_free:
            best = min(best, t_diag + SQRT2)
    return best


def fmm_distance(traversible: np.ndarray, goals: Iterable[Cell]) -> CostField:
    """
    Frente de onda com conjunto aceito (heap ordenado por (T, linha, coluna)).

    Args:
        traversible: Matriz booleana, True = célula livre (não expandida)
        goals: Células com T = 0 (tratadas como livres)

    Returns:
        CostField determinístico para o mesmo mapa e metas

    Raises:
        NavigationError: conjunto de metas vazio ou fora da grade
    """
    free = np.asarray(traversible, dtype=bool).copy()
    rows, cols = free.shape
    goal_set = frozenset((int(r), int(c)) for r, c in goals)
    if not goal_set:
        raise NavigationError("Conjunto de metas vazio")
    for r, c in goal_set:
        if not (0 <= r < rows and 0 <= c < cols):
            raise NavigationError(f"Meta fora da grade: {(r, c)}")
        free[r, c] = True

    # propagação sobre listas aninhadas; o CostField volta a ser numpy
    passable = free.tolist()
    arrival = [[math.inf] * cols for _ in range(rows)]
    accepted = [[False] * cols for _ in range(rows)]
    heap: List[Tuple[float, int, int]] = []
    for r, c in sorted(goal_set):
        arrival[r][c] = 0.0
        heapq.heappush(heap, (0.0, r, c))

    while heap:
        t, r, c = heapq.heappop(heap)
        if accepted[r][c]:
            continue
        accepted[r][c] = True
        for dr, dc in AXIS_OFFSETS + DIAGONAL_OFFSETS:
            rr, cc = r + dr, c + dc
            if not (0 <= rr < rows and 0 <= cc < cols) or accepted[rr][cc] \
                    or not passable[rr][cc]:
                continue
            candidate = _local_update(arrival, accepted, passable, (rr, cc))
            if candidate < arrival[rr][cc]:
                arrival[rr][cc] = candidate
                heapq.heappush(heap, (candidate, rr, cc))
    return CostField(arrival=np.array(arrival, dtype=float), goals=goal_set)


def eikonal_residual(field: CostField) -> float:
    """
    Maior diferença entre T e a atualização recalculada a partir dos
    vizinhos finais (0 para um campo consistente).
    """
    arrival = field.arrival
    known = np.isfinite(arrival)
    worst = 0.0
    rows, cols = arrival.shape
    for r in range(rows):
        for c in range(cols):
            if not known[r, c] or (r, c) in field.goals:
                continue
            worst = max(worst, abs(_local_update(arrival, known, known, (r, c)) - arrival[r, c]))
    return worst


def extract_path(field: CostField, start: Cell) -> Optional[List[Cell]]:
    """
    Descida gulosa pelos 4-vizinhos de menor T (desempate N, E, S, W).

    Returns:
        Lista de células do início até uma meta, ou None se T(início) = inf
    """
    if not field.reachable(start):
        return None
    path = [tuple(start)]
    current = tuple(start)
    while field.at(current) > 0.0:
        here = field.at(current)
        best, best_t = None, here
        for dr, dc in AXIS_OFFSETS:
            nxt = (current[0] + dr, current[1] + dc)
            t = field.at(nxt)
            if t < best_t:
                best, best_t = nxt, t
        if best is None:
            return None
        path.append(best)
        current = best
    return path
