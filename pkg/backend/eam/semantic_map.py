"""
Módulo do Mapa Semântico
Mapa 2D construído a partir das observações: obstáculos, células exploradas,
obstáculos expandidos, evidência por categoria e avistamentos.
"""

import logging
import math
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from ..nav.fmm import (AXIS_OFFSETS, DIAGONAL_OFFSETS, CostField, fmm_distance, inflate,
                       inflate_obstacles)
from ..world.grid_world import AgentPose, Cell, WorldConfig
from ..world.observation import Observation, rays_for

logger = logging.getLogger(__name__)

FIELD_CACHE_SIZE = 256


class SemanticMap:
    """
    Crença espacial do agente.

    Camadas booleanas (linhas x colunas); `explored` e `obstacle` só mudam
    de False para True. Células desconhecidas contam como livres para o
    planejador.
    """

    def __init__(self, shape: Tuple[int, int], inflation_radius: int = 1):
        """
        Args:
            shape: Dimensões da grade (linhas, colunas)
            inflation_radius: Raio de expansão de obstáculos em células
        """
        self.shape = tuple(shape)
        self.obstacle = np.zeros(self.shape, dtype=bool)
        self.explored = np.zeros(self.shape, dtype=bool)
        self.inflated = np.zeros(self.shape, dtype=bool)
        self.inflation_radius = inflation_radius
        self.evidence: Dict[str, np.ndarray] = {}
        self.sightings: Dict[str, Dict[Cell, int]] = {}
        # incrementada a cada obstáculo novo; invalida os campos em cache
        self.version = 0
        self._fields: Dict[tuple, CostField] = {}
        self._free: Dict[Optional[int], np.ndarray] = {}

    def in_bounds(self, cell: Cell) -> bool:
        return 0 <= cell[0] < self.shape[0] and 0 <= cell[1] < self.shape[1]

    def _invalidate(self) -> None:
        self.version += 1
        self._fields.clear()
        self._free.clear()

    def reinflate(self, radius: Optional[int] = None) -> 'SemanticMap':
        """Recalcula `inflated` a partir de `obstacle` e descarta os campos em cache."""
        inflate_obstacles(self, self.inflation_radius if radius is None else radius)
        self._invalidate()
        return self

    def mark_obstacle(self, cell: Cell, reinflate: bool = True) -> bool:
        """
        Marca uma célula como obstáculo.

        Args:
            cell: Célula bloqueada
            reinflate: Recalcular a camada expandida imediatamente

        Returns:
            True se a célula era livre no mapa (o mapa mudou)
        """
        cell = tuple(cell)
        if not self.in_bounds(cell) or self.obstacle[cell]:
            return False
        self.obstacle[cell] = True
        if reinflate:
            self.reinflate()
        return True

    def integrate_observation(self, obs: Observation, pose: AgentPose,
                              config: WorldConfig) -> 'SemanticMap':
        """
        Projeta raios e detecções no mapa (monotônico).

        Células de cada raio até a profundidade ficam exploradas; a célula
        terminal de um raio com impacto vira obstáculo. Detecções de objetos
        já fatiados entram só na evidência: o avistamento da categoria
        guarda a aparência original.
        """
        self.explored[pose.cell] = True
        changed = False
        for ray, depth, hit in zip(rays_for(pose, config), obs.depth, obs.hits):
            for cell in ray[:depth]:
                if self.in_bounds(cell):
                    self.explored[cell] = True
            if hit and depth > 0:
                changed |= self.mark_obstacle(ray[depth - 1], reinflate=False)
        if changed:
            self.reinflate()
        for det in obs.detections:
            layer = self.evidence.setdefault(det.category, np.zeros(self.shape, dtype=np.int64))
            layer[det.cell] += 1
            if not det.sliced:
                self.sightings.setdefault(det.category, {})[tuple(det.cell)] = obs.step
        return self

    def clear_sighting(self, category: str, cell: Cell) -> None:
        """Esquece um avistamento (o próprio agente retirou o objeto dali)."""
        self.sightings.get(category, {}).pop(tuple(cell), None)

    def sighting_cells(self, category: str) -> List[Cell]:
        return sorted(self.sightings.get(category, {}))

    def traversible(self, radius: Optional[int] = None) -> np.ndarray:
        """Máscara de células livres para o planejador (desconhecido = livre); cópia do chamador."""
        if radius is None or radius == self.inflation_radius:
            return ~self.inflated
        if radius not in self._free:
            self._free[radius] = ~inflate(self.obstacle, radius)
        return self._free[radius].copy()

    def frontier_cells(self) -> List[Cell]:
        """Células exploradas e livres com ao menos um 4-vizinho inexplorado."""
        unexplored = np.pad(~self.explored, 1, constant_values=False)
        rows, cols = self.shape
        touches = np.zeros(self.shape, dtype=bool)
        for dr, dc in AXIS_OFFSETS:
            touches |= unexplored[1 + dr:1 + dr + rows, 1 + dc:1 + dc + cols]
        mask = self.explored & ~self.obstacle & touches
        return [tuple(int(v) for v in cell) for cell in np.argwhere(mask)]

    def line_of_sight(self, source: Cell, target: Cell) -> bool:
        """Mesma amostragem do mundo, sobre os obstáculos conhecidos."""
        dr, dc = target[0] - source[0], target[1] - source[1]
        length = math.hypot(dr, dc)
        if length == 0:
            return True
        samples = int(math.ceil(length / 0.25))
        for k in range(1, samples):
            t = k / samples
            cell = (int(math.floor(source[0] + dr * t + 0.5)),
                    int(math.floor(source[1] + dc * t + 0.5)))
            if cell in (tuple(source), tuple(target)):
                continue
            if not self.in_bounds(cell) or self.obstacle[cell]:
                return False
        return True

    def distance_field(self, pose: AgentPose, radius: Optional[int] = None) -> CostField:
        """Campo de distância a partir da pose, reaproveitado até o mapa mudar."""
        return self.field_to([tuple(pose.cell)], radius)

    def field_to(self, goals: Iterable[Cell], radius: Optional[int] = None,
                 via: Optional[Cell] = None) -> CostField:
        """
        Campo FMM até `goals` sobre o mapa expandido.

        Args:
            goals: Células de chegada (tratadas como livres)
            radius: Raio de expansão (None = raio do mapa)
            via: Célula extra tratada como livre (a do agente)

        Returns:
            CostField em cache enquanto `version` não mudar
        """
        goal_set = frozenset(tuple(c) for c in goals)
        radius = self.inflation_radius if radius is None else radius
        key = (radius, goal_set, tuple(via) if via is not None else None)
        field = self._fields.get(key)
        if field is None:
            free = self.traversible(radius)
            for cell in goal_set:
                free[cell] = True
            if via is not None:
                free[tuple(via)] = True
            if len(self._fields) >= FIELD_CACHE_SIZE:
                self._fields.clear()
            field = self._fields[key] = fmm_distance(free, goal_set)
        return field


def approach_cells(target: Cell, shape: Tuple[int, int]) -> List[Cell]:
    """Os 8 vizinhos de `target` dentro da grade."""
    out = []
    for dr, dc in AXIS_OFFSETS + DIAGONAL_OFFSETS:
        cell = (target[0] + dr, target[1] + dc)
        if 0 <= cell[0] < shape[0] and 0 <= cell[1] < shape[1]:
            out.append(cell)
    return out


def target_distance(field: CostField, target: Cell) -> float:
    return min((field.at(c) for c in approach_cells(target, field.arrival.shape)),
               default=math.inf)


def select_target(semantic_map: SemanticMap, category: str, relocated: Iterable[Cell],
                  pose: AgentPose, exclude: Iterable[Cell] = ()) -> Optional[Cell]:
    """
    Avistamento mais próximo (distância FMM) fora do registro de realocações.

    Args:
        semantic_map: Mapa do agente
        category: Categoria procurada
        relocated: Células registradas como destino de realocação da categoria
        pose: Pose atual
        exclude: Células descartadas pelo próprio agente

    Returns:
        Célula do alvo ou None (o chamador deve explorar)
    """
    blocked = {tuple(c) for c in relocated} | {tuple(c) for c in exclude}
    eligible = [cell for cell in semantic_map.sighting_cells(category) if cell not in blocked]
    if not eligible:
        return None
    for radius in (None, 0):
        field = semantic_map.distance_field(pose, radius)
        scored = [(target_distance(field, cell), cell) for cell in eligible]
        reachable = [item for item in scored if math.isfinite(item[0])]
        if reachable:
            return min(reachable)[1]
    return min(eligible, key=lambda c: (math.hypot(c[0] - pose.cell[0], c[1] - pose.cell[1]), c))
