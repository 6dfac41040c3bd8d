"""
Módulo de Observação
Implementa a observação egocêntrica por lançamento de raios no cone de
visão, com a regra determinística de oclusão.
"""

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Dict, List, Optional, Set, Tuple

from .grid_world import AgentPose, Cell, GridWorld, Heading, SLICED, WorldConfig

RAY_STEP = 0.25


@dataclass(frozen=True)
class InteractionHandle:
    """Identidade + onde/quando o objeto foi visto (análogo da máscara)."""
    instance_id: str
    observed_cell: Cell
    observed_step: int

    def to_dict(self) -> dict:
        return {
            'instance_id': self.instance_id,
            'observed_cell': list(self.observed_cell),
            'observed_step': self.observed_step,
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'InteractionHandle':
        return cls(data['instance_id'], tuple(data['observed_cell']),
                   int(data['observed_step']))


@dataclass(frozen=True)
class Detection:
    category: str
    handle: InteractionHandle
    cell: Cell
    sliced: bool = False


@dataclass
class Observation:
    """
    Saída do sensor simulado.

    `depth[i]` é o número de células percorridas pelo raio i até a célula
    de impacto (inclusive); `hits[i]` indica se o raio terminou em obstáculo
    dentro do alcance.
    """
    detections: List[Detection]
    depth: List[int]
    hits: List[bool]
    pose: AgentPose
    step: int = 0

    def of_category(self, category: str) -> List[Detection]:
        return [d for d in self.detections if d.category == category]


class Visibility(Enum):
    HELD = 'held'
    OUT_OF_VIEW = 'out_of_view'
    HIDDEN_CLOSED = 'hidden_closed'
    OCCLUDED_BY_CONTENTS = 'occluded_by_contents'
    DETECTED = 'detected'


@lru_cache(maxsize=64)
def ray_offsets(heading: Heading, n_rays: int, fov_degrees: float,
                r_fov: int) -> Tuple[Tuple[Cell, ...], ...]:
    """
    Tabela de deslocamentos (linha, coluna) percorridos por cada raio.

    Os raios cobrem o cone de -fov/2 a +fov/2 (positivo = à direita).
    Células repetidas consecutivas e deslocamentos além de r_fov são
    descartados.
    """
    fwd = heading.vector
    right = heading.rotated(1).vector
    rays = []
    for i in range(n_rays):
        angle = math.radians(-fov_degrees / 2 + i * fov_degrees / (n_rays - 1))
        dr = math.cos(angle) * fwd[0] + math.sin(angle) * right[0]
        dc = math.cos(angle) * fwd[1] + math.sin(angle) * right[1]
        offsets: List[Cell] = []
        k = 1
        while k * RAY_STEP <= r_fov + 1e-9:
            t = k * RAY_STEP
            off = (int(math.floor(t * dr + 0.5)), int(math.floor(t * dc + 0.5)))
            k += 1
            if off == (0, 0) or (offsets and offsets[-1] == off):
                continue
            if math.hypot(*off) > r_fov:
                break
            offsets.append(off)
        rays.append(tuple(offsets))
    return tuple(rays)


def rays_for(pose: AgentPose, config: WorldConfig) -> Tuple[Tuple[Cell, ...], ...]:
    """Raios em coordenadas absolutas para a pose dada."""
    table = ray_offsets(pose.heading, config.n_rays, config.fov_degrees, config.r_fov)
    r0, c0 = pose.cell
    return tuple(tuple((r0 + dr, c0 + dc) for dr, dc in ray) for ray in table)


def cast_rays(world: GridWorld) -> Tuple[List[int], List[bool], Set[Cell]]:
    """
    Lança os raios a partir da pose atual.

    Returns:
        Tupla (profundidades, flags de impacto, células de impacto)
    """
    depth, hits, hit_cells = [], [], set()
    for ray in rays_for(world.agent, world.config):
        for idx, cell in enumerate(ray):
            if world.blocks(cell):
                depth.append(idx + 1)
                hits.append(True)
                hit_cells.add(cell)
                break
        else:
            depth.append(len(ray))
            hits.append(False)
    return depth, hits, hit_cells


def classify_instance(world: GridWorld, instance_id: str,
                      hit_cells: Set[Cell]) -> Visibility:
    """
    Classifica uma instância por exatamente uma cláusula da regra de oclusão.

    A ordem das cláusulas é fixa: na mão, fora de vista, dentro de
    receptáculo fechado, receptáculo móvel com conteúdo, detectado.
    """
    inst = world.instances[instance_id]
    if inst.cell is None:
        return Visibility.HELD
    if inst.cell not in hit_cells:
        return Visibility.OUT_OF_VIEW
    if world.hidden_in_closed(instance_id):
        return Visibility.HIDDEN_CLOSED
    if inst.spec.movable_receptacle and inst.contents:
        return Visibility.OCCLUDED_BY_CONTENTS
    return Visibility.DETECTED


def observe(world: GridWorld) -> Observation:
    """
    Gera a observação da pose atual sem alterar o mundo.

    Args:
        world: Mundo de verdade

    Returns:
        Observation com detecções ordenadas por (célula, id)
    """
    depth, hits, hit_cells = cast_rays(world)
    detections: Dict[str, Detection] = {}
    for cell in sorted(hit_cells):
        root_id: Optional[str] = world.fixed_at.get(cell)
        if root_id is None:
            continue
        for instance_id in [root_id] + world.descendants(root_id):
            if classify_instance(world, instance_id, hit_cells) is not Visibility.DETECTED:
                continue
            inst = world.instances[instance_id]
            detections[instance_id] = Detection(
                category=inst.category,
                handle=InteractionHandle(instance_id, cell, world.step_count),
                cell=cell,
                sliced=SLICED in inst.state,
            )
    ordered = sorted(detections.values(), key=lambda d: (d.cell, d.handle.instance_id))
    pose = AgentPose(world.agent.cell, world.agent.heading, world.agent.pitch,
                     world.agent.held)
    return Observation(detections=ordered, depth=depth, hits=hits, pose=pose,
                       step=world.step_count)
