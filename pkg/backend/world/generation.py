"""
Módulo de Geração de Mundos
Gera mundos conectados e determinísticos a partir de (semente, parâmetros).
"""

import logging
from collections import deque
from typing import Dict, List, Optional, Set

import numpy as np
from pydantic import BaseModel, Field

from ..errors import EmbodiedError
from .dynamics import apply_state_rules
from .grid_world import (
    DIRTY, AgentPose, Cell, GridWorld, Heading, ObjectInstance, WorldConfig,
)
from .vocabulary import get_category

logger = logging.getLogger(__name__)

_NEIGHBORS_4 = ((-1, 0), (0, 1), (1, 0), (0, -1))
_NEIGHBORS_8 = _NEIGHBORS_4 + ((-1, -1), (-1, 1), (1, -1), (1, 1))

DEFAULT_FURNITURE = {
    'CounterTop': 3, 'Table': 2, 'Shelf': 2, 'Cabinet': 2, 'Drawer': 2,
    'Fridge': 1, 'Microwave': 1, 'SinkBasin': 1, 'GarbageCan': 1, 'Lamp': 1,
}

DEFAULT_OBJECTS = {
    'Apple': 2, 'Tomato': 1, 'Potato': 1, 'Bread': 1, 'Lettuce': 1, 'Egg': 1,
    'Knife': 1, 'Fork': 1, 'Spoon': 1, 'Ladle': 1,
    'Plate': 1, 'Bowl': 1, 'Mug': 1, 'Cup': 1, 'Pot': 1, 'Pan': 1, 'Box': 1,
    'SoapBar': 2, 'SoapBottle': 1, 'TissueBox': 2, 'Watch': 1, 'CellPhone': 1,
    'Book': 1,
}

CLOSED_CONTAINERS = ('Cabinet', 'Drawer', 'Fridge')
MAX_PLACEMENT_ATTEMPTS = 400


class GenerationError(EmbodiedError):
    """Parâmetros de layout impossíveis de satisfazer."""


class WorldParams(BaseModel):
    """Parâmetros de layout do gerador."""
    rows: int = 25
    cols: int = 25
    wall_density: float = Field(default=0.05, ge=0.0, lt=1.0)
    furniture_counts: Dict[str, int] = Field(default_factory=lambda: dict(DEFAULT_FURNITURE))
    object_counts: Dict[str, int] = Field(default_factory=lambda: dict(DEFAULT_OBJECTS))
    enclosed_share: float = Field(default=0.2, ge=0.0, le=1.0)
    world: WorldConfig = Field(default_factory=WorldConfig)

    @classmethod
    def for_split(cls, split: str) -> 'WorldParams':
        """Holdout de layout: o split unseen usa densidade e mobília diferentes."""
        if split == 'unseen':
            furniture = dict(DEFAULT_FURNITURE, CounterTop=2, Table=3, Shelf=1, Drawer=3)
            return cls(wall_density=0.09, furniture_counts=furniture)
        return cls()

    def with_minimum(self, counts: Dict[str, int]) -> 'WorldParams':
        """Cópia garantindo contagens mínimas de objetos/móveis."""
        objects = dict(self.object_counts)
        furniture = dict(self.furniture_counts)
        for name, count in counts.items():
            bucket = furniture if get_category(name).fixed else objects
            bucket[name] = max(bucket.get(name, 0), count)
        return self.model_copy(update={'object_counts': objects,
                                       'furniture_counts': furniture})


def connected_floor(walkable: np.ndarray, start: Cell) -> Set[Cell]:
    """Células alcançáveis (4-conectado) a partir de `start`."""
    rows, cols = walkable.shape
    seen = {start}
    queue = deque([start])
    while queue:
        r, c = queue.popleft()
        for dr, dc in _NEIGHBORS_4:
            nxt = (r + dr, c + dc)
            if 0 <= nxt[0] < rows and 0 <= nxt[1] < cols and walkable[nxt] and nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return seen


class _Builder:
    """Estado intermediário da geração (grade + ocupação)."""

    def __init__(self, rng: np.random.Generator, params: WorldParams):
        self.rng = rng
        self.params = params
        self.walls = np.zeros((params.rows, params.cols), dtype=bool)
        self.walls[0, :] = self.walls[-1, :] = True
        self.walls[:, 0] = self.walls[:, -1] = True
        self.occupied: Dict[Cell, str] = {}

    def walkable(self) -> np.ndarray:
        grid = ~self.walls
        for cell in self.occupied:
            grid[cell] = False
        return grid

    def floor(self) -> List[Cell]:
        return [tuple(map(int, rc)) for rc in np.argwhere(self.walkable())]

    def carve_walls(self) -> None:
        interior = (self.params.rows - 2) * (self.params.cols - 2)
        target = int(self.params.wall_density * interior)
        placed = 0
        for _ in range(target * 4):
            if placed >= target:
                break
            r = int(self.rng.integers(1, self.params.rows - 1))
            c = int(self.rng.integers(1, self.params.cols - 1))
            dr, dc = _NEIGHBORS_4[int(self.rng.integers(0, 2))]
            length = int(self.rng.integers(2, 6))
            for k in range(length):
                cell = (r + dr * k, c + dc * k)
                if 1 <= cell[0] < self.params.rows - 1 and 1 <= cell[1] < self.params.cols - 1 \
                        and not self.walls[cell]:
                    self.walls[cell] = True
                    placed += 1
        # mantém só o maior componente conectado
        floor = set(self.floor())
        best: Set[Cell] = set()
        while floor:
            component = connected_floor(self.walkable(), min(floor))
            floor -= component
            if len(component) > len(best):
                best = component
        for cell in self.floor():
            if cell not in best:
                self.walls[cell] = True

    def try_place(self, cell: Cell) -> bool:
        """Ocupa `cell` se o piso restante continuar conectado e acessível."""
        if self.walls[cell] or cell in self.occupied:
            return False
        self.occupied[cell] = ''
        walkable = self.walkable()
        floor = self.floor()
        ok = bool(floor) and len(connected_floor(walkable, floor[0])) == len(floor)
        if ok:
            for occ in self.occupied:
                if not any(walkable[occ[0] + dr, occ[1] + dc] for dr, dc in _NEIGHBORS_4):
                    ok = False
                    break
        if not ok:
            del self.occupied[cell]
        return ok

    def place_random(self) -> Cell:
        floor = self.floor()
        for _ in range(MAX_PLACEMENT_ATTEMPTS):
            if not floor:
                break
            cell = floor[int(self.rng.integers(0, len(floor)))]
            if self.try_place(cell):
                return cell
        raise GenerationError("Sem espaço para posicionar móveis mantendo o piso conectado")

    def place_near(self, anchor: Cell) -> Cell:
        options = [(anchor[0] + dr, anchor[1] + dc) for dr, dc in _NEIGHBORS_8]
        order = self.rng.permutation(len(options))
        for idx in order:
            cell = options[int(idx)]
            if self.try_place(cell):
                return cell
        raise GenerationError(f"Sem célula livre ao redor de {anchor}")


def generate_world(seed: int, params: Optional[WorldParams] = None) -> GridWorld:
    """
    Gera um mundo determinístico para (seed, params).

    Args:
        seed: Semente inteira
        params: Parâmetros de layout (padrão: WorldParams())

    Returns:
        GridWorld conectado com o agente em uma célula de piso

    Raises:
        GenerationError: parâmetros insatisfazíveis
    """
    params = params or WorldParams()
    if params.rows < 3 or params.cols < 3:
        raise GenerationError("Grade sem células de piso")
    furniture_total = sum(params.furniture_counts.values()) \
        + params.furniture_counts.get('SinkBasin', 0)
    if furniture_total + 1 > (params.rows - 2) * (params.cols - 2):
        raise GenerationError("Mais móveis do que células de piso")
    for name in list(params.furniture_counts) + list(params.object_counts):
        get_category(name)

    rng = np.random.default_rng(seed)
    builder = _Builder(rng, params)
    builder.carve_walls()

    placements: List[ObjectInstance] = []
    for name in sorted(params.furniture_counts):
        for k in range(1, params.furniture_counts[name] + 1):
            cell = builder.place_random()
            placements.append(ObjectInstance(f"{name}_{k}", name, cell))
            if name == 'SinkBasin':
                faucet_cell = builder.place_near(cell)
                placements.append(ObjectInstance(f"Faucet_{k}", 'Faucet', faucet_cell))

    floor = builder.floor()
    start = floor[int(rng.integers(0, len(floor)))]
    heading = Heading(int(rng.integers(0, 4)))
    world = GridWorld(builder.walls, AgentPose(cell=start, heading=heading),
                      params.world.model_copy())
    for inst in placements:
        world.add_instance(inst)

    surfaces = [inst.id for inst in placements if inst.spec.surface]
    closed = [inst.id for inst in placements if inst.category in CLOSED_CONTAINERS]
    if not surfaces and any(params.object_counts.values()):
        raise GenerationError("Nenhuma superfície para posicionar objetos")
    for name in sorted(params.object_counts):
        spec = get_category(name)
        for k in range(1, params.object_counts[name] + 1):
            enclosed = closed and rng.random() < params.enclosed_share
            pool = closed if enclosed else surfaces
            holder = pool[int(rng.integers(0, len(pool)))]
            state = {DIRTY} if spec.cleanable else set()
            world.add_instance(ObjectInstance(f"{name}_{k}", name, None, state=state))
            world.put_inside(f"{name}_{k}", holder)

    apply_state_rules(world)
    world.check_containment()
    logger.debug(f"Mundo gerado (seed={seed}): {len(world.instances)} instâncias")
    return world
