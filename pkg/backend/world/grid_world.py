"""
Módulo do Mundo em Grade
Implementa o estado completo do ambiente: células, instâncias de objetos,
pose do agente, contador de passos e serialização JSON bit-exata.
"""

import bisect
import copy
import math
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Dict, Iterator, List, Optional, Set, Tuple

import numpy as np
from pydantic import BaseModel, Field

from ..errors import EmbodiedError
from .vocabulary import CategorySpec, get_category, UnknownCategoryError

Cell = Tuple[int, int]

# Flags de estado
SLICED = 'sliced'
DIRTY = 'dirty'
HOT = 'hot'
COLD = 'cold'
TOGGLED_ON = 'toggled_on'
OPEN = 'open'
STATE_FLAGS = (SLICED, DIRTY, HOT, COLD, TOGGLED_ON, OPEN)

PITCHES = (-15, 0, 15, 30, 45)


class WorldFormatError(EmbodiedError):
    """Registro de mundo inválido ou inconsistente."""


class Heading(IntEnum):
    """Orientação do agente; a ordem segue o sentido horário."""
    NORTH = 0
    EAST = 1
    SOUTH = 2
    WEST = 3

    @property
    def vector(self) -> Cell:
        return _HEADING_VECTORS[self]

    def rotated(self, quarter_turns: int) -> 'Heading':
        return Heading((self.value + quarter_turns) % 4)


_HEADING_VECTORS = {
    Heading.NORTH: (-1, 0),
    Heading.EAST: (0, 1),
    Heading.SOUTH: (1, 0),
    Heading.WEST: (0, -1),
}


class WorldConfig(BaseModel):
    """Parâmetros físicos fixos do mundo (alcances em células)."""
    r_int: float = Field(default=1.5, gt=0)
    r_fov: int = Field(default=8, gt=0)
    n_rays: int = Field(default=31, ge=2)
    fov_degrees: float = Field(default=90.0, gt=0, lt=180)
    slice_count: int = Field(default=2, ge=2)
    clean_radius: float = Field(default=1.5, gt=0)


@dataclass
class AgentPose:
    cell: Cell
    heading: Heading = Heading.NORTH
    pitch: int = 0
    held: Optional[str] = None


@dataclass
class ObjectInstance:
    """
    Instância de objeto no mundo.

    `cell` acompanha a célula do contêiner raiz; é None enquanto o objeto
    (ou o contêiner que o carrega) está na mão do agente.
    """
    id: str
    category: str
    cell: Optional[Cell]
    state: Set[str] = field(default_factory=set)
    parent: Optional[str] = None
    contents: List[str] = field(default_factory=list)

    @property
    def spec(self) -> CategorySpec:
        return get_category(self.category)

    def has(self, flag: str) -> bool:
        return flag in self.state


class InstanceRecord(BaseModel):
    id: str
    category: str
    cell: Optional[Tuple[int, int]] = None
    state: List[str] = Field(default_factory=list)
    parent: Optional[str] = None


class AgentRecord(BaseModel):
    cell: Tuple[int, int]
    heading: str = 'NORTH'
    pitch: int = 0
    held: Optional[str] = None


class WorldRecord(BaseModel):
    """Formato de arquivo do mundo: grade como strings, instâncias como registros."""
    config: WorldConfig = Field(default_factory=WorldConfig)
    grid: List[str]
    instances: List[InstanceRecord] = Field(default_factory=list)
    agent: AgentRecord
    step: int = 0
    consumed: List[str] = Field(default_factory=list)


class GridWorld:
    """
    Estado de verdade do ambiente.

    A grade guarda apenas paredes; móveis fixos são instâncias que ocupam
    uma célula e bloqueiam movimento e visão. Objetos pegáveis vivem dentro
    de receptáculos (ou na mão do agente).
    """

    def __init__(self, walls: np.ndarray, agent: AgentPose,
                 config: Optional[WorldConfig] = None):
        """
        Args:
            walls: Matriz booleana (linhas x colunas), True = parede
            agent: Pose inicial do agente
            config: Parâmetros físicos (padrão: WorldConfig())
        """
        self.walls = np.asarray(walls, dtype=bool)
        self.agent = agent
        self.config = config or WorldConfig()
        self.instances: Dict[str, ObjectInstance] = {}
        self.fixed_at: Dict[Cell, str] = {}
        self.step_count = 0
        self.consumed: Set[str] = set()

    # ------------------------------------------------------------------
    # Geometria
    # ------------------------------------------------------------------
    @property
    def shape(self) -> Tuple[int, int]:
        return self.walls.shape

    def in_bounds(self, cell: Cell) -> bool:
        rows, cols = self.walls.shape
        return 0 <= cell[0] < rows and 0 <= cell[1] < cols

    def is_wall(self, cell: Cell) -> bool:
        return not self.in_bounds(cell) or bool(self.walls[cell])

    def blocks(self, cell: Cell) -> bool:
        """Célula que bloqueia movimento e raios (parede ou móvel fixo)."""
        return self.is_wall(cell) or cell in self.fixed_at

    def is_walkable(self, cell: Cell) -> bool:
        return not self.blocks(cell)

    def floor_cells(self) -> List[Cell]:
        rows, cols = self.walls.shape
        return [(r, c) for r in range(rows) for c in range(cols)
                if self.is_walkable((r, c))]

    def line_of_sight(self, source: Cell, target: Cell) -> bool:
        """Nenhuma célula intermediária do segmento bloqueia a visão."""
        dr, dc = target[0] - source[0], target[1] - source[1]
        length = math.hypot(dr, dc)
        if length == 0:
            return True
        samples = int(math.ceil(length / 0.25))
        for k in range(1, samples):
            t = k / samples
            cell = (int(math.floor(source[0] + dr * t + 0.5)),
                    int(math.floor(source[1] + dc * t + 0.5)))
            if cell in (source, target):
                continue
            if self.blocks(cell):
                return False
        return True

    def in_interaction_range(self, cell: Cell) -> bool:
        pose = self.agent.cell
        dist = math.hypot(cell[0] - pose[0], cell[1] - pose[1])
        return dist <= self.config.r_int + 1e-9 and self.line_of_sight(pose, cell)

    # ------------------------------------------------------------------
    # Instâncias e contenção
    # ------------------------------------------------------------------
    def add_instance(self, instance: ObjectInstance) -> ObjectInstance:
        if instance.id in self.instances:
            raise WorldFormatError(f"Identificador duplicado: {instance.id}")
        self.instances[instance.id] = instance
        if instance.spec.fixed:
            if instance.cell is None or self.is_wall(instance.cell) \
                    or instance.cell in self.fixed_at:
                raise WorldFormatError(
                    f"Móvel {instance.id} sem célula livre: {instance.cell}")
            self.fixed_at[instance.cell] = instance.id
        return instance

    def get(self, instance_id: str) -> ObjectInstance:
        return self.instances[instance_id]

    def by_category(self, category: str) -> List[ObjectInstance]:
        return [inst for inst in self.instances.values() if inst.category == category]

    def put_inside(self, child_id: str, parent_id: str) -> None:
        """Coloca `child` em `parent`, atualizando células de toda a subárvore."""
        child = self.instances[child_id]
        parent = self.instances[parent_id]
        child.parent = parent_id
        bisect.insort(parent.contents, child_id)
        self._set_subtree_cell(child_id, parent.cell)

    def detach(self, child_id: str) -> None:
        child = self.instances[child_id]
        if child.parent is not None:
            self.instances[child.parent].contents.remove(child_id)
        child.parent = None
        self._set_subtree_cell(child_id, None)

    def _set_subtree_cell(self, root_id: str, cell: Optional[Cell]) -> None:
        stack = [root_id]
        while stack:
            inst = self.instances[stack.pop()]
            inst.cell = cell
            stack.extend(inst.contents)

    def ancestors(self, instance_id: str) -> Iterator[ObjectInstance]:
        parent = self.instances[instance_id].parent
        while parent is not None:
            inst = self.instances[parent]
            yield inst
            parent = inst.parent

    def hidden_in_closed(self, instance_id: str) -> bool:
        """Algum contêiner ancestral é abrível e está fechado."""
        return any(anc.spec.openable and OPEN not in anc.state
                   for anc in self.ancestors(instance_id))

    def descendants(self, instance_id: str) -> List[str]:
        out, stack = [], list(self.instances[instance_id].contents)
        while stack:
            current = stack.pop()
            out.append(current)
            stack.extend(self.instances[current].contents)
        return sorted(out)

    def check_containment(self) -> None:
        """
        Verifica consistência pai/conteúdo e ausência de ciclos.

        Raises:
            WorldFormatError: se a contenção não for uma floresta consistente
        """
        for inst in self.instances.values():
            if inst.parent is not None:
                parent = self.instances.get(inst.parent)
                if parent is None or inst.id not in parent.contents:
                    raise WorldFormatError(f"Pai inconsistente para {inst.id}")
            for child in inst.contents:
                if self.instances[child].parent != inst.id:
                    raise WorldFormatError(f"Conteúdo inconsistente em {inst.id}")
            seen = {inst.id}
            for anc in self.ancestors(inst.id):
                if anc.id in seen:
                    raise WorldFormatError(f"Ciclo de contenção em {inst.id}")
                seen.add(anc.id)
        held = self.agent.held
        if held is not None:
            inst = self.instances[held]
            if inst.cell is not None or inst.parent is not None:
                raise WorldFormatError(f"Objeto na mão com célula/pai: {held}")

    def copy(self) -> 'GridWorld':
        return copy.deepcopy(self)

    # ------------------------------------------------------------------
    # Serialização
    # ------------------------------------------------------------------
    def to_record(self) -> WorldRecord:
        grid = [''.join('#' if wall else '.' for wall in row) for row in self.walls]
        instances = [
            InstanceRecord(
                id=inst.id,
                category=inst.category,
                cell=inst.cell,
                state=sorted(inst.state),
                parent=inst.parent,
            )
            for inst in self.instances.values()
        ]
        agent = AgentRecord(cell=self.agent.cell, heading=self.agent.heading.name,
                            pitch=self.agent.pitch, held=self.agent.held)
        return WorldRecord(config=self.config, grid=grid, instances=instances,
                           agent=agent, step=self.step_count,
                           consumed=sorted(self.consumed))

    def to_json(self) -> str:
        return self.to_record().model_dump_json()

    @classmethod
    def from_record(cls, record: WorldRecord) -> 'GridWorld':
        """
        Reconstrói o mundo a partir de um registro.

        Raises:
            WorldFormatError: grade irregular, categoria desconhecida ou
                contenção inconsistente
        """
        widths = {len(row) for row in record.grid}
        if len(widths) != 1 or not record.grid:
            raise WorldFormatError("Grade vazia ou com linhas de tamanhos diferentes")
        if any(ch not in '#.' for row in record.grid for ch in row):
            raise WorldFormatError("Grade aceita apenas '#' e '.'")
        walls = np.array([[ch == '#' for ch in row] for row in record.grid], dtype=bool)
        try:
            heading = Heading[record.agent.heading]
        except KeyError:
            raise WorldFormatError(f"Orientação inválida: {record.agent.heading}") from None
        agent = AgentPose(cell=tuple(record.agent.cell), heading=heading,
                          pitch=record.agent.pitch, held=record.agent.held)
        world = cls(walls, agent, record.config.model_copy())
        try:
            for rec in record.instances:
                get_category(rec.category)
                bad = set(rec.state) - set(STATE_FLAGS)
                if bad:
                    raise WorldFormatError(f"Flags desconhecidas em {rec.id}: {sorted(bad)}")
                world.add_instance(ObjectInstance(
                    id=rec.id, category=rec.category,
                    cell=tuple(rec.cell) if rec.cell is not None else None,
                    state=set(rec.state), parent=rec.parent))
        except UnknownCategoryError as e:
            raise WorldFormatError(str(e)) from e
        for inst in world.instances.values():
            if inst.parent is not None:
                if inst.parent not in world.instances:
                    raise WorldFormatError(f"Pai inexistente para {inst.id}")
                bisect.insort(world.instances[inst.parent].contents, inst.id)
        world.step_count = record.step
        world.consumed = set(record.consumed)
        world.check_containment()
        return world

    @classmethod
    def from_json(cls, text: str) -> 'GridWorld':
        try:
            record = WorldRecord.model_validate_json(text)
        except ValueError as e:
            raise WorldFormatError(f"JSON de mundo inválido: {e}") from e
        return cls.from_record(record)
