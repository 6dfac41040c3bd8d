"""
Módulo de Memória do Ambiente
Caches da memória por episódio: handles retrospectivos (máscaras), registro
de realocações e cache de locais de mudança de estado. Cada operação gera
um MemoryEvent anexado ao trace do episódio.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Set, Tuple, Union

from ..world.grid_world import Cell
from ..world.observation import InteractionHandle

logger = logging.getLogger(__name__)

MaskKey = Union[str, Tuple[str, str]]


@dataclass(frozen=True)
class MemoryEvent:
    op: str
    args: Dict[str, Any]
    result: Any = None

    def to_dict(self) -> dict:
        return {'op': self.op, 'args': self.args, 'result': self.result}


def _handle_repr(handle: Optional[InteractionHandle]):
    return handle.to_dict() if handle is not None else None


def _key_repr(key: MaskKey):
    return list(key) if isinstance(key, tuple) else key


class MaskCache:
    """Último handle por categoria (e por (categoria, id) quando conhecido)."""

    def __init__(self):
        self._store: Dict[MaskKey, InteractionHandle] = {}

    def remember(self, key: MaskKey, handle: InteractionHandle) -> None:
        current = self._store.get(key)
        if current is None or handle.observed_step >= current.observed_step:
            self._store[key] = handle

    def recall(self, key: MaskKey) -> Optional[InteractionHandle]:
        return self._store.get(key)

    def __len__(self) -> int:
        return len(self._store)


@dataclass(frozen=True)
class RelocationRecord:
    category: str
    cell: Cell
    step: int


class RelocationLog:
    """Registro append-only de destinos de Put bem-sucedidos."""

    def __init__(self):
        self.records: List[RelocationRecord] = []
        self._seen: Set[RelocationRecord] = set()

    def record(self, category: str, cell: Cell, step: int) -> bool:
        entry = RelocationRecord(category, tuple(cell), step)
        if entry in self._seen:
            return False
        self._seen.add(entry)
        self.records.append(entry)
        return True

    def cells(self, category: str) -> Set[Cell]:
        return {r.cell for r in self.records if r.category == category}

    def excludes(self, category: str, cell: Cell) -> bool:
        """Correspondência exata de célula, por categoria."""
        return tuple(cell) in self.cells(category)

    def __len__(self) -> int:
        return len(self.records)


class StateLocationCache:
    """(categoria, assinatura de estado) -> (célula, handle)."""

    def __init__(self):
        self._store: Dict[Tuple[str, str], Tuple[Cell, InteractionHandle]] = {}

    def cache(self, category: str, signature: str, cell: Cell,
              handle: InteractionHandle) -> None:
        self._store[(category, signature)] = (tuple(cell), handle)

    def lookup(self, category: str, signature: str) -> Optional[Tuple[Cell, InteractionHandle]]:
        return self._store.get((category, signature))

    def forget(self, category: str, signature: str) -> None:
        self._store.pop((category, signature), None)


@dataclass
class EnvironmentMemory:
    """
    Agrupa os três caches com as flags de ablação.

    Com um mecanismo desligado, a escrita vira no-op e a leitura devolve
    None (ou nenhuma exclusão), mas o evento continua registrado. A exceção
    é remember_mask, que só registra quando o handle guardado muda.
    """
    mask_cache_enabled: bool = True
    relocation_enabled: bool = True
    state_cache_enabled: bool = True
    masks: MaskCache = field(default_factory=MaskCache)
    relocations: RelocationLog = field(default_factory=RelocationLog)
    states: StateLocationCache = field(default_factory=StateLocationCache)
    events: List[MemoryEvent] = field(default_factory=list)

    def _event(self, op: str, result=None, **args) -> None:
        self.events.append(MemoryEvent(op, args, result))

    def drain_events(self) -> List[MemoryEvent]:
        events, self.events = self.events, []
        return events

    def remember_mask(self, key: MaskKey, handle: InteractionHandle) -> None:
        """Guarda o handle; só registra evento quando instância ou célula mudam."""
        if not self.mask_cache_enabled:
            return
        previous = self.masks.recall(key)
        self.masks.remember(key, handle)
        if previous is None or (previous.instance_id, previous.observed_cell) \
                != (handle.instance_id, handle.observed_cell):
            self._event('remember', True, key=_key_repr(key), handle=_handle_repr(handle))

    def recall_mask(self, key: MaskKey) -> Optional[InteractionHandle]:
        handle = self.masks.recall(key) if self.mask_cache_enabled else None
        self._event('recall', _handle_repr(handle), key=_key_repr(key))
        return handle

    def record_relocation(self, category: str, cell: Cell, step: int) -> None:
        added = self.relocations.record(category, cell, step) if self.relocation_enabled else False
        self._event('record', added, category=category, cell=list(cell), step=step)

    def relocated_cells(self, category: str) -> Set[Cell]:
        return self.relocations.cells(category) if self.relocation_enabled else set()

    def cache_state_location(self, category: str, signature: str, cell: Cell,
                             handle: InteractionHandle) -> None:
        if self.state_cache_enabled:
            self.states.cache(category, signature, cell, handle)
        self._event('cache', self.state_cache_enabled, category=category,
                    signature=signature, cell=list(cell), handle=_handle_repr(handle))

    def lookup_state_location(self, category: str,
                              signature: str) -> Optional[Tuple[Cell, InteractionHandle]]:
        hit = self.states.lookup(category, signature) if self.state_cache_enabled else None
        self._event('lookup', [list(hit[0]), hit[1].to_dict()] if hit else None,
                    category=category, signature=signature)
        return hit
