"""
Módulo de Trace do Episódio
Registro de eventos em JSON-lines (cabeçalho, um evento por passo e um
terminal) e verificação por replay contra uma cópia nova do mundo.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

from ..errors import EmbodiedError
from ..world.dynamics import Action, step
from ..world.grid_world import GridWorld, WorldRecord

logger = logging.getLogger(__name__)

TERMINAL_REASONS = (
    'stop', 'max_steps', 'max_interaction_failures', 'target_not_found',
    'context_parse_error', 'planning_error',
)


class TraceFormatError(EmbodiedError):
    """Arquivo de trace malformado (sem cabeçalho ou com terminal ausente/repetido)."""


@dataclass
class TraceEvent:
    step: int
    sub_goal: int
    action: Dict[str, Any]
    outcome: Dict[str, Any]
    memory: List[Dict[str, Any]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {'type': 'step', 'step': self.step, 'sub_goal': self.sub_goal,
                'action': self.action, 'outcome': self.outcome, 'memory': self.memory}

    @classmethod
    def from_dict(cls, data: dict) -> 'TraceEvent':
        return cls(step=data['step'], sub_goal=data['sub_goal'], action=data['action'],
                   outcome=data['outcome'], memory=data.get('memory', []))


@dataclass
class EpisodeTrace:
    """
    Trace de um episódio.

    header: episode_id, world (registro inicial), task, instruction, config
    terminal: success, steps (L, inclui o Stop), reason, goal, plan, memory
    """
    header: Dict[str, Any]
    events: List[TraceEvent] = field(default_factory=list)
    terminal: Optional[Dict[str, Any]] = None

    @property
    def episode_id(self) -> str:
        return self.header.get('episode_id', '')

    @property
    def success(self) -> bool:
        return bool(self.terminal and self.terminal.get('success'))

    @property
    def steps(self) -> int:
        return len(self.events)

    @property
    def reason(self) -> Optional[str]:
        return self.terminal.get('reason') if self.terminal else None

    @property
    def goal(self) -> Optional[dict]:
        return self.terminal.get('goal') if self.terminal else None

    def memory_events(self, op: Optional[str] = None) -> List[dict]:
        """Eventos de memória de todos os passos (e do terminal), filtrados por op."""
        out = [m for ev in self.events for m in ev.memory]
        if self.terminal:
            out.extend(self.terminal.get('memory', []))
        return [m for m in out if op is None or m['op'] == op]

    def to_jsonl(self) -> str:
        lines = [dict(self.header, type='header')]
        lines.extend(ev.to_dict() for ev in self.events)
        if self.terminal is not None:
            lines.append(dict(self.terminal, type='terminal'))
        return '\n'.join(json.dumps(line, sort_keys=True, separators=(',', ':'))
                         for line in lines) + '\n'

    @classmethod
    def from_jsonl(cls, text: str) -> 'EpisodeTrace':
        """
        Raises:
            TraceFormatError: cabeçalho ausente ou número de terminais != 1
        """
        records = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as e:
                raise TraceFormatError(f"Linha {lineno} inválida: {e}") from e
        if not records or records[0].get('type') != 'header':
            raise TraceFormatError("Trace sem cabeçalho")
        terminals = [r for r in records if r.get('type') == 'terminal']
        if len(terminals) != 1:
            raise TraceFormatError(f"Trace com {len(terminals)} terminais")
        header = {k: v for k, v in records[0].items() if k != 'type'}
        events = [TraceEvent.from_dict(r) for r in records if r.get('type') == 'step']
        terminal = {k: v for k, v in terminals[0].items() if k != 'type'}
        return cls(header=header, events=events, terminal=terminal)

    def write(self, path) -> None:
        Path(path).write_text(self.to_jsonl(), encoding='utf-8')

    @classmethod
    def read(cls, path) -> 'EpisodeTrace':
        return cls.from_jsonl(Path(path).read_text(encoding='utf-8'))


@dataclass
class ReplayReport:
    episode_id: str
    checked: int
    mismatches: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.mismatches

    def to_dict(self) -> dict:
        return {'episode_id': self.episode_id, 'checked': self.checked,
                'ok': self.ok, 'mismatches': list(self.mismatches)}


def replay_trace(trace: EpisodeTrace) -> ReplayReport:
    """
    Reexecuta as ações do trace em uma cópia nova do mundo do cabeçalho e
    compara os status registrados.

    Returns:
        ReplayReport (ok quando todos os status e o número de passos batem)
    """
    world = GridWorld.from_record(WorldRecord.model_validate(trace.header['world']))
    report = ReplayReport(trace.episode_id, 0)
    for event in trace.events:
        outcome = step(world, Action.from_dict(event.action))
        report.checked += 1
        if outcome.status.value != event.outcome['status']:
            report.mismatches.append(
                f"passo {event.step}: {outcome.status.value} != {event.outcome['status']}")
    if trace.terminal is not None and trace.terminal.get('steps') != len(trace.events):
        report.mismatches.append(
            f"terminal registra {trace.terminal.get('steps')} passos, trace tem {len(trace.events)}")
    if not report.ok:
        logger.warning(f"Replay divergente em {trace.episode_id}: {len(report.mismatches)} diferenças")
    return report
