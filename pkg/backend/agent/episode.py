"""
Módulo do Episódio
Laço de controle do agente: observa, atualiza a memória do ambiente,
planeja os sub-objetivos e executa as ações detalhadas com tratamento de
falhas (nova tentativa com máscara retrospectiva, depois novo alvo).
"""

import logging
import math
from typing import Dict, List, Optional, Set, Tuple

from ..cap.detailed import BeliefSnapshot, DetailedAction, DetailedKind, plan_detailed
from ..cap.frames import PlanningError, SubGoal, SubGoalAction, SubstitutionError
from ..cap.planner import Plan, planner_for
from ..eam.memory import EnvironmentMemory
from ..eam.semantic_map import SemanticMap, approach_cells, select_target, target_distance
from ..instruction.context import ContextParseError
from ..instruction.lexicon import Lexicon
from ..instruction.templates import Instruction
from ..nav.actions import face_toward, path_to_actions
from ..nav.fmm import extract_path
from ..nav.frontier import next_frontier
from ..world.dynamics import Action, ActionKind, ActionOutcome, OutcomeStatus, step
from ..world.grid_world import Cell, GridWorld
from ..world.observation import Detection, InteractionHandle, Observation, observe
from ..world.tasks import TaskSpec, check_goal
from ..world.vocabulary import VOCABULARY, categories_where
from .config import AgentConfig
from .trace import EpisodeTrace, TraceEvent

logger = logging.getLogger(__name__)

D = DetailedKind

SLICED_SIGNATURE = 'sliced'

# Passo detalhado que provoca a mudança de estado de cada sub-objetivo
_STATE_TRIGGERS = {
    SubGoalAction.CLEAN: (D.TOGGLE_ON, 'clean'),
    SubGoalAction.HEAT: (D.TOGGLE_ON, 'hot'),
    SubGoalAction.COOL: (D.CLOSE, 'cold'),
}

SCAN_ROTATIONS = 3

# Móveis que escondem o conteúdo quando fechados
CONTAINER_CATEGORIES: Tuple[str, ...] = tuple(
    categories_where(openable=True, receptacle=True, pickupable=False))


class _EpisodeOver(Exception):
    """Fim antecipado do episódio (orçamento esgotado ou alvo inexistente)."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class _Reselect(Exception):
    """Detecções descartadas: escolher outro alvo e navegar de novo."""


class EpisodeRunner:
    """Estado de um episódio; um agente, uma thread lógica."""

    def __init__(self, world: GridWorld, instruction: Instruction, lexicon: Lexicon,
                 config: AgentConfig, task: Optional[TaskSpec] = None,
                 episode_id: str = 'episode'):
        self.world = world.copy()
        if config.r_int is not None:
            self.world.config = self.world.config.model_copy(update={'r_int': config.r_int})
        self.instruction = instruction
        self.lexicon = lexicon
        self.config = config
        self.task = task
        self.smap = SemanticMap(self.world.shape, config.inflation_radius)
        self.memory = EnvironmentMemory(
            mask_cache_enabled=config.eam_mask_cache,
            relocation_enabled=config.eam_relocation,
            state_cache_enabled=config.eam_state_cache,
        )
        self.trace = EpisodeTrace(header={
            'episode_id': episode_id,
            'world': json_record(self.world),
            'task': task.model_dump(mode='json') if task else None,
            'instruction': instruction.text,
            'config': config.model_dump(mode='json'),
        })
        self.plan: Optional[Plan] = None
        self.sub_goal_index = 0
        self.failures = 0
        self.last_obs: Optional[Observation] = None
        self.held_category: Optional[str] = None
        self.held_id: Optional[str] = None
        self.open_belief: Dict[str, bool] = {}
        self.cleared: Dict[str, Set[Cell]] = {}
        self.visited_frontiers: Set[Cell] = set()
        self.deposited: Dict[str, str] = {}
        self.pending_state: Dict[str, str] = {}
        self.sliced_done = False
        self.active_categories: Set[str] = set()
        self.bad_approach: Dict[Cell, Set[Cell]] = {}
        self.searched: Set[Cell] = set()
        self.opened_for: Dict[Cell, InteractionHandle] = {}
        self.viewpoints: List[Cell] = []
        self.revisited: Set[Cell] = set()

    # ------------------------------------------------------------------
    # Execução de ações
    # ------------------------------------------------------------------
    def _observe(self) -> Observation:
        obs = observe(self.world)
        self.smap.integrate_observation(obs, obs.pose, self.world.config)
        for det in obs.detections:
            instance_id = det.handle.instance_id
            if det.category in self.active_categories:
                # objeto já entregue não responde pela categoria
                if tuple(det.cell) not in self.memory.relocated_cells(det.category):
                    self.memory.remember_mask(det.category, det.handle)
                self.memory.remember_mask((det.category, instance_id), det.handle)
            signature = self.pending_state.pop(instance_id, None)
            if signature is not None:
                self.memory.cache_state_location(det.category, signature, det.cell, det.handle)
        self.last_obs = obs
        return obs

    def act(self, action: Action, tolerate: bool = False) -> ActionOutcome:
        """
        Executa uma ação, observa e registra o evento.

        Raises:
            _EpisodeOver: orçamento de passos ou de falhas esgotado
        """
        if action.kind is not ActionKind.STOP and len(self.trace.events) >= self.config.max_steps:
            raise _EpisodeOver('max_steps')
        outcome = step(self.world, action)
        if action.kind is not ActionKind.STOP:
            self._observe()
        self.trace.events.append(TraceEvent(
            step=len(self.trace.events),
            sub_goal=self.sub_goal_index,
            action=action.to_dict(),
            outcome=outcome.to_dict(),
            memory=[e.to_dict() for e in self.memory.drain_events()],
        ))
        if action.is_interaction and not outcome.success \
                and not (tolerate and outcome.status is OutcomeStatus.ALREADY_IN_STATE):
            self.failures += 1
            logger.debug(f"Falha de interação {action.kind.value}: {outcome.status.value} "
                         f"({self.failures}/{self.config.max_interaction_failures})")
            if self.failures >= self.config.max_interaction_failures:
                raise _EpisodeOver('max_interaction_failures')
        return outcome

    # ------------------------------------------------------------------
    # Navegação
    # ------------------------------------------------------------------
    def _follow(self, goals: List[Cell]) -> bool:
        """
        Navega até alguma célula de `goals`, replanejando quando o mapa
        revela obstáculo no caminho restante.

        Returns:
            False se nenhuma meta é alcançável no mapa atual
        """
        while True:
            pose = self.world.agent
            if tuple(pose.cell) in goals:
                return True
            path = None
            for radius in (self.config.inflation_radius, 0):
                field = self.smap.field_to(goals, radius, via=pose.cell)
                path = extract_path(field, pose.cell)
                if path is not None:
                    break
            if path is None:
                return False
            replan = False
            for action in path_to_actions(path, pose):
                outcome = self.act(action)
                if action.kind is ActionKind.MOVE_AHEAD:
                    if not outcome.success:
                        dr, dc = self.world.agent.heading.vector
                        ahead = (pose.cell[0] + dr, pose.cell[1] + dc)
                        self.smap.mark_obstacle(ahead)
                        replan = True
                        break
                    remaining = path[path.index(tuple(self.world.agent.cell)):]
                    if any(self.smap.obstacle[c] for c in remaining if c not in goals):
                        replan = True
                        break
            if not replan and tuple(self.world.agent.cell) in goals:
                return True

    def _scan(self, category: Optional[str] = None,
              detailed: Optional[DetailedAction] = None) -> None:
        """Gira no lugar; para antes se o objeto fatiado procurado entrar em vista."""
        watch = category is not None and self._required_sliced(category, detailed)
        for _ in range(SCAN_ROTATIONS):
            if watch and any(self._usable(d, detailed) for d in self._visible(category)):
                break
            self.act(Action(ActionKind.ROTATE_RIGHT))
        self._viewpoint()

    def _viewpoint(self) -> None:
        cell = tuple(self.world.agent.cell)
        if cell not in self.viewpoints:
            self.viewpoints.append(cell)

    def _explore(self, category: str, detailed: Optional[DetailedAction]) -> None:
        """
        Procura fora do mapa: a fronteira mais próxima; sem fronteiras, os
        contêineres fechados ainda não abertos (só para objetos pegáveis);
        por fim, para um objeto que mudou de aparência, os pontos de vista
        já usados.

        Raises:
            _EpisodeOver: nada mais a procurar ('target_not_found')
        """
        frontier = next_frontier(self.smap, self.world.agent, exclude=self.visited_frontiers)
        if frontier is not None:
            self.visited_frontiers.add(frontier)
            if self._follow([frontier]):
                self._scan(category, detailed)
            return
        spec = VOCABULARY.get(category)
        if spec is not None and spec.pickupable:
            container = self._nearest_unsearched(CONTAINER_CATEGORIES)
            if container is not None:
                self._search_container(*container, category, detailed)
                return
        if self._required_sliced(category, detailed):
            viewpoint = self._nearest(c for c in self.viewpoints if c not in self.revisited)
            if viewpoint is not None:
                self.revisited.add(viewpoint)
                logger.debug(f"Revisitando {viewpoint} em busca de {category} fatiado")
                if self._follow([viewpoint]):
                    self._scan(category, detailed)
                return
        raise _EpisodeOver('target_not_found')

    def _nearest(self, cells) -> Optional[Cell]:
        field = self.smap.distance_field(self.world.agent)
        scored = [(field.at(c), c) for c in cells]
        scored = [item for item in scored if math.isfinite(item[0])]
        return min(scored)[1] if scored else None

    def _nearest_unsearched(self, categories) -> Optional[Tuple[str, Cell]]:
        """Contêiner avistado mais próximo (distância FMM) ainda não aberto."""
        field = self.smap.distance_field(self.world.agent)
        scored = []
        for container in categories:
            for cell in self.smap.sighting_cells(container):
                if cell in self.searched:
                    continue
                dist = target_distance(field, cell)
                if math.isfinite(dist):
                    scored.append((dist, cell, container))
        if not scored:
            return None
        _, cell, container = min(scored)
        return container, cell

    def _search_container(self, container: str, cell: Cell, category: str,
                          detailed: Optional[DetailedAction]) -> None:
        """
        Abre um contêiner e olha dentro. Se o alvo estiver lá, o contêiner
        fica aberto até a coleta; senão é fechado de novo.
        """
        self.searched.add(cell)
        if not self._arrive(cell):
            return
        det = next((d for d in self._visible(container) if tuple(d.cell) == tuple(cell)), None)
        if det is None:
            return
        outcome = self.act(Action(ActionKind.OPEN, det.handle), tolerate=True)
        if not outcome.success:
            return
        if any(self._usable(d, detailed) and tuple(d.cell) == tuple(cell)
               for d in self._visible(category)):
            logger.debug(f"{category} encontrado dentro de {det.handle.instance_id}")
            self.opened_for[tuple(cell)] = det.handle
        else:
            self.act(Action(ActionKind.CLOSE, det.handle), tolerate=True)

    def _distance(self, cell: Cell) -> float:
        pose = self.world.agent.cell
        return math.hypot(cell[0] - pose[0], cell[1] - pose[1])

    def _in_reach(self, cell: Cell) -> bool:
        return self.world.in_interaction_range(tuple(cell))

    def _required_sliced(self, category: str, detailed: Optional[DetailedAction]) -> Optional[bool]:
        if self.plan is None or not self.plan.sliced or category != self.plan.context.c_O:
            return None
        if detailed is not None and detailed.kind is D.SLICE:
            return False
        return True if self.sliced_done else None

    def _usable(self, det: Detection, detailed: Optional[DetailedAction]) -> bool:
        if detailed is not None and detailed.retrieve and detailed.target == det.category:
            return det.handle.instance_id == self.deposited.get(det.category)
        need = self._required_sliced(det.category, detailed)
        if need is not None and det.sliced != need:
            return False
        return tuple(det.cell) not in self.memory.relocated_cells(det.category)

    def _visible(self, category: str) -> List[Detection]:
        if self.last_obs is None:
            return []
        return [d for d in self.last_obs.detections if d.category == category]

    def _resolve_target(self, category: str, detailed: Optional[DetailedAction]) -> Optional[Cell]:
        cleared = self.cleared.setdefault(category, set())
        if self._required_sliced(category, detailed):
            hit = self.memory.lookup_state_location(category, SLICED_SIGNATURE)
            if hit is not None and hit[0] not in cleared:
                return hit[0]
        if self.config.map_targets:
            cell = select_target(self.smap, category, self.memory.relocated_cells(category),
                                 self.world.agent, exclude=cleared)
            if cell is not None:
                return cell
        visible = [d for d in self._visible(category)
                   if self._usable(d, detailed) and tuple(d.cell) not in cleared]
        if visible:
            return min(visible, key=lambda d: (self._distance(d.cell), d.cell)).cell
        return None

    def _approach_goals(self, target: Cell) -> List[Cell]:
        """Vizinhos livres no mapa com linha de visada até o alvo."""
        bad = self.bad_approach.get(tuple(target), set())
        return [c for c in approach_cells(target, self.smap.shape)
                if not self.smap.obstacle[c] and c not in bad
                and self.smap.line_of_sight(c, target)]

    def _arrive(self, target: Cell) -> bool:
        """
        Navega até um vizinho do alvo e o encara.

        Returns:
            False se nenhum vizinho alcançável deixa o alvo ao alcance
        """
        while True:
            goals = self._approach_goals(target)
            if not goals or not self._follow(goals):
                return False
            for action in face_toward(self.world.agent, target):
                self.act(action)
            if self._in_reach(target):
                return True
            # bloqueio só percebido ao chegar
            self.bad_approach.setdefault(tuple(target), set()).add(tuple(self.world.agent.cell))

    def goto(self, category: str, detailed: Optional[DetailedAction]) -> None:
        """
        Pseudo-passo Goto: resolve o alvo (cache de estado, mapa, detecção
        atual ou exploração), navega até um vizinho e encara o alvo.
        """
        while True:
            if any(self._usable(d, detailed) and self._in_reach(d.cell)
                   for d in self._visible(category)):
                return
            target = self._resolve_target(category, detailed)
            if target is None:
                self._explore(category, detailed)
                continue
            if not self._arrive(target):
                self.cleared[category].add(target)
                continue
            found = any(self._usable(d, detailed) for d in self._visible(category)
                        if tuple(d.cell) == tuple(target))
            if found or self._recallable(category, detailed):
                return
            # alvo lembrado não está mais ali
            self.cleared[category].add(target)
            self.smap.clear_sighting(category, target)

    def _recallable(self, category: str, detailed: Optional[DetailedAction]) -> bool:
        """Há algo da categoria ali, só que não detectável (ex.: ocluído)."""
        return not self._visible(category) and detailed is not None \
            and detailed.target == category and detailed.kind is not D.GOTO

    # ------------------------------------------------------------------
    # Interação
    # ------------------------------------------------------------------
    def _recall(self, category: str, detailed: DetailedAction) -> Optional[InteractionHandle]:
        if detailed.retrieve and category in self.deposited:
            handle = self.memory.recall_mask((category, self.deposited[category]))
            if handle is not None:
                return handle
        return self.memory.recall_mask(category)

    def _pick_handle(self, detailed: DetailedAction) -> Optional[InteractionHandle]:
        """
        Handle para a interação; None quando não há detecção nem máscara.

        Raises:
            _Reselect: só há detecções descartadas (aparência ou realocação)
        """
        category = detailed.target
        in_reach = [d for d in self._visible(category) if self._in_reach(d.cell)]
        usable = [d for d in in_reach if self._usable(d, detailed)]
        if usable:
            return min(usable, key=lambda d: (self._distance(d.cell), d.handle.instance_id)).handle
        if in_reach or any(self._usable(d, detailed) for d in self._visible(category)):
            for det in in_reach:
                self.cleared.setdefault(category, set()).add(tuple(det.cell))
                self.smap.clear_sighting(category, det.cell)
            raise _Reselect()
        return self._recall(category, detailed)

    def interact(self, detailed: DetailedAction, goto_category: Optional[str]) -> None:
        """Executa um passo de interação com a política de nova tentativa."""
        kind = detailed.kind.action_kind
        tolerate = detailed.tolerate or kind in (ActionKind.OPEN, ActionKind.CLOSE)
        while True:
            try:
                handle = self._pick_handle(detailed)
            except _Reselect:
                self.goto(goto_category or detailed.target, detailed)
                continue
            outcome = self.act(Action(kind, handle), tolerate=tolerate)
            if outcome.success or (tolerate and outcome.status is OutcomeStatus.ALREADY_IN_STATE):
                self._after_success(detailed, handle, outcome)
                return
            if self.config.eam_mask_cache:
                recalled = self._recall(detailed.target, detailed)
                if recalled is not None and recalled != handle:
                    outcome = self.act(Action(kind, recalled), tolerate=tolerate)
                    if outcome.success or (tolerate and outcome.status is OutcomeStatus.ALREADY_IN_STATE):
                        self._after_success(detailed, recalled, outcome)
                        return
            self.goto(goto_category or detailed.target, detailed)

    def _after_success(self, detailed: DetailedAction, handle: Optional[InteractionHandle],
                       outcome: ActionOutcome) -> None:
        category = detailed.target
        kind = detailed.kind
        if kind in (D.OPEN, D.CLOSE):
            self.open_belief[category] = kind is D.OPEN
        if not outcome.success or handle is None:
            return
        instance_id = outcome.instance_id or handle.instance_id
        self._viewpoint()
        self.memory.remember_mask(category, handle)
        self.memory.remember_mask((category, instance_id), handle)
        if kind is D.PICKUP:
            self.held_category, self.held_id = category, instance_id
            still_there = any(d.cell == handle.observed_cell for d in self._visible(category))
            if not still_there:
                self.smap.clear_sighting(category, handle.observed_cell)
            container = self.opened_for.pop(tuple(handle.observed_cell), None)
            if container is not None:
                self.act(Action(ActionKind.CLOSE, container), tolerate=True)
        elif kind is D.PUT:
            moved, moved_id = self.held_category, self.held_id
            self.held_category, self.held_id = None, None
            if moved is not None:
                self.memory.record_relocation(moved, handle.observed_cell,
                                              self.world.step_count)
                self.deposited[moved] = moved_id
        elif kind is D.SLICE:
            self.sliced_done = True
            self.smap.clear_sighting(category, handle.observed_cell)
            slices = [d for d in self._visible(category)
                      if d.sliced and tuple(d.cell) == tuple(handle.observed_cell)]
            piece = slices[0].handle if slices else handle
            self.memory.cache_state_location(category, SLICED_SIGNATURE,
                                             handle.observed_cell, piece)

    # ------------------------------------------------------------------
    # Sub-objetivos
    # ------------------------------------------------------------------
    def belief(self) -> BeliefSnapshot:
        return BeliefSnapshot(held=self.held_category, open_state=dict(self.open_belief))

    def run_sub_goal(self, index: int, sub_goal: SubGoal) -> None:
        self.sub_goal_index = index
        self.active_categories = {c for c in (sub_goal.obj, sub_goal.receptacle) if c}
        logger.debug(f"Sub-objetivo {index}: {sub_goal.to_list()}")
        steps = plan_detailed(sub_goal, self.belief())
        self.plan.realized[index] = steps
        trigger = _STATE_TRIGGERS.get(sub_goal.action)
        goto_category = None
        for position, detailed in enumerate(steps):
            if detailed.kind is D.GOTO:
                goto_category = detailed.target
                following = next((s for s in steps[position + 1:] if s.kind is not D.GOTO), None)
                self.goto(detailed.target, following)
                continue
            self.interact(detailed, goto_category)
            if trigger is not None and detailed.kind is trigger[0] \
                    and sub_goal.obj in self.deposited:
                self.pending_state[self.deposited[sub_goal.obj]] = trigger[1]
                trigger = None

    def run(self) -> EpisodeTrace:
        reason = 'stop'
        try:
            self._observe()
            self.plan = planner_for(self.config.cap_enabled)(self.instruction, self.lexicon)
            for index, sub_goal in enumerate(self.plan.sub_goals):
                self.run_sub_goal(index, sub_goal)
            self.act(Action(ActionKind.STOP))
        except _EpisodeOver as end:
            reason = end.reason
        except ContextParseError as e:
            logger.debug(f"Contexto não extraído: {e}")
            reason = 'context_parse_error'
        except (PlanningError, SubstitutionError) as e:
            logger.debug(f"Planejamento falhou: {e}")
            reason = 'planning_error'
        return self._finish(reason)

    def _finish(self, reason: str) -> EpisodeTrace:
        report = check_goal(self.world, self.task) if self.task is not None else None
        self.trace.terminal = {
            'success': bool(report and report.success),
            'steps': len(self.trace.events),
            'reason': reason,
            'goal': report.to_dict() if report else None,
            'plan': self.plan.to_record() if self.plan else None,
            'memory': [e.to_dict() for e in self.memory.drain_events()],
        }
        logger.debug(f"Episódio {self.trace.episode_id}: {reason}, "
                     f"{len(self.trace.events)} passos")
        return self.trace


def json_record(world: GridWorld) -> dict:
    return world.to_record().model_dump(mode='json')


def run_episode(world: GridWorld, instruction: Instruction, lexicon: Lexicon,
                config: AgentConfig, task: Optional[TaskSpec] = None,
                episode_id: str = 'episode') -> EpisodeTrace:
    """
    Executa um episódio completo em uma cópia do mundo.

    Args:
        world: Mundo inicial (não é alterado)
        instruction: Declaração de objetivo
        lexicon: Léxico do preditor de contexto
        config: Flags de ablação e orçamentos
        task: Tarefa usada apenas para pontuar o terminal
        episode_id: Identificador gravado no cabeçalho do trace

    Returns:
        EpisodeTrace com exatamente um terminal
    """
    return EpisodeRunner(world, instruction, lexicon, config, task, episode_id).run()
