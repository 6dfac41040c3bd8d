"""
Módulo do Planejador
Compõe predição de contexto, geração de frames e substituição em um Plan.
Também contém o extrator de passada única usado na ablação sem contexto.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from ..instruction.context import Context, assign_roles, extract_mentions, predict_context
from ..instruction.lexicon import Lexicon
from ..instruction.templates import Instruction
from ..world.tasks import TaskFamily
from ..world.vocabulary import AUXILIARY_CATEGORIES
from .detailed import DetailedAction
from .frames import MetaClass, SubGoal, classify_family, canonical_frames, substitute

logger = logging.getLogger(__name__)

_ROLE_RANK = {MetaClass.X_O: 0, MetaClass.X_M: 1, MetaClass.X_R: 2}
_ROLE_KEY = {MetaClass.X_O: 'O', MetaClass.X_M: 'M', MetaClass.X_R: 'R'}


@dataclass
class Plan:
    """
    Plano de sub-objetivos com contexto explícito compartilhado.

    As expansões detalhadas são preenchidas durante a execução
    (dependem da crença), uma lista por sub-objetivo.
    """
    context: Context
    family: TaskFamily
    sliced: bool
    sub_goals: List[SubGoal]
    realized: List[List[DetailedAction]] = field(default_factory=list)

    def __post_init__(self):
        if not self.realized:
            self.realized = [[] for _ in self.sub_goals]

    def categories(self) -> set:
        return {c for g in self.sub_goals for c in (g.obj, g.receptacle) if c is not None}

    def is_context_closed(self) -> bool:
        """Todo O_n/R_n pertence ao contexto ou às categorias auxiliares."""
        allowed = {c for c in (self.context.c_O, self.context.c_M, self.context.c_R) if c}
        return self.categories() <= allowed | AUXILIARY_CATEGORIES

    def to_record(self) -> dict:
        return {
            'context': self.context.to_dict(),
            'family': self.family.value,
            'sliced': self.sliced,
            'sub_goals': [g.to_list() for g in self.sub_goals],
            'detailed': [[a.to_list() for a in steps] for steps in self.realized],
        }


def plan(instruction: Instruction, lexicon: Lexicon) -> Plan:
    """
    f_sub(l): contexto -> frames -> substituição.

    Args:
        instruction: Declaração de objetivo
        lexicon: Léxico usado pelo preditor de contexto

    Returns:
        Plan com sub-objetivos sem meta-classes

    Raises:
        ContextParseError: instrução fora da gramática
        PlanningError: família não classificável
    """
    context = predict_context(instruction, lexicon)
    family, sliced = classify_family(instruction, context.presence())
    sub_goals = substitute(canonical_frames(family, sliced), context)
    logger.debug(f"Plano para '{instruction.text}': {[g.to_list() for g in sub_goals]}")
    return Plan(context, family, sliced, sub_goals)


def plan_without_context(instruction: Instruction, lexicon: Lexicon) -> Plan:
    """
    Extrator de passada única (ablação sem contexto).

    Cada marcador de cada sub-objetivo é resolvido de forma independente a
    partir da menção bruta: candidatos = [categoria casada] + confundíveis
    da frase, escolhido por (índice do sub-objetivo + posto do papel).
    Categorias auxiliares dos frames não mudam.
    """
    mentions = extract_mentions(instruction, lexicon)
    roles = assign_roles(instruction.tokens, mentions)
    context = Context(
        c_O=roles['O'].category,
        c_M=roles['M'].category if 'M' in roles else None,
        c_R=roles['R'].category if 'R' in roles else None,
    )
    family, sliced = classify_family(instruction, context.presence())
    frames = canonical_frames(family, sliced)

    def resolve(slot, n: int) -> Optional[str]:
        if not isinstance(slot, MetaClass):
            return slot
        mention = roles[_ROLE_KEY[slot]]
        candidates = [mention.category] + list(mention.entry.confusables)
        return candidates[(n + _ROLE_RANK[slot]) % len(candidates)]

    sub_goals = [SubGoal(f.action, resolve(f.obj, n), resolve(f.receptacle, n))
                 for n, f in enumerate(frames)]
    logger.debug(f"Plano sem contexto: {[g.to_list() for g in sub_goals]}")
    return Plan(context, family, sliced, sub_goals)


def planner_for(cap_enabled: bool):
    return plan if cap_enabled else plan_without_context


def sub_goal_accuracy(predicted: List[SubGoal], reference: List[SubGoal]) -> Dict[str, float]:
    """Acurácia exata da sequência e fração de sub-objetivos corretos por posição."""
    if not reference:
        return {'exact': 0.0, 'per_step': 0.0}
    hits = sum(1 for p, r in zip(predicted, reference) if p == r)
    return {
        'exact': float(predicted == reference),
        'per_step': hits / max(len(reference), len(predicted)),
    }
