"""
Módulo de Templates
Gera declarações de objetivo de alto nível a partir de um TaskSpec,
sorteando template e formas de superfície de forma determinística.
"""

import re
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..errors import EmbodiedError
from ..world.tasks import TaskFamily, TaskSpec
from .grammar import ARTICLES, tokenize
from .lexicon import Lexicon, PhraseEntry

F = TaskFamily

# Marcadores: {artigo:papel} ou {artigo:modificador:papel}; artigo em {a, the, pl}
TEMPLATES: Dict[Tuple[TaskFamily, bool], List[str]] = {
    (F.PICK_PLACE, False): [
        "put {a:O} on {the:R}",
        "place {a:O} in {the:R}",
        "move {a:O} to {the:R}",
        "take {a:O} and put it on {the:R}",
    ],
    (F.PICK_PLACE, True): [
        "put {a:O} slice on {the:R}",
        "slice {a:O} and put it on {the:R}",
        "place {a:sliced:O} on {the:R}",
        "cut {a:O} into slices and put a piece on {the:R}",
    ],
    (F.PICK_TWO_PLACE, False): [
        "put two {pl:O} on {the:R}",
        "move two {pl:O} to {the:R}",
        "throw two {pl:O} in {the:R}",
        "place two {pl:O} in {the:R}",
    ],
    (F.PICK_TWO_PLACE, True): [
        "put two {pl:sliced:O} on {the:R}",
        "move two {pl:sliced:O} to {the:R}",
        "slice {a:O} and put two pieces on {the:R}",
    ],
    (F.CLEAN_PLACE, False): [
        "put {a:clean:O} in {the:R}",
        "rinse {a:O} and put it in {the:R}",
        "wash {a:O} then place it on {the:R}",
        "clean {a:O} and move it to {the:R}",
    ],
    (F.HEAT_PLACE, False): [
        "put {a:hot:O} on {the:R}",
        "heat {a:O} and put it on {the:R}",
        "warm up {a:O} then place it in {the:R}",
        "cook {a:O} and move it to {the:R}",
    ],
    (F.HEAT_PLACE, True): [
        "put {a:heated:O} slice on {the:R}",
        "heat {a:sliced:O} and put it on {the:R}",
        "slice {a:O} then heat it and put it on {the:R}",
    ],
    (F.COOL_PLACE, False): [
        "put {a:cold:O} on {the:R}",
        "chill {a:O} and put it on {the:R}",
        "cool {a:O} then place it in {the:R}",
    ],
    (F.COOL_PLACE, True): [
        "put {a:chilled:O} slice on {the:R}",
        "chill {a:sliced:O} and place it on {the:R}",
        "slice {a:O} then cool it and put it on {the:R}",
    ],
    (F.EXAMINE_IN_LIGHT, False): [
        "examine {a:O} under {the:R}",
        "look at {a:O} under {the:R}",
        "inspect {a:O} by {the:R}",
        "pick up {a:O} and turn on {the:R}",
    ],
    (F.PICK_PLACE_MOVABLE_RECEPTACLE, False): [
        "place {a:O} in {a:M} on {a:R}",
        "put {a:O} in {a:M} on {the:R}",
        "put {a:O} in {a:M} and move it to {the:R}",
        "put {a:M} with {a:O} in it in {the:R}",
        "carry {a:O} with {a:M} to {the:R}",
    ],
    (F.PICK_PLACE_MOVABLE_RECEPTACLE, True): [
        "crack {a:O} and put it in {a:M} on {the:R}",
        "put {a:sliced:O} in {a:M} on {the:R}",
        "slice {a:O} and put a piece in {a:M} then move it to {the:R}",
    ],
}

_SLOT = re.compile(r"\{([^}]+)\}")


class InstructionGenerationError(EmbodiedError):
    """Léxico sem cobertura para as categorias da tarefa."""


@dataclass(frozen=True)
class Instruction:
    """Declaração de objetivo l (somente alto nível)."""
    tokens: Tuple[str, ...]

    @classmethod
    def from_text(cls, text: str) -> 'Instruction':
        return cls(tuple(tokenize(text)))

    @property
    def text(self) -> str:
        return ' '.join(self.tokens)


def template_slots(template: str) -> List[Tuple[str, Optional[str], str]]:
    """Lista de (artigo, modificador, papel) na ordem em que aparecem."""
    slots = []
    for raw in _SLOT.findall(template):
        parts = raw.split(':')
        if len(parts) == 2:
            slots.append((parts[0], None, parts[1]))
        else:
            slots.append((parts[0], parts[1], parts[2]))
    return slots


def render_noun_phrase(entry: PhraseEntry, article: str,
                       modifier: Optional[str] = None) -> List[str]:
    """
    Monta o sintagma nominal.

    Frases que já trazem artigo mantêm o próprio ('the fruit'); 'a'/'an'
    é recalculado contra a primeira palavra após o artigo.
    """
    if article == 'pl':
        return ([modifier] if modifier else []) + list(entry.plural_tokens)
    words = list(entry.tokens)
    own = None
    if words[0] in ARTICLES:
        own, words = words[0], words[1:]
    body = ([modifier] if modifier else []) + words
    if own == 'the' or (own is None and article == 'the'):
        det = 'the'
    else:
        det = 'an' if body[0][0] in 'aeiou' else 'a'
    return [det] + body


def render(template: str, phrases: Dict[str, PhraseEntry]) -> Instruction:
    """Preenche um template com as frases escolhidas por papel (O, M, R)."""
    tokens: List[str] = []
    # split com grupo de captura alterna texto (pares) e marcadores (ímpares)
    for idx, piece in enumerate(_SLOT.split(template)):
        if idx % 2:
            article, modifier, role = template_slots('{' + piece + '}')[0]
            tokens.extend(render_noun_phrase(phrases[role], article, modifier))
        else:
            tokens.extend(piece.split())
    return Instruction(tuple(tokens))


def role_categories(task: TaskSpec) -> Dict[str, str]:
    roles = {'O': task.target, 'R': task.destination}
    if task.mrecep:
        roles['M'] = task.mrecep
    return roles


def generate_instruction(task: TaskSpec, lexicon: Lexicon, seed: int,
                         split: str = 'seen') -> Instruction:
    """
    Gera a instrução de uma tarefa.

    Args:
        task: Tarefa vinculada
        lexicon: Léxico com split por frase
        seed: Semente do sorteio de template/frases
        split: 'seen' ou 'unseen' (unseen usa ao menos uma frase unseen)

    Returns:
        Instruction determinística para (task, seed, split)

    Raises:
        InstructionGenerationError: léxico sem cobertura
    """
    if split not in ('seen', 'unseen'):
        raise InstructionGenerationError(f"Split desconhecido: {split}")
    rng = np.random.default_rng([seed, 0 if split == 'seen' else 1])
    templates = TEMPLATES[(task.family, task.sliced)]
    template = templates[int(rng.integers(0, len(templates)))]
    roles = role_categories(task)

    forced = None
    if split == 'unseen':
        candidates = [role for role in ('O', 'M', 'R')
                      if role in roles and lexicon.phrases(roles[role], 'unseen')]
        if not candidates:
            raise InstructionGenerationError(
                f"Nenhuma frase unseen para {task.label()}")
        forced = candidates[int(rng.integers(0, len(candidates)))]

    phrases: Dict[str, PhraseEntry] = {}
    for role in ('O', 'M', 'R'):
        if role not in roles:
            continue
        pool = lexicon.phrases(roles[role], 'unseen' if role == forced else 'seen')
        if not pool:
            raise InstructionGenerationError(
                f"Léxico sem frase para {roles[role]} ({split})")
        phrases[role] = pool[int(rng.integers(0, len(pool)))]
    return render(template, phrases)
