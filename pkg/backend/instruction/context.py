"""
Módulo de Contexto
Preditor determinístico do contexto (c_O, c_M, c_R): casa frases do léxico
e atribui papéis pela posição na gramática dos templates.
"""

from dataclasses import dataclass
from typing import FrozenSet, List, Optional

from ..errors import EmbodiedError
from ..world.vocabulary import get_category
from .grammar import CARRIER_FIRST_MARKER, CARRIER_PREPOSITIONS, LOCATIVES, MODIFIER_WORDS
from .lexicon import Lexicon, Mention
from .templates import Instruction

PREPOSITION_WINDOW = 3


class ContextParseError(EmbodiedError):
    """Instrução sem categoria para um papel exigido ou fora da gramática."""


@dataclass(frozen=True)
class Context:
    c_O: str
    c_M: Optional[str] = None
    c_R: Optional[str] = None

    def presence(self) -> FrozenSet[str]:
        """Padrão de presença: quais papéis existem (sem as categorias)."""
        roles = {'O'}
        if self.c_M is not None:
            roles.add('M')
        if self.c_R is not None:
            roles.add('R')
        return frozenset(roles)

    def to_dict(self) -> dict:
        return {'c_O': self.c_O, 'c_M': self.c_M, 'c_R': self.c_R}


def _preceded_by(tokens, mention: Mention, words) -> bool:
    window = tokens[max(0, mention.start - PREPOSITION_WINDOW):mention.start]
    return any(tok in words for tok in window)


def extract_mentions(instruction: Instruction, lexicon: Lexicon) -> List[Mention]:
    return lexicon.scan(list(instruction.tokens), skip=MODIFIER_WORDS)


def assign_roles(tokens, mentions: List[Mention]) -> dict:
    """
    Papéis por posição: primeira menção é c_O, última (com locativo) é c_R,
    a do meio é c_M. No padrão "X with Y in it" o carregador vem primeiro.
    """
    if not mentions:
        raise ContextParseError("Nenhum objeto reconhecido na instrução")
    if len(mentions) > 3:
        raise ContextParseError(f"Menções demais ({len(mentions)}) para a gramática")
    roles = {'O': mentions[0]}
    if len(mentions) >= 2:
        last = mentions[-1]
        if not _preceded_by(tokens, last, LOCATIVES):
            raise ContextParseError(f"Destino sem locativo: {last.category}")
        roles['R'] = last
    if len(mentions) == 3:
        first, second = mentions[0], mentions[1]
        after = tuple(tokens[second.end:second.end + len(CARRIER_FIRST_MARKER)])
        if after == CARRIER_FIRST_MARKER and _preceded_by(tokens, second, {'with'}):
            roles['O'], roles['M'] = second, first
        else:
            if not _preceded_by(tokens, second, CARRIER_PREPOSITIONS):
                raise ContextParseError(f"Carregador sem preposição: {second.category}")
            roles['M'] = second
        if not get_category(roles['M'].category).movable_receptacle:
            raise ContextParseError(f"{roles['M'].category} não é receptáculo móvel")
    return roles


def predict_context(instruction: Instruction, lexicon: Lexicon) -> Context:
    """
    Prediz (c_O, c_M, c_R) em uma passada.

    Raises:
        ContextParseError: instrução fora da gramática (nunca chuta)
    """
    roles = assign_roles(instruction.tokens, extract_mentions(instruction, lexicon))
    return Context(
        c_O=roles['O'].category,
        c_M=roles['M'].category if 'M' in roles else None,
        c_R=roles['R'].category if 'R' in roles else None,
    )
