"""
Módulo de Léxico
Tabela de formas de superfície por categoria, com split seen/unseen e
entradas de ambiguidade (confundíveis) usadas apenas pelo extrator sem contexto.
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, Field, ValidationError

from ..errors import EmbodiedError
from ..world.vocabulary import VOCABULARY
from .grammar import ARTICLES, RESERVED_WORDS, tokenize

logger = logging.getLogger(__name__)

DEFAULT_LEXICON_PATH = Path(__file__).parent / 'data' / 'lexicon.json'


class LexiconError(EmbodiedError):
    """Léxico inválido (categoria sem frase seen, frase ambígua, palavra reservada)."""


class PhraseEntry(BaseModel):
    phrase: str
    split: Literal['seen', 'unseen'] = 'seen'
    plural: Optional[str] = None
    confusables: List[str] = Field(default_factory=list)

    @property
    def tokens(self) -> Tuple[str, ...]:
        return tuple(tokenize(self.phrase))

    @property
    def plural_tokens(self) -> Tuple[str, ...]:
        if self.plural:
            return tuple(tokenize(self.plural))
        words = [w for w in self.tokens]
        if words and words[0] in ARTICLES:
            words = words[1:]
        words[-1] = pluralize(words[-1])
        return tuple(words)


def pluralize(word: str) -> str:
    if word.endswith(('s', 'x', 'ch', 'sh')):
        return word + 'es'
    if word.endswith('y') and len(word) > 1 and word[-2] not in 'aeiou':
        return word[:-1] + 'ies'
    return word + 's'


@dataclass(frozen=True)
class Mention:
    """Ocorrência de uma frase do léxico em uma instrução."""
    category: str
    start: int
    end: int
    entry: PhraseEntry
    plural: bool = False


class Lexicon:
    """
    Léxico imutável: categoria -> frases, com índice reverso
    frase (singular e plural) -> categoria.
    """

    def __init__(self, table: Dict[str, List[PhraseEntry]]):
        self.table = {cat: list(entries) for cat, entries in table.items()}
        self._index: Dict[Tuple[str, ...], Tuple[str, PhraseEntry, bool]] = {}
        self._validate()

    def _validate(self) -> None:
        for category, entries in self.table.items():
            if category not in VOCABULARY:
                raise LexiconError(f"Categoria fora do vocabulário: {category}")
            if not any(e.split == 'seen' for e in entries):
                raise LexiconError(f"Categoria sem frase seen: {category}")
            for entry in entries:
                for other in entry.confusables:
                    if other not in VOCABULARY:
                        raise LexiconError(f"Confundível desconhecido: {other}")
                for form, plural in ((entry.tokens, False), (entry.plural_tokens, True)):
                    if not form:
                        raise LexiconError(f"Frase vazia em {category}")
                    content = form[1:] if form[0] in ARTICLES else form
                    reserved = [w for w in content if w in RESERVED_WORDS or w in ARTICLES]
                    if reserved:
                        raise LexiconError(
                            f"Frase '{' '.join(form)}' usa palavras reservadas: {reserved}")
                    known = self._index.get(form)
                    if known is not None and known[0] != category:
                        raise LexiconError(
                            f"Frase ambígua '{' '.join(form)}': {known[0]} e {category}")
                    if known is None:
                        self._index[form] = (category, entry, plural)
        self.max_phrase_len = max((len(form) for form in self._index), default=0)

    @classmethod
    def from_dict(cls, data: dict) -> 'Lexicon':
        try:
            table = {cat: [PhraseEntry.model_validate(e) for e in entries]
                     for cat, entries in data.items()}
        except ValidationError as e:
            raise LexiconError(f"Entrada de léxico inválida: {e}") from e
        return cls(table)

    @classmethod
    def load(cls, path) -> 'Lexicon':
        with open(path, 'r', encoding='utf-8') as handle:
            data = json.load(handle)
        lexicon = cls.from_dict(data)
        logger.debug(f"Léxico carregado de {path}: {len(lexicon.table)} categorias")
        return lexicon

    @classmethod
    def default(cls) -> 'Lexicon':
        return cls.load(DEFAULT_LEXICON_PATH)

    def to_dict(self) -> dict:
        return {cat: [e.model_dump(exclude_defaults=True) for e in entries]
                for cat, entries in self.table.items()}

    def phrases(self, category: str, split: str) -> List[PhraseEntry]:
        return [e for e in self.table.get(category, []) if e.split == split]

    def lookup(self, tokens: Tuple[str, ...]) -> Optional[Tuple[str, PhraseEntry, bool]]:
        return self._index.get(tuple(tokens))

    def scan(self, tokens: List[str], skip=frozenset()) -> List[Mention]:
        """
        Casamento guloso pelo maior prefixo, da esquerda para a direita.

        Palavras em `skip` (modificadores de estado) são ignoradas para o
        casamento; as posições das menções referem-se aos tokens originais.
        """
        positions = [i for i, tok in enumerate(tokens) if tok not in skip]
        content = [tokens[i] for i in positions]
        mentions: List[Mention] = []
        i = 0
        while i < len(content):
            for length in range(min(self.max_phrase_len, len(content) - i), 0, -1):
                hit = self._index.get(tuple(content[i:i + length]))
                if hit is not None:
                    category, entry, plural = hit
                    mentions.append(Mention(category, positions[i],
                                            positions[i + length - 1] + 1, entry, plural))
                    i += length
                    break
            else:
                i += 1
        return mentions
