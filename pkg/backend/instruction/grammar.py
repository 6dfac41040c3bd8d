"""
Módulo de Gramática
Palavras reservadas da gramática de templates: artigos, preposições,
modificadores de estado e palavras-chave de família.
"""

import re
from typing import List, Tuple

ARTICLES = frozenset({'a', 'an', 'the'})

# Preposições que introduzem o destino (c_R)
LOCATIVES = frozenset({'on', 'in', 'into', 'onto', 'to', 'under', 'by', 'inside', 'at', 'near'})

# Preposições que introduzem o carregador (c_M)
CARRIER_PREPOSITIONS = frozenset({'in', 'into', 'inside', 'with'})

# Adjetivos de estado inseridos entre artigo e substantivo; ignorados no casamento
MODIFIER_WORDS = frozenset({
    'clean', 'hot', 'cold', 'sliced', 'slice', 'slices', 'heated', 'chilled',
})

FAMILY_KEYWORDS = {
    'two': frozenset({'two'}),
    'examine': frozenset({'examine', 'inspect', 'look', 'turn'}),
    'clean': frozenset({'clean', 'rinse', 'wash'}),
    'heat': frozenset({'heat', 'heated', 'warm', 'hot', 'cook'}),
    'cool': frozenset({'cool', 'chill', 'chilled', 'cold'}),
    'slice': frozenset({'slice', 'sliced', 'slices', 'cut', 'crack'}),
}

# Demais palavras usadas pelos templates
TEMPLATE_WORDS = frozenset({
    'put', 'place', 'move', 'take', 'and', 'it', 'throw', 'then', 'up', 'at',
    'pick', 'carry', 'piece', 'pieces',
})

RESERVED_WORDS = frozenset(
    LOCATIVES | CARRIER_PREPOSITIONS | MODIFIER_WORDS | TEMPLATE_WORDS
    | frozenset().union(*FAMILY_KEYWORDS.values())
)

# Marcador do padrão "X with Y in it" (carregador mencionado primeiro)
CARRIER_FIRST_MARKER: Tuple[str, str] = ('in', 'it')

_PUNCTUATION = re.compile(r"[.,;:!?\"']")


def tokenize(text: str) -> List[str]:
    """Minúsculas, sem pontuação, separado por espaços."""
    return _PUNCTUATION.sub(' ', text.lower()).split()


def has_keyword(tokens, family_key: str) -> bool:
    return any(token in FAMILY_KEYWORDS[family_key] for token in tokens)
