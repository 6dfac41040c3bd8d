"""
Módulo de Vocabulário
Define o conjunto fechado de categorias de objetos e suas capacidades.
"""

from dataclasses import dataclass
from typing import Dict, FrozenSet

from ..errors import EmbodiedError


class UnknownCategoryError(EmbodiedError):
    """Categoria fora do vocabulário fechado."""


@dataclass(frozen=True)
class CategorySpec:
    """
    Categoria de objeto com flags de capacidade imutáveis.

    Categorias não pegáveis são móveis fixos: ocupam uma célula da grade
    e bloqueiam a passagem. Objetos pegáveis sempre estão dentro/sobre
    um receptáculo ou na mão do agente.
    """
    name: str
    pickupable: bool = False
    openable: bool = False
    toggleable: bool = False
    sliceable: bool = False
    receptacle: bool = False
    movable_receptacle: bool = False
    cleanable: bool = False
    surface: bool = False

    @property
    def fixed(self) -> bool:
        return not self.pickupable

    @property
    def small(self) -> bool:
        """Objeto pequeno: pegável e que não carrega outros objetos."""
        return self.pickupable and not self.movable_receptacle


def _small(name, **flags):
    return CategorySpec(name=name, pickupable=True, **flags)


def _carrier(name, **flags):
    return CategorySpec(name=name, pickupable=True, receptacle=True,
                        movable_receptacle=True, **flags)


_CATEGORIES = [
    # Alimentos fatiáveis
    _small('Apple', sliceable=True),
    _small('Tomato', sliceable=True),
    _small('Potato', sliceable=True),
    _small('Bread', sliceable=True),
    _small('Lettuce', sliceable=True),
    _small('Egg', sliceable=True),
    # Utensílios
    _small('Knife'),
    _small('Fork', cleanable=True),
    _small('Spoon', cleanable=True),
    _small('Ladle', cleanable=True),
    # Receptáculos móveis
    _carrier('Plate', cleanable=True),
    _carrier('Bowl', cleanable=True),
    _carrier('Mug', cleanable=True),
    _carrier('Cup', cleanable=True),
    _carrier('Pot', cleanable=True),
    _carrier('Pan', cleanable=True),
    _carrier('Box'),
    # Objetos diversos
    _small('SoapBar'),
    _small('SoapBottle'),
    _small('TissueBox'),
    _small('Watch'),
    _small('CellPhone'),
    _small('Book'),
    # Móveis e aparelhos fixos
    CategorySpec('Lamp', toggleable=True),
    CategorySpec('Faucet', toggleable=True),
    CategorySpec('SinkBasin', receptacle=True),
    CategorySpec('Microwave', receptacle=True, openable=True, toggleable=True),
    CategorySpec('Fridge', receptacle=True, openable=True),
    CategorySpec('Cabinet', receptacle=True, openable=True),
    CategorySpec('Drawer', receptacle=True, openable=True),
    CategorySpec('CounterTop', receptacle=True, surface=True),
    CategorySpec('Table', receptacle=True, surface=True),
    CategorySpec('Shelf', receptacle=True, surface=True),
    CategorySpec('GarbageCan', receptacle=True),
]

VOCABULARY: Dict[str, CategorySpec] = {spec.name: spec for spec in _CATEGORIES}

# Categorias que os frames canônicos usam sem passar pelo contexto
AUXILIARY_CATEGORIES: FrozenSet[str] = frozenset(
    {'SinkBasin', 'Faucet', 'Microwave', 'Fridge', 'Knife', 'Lamp'}
)


def get_category(name: str) -> CategorySpec:
    """
    Busca a especificação de uma categoria.

    Args:
        name: Nome da categoria (ex.: 'Apple')

    Returns:
        CategorySpec correspondente

    Raises:
        UnknownCategoryError: se o nome não pertence ao vocabulário
    """
    try:
        return VOCABULARY[name]
    except KeyError:
        raise UnknownCategoryError(f"Categoria desconhecida: {name}") from None


def categories_where(**flags) -> list:
    """Lista (ordenada) de nomes de categorias com as flags pedidas."""
    return sorted(
        spec.name for spec in _CATEGORIES
        if all(getattr(spec, flag) == value for flag, value in flags.items())
    )
