"""
Módulo de Exceções
Exceção-base compartilhada por todos os módulos do pacote.
"""


class EmbodiedError(Exception):
    """Erro de domínio do simulador/agente (nunca usado para falhas de ação)."""
