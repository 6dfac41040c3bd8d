"""
Módulo de Configuração do Agente
Flags de ablação, orçamentos do episódio e parâmetros de navegação.
"""

from typing import List, Optional

from pydantic import BaseModel, Field

_EAM_FLAGS = ('eam_mask_cache', 'eam_relocation', 'eam_state_cache', 'map_targets')

_FLAG_LABELS = {
    'eam_mask_cache': 'no-mask-cache',
    'eam_relocation': 'no-relocation',
    'eam_state_cache': 'no-state-cache',
    'map_targets': 'no-map-targets',
}


class AgentConfig(BaseModel):
    """Configuração de um episódio; flags independentes entre si."""
    cap_enabled: bool = True
    eam_mask_cache: bool = True
    eam_relocation: bool = True
    eam_state_cache: bool = True
    map_targets: bool = True
    max_steps: int = Field(default=1000, gt=0)
    max_interaction_failures: int = Field(default=10, gt=0)
    inflation_radius: int = Field(default=1, ge=0)
    r_int: Optional[float] = Field(default=None, gt=0)

    @classmethod
    def from_flags(cls, no_cap: bool = False, no_eam: bool = False,
                   no_mask_cache: bool = False, no_relocation: bool = False,
                   no_state_cache: bool = False, no_map_targets: bool = False,
                   **kwargs) -> 'AgentConfig':
        """Monta a configuração a partir das flags negativas da CLI."""
        return cls(
            cap_enabled=not no_cap,
            eam_mask_cache=not (no_eam or no_mask_cache),
            eam_relocation=not (no_eam or no_relocation),
            eam_state_cache=not (no_eam or no_state_cache),
            map_targets=not (no_eam or no_map_targets),
            **kwargs,
        )

    @property
    def eam_enabled(self) -> bool:
        return any(getattr(self, flag) for flag in _EAM_FLAGS)

    def disabled_flags(self) -> List[str]:
        return [_FLAG_LABELS[flag] for flag in _EAM_FLAGS if not getattr(self, flag)]

    def label(self) -> str:
        """
        Rótulo da linha na tabela: full, no-CAP, no-EAM, no-CAP+no-EAM ou as
        flags desligadas unidas por '+'.
        """
        parts = [] if self.cap_enabled else ['no-CAP']
        if not self.eam_enabled:
            parts.append('no-EAM')
        else:
            parts.extend(self.disabled_flags())
        return '+'.join(parts) if parts else 'full'
