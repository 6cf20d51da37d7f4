"""
config.py
---------

Parâmetros da síntese.  ``lambda`` é palavra reservada em Python, por isso o
campo se chama ``lam`` e aceita o alias ``lambda`` nos arquivos de
configuração e nos bundles.
"""

from pydantic import BaseModel, ConfigDict, Field, model_validator


class SynthesisConfig(BaseModel):
    model_config = ConfigDict(populate_by_name=True, frozen=True)

    gamma: float = Field(0.0, ge=0.0, le=1.0, description="Mistura de contração")
    lam: float = Field(10.0, gt=0.0, alias="lambda", description="Teto espectral de P")
    n_w: int = Field(10, ge=1, description="Número de matrizes de base W_j")
    epsilon_scale: float = Field(1.0, ge=0.0, description="1 = robusto, 0 = nominal")
    beta_margin: float = Field(0.0, ge=0.0, le=1.0, description="Deriva teórica; apenas registrada")
    eta: float = Field(1e-3, gt=0.0, le=1.0, description="Regularização das direções B_j")
    lexicographic_ties: bool = True
    basis_refinements: int = Field(10, ge=0, description="Trocas de direção W_j quando o LP é inviável")
    invariance_samples: int = Field(2000, ge=0, description="Pontos da checagem de invariância pós-ajuste; 0 desliga")
    invariance_refinements: int = Field(2, ge=0, description="Reajustes com os contraexemplos da checagem")
    invariance_seed: int = 0
    feasibility_tol: float = Field(1e-8, gt=0.0)
    optimality_tol: float = Field(1e-6, gt=0.0)
    lipschitz_f_safety: float = Field(1.2, ge=1.0)
    lipschitz_phi_safety: float = Field(1.1, ge=1.0)
    lipschitz_points_per_axis: int = Field(200, ge=2)
    density_points_per_axis: int = Field(100, ge=2)

    @model_validator(mode="after")
    def _beta_within_gamma(self) -> "SynthesisConfig":
        if self.beta_margin > self.gamma:
            raise ValueError(f"beta_margin ({self.beta_margin}) deve estar em [0, gamma={self.gamma}]")
        return self

    @property
    def nominal(self) -> bool:
        return self.epsilon_scale == 0.0

    def to_dict(self) -> dict:
        return self.model_dump(by_alias=True)
