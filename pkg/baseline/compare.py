"""
compare.py
----------

Comparação em grade entre o conjunto admissível data-driven e o oráculo
exato: falsos positivos (pontos no conjunto ajustado e fora do oráculo) e
cobertura ``|ajustado ∩ oráculo| / |oráculo|`` por referência e no total.
Referências excluídas na síntese contam como fatias vazias.
"""

from typing import Dict, List, Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel

from ..data.trajectories import ref_key
from ..invariance.sets import AdmissibleSet, contains_batch
from ..lift.dictionary import Dictionary
from .polytope import OracleError, Polytope

ORACLE_TOL = 1e-6


class ReferenceComparison(BaseModel):
    r_bar: float
    n_data: int
    n_oracle: int
    n_both: int
    false_positives: int
    coverage: Optional[float] = None


class ComparisonReport(BaseModel):
    n_grid: int
    false_positives: int
    coverage: float
    per_reference: List[ReferenceComparison]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([row.model_dump() for row in self.per_reference])


def compare_admissible_sets(
    adm: AdmissibleSet,
    dictionary: Dictionary,
    oracle: Dict[float, Polytope],
    grid: np.ndarray,
) -> ComparisonReport:
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    fitted = {ref_key(s.r_bar): s for s in adm.sets}
    expected = set(fitted) | {ref_key(r) for r, _ in adm.excluded}
    oracle_keys = {ref_key(r): p for r, p in oracle.items()}
    if expected and set(oracle_keys) != expected:
        missing = sorted(expected ^ set(oracle_keys))[:5]
        raise OracleError(f"Grades de referência incompatíveis (ex.: {missing})")

    rows = []
    total_fp = total_both = total_oracle = 0
    for key in sorted(oracle_keys):
        in_oracle = oracle_keys[key].contains(grid, tol=ORACLE_TOL)
        pi_set = fitted.get(key)
        in_data = contains_batch(pi_set, dictionary, grid) if pi_set is not None else np.zeros(grid.shape[0], bool)
        n_oracle = int(np.sum(in_oracle))
        n_both = int(np.sum(in_data & in_oracle))
        fp = int(np.sum(in_data & ~in_oracle))
        rows.append(
            ReferenceComparison(
                r_bar=key,
                n_data=int(np.sum(in_data)),
                n_oracle=n_oracle,
                n_both=n_both,
                false_positives=fp,
                coverage=n_both / n_oracle if n_oracle else None,
            )
        )
        total_fp += fp
        total_both += n_both
        total_oracle += n_oracle
    return ComparisonReport(
        n_grid=int(grid.shape[0]),
        false_positives=total_fp,
        coverage=total_both / total_oracle if total_oracle else 0.0,
        per_reference=rows,
    )
