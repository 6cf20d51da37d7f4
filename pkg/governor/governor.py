"""
governor.py
-----------

Governador de referência sobre o conjunto admissível: entre as referências
cujo conjunto PI contém o estado atual, escolhe a mais próxima da desejada.
Equivale ao laço "inicializa na mais próxima, descarta e reminimiza enquanto
``x`` não pertence ao conjunto"; empates vão para a menor referência.

Os termos de cada conjunto (``phi(x_inf)``, ``P``, nível) são pré-calculados
uma vez por :class:`ReferenceGovernor`, de modo que cada consulta avalia
``phi(x)`` uma única vez.
"""

from typing import List

import numpy as np

from ..invariance.sets import MEMBERSHIP_TOL, AdmissibleSet, level
from ..lift.dictionary import Dictionary, eval_phi


class NoAdmissibleReference(LookupError):
    """Nenhum conjunto PI contém o estado."""


class ReferenceGovernor:
    def __init__(self, adm: AdmissibleSet, dictionary: Dictionary) -> None:
        if not adm.sets:
            raise ValueError("Conjunto admissível vazio")
        for s in adm.sets:
            if s.dict_ref != dictionary.fingerprint:
                raise ValueError(f"Conjunto r_bar={s.r_bar} ajustado com outro dicionário")
        self.adm = adm
        self.dictionary = dictionary
        self.references = np.array(adm.references)
        self.phi_inf = np.vstack([eval_phi(dictionary, s.x_inf) for s in adm.sets])
        self.p_stack = np.stack([s.p_matrix for s in adm.sets])
        levels = [level(s, dictionary) for s in adm.sets]
        self.bounds = np.array([b for b, _ in levels])
        self.admissible = np.array([ok for _, ok in levels])

    def feasible_mask(self, x: np.ndarray) -> np.ndarray:
        """``mask[i]`` indica ``x in O(r_i)``."""
        x = np.asarray(x, dtype=float).ravel()
        if not self.dictionary.in_working_domain(x)[0]:
            return np.zeros(self.references.size, dtype=bool)
        diff = eval_phi(self.dictionary, x)[None, :] - self.phi_inf
        values = np.maximum(np.einsum("ni,nij,nj->n", diff, self.p_stack, diff), 0.0)
        return self.admissible & (values <= self.bounds + MEMBERSHIP_TOL)

    def admissible_references(self, x: np.ndarray) -> List[float]:
        return self.references[self.feasible_mask(x)].tolist()

    def candidate_order(self, r_desired: float) -> np.ndarray:
        return np.lexsort((self.references, np.abs(self.references - float(r_desired))))

    def govern_index(self, x: np.ndarray, r_desired: float) -> int:
        mask = self.feasible_mask(x)
        for i in self.candidate_order(r_desired):
            if mask[i]:
                return int(i)
        raise NoAdmissibleReference(f"Nenhum conjunto PI contém x={np.asarray(x).tolist()}")

    def govern(self, x: np.ndarray, r_desired: float) -> float:
        return float(self.references[self.govern_index(x, r_desired)])


def govern(adm: AdmissibleSet, dictionary: Dictionary, x: np.ndarray, r_desired: float) -> float:
    return ReferenceGovernor(adm, dictionary).govern(x, r_desired)
