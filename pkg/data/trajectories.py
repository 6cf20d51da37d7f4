"""
trajectories.py
---------------

Conjunto de dados ``D``: para cada referência constante ``r_bar``, ``N_T``
trajetórias de estados amostradas com período fixo ``dt``.  O módulo cuida
da validação (comprimentos iguais por referência, amostras finitas,
referências distintas) e da leitura/escrita nos formatos de arquivo:

* JSON: ``{dt, entries: [{r_bar, trajectories: [[[x1, x2, ...], ...], ...]}]}``
* CSV: uma linha por amostra, colunas ``traj_id, t_index, r_bar, x1..xn``
  (o ``dt`` não faz parte do CSV e deve ser informado na importação).

Exemplo:

```python
from ddrg_lab.data import TrajectorySet
ts = TrajectorySet.load_json("runs/lti/dataset.json")
print(ts.references[:3], ts.dt)
```
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field

log = logging.getLogger(__name__)

# casas decimais usadas para identificar referências (evita ruído de ponto flutuante)
REF_DECIMALS = 9


class UnknownReferenceError(KeyError):
    """Referência ausente no conjunto de dados ou no conjunto admissível."""


class DataError(ValueError):
    """Conjunto de dados malformado ou insuficiente para a operação pedida."""


def ref_key(r_bar: float) -> float:
    return round(float(r_bar), REF_DECIMALS)


class TrajectoryEntrySchema(BaseModel):
    r_bar: float
    trajectories: List[List[List[float]]] = Field(..., min_length=1)


class TrajectorySetSchema(BaseModel):
    """Schema do arquivo JSON do conjunto de dados."""

    dt: float = Field(..., gt=0.0, description="Período de amostragem em segundos")
    entries: List[TrajectoryEntrySchema] = Field(..., min_length=1)


@dataclass(frozen=True, eq=False)
class TrajectoryBundle:
    """Trajetórias geradas por uma mesma referência constante."""

    r_bar: float
    trajectories: Tuple[np.ndarray, ...]

    @property
    def n_t(self) -> int:
        return len(self.trajectories)

    @property
    def length(self) -> int:
        return int(self.trajectories[0].shape[0])


@dataclass(frozen=True, eq=False)
class TrajectorySet:
    entries: Tuple[TrajectoryBundle, ...]
    dt: float

    def __post_init__(self) -> None:
        if self.dt <= 0:
            raise DataError(f"dt deve ser positivo, recebido {self.dt}")
        if not self.entries:
            raise DataError("Conjunto de dados vazio")
        keys = [ref_key(e.r_bar) for e in self.entries]
        if len(set(keys)) != len(keys):
            raise DataError("Referências repetidas no conjunto de dados")
        dims = set()
        for entry in self.entries:
            if not entry.trajectories:
                raise DataError(f"Referência {entry.r_bar} sem trajetórias")
            lengths = {t.shape[0] for t in entry.trajectories}
            if len(lengths) != 1:
                raise DataError(f"Trajetórias de r_bar={entry.r_bar} com comprimentos diferentes: {sorted(lengths)}")
            if min(lengths) < 1:
                raise DataError(f"Trajetória vazia em r_bar={entry.r_bar}")
            for traj in entry.trajectories:
                if traj.ndim != 2:
                    raise DataError("Cada trajetória deve ser uma matriz (T+1, n)")
                if not np.all(np.isfinite(traj)):
                    raise DataError(f"Amostra não finita em r_bar={entry.r_bar}")
                dims.add(traj.shape[1])
        if len(dims) != 1:
            raise DataError(f"Dimensões de estado inconsistentes: {sorted(dims)}")

    @classmethod
    def from_arrays(cls, data: Dict[float, Sequence[np.ndarray]], dt: float) -> "TrajectorySet":
        entries = tuple(
            TrajectoryBundle(float(r), tuple(np.asarray(t, dtype=float) for t in trajs))
            for r, trajs in sorted(data.items())
        )
        return cls(entries=entries, dt=float(dt))

    @property
    def references(self) -> List[float]:
        return [e.r_bar for e in self.entries]

    @property
    def state_dim(self) -> int:
        return int(self.entries[0].trajectories[0].shape[1])

    def bundle(self, r_bar: float) -> TrajectoryBundle:
        key = ref_key(r_bar)
        for entry in self.entries:
            if ref_key(entry.r_bar) == key:
                return entry
        raise UnknownReferenceError(f"Referência {r_bar} não encontrada no conjunto de dados")

    def all_states(self) -> np.ndarray:
        return np.vstack([t for e in self.entries for t in e.trajectories])

    # --- JSON -------------------------------------------------------------

    def to_dict(self) -> Dict[str, object]:
        return {
            "dt": self.dt,
            "entries": [
                {"r_bar": e.r_bar, "trajectories": [t.tolist() for t in e.trajectories]}
                for e in self.entries
            ],
        }

    @classmethod
    def from_dict(cls, payload: Dict[str, object]) -> "TrajectorySet":
        schema = TrajectorySetSchema.model_validate(payload)
        entries = tuple(
            TrajectoryBundle(e.r_bar, tuple(np.asarray(t, dtype=float) for t in e.trajectories))
            for e in schema.entries
        )
        return cls(entries=entries, dt=schema.dt)

    def save_json(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f)
        return path

    @classmethod
    def load_json(cls, path: Union[str, Path]) -> "TrajectorySet":
        with open(path, "r", encoding="utf-8") as f:
            return cls.from_dict(json.load(f))

    # --- CSV --------------------------------------------------------------

    def to_frame(self) -> pd.DataFrame:
        columns = ["traj_id", "t_index", "r_bar"] + [f"x{i + 1}" for i in range(self.state_dim)]
        rows = []
        traj_id = 0
        for entry in self.entries:
            for traj in entry.trajectories:
                for t_index, state in enumerate(traj):
                    rows.append([traj_id, t_index, entry.r_bar, *state.tolist()])
                traj_id += 1
        return pd.DataFrame(rows, columns=columns)

    def save_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False)
        return path

    @classmethod
    def load_csv(cls, path: Union[str, Path], dt: float) -> "TrajectorySet":
        df = pd.read_csv(path)
        required = {"traj_id", "t_index", "r_bar"}
        if not required.issubset(df.columns):
            raise DataError(f"CSV sem colunas obrigatórias {sorted(required - set(df.columns))}")
        state_cols = sorted(
            (c for c in df.columns if c.startswith("x") and c[1:].isdigit()), key=lambda c: int(c[1:])
        )
        if not state_cols:
            raise DataError("CSV sem colunas de estado x1..xn")
        df = df.assign(_ref=df["r_bar"].map(ref_key))
        data: Dict[float, List[np.ndarray]] = {}
        for (ref, _), group in df.groupby(["_ref", "traj_id"], sort=True):
            traj = group.sort_values("t_index")[state_cols].to_numpy(dtype=float)
            data.setdefault(float(ref), []).append(traj)
        log.info(f"CSV {path}: {len(data)} referências, {df['traj_id'].nunique()} trajetórias")
        return cls.from_arrays(data, dt)
