"""
settings.py
-----------

Configuração por ambiente.  Um arquivo ``.env`` no diretório corrente (ou o
indicado em ``DDRG_ENV_FILE``) é carregado com python-dotenv antes da leitura
das variáveis:

* ``DDRG_LOG_LEVEL``       nível de log (padrão ``INFO``)
* ``DDRG_WORKERS``         processos por comando (padrão 1)
* ``MLFLOW_TRACKING_URI``  rastreamento MLflow, habilitado só quando definido
* ``DDRG_RUNS_DIR``        diretório base das execuções (padrão ``runs``)
"""

import os
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv
from pydantic import BaseModel, Field


class Settings(BaseModel):
    log_level: str = "INFO"
    workers: int = Field(1, ge=1)
    mlflow_tracking_uri: Optional[str] = None
    runs_dir: Path = Path("runs")


def load_settings(env_file: Optional[str] = None) -> Settings:
    load_dotenv(env_file or os.environ.get("DDRG_ENV_FILE") or ".env", override=False)
    return Settings(
        log_level=os.environ.get("DDRG_LOG_LEVEL", "INFO").upper(),
        workers=int(os.environ.get("DDRG_WORKERS", "1")),
        mlflow_tracking_uri=os.environ.get("MLFLOW_TRACKING_URI") or None,
        runs_dir=Path(os.environ.get("DDRG_RUNS_DIR", "runs")),
    )
