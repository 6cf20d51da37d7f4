"""
tracking.py
-----------

Registro das execuções.  Cada comando grava ``metrics.prom`` no diretório da
execução (formato textfile do Prometheus) e, quando ``MLFLOW_TRACKING_URI``
está definido, abre um run no MLflow com parâmetros, métricas e artefatos.
O MLflow nunca deve derrubar o comando: falhas viram um aviso no log.
"""

import logging
from pathlib import Path
from typing import Any, Dict, Iterable, Optional

from prometheus_client import CollectorRegistry, Gauge, write_to_textfile

log = logging.getLogger(__name__)


def write_metrics(run_dir: Path, command: str, metrics: Dict[str, float]) -> Path:
    registry = CollectorRegistry()
    for name, value in metrics.items():
        gauge = Gauge(f"ddrg_{name}", f"{name} ({command})", ["command"], registry=registry)
        gauge.labels(command=command).set(float(value))
    path = Path(run_dir) / "metrics.prom"
    path.parent.mkdir(parents=True, exist_ok=True)
    write_to_textfile(str(path), registry)
    return path


def log_run(
    tracking_uri: Optional[str],
    command: str,
    params: Dict[str, Any],
    metrics: Dict[str, float],
    artifacts: Iterable[Path] = (),
) -> None:
    """Registra o comando no MLflow; não faz nada sem ``tracking_uri``."""
    if not tracking_uri:
        return
    try:
        import mlflow

        mlflow.set_tracking_uri(tracking_uri)
        mlflow.set_experiment("ddrg-lab")
        with mlflow.start_run(run_name=command):
            mlflow.log_params({k: str(v)[:250] for k, v in params.items()})
            mlflow.log_metrics({k: float(v) for k, v in metrics.items()})
            for path in artifacts:
                mlflow.log_artifact(str(path))
    except Exception as exc:
        # o comando já terminou; o rastreamento é opcional
        log.warning(f"Falha ao registrar execução no MLflow: {exc}")
