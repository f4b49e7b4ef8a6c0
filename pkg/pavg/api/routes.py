import logging
from typing import Any, Dict

from fastapi import APIRouter, Body, Depends, HTTPException

from pavg.services.run_config import RunConfig, build_run_config
from pavg.services.run_service import RunService

router = APIRouter(tags=["Runs"])
logger = logging.getLogger("pavg.api")


@router.post(
    "/run",
    summary="Ejecuta un subcomando de pavg",
    description="Recibe un RunConfig en JSON, lo valida y devuelve el informe del subcomando.",
)
def run_subcommand(
    payload: Dict[str, Any] = Body(...),
    service: RunService = Depends(RunService),
) -> Dict[str, Any]:
    logger.info("Incoming run payload: %s", payload)
    try:
        config: RunConfig = build_run_config(payload)
    except ValueError as exc:
        logger.warning("Run config validation error: %s", exc)
        raise HTTPException(status_code=400, detail=str(exc))

    report = service.dispatch(config)
    if "error" in report:
        raise HTTPException(status_code=400, detail=report["error"])
    return {"results": report}
