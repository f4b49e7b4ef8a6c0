import logging
import os

from dotenv import load_dotenv
from fastapi import FastAPI

from pavg.api.routes import router as run_router

# Load environment variables from .env once at startup
load_dotenv()
logging.basicConfig(
    level=getattr(logging, os.getenv("PAVG_LOG_LEVEL", "INFO").upper(), logging.INFO),
    format="%(asctime)s %(levelname)s %(name)s: %(message)s",
)

app = FastAPI(title="p-Average Service", version="0.1.0")
app.include_router(run_router, prefix="/api")


@app.get("/health")
async def health() -> dict:
    return {"status": "ok"}
