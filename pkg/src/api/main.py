"""
Metaclust - REST API
====================

FastAPI application serving a trained encoder for clustering.

Endpoints:
- GET /model - Describe the loaded checkpoint
- POST /model/load - Load a checkpoint from disk
- POST /cluster - Cluster a set of unlabeled instances
- GET /health - Liveness and model status

The checkpoint named by METACLUST_MODEL is loaded on first use.
"""

import logging
import os
from datetime import datetime
from typing import Any, Dict, List, Optional

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, ConfigDict, Field

from .. import __version__
from ..cli.main import load_model, model_inputs
from ..data import LabeledDataset
from ..errors import DataParseError, MetaclustError, ModelMismatchError
from ..training import cluster_instances


logger = logging.getLogger(__name__)

app = FastAPI(
    title="Metaclust API",
    description="Clustering with meta-learned representations and differentiable DP-GMM inference",
    version=__version__,
    docs_url="/docs",
    redoc_url="/redoc"
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


class ModelStore:
    """Currently served checkpoint"""

    def __init__(self):
        self.path: Optional[str] = None
        self.params = None
        self.extra: Dict[str, Any] = {}
        self.train_config = None
        self.standardizer = None

    @property
    def loaded(self) -> bool:
        return self.params is not None

    def load(self, path: str) -> None:
        self.params, self.extra, self.train_config, self.standardizer = load_model(path)
        self.path = path
        logger.info("Loaded checkpoint %s (%d parameters)", path, self.params.parameter_count())

    def require(self) -> 'ModelStore':
        if not self.loaded:
            path = os.environ.get('METACLUST_MODEL')
            if not path:
                raise HTTPException(status_code=503, detail="No model loaded; set METACLUST_MODEL or POST /model/load")
            try:
                self.load(path)
            except (MetaclustError, OSError) as e:
                raise HTTPException(status_code=500, detail=f"Cannot load {path}: {e}")
        return self


store = ModelStore()


# === Request/Response Models ===

class ClusterRequest(BaseModel):
    """Instances to cluster, one row per instance"""
    instances: List[List[float]] = Field(..., min_length=1, description="Feature rows, all the same length")
    vb_steps: Optional[int] = Field(None, ge=0, le=1000, description="VB updates (model default when omitted)")
    seed: int = Field(0, ge=0, description="Seed for any random initialization")

    model_config = ConfigDict(json_schema_extra={
        "example": {
            "instances": [[0.1, 0.2], [0.0, 0.3], [5.1, 4.9], [5.0, 5.2]],
            "vb_steps": 10,
            "seed": 0
        }
    })


class ClusterResponse(BaseModel):
    """Soft and hard assignments of one request"""
    assignments: List[List[float]]
    labels: List[int]
    populated_clusters: int
    elbo_trace: List[float]
    n_instances: int
    seed: int


class LoadRequest(BaseModel):
    path: str = Field(..., min_length=1, description="Checkpoint written by 'metaclust train'")


# === API Endpoints ===

@app.get("/")
async def root():
    """Root endpoint"""
    return {
        "service": "Metaclust",
        "version": __version__,
        "description": "Clustering with meta-learned representations",
        "docs": "/docs",
        "model_loaded": store.loaded
    }


@app.get("/model")
async def describe_model():
    """Encoder shape and the run configuration stored with the checkpoint"""
    model = store.require()
    return {
        "path": model.path,
        "encoder": model.params.config.to_dict(),
        "parameters": model.params.parameter_count(),
        "mode": model.extra.get("mode"),
        "config": model.extra.get("config"),
        "best_validation": model.extra.get("best_validation"),
    }


@app.post("/model/load")
async def load(request: LoadRequest):
    try:
        store.load(request.path)
    except MetaclustError as e:
        raise HTTPException(status_code=422, detail=str(e))
    return {"message": f"Loaded {request.path}", "parameters": store.params.parameter_count()}


@app.post("/cluster", response_model=ClusterResponse)
def cluster(request: ClusterRequest):
    """
    Cluster the posted instances with the loaded encoder.

    Features are standardized with the statistics stored in the
    checkpoint before encoding.
    """
    model = store.require()
    widths = {len(row) for row in request.instances}
    if len(widths) != 1:
        raise HTTPException(status_code=422, detail="All instances must have the same number of features")
    try:
        X = np.asarray(request.instances, dtype=float)
        data = LabeledDataset(X=X, name='request')
        result = cluster_instances(model.params, model_inputs(model.params, data, model.standardizer),
                                   model.train_config, vb_steps=request.vb_steps, seed=request.seed)
    except (ModelMismatchError, DataParseError) as e:
        raise HTTPException(status_code=422, detail=str(e))
    except MetaclustError as e:
        raise HTTPException(status_code=500, detail=f"Clustering error: {e}")
    return ClusterResponse(**result.to_dict(), n_instances=X.shape[0], seed=request.seed)


@app.get("/health")
async def health_check():
    """Health check endpoint"""
    return {
        "status": "healthy",
        "timestamp": datetime.now().isoformat(),
        "version": __version__,
        "model_loaded": store.loaded
    }


if __name__ == "__main__":
    import uvicorn
    uvicorn.run(
        "src.api.main:app",
        host="0.0.0.0",
        port=8000,
        log_level=os.environ.get("LOG_LEVEL", "info")
    )
