"""
Metaclust - Evaluation
======================

Held-out clustering quality: sample episodes over unseen categories,
cluster each with the full pipeline in evaluation mode, and report the
hard ARI of the argmax assignments.
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from ..encoder import EncoderParams
from ..metrics import adjusted_rand_index
from .config import TrainConfig
from .episodes import TaskBatch, Tasks, sample_episode
from .pipeline import cluster_instances


logger = logging.getLogger(__name__)

EVAL_MIN_CATEGORIES = 2
EVAL_MAX_CATEGORIES = 10


@dataclass
class EvaluationReport:
    """Per-task hard ARI with its mean and standard error"""
    per_task_ari: List[float]
    true_clusters: List[int] = field(default_factory=list)
    populated_clusters: List[int] = field(default_factory=list)
    vb_steps: Optional[int] = None
    runtime_ms: Optional[float] = None

    @property
    def n_tasks(self) -> int:
        return len(self.per_task_ari)

    @property
    def mean(self) -> float:
        return float(np.mean(self.per_task_ari)) if self.per_task_ari else 0.0

    @property
    def stderr(self) -> Optional[float]:
        """Sample standard deviation over √n; undefined for one task"""
        if self.n_tasks < 2:
            return None
        return float(np.std(self.per_task_ari, ddof=1) / np.sqrt(self.n_tasks))

    @property
    def cluster_count_accuracy(self) -> float:
        if not self.true_clusters:
            return 0.0
        hits = sum(t == p for t, p in zip(self.true_clusters, self.populated_clusters))
        return hits / len(self.true_clusters)

    def to_dict(self, include_runtime: bool = True) -> Dict[str, Any]:
        data = {
            'n_tasks': self.n_tasks,
            'mean_ari': self.mean,
            'stderr': self.stderr,
            'per_task_ari': list(self.per_task_ari),
            'true_clusters': list(self.true_clusters),
            'populated_clusters': list(self.populated_clusters),
            'cluster_count_accuracy': self.cluster_count_accuracy,
            'vb_steps': self.vb_steps,
        }
        if include_runtime:
            data['runtime_ms'] = self.runtime_ms
        return data


def sample_evaluation_episodes(
    data: Tasks,
    config: TrainConfig,
    n_tasks: int,
    seed: int,
    min_categories: int = EVAL_MIN_CATEGORIES,
    max_categories: int = EVAL_MAX_CATEGORIES,
) -> List[TaskBatch]:
    """Episodes with K uniform in {2, …, 10}, clipped to the available categories"""
    rng = np.random.default_rng(seed)
    return [
        sample_episode(
            data, rng,
            max_clusters=config.max_clusters,
            n_max_per_category=config.n_max_per_category,
            min_categories=min_categories,
            max_categories=max_categories,
        )
        for _ in range(n_tasks)
    ]


def _score(params: EncoderParams, batch: TaskBatch, config: TrainConfig, vb_steps: Optional[int]):
    result = cluster_instances(params, batch.X, config, vb_steps=vb_steps, seed=batch.seed)
    return adjusted_rand_index(batch.y, result.labels), result.populated_clusters


def score_episodes(
    params: EncoderParams,
    episodes: Sequence[TaskBatch],
    config: TrainConfig,
    vb_steps: Optional[int] = None,
    workers: Optional[int] = None,
) -> EvaluationReport:
    """Cluster episodes concurrently; results are kept in episode order"""
    start = time.perf_counter()
    if workers == 1 or len(episodes) < 2:
        scores = [_score(params, b, config, vb_steps) for b in episodes]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            scores = list(pool.map(lambda b: _score(params, b, config, vb_steps), episodes))
    return EvaluationReport(
        per_task_ari=[float(s[0]) for s in scores],
        true_clusters=[b.n_categories for b in episodes],
        populated_clusters=[int(s[1]) for s in scores],
        vb_steps=config.vb_steps if vb_steps is None else vb_steps,
        runtime_ms=(time.perf_counter() - start) * 1000.0,
    )


def evaluate(
    params: EncoderParams,
    test_data: Tasks,
    config: TrainConfig,
    n_tasks: int,
    seed: int = 0,
    vb_steps: Optional[int] = None,
    workers: Optional[int] = None,
) -> EvaluationReport:
    """
    Mean hard ARI over freshly sampled test episodes.

    Args:
        params: Encoder to evaluate
        test_data: Task collection(s) with categories unseen in training
        config: Pipeline settings
        n_tasks: Episode count
        seed: Episode sampling seed
        vb_steps: Test-time inference steps (defaults to config.vb_steps)
        workers: Thread count for concurrent episodes
    """
    episodes = sample_evaluation_episodes(test_data, config, n_tasks, seed)
    report = score_episodes(params, episodes, config, vb_steps=vb_steps, workers=workers)
    logger.info("Evaluated %d tasks: mean ARI %.4f", report.n_tasks, report.mean)
    return report


def sweep_vb_steps(
    params: EncoderParams,
    test_data: Tasks,
    config: TrainConfig,
    steps: Sequence[int],
    n_tasks: int,
    seed: int = 0,
    workers: Optional[int] = None,
) -> Dict[int, EvaluationReport]:
    """Evaluate the same episodes under several test-time step counts"""
    episodes = sample_evaluation_episodes(test_data, config, n_tasks, seed)
    return {int(s): score_episodes(params, episodes, config, vb_steps=int(s), workers=workers) for s in steps}
