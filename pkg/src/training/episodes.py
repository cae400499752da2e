"""
Metaclust - Episode Sampling
============================

One episode is a small clustering task: a handful of categories from one
task collection, capped instances per category, labels renumbered 0..K−1.
"""

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from ..data import LabeledDataset
from ..errors import ContractError


@dataclass
class TaskBatch:
    """A sampled episode"""
    X: np.ndarray
    y: Optional[np.ndarray]
    task_id: int
    categories: Tuple[int, ...]     # category ids in the source task
    seed: int                       # seeds per-episode randomness (dropout, random R0)

    @property
    def n_instances(self) -> int:
        return self.X.shape[0]

    @property
    def n_categories(self) -> int:
        return len(self.categories)


Tasks = Union[LabeledDataset, Sequence[LabeledDataset]]


def as_tasks(data: Tasks) -> Sequence[LabeledDataset]:
    return [data] if isinstance(data, LabeledDataset) else list(data)


def sample_episode(
    data: Tasks,
    rng: np.random.Generator,
    max_clusters: int = 10,
    n_max_per_category: int = 20,
    min_categories: int = 1,
    max_categories: Optional[int] = None,
) -> TaskBatch:
    """
    Draw one episode.

    Picks a task uniformly, then K uniformly from
    {min_categories, …, min(max_categories or K′, K_t)} (the lower bound is
    clipped to K_t), then K categories without replacement, then up to
    n_max_per_category instances of each.

    Raises:
        ContractError: If there are no tasks or the chosen task has no categories
    """
    tasks = as_tasks(data)
    if not tasks:
        raise ContractError("sample_episode needs at least one task")
    task_id = int(rng.integers(len(tasks)))
    task = tasks[task_id]
    available = task.n_categories
    if available < 1 or task.y is None:
        raise ContractError(f"Task {task_id} has no labeled categories")

    upper = min(max_categories or max_clusters, available)
    lower = min(min_categories, upper)
    k = int(rng.integers(lower, upper + 1))
    chosen = rng.choice(available, size=k, replace=False)

    index = task.category_index()
    rows, labels = [], []
    for label, category in enumerate(chosen):
        members = index[int(category)]
        if members.size > n_max_per_category:
            members = np.sort(rng.choice(members, size=n_max_per_category, replace=False))
        rows.append(members)
        labels.append(np.full(members.size, label, dtype=np.int64))

    rows = np.concatenate(rows)
    return TaskBatch(
        X=task.X[rows],
        y=np.concatenate(labels),
        task_id=task_id,
        categories=tuple(int(c) for c in chosen),
        seed=int(rng.integers(2**31 - 1)),
    )
