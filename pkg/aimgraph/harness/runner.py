from __future__ import annotations

import asyncio
import hashlib
import json
import logging
import os
from concurrent.futures import Executor, ProcessPoolExecutor
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

from tqdm import tqdm

from aimgraph import __version__
from aimgraph.cache.sqlite_cache import CacheStore
from aimgraph.config.loader import ExperimentConfig
from aimgraph.harness.metrics import MetricsRecord
from aimgraph.harness.simulation import run_episode
from aimgraph.policy.serialization import weights_digest

logger = logging.getLogger(__name__)

# Sections that never influence a single episode.
_UNKEYED_SECTIONS = ("run", "protocols", "training")


@dataclass(frozen=True)
class EpisodeJob:
    config: ExperimentConfig
    tag: str = ""


def execute_job(job: EpisodeJob) -> Dict[str, Any]:
    return run_episode(job.config).to_dict()


class EpisodeRunner:
    """Runs independent episodes concurrently with optional caching.

    ``parallel`` is the number of worker processes; 0 uses every logical
    core and 1 runs episodes one after another in a worker thread.
    """

    def __init__(
        self,
        cache: Optional[CacheStore] = None,
        parallel: int = 0,
        show_progress: bool = True,
    ) -> None:
        self.cache = cache
        self.parallel = parallel if parallel > 0 else (os.cpu_count() or 1)
        self.show_progress = show_progress
        self._digests: Dict[str, str] = {}

    def run_sync(self, jobs: Sequence[EpisodeJob], desc: str = "Episodes") -> List[MetricsRecord]:
        return asyncio.run(self.run(jobs, desc=desc))

    async def run(self, jobs: Sequence[EpisodeJob], desc: str = "Episodes") -> List[MetricsRecord]:
        """Metrics of every job, in job order."""
        semaphore = asyncio.Semaphore(max(1, self.parallel))
        executor: Optional[Executor] = None
        if self.parallel > 1:
            executor = ProcessPoolExecutor(max_workers=self.parallel)
        try:
            tasks = [
                self._run_single(index, job, semaphore, executor) for index, job in enumerate(jobs)
            ]
            records: List[Optional[MetricsRecord]] = [None] * len(tasks)
            progress = tqdm(total=len(tasks), desc=desc, disable=not self.show_progress)
            for task in asyncio.as_completed(tasks):
                index, record = await task
                records[index] = record
                progress.update(1)
            progress.close()
        finally:
            if executor is not None:
                executor.shutdown(wait=True)
        return [record for record in records if record is not None]

    async def _run_single(
        self,
        index: int,
        job: EpisodeJob,
        semaphore: asyncio.Semaphore,
        executor: Optional[Executor],
    ) -> Tuple[int, MetricsRecord]:
        cache_key = self.cache_key(job)
        if self.cache:
            cached = await self.cache.get_episode(cache_key)
            if cached:
                return index, MetricsRecord.from_dict(cached)

        async with semaphore:
            if executor is None:
                payload = await asyncio.to_thread(execute_job, job)
            else:
                loop = asyncio.get_running_loop()
                payload = await loop.run_in_executor(executor, execute_job, job)

        if self.cache:
            await self.cache.set_episode(cache_key, payload)
        return index, MetricsRecord.from_dict(payload)

    def cache_key(self, job: EpisodeJob) -> str:
        config = job.config.to_dict()
        for section in _UNKEYED_SECTIONS:
            config.pop(section, None)
        weights = job.config.scenario.weights
        digest = None
        if weights and job.config.scenario.controller == "rl":
            if weights not in self._digests:
                self._digests[weights] = weights_digest(weights)
            digest = self._digests[weights]
        config["scenario"].pop("weights", None)
        return _hash_payload({"config": config, "weights": digest, "version": __version__})


def _hash_payload(payload: Dict[str, object]) -> str:
    data = json.dumps(payload, sort_keys=True, default=str)
    return hashlib.sha256(data.encode("utf-8")).hexdigest()
