from __future__ import annotations

import asyncio
import logging
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from typing import Any, Callable, Dict, List, Optional, Sequence

_LOGGER = logging.getLogger(__name__)
_UNSET = object()


def _utcnow() -> datetime:
    return datetime.now(timezone.utc)


@dataclass(slots=True)
class BatchJob:
    job_id: str
    label: str
    func: Callable[[], Dict[str, Any]]


@dataclass(slots=True)
class JobStatus:
    job_id: str
    label: str
    state: str
    last_updated: datetime
    result: Optional[Dict[str, Any]] = None
    error: Optional[str] = None
    exception: Optional[BaseException] = field(default=None, repr=False)

    @property
    def finished(self) -> bool:
        return self.state in {"done", "error"}

    def serialise(self) -> Dict[str, Any]:
        return {
            "job_id": self.job_id,
            "label": self.label,
            "state": self.state,
            "last_updated": self.last_updated.isoformat(),
            "error": self.error,
        }


class BatchRunner:
    """Runs independent jobs in worker threads, at most ``jobs`` at a time."""

    def __init__(self, jobs: int = 1) -> None:
        if jobs < 1:
            raise ValueError("jobs must be at least 1")
        self._jobs = jobs
        self._statuses: Dict[str, JobStatus] = {}
        self._tasks: Dict[str, asyncio.Task] = {}
        self._lock = asyncio.Lock()
        self._semaphore: Optional[asyncio.Semaphore] = None

    def get_status(self, job_id: str) -> JobStatus:
        status = self._statuses.get(job_id)
        if not status:
            raise KeyError(f"Unknown job id '{job_id}'")
        return status

    async def submit(self, job: BatchJob) -> JobStatus:
        if self._semaphore is None:
            self._semaphore = asyncio.Semaphore(self._jobs)
        async with self._lock:
            task = self._tasks.get(job.job_id)
            if task and not task.done():
                return self._statuses[job.job_id]
            status = JobStatus(job.job_id, job.label, "queued", _utcnow())
            self._statuses[job.job_id] = status
            worker = asyncio.create_task(self._run(job))
            self._tasks[job.job_id] = worker
            worker.add_done_callback(lambda t: asyncio.create_task(self._clear_task(job.job_id, t)))
            return status

    async def run_all(self, jobs: Sequence[BatchJob]) -> List[JobStatus]:
        """Run every job and return the final statuses in input order."""

        ids = [job.job_id for job in jobs]
        if len(set(ids)) != len(ids):
            raise ValueError("Job ids must be unique")
        for job in jobs:
            await self.submit(job)
        pending = [self._tasks[job_id] for job_id in ids if job_id in self._tasks]
        await asyncio.gather(*pending, return_exceptions=True)
        await asyncio.sleep(0)
        return [self._statuses[job_id] for job_id in ids]

    async def _clear_task(self, job_id: str, task: asyncio.Task) -> None:
        try:
            exc = task.exception()
            if exc:
                _LOGGER.exception("Job %s raised an exception", job_id, exc_info=exc)
        except asyncio.CancelledError:
            _LOGGER.warning("Job %s was cancelled", job_id)
        async with self._lock:
            self._tasks.pop(job_id, None)

    async def _update_status(
        self,
        job_id: str,
        *,
        state: Optional[str] = None,
        result: Any = _UNSET,
        error: Any = _UNSET,
        exception: Any = _UNSET,
    ) -> JobStatus:
        async with self._lock:
            status = self._statuses[job_id]
            new_status = replace(
                status,
                state=state or status.state,
                result=status.result if result is _UNSET else result,
                error=status.error if error is _UNSET else error,
                exception=status.exception if exception is _UNSET else exception,
                last_updated=_utcnow(),
            )
            self._statuses[job_id] = new_status
            return new_status

    async def _run(self, job: BatchJob) -> None:
        assert self._semaphore is not None
        async with self._semaphore:
            await self._update_status(job.job_id, state="running")
            _LOGGER.info("Running %s (%s)", job.job_id, job.label)
            try:
                result = await asyncio.to_thread(job.func)
            except Exception as exc:  # noqa: BLE001
                _LOGGER.debug("Job %s failed: %s", job.job_id, exc, exc_info=True)
                await self._update_status(job.job_id, state="error", error=str(exc), exception=exc)
            else:
                await self._update_status(job.job_id, state="done", result=result)


def run_batch(jobs: Sequence[BatchJob], workers: int = 1) -> List[JobStatus]:
    return asyncio.run(BatchRunner(workers).run_all(jobs))
