import asyncio
from dataclasses import dataclass
from typing import Any, Callable, List, Optional
import logging

logger = logging.getLogger(__name__)


@dataclass
class BatchJob:
    id: str
    func: Callable[..., Any]
    args: tuple = ()
    kwargs: Optional[dict] = None


@dataclass
class BatchResult:
    job_id: str
    success: bool
    value: Any = None
    error: Optional[str] = None
    error_type: Optional[str] = None
    exception: Optional[BaseException] = None


class BatchRunner:
    """Runs CPU-bound jobs on worker threads behind a semaphore.

    Results come back in job order regardless of completion order, so the
    number of workers never changes what callers see.
    """

    def __init__(self, concurrency: int = 1):
        if concurrency < 1:
            raise ValueError("concurrency must be at least 1")
        self.concurrency = concurrency

    async def process_batch(self, jobs: List[BatchJob]) -> List[BatchResult]:
        if not jobs:
            logger.warning("No jobs provided to batch runner")
            return []

        logger.info("Starting batch processing", extra={
            "job_count": len(jobs),
            "concurrency": self.concurrency,
        })
        semaphore = asyncio.Semaphore(self.concurrency)
        tasks = [asyncio.create_task(self._process_single_job(job, semaphore)) for job in jobs]
        results = await asyncio.gather(*tasks)

        successful = sum(1 for r in results if r.success)
        logger.info("Batch processing completed", extra={
            "total_jobs": len(jobs),
            "successful": successful,
            "failed": len(results) - successful,
        })
        return list(results)

    async def _process_single_job(self, job: BatchJob, semaphore: asyncio.Semaphore) -> BatchResult:
        async with semaphore:
            logger.debug("Processing batch job", extra={"job_id": job.id})
            try:
                value = await asyncio.to_thread(job.func, *job.args, **(job.kwargs or {}))
            except Exception as e:
                logger.error("Batch job failed", extra={
                    "job_id": job.id,
                    "error": str(e),
                    "error_type": type(e).__name__,
                })
                return BatchResult(job_id=job.id, success=False, error=str(e), error_type=type(e).__name__,
                                   exception=e)
            return BatchResult(job_id=job.id, success=True, value=value)

    def run_all(self, jobs: List[BatchJob]) -> List[BatchResult]:
        """Synchronous entry point for callers outside an event loop."""
        return asyncio.run(self.process_batch(jobs))
