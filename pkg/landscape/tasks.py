"""
Celery tasks for distributed phase sweeps.

Each task runs one sweep job; the dispatching process writes all artifacts.
"""

import logging

from celery import Task, shared_task

from landscape.services.sweep import SweepJob, run_sweep_job

logger = logging.getLogger(__name__)


class CallbackTask(Task):
    """
    Base task that logs failed sweep jobs with their job key.
    """
    def on_failure(self, exc, task_id, args, kwargs, einfo):
        payload = args[0] if args else kwargs.get('payload', {})
        job_key = None
        if isinstance(payload, dict):
            job_key = (payload.get('cell'), payload.get('solution_kind'), payload.get('trial'))
        # LogRecord reserves 'args', so task arguments go under other names
        logger.error(
            f"Task {self.name} failed on job {job_key}: {exc}",
            extra={'task_id': task_id, 'job_key': job_key, 'task_args': args, 'task_kwargs': kwargs},
            exc_info=(type(exc), exc, exc.__traceback__),
        )


@shared_task(base=CallbackTask)
def run_sweep_job_task(payload: dict) -> dict:
    """Run one (cell, solution kind, trial) job and return its row as a dict."""
    job = SweepJob.from_payload(payload)
    row = run_sweep_job(job)
    logger.info(f"Sweep job {job.key} finished with status {row.status}")
    return row.to_dict()
