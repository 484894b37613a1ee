import asyncio

import pytest
import pytest_asyncio

from channel_boxes.runner import BatchJob, BatchRunner, run_batch


@pytest_asyncio.fixture
async def runner(monkeypatch):
    async def immediate_to_thread(func, *args, **kwargs):
        return func(*args, **kwargs)

    monkeypatch.setattr(asyncio, "to_thread", immediate_to_thread)
    return BatchRunner(jobs=2)


def _failing():
    raise ValueError("bad box")


@pytest.mark.asyncio
async def test_run_all_keeps_input_order(runner):
    jobs = [BatchJob(str(index), f"job {index}", lambda index=index: {"value": index}) for index in range(4)]

    statuses = await runner.run_all(jobs)

    assert [status.job_id for status in statuses] == ["0", "1", "2", "3"]
    assert [status.result for status in statuses] == [{"value": index} for index in range(4)]
    assert all(status.state == "done" and status.finished for status in statuses)


@pytest.mark.asyncio
async def test_failures_are_recorded_per_job(runner):
    statuses = await runner.run_all([BatchJob("ok", "ok", lambda: {}), BatchJob("broken", "broken", _failing)])

    assert statuses[0].state == "done"
    assert statuses[1].state == "error"
    assert statuses[1].error == "bad box"
    assert isinstance(statuses[1].exception, ValueError)
    assert statuses[1].serialise()["error"] == "bad box"


@pytest.mark.asyncio
async def test_submit_ignores_duplicate_running_jobs(runner):
    job = BatchJob("one", "one", lambda: {"value": 1})

    await runner.submit(job)
    task = runner._tasks["one"]
    second = await runner.submit(job)

    assert second.job_id == "one"
    assert runner._tasks["one"] is task
    await task
    await asyncio.sleep(0)
    assert runner.get_status("one").result == {"value": 1}


@pytest.mark.asyncio
async def test_unknown_and_duplicate_ids(runner):
    with pytest.raises(KeyError):
        runner.get_status("missing")
    with pytest.raises(ValueError):
        await runner.run_all([BatchJob("x", "x", dict), BatchJob("x", "x", dict)])


def test_worker_count_must_be_positive():
    with pytest.raises(ValueError):
        BatchRunner(0)


def test_run_batch_uses_worker_threads():
    statuses = run_batch([BatchJob("a", "a", lambda: {"value": "a"})], workers=1)

    assert statuses[0].result == {"value": "a"}
