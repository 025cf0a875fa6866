import os
import tempfile
from datetime import datetime, timedelta

import pytest

from supportlab.db import ExperimentStore, RunRecord, StoreError, new_run, run_key
from supportlab.errors import SupportLabError


class TestRunKey:
    def test_key_ignores_dict_order(self):
        assert run_key("theorem1", {"a": 1, "b": [1, 2]}) == run_key("theorem1", {"b": [1, 2], "a": 1})

    def test_key_depends_on_command_and_config(self):
        base = run_key("theorem1", {"seed": 0})
        assert base != run_key("lemma41", {"seed": 0})
        assert base != run_key("theorem1", {"seed": 1})
        assert len(base) == 64


class TestExperimentStore:
    """Test the sqlite run store."""

    @pytest.fixture
    def temp_db(self):
        with tempfile.TemporaryDirectory() as tmpdir:
            yield os.path.join(tmpdir, "runs.db")

    def test_save_and_get(self, temp_db):
        store = ExperimentStore(temp_db)
        run = new_run("theorem1", {"seed": 3, "ladder": [0.2, 0.1]})
        store.save_run(run)

        loaded = store.get_run(run.id)
        assert loaded is not None
        assert loaded.command == "theorem1"
        assert loaded.config == {"seed": 3, "ladder": [0.2, 0.1]}
        assert loaded.status == "running"
        assert loaded.sha256 == run.sha256
        assert loaded.completed_at is None

    def test_update_to_done(self, temp_db):
        store = ExperimentStore(temp_db)
        run = new_run("theorem1", {"seed": 0})
        store.save_run(run)
        run.status = "done"
        run.completed_at = datetime.now()
        run.report_csv = "# supportlab-records v1\n"
        run.wall_time = 1.5
        run.metadata = {"violations": []}
        store.save_run(run)

        loaded = store.get_run(run.id)
        assert loaded.status == "done"
        assert loaded.report_csv == "# supportlab-records v1\n"
        assert loaded.wall_time == 1.5
        assert loaded.metadata == {"violations": []}

    def test_completed_by_sha_skips_running_and_picks_latest(self, temp_db):
        store = ExperimentStore(temp_db)
        config = {"seed": 0}
        running = new_run("theorem1", config)
        store.save_run(running)
        assert store.get_completed_by_sha(running.sha256) is None

        older = RunRecord(id="older", command="theorem1", sha256=running.sha256, config=config, status="done",
                          created_at=datetime.now() - timedelta(hours=1))
        newer = RunRecord(id="newer", command="theorem1", sha256=running.sha256, config=config, status="done",
                          created_at=datetime.now())
        store.save_run(older)
        store.save_run(newer)
        assert store.get_completed_by_sha(running.sha256).id == "newer"

    def test_missing_run(self, temp_db):
        assert ExperimentStore(temp_db).get_run("nope") is None

    def test_list_runs_newest_first(self, temp_db):
        store = ExperimentStore(temp_db)
        for k in range(3):
            store.save_run(RunRecord(id=f"r{k}", command="theorem1", sha256="x", config={}, status="done",
                                     created_at=datetime(2026, 1, 1 + k)))
        assert [r.id for r in store.list_runs()] == ["r2", "r1", "r0"]
        assert len(store.list_runs(limit=1)) == 1

    def test_in_memory_store_keeps_table(self):
        store = ExperimentStore()
        run = new_run("lemma41", {})
        store.save_run(run)
        assert store.get_run(run.id).command == "lemma41"

    def test_unwritable_path(self):
        with tempfile.TemporaryDirectory() as tmpdir:
            with pytest.raises(StoreError):
                ExperimentStore(os.path.join(tmpdir, "missing", "runs.db"))

    def test_store_errors_are_supportlab_errors(self, temp_db):
        with open(temp_db, "wb") as f:
            f.write(b"not a database" * 128)
        with pytest.raises(SupportLabError):
            ExperimentStore(temp_db)
