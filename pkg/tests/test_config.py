import textwrap

import pytest

from channel_boxes.config import CONFIG_ENV_VAR, ConfigurationError, Settings, load_settings


def test_load_settings_success(tmp_path):
    config = tmp_path / "config.yaml"
    config.write_text(
        textwrap.dedent(
            """
            linalg:
              hermiticity_tol: 1.0e-8
            solver:
              gap_tol: 1.0e-6
              backend: scs
            heuristic:
              restarts: 3
              seed: 11
            boxes:
              tensor_dim_cap: 64
            run:
              log_level: debug
            """
        ).strip()
    )

    settings = load_settings(str(config))

    assert settings.solver.gap_tol == 1e-6
    assert settings.solver.backend == "SCS"
    assert settings.heuristic.restarts == 3
    assert settings.heuristic.seed == 11
    assert settings.boxes.tensor_dim_cap == 64
    assert settings.run.log_level == "DEBUG"
    assert settings.solver.zero_floor == 1e-7
    assert settings.linalg.hermiticity_tol == 1e-8
    assert settings.linalg.rank_tol == 1e-10


def test_load_settings_raises_on_invalid(tmp_path):
    config = tmp_path / "config.yaml"
    config.write_text(
        textwrap.dedent(
            """
            heuristic:
              restarts: 0
            unknown_section:
              value: 1
            """
        ).strip()
    )

    with pytest.raises(ConfigurationError):
        load_settings(str(config))


def test_missing_explicit_file_is_an_error(tmp_path):
    with pytest.raises(ConfigurationError):
        load_settings(str(tmp_path / "absent.yaml"))


def test_default_file_is_optional(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv(CONFIG_ENV_VAR, raising=False)

    assert load_settings() == Settings()


def test_environment_variable_selects_file(tmp_path, monkeypatch):
    config = tmp_path / "env.yaml"
    config.write_text("heuristic:\n  seed: 5\n")
    monkeypatch.setenv(CONFIG_ENV_VAR, str(config))

    assert load_settings().heuristic.seed == 5


def test_overrides_apply_and_validate():
    settings = Settings().with_overrides(tol=1e-9, gap_tol=1e-8, restarts=2, seed=4, jobs=3, log_level="warning")

    assert settings.solver.feasibility_tol == 1e-9
    assert settings.solver.gap_tol == 1e-8
    assert settings.heuristic.restarts == 2
    assert settings.heuristic.seed == 4
    assert settings.run.jobs == 3
    assert settings.run.log_level == "WARNING"

    with pytest.raises(ConfigurationError):
        Settings().with_overrides(restarts=0)


def test_feasibility_tolerance_bounded_by_validation_tolerance():
    with pytest.raises(ConfigurationError):
        Settings().with_overrides(tol=1e-3)


def test_tightened_solver_settings():
    tight = Settings().solver.tightened()

    assert tight.feasibility_tol == pytest.approx(1e-10)
    assert tight.gap_tol == pytest.approx(1e-9)
    assert tight.max_iterations == 400
