import pytest

from branchsite.fixture import write_fixture
from branchsite.project import load_project, run_pipeline


@pytest.fixture(scope="session")
def demo_config_path(tmp_path_factory):
    """The bundled demo project, generated once per test session."""
    target = tmp_path_factory.mktemp("demo_project")
    return write_fixture(target)


@pytest.fixture(scope="session")
def demo_report(demo_config_path):
    """One full pipeline run over the demo project."""
    cfg = load_project(demo_config_path)
    return run_pipeline(cfg)
