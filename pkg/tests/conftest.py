import pathlib

import pytest

DATA = pathlib.Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def mini_bundle_dir():
    return DATA / "mini_bundle"
