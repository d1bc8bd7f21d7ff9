import pytest

from ecopull import load_config


@pytest.fixture
def default_cfg():
    return load_config()


@pytest.fixture
def small_cfg():
    return load_config({"device_count": 3, "images_per_device": 8,
                        "slots_per_frame": 4, "slot_coefficient": None})
