import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from helpers import DATA_DIR  # noqa: E402

from huruf import store, training  # noqa: E402
from huruf.data import LabelMap, load_csv_pair  # noqa: E402
from huruf.network import ModelSpec  # noqa: E402


@pytest.fixture(scope="session")
def letters8_dataset():
    return load_csv_pair(f"{DATA_DIR}/letters8_images.csv",
                         f"{DATA_DIR}/letters8_labels.csv",
                         LabelMap.letters(), side=16)


@pytest.fixture(scope="session")
def memorized_letters(letters8_dataset, tmp_path_factory):
    """A letters model overfit on the 8-row fixture, saved to disk.

    Shared by evaluation, CLI, store, and service tests.
    """
    # small batches and many epochs so the eval-mode running batchnorm
    # statistics (momentum 0.99) actually converge on 8 samples
    spec = ModelSpec(num_classes=28, side=16)
    cfg = training.TrainConfig(epochs=350, batch_size=4, learning_rate=0.003, seed=7)
    model, history = training.fit(spec, letters8_dataset, letters8_dataset, cfg)
    assert history[-1]["val_acc"] == 1.0, "fixture model failed to memorize"
    path = str(tmp_path_factory.mktemp("models") / "letters")
    store.save_model(model, path)
    return model, letters8_dataset, path
