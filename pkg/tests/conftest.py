import numpy as np
import pytest

from bodycomp.dataset import load_dataset
from bodycomp.synthetic import GeneratorConfig, generate_synthetic

VERDICTS = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[VERDICTS] = []


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(VERDICTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture
def verdict(request):
    """record(label, ok, detail): print one PASS/FAIL line, then assert ok."""
    lines = request.config.stash[VERDICTS]

    def record(label, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} {label}: {detail}"
        lines.append(line)
        print(line)
        assert ok, line

    return record


@pytest.fixture(scope="session")
def small_dataset(tmp_path_factory):
    """40 generated subjects on 64 px frames: (csv path, records)."""
    out = tmp_path_factory.mktemp("small")
    generate_synthetic(GeneratorConfig(n_subjects=40, seed=11, image_side=64), str(out))
    csv_path = out / "dataset.csv"
    return str(csv_path), load_dataset(str(csv_path))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def tiny_samples(tmp_path_factory):
    """55 preprocessed samples at 16 px: (train[:50], val[50:], norm stats)."""
    from bodycomp.preprocess import NormStats, PreprocessConfig, build_samples

    out = tmp_path_factory.mktemp("tiny")
    generate_synthetic(GeneratorConfig(n_subjects=55, seed=21, image_side=64), str(out))
    records = load_dataset(str(out / "dataset.csv"))
    stats = NormStats.from_records(records[:50])
    samples = build_samples(records, stats, PreprocessConfig(image_side=16), str(out))
    return samples[:50], samples[50:], stats
