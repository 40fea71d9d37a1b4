import pytest

from minifair.data import builtin_spec, load_csv, preprocess, split
from minifair.synthdata import generate_compas_csv, generate_law_csv


def make_dataset(tmp_path_factory, name, generator, n, seed):
    path = tmp_path_factory.mktemp("data") / f"{name}.csv"
    generator(path, n=n, seed=seed)
    spec = builtin_spec(name)
    raw = load_csv(path, spec)
    sp = split(raw.n_rows, seed=0)
    ds = preprocess(raw, spec, sp.train_indices)
    return ds, sp


@pytest.fixture(scope="session")
def law_dataset(tmp_path_factory):
    """(ProcessedDataset, Split) over a small synthetic law-style table."""
    return make_dataset(tmp_path_factory, "law", generate_law_csv, n=400, seed=0)


@pytest.fixture(scope="session")
def compas_dataset(tmp_path_factory):
    """(ProcessedDataset, Split) over a small synthetic recidivism-style table."""
    return make_dataset(tmp_path_factory, "compas", generate_compas_csv, n=500, seed=0)
