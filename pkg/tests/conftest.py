from __future__ import annotations

import numpy as np
import pytest

from chartrec.features import FeatureNorms, SemanticEmbedder, TableFeaturizer
from chartrec.model import DqnModel, ModelConfig
from chartrec.tables import Field, FieldRole, FieldType, Table, make_table


def pytest_addoption(parser):
    parser.addoption(
        "--skip-slow", action="store_true", default=False,
        help="skip the training-heavy acceptance checks",
    )


def pytest_collection_modifyitems(config, items):
    if config.getoption("--skip-slow"):
        marker = pytest.mark.skip(reason="--skip-slow given")
        for item in items:
            if "slow" in item.keywords:
                item.add_marker(marker)


def build_typed_table(types, table_id=None, n_rows=4):
    """Table with one field per requested type and simple synthetic values."""
    if table_id is None:
        table_id = "t-" + "".join(t.value[0] for t in types) + f"-{n_rows}"
    columns = []
    headers = []
    for i, t in enumerate(types):
        headers.append(f"col {i}")
        if t is FieldType.STRING:
            columns.append([f"s{r}" for r in range(n_rows)])
        elif t is FieldType.YEAR:
            columns.append([2000 + r for r in range(n_rows)])
        elif t is FieldType.DATETIME:
            columns.append([f"2021-0{r + 1}-01" for r in range(n_rows)])
        elif t is FieldType.DECIMAL:
            columns.append([float(i) + r * 0.5 for r in range(n_rows)])
        else:
            columns.append([None] * n_rows)
    return make_table(table_id, headers, columns, types=list(types))


@pytest.fixture
def three_field_table():
    # String category + two numeric measures
    return make_table(
        "demo",
        ["Program", "Total Male Students", "Total Female Students"],
        [
            ["Engineering", "Business", "Arts"],
            [320.0, 280.0, 150.0],
            [210.0, 260.0, 240.0],
        ],
        types=[FieldType.STRING, FieldType.DECIMAL, FieldType.DECIMAL],
    )


@pytest.fixture
def four_field_table():
    return make_table(
        "wide",
        ["Year", "Revenue", "Cost", "Region"],
        [
            [2018, 2019, 2020, 2021],
            [10.0, 12.5, 13.0, 9.0],
            [7.0, 8.0, 8.5, 6.0],
            ["N", "S", "E", "W"],
        ],
        types=[FieldType.YEAR, FieldType.DECIMAL, FieldType.DECIMAL, FieldType.STRING],
    )


@pytest.fixture(scope="session")
def tiny_model():
    embedder = SemanticEmbedder(dim=16)
    featurizer = TableFeaturizer(embedder, FeatureNorms.identity())
    return DqnModel(ModelConfig.preset_config("tiny", d_sem=16), featurizer, seed=7)
