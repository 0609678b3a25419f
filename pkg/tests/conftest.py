import hashlib
import json

import pytest

from mwt.pdedata import GenerationConfig, PdeDataset, generate_dataset

CRITERIA_KEY = "acceptance_criteria"


@pytest.fixture(scope="session")
def dataset_cache(request):
    """``get(GenerationConfig) -> PdeDataset``, cached on disk across pytest runs."""
    root = request.config.cache.mkdir("mwt-datasets")

    def get(cfg: GenerationConfig) -> PdeDataset:
        key = hashlib.sha256(json.dumps(cfg.__dict__, sort_keys=True, default=str).encode()).hexdigest()[:16]
        path = root / f"{cfg.equation}-{cfg.resolution}-{key}.mwtd"
        if path.exists():
            return PdeDataset.load(path)
        ds = generate_dataset(cfg)
        ds.save(path)
        return ds

    return get


@pytest.fixture
def criterion(request):
    """Record the number, name and measured detail of an acceptance criterion."""
    def record(number: int, name: str, detail: str = ""):
        request.node.user_properties.append((CRITERIA_KEY, (number, name, detail)))
    return record


def pytest_terminal_summary(terminalreporter):
    rows = {}
    for reports in terminalreporter.stats.values():
        for rep in reports:
            props = dict(getattr(rep, "user_properties", ()))
            if CRITERIA_KEY not in props or getattr(rep, "when", None) != "call":
                continue
            number, name, detail = props[CRITERIA_KEY]
            rows[number] = (name, "PASS" if rep.passed else "FAIL", detail)
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(rows):
        name, status, detail = rows[number]
        terminalreporter.write_line(f"criterion {number:2d} {status}  {name}" + (f"  ({detail})" if detail else ""))
