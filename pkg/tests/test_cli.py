import math

import numpy as np
import pytest

from mwt import cli
from mwt.errors import ConfigError
from mwt.model import OperatorModel
from mwt.model.checkpoint import checkpoint_bytes, load_checkpoint
from mwt.pdedata import PdeDataset
from mwt.pdedata.dataset import expected_file_size


def run(capsys, *args):
    code = cli.main([str(a) for a in args])
    return code, capsys.readouterr()


@pytest.fixture
def identity_data(tmp_path, capsys):
    path = tmp_path / "id.mwtd"
    code, _ = run(capsys, "datagen", "equation=identity", "n_samples=250", "resolution=64", f"dataset={path}")
    assert code == 0
    return path


IDENTITY_RUN = ("n_train=200", "n_test=50", "resolution=64", "k=4", "L=5", "lr=3e-3", "step=10")


# -- config ---------------------------------------------------------------------

def test_config_file_comments_and_overrides(tmp_path):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text("# comment\nk = 3   # trailing\n\nlr=0.01\ndataset=data/x.mwtd\n")
    cfg = cli.load_config(cfg_file, ["lr=0.02"], env={})
    assert cfg.k == 3 and cfg.lr == 0.02
    assert cfg.dataset == str((tmp_path / "data/x.mwtd").resolve())


def test_unknown_key_rejected(tmp_path, capsys):
    with pytest.raises(ConfigError):
        cli.parse_assignments(["colour=blue"])
    code, out = run(capsys, "filters", "colour=blue")
    assert code == 1 and "colour" in out.err
    assert run(capsys, "filters", "k=three")[0] == 1


def test_seed_environment_override():
    assert cli.load_config(None, ["seed=3"], env={"MWT_SEED": "11"}).seed == 11
    assert cli.load_config(None, ["seed=3"], env={}).seed == 3


def test_config_text_round_trip(tmp_path):
    cfg = cli.load_config(None, ["k=5", "lr=0.0003", "dump_basis=true", "normalize_targets=true",
                                 f"out_dir={tmp_path}"], env={})
    assert cli.train_config(cfg).normalize_targets
    path = tmp_path / "copy.cfg"
    path.write_text(cfg.to_text())
    assert cli.load_config(path, env={}) == cfg


def test_usage_errors_exit_one(capsys):
    assert run(capsys, "nonsense")[0] == 1
    assert run(capsys)[0] == 1


# -- filters, transform, kernelviz ---------------------------------------------------

def test_filters_legendre_k3(tmp_path, capsys):
    code, out = run(capsys, "filters", "basis=legendre", "k=3", f"out_dir={tmp_path}", "dump_basis=true")
    assert code == 0
    first = (tmp_path / "H0.csv").read_text().splitlines()[0].split(",")
    assert first[0].startswith("0.70710678") and first[1:] == ["0", "0"]
    assert float(first[0]) == pytest.approx(1 / math.sqrt(2), abs=1e-12)
    assert len((tmp_path / "H0.csv").read_text().splitlines()) == 3
    assert float((tmp_path / "residual.csv").read_text().splitlines()[1].split(",")[2]) < 1e-8
    assert (tmp_path / "basis.csv").read_text().splitlines()[0] == "1,0,0"
    assert "residual" in out.out


def test_filters_haar(tmp_path, capsys):
    assert run(capsys, "filters", "k=1", f"out_dir={tmp_path}")[0] == 0
    for name in ("H0", "H1", "G0", "G1"):
        assert abs(float((tmp_path / f"{name}.csv").read_text())) == pytest.approx(1 / math.sqrt(2), abs=1e-12)


def test_filters_unsupported_order(tmp_path, capsys):
    code, out = run(capsys, "filters", "k=9", f"out_dir={tmp_path}")
    assert code == 1 and "[1, 6]" in out.err


def test_filters_write_failure_exit_two(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert run(capsys, "filters", "k=2", f"out_dir={blocker / 'sub'}")[0] == 2


@pytest.mark.parametrize("dim,N", [(1, 8), (2, 4)])
def test_transform_self_test(capsys, dim, N):
    code, out = run(capsys, "transform", "basis=chebyshev", "k=3", f"dim={dim}", f"N={N}", "trials=5")
    assert code == 0 and "max relative residual" in out.out


def read_sparsity(path):
    rows = [line.split(",") for line in path.read_text().splitlines()[1:]]
    return {(r[0], int(r[1])): float(r[2]) for r in rows}


def test_kernelviz_polynomial_and_zero(tmp_path, capsys):
    assert run(capsys, "kernelviz", "kernel=polynomial", "k=3", "N=5", f"out_dir={tmp_path}")[0] == 0
    fractions = read_sparsity(tmp_path / "sparsity.csv")
    assert all(v == 0 for (name, _), v in fractions.items() if name in "ABC")
    assert fractions[("T", 0)] > 0
    assert run(capsys, "kernelviz", "kernel=zero", "k=2", "N=4", f"out_dir={tmp_path}")[0] == 0
    assert all(v == 0 for v in read_sparsity(tmp_path / "sparsity.csv").values())
    assert (tmp_path / "mask.csv").read_text().strip() == "block,scale,row,col"


def test_kernelviz_gaussian_band(tmp_path, capsys):
    code, out = run(capsys, "kernelviz", "kernel=gaussian", "k=4", "N=6", f"out_dir={tmp_path}")
    assert code == 0
    assert float(out.out.split("=")[-1]) < 0.3
    coords = (tmp_path / "mask.csv").read_text().splitlines()[1:]
    assert coords and all(len(c.split(",")) == 4 for c in coords)


def test_kernelviz_unknown_kernel(capsys):
    code, out = run(capsys, "kernelviz", "kernel=sinc")
    assert code == 1 and "gaussian" in out.err


# -- datagen ----------------------------------------------------------------------

def test_datagen_deterministic(tmp_path, capsys):
    for name in ("a", "b"):
        assert run(capsys, "datagen", "equation=burgers", "n_samples=2", "resolution=256", "seed=0",
                   f"dataset={tmp_path / name}.mwtd")[0] == 0
    assert (tmp_path / "a.mwtd").read_bytes() == (tmp_path / "b.mwtd").read_bytes()
    assert (tmp_path / "a.mwtd.cfg").exists()


def test_datagen_kdv_file_length(tmp_path, capsys):
    path = tmp_path / "kdv.mwtd"
    assert run(capsys, "datagen", "equation=kdv", "n_samples=1", "resolution=1024", "T=0.001",
               f"dataset={path}")[0] == 0
    ds = PdeDataset.load(path)
    assert path.stat().st_size == expected_file_size("kdv", ds.metadata, 1, (1024,))


def test_datagen_darcy_positive_coefficient(tmp_path, capsys):
    path = tmp_path / "darcy.mwtd"
    assert run(capsys, "datagen", "equation=darcy", "n_samples=2", "resolution=32", f"dataset={path}")[0] == 0
    ds = PdeDataset.load(path)
    assert ds.inputs.shape == (2, 32, 32) and ds.inputs.min() > 0


def test_datagen_seed_from_environment(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("MWT_SEED", "4")
    run(capsys, "datagen", "equation=beam", "n_samples=1", "resolution=32", "seed=0", f"dataset={tmp_path}/x.mwtd")
    assert PdeDataset.load(tmp_path / "x.mwtd").metadata["seed"] == "4"
    assert "seed=4" in (tmp_path / "x.mwtd.cfg").read_text().splitlines()


def test_datagen_bad_equation(tmp_path, capsys):
    assert run(capsys, "datagen", "equation=heat", f"dataset={tmp_path}/x.mwtd")[0] == 1


# -- train and eval -----------------------------------------------------------------

def test_train_zero_epochs_is_initialization(identity_data, tmp_path, capsys):
    out = tmp_path / "run"
    assert run(capsys, "train", f"dataset={identity_data}", "epochs=0", *IDENTITY_RUN, f"out_dir={out}")[0] == 0
    assert (out / "metrics.csv").read_text() == "epoch,train_rel_l2,test_rel_l2,lr\n"
    cfg = cli.load_config(out / "run.cfg", env={})
    fresh = OperatorModel(cli.model_config(cfg, 1), seed=cfg.seed)
    assert checkpoint_bytes(load_checkpoint(out / "model.mwtm")) == checkpoint_bytes(fresh)


def test_train_identity_and_eval(identity_data, tmp_path, capsys):
    out = tmp_path / "run"
    code, res = run(capsys, "train", f"dataset={identity_data}", "epochs=50", *IDENTITY_RUN, f"out_dir={out}")
    assert code == 0
    final = float(res.out.strip().splitlines()[-1].split()[4])
    assert final < 0.01
    csv = (out / "metrics.csv").read_text().splitlines()
    assert len(csv) == 51 and csv[0] == "epoch,train_rel_l2,test_rel_l2,lr"

    code, res = run(capsys, "eval", f"checkpoint={out / 'model.mwtm'}", f"dataset={identity_data}")
    assert code == 0
    native = float(res.out.split()[3])
    assert native < 0.01
    code, res = run(capsys, "eval", f"checkpoint={out / 'model.mwtm'}", f"dataset={identity_data}",
                    "eval_resolution=64")
    assert float(res.out.split()[3]) == native

    # the serialized config reproduces the run
    again = tmp_path / "again"
    assert run(capsys, "train", "--config", out / "run.cfg", f"out_dir={again}")[0] == 0
    assert (again / "metrics.csv").read_bytes() == (out / "metrics.csv").read_bytes()
    assert (again / "model.mwtm").read_bytes() == (out / "model.mwtm").read_bytes()


def test_train_low_resolution_eval_high(tmp_path, capsys):
    data = tmp_path / "beam.mwtd"
    run(capsys, "datagen", "equation=beam", "n_samples=6", "resolution=128", f"dataset={data}")
    out = tmp_path / "run"
    assert run(capsys, "train", f"dataset={data}", "n_train=4", "n_test=2", "resolution=32", "k=2",
               "epochs=2", f"out_dir={out}")[0] == 0
    code, res = run(capsys, "eval", f"checkpoint={out / 'model.mwtm'}", f"dataset={data}")
    assert code == 0 and "resolution 128" in res.out
    assert np.isfinite(float(res.out.split()[3]))


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_train_divergence_exit_three(identity_data, tmp_path, capsys):
    code, res = run(capsys, "train", f"dataset={identity_data}", "epochs=5", "lr=1e300",
                    *IDENTITY_RUN[:-2], f"out_dir={tmp_path}")
    assert code == 3 and "epoch" in res.err


def test_eval_incompatible_and_io_errors(identity_data, tmp_path, capsys):
    assert run(capsys, "eval", f"checkpoint={identity_data}", f"dataset={identity_data}")[0] == 4
    assert run(capsys, "eval", f"checkpoint={tmp_path / 'missing'}", f"dataset={identity_data}")[0] == 2
    truncated = tmp_path / "t.mwtd"
    truncated.write_bytes(identity_data.read_bytes()[:100])
    out = tmp_path / "run"
    run(capsys, "train", f"dataset={identity_data}", "epochs=0", *IDENTITY_RUN, f"out_dir={out}")
    assert run(capsys, "eval", f"checkpoint={out / 'model.mwtm'}", f"dataset={truncated}")[0] == 2
    darcy = tmp_path / "d.mwtd"
    run(capsys, "datagen", "equation=darcy", "n_samples=1", "resolution=8", f"dataset={darcy}")
    assert run(capsys, "eval", f"checkpoint={out / 'model.mwtm'}", f"dataset={darcy}")[0] == 4
