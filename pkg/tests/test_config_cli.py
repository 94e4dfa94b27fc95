import json

import pytest

from sugmine.cli import dispatch
from sugmine.config import ConfigError, RunConfig, from_dict, parse_config
from sugmine.corpus import save_dataset
from sugmine.synthetic import make_corpus


def test_empty_config_defaults(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text("")
    cfg = parse_config(p)
    assert cfg.transformer.adapter_dim == 32
    assert cfg.transformer.accum_steps == 2
    assert cfg.transformer.adapter_lr_multiplier == 10
    assert cfg.to_dict()["transformer"]["adapter_dim"] == 32


def test_unknown_key_suggestion(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text("[transformer]\nadaptor_dim = 16\n")
    with pytest.raises(ConfigError, match="did you mean 'adapter_dim'"):
        parse_config(p)


@pytest.mark.parametrize("text", [
    "[transformer]\nepochs = 'ten'\n",
    "[augment]\nmethod = 'mixup'\n",
    "[transformer]\nd_model = 10\nn_heads = 4\n",
    "schema_version = '9'\n",
    "[transformer\n",
])
def test_invalid_configs(tmp_path, text):
    p = tmp_path / "c.toml"
    p.write_text(text)
    with pytest.raises(ConfigError):
        parse_config(p)


def test_roundtrip_is_identity(tmp_path):
    cfg = from_dict({"seed": 3, "transformer": {"epochs": 4}, "augment": {"markers": ["but"]}})
    p = tmp_path / "c.json"
    p.write_text(cfg.to_json())
    again = parse_config(p)
    assert again == cfg and again.hash() == cfg.hash()


def test_stage_seeds_follow_global(monkeypatch):
    cfg = from_dict({"seed": 9, "embed": {"seed": 1}})
    assert cfg.seeds() == {"global": 9, "embed": 1, "baseline": 9, "augment": 9, "transformer": 9}
    monkeypatch.setenv("SUGMINE_SEED", "77")
    assert from_dict({}).seed == 77
    assert from_dict({}).transformer.seed == 77


def test_help_and_unknown_command(capsys):
    assert dispatch(["--help"]) == 0
    assert "usage" in capsys.readouterr().out
    assert dispatch(["frobnicate"]) == 1
    assert dispatch([]) == 1


def test_missing_input_is_data_error(tmp_path):
    assert dispatch(["ingest", "--input", str(tmp_path / "nope.jsonl"), "--out", str(tmp_path / "o.jsonl")]) == 2


def test_bad_config_is_usage_error(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text("[transformer]\nadaptor_dim = 16\n")
    assert dispatch(["run", "--config", str(p)]) == 1


SMALL_TOML = """
seed = 5
[paths]
train = "data.jsonl"
test = "data.jsonl"
out = "out"
[embed]
d_emb = 16
epochs = 2
[baseline]
epochs = 20
[transformer]
d_model = 16
n_heads = 2
d_ff = 32
adapter_dim = 4
max_len = 32
epochs = 2
"""


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    w = tmp_path_factory.mktemp("cli")
    save_dataset(make_corpus(400, seed=8), w / "data.jsonl")
    (w / "c.toml").write_text(SMALL_TOML)
    return w


def test_run_and_follow_up_commands(workdir):
    w = workdir
    assert dispatch(["run", "--config", str(w / "c.toml")]) == 0
    report = json.loads((w / "out" / "report.json").read_text())
    assert set(report["per_domain"]) == {"hotel", "electronics", "travel", "software"}
    assert report["seeds"]["transformer"] == 5

    assert dispatch(["evaluate", "--test", str(w / "data.jsonl"), "--artifacts", str(w / "out"), "--out", str(w / "r2.json")]) == 0
    assert json.loads((w / "r2.json").read_text()) == report
    assert (w / "r2.json.manifest.json").exists()

    rid = json.loads((w / "data.jsonl").read_text().splitlines()[0])["id"]
    assert dispatch(["explain", "--review-id", rid, "--in", str(w / "data.jsonl"), "--artifacts", str(w / "out"),
                     "--out", str(w / "h.svg"), "--json", str(w / "h.json")]) == 0
    sal = json.loads((w / "h.json").read_text())
    assert (w / "h.svg").read_text().count('class="token"') == len(sal["tokens"])
    assert dispatch(["explain", "--review-id", "missing", "--in", str(w / "data.jsonl"), "--artifacts", str(w / "out"),
                     "--out", str(w / "x.svg")]) == 2


def test_stagewise_commands(workdir):
    w = workdir
    data = str(w / "data.jsonl")
    assert dispatch(["ingest", "--input", data, "--out", str(w / "in.jsonl")]) == 0
    assert (w / "in.jsonl").read_text() == (w / "data.jsonl").read_text()
    assert dispatch(["preprocess", "--in", data, "--out", str(w / "pre.jsonl")]) == 0
    assert dispatch(["train-embeddings", "--in", str(w / "pre.jsonl"), "--out", str(w / "emb.txt"), "--dim", "16", "--epochs", "1"]) == 0
    assert dispatch(["train-baseline", "--in", str(w / "pre.jsonl"), "--emb", str(w / "emb.txt"), "--out", str(w / "base.json")]) == 0
    assert dispatch(["augment", "--in", str(w / "pre.jsonl"), "--emb", str(w / "emb.txt"), "--baseline", str(w / "base.json"),
                     "--out", str(w / "aug.jsonl")]) == 0
    assert len((w / "aug.jsonl").read_text().splitlines()) >= len((w / "pre.jsonl").read_text().splitlines())
    assert dispatch(["augment", "--in", str(w / "pre.jsonl"), "--method", "discourse", "--out", str(w / "bad.jsonl")]) == 1
    assert dispatch(["augment", "--in", str(w / "pre.jsonl"), "--emb", str(w / "emb.txt"), "--method", "smote", "--k", "3",
                     "--out", str(w / "sm.jsonl")]) == 0
    assert (w / "sm.jsonl.features.jsonl").stat().st_size > 0
    cfg = w / "t.toml"
    cfg.write_text("[transformer]\nd_model = 16\nn_heads = 2\nd_ff = 32\nadapter_dim = 4\nepochs = 1\n")
    assert dispatch(["train", "--in", str(w / "aug.jsonl"), "--emb", str(w / "emb.txt"), "--config", str(cfg), "--out", str(w / "m.ckpt")]) == 0
    manifest = json.loads((w / "m.ckpt.manifest.json").read_text())
    assert manifest["command"] == "train" and len(manifest["config"]["loss_trace"]) == 1
    assert dispatch(["sage", "--in", data, "--domain", "hotel", "--k", "5", "--out", str(w / "s.json")]) == 0
    doc = json.loads((w / "s.json").read_text())
    assert doc["domain"] == "hotel" and len(doc["entries"]) == 5
