import json

import pytest

import bagtag
from conftest import conll


def test_corpus_parse(corpora):
    train, test = corpora
    assert len(train) == 30
    assert train.labels[: len(test.labels)] == test.labels[: len(train.labels)]
    assert train.ids[0] != train.ids[1]
    assert train.num_tokens > len(train)


def test_train_tag_evaluate_and_round_trip(tmp_path, config, corpora):
    train, test = corpora
    config.set("ensemble.k", "3")
    tagger = bagtag.Tagger.train(train, config)
    assert tagger.members == 3
    predicted = tagger.tag(test)
    assert [len(p) for p in predicted] == [len(p) for p in tagger.tag(test)]
    report = tagger.evaluate(test)
    assert 0.9 <= report["micro"]["f1"] <= 1.0
    assert set(report["per_type"]) == {"G", "T", "L"}

    path = str(tmp_path / "model.ens")
    tagger.save(path)
    assert bagtag.Tagger.load(path).tag(test) == predicted


def test_pipeline(config, corpora):
    train, test = corpora
    config.set("features.templates", "word,suffix,ne-window")
    config.set("pipeline.enabled", "true")
    tagger = bagtag.Tagger.train(train, config)
    assert tagger.pipeline
    assert len(tagger.tag(test)) == len(test)


def test_errors_are_bagtag_errors(tmp_path, config):
    with pytest.raises(bagtag.BagtagError):
        config.set("trainer.nope", "1")
    with pytest.raises(bagtag.BagtagError, match="line 2"):
        bagtag.Corpus.parse("a\tO\nb\tO\textra\n", config)
    with pytest.raises(bagtag.BagtagError):
        bagtag.Tagger.load(str(tmp_path / "missing"))


def test_al_simulate_is_deterministic(config, corpora):
    train, test = corpora
    for key, value in {"active.grid": "true", "active.initial": "3", "active.batch": "2",
                       "active.rounds": "2", "ensemble.k": "2"}.items():
        config.set(key, value)
    first = bagtag.al_simulate(train, test, config=config)
    second = bagtag.al_simulate(train, test, config=config)
    assert len(first) == 8
    assert {r["flags"] for r in first} >= {"bp-rw-utl", "vt-nrw-rnd"}
    assert first == second
    assert first[0]["csv"].count("\n") == 4


def test_session_protocol(tmp_path, config, corpora):
    pool, test = corpora
    for key, value in {"active.initial": "2", "active.batch": "1", "active.rounds": "2",
                       "ensemble.k": "2"}.items():
        config.set(key, value)
    gold = {}
    for block, sid in zip(conll(30, 1).strip().split("\n\n"), pool.ids):
        gold[sid] = [line.split("\t")[1] for line in block.split("\n")]

    state = str(tmp_path / "state.json")
    session = bagtag.Session(pool, test, config=config, state=state,
                             audit=str(tmp_path / "audit.jsonl"))
    assert session.status()["round"] == 0
    query = session.next()
    assert query["sentence_id"] == pool.ids[0]
    assert session.submit("nope", ["O"])["outcome"] == "conflict"
    assert session.submit(query["sentence_id"], gold[query["sentence_id"]])["outcome"] == "accepted"

    code, body = session.handle("GET", "/session/next")
    assert code == 200
    sid = json.loads(body)["sentence_id"]
    code, body = session.handle("POST", "/session/label",
                                json.dumps({"sentence_id": sid, "labels": gold[sid]}))
    assert code == 200
    assert json.loads(body)["round"] == 1
    assert session.handle("GET", "/nowhere")[0] == 404

    status = session.status()
    assert status["round"] == 1
    assert status["last_f1"] is not None
    resumed = bagtag.Session(pool, test, config=config, state=state)
    assert resumed.state_json() == session.state_json()
    assert resumed.next() == session.next()
