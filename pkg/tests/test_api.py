import json
from pathlib import Path
from typing import Any, Callable

import numpy as np
import pytest

from urllcsim.api.main import eval_workload, run_analyze, run_es, run_eval, run_gen, run_train
from urllcsim.exceptions import ConfigError
from urllcsim.results import read_csv
from urllcsim.topology import load_instance

SYMMETRIC_QOS = {"fading": "rayleigh", "n_tx_antennas": 1, "include_noise": False}
SMALL_BIPOLAR = {"kind": "bipolar", "area_km2": 1.0, "guard_ring": False}
SMALL_HEX = {"kind": "hexagonal", "regions": 1}
SMALL_TRAIN = {
    "layers": 3,
    "taps": 3,
    "features": 2,
    "init_std": 0.5,
    "batch": 2,
    "iterations": 2,
    "probe_frames": 20,
    "checkpoint_every": 1,
}


def test_run_es(write_config: Callable[..., Path], tmp_path: Path) -> None:
    output = run_es(write_config({"qos": SYMMETRIC_QOS}))
    assert output.result is not None
    assert (output.result.n0, output.result.m0) == (6, 3)
    assert [f.name for f in output.files] == ["es-surface.csv", "es-optimum.json"]

    meta, rows = read_csv(tmp_path / "results" / "es-surface.csv")
    assert len(rows) == 21
    assert meta["seed"] == "0"
    optimum = json.loads((tmp_path / "results" / "es-optimum.json").read_text(encoding="utf-8"))
    assert optimum["meta"]["config_hash"] == meta["config_hash"]
    assert (optimum["optimum"]["n0"], optimum["optimum"]["m0"]) == (6, 3)


def test_run_es_accepts_strings(write_config: Callable[..., Path]) -> None:
    rows: list[int] = []
    output = run_es(str(write_config({"qos": SYMMETRIC_QOS})), on_row=rows.append)
    assert output.result is not None and rows[-1] == 6


def test_run_gen(write_config: Callable[..., Path], tmp_path: Path) -> None:
    first = run_gen(write_config({"topology": {**SMALL_HEX, "count": 3}}))
    assert [f.name for f in first.files] == ["instance-0.json", "instance-1.json", "instance-2.json"]
    for path in first.files:
        assert load_instance(path).k_links == 25
    meta = json.loads(first.files[1].read_text(encoding="utf-8"))["meta"]
    assert meta["index"] == 1 and meta["kind"] == "hexagonal"

    again = run_gen(write_config({"output": {"dir": str(tmp_path / "again")}, "topology": {**SMALL_HEX, "count": 3}}))
    for a, b in zip(first.files, again.files):
        assert a.read_bytes() == b.read_bytes()


def test_run_gen_rejects_file_topology(write_config: Callable[..., Path], tmp_path: Path) -> None:
    source = tmp_path / "instance.json"
    source.write_text("{}", encoding="utf-8")
    with pytest.raises(ConfigError):
        run_gen(write_config({"topology": {"kind": "file", "instances": str(source)}}))


def _eval_config(**extra: Any) -> dict[str, Any]:
    return {"workers": 1, "mc": {"realizations": 2, "frames": 50}, **extra}


def test_run_eval_generated(write_config: Callable[..., Path]) -> None:
    policy = {"source": "explicit", "n_slots": [6], "m_reps": [3], "compare": ["no-rep"]}
    path = write_config(_eval_config(topology=SMALL_BIPOLAR, policy=policy))
    units: list[None] = []
    output = run_eval(path, on_unit=lambda: units.append(None))

    assert len(units) == eval_workload(path) == 2
    assert [s.source for s in output.summaries] == ["explicit", "no-rep"]
    assert output.summaries[0].gain is None
    for summary in output.summaries:
        assert 0.0 <= summary.p_vio <= 1.0
        assert (summary.units, summary.trials) == (2, 100)
    assert [f.name for f in output.files] == [
        "eval-realizations.csv",
        "eval-summary.csv",
        "eval-cdf.csv",
        "eval-summary.json",
    ]

    meta, rows = read_csv(output.files[1])
    assert float(meta["p_vio"]) == output.summaries[0].p_vio
    assert [row["source"] for row in rows] == ["explicit", "no-rep"]
    _, cdf = read_csv(output.files[2])
    assert len(cdf) == 2 * 101
    assert float(cdf[-1]["cdf"]) == 1.0


def test_run_eval_is_reproducible(write_config: Callable[..., Path], tmp_path: Path) -> None:
    policy = {"source": "no-rep", "compare": ["k-rep"]}
    first = run_eval(write_config(_eval_config(topology=SMALL_BIPOLAR, policy=policy)))
    second = run_eval(
        write_config(_eval_config(topology=SMALL_BIPOLAR, policy=policy, output={"dir": str(tmp_path / "again")}))
    )
    for source, values in first.realization_p_vio.items():
        np.testing.assert_array_equal(values, second.realization_p_vio[source])
    assert first.files[1].read_bytes() == second.files[1].read_bytes()


def test_run_eval_instance_files(write_config: Callable[..., Path], tmp_path: Path) -> None:
    instances = tmp_path / "instances"
    run_gen(write_config({"output": {"dir": str(instances)}, "topology": {**SMALL_HEX, "count": 2}}))

    topology = {"kind": "file", "instances": str(instances)}
    path = write_config(_eval_config(topology=topology, policy={"source": "k-rep", "compare": ["no-rep"]}))
    units: list[None] = []
    output = run_eval(path, on_unit=lambda: units.append(None))

    assert len(units) == eval_workload(path) == 8
    assert [s.units for s in output.summaries] == [4, 4]
    _, rows = read_csv(output.files[0])
    assert {row["instance"] for row in rows} == {"instance-0.json", "instance-1.json"}
    assert len(rows) == 8

    names = [f.name for f in output.files[4:]]
    expected = [f"links-{s}-instance-{i}" for i in range(2) for s in ("k-rep", "no-rep")]
    assert names == [f"{stem}.{ext}" for stem in expected for ext in ("csv", "json")]
    meta, links = read_csv(output.files[4])
    assert [int(row["link"]) for row in links] == list(range(25))
    assert float(meta["p_vio"]) == pytest.approx(np.mean([float(row["p_k"]) for row in links]))
    assert int(meta["trials"]) == 2 * 50
    estimate = json.loads(output.files[5].read_text(encoding="utf-8"))["estimate"]
    assert estimate["p_k"] == [float(row["p_k"]) for row in links]


def test_run_eval_missing_instances(write_config: Callable[..., Path], tmp_path: Path) -> None:
    topology = {"kind": "file", "instances": str(tmp_path / "nowhere")}
    with pytest.raises(FileNotFoundError):
        run_eval(write_config(_eval_config(topology=topology, policy={"source": "no-rep"})))


def test_run_train_resume_and_evaluate(write_config: Callable[..., Path], tmp_path: Path) -> None:
    base = {"workers": 1, "topology": SMALL_HEX, "mc": {"frames": 20}}
    iterations: list[int] = []
    output = run_train(
        write_config({**base, "train": SMALL_TRAIN}),
        on_iteration=lambda state, loss: iterations.append(state.iteration),
    )
    assert iterations == [1, 2]
    assert output.result is not None and len(output.result.losses) == 2
    assert output.checkpoint == (tmp_path / "results" / "checkpoint.json").resolve()
    meta, rows = read_csv(tmp_path / "results" / "train-loss.csv")
    assert [row["iteration"] for row in rows] == ["0", "1"]
    assert "config_hash" in meta

    resumed = run_train(
        write_config({**base, "train": {**SMALL_TRAIN, "iterations": 3, "resume": str(output.checkpoint)}}, "r.yaml")
    )
    assert resumed.result is not None
    assert resumed.result.state.iteration == 3
    assert len(resumed.result.losses) == 1
    _, rows = read_csv(tmp_path / "results" / "train-loss.csv")
    assert [row["iteration"] for row in rows] == ["2"]

    policy = {"source": "regnn-checkpoint", "checkpoint": str(output.checkpoint), "compare": ["no-rep"]}
    mc = {"realizations": 2, "frames": 20}
    evaluated = run_eval(write_config({**base, "train": SMALL_TRAIN, "mc": mc, "policy": policy}, "e.yaml"))
    assert [s.source for s in evaluated.summaries] == ["regnn-checkpoint", "no-rep"]


def test_run_train_rejects_other_seed(write_config: Callable[..., Path], tmp_path: Path) -> None:
    base = {"workers": 1, "topology": SMALL_HEX}
    output = run_train(write_config({**base, "train": {**SMALL_TRAIN, "iterations": 1}}))
    path = write_config({**base, "seed": 5, "train": {**SMALL_TRAIN, "resume": str(output.checkpoint)}}, "r.yaml")
    with pytest.raises(ConfigError, match="seed"):
        run_train(path)


def test_run_analyze(write_config: Callable[..., Path]) -> None:
    done: list[None] = []
    path = write_config({"qos": SYMMETRIC_QOS, "analyze": {"densities": [14, 56]}})
    output = run_analyze(path, on_density=lambda: done.append(None))
    assert len(done) == 2
    assert [(d, r.n0, r.m0) for d, r in output.results] == [(14.0, 6, 3), (56.0, 6, 4)]

    _, summary = read_csv(output.files[1])
    assert [row["es_n0"] for row in summary] == ["6", "6"]
    for row in summary:
        assert float(row["es_objective"]) <= float(row["krep_objective"])
        assert float(row["es_objective"]) <= float(row["norep_objective"])
    _, surface = read_csv(output.files[0])
    assert len(surface) == 2 * 21


def test_config_hash_in_every_file(write_config: Callable[..., Path]) -> None:
    path = write_config({"qos": SYMMETRIC_QOS, "analyze": {"densities": [28]}})
    digest = read_csv(run_analyze(path).files[0])[0]["config_hash"]
    assert read_csv(run_es(path).files[0])[0]["config_hash"] == digest
