import numpy as np
import pytest

import nmsvr


def test_version():
    assert nmsvr.__version__ == "0.1.0"


def test_measure_thresholds():
    assert nmsvr.measure("pd", "trace", 0.2) == 0.0
    assert nmsvr.measure("pd", "entanglement", 0.5) > 1e-3
    assert nmsvr.measure("ad", "entanglement", 3.0) == 0.0
    nd = nmsvr.measure("ad", "trace", 0.5)
    ne = nmsvr.measure("ad", "entanglement", 0.5)
    assert abs(nd - ne) < 1e-8


def test_driven_drive_suppresses():
    a = nmsvr.measure("driven", "entanglement", 0.5, omega=0.0)
    b = nmsvr.measure("driven", "entanglement", 0.5, omega=0.2)
    assert b < a


def test_features_of_pure_ad():
    # coherence c(t) on x, population c^2 - 1 on z
    f = nmsvr.bloch_features("ad", 1.0, [3.0])
    assert f.shape == (3,)
    assert abs(f[1]) < 1e-15
    assert abs(f[2] - (f[0] ** 2 - 1.0)) < 1e-12


def test_errors_map_to_python():
    with pytest.raises(nmsvr.ConfigError):
        nmsvr.measure("xy", "trace", 0.5)
    with pytest.raises(ValueError):
        nmsvr.measure("ad", "trace", -1.0)
    with pytest.raises(nmsvr.ConfigError):
        nmsvr.measure("driven", "trace", 0.5)
    with pytest.raises(OSError):
        nmsvr.load_csv("/nonexistent/table.csv")


def test_generate_fit_predict(tmp_path):
    table = nmsvr.generate("ad", "entanglement", [3.0], grid="0.1:0.01:290", threads=2)
    assert len(table) == 290
    assert table.features.shape == (290, 3)
    assert table.header[0] == "target"
    res = nmsvr.run_pipeline(table, seed=42)
    assert len(res["train"]) == 203 and len(res["test"]) == 87
    assert res["kkt_ok"]
    assert res["test_eval"]["mae"] < 1e-2

    model = res["model"]
    x = nmsvr.bloch_features("ad", 1.0, [3.0])
    want = nmsvr.measure("ad", "entanglement", 1.0)
    assert abs(model.predict(x) - want) < 1e-2
    batch = model.predict(table.features)
    assert np.allclose(batch, model.predict_table(table))

    path = tmp_path / "m.svr"
    model.save(str(path))
    back = nmsvr.load_model(str(path))
    assert np.array_equal(back.predict(table.features), batch)

    csv = tmp_path / "t.csv"
    table.save(str(csv))
    again = nmsvr.load_csv(str(csv))
    assert np.array_equal(again.targets, table.targets)

    with pytest.raises(nmsvr.ConfigError):
        model.predict(np.zeros(2))


def test_fit_and_split():
    table = nmsvr.generate("pd", "trace", [1.0], grid=(0.1, 0.004, 100))
    train, test = nmsvr.split(table, 0.7, 1)
    assert len(train) == 70 and len(test) == 30
    model = nmsvr.fit(train, C=1.0, epsilon=1e-3)
    assert model.converged
    assert model.kkt(train)["ok"]
    ev = nmsvr.evaluate(model, test)
    assert ev["rows"] == 30 and ev["mae"] < 2e-2
    with pytest.raises(nmsvr.ConfigError):
        nmsvr.fit(train, C=-1.0)


def test_driven_table():
    table = nmsvr.generate_driven([3.0], grid="0.5:0.5:3", omegas=[0.0, 0.1], threads=2)
    assert len(table) == 6
    assert table.channel == "driven"
    assert len(table.select_omega(0.1)) == 3
