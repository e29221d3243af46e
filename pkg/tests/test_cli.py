import csv
import json

import numpy as np
import pytest

from emissions_ml.bundle import load_bundle
from emissions_ml.cli import main
from emissions_ml.dataset import drop_null_rows, load_csv
from emissions_ml.nn import MlpArchitecture, count_parameters

SMALL = ["--rf-n-estimators", "3", "--rf-max-depth", "4", "--gbt-n-estimators", "10",
         "--hidden-widths", "8,8", "--epochs", "2"]


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def read_predictions(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["prediction"]
    return np.array([float(r[0]) for r in rows[1:]])


@pytest.fixture(scope="module")
def rf_bundle(vehicle_files, tmp_path_factory):
    data, schema = vehicle_files
    out = tmp_path_factory.mktemp("rf") / "rf.json"
    code = main(["fit", "--data", str(data), "--schema", str(schema), "--method", "random_forest",
                 "--n-estimators", "250", "--max-depth", "9", "--criterion", "absolute",
                 "--limit", "200", "--out", str(out)])
    assert code == 0
    return out


def test_fit_full_size_forest(rf_bundle):
    b = load_bundle(rf_bundle)
    c = b.model.config
    assert (c.n_estimators, c.tree.max_depth, c.tree.criterion) == (250, 9, "absolute")
    metrics = json.loads(rf_bundle.with_name(rf_bundle.name + ".metrics.json").read_text())
    assert metrics["n_train"] + metrics["n_test"] == 200
    assert metrics["test_mae"] >= 0


def test_predict_round_trip_is_bit_exact(rf_bundle, vehicle_files, tmp_path, capsys):
    data, _ = vehicle_files
    b = load_bundle(rf_bundle)
    table = drop_null_rows(load_csv(data, b.schema))
    clean = tmp_path / "clean.csv"
    names = [c.name for c in b.schema]
    with open(clean, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for i in range(table.n_rows):
            w.writerow([repr(float(table.columns[n][i])) if c.is_real else table.columns[n][i]
                        for n, c in zip(names, b.schema)])
    out = tmp_path / "pred.csv"
    code, _, err = run(capsys, "predict", "--bundle", rf_bundle, "--input", clean, "--out", out)
    assert code == 0 and "MAE" in err
    expected = b.predict_table(table)
    np.testing.assert_array_equal(read_predictions(out), expected)


def test_predict_unseen_category_and_no_target(rf_bundle, tmp_path, capsys):
    p = tmp_path / "in.csv"
    p.write_text("mass_kg,engine_cc,power_kw,fuel_type,manufacturer,euro_standard\n"
                 "1500,1600,90,hydrogen,tesla,euro6\n1200,1000,60,petrol,fiat,euro5\n")
    out = tmp_path / "o.csv"
    code, _, err = run(capsys, "predict", "--bundle", rf_bundle, "--input", p, "--out", out)
    assert code == 0 and "MAE" not in err
    pred = read_predictions(out)
    assert len(pred) == 2 and np.all(np.isfinite(pred))


def test_predict_empty_input(rf_bundle, tmp_path, capsys):
    p = tmp_path / "empty.csv"
    p.write_text("mass_kg,engine_cc,power_kw,fuel_type,manufacturer,euro_standard,co2_g_km\n")
    out = tmp_path / "o.csv"
    code, _, _ = run(capsys, "predict", "--bundle", rf_bundle, "--input", p, "--out", out)
    assert code == 0 and out.read_text() == "prediction\n"


def test_predict_schema_mismatch_exit_2(rf_bundle, tmp_path, capsys):
    p = tmp_path / "bad.csv"
    p.write_text("mass_kg,fuel_type\n1,petrol\n")
    code, _, err = run(capsys, "predict", "--bundle", rf_bundle, "--input", p)
    assert code == 2 and "engine_cc" in err
    p.write_text("mass_kg,engine_cc,power_kw,fuel_type,manufacturer,euro_standard\n1,,3,petrol,fiat,euro5\n")
    code, _, err = run(capsys, "predict", "--bundle", rf_bundle, "--input", p)
    assert code == 2 and "engine_cc" in err
    p.write_text("mass_kg,engine_cc,power_kw,fuel_type,manufacturer,euro_standard\n1,2,3,petrol,fiat,euro9\n")
    code, _, _ = run(capsys, "predict", "--bundle", rf_bundle, "--input", p)
    assert code == 2


def test_evaluate_and_inspect(rf_bundle, vehicle_files, capsys):
    data, _ = vehicle_files
    code, out, _ = run(capsys, "evaluate", "--bundle", rf_bundle, "--data", data, "--format", "json")
    assert code == 0 and json.loads(out)["mae"] > 0
    code, out, _ = run(capsys, "inspect", "--bundle", rf_bundle)
    assert code == 0 and "random_forest" in out and "trees: 250" in out
    code, out, _ = run(capsys, "inspect", "--bundle", rf_bundle, "--format", "json")
    assert json.loads(out)["model_type"] == "random_forest"


def test_fit_mlp_logs_parameter_count(vehicle_files, tmp_path, capsys):
    data, schema = vehicle_files
    out = tmp_path / "mlp.json"
    code, _, err = run(capsys, "fit", "--data", data, "--schema", schema, "--method", "mlp",
                       "--epochs", "1", "--limit", "150", "--out", out)
    assert code == 0
    b = load_bundle(out)
    expected = count_parameters(MlpArchitecture.default(b.pipeline.n_features_out))
    assert f"mlp trainable parameters: {expected}" in err
    assert b.model.architecture.layer_widths[1:] == (128, 512, 512, 512, 256, 256, 1)
    assert out.with_name("mlp.json.history.csv").read_text().startswith("epoch,train_mae,val_mae\n")


def test_fit_voting_bundle(vehicle_files, tmp_path, capsys):
    data, schema = vehicle_files
    out = tmp_path / "vote.json"
    code, _, _ = run(capsys, "fit", "--data", data, "--schema", schema, "--method", "voting",
                     "--members", "mlp,gbt,random_forest", "--limit", "150", "--out", out, *SMALL)
    assert code == 0
    b = load_bundle(out)
    assert [m.model_type for m in b.model.members] == ["mlp", "gbt", "random_forest"]


def test_missing_schema_exit_1(vehicle_files, tmp_path, capsys):
    data, _ = vehicle_files
    missing = tmp_path / "nowhere.json"
    code, _, err = run(capsys, "fit", "--data", data, "--schema", missing, "--out", tmp_path / "m.json")
    assert code == 1 and str(missing) in err
    assert len(err.strip().splitlines()) == 1


def test_malformed_data_exit_2(vehicle_files, tmp_path, capsys):
    _, schema = vehicle_files
    bad = tmp_path / "bad.csv"
    bad.write_text("mass_kg,engine_cc\n1,2\n")
    code, _, err = run(capsys, "fit", "--data", bad, "--schema", schema, "--out", tmp_path / "m.json")
    assert code == 2 and "power_kw" in err


def test_training_failure_exit_3(vehicle_files, tmp_path, capsys):
    _, schema = vehicle_files
    data = tmp_path / "huge.csv"
    lines = ["mass_kg,engine_cc,power_kw,fuel_type,manufacturer,euro_standard,co2_g_km"]
    lines += [f"{1000 + i},{1500 + i},{80 + i},petrol,fiat,euro5,1.7e308" for i in range(20)]
    data.write_text("\n".join(lines) + "\n")
    code, _, err = run(capsys, "fit", "--data", data, "--schema", schema, "--method", "gbt",
                       "--n-estimators", "2", "--out", tmp_path / "m.json")
    assert code == 3 and err.startswith("error:")


def test_compare_method_filter(vehicle_files, capsys):
    data, schema = vehicle_files
    code, out, _ = run(capsys, "compare", "--data", data, "--schema", schema, "--limit", "200",
                       "--methods", "random_forest,mlp", "--format", "csv", *SMALL)
    assert code == 0
    rows = out.strip().splitlines()
    assert len(rows) == 3 and rows[1].startswith("Random Forest,") and rows[2].startswith("Neural Network,")


def test_compare_seed_env(vehicle_files, capsys, monkeypatch):
    data, schema = vehicle_files
    args = ["compare", "--data", data, "--schema", schema, "--limit", "150",
            "--methods", "gbt", "--format", "csv", *SMALL]
    monkeypatch.setenv("EMISSIONS_ML_SEED", "7")
    _, env7, _ = run(capsys, *args)
    monkeypatch.delenv("EMISSIONS_ML_SEED")
    _, flag7, _ = run(capsys, *args, "--seed", "7")
    _, flag8, _ = run(capsys, *args, "--seed", "8")
    assert env7 == flag7 != flag8


def test_compare_default_lists_six_rows(vehicle_files, capsys, tmp_path):
    data, schema = vehicle_files
    code, out, _ = run(capsys, "compare", "--data", data, "--schema", schema, "--limit", "150",
                       "--out-dir", tmp_path, *SMALL)
    assert code == 0
    assert len((tmp_path / "comparison.csv").read_text().strip().splitlines()) == 7
    assert "Neural Network,XGBoost,Random Forest Ensemble" in out
