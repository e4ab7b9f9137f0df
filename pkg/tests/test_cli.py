"""End-to-end tests of the experiment CLI on small synthetic IDX datasets."""

import csv

import numpy as np
import pytest

from elmboost.cli import main
from elmboost.dataset import write_idx_images, write_idx_labels

from helpers import separable_images


def read_csv(path):
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    return rows[0], rows[1:]


@pytest.fixture
def data_dir(tmp_path):
    """Synthetic 3-class 4x4 dataset in MNIST's on-disk layout."""
    rng = np.random.default_rng(0)
    root = tmp_path / "data"
    (root / "mnist").mkdir(parents=True)
    train_images, train_labels = separable_images(rng, 150, 16, 3)
    test_images, test_labels = separable_images(rng, 60, 16, 3)
    write_idx_images(train_images, root / "mnist" / "train-images-idx3-ubyte.gz", grid=(4, 4))
    write_idx_labels(train_labels, root / "mnist" / "train-labels-idx1-ubyte.gz")
    write_idx_images(test_images, root / "mnist" / "t10k-images-idx3-ubyte", grid=(4, 4))
    write_idx_labels(test_labels, root / "mnist" / "t10k-labels-idx1-ubyte")
    return root


def train_args(data_dir, tmp_path, **overrides):
    args = {
        "--dataset-dir": str(data_dir),
        "--classes": "3",
        "--t-steps": "2",
        "--levels": "2",
        "--seed": "5",
        "--model": str(tmp_path / "model.elmb"),
        "--out": str(tmp_path / "train.csv"),
    }
    args.update(overrides)
    argv = ["train"]
    for flag, value in args.items():
        argv.extend([flag, value])
    return argv


class TestTrainCommand:
    def test_smoke_run_writes_model_and_report(self, data_dir, tmp_path):
        assert main(train_args(data_dir, tmp_path)) == 0
        assert (tmp_path / "model.elmb").is_file()
        header, rows = read_csv(tmp_path / "train.csv")
        assert header == ["level", "step", "residual_norm"]
        assert len(rows) == 4  # 2 levels x 2 steps
        norms = [float(r[2]) for r in rows]
        assert norms == sorted(norms, reverse=True)

    def test_train_subset(self, data_dir, tmp_path):
        assert main(train_args(data_dir, tmp_path, **{"--train-subset": "30"})) == 0

    def test_missing_labels_exits_2_naming_path(self, data_dir, tmp_path, capsys):
        (data_dir / "mnist" / "train-labels-idx1-ubyte.gz").unlink()
        assert main(train_args(data_dir, tmp_path)) == 2
        assert "train-labels-idx1-ubyte" in capsys.readouterr().err

    def test_same_seed_byte_identical_outputs(self, data_dir, tmp_path):
        argv_a = train_args(data_dir, tmp_path)
        assert main(argv_a) == 0
        model_a = (tmp_path / "model.elmb").read_bytes()
        csv_a = (tmp_path / "train.csv").read_bytes()
        argv_b = train_args(
            data_dir, tmp_path,
            **{"--model": str(tmp_path / "m2.elmb"), "--out": str(tmp_path / "t2.csv")},
        )
        assert main(argv_b) == 0
        assert (tmp_path / "m2.elmb").read_bytes() == model_a
        assert (tmp_path / "t2.csv").read_bytes() == csv_a

    def test_bad_subset_exits_1(self, data_dir, tmp_path):
        assert main(train_args(data_dir, tmp_path, **{"--train-subset": "0"})) == 1

    def test_singular_unregularized_solve_exits_3(self, data_dir, tmp_path, capsys):
        # 5 samples cannot support an unregularized 16-wide Gram matrix
        code = main(train_args(
            data_dir, tmp_path,
            **{"--lambda": "0", "--train-subset": "5", "--hidden": "16"},
        ))
        assert code == 3
        assert "not positive definite" in capsys.readouterr().err


class TestCurveCommand:
    def test_per_level_accuracy(self, data_dir, tmp_path):
        assert main(train_args(data_dir, tmp_path)) == 0
        out = tmp_path / "curve.csv"
        code = main([
            "curve", "--dataset-dir", str(data_dir), "--classes", "3",
            "--model", str(tmp_path / "model.elmb"), "--out", str(out),
        ])
        assert code == 0
        header, rows = read_csv(out)
        assert header == ["level", "accuracy"]
        assert [r[0] for r in rows] == ["0", "1"]
        for row in rows:
            assert 0.0 <= float(row[1]) <= 1.0

    def test_reruns_byte_identical(self, data_dir, tmp_path):
        assert main(train_args(data_dir, tmp_path)) == 0
        argv = [
            "curve", "--dataset-dir", str(data_dir), "--classes", "3",
            "--model", str(tmp_path / "model.elmb"), "--out", str(tmp_path / "c.csv"),
        ]
        assert main(argv) == 0
        first = (tmp_path / "c.csv").read_bytes()
        assert main(argv) == 0
        assert (tmp_path / "c.csv").read_bytes() == first

    def test_width_mismatch_exits_1(self, data_dir, tmp_path):
        assert main(train_args(data_dir, tmp_path)) == 0
        rng = np.random.default_rng(1)
        other = tmp_path / "other"
        (other / "mnist").mkdir(parents=True)
        images, labels = separable_images(rng, 20, 25, 3)
        write_idx_images(images, other / "mnist" / "t10k-images-idx3-ubyte", grid=(5, 5))
        write_idx_labels(labels, other / "mnist" / "t10k-labels-idx1-ubyte")
        code = main([
            "curve", "--dataset-dir", str(other), "--classes", "3",
            "--model", str(tmp_path / "model.elmb"), "--out", str(tmp_path / "c.csv"),
        ])
        assert code == 1

    def test_two_models_one_column_per_activation(self, data_dir, tmp_path):
        assert main(train_args(data_dir, tmp_path)) == 0
        sign_model = tmp_path / "sign.elmb"
        assert main(train_args(
            data_dir, tmp_path,
            **{"--activation": "sign", "--model": str(sign_model)},
        )) == 0
        out = tmp_path / "both.csv"
        code = main([
            "curve", "--dataset-dir", str(data_dir), "--classes", "3",
            "--model", str(tmp_path / "model.elmb"), str(sign_model),
            "--out", str(out),
        ])
        assert code == 0
        header, rows = read_csv(out)
        assert header == ["level", "accuracy_tanh", "accuracy_sign"]
        assert len(rows) == 2 and len(rows[0]) == 3

    def test_two_models_same_activation_exits_1(self, data_dir, tmp_path):
        assert main(train_args(data_dir, tmp_path)) == 0
        second = tmp_path / "second.elmb"
        assert main(train_args(data_dir, tmp_path, **{"--model": str(second)})) == 0
        code = main([
            "curve", "--dataset-dir", str(data_dir), "--classes", "3",
            "--model", str(tmp_path / "model.elmb"), str(second),
            "--out", str(tmp_path / "c.csv"),
        ])
        assert code == 1

    def test_corrupt_model_exits_2(self, data_dir, tmp_path):
        assert main(train_args(data_dir, tmp_path)) == 0
        model_path = tmp_path / "model.elmb"
        blob = bytearray(model_path.read_bytes())
        blob[70] ^= 0xFF
        model_path.write_bytes(bytes(blob))
        code = main([
            "curve", "--dataset-dir", str(data_dir), "--classes", "3",
            "--model", str(model_path), "--out", str(tmp_path / "c.csv"),
        ])
        assert code == 2


class TestNoiseCommand:
    def test_fraction_zero_matches_curve_tail(self, data_dir, tmp_path):
        assert main(train_args(data_dir, tmp_path)) == 0
        curve_out = tmp_path / "curve.csv"
        noise_out = tmp_path / "noise.csv"
        assert main([
            "curve", "--dataset-dir", str(data_dir), "--classes", "3",
            "--model", str(tmp_path / "model.elmb"), "--out", str(curve_out),
        ]) == 0
        assert main([
            "noise", "--dataset-dir", str(data_dir), "--classes", "3",
            "--model", str(tmp_path / "model.elmb"), "--noise-fraction", "0",
            "--out", str(noise_out),
        ]) == 0
        _, curve_rows = read_csv(curve_out)
        header, noise_rows = read_csv(noise_out)
        assert header == ["noise_fraction", "accuracy"]
        assert noise_rows[0][1] == curve_rows[-1][1]

    def test_fraction_sweep_and_rerun_determinism(self, data_dir, tmp_path):
        assert main(train_args(data_dir, tmp_path)) == 0
        out = tmp_path / "noise.csv"
        argv = [
            "noise", "--dataset-dir", str(data_dir), "--classes", "3",
            "--model", str(tmp_path / "model.elmb"),
            "--noise-fraction", "0", "0.2", "0.5", "--seed", "3",
            "--out", str(out),
        ]
        assert main(argv) == 0
        _, rows = read_csv(out)
        assert [r[0] for r in rows] == ["0.0", "0.2", "0.5"]
        first = out.read_bytes()
        assert main(argv) == 0
        assert out.read_bytes() == first

    def test_bad_fraction_exits_1(self, data_dir, tmp_path):
        assert main(train_args(data_dir, tmp_path)) == 0
        code = main([
            "noise", "--dataset-dir", str(data_dir), "--classes", "3",
            "--model", str(tmp_path / "model.elmb"), "--noise-fraction", "1.5",
            "--out", str(tmp_path / "n.csv"),
        ])
        assert code == 1


class TestHashSimCommand:
    def test_default_sweep(self, tmp_path):
        out = tmp_path / "hash.csv"
        assert main(["hash-sim", "--out", str(out), "--seed", "1"]) == 0
        header, rows = read_csv(out)
        assert header == ["theta", "analytic", "empirical", "deviation"]
        assert len(rows) == 6
        assert rows[0][1] == "1.0" and rows[0][2] == "1.0"
        assert rows[-1][1] == "0.0" and rows[-1][2] == "0.0"
        mid = rows[3]  # pi/2
        assert abs(float(mid[2]) - 0.5) <= 0.015

    def test_reruns_byte_identical(self, tmp_path):
        out = tmp_path / "hash.csv"
        argv = ["hash-sim", "--out", str(out), "--seed", "9", "--trials", "2"]
        assert main(argv) == 0
        first = out.read_bytes()
        assert main(argv) == 0
        assert out.read_bytes() == first

    def test_flag_validation(self, tmp_path):
        assert main(["hash-sim", "--dim", "1", "--out", str(tmp_path / "h.csv")]) == 1
        assert main(["hash-sim", "--hashes", "50", "--out", str(tmp_path / "h.csv")]) == 1
        assert main(["hash-sim", "--trials", "0", "--out", str(tmp_path / "h.csv")]) == 1


class TestUsage:
    def test_unknown_flag_exits_1(self, tmp_path):
        assert main(["hash-sim", "--bogus"]) == 1

    def test_missing_subcommand_exits_1(self):
        assert main([]) == 1

    def test_wrong_class_count_exits_1(self, data_dir, tmp_path):
        assert main(train_args(data_dir, tmp_path, **{"--classes": "2"})) == 1

    def test_mismatched_split_files_exit_2(self, data_dir, tmp_path):
        write_idx_labels(np.zeros(7, dtype=np.int64), data_dir / "mnist" / "train-labels-idx1-ubyte.gz")
        assert main(train_args(data_dir, tmp_path)) == 2
