import numpy as np
import pytest

import rasmkit.pipeline as pipeline
from rasmkit.cli import main
from rasmkit.dataset import SplitSpec, scan_directory, split
from rasmkit.image import read_pgm_file, write_pgm_file
from rasmkit.mlp import MlpConfig, load_model
from rasmkit.pipeline import EvalReport, _feature_matrix, train_recognizer
from rasmkit.preprocess import PreprocessConfig
from rasmkit.synth import ARCHETYPE_NAMES, DOTTED_ARCHETYPES, gen_synthetic, render_sample


@pytest.fixture(scope="module")
def small_corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    gen_synthetic(root, classes=4, per_class=6, seed=3)
    return root


@pytest.fixture(scope="module")
def trained_model(small_corpus, tmp_path_factory):
    model_path = tmp_path_factory.mktemp("model") / "model.json"
    rc = main([
        "train", str(small_corpus), str(model_path),
        "--hidden", "8", "--max-epochs", "150", "--seed", "1",
    ])
    assert rc == 0
    return model_path


class TestGenSynth:
    def test_counts(self, tmp_path):
        rc = main(["gen-synth", str(tmp_path / "d"), "--classes", "3", "--per-class", "4", "--seed", "0"])
        assert rc == 0
        files = sorted((tmp_path / "d").rglob("*.pgm"))
        assert len(files) == 12
        assert len({f.parent.name for f in files}) == 3

    def test_deterministic_bytes(self, tmp_path):
        for sub in ("a", "b"):
            gen_synthetic(tmp_path / sub, classes=2, per_class=3, seed=5)
        for fa in sorted((tmp_path / "a").rglob("*.pgm")):
            fb = tmp_path / "b" / fa.relative_to(tmp_path / "a")
            assert fa.read_bytes() == fb.read_bytes()

    def test_dotted_archetypes_available(self):
        assert len(ARCHETYPE_NAMES) == 28
        assert len(DOTTED_ARCHETYPES) >= 8

    def test_dots_survive_the_pipeline(self):
        # dotted archetypes must actually produce secondary components
        from rasmkit.components import label_components
        from rasmkit.preprocess import preprocess

        for name in DOTTED_ARCHETYPES[:4]:
            for i in range(3):
                img = render_sample(name, np.random.default_rng([2, 1, i]))
                _, norm = preprocess(img, PreprocessConfig())
                assert label_components(norm).count >= 2


class TestPreprocessCmd:
    def test_output_is_normalized(self, small_corpus, tmp_path):
        source = next((small_corpus / ARCHETYPE_NAMES[0]).glob("*.pgm"))
        out = tmp_path / "norm.pgm"
        assert main(["preprocess", str(source), str(out)]) == 0
        img = read_pgm_file(out)
        assert img.shape == (60, 60)
        assert set(np.unique(img)) <= {0, 255}

    def test_rerun_byte_identical(self, small_corpus, tmp_path):
        source = next((small_corpus / ARCHETYPE_NAMES[1]).glob("*.pgm"))
        out1, out2 = tmp_path / "a.pgm", tmp_path / "b.pgm"
        main(["preprocess", str(source), str(out1)])
        main(["preprocess", str(source), str(out2)])
        assert out1.read_bytes() == out2.read_bytes()

    def test_blank_image_fails_cleanly(self, tmp_path, capsys):
        blank = tmp_path / "blank.pgm"
        write_pgm_file(blank, np.full((30, 30), 200, np.uint8))
        rc = main(["preprocess", str(blank), str(tmp_path / "out.pgm")])
        assert rc != 0
        assert "blank image" in capsys.readouterr().err

    def test_dump_stages(self, small_corpus, tmp_path):
        source = next((small_corpus / ARCHETYPE_NAMES[0]).glob("*.pgm"))
        stage_dir = tmp_path / "stages"
        rc = main(["preprocess", str(source), str(tmp_path / "o.pgm"),
                   "--dump-stages", str(stage_dir)])
        assert rc == 0
        names = sorted(p.name for p in stage_dir.glob("*.pgm"))
        assert any("normalized" in n for n in names)
        assert any("gray" in n for n in names)

    def test_norm_size_flag(self, small_corpus, tmp_path):
        source = next((small_corpus / ARCHETYPE_NAMES[0]).glob("*.pgm"))
        out = tmp_path / "n90.pgm"
        assert main(["preprocess", str(source), str(out), "--norm-size", "90"]) == 0
        assert read_pgm_file(out).shape == (90, 90)

    def test_config_file_and_flag_precedence(self, small_corpus, tmp_path):
        source = next((small_corpus / ARCHETYPE_NAMES[0]).glob("*.pgm"))
        cfg = tmp_path / "pre.cfg"
        cfg.write_text("norm_size=90\n")
        out = tmp_path / "from_cfg.pgm"
        assert main(["preprocess", str(source), str(out), "--config", str(cfg)]) == 0
        assert read_pgm_file(out).shape == (90, 90)
        out2 = tmp_path / "flag_wins.pgm"
        assert main(["preprocess", str(source), str(out2), "--config", str(cfg),
                     "--norm-size", "60"]) == 0
        assert read_pgm_file(out2).shape == (60, 60)


class TestFeaturesCmd:
    def test_csv_layout(self, small_corpus, tmp_path):
        out = tmp_path / "features.csv"
        assert main(["features", str(small_corpus), "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        header = lines[0].split(",")
        assert header[:2] == ["path", "label"]
        assert header[2:] == [f"f{i}" for i in range(133)]
        assert len(lines) == 1 + 24
        assert len(lines[1].split(",")) == 2 + 133


class TestTrainCmd:
    def test_model_written_and_report_printed(self, trained_model, capsys):
        model = load_model(trained_model.read_bytes())
        assert model.sizes == (133, 8, 4)
        assert model.labels == ARCHETYPE_NAMES[:4]

    def test_deterministic_model_bytes(self, small_corpus, tmp_path):
        args = ["--hidden", "5", "--max-epochs", "40", "--seed", "2"]
        m1, m2 = tmp_path / "m1.json", tmp_path / "m2.json"
        assert main(["train", str(small_corpus), str(m1), *args]) == 0
        assert main(["train", str(small_corpus), str(m2), *args]) == 0
        assert m1.read_bytes() == m2.read_bytes()

    def test_augment_flag_semantics(self, small_corpus):
        manifest = scan_directory(small_corpus)
        cfg = PreprocessConfig()
        X0, y0 = _feature_matrix(manifest.entries[:4], cfg, "eight", augment_rate=0.0)
        X1, y1 = _feature_matrix(manifest.entries[:4], cfg, "eight", augment_rate=0.02)
        assert X0.shape[0] == 4 and len(y0) == 4
        assert X1.shape[0] == 8 and len(y1) == 8

    def test_norm_stats_come_from_train_split_only(self, small_corpus):
        spec = SplitSpec(seed=6)
        model, _, (train_m, _, _) = train_recognizer(
            small_corpus, split_spec=spec, mlp_cfg=MlpConfig(n_hidden=4, max_epochs=5, seed=6),
            augment_rate=0.0,
        )
        X_train, _ = _feature_matrix(train_m.entries, PreprocessConfig(), "eight")
        assert np.array_equal(model.norm.mins, X_train.min(axis=0))
        assert np.array_equal(model.norm.maxs, X_train.max(axis=0))

    def test_fitting_never_reads_test_images(self, small_corpus, monkeypatch):
        manifest = scan_directory(small_corpus)
        spec = SplitSpec(seed=11)
        _, _, expected_test = split(manifest, spec)
        test_paths = {p for p, _ in expected_test.entries}

        seen = []
        original = pipeline.read_pgm_file

        def recording(path):
            seen.append(str(path))
            return original(path)

        monkeypatch.setattr(pipeline, "read_pgm_file", recording)
        train_recognizer(small_corpus, split_spec=spec,
                         mlp_cfg=MlpConfig(n_hidden=4, max_epochs=5, seed=11))
        assert seen, "training should have loaded images"
        assert not (set(seen) & test_paths)

    def test_bad_split_flag(self, small_corpus, tmp_path, capsys):
        rc = main(["train", str(small_corpus), str(tmp_path / "m.json"), "--split", "0.5,0.5"])
        assert rc != 0
        assert "error:" in capsys.readouterr().err


class TestEvalCmd:
    def test_eval_table_and_csv(self, small_corpus, trained_model, tmp_path, capsys):
        csv_path = tmp_path / "confusion.csv"
        rc = main(["eval", str(trained_model), str(small_corpus), "--csv", str(csv_path)])
        assert rc == 0
        out = capsys.readouterr().out
        assert "Overall recognition rate" in out
        lines = csv_path.read_text().splitlines()
        assert lines[0].split(",") == ARCHETYPE_NAMES[:4]
        assert len(lines) == 5
        total = sum(int(v) for row in lines[1:] for v in row.split(","))
        assert total == 24

    def test_unknown_label_rejected(self, small_corpus, trained_model, tmp_path, capsys):
        some_pgm = next((small_corpus / ARCHETYPE_NAMES[0]).glob("*.pgm"))
        manifest = tmp_path / "weird.csv"
        manifest.write_text(f"path,label\n{some_pgm},zzz\n")
        rc = main(["eval", str(trained_model), str(manifest)])
        assert rc != 0
        assert "zzz" in capsys.readouterr().err

    def test_corrupt_model_rejected(self, small_corpus, trained_model, tmp_path, capsys):
        broken = tmp_path / "broken.json"
        broken.write_bytes(trained_model.read_bytes()[:50])
        rc = main(["eval", str(broken), str(small_corpus)])
        assert rc != 0
        assert "error:" in capsys.readouterr().err


class TestPredictCmd:
    def test_prediction_output(self, small_corpus, trained_model, capsys):
        source = next((small_corpus / ARCHETYPE_NAMES[0]).glob("*.pgm"))
        rc = main(["predict", str(trained_model), str(source)])
        assert rc == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] in ARCHETYPE_NAMES[:4]
        assert len(lines) == 1 + 4  # winner plus every (label, score) pair
        scores = [float(line.split()[-1]) for line in lines[1:]]
        assert scores == sorted(scores, reverse=True)

    def test_deterministic_output(self, small_corpus, trained_model, capsys):
        source = next((small_corpus / ARCHETYPE_NAMES[1]).glob("*.pgm"))
        main(["predict", str(trained_model), str(source)])
        first = capsys.readouterr().out
        main(["predict", str(trained_model), str(source)])
        assert capsys.readouterr().out == first

    def test_blank_image_error(self, trained_model, tmp_path, capsys):
        blank = tmp_path / "blank.pgm"
        write_pgm_file(blank, np.full((20, 20), 128, np.uint8))
        rc = main(["predict", str(trained_model), str(blank)])
        assert rc != 0
        assert "blank image" in capsys.readouterr().err


class TestEvalReport:
    def test_invariants(self):
        confusion = np.array([[8, 2, 0], [1, 9, 0], [0, 0, 0]])
        report = EvalReport.from_confusion(["a", "b", "c"], confusion)
        assert report.n_samples == 20
        assert report.overall_rate == pytest.approx(17 / 20)
        assert report.per_class_rate[0] == pytest.approx(0.8)
        assert report.per_class_rate[2] == 0.0  # empty row
        row_sums = confusion.sum(axis=1)
        weighted = (report.per_class_rate * row_sums).sum() / report.n_samples
        assert report.overall_rate == pytest.approx(weighted)

    def test_perfect_classifier(self):
        report = EvalReport.from_confusion(["a", "b"], np.diag([5, 7]))
        assert report.overall_rate == 1.0
        assert np.all(report.per_class_rate == 1.0)

    def test_single_wrong_sample(self):
        report = EvalReport.from_confusion(["a", "b"], np.array([[0, 1], [0, 0]]))
        assert report.overall_rate == 0.0
        assert report.confusion[0, 1] == 1
