import json

import numpy as np
import pytest

from rainforge.cli import main
from rainforge.imaging import ImageBuffer, load_image, save_image
from rainforge.metrics import metric_report
from rainforge.curation import load_manifest

from conftest import build_synthetic_corpus, keypoint_texture, textured_image, tinted


def _run(capsys, argv):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


class TestMetricsCommand:
    def test_identity_pair(self, tmp_path, capsys):
        img = textured_image(192, 192, seed=100)
        path = tmp_path / "x.png"
        save_image(img, path)
        code, out, _ = _run(capsys, ["metrics", "--a", str(path), "--b", str(path)])
        assert code == 0
        payload = json.loads(out)
        assert payload["psnr_db"] == "inf"
        assert abs(payload["ssim"] - 1.0) < 1e-9

    def test_matches_library_call(self, tmp_path, capsys, rng):
        a = textured_image(192, 192, seed=101)
        b = ImageBuffer(np.clip(a.data + rng.normal(0, 0.03, a.data.shape), 0, 1))
        pa, pb = tmp_path / "a.png", tmp_path / "b.png"
        save_image(a, pa)
        save_image(b, pb)
        code, out, _ = _run(capsys, ["metrics", "--a", str(pa), "--b", str(pb)])
        assert code == 0
        payload = json.loads(out)
        expected = metric_report(load_image(pa), load_image(pb))
        assert payload["ssim"] == expected["ssim"]
        assert payload["psnr_db"] == expected["psnr_db"]
        assert payload["ms_ssim"] == expected["ms_ssim"]

    def test_missing_file_is_operational_failure(self, capsys):
        code, _, err = _run(capsys, ["metrics", "--a", "/nope.png", "--b", "/nope.png"])
        assert code == 1
        assert "error" in err

    def test_unknown_flag_usage_error(self, capsys):
        with pytest.raises(SystemExit) as excinfo:
            main(["metrics", "--bogus", "x"])
        assert excinfo.value.code == 2

    def test_out_file_written(self, tmp_path, capsys):
        img = textured_image(192, 192, seed=102)
        path = tmp_path / "x.png"
        save_image(img, path)
        out_path = tmp_path / "report.json"
        code, _, _ = _run(capsys, ["metrics", "--a", str(path), "--b", str(path), "--out", str(out_path)])
        assert code == 0
        assert json.loads(out_path.read_text())["psnr_db"] == "inf"


class TestPipelineCommand:
    def test_bad_config_exits_2_with_line(self, tmp_path, capsys):
        cfg = tmp_path / "bad.toml"
        cfg.write_text("[thresholds]\nt_global = broken!\n")
        code, _, err = _run(capsys, ["pipeline", "--config", str(cfg)])
        assert code == 2
        assert "line 2" in err

    def test_env_var_config_fallback(self, tmp_path, capsys, monkeypatch):
        cfg = tmp_path / "bad.toml"
        cfg.write_text("[thresholds]\nt_global = broken!\n")
        monkeypatch.setenv("RAINFORGE_CONFIG", str(cfg))
        code, _, err = _run(capsys, ["pipeline"])
        assert code == 2
        assert "line 2" in err

    def test_small_corpus_run(self, tmp_path, capsys):
        build_synthetic_corpus(tmp_path, size=192, seed=11)
        cfg = tmp_path / "run.toml"
        cfg.write_text(
            '[paths]\nrainy_dir = "rainy"\nclean_dir = "clean"\noutput_root = "out"\n'
        )
        code, out, _ = _run(capsys, ["pipeline", "--config", str(cfg)])
        assert code == 0
        payload = json.loads(out)
        assert payload["pairs"] == 10
        assert (tmp_path / "out" / "manifest.jsonl").is_file()


class TestAlignCommand:
    def test_homography_mode_on_known_warp(self, tmp_path, capsys):
        from rainforge.imaging import Homography
        from rainforge.rain import StreakParams, synthesize_pair

        clean = tinted(keypoint_texture(192, 192, seed=103), seed=103)
        truth = Homography.translation(3.0, -2.0)
        rainy, _ = synthesize_pair(
            clean,
            streaks=StreakParams(width=192, height=192, count=40, opacity_range=(0.15, 0.3), seed=5),
            warp=truth,
        )
        rp, cp = tmp_path / "r.png", tmp_path / "c.png"
        save_image(rainy, rp)
        save_image(clean, cp)
        code, out, _ = _run(
            capsys,
            ["align", "--rainy", str(rp), "--clean", str(cp), "--mode", "homography", "--out", str(tmp_path / "d")],
        )
        assert code == 0
        record = json.loads(out)
        assert record["correction_mode"].startswith("homography")
        h = np.array(record["homography"]).reshape(3, 3)
        corners = np.array([[0, 0, 1], [191, 0, 1], [0, 191, 1], [191, 191, 1]], dtype=float)
        est = corners @ h.T
        est = est[:, :2] / est[:, 2:3]
        want = corners @ truth.m.T
        want = want[:, :2] / want[:, 2:3]
        assert np.linalg.norm(est - want, axis=1).max() < 1.5


class TestSynthCommand:
    def test_writes_image_and_provenance(self, tmp_path, capsys):
        clean = textured_image(96, 96, seed=104)
        cp = tmp_path / "scene.png"
        save_image(clean, cp)
        code, out, _ = _run(
            capsys,
            ["synth", "--clean", str(cp), "--out", str(tmp_path / "s"), "--count", "12", "--seed", "3"],
        )
        assert code == 0
        payload = json.loads(out)
        assert (tmp_path / "s" / "scene_rainy.png").is_file()
        prov = json.loads((tmp_path / "s" / "scene_rainy.json").read_text())
        assert prov["n_layers"] == 1
        assert prov["streaks"]["seeds"] == [3]
        assert payload["streaks"]["count"] == 12

    def test_seeded_determinism(self, tmp_path, capsys):
        clean = textured_image(64, 64, seed=105)
        cp = tmp_path / "scene.png"
        save_image(clean, cp)
        _run(capsys, ["synth", "--clean", str(cp), "--out", str(tmp_path / "s1"), "--seed", "9"])
        _run(capsys, ["synth", "--clean", str(cp), "--out", str(tmp_path / "s2"), "--seed", "9"])
        b1 = (tmp_path / "s1" / "scene_rainy.png").read_bytes()
        b2 = (tmp_path / "s2" / "scene_rainy.png").read_bytes()
        assert b1 == b2


class TestLosscheckCommand:
    def test_report_shape_and_tolerances(self, capsys):
        code, out, _ = _run(capsys, ["losscheck", "--batch", "4", "--dim", "16", "--seed", "2"])
        assert code == 0
        payload = json.loads(out)
        assert payload["settings"]["temperature"] == 0.25
        assert payload["settings"]["include_positive_in_denominator"] is True
        errors = payload["gradient_check_max_relative_error"]
        assert errors["cosine_similarity"] < 1e-6
        assert errors["pair_loss"] < 1e-5
        assert errors["batch_loss"] < 1e-5

    def test_exclude_positive_flag(self, capsys):
        code, out, _ = _run(capsys, ["losscheck", "--batch", "3", "--dim", "8", "--exclude-positive"])
        assert code == 0
        payload = json.loads(out)
        assert payload["settings"]["include_positive_in_denominator"] is False


class TestSplitAndExportCommands:
    def _manifest_with_accepts(self, tmp_path, capsys):
        build_synthetic_corpus(tmp_path, size=192, seed=12)
        cfg = tmp_path / "run.toml"
        cfg.write_text(
            '[paths]\nrainy_dir = "rainy"\nclean_dir = "clean"\noutput_root = "out"\n'
            "[pipeline]\nauto_accept_uncorrected = true\n"
        )
        assert main(["pipeline", "--config", str(cfg)]) == 0
        capsys.readouterr()  # drain the pipeline's stdout
        manifest = tmp_path / "out" / "manifest.jsonl"
        from rainforge.curation import update_review

        for pid, record in load_manifest(manifest).items():
            if record["status"] == "needs_review":
                update_review(manifest, pid, "accept", "cli test", "2024-03-02T00:00:00")
        return manifest

    def test_split_and_export(self, tmp_path, capsys):
        manifest = self._manifest_with_accepts(tmp_path, capsys)
        code, out, _ = _run(capsys, ["split", "--manifest", str(manifest), "--seed", "4"])
        assert code == 0
        payload = json.loads(out)
        assert len(payload["assignments"]) == 10

        code, out, _ = _run(
            capsys,
            [
                "export",
                "--manifest",
                str(manifest),
                "--root",
                str(tmp_path / "out"),
                "--out",
                str(tmp_path / "dataset"),
                "--seed",
                "4",
            ],
        )
        assert code == 0
        exported = json.loads(out)
        assert sum(exported["splits"].values()) == 20
        index = json.loads((tmp_path / "dataset" / "train" / "index.json").read_text())
        assert index["frame_count"] == 2 * len(index["pairs"])
