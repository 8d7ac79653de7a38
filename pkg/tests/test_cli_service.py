"""Command-line interface and HTTP service."""

import io
import threading
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
import requests
from PIL import Image

import aesust.aessa as aessa_mod
from aesust.autodiff import Tensor, softmax as true_softmax
from aesust.cli import main
from aesust.controls import crop_to_grid
from aesust.models import StyleTransferModels
from aesust.persist import decode_image, encode_image, load_archive_file
from aesust.service import create_server

from conftest import synth_image


def _png_bytes(seed, size=(96, 80)):
    arr = (synth_image(seed, size) * 255).astype(np.uint8).transpose(1, 2, 0)
    buf = io.BytesIO()
    Image.fromarray(arr).save(buf, format="PNG")
    return buf.getvalue()


@pytest.fixture(scope="module")
def cli_env(tmp_path_factory, corpus_dirs):
    """A tiny trained checkpoint plus input images on disk."""
    tmp = tmp_path_factory.mktemp("cli")
    content_dir, style_dir = corpus_dirs
    config = tmp / "train.cfg"
    config.write_text(
        "width_multiplier = 0.125\ncrop = 64\nresize = 72\n"
        "batch_size = 2\niterations = 2\nseed = 5\ncheckpoint_every = 2\n"
    )
    checkpoint = tmp / "stage1.aesu"
    code = main(["train", "--stage", "1", "--config", str(config),
                 "--content-dir", content_dir, "--style-dir", style_dir,
                 "--out", str(checkpoint), "--quiet"])
    assert code == 0
    content_png = tmp / "content.png"
    content_png.write_bytes(_png_bytes(31, (96, 80)))
    style_png = tmp / "style.png"
    style_png.write_bytes(_png_bytes(32, (96, 80)))
    style2_png = tmp / "style2.png"
    style2_png.write_bytes(_png_bytes(33, (112, 96)))
    return {"tmp": tmp, "config": config, "checkpoint": checkpoint,
            "content": content_png, "style": style_png, "style2": style2_png,
            "content_dir": content_dir, "style_dir": style_dir}


@pytest.fixture(scope="module")
def service(cli_env):
    server = create_server(str(cli_env["checkpoint"]))
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_address[1]}", server
    server.shutdown()


class TestTrainCommand:
    def test_checkpoint_is_loadable(self, cli_env):
        entries = load_archive_file(str(cli_env["checkpoint"]))
        assert int(entries["meta.stage"][0]) == 1
        models = StyleTransferModels.from_entries(entries)
        assert models.width_multiplier == 0.125

    def test_stage2_without_resume_is_usage_error(self, cli_env):
        code = main(["train", "--stage", "2", "--config", str(cli_env["config"]),
                     "--content-dir", cli_env["content_dir"],
                     "--style-dir", cli_env["style_dir"],
                     "--out", str(cli_env["tmp"] / "x.aesu")])
        assert code == 2

    def test_unknown_config_key_named(self, cli_env, capsys):
        bad = cli_env["tmp"] / "bad.cfg"
        bad.write_text("momentum = 0.9\n")
        code = main(["train", "--stage", "1", "--config", str(bad),
                     "--content-dir", cli_env["content_dir"],
                     "--style-dir", cli_env["style_dir"],
                     "--out", str(cli_env["tmp"] / "y.aesu")])
        assert code == 1
        assert "momentum" in capsys.readouterr().err


class TestStylizeCommand:
    def test_writes_png(self, cli_env):
        out = cli_env["tmp"] / "out.png"
        code = main(["stylize", "--checkpoint", str(cli_env["checkpoint"]),
                     "--content", str(cli_env["content"]),
                     "--style", str(cli_env["style"]),
                     "--alpha", "1.0", "--out", str(out)])
        assert code == 0
        img = Image.open(out)
        assert img.size == (80, 96)

    def test_bad_weights_rejected(self, cli_env, capsys):
        code = main(["stylize", "--checkpoint", str(cli_env["checkpoint"]),
                     "--content", str(cli_env["content"]),
                     "--style", str(cli_env["style"]),
                     "--style", str(cli_env["style2"]),
                     "--weights", "0.4,0.5",
                     "--out", str(cli_env["tmp"] / "never.png")])
        assert code == 1
        assert "sum to 1" in capsys.readouterr().err

    def test_two_styles_with_masks_routes_spatially(self, cli_env):
        left = np.zeros((96, 80), dtype=np.uint8)
        left[:, :40] = 255
        for name, mask in (("left.png", left), ("right.png", 255 - left)):
            Image.fromarray(mask, mode="L").save(cli_env["tmp"] / name)
        out = cli_env["tmp"] / "masked.png"
        code = main(["stylize", "--checkpoint", str(cli_env["checkpoint"]),
                     "--content", str(cli_env["content"]),
                     "--style", str(cli_env["style"]),
                     "--style", str(cli_env["style2"]),
                     "--mask", str(cli_env["tmp"] / "left.png"),
                     "--mask", str(cli_env["tmp"] / "right.png"),
                     "--out", str(out)])
        assert code == 0
        assert Image.open(out).size == (80, 96)


class TestService:
    def _post(self, base, cli_env, data=None, styles=("style",), masks=(), content="content"):
        files = [("content", ("c.png", cli_env[content].read_bytes(), "image/png"))]
        for s in styles:
            files.append(("style", (f"{s}.png", cli_env[s].read_bytes(), "image/png")))
        for i, m in enumerate(masks):
            files.append(("mask", (f"m{i}.png", m, "image/png")))
        return requests.post(base + "/api/stylize", files=files, data=data or {})

    def test_health_names_checkpoint(self, service):
        base, _ = service
        payload = requests.get(base + "/api/health").json()
        assert payload["status"] == "ok"
        assert payload["checkpoint"] == "stage1.aesu"
        assert payload["widths"]["multiplier"] == 0.125

    def test_limits(self, service):
        base, _ = service
        payload = requests.get(base + "/api/limits").json()
        assert payload["max_edge"] == 1024
        assert payload["max_styles"] == 4

    def test_cli_and_service_bytes_identical(self, service, cli_env):
        base, _ = service
        out = cli_env["tmp"] / "cli.png"
        assert main(["stylize", "--checkpoint", str(cli_env["checkpoint"]),
                     "--content", str(cli_env["content"]),
                     "--style", str(cli_env["style"]),
                     "--alpha", "1.0", "--out", str(out)]) == 0
        response = self._post(base, cli_env, data={"alpha": "1.0"})
        assert response.status_code == 200
        assert response.content == out.read_bytes()

    def test_alpha_zero_is_reconstruction(self, service, cli_env):
        base, _ = service
        response = self._post(base, cli_env, data={"alpha": "0.0"})
        assert response.status_code == 200
        models = StyleTransferModels.load(str(cli_env["checkpoint"]))
        content = Tensor(crop_to_grid(decode_image(cli_env["content"].read_bytes())))
        recon = models.decoder.decode(models.fused_feature(content, content))
        assert response.content == encode_image(recon.data)

    def test_validation_errors_are_400_json(self, service, cli_env):
        base, _ = service
        response = self._post(base, cli_env, data={"alpha": "2.0"})
        assert response.status_code == 400
        assert "alpha" in response.json()["error"]
        response = self._post(base, cli_env, styles=("style", "style2"),
                              data={"weights": "0.4,0.5"})
        assert response.status_code == 400
        assert "sum to 1" in response.json()["error"]

    def test_missing_content_is_400(self, service, cli_env):
        base, _ = service
        files = [("style", ("s.png", cli_env["style"].read_bytes(), "image/png"))]
        response = requests.post(base + "/api/stylize", files=files)
        assert response.status_code == 400

    def test_malformed_multipart_is_400(self, service):
        base, _ = service
        response = requests.post(
            base + "/api/stylize", data=b"garbage",
            headers={"Content-Type": "multipart/form-data; boundary=xyz"})
        assert response.status_code == 400

    def test_oversized_request_is_413(self, service, cli_env):
        base, server = service
        original = server.service.max_bytes
        server.service.max_bytes = 1024
        try:
            response = self._post(base, cli_env)
            assert response.status_code == 413
        finally:
            server.service.max_bytes = original

    def test_masked_request_matches_cli(self, service, cli_env):
        base, _ = service
        left = np.zeros((96, 80), dtype=np.uint8)
        left[:, :40] = 255
        mask_blobs = []
        for mask in (left, 255 - left):
            buf = io.BytesIO()
            Image.fromarray(mask, mode="L").save(buf, format="PNG")
            mask_blobs.append(buf.getvalue())
        response = self._post(base, cli_env, styles=("style", "style2"),
                              masks=mask_blobs)
        assert response.status_code == 200
        out = cli_env["tmp"] / "cli_masked.png"
        for name, blob in (("m_left.png", mask_blobs[0]), ("m_right.png", mask_blobs[1])):
            (cli_env["tmp"] / name).write_bytes(blob)
        assert main(["stylize", "--checkpoint", str(cli_env["checkpoint"]),
                     "--content", str(cli_env["content"]),
                     "--style", str(cli_env["style"]),
                     "--style", str(cli_env["style2"]),
                     "--mask", str(cli_env["tmp"] / "m_left.png"),
                     "--mask", str(cli_env["tmp"] / "m_right.png"),
                     "--out", str(out)]) == 0
        assert response.content == out.read_bytes()

    def test_concurrent_requests_succeed(self, service, cli_env):
        base, _ = service
        with ThreadPoolExecutor(max_workers=2) as pool:
            futures = [pool.submit(self._post, base, cli_env, {"alpha": "1.0"})
                       for _ in range(2)]
            results = [f.result() for f in futures]
        assert all(r.status_code == 200 for r in results)
        assert results[0].content == results[1].content


class TestSelfcheckCommand:
    def test_fast_subset_passes(self, capsys):
        code = main(["selfcheck", "--only", "residual-identities",
                     "--only", "loss-values", "--only", "encoder-contract"])
        out = capsys.readouterr().out
        assert code == 0
        assert out.count("PASS") == 3
        assert "3/3 checks passed" in out

    def test_unknown_check_rejected(self, capsys):
        assert main(["selfcheck", "--only", "nonsense"]) == 2

    def test_broken_softmax_fails_row_sum_check(self, monkeypatch, capsys):
        """Mutation probe: a sign error in softmax must trip the row-sum gate."""

        def negated_softmax(x, axis=-1):
            return -1.0 * true_softmax(x, axis=axis)

        monkeypatch.setattr(aessa_mod, "softmax", negated_softmax)
        code = main(["selfcheck", "--only", "attention-row-stochasticity"])
        out = capsys.readouterr().out
        assert code == 1
        assert "FAIL" in out
