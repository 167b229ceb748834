import numpy as np
import pytest

from taylorse.checkpoint import save_checkpoint
from taylorse.cli import main
from taylorse.dsp import Waveform, read_spectrogram_csv, read_wav, write_wav
from taylorse.model import TaylorModel, desk_config
from taylorse.plotting import read_pgm
from taylorse.selftest import randomize_params
from taylorse.training.synth import make_recipes, synthesize_mixture


@pytest.fixture
def ckpt(tmp_path):
    model = randomize_params(TaylorModel(desk_config(q=3)), np.random.default_rng(0), 0.02)
    return save_checkpoint(tmp_path / "model.json", model)


@pytest.fixture
def mixture(tmp_path):
    noisy, clean, _ = synthesize_mixture(make_recipes(1, 77, length_s=0.5)[0])
    write_wav(tmp_path / "noisy.wav", noisy)
    write_wav(tmp_path / "clean.wav", clean)
    return tmp_path / "noisy.wav", tmp_path / "clean.wav"


def test_enhance_keeps_length_and_rate(tmp_path, ckpt, mixture):
    out = tmp_path / "out.wav"
    assert main(["enhance", "--in", str(mixture[0]), "--out", str(out), "--ckpt", str(ckpt)]) == 0
    a, b = read_wav(mixture[0]), read_wav(out)
    assert len(a) == len(b) and a.sample_rate == b.sample_rate


@pytest.mark.parametrize("method", ["subtract", "wiener"])
def test_classical_enhance(tmp_path, mixture, method):
    out = tmp_path / f"{method}.wav"
    assert main(["enhance", "--in", str(mixture[0]), "--out", str(out), "--classical", method]) == 0
    assert len(read_wav(out)) == len(read_wav(mixture[0]))


def test_zero_signal_stays_zero(tmp_path, ckpt):
    write_wav(tmp_path / "z.wav", Waveform(np.zeros(3200)))
    assert main(["enhance", "--in", str(tmp_path / "z.wav"), "--out", str(tmp_path / "o.wav"),
                 "--ckpt", str(ckpt)]) == 0
    assert not np.any(read_wav(tmp_path / "o.wav").samples)


def test_usage_and_data_errors(tmp_path, ckpt, mixture, capsys):
    assert main(["enhance", "--in", str(mixture[0]), "--out", str(tmp_path / "o.wav")]) == 1
    assert main(["enhance", "--in", str(mixture[0]), "--out", str(tmp_path / "o.wav"), "--ckpt", str(ckpt),
                 "--classical", "wiener"]) == 1
    assert main(["enhance", "--in", str(tmp_path / "none.wav"), "--out", str(tmp_path / "o.wav"),
                 "--ckpt", str(ckpt)]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["bogus"])
    assert exc.value.code == 1


def test_train_missing_config_names_path(tmp_path, capsys):
    missing = tmp_path / "absent.cfg"
    assert main(["train", "--config", str(missing), "--out", str(tmp_path / "run")]) != 0
    assert str(missing) in capsys.readouterr().err


def test_train_bad_config_is_usage_error(tmp_path, capsys):
    (tmp_path / "bad.cfg").write_text("q = 1\nwidth = 3\n")
    assert main(["train", "--config", str(tmp_path / "bad.cfg"), "--out", str(tmp_path / "run")]) == 1
    assert "width" in capsys.readouterr().err


def test_inspect_exports_six_grids_for_q3(tmp_path, ckpt, mixture):
    out = tmp_path / "insp"
    assert main(["inspect", "--in", str(mixture[0]), "--ckpt", str(ckpt), "--out", str(out)]) == 0
    names = sorted(p.stem for p in out.glob("*.csv"))
    assert names == ["estimate", "order_0", "order_1", "order_2", "order_3", "residual_sum"]
    assert len(list(out.glob("*.pgm"))) == 6 and (out / "orders.png").is_file()
    grids = {n: read_spectrogram_csv(out / f"{n}.csv").to_ri() for n in names}
    total = grids["order_0"] + grids["order_1"] + grids["order_2"] + grids["order_3"]
    np.testing.assert_allclose(total, grids["estimate"], atol=1e-5)
    np.testing.assert_allclose(grids["order_1"] + grids["order_2"] + grids["order_3"], grids["residual_sum"],
                               atol=1e-5)
    img = read_pgm(out / "estimate.pgm")
    assert img.shape == (161, grids["estimate"].shape[1]) and img.min() >= 0 and img.max() <= 255


def _manifest(tmp_path, lines):
    p = tmp_path / "pairs.txt"
    p.write_text("\n".join(lines) + "\n")
    return p


def test_eval_identity_pairs_hit_clamp(tmp_path, mixture):
    m = _manifest(tmp_path, ["clean.wav,clean.wav"])
    out = tmp_path / "rep"
    assert main(["eval", "--pairs", str(m), "--out", str(out)]) == 0
    rows = (out / "unenhanced.csv").read_text().splitlines()
    assert rows[0] == "utt_id,sisnr_db,lsd_db"
    assert float(rows[1].split(",")[1]) == 100.0
    assert (out / "sisnr.png").is_file()


def test_eval_empty_manifest(tmp_path):
    m = _manifest(tmp_path, ["# nothing yet"])
    out = tmp_path / "rep"
    assert main(["eval", "--pairs", str(m), "--out", str(out)]) == 0
    assert (out / "unenhanced.csv").read_text().splitlines() == ["utt_id,sisnr_db,lsd_db"]


def test_eval_lists_every_missing_file(tmp_path, mixture, capsys):
    m = _manifest(tmp_path, ["noisy.wav,clean.wav", "gone1.wav,clean.wav", "noisy.wav,gone2.wav"])
    assert main(["eval", "--pairs", str(m), "--classical", "wiener"]) == 2
    err = capsys.readouterr().err
    assert "gone1.wav" in err and "gone2.wav" in err


def test_eval_with_model_writes_both_reports(tmp_path, ckpt, mixture):
    m = _manifest(tmp_path, ["noisy.wav,clean.wav"])
    out = tmp_path / "rep"
    assert main(["eval", "--pairs", str(m), "--ckpt", str(ckpt), "--out", str(out)]) == 0
    assert (out / "enhanced.csv").is_file() and (out / "unenhanced.csv").is_file()


def test_selftest_quick(capsys):
    assert main(["selftest", "--quick"]) == 0
    assert "all checks passed" in capsys.readouterr().out
