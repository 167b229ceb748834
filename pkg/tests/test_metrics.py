import numpy as np
import pytest

from taylorse.metrics import SISNR_CLAMP, MetricReport, evaluate_pair, log_spectral_distance, sisnr


def test_identical_hits_clamp(rng):
    s = rng.normal(size=1000)
    assert sisnr(s, s) == SISNR_CLAMP


def test_scale_invariance(rng):
    s = rng.normal(size=1000)
    e = s + 0.3 * rng.normal(size=1000)
    assert sisnr(2 * e, s) == pytest.approx(sisnr(e, s), abs=1e-10)


def test_orthogonal_noise_at_tenth_norm_is_20_db(rng):
    s = rng.normal(size=1000)
    s -= s.mean()
    n = rng.normal(size=1000)
    n -= n.mean()
    n -= (n @ s) / (s @ s) * s
    n *= np.linalg.norm(s) / (10 * np.linalg.norm(n))
    assert sisnr(s + n, s) == pytest.approx(20.0, abs=1e-9)


def test_sisnr_errors(rng):
    with pytest.raises(ValueError, match="zeros"):
        sisnr(rng.normal(size=10), np.zeros(10))
    with pytest.raises(ValueError, match="length"):
        sisnr(np.ones(5), np.ones(6))


def test_lsd_examples(rng):
    s = rng.normal(size=4000)
    assert log_spectral_distance(s, s) == 0.0
    assert log_spectral_distance(10 * s, s) == pytest.approx(20.0, abs=1e-9)


def test_report_csv(tmp_path, rng):
    rep = MetricReport()
    s = rng.normal(size=1600)
    evaluate_pair("a", s + 0.1 * rng.normal(size=1600), s, rep)
    evaluate_pair("b", s, s, rep)
    rep.write_csv(tmp_path / "r.csv")
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert lines[0] == "utt_id,sisnr_db,lsd_db"
    assert [ln.split(",")[0] for ln in lines[1:]] == ["a", "b", "mean"]
    assert float(lines[-1].split(",")[1]) == pytest.approx(rep.mean_sisnr, abs=1e-6)
