import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rppkit.dct_core import DctConfig, adaptive_dct_loss
from rppkit.exceptions import ConfigError, ContractViolation, ExecutableNotFoundError
from rppkit.media_io import Frame, VideoSequence, gray_to_yuv420, write_y4m
from rppkit.metrics import (
    DEFAULT_VMAF_TEMPLATES,
    LossWeights,
    MetricReport,
    VmafScorer,
    gaussian_window,
    metric_report,
    ms_ssim,
    parse_vmaf_log,
    perceptual_loss,
    psnr,
    reconstruction_loss,
    ssim,
    total_loss,
)

import _oracles as oracle
from _corpus import ffmpeg_has, natural_gray


def noisy(a, sigma, seed=0):
    return np.clip(a + np.random.default_rng(seed).normal(0, sigma, a.shape), 0, 1)


@pytest.fixture(scope="module")
def pic():
    return natural_gray("camera")[150:342, 200:392].copy()  # 192 x 192


class TestPsnr:
    def test_identical_is_inf(self):
        a = np.random.default_rng(0).random((8, 8))
        assert psnr(a, a) == math.inf

    def test_half_offset(self):
        assert psnr(np.zeros((4, 4)), np.full((4, 4), 0.5)) == pytest.approx(6.0206, abs=1e-4)

    def test_matches_oracle(self):
        rng = np.random.default_rng(1)
        for _ in range(5):
            a, b = rng.random((20, 30)), rng.random((20, 30))
            assert abs(psnr(a, b) - oracle.psnr(a, b)) < 1e-9

    def test_shape_mismatch(self):
        with pytest.raises(ContractViolation):
            psnr(np.zeros((4, 4)), np.zeros((4, 5)))

    def test_mixed_inputs_rejected(self):
        with pytest.raises(ContractViolation):
            psnr(Frame.gray(np.zeros((4, 4))), np.zeros((4, 4)))

    def test_all_planes_weighting(self):
        y = np.zeros((4, 4))
        c = np.zeros((2, 2))
        a = Frame.yuv420(y, c, c)
        b = Frame.yuv420(y, c + 0.5, c)
        # only U differs: weighted MSE = 0.25 / 8
        assert psnr(a, b, all_planes=True) == pytest.approx(10 * math.log10(32))
        assert psnr(a, b) == math.inf


class TestSsim:
    def test_identical_is_one(self):
        a = np.random.default_rng(2).random((32, 32))
        assert ssim(a, a) == 1.0

    def test_inverted_below_one(self):
        a = (np.random.default_rng(3).random((32, 32)) > 0.5).astype(float)
        assert ssim(a, 1 - a) < 1.0

    def test_window_normalized(self):
        assert abs(gaussian_window().sum() - 1) < 1e-15

    def test_matches_oracle(self):
        rng = np.random.default_rng(4)
        a = rng.random((64, 64))
        b = np.clip(a + rng.normal(0, 0.1, a.shape), 0, 1)
        assert abs(ssim(a, b) - oracle.ssim(a, b)) < 1e-9

    def test_undersized(self):
        with pytest.raises(ContractViolation, match="11x11"):
            ssim(np.zeros((10, 30)), np.zeros((10, 30)))

    def test_symmetric(self):
        rng = np.random.default_rng(5)
        a, b = rng.random((40, 40)), rng.random((40, 40))
        assert abs(ssim(a, b) - ssim(b, a)) < 1e-12


class TestMsSsim:
    def test_identical_is_one(self, pic):
        assert ms_ssim(pic, pic) == 1.0

    def test_monotone_in_noise(self, pic):
        scores = [ms_ssim(pic, noisy(pic, s)) for s in (0.01, 0.05, 0.1)]
        assert scores[0] > scores[1] > scores[2]

    def test_symmetric(self, pic):
        b = noisy(pic, 0.05)
        assert abs(ms_ssim(pic, b) - ms_ssim(b, pic)) < 1e-12

    def test_matches_oracle(self, pic):
        b = noisy(pic[:176, :180], 0.03)
        assert abs(ms_ssim(pic[:176, :180], b) - oracle.ms_ssim(pic[:176, :180], b)) < 1e-9

    def test_minimum_size_message(self):
        with pytest.raises(ContractViolation, match="176x176"):
            ms_ssim(np.zeros((175, 200)), np.zeros((175, 200)))

    def test_bounded(self, pic):
        assert 0.0 <= ms_ssim(pic, 1 - pic) <= 1.0


class TestLosses:
    def test_reconstruction_identity(self):
        a = np.random.default_rng(6).random((16, 16))
        assert reconstruction_loss(a, a) == 0.0

    def test_reconstruction_offset(self):
        assert reconstruction_loss(np.zeros((8, 8)), np.full((8, 8), 0.25)) == 0.25

    def test_reconstruction_exact_oracle(self):
        rng = np.random.default_rng(7)
        a, b = rng.random((13, 17)), rng.random((13, 17))
        acc = 0.0
        for x, y in zip(a.ravel(), b.ravel()):
            acc += abs(x - y)
        assert reconstruction_loss(a, b) == acc / a.size

    def test_perceptual_definition(self, pic):
        b = noisy(pic, 0.05)
        assert perceptual_loss(b, pic) == 1.0 - ms_ssim(b, pic)
        assert 0.0 <= perceptual_loss(b, pic) <= 2.0
        assert perceptual_loss(pic, pic) == 0.0

    def test_perceptual_monotone(self, pic):
        losses = [perceptual_loss(noisy(pic, s), pic) for s in (0.01, 0.05, 0.1)]
        assert losses[0] < losses[1] < losses[2]

    def test_total_constant_is_zero(self):
        c = np.full((176, 176), 0.3)
        assert total_loss(c, c).total == 0.0

    def test_total_zero_weights_is_reconstruction(self, pic):
        b = noisy(pic, 0.05)
        out = total_loss(b, pic, weights=LossWeights(0.0, 0.0))
        assert out.total == reconstruction_loss(pic, b)

    def test_total_recombines(self, pic):
        b = noisy(pic, 0.05)
        out = total_loss(b, pic)
        assert out.weights == LossWeights(10.0, 0.1)
        assert out.total == 10.0 * out.dct + 0.1 * out.perceptual + out.reconstruction
        assert out.dct == adaptive_dct_loss(b, DctConfig())

    def test_dct_term_is_reference_free(self, pic):
        b = noisy(pic, 0.05)
        assert total_loss(b, pic).dct == total_loss(b, np.zeros_like(pic)).dct

    def test_linear_in_weights(self, pic):
        b = noisy(pic, 0.05)
        base = total_loss(b, pic, weights=LossWeights(10.0, 0.1))
        bumped = total_loss(b, pic, weights=LossWeights(10.5, 0.1))
        assert bumped.total - base.total == pytest.approx(0.5 * base.dct, rel=1e-12)

    def test_negative_weights_rejected(self):
        with pytest.raises(ConfigError):
            LossWeights(-1.0, 0.1)


class TestReport:
    def test_report_fields(self, pic):
        r = metric_report(pic, pic)
        assert r.psnr == math.inf and r.ssim == 1.0 and r.ms_ssim == 1.0
        assert r.as_dict() == {"psnr": math.inf, "ssim": 1.0, "msssim": 1.0}

    def test_vmaf_key_only_when_present(self):
        assert "vmaf" in MetricReport(1, 1, 1, 95.0).as_dict()


class TestVmaf:
    JSON = '{"pooled_metrics": {"vmaf": {"min": 90, "mean": 93.25}}}'
    XML = ('<VMAF version="2"><pooled_metrics><metric name="psnr" mean="40"/>'
           '<metric name="vmaf" mean="87.5"/></pooled_metrics></VMAF>')
    OLD_XML = '<VMAF><fyi numOfFrames="2" aggregateVMAF="77.0"/></VMAF>'

    def test_parse_json(self):
        assert parse_vmaf_log(self.JSON) == 93.25

    def test_parse_legacy_json(self):
        assert parse_vmaf_log('{"aggregate": {"VMAF_score": 66.0}}') == 66.0

    def test_parse_xml(self):
        assert parse_vmaf_log(self.XML) == 87.5
        assert parse_vmaf_log(self.OLD_XML) == 77.0

    def test_parse_missing(self):
        with pytest.raises(ValueError):
            parse_vmaf_log('{"frames": []}')

    def test_template_checked(self):
        with pytest.raises(ConfigError, match="unknown placeholder"):
            VmafScorer("vmaf {reference} {distorted} {output} {bogus}")
        with pytest.raises(ConfigError, match="missing"):
            VmafScorer("vmaf {reference} {distorted}")

    def test_missing_executable(self, monkeypatch):
        monkeypatch.setenv("PATH", "/nonexistent")
        with pytest.raises(ExecutableNotFoundError, match="no-such-vmaf"):
            VmafScorer("no-such-vmaf {reference} {distorted} {output}").check_available()

    @pytest.mark.codec
    @pytest.mark.skipif(not ffmpeg_has("filter", "libvmaf"), reason="no ffmpeg with libvmaf")
    def test_external_scorer(self, tmp_path):
        img = natural_gray("astronaut")[:144, :176]
        ref = VideoSequence(tuple(gray_to_yuv420(Frame.gray(img)) for _ in range(3)),
                            Fraction(25))
        dist = ref.with_frames([gray_to_yuv420(Frame.gray(noisy(img, 0.08, i)))
                                for i in range(3)])
        write_y4m(ref, tmp_path / "ref.y4m")
        write_y4m(dist, tmp_path / "dist.y4m")
        scorer = VmafScorer(DEFAULT_VMAF_TEMPLATES["ffmpeg"])
        same = scorer.score(tmp_path / "ref.y4m", tmp_path / "ref.y4m")
        worse = scorer.score(tmp_path / "ref.y4m", tmp_path / "dist.y4m")
        assert 0 <= worse < same <= 100


_pair = st.integers(0, 2**32 - 1).map(
    lambda s: np.random.default_rng(s).random((2, 24, 24)))


@settings(max_examples=40, deadline=None)
@given(pair=_pair)
def test_metric_symmetry_and_identity(pair):
    a, b = pair
    assert psnr(a, b) == psnr(b, a)
    assert abs(ssim(a, b) - ssim(b, a)) < 1e-12
    assert ssim(a, a) == 1.0 and reconstruction_loss(a, a) == 0.0
    assert reconstruction_loss(a, b) == reconstruction_loss(b, a)
