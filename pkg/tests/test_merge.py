import ml_dtypes
import numpy as np
import pytest

from ggez.errors import IncompatibleCheckpoints, InvalidBeta
from ggez.merge import build_merge_report, merge_linear

from conftest import make_checkpoint


def scalar_loop_merge(g: np.ndarray, r: np.ndarray, beta: float) -> np.ndarray:
    """Independent oracle: plain Python float arithmetic, one element at a time."""
    w_r = float(beta)
    w_g = 1.0 - w_r
    flat_g, flat_r = g.reshape(-1), r.reshape(-1)
    out = np.empty(flat_g.size, dtype=g.dtype)
    for i in range(flat_g.size):
        out[i] = g.dtype.type(w_r * float(flat_r[i]) + w_g * float(flat_g[i]))
    return out.reshape(g.shape)


def f32_reference(g: np.ndarray, r: np.ndarray, beta: float) -> np.ndarray:
    """Interpolation carried out in float32 arithmetic."""
    g32 = g.astype(np.float32)
    r32 = r.astype(np.float32)
    return np.float32(beta) * r32 + np.float32(1.0 - beta) * g32


def bf16_ulp(x: np.ndarray) -> np.ndarray:
    """Spacing of bfloat16 at |x|, as float32."""
    abs_bits = x.view(np.uint16) & np.uint16(0x7FFF)
    lo = abs_bits.view(ml_dtypes.bfloat16).astype(np.float32)
    hi = (abs_bits + np.uint16(1)).view(ml_dtypes.bfloat16).astype(np.float32)
    return hi - lo


class TestMergeLinear:
    def test_hand_arithmetic(self):
        g = make_checkpoint({"w": np.array([[1, 2], [3, 4]], dtype=np.float32)})
        r = make_checkpoint({"w": np.array([[5, 6], [7, 8]], dtype=np.float32)})
        merged = merge_linear(g, r, 0.25)
        np.testing.assert_array_equal(merged["w"].to_numpy(), [[2, 3], [4, 5]])

    def test_endpoints_bytewise_for_f32(self):
        rng = np.random.default_rng(7)
        g = make_checkpoint({"w": rng.standard_normal(257).astype(np.float32)})
        r = make_checkpoint({"w": rng.standard_normal(257).astype(np.float32)})
        assert merge_linear(g, r, 0.0)["w"].data == g["w"].data
        assert merge_linear(g, r, 1.0)["w"].data == r["w"].data

    def test_scalar_loop_oracle_exact_f32(self):
        rng = np.random.default_rng(11)
        g_arr = (rng.standard_normal(501) * 3).astype(np.float32)
        r_arr = (rng.standard_normal(501) * 3).astype(np.float32)
        g = make_checkpoint({"w": g_arr})
        r = make_checkpoint({"w": r_arr})
        merged = merge_linear(g, r, 0.37)["w"].to_numpy()
        expected = scalar_loop_merge(g_arr, r_arr, 0.37)
        assert merged.tobytes() == expected.tobytes()

    @pytest.mark.parametrize("dtype", [np.float32, np.float64, np.float16, ml_dtypes.bfloat16])
    def test_self_merge_identity(self, dtype):
        rng = np.random.default_rng(13)
        arr = (rng.standard_normal(123) * 2).astype(dtype)
        x = make_checkpoint({"w": arr})
        for beta in (0.0, 0.3, 0.5, 0.77, 1.0):
            assert merge_linear(x, x, beta)["w"].data == arr.tobytes()

    @pytest.mark.parametrize("dtype", [np.float32, np.float64, np.float16, ml_dtypes.bfloat16])
    def test_symmetry_under_beta_flip(self, dtype):
        rng = np.random.default_rng(17)
        g = make_checkpoint({"w": (rng.standard_normal(200)).astype(dtype)})
        r = make_checkpoint({"w": (rng.standard_normal(200)).astype(dtype)})
        for beta in (0.0, 1 / 64, 0.25, 0.375, 0.5, 0.875, 1.0):
            a = merge_linear(g, r, beta)["w"].data
            b = merge_linear(r, g, 1.0 - beta)["w"].data
            assert a == b

    @pytest.mark.parametrize("dtype,tag", [(np.float16, "F16"), (ml_dtypes.bfloat16, "BF16")])
    def test_half_precision_within_one_ulp_of_f32_reference(self, dtype, tag):
        rng = np.random.default_rng(19)
        g_arr = (rng.uniform(-4, 4, size=4096)).astype(dtype)
        r_arr = (rng.uniform(-4, 4, size=4096)).astype(dtype)
        g = make_checkpoint({"w": g_arr})
        r = make_checkpoint({"w": r_arr})
        for beta in (0.05, 0.37, 0.8):
            merged = merge_linear(g, r, beta)["w"].to_numpy()
            ref = f32_reference(g_arr, r_arr, beta)
            deviation = np.abs(merged.astype(np.float32) - ref)
            if tag == "F16":
                ulp = np.spacing(np.abs(merged)).astype(np.float32)
            else:
                ulp = bf16_ulp(merged)
            assert np.all(deviation <= ulp)

    def test_frozen_submodule_passthrough(self):
        # A tensor byte-identical in both inputs stays byte-identical for
        # every beta, e.g. a VAE kept frozen during fine-tuning.
        rng = np.random.default_rng(23)
        frozen = rng.standard_normal(64).astype(np.float64)
        g = make_checkpoint({"unet": rng.standard_normal(64).astype(np.float64),
                             "vae": frozen})
        r = make_checkpoint({"unet": rng.standard_normal(64).astype(np.float64),
                             "vae": frozen.copy()})
        for beta in (0.1, 0.5, 0.9):
            assert merge_linear(g, r, beta)["vae"].data == frozen.tobytes()

    def test_integer_tensors_copied_from_global(self):
        g = make_checkpoint({"w": np.ones(4, dtype=np.float32),
                             "steps": np.array([100], dtype=np.int64)})
        r = make_checkpoint({"w": np.zeros(4, dtype=np.float32),
                             "steps": np.array([999], dtype=np.int64)})
        merged = merge_linear(g, r, 0.5)
        assert merged["steps"].to_numpy()[0] == 100
        report = build_merge_report(g, merged)
        assert report.integer_copied == ("steps",)

    def test_output_order_follows_global(self):
        g = make_checkpoint({"a": np.ones(1, np.float32), "b": np.ones(1, np.float32)})
        r_rev = make_checkpoint({"b": np.zeros(1, np.float32), "a": np.zeros(1, np.float32)})
        assert merge_linear(g, r_rev, 0.5).names() == ["a", "b"]

    def test_metadata_records_beta_and_sources(self):
        g = make_checkpoint({"w": np.ones(1, np.float32)})
        r = make_checkpoint({"w": np.zeros(1, np.float32)})
        merged = merge_linear(g, r, 0.1, global_label="base.st", regional_label="ft.st")
        assert merged.metadata["merge.beta"] == repr(0.1)
        assert merged.metadata["merge.global"] == "base.st"
        assert merged.metadata["merge.regional"] == "ft.st"


class TestMergeErrors:
    def test_beta_out_of_range(self):
        g = make_checkpoint({"w": np.ones(1, np.float32)})
        for bad in (-0.1, 1.5, float("nan")):
            with pytest.raises(InvalidBeta):
                merge_linear(g, g, bad)

    def test_name_set_mismatch_lists_difference(self):
        g = make_checkpoint({"a": np.ones(1, np.float32), "b": np.ones(1, np.float32)})
        r = make_checkpoint({"a": np.ones(1, np.float32), "c": np.ones(1, np.float32)})
        with pytest.raises(IncompatibleCheckpoints) as err:
            merge_linear(g, r, 0.5)
        assert "'b'" in str(err.value) and "'c'" in str(err.value)

    def test_shape_mismatch(self):
        g = make_checkpoint({"w": np.ones((2, 2), np.float32)})
        r = make_checkpoint({"w": np.ones(4, np.float32)})
        with pytest.raises(IncompatibleCheckpoints, match="shape"):
            merge_linear(g, r, 0.5)

    def test_dtype_mismatch(self):
        g = make_checkpoint({"w": np.ones(4, np.float32)})
        r = make_checkpoint({"w": np.ones(4, np.float16)})
        with pytest.raises(IncompatibleCheckpoints, match="dtype"):
            merge_linear(g, r, 0.5)


class TestMergeReport:
    def test_counts_and_delta(self):
        g = make_checkpoint({"w": np.zeros(4, np.float32),
                             "h": np.zeros(2, np.float16),
                             "steps": np.array([3], dtype=np.int64)})
        r = make_checkpoint({"w": np.full(4, 2.0, np.float32),
                             "h": np.zeros(2, np.float16),
                             "steps": np.array([3], dtype=np.int64)})
        merged = merge_linear(g, r, 0.5)
        report = build_merge_report(g, merged)
        assert report.tensor_count == 3 == len(g)
        assert report.dtype_counts == {"F32": 1, "F16": 1, "I64": 1}
        assert report.max_abs_delta == pytest.approx(1.0)
        assert report.beta == 0.5
