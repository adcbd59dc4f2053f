import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dseno import ConfigError, ConvKernel, NumericError, Tensor
from dseno.functional import (
    conv2d_dilated_backward,
    conv2d_dilated_forward,
    gelu,
    gelu_backward,
    global_avg_pool,
    global_avg_pool_backward,
    pointwise_conv,
    pointwise_conv_backward,
    resolution_preserving_padding,
    sigmoid,
    sigmoid_backward,
)
from oracles import conv2d_reference, gelu_reference, sigmoid_reference


def make_kernel(rng, c_out, c_in, k_h, k_w, dilation, bias=True, mode="zero",
                dtype=np.float64):
    w = rng.standard_normal((c_out, c_in, k_h, k_w)).astype(dtype)
    b = rng.standard_normal((c_out,)).astype(dtype) if bias else None
    return ConvKernel(weight=Tensor(w), bias=Tensor(b) if b is not None else None,
                      dilation=dilation, padding_mode=mode)


# -- geometry ----------------------------------------------------------------

@given(
    k_h=st.sampled_from([1, 3, 5, 7]),
    k_w=st.sampled_from([1, 3, 5, 7]),
    l_x=st.integers(1, 40),
    l_y=st.integers(1, 40),
)
def test_padding_formula(k_h, k_w, l_x, l_y):
    p_h, p_w = resolution_preserving_padding(k_h, k_w, (l_x, l_y))
    assert p_h == l_y * (k_h - 1) // 2
    assert p_w == l_x * (k_w - 1) // 2


@settings(max_examples=30, deadline=None)
@given(
    h=st.integers(4, 16),
    w=st.integers(4, 16),
    k=st.sampled_from([1, 3, 5]),
    l_x=st.integers(1, 6),
    l_y=st.integers(1, 6),
    mode=st.sampled_from(["zero", "circular"]),
)
def test_resolution_preserved_for_any_geometry(h, w, k, l_x, l_y, mode):
    rng = np.random.default_rng(0)
    kern = make_kernel(rng, 2, 3, k, k, (l_x, l_y), mode=mode)
    x = rng.standard_normal((1, 3, h, w))
    out = conv2d_dilated_forward(x, kern)
    assert out.shape == (1, 2, h, w)


def test_even_kernel_rejected():
    rng = np.random.default_rng(0)
    with pytest.raises(ConfigError):
        make_kernel(rng, 1, 1, 2, 3, (1, 1))


def test_nonpositive_dilation_rejected():
    rng = np.random.default_rng(0)
    with pytest.raises(ConfigError):
        make_kernel(rng, 1, 1, 3, 3, (0, 1))


def test_non_preserving_padding_rejected():
    rng = np.random.default_rng(0)
    w = rng.standard_normal((1, 1, 3, 3))
    with pytest.raises(ConfigError):
        ConvKernel(weight=Tensor(w), dilation=(2, 2), padding=(1, 1))
    # Explicitly opting out of the invariant allows it.
    k = ConvKernel(weight=Tensor(w), dilation=(2, 2), padding=(0, 0),
                   resolution_preserving=False)
    out = conv2d_dilated_forward(np.ones((1, 1, 8, 8)), k)
    assert out.shape == (1, 1, 4, 4)


def test_output_smaller_than_one_rejected():
    rng = np.random.default_rng(0)
    w = rng.standard_normal((1, 1, 3, 3))
    k = ConvKernel(weight=Tensor(w), dilation=(8, 8), padding=(0, 0),
                   resolution_preserving=False)
    with pytest.raises(ConfigError):
        conv2d_dilated_forward(np.ones((1, 1, 8, 8)), k)


def test_channel_and_dtype_mismatches_rejected():
    rng = np.random.default_rng(0)
    kern = make_kernel(rng, 2, 3, 3, 3, (1, 1))
    with pytest.raises(ConfigError):
        conv2d_dilated_forward(np.ones((1, 4, 6, 6)), kern)
    with pytest.raises(ConfigError):
        conv2d_dilated_forward(np.ones((1, 3, 6, 6), dtype=np.float32), kern)


def test_non_finite_input_raises_numeric_error():
    rng = np.random.default_rng(0)
    kern = make_kernel(rng, 1, 1, 3, 3, (1, 1))
    bad = np.ones((1, 1, 5, 5))
    bad[0, 0, 2, 2] = np.nan
    with pytest.raises(NumericError):
        conv2d_dilated_forward(bad, kern)


# -- values against the reference -------------------------------------------------

def test_forward_matches_reference_spot_checks(rng):
    for mode in ("zero", "circular"):
        for (c_in, c_out, k_h, k_w, lx, ly, h, w) in [
            (1, 1, 3, 3, 1, 1, 5, 5),
            (2, 3, 3, 5, 2, 3, 7, 9),
            (3, 2, 5, 3, 4, 1, 9, 6),
            (2, 2, 1, 1, 5, 7, 4, 4),
        ]:
            kern = make_kernel(rng, c_out, c_in, k_h, k_w, (lx, ly), mode=mode)
            x = rng.standard_normal((2, c_in, h, w))
            got = conv2d_dilated_forward(x, kern).data
            want = conv2d_reference(x, kern.weight.data, kern.bias.data,
                                    (lx, ly), kern.padding, mode)
            assert np.max(np.abs(got - want)) <= 1e-12


def test_circular_padding_commutes_with_roll(rng):
    kern = make_kernel(rng, 2, 2, 3, 3, (2, 3), mode="circular")
    x = rng.standard_normal((1, 2, 8, 10))
    y = conv2d_dilated_forward(x, kern).data
    xr = np.roll(x, shift=(3, 4), axis=(2, 3))
    yr = conv2d_dilated_forward(xr, kern).data
    assert np.allclose(np.roll(y, shift=(3, 4), axis=(2, 3)), yr, atol=1e-12)


def test_dilation_axes_are_direction_dependent(rng):
    # l_x stretches the kernel along W only; a kernel that differs only along
    # its width must see different values when l_x changes, and identical ones
    # when the input is constant along W.
    kern_a = make_kernel(rng, 1, 1, 3, 3, (1, 1), bias=False)
    kern_b = ConvKernel(weight=Tensor(kern_a.weight.data.copy()), bias=None,
                        dilation=(3, 1))
    x = np.broadcast_to(np.arange(9.0)[:, None], (9, 9)).copy()[None, None]
    ya = conv2d_dilated_forward(x, kern_a).data
    yb = conv2d_dilated_forward(x, kern_b).data
    # Input constant along W: widening taps along W must not change anything.
    assert np.allclose(ya[:, :, 2:-2, 3:-3], yb[:, :, 2:-2, 3:-3], atol=1e-12)
    x_t = np.ascontiguousarray(x.transpose(0, 1, 3, 2))
    yb_t = conv2d_dilated_forward(x_t, kern_b).data
    assert not np.allclose(yb_t[:, :, 3:-3, 2:-2],
                           ya.transpose(0, 1, 3, 2)[:, :, 3:-3, 2:-2], atol=1e-6)


def test_pointwise_equals_1x1_conv_bitwise(rng):
    c_in, c_out = 5, 4
    w = rng.standard_normal((c_out, c_in)).astype(np.float32)
    b = rng.standard_normal((c_out,)).astype(np.float32)
    x = rng.standard_normal((3, c_in, 6, 7)).astype(np.float32)
    kern = ConvKernel(weight=Tensor(w.reshape(c_out, c_in, 1, 1)), bias=Tensor(b),
                      dilation=(1, 1))
    via_conv = conv2d_dilated_forward(x, kern).data
    via_pointwise = pointwise_conv(x, w, b).data
    assert via_conv.tobytes() == via_pointwise.tobytes()


# -- backward rules against finite differences (small, exact checks live in
#    the gradient suite; these are quick spot checks) ------------------------------

def _fd(fun, arr, eps=1e-6):
    g = np.zeros_like(arr)
    flat = arr.reshape(-1)
    gf = g.reshape(-1)
    for i in range(flat.size):
        old = flat[i]
        flat[i] = old + eps
        plus = fun()
        flat[i] = old - eps
        minus = fun()
        flat[i] = old
        gf[i] = (plus - minus) / (2 * eps)
    return g


def test_conv_backward_matches_fd(rng):
    kern = make_kernel(rng, 2, 2, 3, 3, (2, 1))
    x = rng.standard_normal((1, 2, 5, 6))
    cot = rng.standard_normal((1, 2, 5, 6))

    def loss():
        return float((conv2d_dilated_forward(x, kern).data * cot).sum())

    gx, gw, gb = conv2d_dilated_backward(x, kern, cot)
    assert np.allclose(gx.data, _fd(loss, x), atol=1e-7)
    assert np.allclose(gw.data, _fd(loss, kern.weight.data), atol=1e-7)
    assert np.allclose(gb.data, _fd(loss, kern.bias.data), atol=1e-7)


def test_conv_backward_circular_matches_fd(rng):
    kern = make_kernel(rng, 1, 2, 3, 3, (3, 2), mode="circular", bias=False)
    x = rng.standard_normal((2, 2, 4, 5))
    cot = rng.standard_normal((2, 1, 4, 5))

    def loss():
        return float((conv2d_dilated_forward(x, kern).data * cot).sum())

    gx, gw, gb = conv2d_dilated_backward(x, kern, cot)
    assert gb is None
    assert np.allclose(gx.data, _fd(loss, x), atol=1e-7)
    assert np.allclose(gw.data, _fd(loss, kern.weight.data), atol=1e-7)


def test_pointwise_backward_matches_fd(rng):
    w = rng.standard_normal((3, 4))
    b = rng.standard_normal((3,))
    x = rng.standard_normal((2, 4, 3, 3))
    cot = rng.standard_normal((2, 3, 3, 3))

    def loss():
        return float((pointwise_conv(x, w, b).data * cot).sum())

    gx, gw, gb = pointwise_conv_backward(x, w, cot, has_bias=True)
    assert np.allclose(gx.data, _fd(loss, x), atol=1e-7)
    assert np.allclose(gw.data, _fd(loss, w), atol=1e-7)
    assert np.allclose(gb.data, cot.sum(axis=(0, 2, 3)), atol=1e-12)


def test_pool_forward_and_backward(rng):
    x = rng.standard_normal((2, 3, 4, 5))
    z = global_avg_pool(x).data
    assert z.shape == (2, 3, 1, 1)
    assert np.allclose(z[:, :, 0, 0], x.mean(axis=(2, 3)), atol=1e-15)
    g = rng.standard_normal((2, 3, 1, 1))
    gx = global_avg_pool_backward(x.shape, g).data
    assert np.allclose(gx, np.broadcast_to(g / 20.0, x.shape), atol=1e-15)


# -- activations -------------------------------------------------------------------

def test_gelu_matches_reference(rng):
    x = rng.standard_normal((50,)) * 3
    assert np.max(np.abs(gelu(x).data - gelu_reference(x))) < 1e-14


def test_gelu_known_values():
    # gelu(0) = 0 and gelu is asymptotically the identity for large x.
    assert gelu(np.array([0.0])).data[0] == 0.0
    assert abs(gelu(np.array([10.0])).data[0] - 10.0) < 1e-12
    assert abs(gelu(np.array([-10.0])).data[0]) < 1e-12


def test_gelu_backward_matches_fd(rng):
    x = rng.standard_normal((40,))
    cot = rng.standard_normal((40,))

    def loss():
        return float((gelu(x).data * cot).sum())

    assert np.allclose(gelu_backward(x, cot).data, _fd(loss, x), atol=1e-8)


def test_sigmoid_matches_reference_and_is_stable(rng):
    x = rng.standard_normal((50,)) * 4
    assert np.max(np.abs(sigmoid(x).data - sigmoid_reference(x))) < 1e-14
    extreme = np.array([-1000.0, 1000.0])
    s = sigmoid(extreme).data
    assert s[0] == 0.0 and s[1] == 1.0  # saturates without overflow


def test_sigmoid_backward_matches_fd(rng):
    x = rng.standard_normal((30,))
    cot = rng.standard_normal((30,))

    def loss():
        return float((sigmoid(x).data * cot).sum())

    assert np.allclose(sigmoid_backward(x, cot).data, _fd(loss, x), atol=1e-8)


def test_activations_preserve_float32():
    x = np.linspace(-2, 2, 11, dtype=np.float32)
    assert gelu(x).dtype == np.float32
    assert sigmoid(x).dtype == np.float32
    assert gelu_backward(x, x).dtype == np.float32
    assert sigmoid_backward(x, x).dtype == np.float32


# -- batch chunking equivalence --------------------------------------------------------

def test_chunked_gemm_equals_unchunked(rng, monkeypatch):
    import dseno.functional as F

    kern = make_kernel(rng, 3, 2, 3, 3, (2, 2), dtype=np.float32)
    x = rng.standard_normal((7, 2, 10, 11)).astype(np.float32)
    full = conv2d_dilated_forward(x, kern).data
    gx_full, gw_full, gb_full = (t.data for t in conv2d_dilated_backward(x, kern, full))
    monkeypatch.setattr(F, "_COLS_BYTE_LIMIT", 1)  # force one-sample chunks
    chunked = conv2d_dilated_forward(x, kern).data
    assert full.tobytes() == chunked.tobytes()
    gx_c, gw_c, gb_c = (t.data for t in conv2d_dilated_backward(x, kern, full))
    assert gx_full.tobytes() == gx_c.tobytes()
    assert np.allclose(gw_full, gw_c, rtol=1e-4, atol=1e-4)  # summation order differs
    assert gb_full.tobytes() == gb_c.tobytes()
