//! Layer kernels for `n × channels × length` activations.
//!
//! Activations are `Array3<f64>` in standard layout; dense layers treat their
//! input as `n × features × 1`.

use ndarray::{Array3, ArrayView3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 1-D convolution (cross-correlation) with filters spanning all input channels.
///
/// `out[b, f, t] = bias[f] + Σ_{ch,u} w[f, ch, u] · x[b, ch, t + u − padding]`
/// with zeros outside the input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Conv1d {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub padding: usize,
    /// `out_channels × in_channels × kernel`, row-major.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Conv1d {
    pub fn zeros(in_channels: usize, out_channels: usize, kernel: usize, padding: usize) -> Self {
        Conv1d {
            in_channels,
            out_channels,
            kernel,
            padding,
            weights: vec![0.0; out_channels * in_channels * kernel],
            bias: vec![0.0; out_channels],
        }
    }

    /// Zero padding that keeps the output length equal to the input length.
    pub fn same(in_channels: usize, out_channels: usize, kernel: usize) -> Self {
        debug_assert!(kernel % 2 == 1, "'same' padding needs an odd kernel");
        Self::zeros(in_channels, out_channels, kernel, (kernel - 1) / 2)
    }

    pub fn output_len(&self, len: usize) -> Result<usize> {
        let padded = len + 2 * self.padding;
        if padded < self.kernel {
            return Err(Error::validation(format!(
                "conv1d: kernel {} longer than padded input {padded}",
                self.kernel
            )));
        }
        Ok(padded - self.kernel + 1)
    }

    #[inline]
    fn w(&self, f: usize, ch: usize, u: usize) -> f64 {
        self.weights[(f * self.in_channels + ch) * self.kernel + u]
    }

    /// Output positions `t` for which tap `u` reads inside the input.
    #[inline]
    fn valid_range(&self, u: usize, len: usize, out_len: usize) -> std::ops::Range<usize> {
        let lo = self.padding.saturating_sub(u);
        let hi = (len + self.padding).saturating_sub(u).min(out_len);
        lo..hi.max(lo)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AvgPool1d {
    pub window: usize,
    pub stride: usize,
    pub padding: usize,
}

impl AvgPool1d {
    pub fn output_len(&self, len: usize) -> Result<usize> {
        let padded = len + 2 * self.padding;
        if self.window == 0 || self.stride == 0 || padded < self.window {
            return Err(Error::validation(format!(
                "avgpool: window {} / stride {} invalid for padded input {padded}",
                self.window, self.stride
            )));
        }
        Ok((padded - self.window) / self.stride + 1)
    }
}

/// Fully connected layer, `weights` is `outputs × inputs` row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Dense {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }
}

fn standard(x: ArrayView3<'_, f64>) -> std::borrow::Cow<'_, [f64]> {
    match x.to_slice() {
        Some(s) => std::borrow::Cow::Borrowed(s),
        None => std::borrow::Cow::Owned(x.iter().copied().collect()),
    }
}

pub fn conv1d_forward(x: ArrayView3<'_, f64>, layer: &Conv1d) -> Result<Array3<f64>> {
    let (n, c, d) = x.dim();
    if c != layer.in_channels {
        return Err(Error::validation(format!(
            "conv1d: expected {} input channels, got {c}",
            layer.in_channels
        )));
    }
    let d_out = layer.output_len(d)?;
    let xs = standard(x);
    let mut out = Array3::<f64>::zeros((n, layer.out_channels, d_out));
    let os = out.as_slice_mut().expect("fresh array is contiguous");
    for b in 0..n {
        for f in 0..layer.out_channels {
            let o = &mut os[(b * layer.out_channels + f) * d_out..][..d_out];
            o.fill(layer.bias[f]);
            for ch in 0..c {
                let xrow = &xs[(b * c + ch) * d..][..d];
                for u in 0..layer.kernel {
                    let w = layer.w(f, ch, u);
                    let r = layer.valid_range(u, d, d_out);
                    let shift = u as isize - layer.padding as isize;
                    let src = &xrow
                        [(r.start as isize + shift) as usize..(r.end as isize + shift) as usize];
                    for (ot, xv) in o[r].iter_mut().zip(src) {
                        *ot += w * xv;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Returns `(dx, dweights, dbias)`, summed over the batch.
pub fn conv1d_backward(
    x: ArrayView3<'_, f64>,
    dout: ArrayView3<'_, f64>,
    layer: &Conv1d,
) -> (Array3<f64>, Vec<f64>, Vec<f64>) {
    let (n, c, d) = x.dim();
    let d_out = dout.dim().2;
    let xs = standard(x);
    let gs = standard(dout);
    let mut dx = Array3::<f64>::zeros((n, c, d));
    let dxs = dx.as_slice_mut().expect("fresh array is contiguous");
    let mut dw = vec![0.0; layer.weights.len()];
    let mut db = vec![0.0; layer.bias.len()];
    for b in 0..n {
        for f in 0..layer.out_channels {
            let g = &gs[(b * layer.out_channels + f) * d_out..][..d_out];
            db[f] += g.iter().sum::<f64>();
            for ch in 0..c {
                let xrow = &xs[(b * c + ch) * d..][..d];
                let dxrow = &mut dxs[(b * c + ch) * d..][..d];
                for u in 0..layer.kernel {
                    let widx = (f * layer.in_channels + ch) * layer.kernel + u;
                    let w = layer.weights[widx];
                    let r = layer.valid_range(u, d, d_out);
                    let shift = u as isize - layer.padding as isize;
                    let lo = (r.start as isize + shift) as usize;
                    let hi = (r.end as isize + shift) as usize;
                    let mut acc = 0.0;
                    for ((gt, xv), dxv) in g[r].iter().zip(&xrow[lo..hi]).zip(&mut dxrow[lo..hi]) {
                        acc += gt * xv;
                        *dxv += w * gt;
                    }
                    dw[widx] += acc;
                }
            }
        }
    }
    (dx, dw, db)
}

pub fn relu(x: &Array3<f64>) -> Array3<f64> {
    x.mapv(|v| v.max(0.0))
}

pub fn relu_backward(x: &Array3<f64>, dout: &Array3<f64>) -> Array3<f64> {
    let mut dx = dout.clone();
    dx.zip_mut_with(x, |g, &v| {
        if v <= 0.0 {
            *g = 0.0;
        }
    });
    dx
}

pub fn avgpool_forward(x: ArrayView3<'_, f64>, layer: &AvgPool1d) -> Result<Array3<f64>> {
    let (n, c, d) = x.dim();
    let d_out = layer.output_len(d)?;
    let xs = standard(x);
    let scale = 1.0 / layer.window as f64;
    let mut out = Array3::<f64>::zeros((n, c, d_out));
    let os = out.as_slice_mut().expect("fresh array is contiguous");
    for (row, orow) in xs.chunks_exact(d).zip(os.chunks_exact_mut(d_out)) {
        for (t, o) in orow.iter_mut().enumerate() {
            let start = (t * layer.stride) as isize - layer.padding as isize;
            let lo = start.max(0) as usize;
            let hi = ((start + layer.window as isize).max(0) as usize).min(d);
            *o = row.get(lo..hi).map_or(0.0, |s| s.iter().sum::<f64>()) * scale;
        }
    }
    Ok(out)
}

pub fn avgpool_backward(dout: &Array3<f64>, input_len: usize, layer: &AvgPool1d) -> Array3<f64> {
    let (n, c, d_out) = dout.dim();
    let d = input_len;
    let gs = dout.as_slice().expect("contiguous gradient");
    let scale = 1.0 / layer.window as f64;
    let mut dx = Array3::<f64>::zeros((n, c, d));
    let dxs = dx.as_slice_mut().expect("fresh array is contiguous");
    for (grow, dxrow) in gs.chunks_exact(d_out).zip(dxs.chunks_exact_mut(d)) {
        for (t, g) in grow.iter().enumerate() {
            let start = (t * layer.stride) as isize - layer.padding as isize;
            let lo = start.max(0) as usize;
            let hi = ((start + layer.window as isize).max(0) as usize).min(d);
            if lo < hi {
                dxrow[lo..hi].iter_mut().for_each(|v| *v += g * scale);
            }
        }
    }
    dx
}

/// Dense forward on `n × inputs × 1` activations.
pub fn dense_forward(x: ArrayView3<'_, f64>, layer: &Dense) -> Result<Array3<f64>> {
    let (n, m, one) = x.dim();
    if m * one != layer.inputs {
        return Err(Error::validation(format!(
            "dense: expected {} inputs, got {}",
            layer.inputs,
            m * one
        )));
    }
    let xs = standard(x);
    let mut out = Array3::<f64>::zeros((n, layer.outputs, 1));
    let os = out.as_slice_mut().expect("fresh array is contiguous");
    for (xrow, orow) in xs
        .chunks_exact(layer.inputs)
        .zip(os.chunks_exact_mut(layer.outputs))
    {
        for ((o, wrow), b) in orow
            .iter_mut()
            .zip(layer.weights.chunks_exact(layer.inputs))
            .zip(&layer.bias)
        {
            *o = b + wrow.iter().zip(xrow).map(|(w, v)| w * v).sum::<f64>();
        }
    }
    Ok(out)
}

pub fn dense_backward(
    x: ArrayView3<'_, f64>,
    dout: &Array3<f64>,
    layer: &Dense,
) -> (Array3<f64>, Vec<f64>, Vec<f64>) {
    let n = x.dim().0;
    let xs = standard(x);
    let gs = dout.as_slice().expect("contiguous gradient");
    let mut dx = Array3::<f64>::zeros((n, layer.inputs, 1));
    let dxs = dx.as_slice_mut().expect("fresh array is contiguous");
    let mut dw = vec![0.0; layer.weights.len()];
    let mut db = vec![0.0; layer.outputs];
    for ((xrow, grow), dxrow) in xs
        .chunks_exact(layer.inputs)
        .zip(gs.chunks_exact(layer.outputs))
        .zip(dxs.chunks_exact_mut(layer.inputs))
    {
        for (o, g) in grow.iter().enumerate() {
            db[o] += g;
            let wrow = &layer.weights[o * layer.inputs..][..layer.inputs];
            let dwrow = &mut dw[o * layer.inputs..][..layer.inputs];
            for i in 0..layer.inputs {
                dwrow[i] += g * xrow[i];
                dxrow[i] += g * wrow[i];
            }
        }
    }
    (dx, dw, db)
}
