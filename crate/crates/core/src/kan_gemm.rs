//! Functional KAN layer semantics and their GEMM lowering.
//!
//! A KAN layer with `K` inputs, `N` outputs and a `(G, P)` grid is the
//! product of the B-spline activation matrix `(BS, (G+P)K)` with a
//! band-major coefficient matrix `((G+P)K, N)`: rows `f(G+P) .. (f+1)(G+P)`
//! belong to input feature `f`. An optional ReLU bias branch adds
//! `relu(x) * W_b` with `W_b` of shape `(K, N)`.
//!
//! The integer path (`*_forward_quant`) is the golden model the systolic
//! simulator must reproduce bit for bit: u8 input codes, int8 weights,
//! B-spline codes in `[0, 127]`, checked int32 accumulation.

use std::sync::Arc;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::bspline_unit::{build_lut, evaluate, BSplineLut, QuantParams, SparseActivationBlock, ACTIVATION_MAX};
use crate::error::{Error, Result};
use crate::spline::{basis_row, UniformGrid};
use crate::tiling::{GemmOp, OpRole};

/// Integer ReLU on input codes: `min(max(x_q - zero, 0) >> shift, 127)`.
///
/// `shift` is 1 when the positive code range would not fit seven bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReluQuant {
    pub zero: i32,
    pub shift: u32,
}

impl ReluQuant {
    pub fn for_zero(zero: i32) -> Self {
        let shift = if 255 - zero > ACTIVATION_MAX as i32 { 1 } else { 0 };
        Self { zero, shift }
    }

    pub fn code(&self, x_q: u8) -> u8 {
        (((x_q as i32 - self.zero).max(0)) >> self.shift).min(ACTIVATION_MAX as i32) as u8
    }

    /// Real value of one ReLU code step.
    pub fn unit(&self, x_scale: f64) -> f64 {
        x_scale * (1u32 << self.shift) as f64
    }
}

fn checked_mac(acc: i32, a: u8, w: i8, at: impl FnOnce() -> String) -> Result<i32> {
    (a as i32)
        .checked_mul(w as i32)
        .and_then(|prod| acc.checked_add(prod))
        .ok_or_else(|| Error::AccumulatorOverflow(at()))
}

/// Parameters of one KAN layer.
#[derive(Debug, Clone)]
pub struct KanLayerParams {
    in_features: usize,
    out_features: usize,
    grid: UniformGrid,
    quant: QuantParams,
    lut: Arc<BSplineLut>,
    coeffs: Array2<i8>,
    coeff_scale: f64,
    bias_weights: Option<Array2<i8>>,
}

impl KanLayerParams {
    /// `grid` is snapped onto the quantizer (see
    /// [`QuantParams::represented_grid`]) so float and integer paths agree.
    pub fn new(
        grid: &UniformGrid,
        quant: QuantParams,
        coeffs: Array2<i8>,
        coeff_scale: f64,
        bias_weights: Option<Array2<i8>>,
    ) -> Result<Self> {
        let grid = quant.represented_grid(grid);
        quant.check_grid(&grid)?;
        let nb = grid.num_basis();
        if !coeffs.nrows().is_multiple_of(nb) || coeffs.nrows() == 0 || coeffs.ncols() == 0 {
            return Err(Error::Shape(format!(
                "coefficient matrix {:?} is not ((G+P)K, N) with G+P = {nb}",
                coeffs.dim()
            )));
        }
        let in_features = coeffs.nrows() / nb;
        let out_features = coeffs.ncols();
        if let Some(b) = &bias_weights {
            if b.dim() != (in_features, out_features) {
                return Err(Error::Shape(format!(
                    "bias weights {:?} expected ({in_features}, {out_features})",
                    b.dim()
                )));
            }
        }
        if !(coeff_scale > 0.0) {
            return Err(Error::InvalidQuant(format!("coefficient scale must be positive, got {coeff_scale}")));
        }
        let lut = Arc::new(build_lut(grid.degree(), &quant)?);
        Ok(Self { in_features, out_features, grid, quant, lut, coeffs, coeff_scale, bias_weights })
    }

    pub fn in_features(&self) -> usize {
        self.in_features
    }

    pub fn out_features(&self) -> usize {
        self.out_features
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn quant(&self) -> &QuantParams {
        &self.quant
    }

    pub fn lut(&self) -> &BSplineLut {
        &self.lut
    }

    /// Swap in a different table, e.g. a deliberately corrupted one.
    pub fn with_lut(mut self, lut: BSplineLut) -> Self {
        self.lut = Arc::new(lut);
        self
    }

    pub fn coeffs(&self) -> &Array2<i8> {
        &self.coeffs
    }

    pub fn coeff_scale(&self) -> f64 {
        self.coeff_scale
    }

    pub fn bias_weights(&self) -> Option<&Array2<i8>> {
        self.bias_weights.as_ref()
    }

    pub fn relu(&self) -> ReluQuant {
        ReluQuant::for_zero(self.quant.x_zero)
    }

    /// Real value of one int32 accumulator step.
    pub fn acc_unit(&self) -> f64 {
        self.coeff_scale / self.quant.lut_scale
    }

    /// Real coefficient matrix.
    pub fn coeffs_float(&self) -> Array2<f64> {
        self.coeffs.mapv(|c| c as f64 * self.coeff_scale)
    }

    /// Real bias weights, scaled so the integer bias products land in the
    /// same accumulator unit as the spline products.
    pub fn bias_weights_float(&self) -> Option<Array2<f64>> {
        let scale = self.acc_unit() / self.relu().unit(self.quant.x_scale);
        self.bias_weights.as_ref().map(|b| b.mapv(|w| w as f64 * scale))
    }

    /// Input domain magnitude, used to map a previous layer's output range.
    pub fn input_absmax(&self) -> f64 {
        let (lo, hi) = self.grid.domain();
        lo.abs().max(hi.abs())
    }
}

fn check_inputs<T>(inputs: &ArrayView2<T>, k: usize) -> Result<()> {
    if inputs.ncols() != k {
        return Err(Error::Shape(format!("input has {} features, layer expects {k}", inputs.ncols())));
    }
    Ok(())
}

/// B-spline unit output for every input code, row-major `(BS, K)`.
pub fn activation_blocks(inputs: ArrayView2<u8>, params: &KanLayerParams) -> Result<Array2<SparseActivationBlock>> {
    check_inputs(&inputs, params.in_features)?;
    Ok(inputs.mapv(|x_q| evaluate(x_q, &params.grid, &params.lut, &params.quant)))
}

/// Dense activation matrix `(BS, (G+P)K)` with each block scattered into
/// its feature band.
pub fn build_activation_matrix(inputs: ArrayView2<u8>, params: &KanLayerParams) -> Result<Array2<u8>> {
    let blocks = activation_blocks(inputs, params)?;
    let nb = params.grid.num_basis();
    let mut out = Array2::zeros((inputs.nrows(), nb * params.in_features));
    for ((r, f), block) in blocks.indexed_iter() {
        for (j, &v) in block.values.iter().enumerate() {
            out[[r, f * nb + block.select + j]] = v;
        }
    }
    Ok(out)
}

/// ReLU codes for the bias branch or a dense layer.
pub fn relu_matrix(inputs: ArrayView2<u8>, relu: ReluQuant) -> Array2<u8> {
    inputs.mapv(|x| relu.code(x))
}

/// Float forward pass: direct sum over features and basis functions plus
/// the ReLU branch. Inputs are clipped into the grid domain.
pub fn kan_layer_forward_float(inputs: ArrayView2<f64>, params: &KanLayerParams) -> Result<Array2<f64>> {
    check_inputs(&inputs, params.in_features)?;
    let nb = params.grid.num_basis();
    let coeffs = params.coeffs_float();
    let bias = params.bias_weights_float();
    let mut out = Array2::zeros((inputs.nrows(), params.out_features));
    for (r, row) in inputs.outer_iter().enumerate() {
        for (f, &x) in row.iter().enumerate() {
            let basis = basis_row(&params.grid, params.grid.clamp_to_domain(x));
            for n in 0..params.out_features {
                let mut phi = 0.0;
                for (i, b) in basis.iter().enumerate() {
                    phi += coeffs[[f * nb + i, n]] * b;
                }
                out[[r, n]] += phi;
                if let Some(w) = &bias {
                    out[[r, n]] += w[[f, n]] * x.max(0.0);
                }
            }
        }
    }
    Ok(out)
}

/// Integer forward pass: `sum_j c[select + j] * values[j]` per feature plus
/// the ReLU branch, accumulated in checked int32.
pub fn kan_layer_forward_quant(inputs: ArrayView2<u8>, params: &KanLayerParams) -> Result<Array2<i32>> {
    let blocks = activation_blocks(inputs, params)?;
    let nb = params.grid.num_basis();
    let relu = params.relu();
    let mut out = Array2::<i32>::zeros((inputs.nrows(), params.out_features));
    for ((r, f), block) in blocks.indexed_iter() {
        let base = f * nb + block.select;
        for n in 0..params.out_features {
            let mut acc = out[[r, n]];
            for (j, &v) in block.values.iter().enumerate() {
                acc = checked_mac(acc, v, params.coeffs[[base + j, n]], || format!("row {r} output {n}"))?;
            }
            if let Some(w) = &params.bias_weights {
                acc = checked_mac(acc, relu.code(inputs[[r, f]]), w[[f, n]], || format!("row {r} output {n}"))?;
            }
            out[[r, n]] = acc;
        }
    }
    Ok(out)
}

/// Plain MLP layer with the activation applied first: `relu(x) W`.
#[derive(Debug, Clone)]
pub struct DenseLayerParams {
    x_scale: f64,
    x_zero: i32,
    weights: Array2<i8>,
    weight_scale: f64,
}

impl DenseLayerParams {
    pub fn new(x_scale: f64, x_zero: i32, weights: Array2<i8>, weight_scale: f64) -> Result<Self> {
        if !(x_scale > 0.0) || !(weight_scale > 0.0) {
            return Err(Error::InvalidQuant("dense layer scales must be positive".into()));
        }
        if !(0..=255).contains(&x_zero) {
            return Err(Error::InvalidQuant(format!("x_zero {x_zero} outside [0, 255]")));
        }
        if weights.is_empty() {
            return Err(Error::Shape("empty dense weight matrix".into()));
        }
        Ok(Self { x_scale, x_zero, weights, weight_scale })
    }

    /// Quantizer for inputs in `[-absmax, absmax]`.
    pub fn symmetric_input(absmax: f64) -> (f64, i32) {
        let scale = 2.0 * absmax / 255.0;
        (scale, 128)
    }

    pub fn in_features(&self) -> usize {
        self.weights.nrows()
    }

    pub fn out_features(&self) -> usize {
        self.weights.ncols()
    }

    pub fn weights(&self) -> &Array2<i8> {
        &self.weights
    }

    pub fn x_scale(&self) -> f64 {
        self.x_scale
    }

    pub fn x_zero(&self) -> i32 {
        self.x_zero
    }

    pub fn relu(&self) -> ReluQuant {
        ReluQuant::for_zero(self.x_zero)
    }

    pub fn acc_unit(&self) -> f64 {
        self.weight_scale * self.relu().unit(self.x_scale)
    }

    pub fn dequantize(&self, x_q: u8) -> f64 {
        (x_q as i32 - self.x_zero) as f64 * self.x_scale
    }

    pub fn input_absmax(&self) -> f64 {
        (self.x_zero as f64).max(255.0 - self.x_zero as f64) * self.x_scale
    }
}

/// Integer product `relu(x_q) W` for a plain dense layer.
pub fn dense_forward_quant(inputs: ArrayView2<u8>, params: &DenseLayerParams) -> Result<Array2<i32>> {
    check_inputs(&inputs, params.in_features())?;
    let codes = relu_matrix(inputs, params.relu());
    int_gemm(codes.view(), params.weights.view())
}

/// Checked u8 x i8 GEMM with int32 accumulation.
pub fn int_gemm(a: ArrayView2<u8>, w: ArrayView2<i8>) -> Result<Array2<i32>> {
    if a.ncols() != w.nrows() {
        return Err(Error::Shape(format!("GEMM inner dims {} vs {}", a.ncols(), w.nrows())));
    }
    let mut out = Array2::<i32>::zeros((a.nrows(), w.ncols()));
    for r in 0..a.nrows() {
        for n in 0..w.ncols() {
            let mut acc = 0i32;
            for k in 0..a.ncols() {
                acc = checked_mac(acc, a[[r, k]], w[[k, n]], || format!("row {r} output {n}"))?;
            }
            out[[r, n]] = acc;
        }
    }
    Ok(out)
}

/// 2-D convolution geometry, NHWC activations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvGeometry {
    pub c_in: usize,
    pub c_out: usize,
    pub k_h: usize,
    pub k_w: usize,
    pub h: usize,
    pub w: usize,
    pub stride: usize,
    pub pad: usize,
}

impl ConvGeometry {
    pub fn validate(&self) -> Result<()> {
        let dims = [self.c_in, self.c_out, self.k_h, self.k_w, self.h, self.w, self.stride];
        if dims.contains(&0) {
            return Err(Error::ConvGeometry(format!("zero dimension in {self:?}")));
        }
        if self.h + 2 * self.pad < self.k_h || self.w + 2 * self.pad < self.k_w {
            return Err(Error::ConvGeometry(format!("kernel larger than padded input in {self:?}")));
        }
        Ok(())
    }

    pub fn out_h(&self) -> usize {
        (self.h + 2 * self.pad - self.k_h) / self.stride + 1
    }

    pub fn out_w(&self) -> usize {
        (self.w + 2 * self.pad - self.k_w) / self.stride + 1
    }

    /// GEMM reduction width `C_in k_h k_w`.
    pub fn patch_len(&self) -> usize {
        self.c_in * self.k_h * self.k_w
    }
}

/// im2col lowering of a ConvKAN layer: `K = C_in k_h k_w`,
/// `rows = BS H_out W_out`, `N = C_out`.
pub fn conv_to_gemm(geom: &ConvGeometry, batch: usize, grid: UniformGrid) -> Result<GemmOp> {
    geom.validate()?;
    if batch == 0 {
        return Err(Error::ConvGeometry("batch must be positive".into()));
    }
    GemmOp::kan(batch * geom.out_h() * geom.out_w(), geom.patch_len(), geom.c_out, grid)
}

/// Patch matrix of an NHWC feature map stored as `(BS H W, C)`. Columns are
/// ordered `(c, ky, kx)`; padding reads `pad_code`.
pub fn im2col(fmap: &FeatureMap, geom: &ConvGeometry, pad_code: u8) -> Result<Array2<u8>> {
    geom.validate()?;
    if (fmap.height, fmap.width, fmap.channels()) != (geom.h, geom.w, geom.c_in) {
        return Err(Error::Shape(format!(
            "feature map {}x{}x{} does not match conv input {}x{}x{}",
            fmap.height,
            fmap.width,
            fmap.channels(),
            geom.h,
            geom.w,
            geom.c_in
        )));
    }
    let (oh, ow) = (geom.out_h(), geom.out_w());
    let mut out = Array2::from_elem((fmap.batch * oh * ow, geom.patch_len()), pad_code);
    for b in 0..fmap.batch {
        for oy in 0..oh {
            for ox in 0..ow {
                let row = (b * oh + oy) * ow + ox;
                for c in 0..geom.c_in {
                    for ky in 0..geom.k_h {
                        for kx in 0..geom.k_w {
                            let iy = (oy * geom.stride + ky) as isize - geom.pad as isize;
                            let ix = (ox * geom.stride + kx) as isize - geom.pad as isize;
                            if iy < 0 || ix < 0 || iy >= geom.h as isize || ix >= geom.w as isize {
                                continue;
                            }
                            let src = (b * geom.h + iy as usize) * geom.w + ix as usize;
                            out[[row, (c * geom.k_h + ky) * geom.k_w + kx]] = fmap.data[[src, c]];
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Activations between layers: NHWC, stored as `(batch * height * width, channels)`.
/// MLP activations are `1 x 1` maps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureMap {
    pub batch: usize,
    pub height: usize,
    pub width: usize,
    pub data: Array2<u8>,
}

impl FeatureMap {
    pub fn flat(data: Array2<u8>) -> Self {
        Self { batch: data.nrows(), height: 1, width: 1, data }
    }

    pub fn channels(&self) -> usize {
        self.data.ncols()
    }
}

/// Fixed-point requantizer from an int32 accumulator to the next layer's
/// u8 input code: `clamp(round(acc * multiplier / 2^shift) + zero, 0, 255)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Requantizer {
    pub multiplier: i32,
    pub shift: u32,
    pub zero: i32,
}

impl Requantizer {
    /// Closest fixed-point form of a positive real `ratio`.
    pub fn from_ratio(ratio: f64, zero: i32) -> Result<Self> {
        if !(ratio > 0.0) || !ratio.is_finite() {
            return Err(Error::InvalidQuant(format!("requantization ratio must be positive, got {ratio}")));
        }
        // ratio = m * 2^e with m in [0.5, 1)
        let mut m = ratio;
        let mut e = 0i32;
        while m >= 1.0 {
            m /= 2.0;
            e += 1;
        }
        while m < 0.5 {
            m *= 2.0;
            e -= 1;
        }
        let mut multiplier = (m * (1u64 << 31) as f64).round() as i64;
        if multiplier == 1i64 << 31 {
            multiplier /= 2;
            e += 1;
        }
        let shift = 31 - e;
        if !(1..=62).contains(&shift) {
            return Err(Error::InvalidQuant(format!("requantization ratio {ratio} out of range")));
        }
        Ok(Self { multiplier: multiplier as i32, shift: shift as u32, zero })
    }

    pub fn apply(&self, acc: i32) -> u8 {
        let prod = acc as i64 * self.multiplier as i64;
        let rounded = (prod + (1i64 << (self.shift - 1))) >> self.shift;
        (rounded + self.zero as i64).clamp(0, 255) as u8
    }
}

/// Parameters of one layer of a network.
#[derive(Debug, Clone)]
pub enum LayerParams {
    Kan { params: KanLayerParams, conv: Option<ConvGeometry> },
    Dense(DenseLayerParams),
}

impl LayerParams {
    pub fn in_features(&self) -> usize {
        match self {
            LayerParams::Kan { params, .. } => params.in_features(),
            LayerParams::Dense(d) => d.in_features(),
        }
    }

    pub fn out_features(&self) -> usize {
        match self {
            LayerParams::Kan { params, .. } => params.out_features(),
            LayerParams::Dense(d) => d.out_features(),
        }
    }

    pub fn input_zero(&self) -> i32 {
        match self {
            LayerParams::Kan { params, .. } => params.quant().x_zero,
            LayerParams::Dense(d) => d.x_zero(),
        }
    }

    pub fn input_scale(&self) -> f64 {
        match self {
            LayerParams::Kan { params, .. } => params.quant().x_scale,
            LayerParams::Dense(d) => d.x_scale(),
        }
    }

    pub fn input_absmax(&self) -> f64 {
        match self {
            LayerParams::Kan { params, .. } => params.input_absmax(),
            LayerParams::Dense(d) => d.input_absmax(),
        }
    }

    pub fn acc_unit(&self) -> f64 {
        match self {
            LayerParams::Kan { params, .. } => params.acc_unit(),
            LayerParams::Dense(d) => d.acc_unit(),
        }
    }

    pub fn conv(&self) -> Option<&ConvGeometry> {
        match self {
            LayerParams::Kan { conv, .. } => conv.as_ref(),
            LayerParams::Dense(_) => None,
        }
    }

    /// GEMM input rows for this layer: the feature map itself, or its
    /// im2col patches for a conv layer.
    pub fn gemm_input(&self, fmap: &FeatureMap) -> Result<Array2<u8>> {
        match self.conv() {
            Some(geom) => im2col(fmap, geom, self.input_zero() as u8),
            None => {
                if fmap.height != 1 || fmap.width != 1 {
                    return Err(Error::Shape("dense/KAN layer fed a spatial feature map".into()));
                }
                check_inputs(&fmap.data.view(), self.in_features())?;
                Ok(fmap.data.clone())
            }
        }
    }

    /// Output feature-map shape `(height, width)`.
    pub fn output_hw(&self, fmap: &FeatureMap) -> (usize, usize) {
        match self.conv() {
            Some(g) => (g.out_h(), g.out_w()),
            None => (fmap.height, fmap.width),
        }
    }

    /// Integer forward pass of the layer's GEMM(s) on prepared input rows.
    pub fn forward_quant(&self, rows: ArrayView2<u8>) -> Result<Array2<i32>> {
        match self {
            LayerParams::Kan { params, .. } => kan_layer_forward_quant(rows, params),
            LayerParams::Dense(d) => dense_forward_quant(rows, d),
        }
    }

    /// Lowered GEMM ops, in schedule order (spline product, then bias branch).
    pub fn gemm_ops(&self, rows: usize) -> Result<Vec<GemmOp>> {
        match self {
            LayerParams::Kan { params, .. } => {
                let mut ops = vec![GemmOp::kan(rows, params.in_features(), params.out_features(), *params.grid())?];
                if params.bias_weights().is_some() {
                    ops.push(GemmOp::dense(rows, params.in_features(), params.out_features())?.with_role(OpRole::Bias));
                }
                Ok(ops)
            }
            LayerParams::Dense(d) => Ok(vec![GemmOp::dense(rows, d.in_features(), d.out_features())?]),
        }
    }
}

/// A chain of layers with requantizers between consecutive layers.
#[derive(Debug, Clone)]
pub struct Network {
    pub layers: Vec<LayerParams>,
    /// `requant[i]` maps layer `i`'s accumulators onto layer `i + 1`'s codes.
    pub requant: Vec<Requantizer>,
}

impl Network {
    /// Calibrate requantizers from a calibration batch: layer `i`'s largest
    /// accumulator magnitude is mapped onto layer `i + 1`'s input range.
    pub fn calibrate(layers: Vec<LayerParams>, calibration: &FeatureMap) -> Result<Self> {
        let mut requant = Vec::with_capacity(layers.len().saturating_sub(1));
        let mut fmap = calibration.clone();
        for i in 0..layers.len() {
            let rows = layers[i].gemm_input(&fmap)?;
            let acc = layers[i].forward_quant(rows.view())?;
            if let Some(next) = layers.get(i + 1) {
                let absmax = acc.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0).max(1) as f64;
                let ratio = next.input_absmax() / (absmax * next.input_scale());
                let rq = Requantizer::from_ratio(ratio, next.input_zero())?;
                let (h, w) = layers[i].output_hw(&fmap);
                fmap = FeatureMap { batch: fmap.batch, height: h, width: w, data: acc.mapv(|a| rq.apply(a)) };
                requant.push(rq);
            }
        }
        Ok(Self { layers, requant })
    }

    /// Requantize layer `i`'s output into layer `i + 1`'s input feature map.
    pub fn next_feature_map(&self, i: usize, input: &FeatureMap, acc: &Array2<i32>) -> FeatureMap {
        let rq = self.requant[i];
        let (h, w) = self.layers[i].output_hw(input);
        FeatureMap { batch: input.batch, height: h, width: w, data: acc.mapv(|a| rq.apply(a)) }
    }

    /// Integer forward pass; returns every layer's accumulators.
    pub fn forward_quant(&self, input: &FeatureMap) -> Result<Vec<Array2<i32>>> {
        let mut outs = Vec::with_capacity(self.layers.len());
        let mut fmap = input.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            let rows = layer.gemm_input(&fmap)?;
            let acc = layer.forward_quant(rows.view())?;
            if i + 1 < self.layers.len() {
                fmap = self.next_feature_map(i, &fmap, &acc);
            }
            outs.push(acc);
        }
        Ok(outs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn layer(k: usize, n: usize, g: usize, p: usize, fill: i8, bias: bool) -> KanLayerParams {
        let grid = UniformGrid::over_domain(-1.0, 1.0, g, p).unwrap();
        let q = QuantParams::calibrate(&grid, QuantParams::default_lut_scale(p)).unwrap();
        let coeffs = Array2::from_elem(((g + p) * k, n), fill);
        let b = bias.then(|| Array2::from_elem((k, n), 1i8));
        KanLayerParams::new(&grid, q, coeffs, 1.0 / 64.0, b).unwrap()
    }

    #[test]
    fn activation_matrix_shape_and_bands() {
        let p = layer(2, 1, 3, 3, 1, false);
        let inputs = array![[40u8, 200u8]];
        let m = build_activation_matrix(inputs.view(), &p).unwrap();
        assert_eq!(m.dim(), (1, 12));
        for f in 0..2 {
            let band = m.slice(ndarray::s![0, f * 6..(f + 1) * 6]);
            assert!(band.iter().filter(|&&v| v != 0).count() <= 4);
            let sum: f64 = band.iter().map(|&v| v as f64 / 192.0).sum();
            assert!((sum - 1.0).abs() <= 4.0 / 192.0);
        }
    }

    #[test]
    fn zero_coefficients_give_zero() {
        let p = layer(3, 2, 3, 3, 0, false);
        let x = array![[0.3, -0.2, 0.9]];
        assert!(kan_layer_forward_float(x.view(), &p).unwrap().iter().all(|&v| v == 0.0));
        let xq = array![[10u8, 100, 250]];
        assert!(kan_layer_forward_quant(xq.view(), &p).unwrap().iter().all(|&v| v == 0));
    }

    #[test]
    fn constant_coefficients_reproduce_constant() {
        let p = layer(1, 1, 5, 3, 7, false);
        for s in 0..50 {
            let x = array![[-1.0 + s as f64 * 0.04]];
            let y = kan_layer_forward_float(x.view(), &p).unwrap()[[0, 0]];
            assert!((y - 7.0 / 64.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_feature_quant_is_lane_dot() {
        let grid = UniformGrid::over_domain(-1.0, 1.0, 3, 3).unwrap();
        let q = QuantParams::calibrate(&grid, 192.0).unwrap();
        let coeffs = Array2::from_shape_vec((6, 1), vec![3i8, -5, 7, 11, -13, 2]).unwrap();
        let p = KanLayerParams::new(&grid, q, coeffs.clone(), 0.01, None).unwrap();
        for x_q in [0u8, 60, 128, 170, 255] {
            let b = evaluate(x_q, p.grid(), p.lut(), p.quant());
            let want: i32 = (0..4).map(|j| coeffs[[b.select + j, 0]] as i32 * b.values[j] as i32).sum();
            let got = kan_layer_forward_quant(array![[x_q]].view(), &p).unwrap()[[0, 0]];
            assert_eq!(got, want);
        }
    }

    #[test]
    fn bias_branch_ignores_negative_codes() {
        let grid = UniformGrid::over_domain(-1.0, 1.0, 3, 3).unwrap();
        let q = QuantParams::calibrate(&grid, 192.0).unwrap();
        let p = KanLayerParams::new(&grid, q, Array2::zeros((6, 1)), 0.01, Some(array![[5i8]])).unwrap();
        let z = q.x_zero as u8;
        assert_eq!(kan_layer_forward_quant(array![[z - 10]].view(), &p).unwrap()[[0, 0]], 0);
        assert_eq!(kan_layer_forward_quant(array![[z]].view(), &p).unwrap()[[0, 0]], 0);
        let relu = p.relu();
        let pos = kan_layer_forward_quant(array![[z + 20]].view(), &p).unwrap()[[0, 0]];
        assert_eq!(pos, 5 * relu.code(z + 20) as i32);
    }

    #[test]
    fn two_input_toy_layer_matches_hand_sum() {
        // [2, 1] layer: y = sum_f sum_i c_{f,i} B_i(x_f) computed term by term.
        let grid = UniformGrid::over_domain(-1.0, 1.0, 3, 3).unwrap();
        let q = QuantParams::calibrate(&grid, 192.0).unwrap();
        let coeffs = Array2::from_shape_vec((12, 1), (0..12).map(|i| i as i8 - 6).collect()).unwrap();
        let p = KanLayerParams::new(&grid, q, coeffs.clone(), 0.5, None).unwrap();
        let g = *p.grid();
        let x = [0.25, -0.7];
        let mut want = 0.0;
        for (f, &xf) in x.iter().enumerate() {
            for i in 0..6 {
                let b = crate::spline::bspline_recursive(&g, i, 3, xf);
                want += coeffs[[f * 6 + i, 0]] as f64 * 0.5 * b;
            }
        }
        let got = kan_layer_forward_float(array![[x[0], x[1]]].view(), &p).unwrap()[[0, 0]];
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn overflow_is_an_error() {
        let a = Array2::from_elem((1, 200_000), 127u8);
        let w = Array2::from_elem((200_000, 1), 127i8);
        assert!(matches!(int_gemm(a.view(), w.view()), Err(Error::AccumulatorOverflow(_))));
    }

    #[test]
    fn conv_lowering_dims() {
        let grid = UniformGrid::over_domain(-1.0, 1.0, 3, 3).unwrap();
        let g = ConvGeometry { c_in: 64, c_out: 64, k_h: 3, k_w: 3, h: 8, w: 8, stride: 1, pad: 1 };
        let op = conv_to_gemm(&g, 1, grid).unwrap();
        assert_eq!((op.k_features, op.rows, op.n_outputs), (576, 64, 64));
        let s2 = ConvGeometry { stride: 2, ..g };
        assert_eq!(conv_to_gemm(&s2, 1, grid).unwrap().rows, 16);
        let bad = ConvGeometry { k_h: 20, ..g };
        assert!(conv_to_gemm(&bad, 1, grid).is_err());
        assert!(conv_to_gemm(&ConvGeometry { stride: 0, ..g }, 1, grid).is_err());
    }

    #[test]
    fn im2col_matches_direct_convolution() {
        let g = ConvGeometry { c_in: 2, c_out: 3, k_h: 3, k_w: 2, h: 5, w: 4, stride: 2, pad: 1 };
        let batch = 2;
        let data = Array2::from_shape_fn((batch * 5 * 4, 2), |(r, c)| ((r * 7 + c * 13) % 50) as u8);
        let fmap = FeatureMap { batch, height: 5, width: 4, data };
        let w = Array2::from_shape_fn((g.patch_len(), 3), |(r, c)| ((r * 5 + c * 3) % 11) as i8 - 5);
        let patches = im2col(&fmap, &g, 0).unwrap();
        let got = int_gemm(patches.view(), w.view()).unwrap();
        for b in 0..batch {
            for oy in 0..g.out_h() {
                for ox in 0..g.out_w() {
                    for co in 0..3 {
                        let mut acc = 0i32;
                        for c in 0..2 {
                            for ky in 0..3 {
                                for kx in 0..2 {
                                    let iy = (oy * 2 + ky) as isize - 1;
                                    let ix = (ox * 2 + kx) as isize - 1;
                                    if iy < 0 || ix < 0 || iy >= 5 || ix >= 4 {
                                        continue;
                                    }
                                    let v = fmap.data[[(b * 5 + iy as usize) * 4 + ix as usize, c]];
                                    acc += v as i32 * w[[(c * 3 + ky) * 2 + kx, co]] as i32;
                                }
                            }
                        }
                        let row = (b * g.out_h() + oy) * g.out_w() + ox;
                        assert_eq!(got[[row, co]], acc);
                    }
                }
            }
        }
    }

    #[test]
    fn requantizer_tracks_ratio() {
        for &ratio in &[1e-5, 0.0123, 0.5, 1.0, 3.75] {
            let rq = Requantizer::from_ratio(ratio, 128).unwrap();
            for acc in [-100_000, -517, 0, 1, 999, 40_000] {
                let want = ((acc as f64 * ratio).round() + 128.0).clamp(0.0, 255.0);
                assert!((rq.apply(acc) as f64 - want).abs() <= 1.0, "ratio={ratio} acc={acc}");
            }
        }
        assert!(Requantizer::from_ratio(0.0, 0).is_err());
    }

    #[test]
    fn shape_errors() {
        let p = layer(2, 1, 3, 3, 1, false);
        assert!(build_activation_matrix(array![[1u8, 2, 3]].view(), &p).is_err());
        let grid = UniformGrid::over_domain(-1.0, 1.0, 3, 3).unwrap();
        let q = QuantParams::calibrate(&grid, 192.0).unwrap();
        assert!(KanLayerParams::new(&grid, q, Array2::zeros((7, 1)), 1.0, None).is_err());
        assert!(KanLayerParams::new(&grid, q, Array2::zeros((6, 1)), 1.0, Some(Array2::zeros((2, 1)))).is_err());
    }
}
