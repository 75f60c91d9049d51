//! Application suite, seeded parameters and the workload file format.
//!
//! Workload files are TOML:
//!
//! ```toml
//! version = 1
//! name = "toy"
//! batch = 32          # optional, default 256
//! seed = 0            # optional, default 0
//!
//! [[layers]]
//! kind = "kan"        # kan | dense | conv
//! in = 16
//! out = 8
//! G = 5
//! P = 3
//! domain = [-1.0, 1.0]  # optional
//! bias = false          # optional
//!
//! [[layers]]
//! kind = "conv"
//! c_in = 3
//! c_out = 16
//! kernel = 3
//! input = 32
//! stride = 1
//! pad = 1
//! G = 3
//! P = 3
//! ```

use std::path::Path;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bspline_unit::QuantParams;
use crate::error::{Error, Result};
use crate::kan_gemm::{ConvGeometry, DenseLayerParams, FeatureMap, KanLayerParams, LayerParams, Network};
use crate::spline::{UniformGrid, MAX_DEGREE};
use crate::tiling::{GemmOp, OpRole};

pub const FORMAT_VERSION: u32 = 1;
pub const DEFAULT_BATCH: usize = 256;
pub const DEFAULT_DOMAIN: (f64, f64) = (-1.0, 1.0);
const COEFF_SCALE: f64 = 1.0 / 64.0;
const CALIBRATION_ROWS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplineSpec {
    pub g: usize,
    pub p: usize,
    pub domain: (f64, f64),
    pub bias: bool,
}

impl SplineSpec {
    pub fn new(g: usize, p: usize) -> Self {
        Self { g, p, domain: DEFAULT_DOMAIN, bias: false }
    }

    pub fn grid(&self) -> Result<UniformGrid> {
        UniformGrid::over_domain(self.domain.0, self.domain.1, self.g, self.p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LayerSpec {
    Kan { inputs: usize, outputs: usize, spline: SplineSpec },
    Dense { inputs: usize, outputs: usize },
    Conv { geom: ConvGeometry, spline: SplineSpec },
}

impl LayerSpec {
    pub fn spline(&self) -> Option<&SplineSpec> {
        match self {
            LayerSpec::Kan { spline, .. } | LayerSpec::Conv { spline, .. } => Some(spline),
            LayerSpec::Dense { .. } => None,
        }
    }

    fn spline_mut(&mut self) -> Option<&mut SplineSpec> {
        match self {
            LayerSpec::Kan { spline, .. } | LayerSpec::Conv { spline, .. } => Some(spline),
            LayerSpec::Dense { .. } => None,
        }
    }

    /// GEMM reduction width `K`.
    pub fn gemm_k(&self) -> usize {
        match self {
            LayerSpec::Kan { inputs, .. } | LayerSpec::Dense { inputs, .. } => *inputs,
            LayerSpec::Conv { geom, .. } => geom.patch_len(),
        }
    }

    pub fn gemm_n(&self) -> usize {
        match self {
            LayerSpec::Kan { outputs, .. } | LayerSpec::Dense { outputs, .. } => *outputs,
            LayerSpec::Conv { geom, .. } => geom.c_out,
        }
    }

    pub fn gemm_rows(&self, batch: usize) -> usize {
        match self {
            LayerSpec::Conv { geom, .. } => batch * geom.out_h() * geom.out_w(),
            _ => batch,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Workload {
    pub name: String,
    /// Table row this workload belongs to; variants share it.
    pub application: String,
    pub batch: usize,
    pub seed: u64,
    pub layers: Vec<LayerSpec>,
}

impl Workload {
    fn new(name: impl Into<String>, application: impl Into<String>, layers: Vec<LayerSpec>) -> Self {
        Self { name: name.into(), application: application.into(), batch: DEFAULT_BATCH, seed: 0, layers }
    }

    /// Chain of KAN layers `dims[0] -> dims[1] -> ...`.
    pub fn kan_mlp(name: &str, application: &str, dims: &[usize], g: usize, p: usize) -> Self {
        let layers = dims
            .windows(2)
            .map(|w| LayerSpec::Kan { inputs: w[0], outputs: w[1], spline: SplineSpec::new(g, p) })
            .collect();
        Self::new(name, application, layers)
    }

    pub fn with_batch(mut self, batch: usize) -> Self {
        self.batch = batch;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Same layers with every spline grid replaced by `(g, p)`.
    pub fn with_grid(mut self, g: usize, p: usize) -> Self {
        for l in &mut self.layers {
            if let Some(s) = l.spline_mut() {
                s.g = g;
                s.p = p;
            }
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(Error::workload("name", "must not be empty"));
        }
        if self.batch == 0 {
            return Err(Error::workload("batch", "must be positive"));
        }
        if self.layers.is_empty() {
            return Err(Error::workload("layers", "at least one layer is required"));
        }
        for (i, l) in self.layers.iter().enumerate() {
            let at = |f: &str| format!("layers[{i}].{f}");
            match l {
                LayerSpec::Kan { inputs, outputs, .. } | LayerSpec::Dense { inputs, outputs } => {
                    if *inputs == 0 {
                        return Err(Error::workload(at("in"), "must be positive"));
                    }
                    if *outputs == 0 {
                        return Err(Error::workload(at("out"), "must be positive"));
                    }
                }
                LayerSpec::Conv { geom, .. } => {
                    geom.validate().map_err(|e| Error::workload(at("conv"), e.to_string()))?;
                }
            }
            if let Some(s) = l.spline() {
                if s.p == 0 || s.p > MAX_DEGREE {
                    return Err(Error::workload(
                        at("P"),
                        format!("degree {} unsupported: the B-spline unit supports 1 <= P <= {MAX_DEGREE}", s.p),
                    ));
                }
                if s.g == 0 {
                    return Err(Error::workload(at("G"), "grid size must be positive"));
                }
                if !(s.domain.0 < s.domain.1) || !s.domain.0.is_finite() || !s.domain.1.is_finite() {
                    return Err(Error::workload(at("domain"), "needs finite lo < hi"));
                }
            }
        }
        Ok(())
    }

    /// Lowered GEMM ops with their layer index, in schedule order.
    pub fn ops(&self) -> Result<Vec<(usize, GemmOp)>> {
        self.validate()?;
        let mut ops = Vec::new();
        for (i, l) in self.layers.iter().enumerate() {
            let (rows, k, n) = (l.gemm_rows(self.batch), l.gemm_k(), l.gemm_n());
            match l.spline() {
                Some(s) => {
                    ops.push((i, GemmOp::kan(rows, k, n, s.grid()?)?));
                    if s.bias {
                        ops.push((i, GemmOp::dense(rows, k, n)?.with_role(OpRole::Bias)));
                    }
                }
                None => ops.push((i, GemmOp::dense(rows, k, n)?)),
            }
        }
        Ok(ops)
    }

    /// Whether each layer's output feeds the next one directly, which a
    /// functional run requires.
    pub fn is_chainable(&self) -> bool {
        self.layers.windows(2).all(|w| match (&w[0], &w[1]) {
            (LayerSpec::Conv { geom: a, .. }, LayerSpec::Conv { geom: b, .. }) => {
                a.c_out == b.c_in && a.out_h() == b.h && a.out_w() == b.w
            }
            (LayerSpec::Conv { .. }, _) | (_, LayerSpec::Conv { .. }) => false,
            (a, b) => a.gemm_n() == b.gemm_k(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RawWorkload = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        raw.into_workload()
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(&RawWorkload::from(self)).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()?)?;
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWorkload {
    version: u32,
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    application: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    batch: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(default)]
    layers: Vec<RawLayer>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLayer {
    kind: String,
    #[serde(rename = "in", default, skip_serializing_if = "Option::is_none")]
    inputs: Option<usize>,
    #[serde(rename = "out", default, skip_serializing_if = "Option::is_none")]
    outputs: Option<usize>,
    #[serde(rename = "G", default, skip_serializing_if = "Option::is_none")]
    g: Option<usize>,
    #[serde(rename = "P", default, skip_serializing_if = "Option::is_none")]
    p: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    domain: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bias: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    c_in: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    c_out: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kernel: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    input: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    stride: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pad: Option<usize>,
}

impl RawLayer {
    fn spline(&self, i: usize) -> Result<SplineSpec> {
        let need = |v: Option<usize>, f: &str| v.ok_or_else(|| Error::workload(format!("layers[{i}].{f}"), "missing"));
        let domain = self.domain.map_or(DEFAULT_DOMAIN, |d| (d[0], d[1]));
        Ok(SplineSpec { g: need(self.g, "G")?, p: need(self.p, "P")?, domain, bias: self.bias.unwrap_or(false) })
    }

    fn into_spec(self, i: usize) -> Result<LayerSpec> {
        let need = |v: Option<usize>, f: &str| v.ok_or_else(|| Error::workload(format!("layers[{i}].{f}"), "missing"));
        match self.kind.as_str() {
            "kan" => Ok(LayerSpec::Kan {
                inputs: need(self.inputs, "in")?,
                outputs: need(self.outputs, "out")?,
                spline: self.spline(i)?,
            }),
            "dense" => Ok(LayerSpec::Dense { inputs: need(self.inputs, "in")?, outputs: need(self.outputs, "out")? }),
            "conv" => {
                let kernel = need(self.kernel, "kernel")?;
                let input = need(self.input, "input")?;
                let geom = ConvGeometry {
                    c_in: need(self.c_in, "c_in")?,
                    c_out: need(self.c_out, "c_out")?,
                    k_h: kernel,
                    k_w: kernel,
                    h: input,
                    w: input,
                    stride: self.stride.unwrap_or(1),
                    pad: self.pad.unwrap_or(0),
                };
                Ok(LayerSpec::Conv { geom, spline: self.spline(i)? })
            }
            other => Err(Error::workload(format!("layers[{i}].kind"), format!("unknown kind `{other}`, expected kan, dense or conv"))),
        }
    }

    fn from_spec(spec: &LayerSpec) -> Self {
        let with_spline = |mut raw: RawLayer, s: &SplineSpec| {
            raw.g = Some(s.g);
            raw.p = Some(s.p);
            raw.domain = (s.domain != DEFAULT_DOMAIN).then_some([s.domain.0, s.domain.1]);
            raw.bias = s.bias.then_some(true);
            raw
        };
        match spec {
            LayerSpec::Kan { inputs, outputs, spline } => with_spline(
                RawLayer { kind: "kan".into(), inputs: Some(*inputs), outputs: Some(*outputs), ..Default::default() },
                spline,
            ),
            LayerSpec::Dense { inputs, outputs } => {
                RawLayer { kind: "dense".into(), inputs: Some(*inputs), outputs: Some(*outputs), ..Default::default() }
            }
            LayerSpec::Conv { geom, spline } => with_spline(
                RawLayer {
                    kind: "conv".into(),
                    c_in: Some(geom.c_in),
                    c_out: Some(geom.c_out),
                    kernel: Some(geom.k_h),
                    input: Some(geom.h),
                    stride: Some(geom.stride),
                    pad: Some(geom.pad),
                    ..Default::default()
                },
                spline,
            ),
        }
    }
}

impl RawWorkload {
    fn into_workload(self) -> Result<Workload> {
        if self.version != FORMAT_VERSION {
            return Err(Error::workload("version", format!("unsupported version {}, expected {FORMAT_VERSION}", self.version)));
        }
        let layers = self.layers.into_iter().enumerate().map(|(i, l)| l.into_spec(i)).collect::<Result<Vec<_>>>()?;
        let w = Workload {
            application: self.application.unwrap_or_else(|| self.name.clone()),
            name: self.name,
            batch: self.batch.unwrap_or(DEFAULT_BATCH),
            seed: self.seed.unwrap_or(0),
            layers,
        };
        w.validate()?;
        Ok(w)
    }
}

impl From<&Workload> for RawWorkload {
    fn from(w: &Workload) -> Self {
        RawWorkload {
            version: FORMAT_VERSION,
            name: w.name.clone(),
            application: (w.application != w.name).then(|| w.application.clone()),
            batch: Some(w.batch),
            seed: Some(w.seed),
            layers: w.layers.iter().map(RawLayer::from_spec).collect(),
        }
    }
}

fn conv(c_in: usize, c_out: usize, kernel: usize, input: usize, stride: usize) -> LayerSpec {
    let geom = ConvGeometry { c_in, c_out, k_h: kernel, k_w: kernel, h: input, w: input, stride, pad: kernel / 2 };
    LayerSpec::Conv { geom, spline: SplineSpec::new(3, 3) }
}

/// ResNet18 at 32x32: 3x3 stem, four stages of four 3x3 convs, and a 1x1
/// stride-2 shortcut at each downsampling stage.
fn reskan18() -> Workload {
    let mut layers = vec![conv(3, 64, 3, 32, 1)];
    let stages = [(64, 32), (128, 16), (256, 8), (512, 4)];
    let mut prev = (64, 32);
    for &(ch, res) in &stages {
        let stride = if prev.0 == ch { 1 } else { 2 };
        layers.push(conv(prev.0, ch, 3, prev.1, stride));
        layers.push(conv(ch, ch, 3, res, 1));
        if stride == 2 {
            layers.push(conv(prev.0, ch, 1, prev.1, 2));
        }
        layers.push(conv(ch, ch, 3, res, 1));
        layers.push(conv(ch, ch, 3, res, 1));
        prev = (ch, res);
    }
    Workload::new("ResKAN18", "ResKAN18", layers)
}

/// The application suite in table order. Applications with several shapes
/// or grids appear as one workload per variant.
pub fn builtin_workloads() -> Vec<Workload> {
    let mut ws = vec![
        Workload::kan_mlp("5G-STARDUST", "5G-STARDUST", &[168, 40, 40, 40, 24], 5, 3),
        Workload::kan_mlp("Catch22-KAN", "Catch22-KAN", &[22, 10], 3, 3),
    ];
    for x in [2810, 34395, 6969] {
        ws.push(Workload::kan_mlp(&format!("CF-KAN-{x}"), "CF-KAN", &[x, 512, x], 2, 3));
    }
    ws.push(Workload::kan_mlp("U-KAN-512-1024-512", "U-KAN", &[512, 1024, 512], 5, 3));
    ws.push(Workload::kan_mlp("U-KAN-512-512", "U-KAN", &[512, 512], 5, 3));
    for dims in [[200, 16, 7], [100, 20, 7]] {
        for g in [2, 3] {
            for p in [1, 2, 3] {
                ws.push(Workload::kan_mlp(&format!("GKAN-{}-G{g}-P{p}", dims[0]), "GKAN", &dims, g, p));
            }
        }
    }
    ws.push(Workload::kan_mlp("Prefetcher", "Prefetcher", &[5, 64, 128], 4, 3));
    ws.push(Workload::kan_mlp("MNIST-KAN", "MNIST-KAN", &[784, 64, 10], 10, 3));
    ws.push(reskan18());
    ws
}

/// Built-in by workload or application name (case-insensitive).
pub fn builtin(name: &str) -> Option<Workload> {
    builtin_workloads().into_iter().find(|w| w.name.eq_ignore_ascii_case(name))
}

/// Built-in name, or a path to a workload file.
pub fn resolve(name_or_path: &str) -> Result<Workload> {
    if let Some(w) = builtin(name_or_path) {
        return Ok(w);
    }
    let path = Path::new(name_or_path);
    if path.exists() {
        return Workload::load(path);
    }
    Err(Error::Config(format!("`{name_or_path}` is neither a built-in workload nor a readable file")))
}

/// Group workloads by application, keeping first-appearance order.
pub fn applications(ws: &[Workload]) -> Vec<(String, Vec<&Workload>)> {
    let mut out: Vec<(String, Vec<&Workload>)> = Vec::new();
    for w in ws {
        match out.iter_mut().find(|(a, _)| *a == w.application) {
            Some((_, v)) => v.push(w),
            None => out.push((w.application.clone(), vec![w])),
        }
    }
    out
}

fn random_i8(rng: &mut ChaCha8Rng, shape: (usize, usize)) -> Array2<i8> {
    Array2::from_shape_simple_fn(shape, || rng.random_range(-127..=127))
}

fn random_fmap(w: &Workload, seed: u64, batch: usize) -> Result<FeatureMap> {
    w.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (h, wd, ch) = match &w.layers[0] {
        LayerSpec::Conv { geom, .. } => (geom.h, geom.w, geom.c_in),
        l => (1, 1, l.gemm_k()),
    };
    let data = Array2::from_shape_simple_fn((batch * h * wd, ch), || rng.random::<u8>());
    Ok(FeatureMap { batch, height: h, width: wd, data })
}

/// Seeded input codes for the first layer, uniform over all 256 codes.
pub fn random_input(w: &Workload, seed: u64) -> Result<FeatureMap> {
    random_fmap(w, seed, w.batch)
}

/// Seeded int8 coefficients and bias weights, input quantizers fixed by each
/// layer's domain, and requantizers calibrated on a separate seeded batch.
pub fn random_parameters(w: &Workload, seed: u64) -> Result<Network> {
    w.validate()?;
    if !w.is_chainable() {
        return Err(Error::Config(format!(
            "workload `{}` has layers that do not chain; only timing simulation is available",
            w.name
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut layers = Vec::with_capacity(w.layers.len());
    for l in &w.layers {
        let (k, n) = (l.gemm_k(), l.gemm_n());
        let layer = match l {
            LayerSpec::Kan { spline, .. } | LayerSpec::Conv { spline, .. } => {
                let grid = spline.grid()?;
                let q = QuantParams::calibrate(&grid, QuantParams::default_lut_scale(spline.p))?;
                let coeffs = random_i8(&mut rng, (k * grid.num_basis(), n));
                let bias = spline.bias.then(|| random_i8(&mut rng, (k, n)));
                let params = KanLayerParams::new(&grid, q, coeffs, COEFF_SCALE, bias)?;
                let conv = match l {
                    LayerSpec::Conv { geom, .. } => Some(*geom),
                    _ => None,
                };
                LayerParams::Kan { params, conv }
            }
            LayerSpec::Dense { .. } => {
                let (scale, zero) = DenseLayerParams::symmetric_input(1.0);
                LayerParams::Dense(DenseLayerParams::new(scale, zero, random_i8(&mut rng, (k, n)), COEFF_SCALE)?)
            }
        };
        layers.push(layer);
    }
    let calibration = random_fmap(w, seed ^ 0x9e37_79b9_7f4a_7c15, CALIBRATION_ROWS.min(w.batch))?;
    Network::calibrate(layers, &calibration)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_dimensions() {
        let ws = builtin_workloads();
        let mnist = builtin("MNIST-KAN").unwrap();
        let ops = mnist.ops().unwrap();
        assert_eq!(ops.len(), 2);
        let op = ops[0].1;
        assert_eq!((op.k_features, op.n_outputs), (784, 64));
        let g = op.grid.unwrap();
        assert_eq!((g.grid_size(), g.degree()), (10, 3));
        let pf = builtin("Prefetcher").unwrap().ops().unwrap();
        assert_eq!(pf.iter().map(|(_, o)| (o.k_features, o.n_outputs)).collect::<Vec<_>>(), vec![(5, 64), (64, 128)]);
        assert_eq!(pf[0].1.grid.unwrap().grid_size(), 4);
        let c22 = builtin("Catch22-KAN").unwrap().ops().unwrap();
        assert_eq!(c22.len(), 1);
        assert_eq!((c22[0].1.k_features, c22[0].1.n_outputs), (22, 10));
        assert_eq!(ws.iter().filter(|w| w.application == "GKAN").count(), 12);
        assert_eq!(ws.iter().filter(|w| w.application == "CF-KAN").count(), 3);
        let apps: Vec<_> = applications(&ws).into_iter().map(|(a, _)| a).collect();
        assert_eq!(
            apps,
            ["5G-STARDUST", "Catch22-KAN", "CF-KAN", "U-KAN", "GKAN", "Prefetcher", "MNIST-KAN", "ResKAN18"]
        );
    }

    #[test]
    fn reskan18_has_twenty_conv_layers() {
        let r = builtin("ResKAN18").unwrap();
        assert_eq!(r.layers.len(), 20);
        assert!(r.layers.iter().all(|l| matches!(l, LayerSpec::Conv { .. })));
        assert!(!r.is_chainable());
        let last = r.ops().unwrap().last().unwrap().1;
        assert_eq!((last.rows, last.k_features, last.n_outputs), (256 * 16, 512 * 9, 512));
    }

    #[test]
    fn toml_round_trip_and_errors() {
        for w in builtin_workloads() {
            let back = Workload::from_toml(&w.to_toml().unwrap()).unwrap();
            assert_eq!(back, w);
        }
        let minimal = "version = 1\nname = \"d\"\n[[layers]]\nkind = \"dense\"\nin = 4\nout = 2\n";
        let w = Workload::from_toml(minimal).unwrap();
        assert_eq!(w.ops().unwrap().len(), 1);
        let p4 = "version = 1\nname = \"x\"\n[[layers]]\nkind = \"kan\"\nin = 4\nout = 2\nG = 5\nP = 4\n";
        let err = Workload::from_toml(p4).unwrap_err().to_string();
        assert!(err.contains("layers[0].P") && err.contains("P <= 3"), "{err}");
        let bad = "version = 1\nname = \"x\"\n[[layers]]\nkind = \"kan\"\nin = 0\nout = 2\nG = 5\nP = 3\n";
        assert!(Workload::from_toml(bad).unwrap_err().to_string().contains("layers[0].in"));
        assert!(Workload::from_toml("version = 2\nname = \"x\"\n").is_err());
    }

    #[test]
    fn parameters_are_seeded() {
        let w = Workload::kan_mlp("t", "t", &[6, 5, 3], 3, 3).with_batch(4);
        let a = random_parameters(&w, 7).unwrap();
        let b = random_parameters(&w, 7).unwrap();
        let c = random_parameters(&w, 8).unwrap();
        let coeffs = |n: &Network| match &n.layers[0] {
            LayerParams::Kan { params, .. } => params.coeffs().clone(),
            _ => unreachable!(),
        };
        assert_eq!(coeffs(&a), coeffs(&b));
        assert_eq!(a.requant, b.requant);
        assert_ne!(coeffs(&a), coeffs(&c));
        assert_eq!(random_input(&w, 3).unwrap(), random_input(&w, 3).unwrap());
    }
}
