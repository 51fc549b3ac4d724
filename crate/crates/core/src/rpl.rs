//! Random projection layer: candidate blocks of sigmoid hidden units with
//! Gaussian input weights and biases, and the feature map they induce.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

/// Generator used for every random draw in the crate.
///
/// ChaCha8 has a fixed, documented stream so seeded runs replay identically
/// on every platform.
pub type RplRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> RplRng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Activation {
    #[default]
    Sigmoid,
}

impl Activation {
    pub fn tag(self) -> u32 {
        match self {
            Activation::Sigmoid => 0,
        }
    }

    pub fn from_tag(tag: u32) -> Option<Self> {
        match tag {
            0 => Some(Activation::Sigmoid),
            _ => None,
        }
    }

    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Sigmoid => sigmoid(x),
        }
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    // Split on sign so exp never overflows; clamp keeps outputs in (0, 1)
    // once the logistic saturates in double precision.
    let y = if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    };
    y.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// `s` hidden units sharing one sampling scale.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisBlock {
    input_weights: DenseMatrix,
    biases: Vec<f64>,
    xi: f64,
}

impl BasisBlock {
    /// `input_weights` is `d × s`, one column per unit.
    pub fn new(input_weights: DenseMatrix, biases: Vec<f64>, xi: f64) -> Result<Self> {
        if input_weights.cols() == 0 || input_weights.rows() == 0 {
            return Err(Error::InvalidParameter("basis block needs d >= 1 and s >= 1".into()));
        }
        if biases.len() != input_weights.cols() {
            return Err(Error::dim("BasisBlock::new (biases)", input_weights.cols(), biases.len()));
        }
        if !(xi > 0.0) || !xi.is_finite() {
            return Err(Error::InvalidParameter(format!("xi must be positive and finite, got {xi}")));
        }
        input_weights.ensure_finite("BasisBlock weights")?;
        if biases.iter().any(|b| !b.is_finite()) {
            return Err(Error::Numeric("BasisBlock biases must be finite".into()));
        }
        Ok(Self {
            input_weights,
            biases,
            xi,
        })
    }

    pub fn input_weights(&self) -> &DenseMatrix {
        &self.input_weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn feature_dim(&self) -> usize {
        self.input_weights.rows()
    }

    pub fn units(&self) -> usize {
        self.input_weights.cols()
    }
}

/// Draws a block whose weights and biases are i.i.d. `N(0, xi²)`.
///
/// Weights are drawn row-major (`d` rows of `s` entries), then the `s` biases.
pub fn sample_block(rng: &mut RplRng, d: usize, s: usize, xi: f64) -> Result<BasisBlock> {
    if d == 0 || s == 0 {
        return Err(Error::InvalidParameter(format!(
            "sample_block needs d >= 1 and s >= 1 (got d={d}, s={s})"
        )));
    }
    if !(xi > 0.0) || !xi.is_finite() {
        return Err(Error::InvalidParameter(format!("xi must be positive and finite, got {xi}")));
    }
    let normal = Normal::new(0.0, xi).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let weights: Vec<f64> = (0..d * s).map(|_| normal.sample(rng)).collect();
    let biases: Vec<f64> = (0..s).map(|_| normal.sample(rng)).collect();
    BasisBlock::new(DenseMatrix::from_vec(d, s, weights)?, biases, xi)
}

/// `g(Z W + 1 bᵀ)` for one block.
pub fn activate(z: &DenseMatrix, block: &BasisBlock) -> Result<DenseMatrix> {
    activate_with(z, block, Activation::Sigmoid)
}

fn activate_with(z: &DenseMatrix, block: &BasisBlock, act: Activation) -> Result<DenseMatrix> {
    if z.cols() != block.feature_dim() {
        return Err(Error::dim("activate", block.feature_dim(), z.cols()));
    }
    let mut pre = z.matmul(&block.input_weights)?;
    for i in 0..pre.rows() {
        for (v, b) in pre.row_mut(i).iter_mut().zip(&block.biases) {
            *v = act.apply(*v + b);
        }
    }
    Ok(pre)
}

/// Accepted blocks in acceptance order.
#[derive(Clone, Debug, PartialEq)]
pub struct RplModel {
    feature_dim: usize,
    activation: Activation,
    blocks: Vec<BasisBlock>,
}

impl RplModel {
    pub fn new(feature_dim: usize) -> Self {
        Self {
            feature_dim,
            activation: Activation::Sigmoid,
            blocks: Vec::new(),
        }
    }

    pub fn from_blocks(feature_dim: usize, activation: Activation, blocks: Vec<BasisBlock>) -> Result<Self> {
        let mut model = Self {
            feature_dim,
            activation,
            blocks: Vec::with_capacity(blocks.len()),
        };
        for b in blocks {
            model.push(b)?;
        }
        Ok(model)
    }

    pub fn push(&mut self, block: BasisBlock) -> Result<()> {
        if block.feature_dim() != self.feature_dim {
            return Err(Error::dim("RplModel::push", self.feature_dim, block.feature_dim()));
        }
        self.blocks.push(block);
        Ok(())
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn blocks(&self) -> &[BasisBlock] {
        &self.blocks
    }

    pub fn total_units(&self) -> usize {
        self.blocks.iter().map(BasisBlock::units).sum()
    }

    /// All input weights side by side (`d × L*`), in acceptance order.
    pub fn basis_matrix(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.feature_dim, 0);
        for b in &self.blocks {
            out = out.hstack(b.input_weights()).expect("row count checked on push");
        }
        out
    }
}

/// Concatenated block activations, `N × L*`.
pub fn project(z: &DenseMatrix, model: &RplModel) -> Result<DenseMatrix> {
    if z.cols() != model.feature_dim {
        return Err(Error::dim("project", model.feature_dim, z.cols()));
    }
    let total = model.total_units();
    let mut out = DenseMatrix::zeros(z.rows(), total);
    let mut offset = 0;
    for block in &model.blocks {
        let h = activate_with(z, block, model.activation)?;
        let s = h.cols();
        for i in 0..z.rows() {
            out.row_mut(i)[offset..offset + s].copy_from_slice(h.row(i));
        }
        offset += s;
    }
    Ok(out)
}

/// Discrete scale set `{xi_min, xi_min + Δ, …} ∩ [xi_min, xi_max]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct XiSchedule {
    xi_min: f64,
    delta_xi: f64,
    xi_max: f64,
}

impl XiSchedule {
    pub fn new(xi_min: f64, delta_xi: f64, xi_max: f64) -> Result<Self> {
        let ok = xi_min > 0.0
            && delta_xi > 0.0
            && xi_max.is_finite()
            && xi_min <= xi_max
            && ((xi_max - xi_min) / delta_xi) < 1e7;
        if !ok {
            return Err(Error::InvalidParameter(format!(
                "invalid xi schedule (min={xi_min}, delta={delta_xi}, max={xi_max})"
            )));
        }
        Ok(Self {
            xi_min,
            delta_xi,
            xi_max,
        })
    }

    /// Single-value schedule.
    pub fn fixed(xi: f64) -> Result<Self> {
        Self::new(xi, 1.0, xi)
    }

    pub fn xi_min(&self) -> f64 {
        self.xi_min
    }

    pub fn delta_xi(&self) -> f64 {
        self.delta_xi
    }

    pub fn xi_max(&self) -> f64 {
        self.xi_max
    }

    pub fn len(&self) -> usize {
        // Tolerate the round-off in e.g. (0.004 - 0.0008) / 0.0001.
        ((self.xi_max - self.xi_min) / self.delta_xi + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn value(&self, k: usize) -> Option<f64> {
        (k < self.len()).then(|| self.xi_min + k as f64 * self.delta_xi)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|k| self.xi_min + k as f64 * self.delta_xi)
    }
}
