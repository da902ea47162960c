//! Objective evaluation and exact gradients.
//!
//! The objective is the mean squared self-regression error plus path-norm
//! penalties on the core layer stack (self-dependency mass on the
//! (block-)diagonal, total symmetrized path mass for sparsity) and, when
//! encoder/decoder stacks are present, path mass crossing hypernode groups.
//! Penalty gradients flow through the absolute-weight products; the
//! subgradient of |w| at w = 0 is taken as 0 so exact zeros stay put.

use std::ops::Range;

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::linalg::matmul;
use crate::mlp::{Gradients, Mlp};
use crate::pathnorm::{gcpn, masked_l1, path_matrix_range, symmetrize, GraphMask};

/// Floor inside the optional log scaling `g(t) = ln(LOG_EPS + t)`.
pub const LOG_EPS: f64 = 1e-12;

/// Penalty constants and options, the part of the training configuration the
/// objective needs.
#[derive(Debug, Clone, Copy)]
pub struct PenaltyConfig {
    /// Self-dependency (diagonal path mass) constant.
    pub lambda: f64,
    /// Sparsity (total path mass) constant.
    pub gamma: f64,
    /// Encoder cross-group path mass constant (multimodal only).
    pub eta: f64,
    /// Decoder cross-group path mass constant (multimodal only).
    pub beta: f64,
    /// Apply `g(t) = ln(LOG_EPS + t)` to the diagonal and sparsity terms.
    pub log_scaling: bool,
    /// Weight of the optional soft symmetry penalty ‖P−Pᵀ‖_F; 0 disables it.
    pub symmetry_weight: f64,
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        PenaltyConfig {
            lambda: 1.0,
            gamma: 1.0,
            eta: 0.0,
            beta: 0.0,
            log_scaling: false,
            symmetry_weight: 0.0,
        }
    }
}

/// Which layers the penalties act on, with their masks.
///
/// The core stack carries the diagonal and sparsity penalties; optional
/// encoder (layers before the core) and decoder (layers after) stacks carry
/// block masks whose complements are penalized.
#[derive(Debug, Clone)]
pub struct PenaltyLayout {
    core: Range<usize>,
    diag: GraphMask,
    enc_mask: Option<GraphMask>,
    dec_mask: Option<GraphMask>,
}

impl PenaltyLayout {
    /// Whole network is the core; plain diagonal mask of width `d`.
    pub fn unimodal(d: usize, num_layers: usize) -> Self {
        PenaltyLayout {
            core: 0..num_layers,
            diag: crate::pathnorm::diag_mask(d),
            enc_mask: None,
            dec_mask: None,
        }
    }

    /// Encoder/core/decoder split with block masks.
    pub fn multimodal(
        core: Range<usize>,
        diag: GraphMask,
        enc_mask: Option<GraphMask>,
        dec_mask: Option<GraphMask>,
    ) -> Self {
        PenaltyLayout {
            core,
            diag,
            enc_mask,
            dec_mask,
        }
    }

    pub fn core_range(&self) -> Range<usize> {
        self.core.clone()
    }

    fn validate(&self, mlp: &Mlp) -> Result<()> {
        let dims = mlp.layer_dims();
        let l = mlp.num_layers();
        if self.core.is_empty() || self.core.end > l {
            return Err(Error::shape(format!(
                "core layer range {:?} out of bounds for {l} layers",
                self.core
            )));
        }
        let (ci, co) = (dims[self.core.start], dims[self.core.end]);
        if self.diag.dim() != (ci, co) {
            return Err(Error::shape(format!(
                "diagonal mask {:?} vs core path view ({ci}, {co})",
                self.diag.dim()
            )));
        }
        if let Some(m) = &self.enc_mask {
            if self.core.start == 0 {
                return Err(Error::shape("encoder mask without encoder layers"));
            }
            if m.dim() != (dims[0], ci) {
                return Err(Error::shape(format!(
                    "encoder mask {:?} vs ({}, {ci})",
                    m.dim(),
                    dims[0]
                )));
            }
        }
        if let Some(m) = &self.dec_mask {
            if self.core.end == l {
                return Err(Error::shape("decoder mask without decoder layers"));
            }
            if m.dim() != (co, dims[l]) {
                return Err(Error::shape(format!(
                    "decoder mask {:?} vs ({co}, {})",
                    m.dim(),
                    dims[l]
                )));
            }
        }
        Ok(())
    }
}

/// The objective split into its raw parts.
///
/// Penalty fields hold the raw (unweighted, unscaled) values; `total`
/// applies the constants and optional log scaling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub regression: f64,
    pub diag_penalty: f64,
    pub sparsity_penalty: f64,
    pub enc_penalty: f64,
    pub dec_penalty: f64,
    /// Raw ‖P−Pᵀ‖_F of the core; 0 unless the symmetry penalty is enabled.
    pub symmetry_penalty: f64,
    pub total: f64,
}

fn g_scale(t: f64, log_scaling: bool) -> f64 {
    if log_scaling {
        (LOG_EPS + t).ln()
    } else {
        t
    }
}

fn g_slope(t: f64, log_scaling: bool) -> f64 {
    if log_scaling {
        1.0 / (LOG_EPS + t)
    } else {
        1.0
    }
}

fn check_finite(value: f64, term: &str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Divergence {
            term: term.to_string(),
            epoch: None,
        })
    }
}

struct RawPenalties {
    diag: f64,
    sparsity: f64,
    enc: f64,
    dec: f64,
    asym: f64,
}

fn raw_penalties(mlp: &Mlp, cfg: &PenaltyConfig, layout: &PenaltyLayout) -> Result<RawPenalties> {
    let core = path_matrix_range(mlp, layout.core_range());
    let sym = symmetrize(&core)?;
    let diag = check_finite(masked_l1(&sym.view(), &layout.diag)?, "diag_penalty")?;
    let sparsity = check_finite(sym.iter().map(|v| v.abs()).sum(), "sparsity_penalty")?;
    let enc = match &layout.enc_mask {
        Some(mask) => {
            let p = path_matrix_range(mlp, 0..layout.core.start);
            check_finite(gcpn(&p, mask)?, "enc_penalty")?
        }
        None => 0.0,
    };
    let dec = match &layout.dec_mask {
        Some(mask) => {
            let p = path_matrix_range(mlp, layout.core.end..mlp.num_layers());
            check_finite(gcpn(&p, mask)?, "dec_penalty")?
        }
        None => 0.0,
    };
    let asym = if cfg.symmetry_weight > 0.0 {
        check_finite(crate::pathnorm::asymmetry(&core)?, "symmetry_penalty")?
    } else {
        0.0
    };
    Ok(RawPenalties {
        diag,
        sparsity,
        enc,
        dec,
        asym,
    })
}

fn assemble(reg: f64, raw: &RawPenalties, cfg: &PenaltyConfig) -> Result<LossBreakdown> {
    let total = reg
        + cfg.lambda * g_scale(raw.diag, cfg.log_scaling)
        + cfg.gamma * g_scale(raw.sparsity, cfg.log_scaling)
        + cfg.eta * raw.enc
        + cfg.beta * raw.dec
        + cfg.symmetry_weight * raw.asym;
    Ok(LossBreakdown {
        regression: reg,
        diag_penalty: raw.diag,
        sparsity_penalty: raw.sparsity,
        enc_penalty: raw.enc,
        dec_penalty: raw.dec,
        symmetry_penalty: raw.asym,
        total: check_finite(total, "total")?,
    })
}

fn validate_batch(mlp: &Mlp, batch: &ArrayView2<f64>) -> Result<()> {
    if batch.nrows() == 0 {
        return Err(Error::invalid("empty batch"));
    }
    if batch.ncols() != mlp.input_dim() || batch.ncols() != mlp.output_dim() {
        return Err(Error::shape(format!(
            "batch width {} vs network {}→{}",
            batch.ncols(),
            mlp.input_dim(),
            mlp.output_dim()
        )));
    }
    Ok(())
}

/// Evaluate the objective on a batch (rows are samples; the regression target
/// is the batch itself, mean-reduced over rows).
pub fn loss(
    mlp: &Mlp,
    batch: &ArrayView2<f64>,
    cfg: &PenaltyConfig,
    layout: &PenaltyLayout,
) -> Result<LossBreakdown> {
    validate_batch(mlp, batch)?;
    layout.validate(mlp)?;
    let out = mlp.forward(batch)?;
    let n = batch.nrows() as f64;
    let reg = check_finite(
        (&out - batch).iter().map(|e| e * e).sum::<f64>() / n,
        "regression",
    )?;
    let raw = raw_penalties(mlp, cfg, layout)?;
    assemble(reg, &raw, cfg)
}

/// Evaluate the objective and its exact gradient with respect to every
/// weight and bias.
pub fn loss_grad(
    mlp: &Mlp,
    batch: &ArrayView2<f64>,
    cfg: &PenaltyConfig,
    layout: &PenaltyLayout,
) -> Result<(LossBreakdown, Gradients)> {
    validate_batch(mlp, batch)?;
    layout.validate(mlp)?;
    let mut grads = Gradients::zeros_like(mlp);

    // Regression part: backprop through the trace.
    let trace = mlp.forward_trace(batch)?;
    let n = batch.nrows() as f64;
    let out = trace.activations.last().unwrap();
    let err = out - batch;
    let reg = check_finite(err.iter().map(|e| e * e).sum::<f64>() / n, "regression")?;

    let num_layers = mlp.num_layers();
    let mut delta = err.mapv(|e| 2.0 * e / n);
    for l in (0..num_layers).rev() {
        // delta is dL/d(pre-activation of layer l).
        let h = &trace.activations[l];
        let gw = &mut grads.weights[l];
        for k in 0..delta.nrows() {
            let drow = delta.row(k);
            let hrow = h.row(k);
            for o in 0..gw.nrows() {
                let d = drow[o];
                if d != 0.0 {
                    for i in 0..gw.ncols() {
                        gw[[o, i]] += d * hrow[i];
                    }
                }
                grads.biases[l][o] += d;
            }
        }
        if l > 0 {
            let w = &mlp.weights()[l];
            let pre_prev = &trace.pre[l - 1];
            let mut next = Array2::zeros(pre_prev.dim());
            for k in 0..delta.nrows() {
                for i in 0..w.ncols() {
                    if pre_prev[[k, i]] > 0.0 {
                        let mut acc = 0.0;
                        for o in 0..w.nrows() {
                            acc += delta[[k, o]] * w[[o, i]];
                        }
                        next[[k, i]] = acc;
                    }
                }
            }
            delta = next;
        }
    }

    // Penalty parts. All core terms share one coefficient matrix in raw
    // (out × in) orientation: d(term)/d(S[o][i]).
    let raw = raw_penalties(mlp, cfg, layout)?;
    let core = path_matrix_range(mlp, layout.core_range());
    let (co, ci) = core.raw().dim();
    let mut core_coeff = Array2::zeros((co, ci));
    let diag_scale = cfg.lambda * g_slope(raw.diag, cfg.log_scaling);
    let spars_scale = cfg.gamma * g_slope(raw.sparsity, cfg.log_scaling);
    if diag_scale != 0.0 {
        let m = layout.diag.matrix();
        for o in 0..co {
            for i in 0..ci {
                core_coeff[[o, i]] += diag_scale * (m[[i, o]] + m[[o, i]]) / 2.0;
            }
        }
    }
    if spars_scale != 0.0 {
        core_coeff.mapv_inplace(|v| v + spars_scale);
    }
    if cfg.symmetry_weight > 0.0 && raw.asym > 0.0 {
        let s = core.raw();
        let scale = cfg.symmetry_weight;
        for o in 0..co {
            for i in 0..ci {
                core_coeff[[o, i]] += scale * 2.0 * (s[[o, i]] - s[[i, o]]) / raw.asym;
            }
        }
    }
    if core_coeff.iter().any(|&v| v != 0.0) {
        add_path_term_grads(mlp, layout.core_range(), &core_coeff, &mut grads);
    }
    if let Some(mask) = &layout.enc_mask {
        if cfg.eta != 0.0 {
            let coeff = mask.complement().matrix().t().mapv(|v| cfg.eta * v);
            add_path_term_grads(mlp, 0..layout.core.start, &coeff, &mut grads);
        }
    }
    if let Some(mask) = &layout.dec_mask {
        if cfg.beta != 0.0 {
            let coeff = mask.complement().matrix().t().mapv(|v| cfg.beta * v);
            add_path_term_grads(mlp, layout.core.end..num_layers, &coeff, &mut grads);
        }
    }

    let breakdown = assemble(reg, &raw, cfg)?;
    Ok((breakdown, grads))
}

fn sign0(w: f64) -> f64 {
    if w > 0.0 {
        1.0
    } else if w < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Accumulate d(Σ coeff ⊙ S)/dW for S = |W_{b-1}|·…·|W_a|, where `coeff` is
/// (dims[b] × dims[a]). For each layer, S = A·|W_l|·B with A the absolute
/// product above and B below, so the gradient is (Aᵀ·coeff·Bᵀ) ⊙ sign(W_l).
fn add_path_term_grads(
    mlp: &Mlp,
    range: Range<usize>,
    coeff: &Array2<f64>,
    grads: &mut Gradients,
) {
    let n = range.len();
    let abs: Vec<Array2<f64>> = range
        .clone()
        .map(|l| mlp.weights()[l].mapv(f64::abs))
        .collect();
    // prefix[k] = |W_{a+k-1}|·…·|W_a| (identity at k = 0)
    let mut prefix: Vec<Array2<f64>> = Vec::with_capacity(n);
    prefix.push(Array2::eye(abs[0].ncols()));
    for k in 1..n {
        let next = matmul(&abs[k - 1].view(), &prefix[k - 1].view());
        prefix.push(next);
    }
    // suffix[k] = |W_{b-1}|·…·|W_{a+k+1}| (identity at k = n-1)
    let mut suffix: Vec<Array2<f64>> = vec![Array2::eye(0); n];
    suffix[n - 1] = Array2::eye(abs[n - 1].nrows());
    for k in (0..n - 1).rev() {
        suffix[k] = matmul(&suffix[k + 1].view(), &abs[k + 1].view());
    }
    for (k, l) in range.enumerate() {
        let at_c = matmul(&suffix[k].t(), &coeff.view());
        let term = matmul(&at_c.view(), &prefix[k].t());
        let w = &mlp.weights()[l];
        let gw = &mut grads.weights[l];
        for (g, (t, wv)) in gw.iter_mut().zip(term.iter().zip(w.iter())) {
            *g += t * sign0(*wv);
        }
    }
}
