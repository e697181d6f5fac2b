//! Conditional variational autoencoder over flattened solutions, trained on
//! archived Pareto solutions with the scenario's environment factors as
//! the condition, and used to generate warm-start populations.

mod network;

use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectives::{repair, RepairOutcome, Solution};
use crate::optimizer::ParetoArchive;
use crate::rng::{stream, Purpose};
use crate::scenario::{
    condition_dim, condition_vector, read_envelope, write_json, Position3, Scenario,
};

pub use network::{Adam, Dense, Mlp, Tape};

pub const CHECKPOINT_FORMAT: &str = "secbeam-cvae";
pub const CHECKPOINT_VERSION: u64 = 1;

/// Length of [`encode_solution`] for `n_uav` UAVs per swarm.
pub fn solution_dim(n_uav: usize) -> usize {
    8 * n_uav + 2
}

/// Flattens a solution: swarm 1 positions `(x, y, z)` normalized by its
/// area box, swarm 2 likewise, then the weights of swarm 1 and swarm 2,
/// then each receiver as `(index + 1) / N_U`.
pub fn encode_solution(x: &Solution, s: &Scenario) -> Result<Vec<f64>> {
    let n = s.n_uav();
    for i in 0..2 {
        for len in [x.positions[i].len(), x.weights[i].len()] {
            if len != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: len,
                });
            }
        }
    }
    let mut out = Vec::with_capacity(solution_dim(n));
    for i in 0..2 {
        for p in &x.positions[i] {
            let u = s.area_bounds[i].normalize(*p);
            out.extend([u.x, u.y, u.z]);
        }
    }
    for i in 0..2 {
        out.extend(&x.weights[i]);
    }
    for u in x.receivers {
        out.push((u + 1) as f64 / n as f64);
    }
    Ok(out)
}

/// Inverse of [`encode_solution`]; receivers are rounded to the nearest
/// valid index and the result is repaired.
pub fn decode_solution(v: &[f64], s: &Scenario) -> Result<RepairOutcome> {
    let n = s.n_uav();
    if v.len() != solution_dim(n) {
        return Err(Error::DimensionMismatch {
            expected: solution_dim(n),
            found: v.len(),
        });
    }
    let mut x = Solution::at_start(s);
    for i in 0..2 {
        for j in 0..n {
            let k = 3 * (i * n + j);
            x.positions[i][j] =
                s.area_bounds[i].denormalize(Position3::new(v[k], v[k + 1], v[k + 2]));
        }
        x.weights[i].copy_from_slice(&v[6 * n + i * n..6 * n + (i + 1) * n]);
        let u = (v[8 * n + i] * n as f64).round();
        x.receivers[i] = if u.is_finite() {
            (u.clamp(1.0, n as f64) as usize) - 1
        } else {
            0
        };
    }
    Ok(repair(&x, s))
}

/// Encoder/decoder pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvaeNets {
    pub latent_dim: usize,
    /// `[x, c] → [μ, log σ²]`
    pub encoder: Mlp,
    /// `[z, c] → x̂`
    pub decoder: Mlp,
}

/// Outputs of one forward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardPass {
    pub mu: Vec<f64>,
    pub log_var: Vec<f64>,
    pub z: Vec<f64>,
    pub recon: Vec<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossParts {
    pub total: f64,
    pub recon: f64,
    pub kl: f64,
}

/// `½ Σ (μ² + σ² − 1 − log σ²)`, written with `expm1` so each term stays
/// non-negative in floating point.
pub fn kl_divergence(mu: &[f64], log_var: &[f64]) -> f64 {
    0.5 * mu
        .iter()
        .zip(log_var)
        .map(|(m, lv)| m * m + (lv.exp_m1() - lv))
        .sum::<f64>()
}

pub fn mse(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len().max(1) as f64
}

struct Sample<'a> {
    x: &'a [f64],
    c: &'a [f64],
    eps: &'a [f64],
}

impl CvaeNets {
    pub fn new<R: Rng + ?Sized>(
        x_dim: usize,
        c_dim: usize,
        hidden: &[usize],
        latent_dim: usize,
        rng: &mut R,
    ) -> Self {
        let mut enc = vec![x_dim + c_dim];
        enc.extend(hidden);
        enc.push(2 * latent_dim);
        let mut dec = vec![latent_dim + c_dim];
        dec.extend(hidden);
        dec.push(x_dim);
        Self {
            latent_dim,
            encoder: Mlp::new(&enc, rng),
            decoder: Mlp::new(&dec, rng),
        }
    }

    pub fn x_dim(&self) -> usize {
        self.decoder.n_out()
    }

    pub fn c_dim(&self) -> usize {
        self.decoder.n_in().saturating_sub(self.latent_dim)
    }

    fn is_consistent(&self) -> bool {
        self.encoder.is_consistent()
            && self.decoder.is_consistent()
            && self.encoder.n_out() == 2 * self.latent_dim
            && self.decoder.n_in() > self.latent_dim
            && self.encoder.n_in() == self.x_dim() + self.c_dim()
    }

    fn check_dims(&self, x: Option<&[f64]>, c: &[f64], eps: &[f64]) -> Result<()> {
        let checks = [
            (self.c_dim(), c.len()),
            (self.latent_dim, eps.len()),
            (self.x_dim(), x.map_or(self.x_dim(), <[f64]>::len)),
        ];
        for (expected, found) in checks {
            if expected != found {
                return Err(Error::DimensionMismatch { expected, found });
            }
        }
        Ok(())
    }

    /// `x̂ = decoder([z, c])`.
    pub fn decode(&self, z: &[f64], c: &[f64]) -> Result<Vec<f64>> {
        self.check_dims(None, c, z)?;
        let input: Vec<f64> = z.iter().chain(c).copied().collect();
        Ok(self.decoder.forward(&input)?.output().to_vec())
    }

    /// Encoder, reparameterization `z = μ + exp(½ log σ²) ε` and decoder.
    pub fn forward(&self, x: &[f64], c: &[f64], eps: &[f64]) -> Result<ForwardPass> {
        self.check_dims(Some(x), c, eps)?;
        Ok(self.forward_taped(x, c, eps)?.0)
    }

    fn forward_taped(
        &self,
        x: &[f64],
        c: &[f64],
        eps: &[f64],
    ) -> Result<(ForwardPass, Tape, Tape)> {
        let enc_in: Vec<f64> = x.iter().chain(c).copied().collect();
        let enc = self.encoder.forward(&enc_in)?;
        let (mu, log_var) = enc.output().split_at(self.latent_dim);
        let z: Vec<f64> = mu
            .iter()
            .zip(log_var)
            .zip(eps)
            .map(|((m, lv), e)| m + (0.5 * lv).exp() * e)
            .collect();
        let dec_in: Vec<f64> = z.iter().chain(c).copied().collect();
        let dec = self.decoder.forward(&dec_in)?;
        let pass = ForwardPass {
            mu: mu.to_vec(),
            log_var: log_var.to_vec(),
            z,
            recon: dec.output().to_vec(),
        };
        Ok((pass, enc, dec))
    }

    /// Per-sample loss `mse(x, x̂) + β·KL`.
    pub fn loss(&self, x: &[f64], c: &[f64], eps: &[f64], beta: f64) -> Result<LossParts> {
        let p = self.forward(x, c, eps)?;
        let recon = mse(x, &p.recon);
        let kl = kl_divergence(&p.mu, &p.log_var);
        Ok(LossParts {
            total: recon + beta * kl,
            recon,
            kl,
        })
    }

    /// Mean loss over the batch and its gradient with respect to every
    /// parameter.
    pub fn loss_and_grad(
        &self,
        xs: &[&[f64]],
        cs: &[&[f64]],
        eps: &[&[f64]],
        beta: f64,
    ) -> Result<(LossParts, CvaeNets)> {
        let mut grad = CvaeNets {
            latent_dim: self.latent_dim,
            encoder: self.encoder.zero_like(),
            decoder: self.decoder.zero_like(),
        };
        let mut parts = LossParts::default();
        let b = xs.len().max(1) as f64;
        for ((x, c), e) in xs.iter().zip(cs).zip(eps) {
            self.check_dims(Some(x), c, e)?;
            let p = self.accumulate(Sample { x, c, eps: e }, beta, b, &mut grad)?;
            parts.recon += p.recon / b;
            parts.kl += p.kl / b;
        }
        parts.total = parts.recon + beta * parts.kl;
        Ok((parts, grad))
    }

    fn accumulate(
        &self,
        s: Sample<'_>,
        beta: f64,
        b: f64,
        grad: &mut CvaeNets,
    ) -> Result<LossParts> {
        let (p, enc, dec) = self.forward_taped(s.x, s.c, s.eps)?;
        let d = s.x.len() as f64;
        let dy: Vec<f64> = p
            .recon
            .iter()
            .zip(s.x)
            .map(|(r, x)| 2.0 * (r - x) / (d * b))
            .collect();
        let d_dec_in = self.decoder.backward(&dec, &dy, &mut grad.decoder);
        let l = self.latent_dim;
        let mut d_enc_out = vec![0.0; 2 * l];
        for k in 0..l {
            let dz = d_dec_in[k];
            let sd = (0.5 * p.log_var[k]).exp();
            d_enc_out[k] = dz + beta * p.mu[k] / b;
            d_enc_out[l + k] = dz * s.eps[k] * 0.5 * sd + beta * 0.5 * p.log_var[k].exp_m1() / b;
        }
        self.encoder.backward(&enc, &d_enc_out, &mut grad.encoder);
        Ok(LossParts {
            total: 0.0,
            recon: mse(s.x, &p.recon),
            kl: kl_divergence(&p.mu, &p.log_var),
        })
    }

    pub fn params(&self) -> impl Iterator<Item = &f64> {
        self.encoder.params().chain(self.decoder.params())
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.encoder.params_mut().chain(self.decoder.params_mut())
    }
}

/// Position entries of `x_enc` minus the start positions, which share the
/// first `6 N_U` entries of the condition layout. The networks model this
/// displacement, so the start positions pass straight through.
pub fn displacement(x_enc: &[f64], c: &[f64], n_uav: usize) -> Vec<f64> {
    let mut r = x_enc.to_vec();
    for (v, c0) in r[..6 * n_uav].iter_mut().zip(c) {
        *v -= c0;
    }
    r
}

/// Inverse of [`displacement`].
pub fn undo_displacement(r: &[f64], c: &[f64], n_uav: usize) -> Vec<f64> {
    let mut x = r.to_vec();
    for (v, c0) in x[..6 * n_uav].iter_mut().zip(c) {
        *v += c0;
    }
    x
}

/// Per-dimension min/max of the training data; the networks see
/// `(v − min) / (max − min)` with a unit range where the data is constant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub x_min: Vec<f64>,
    pub x_max: Vec<f64>,
    pub c_min: Vec<f64>,
    pub c_max: Vec<f64>,
}

fn span(lo: f64, hi: f64) -> f64 {
    if hi - lo > 1e-12 {
        hi - lo
    } else {
        1.0
    }
}

impl NormStats {
    fn fit(xs: &[Vec<f64>], cs: &[Vec<f64>]) -> Self {
        let bounds = |vs: &[Vec<f64>]| {
            let d = vs.first().map_or(0, Vec::len);
            let mut lo = vec![f64::INFINITY; d];
            let mut hi = vec![f64::NEG_INFINITY; d];
            for v in vs {
                for k in 0..d {
                    lo[k] = lo[k].min(v[k]);
                    hi[k] = hi[k].max(v[k]);
                }
            }
            (lo, hi)
        };
        let (x_min, x_max) = bounds(xs);
        let (c_min, c_max) = bounds(cs);
        Self {
            x_min,
            x_max,
            c_min,
            c_max,
        }
    }

    fn scale(v: &[f64], lo: &[f64], hi: &[f64]) -> Vec<f64> {
        v.iter()
            .zip(lo.iter().zip(hi))
            .map(|(x, (l, h))| (x - l) / span(*l, *h))
            .collect()
    }

    pub fn scale_x(&self, x: &[f64]) -> Vec<f64> {
        Self::scale(x, &self.x_min, &self.x_max)
    }

    pub fn scale_c(&self, c: &[f64]) -> Vec<f64> {
        Self::scale(c, &self.c_min, &self.c_max)
    }

    pub fn unscale_x(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.x_min.iter().zip(&self.x_max))
            .map(|(v, (l, h))| l + v * span(*l, *h))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// KL weight after warm-up.
    pub beta: f64,
    /// Fraction of the epochs over which β ramps linearly from 0.
    pub beta_warmup: f64,
    pub seed: u64,
    pub hidden: Vec<usize>,
    pub latent_dim: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 5e-4,
            epochs: 200,
            batch_size: 32,
            beta: 1.0,
            beta_warmup: 0.1,
            seed: 1,
            hidden: vec![128, 128],
            latent_dim: 20,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("learning rate must be positive");
        }
        if self.epochs == 0 || self.batch_size == 0 || self.latent_dim == 0 {
            return bad("epochs, batch size and latent dimension must be positive");
        }
        if !(self.beta >= 0.0) || !(0.0..=1.0).contains(&self.beta_warmup) {
            return bad("beta must be non-negative and beta_warmup in [0, 1]");
        }
        if self.hidden.contains(&0) {
            return bad("hidden layers must be non-empty");
        }
        Ok(())
    }

    fn beta_at(&self, epoch: usize) -> f64 {
        let ramp = self.beta_warmup * self.epochs as f64;
        if ramp <= 0.0 {
            self.beta
        } else {
            self.beta * ((epoch + 1) as f64 / ramp).min(1.0)
        }
    }
}

/// Origin of one training pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub scenario_seed: u64,
    pub archive_index: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingSet {
    pub n_uav: usize,
    pub n_known: usize,
    pub x: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
    pub provenance: Vec<Provenance>,
}

impl TrainingSet {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// One `(encoded solution, condition)` pair per archive entry.
pub fn build_dataset(runs: &[(Scenario, ParetoArchive)]) -> Result<TrainingSet> {
    let Some((first, _)) = runs.first() else {
        return Err(Error::InvalidConfig(
            "no runs to build a dataset from".into(),
        ));
    };
    let (n_uav, n_known) = (first.n_uav(), first.n_known());
    let mut set = TrainingSet {
        n_uav,
        n_known,
        x: Vec::new(),
        c: Vec::new(),
        provenance: Vec::new(),
    };
    for (s, archive) in runs {
        if s.n_uav() != n_uav {
            return Err(Error::DimensionMismatch {
                expected: n_uav,
                found: s.n_uav(),
            });
        }
        if s.n_known() != n_known {
            return Err(Error::DimensionMismatch {
                expected: n_known,
                found: s.n_known(),
            });
        }
        let c = condition_vector(s);
        for (k, e) in archive.entries.iter().enumerate() {
            set.x.push(encode_solution(&e.solution, s)?);
            set.c.push(c.clone());
            set.provenance.push(Provenance {
                scenario_seed: s.rng_seed,
                archive_index: k,
            });
        }
    }
    Ok(set)
}

/// Trained model with everything needed to use it on a new scenario. The
/// `x` statistics describe the [`displacement`] form of the encodings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvaeModel {
    pub n_uav: usize,
    pub n_known: usize,
    pub nets: CvaeNets,
    pub stats: NormStats,
    pub hyper: TrainConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub beta: f64,
    pub total: f64,
    pub recon: f64,
    pub kl: f64,
}

/// Mini-batch Adam on the mean per-sample loss. Deterministic for a given
/// seed; aborts when the loss stops being finite.
pub fn train(ds: &TrainingSet, cfg: &TrainConfig) -> Result<(CvaeModel, Vec<EpochLoss>)> {
    cfg.validate()?;
    if ds.is_empty() {
        return Err(Error::InvalidConfig("training set is empty".into()));
    }
    let x_dim = solution_dim(ds.n_uav);
    let c_dim = condition_dim(ds.n_uav, ds.n_known);
    for (x, c) in ds.x.iter().zip(&ds.c) {
        if x.len() != x_dim || c.len() != c_dim {
            return Err(Error::DimensionMismatch {
                expected: x_dim + c_dim,
                found: x.len() + c.len(),
            });
        }
    }
    let residuals: Vec<Vec<f64>> =
        ds.x.iter()
            .zip(&ds.c)
            .map(|(x, c)| displacement(x, c, ds.n_uav))
            .collect();
    let stats = NormStats::fit(&residuals, &ds.c);
    let xs: Vec<Vec<f64>> = residuals.iter().map(|x| stats.scale_x(x)).collect();
    let cs: Vec<Vec<f64>> = ds.c.iter().map(|c| stats.scale_c(c)).collect();

    let mut nets = CvaeNets::new(
        x_dim,
        c_dim,
        &cfg.hidden,
        cfg.latent_dim,
        &mut stream(cfg.seed, Purpose::ModelInit, 0, 0),
    );
    let mut adam_enc = Adam::new(cfg.lr, nets.encoder.params().count());
    let mut adam_dec = Adam::new(cfg.lr, nets.decoder.params().count());
    let mut curve = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = (0..ds.len()).collect();
    for epoch in 0..cfg.epochs {
        let beta = cfg.beta_at(epoch);
        let mut rng = stream(cfg.seed, Purpose::Training, epoch as u64, 0);
        for k in (1..order.len()).rev() {
            order.swap(k, rng.random_range(0..=k));
        }
        let mut sum = LossParts::default();
        for batch in order.chunks(cfg.batch_size) {
            let eps: Vec<Vec<f64>> = batch
                .iter()
                .map(|_| {
                    (0..cfg.latent_dim)
                        .map(|_| rng.sample(StandardNormal))
                        .collect()
                })
                .collect();
            let bx: Vec<&[f64]> = batch.iter().map(|&i| xs[i].as_slice()).collect();
            let bc: Vec<&[f64]> = batch.iter().map(|&i| cs[i].as_slice()).collect();
            let be: Vec<&[f64]> = eps.iter().map(Vec::as_slice).collect();
            let (parts, grad) = nets.loss_and_grad(&bx, &bc, &be, beta)?;
            if !parts.total.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    loss: parts.total,
                });
            }
            let w = batch.len() as f64 / ds.len() as f64;
            sum.recon += w * parts.recon;
            sum.kl += w * parts.kl;
            adam_enc.apply(&mut nets.encoder, &grad.encoder);
            adam_dec.apply(&mut nets.decoder, &grad.decoder);
        }
        let total = sum.recon + beta * sum.kl;
        if !total.is_finite() || nets.params().any(|p| !p.is_finite()) {
            return Err(Error::Diverged { epoch, loss: total });
        }
        curve.push(EpochLoss {
            epoch,
            beta,
            total,
            recon: sum.recon,
            kl: sum.kl,
        });
    }
    let model = CvaeModel {
        n_uav: ds.n_uav,
        n_known: ds.n_known,
        nets,
        stats,
        hyper: cfg.clone(),
    };
    Ok((model, curve))
}

impl CvaeModel {
    /// Errors unless the model was trained for this scenario size.
    pub fn check_scenario(&self, s: &Scenario) -> Result<()> {
        if s.n_uav() != self.n_uav {
            return Err(Error::DimensionMismatch {
                expected: self.n_uav,
                found: s.n_uav(),
            });
        }
        if s.n_known() != self.n_known {
            return Err(Error::DimensionMismatch {
                expected: self.n_known,
                found: s.n_known(),
            });
        }
        Ok(())
    }

    fn validate_layout(&self) -> Result<()> {
        let x_dim = solution_dim(self.n_uav);
        let c_dim = condition_dim(self.n_uav, self.n_known);
        let ok = self.nets.is_consistent()
            && self.nets.x_dim() == x_dim
            && self.nets.c_dim() == c_dim
            && self.stats.x_min.len() == x_dim
            && self.stats.x_max.len() == x_dim
            && self.stats.c_min.len() == c_dim
            && self.stats.c_max.len() == c_dim
            && self.nets.params().all(|p| p.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::CheckpointIncompatible(format!(
                "layer sizes or statistics do not match N_U = {}, known eavesdroppers = {}",
                self.n_uav, self.n_known
            )))
        }
    }

    /// Decodes one latent draw for scenario `s` into an encoded solution.
    pub fn sample_encoding(&self, s: &Scenario, z: &[f64]) -> Result<Vec<f64>> {
        self.check_scenario(s)?;
        let raw = condition_vector(s);
        let r = self
            .stats
            .unscale_x(&self.nets.decode(z, &self.stats.scale_c(&raw))?);
        Ok(undo_displacement(&r, &raw, self.n_uav))
    }
}

/// `n` candidates decoded from prior draws `z ~ N(0, I)`, each repaired.
pub fn generate_population<R: Rng + ?Sized>(
    m: &CvaeModel,
    s: &Scenario,
    n: usize,
    rng: &mut R,
) -> Result<Vec<RepairOutcome>> {
    m.check_scenario(s)?;
    (0..n)
        .map(|_| {
            let z: Vec<f64> = (0..m.nets.latent_dim)
                .map(|_| rng.sample(StandardNormal))
                .collect();
            decode_solution(&m.sample_encoding(s, &z)?, s)
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    format: String,
    version: u64,
    model: CvaeModel,
}

pub fn save_checkpoint(m: &CvaeModel, path: impl AsRef<Path>) -> Result<()> {
    write_json(
        path.as_ref(),
        &CheckpointFile {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            model: m.clone(),
        },
    )
}

/// Loads a checkpoint, refusing files whose layer sizes or statistics do
/// not match their declared layout.
pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<CvaeModel> {
    let path = path.as_ref();
    let value =
        read_envelope(path, CHECKPOINT_FORMAT, CHECKPOINT_VERSION).map_err(|e| match e {
            Error::SchemaVersion { .. } | Error::MalformedFile(_) => {
                Error::CheckpointIncompatible(e.to_string())
            }
            other => other,
        })?;
    let file: CheckpointFile = serde_json::from_value(value)
        .map_err(|e| Error::CheckpointIncompatible(format!("{}: {e}", path.display())))?;
    file.model.validate_layout()?;
    Ok(file.model)
}
