//! The MPS classifier: an MPS over all encoded qubits with physical
//! dimension 2 everywhere plus one extra label leg of dimension L on a
//! designated (middle) site.
//!
//! Contracting the classifier bilinearly with an image chain yields a
//! length-L score vector; the prediction is the argmax. The network is
//! linear in each site tensor, so loss gradients come from cached left/right
//! environments. Every transfer step factors its norm into a log
//! accumulator, keeping intermediates finite on long chains.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::learn::loss::softmax_residuals;
use crate::mps::Mps;
use crate::tensors::{contract, Tensor};

/// Classifier chain; exactly one site carries the label leg.
#[derive(Clone, Debug)]
pub struct ClassifierMps {
    tensors: Vec<Tensor>,
    label_site: usize,
    label_count: usize,
}

/// Environment tensor with its factored-out log magnitude.
struct Env {
    t: Tensor,
    ln: f64,
}

impl Env {
    fn unit() -> Self {
        Env {
            t: Tensor::new(vec![1, 1], vec![Complex64::new(1.0, 0.0)]).unwrap(),
            ln: 0.0,
        }
    }

    fn rescale(mut t: Tensor, ln: f64) -> Result<Self> {
        let m = t.max_abs();
        if m == 0.0 {
            // A vanished environment zeroes every downstream score.
            return Ok(Env { t, ln });
        }
        let inv = Complex64::new(1.0 / m, 0.0);
        t = t.scale(inv);
        Ok(Env { t, ln: ln + m.ln() })
    }
}

impl ClassifierMps {
    /// Identity-stack initialization with Gaussian noise of the given width
    /// on every entry; deterministic for a fixed seed.
    pub fn init(
        sites: usize,
        chi_class: usize,
        label_count: usize,
        noise_width: f64,
        seed: u64,
    ) -> Result<Self> {
        if sites == 0 || chi_class == 0 || label_count == 0 {
            return Err(Error::Shape(
                "classifier needs sites, bond dimension and labels >= 1".into(),
            ));
        }
        let label_site = sites / 2;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, noise_width.max(0.0)).map_err(|e| {
            Error::Domain(format!("invalid noise width {noise_width}: {e}"))
        })?;
        let mut tensors = Vec::with_capacity(sites);
        for k in 0..sites {
            let left = if k == 0 { 1 } else { chi_class };
            let right = if k == sites - 1 { 1 } else { chi_class };
            let mut shape = vec![left, 2, right];
            if k == label_site {
                shape = vec![left, 2, label_count, right];
            }
            let t = Tensor::from_fn(shape, |idx| {
                let (a, b) = (idx[0], idx[idx.len() - 1]);
                let base = if a == b { 1.0 } else { 0.0 };
                let eps: f64 = if noise_width > 0.0 {
                    noise.sample(&mut rng)
                } else {
                    0.0
                };
                Complex64::new(base + eps, 0.0)
            });
            tensors.push(t);
        }
        Ok(ClassifierMps {
            tensors,
            label_site,
            label_count,
        })
    }

    /// Rebuilds a classifier from raw site tensors (checkpoint loading).
    pub fn from_tensors(
        tensors: Vec<Tensor>,
        label_site: usize,
        label_count: usize,
    ) -> Result<Self> {
        if label_site >= tensors.len() {
            return Err(Error::Index(format!(
                "label site {label_site} out of range for {} sites",
                tensors.len()
            )));
        }
        for (k, t) in tensors.iter().enumerate() {
            let want = if k == label_site { 4 } else { 3 };
            if t.rank() != want {
                return Err(Error::Shape(format!(
                    "site {k} has rank {}, expected {want}",
                    t.rank()
                )));
            }
            if k == label_site && t.shape()[2] != label_count {
                return Err(Error::Shape(format!(
                    "label leg has extent {}, expected {label_count}",
                    t.shape()[2]
                )));
            }
        }
        Ok(ClassifierMps {
            tensors,
            label_site,
            label_count,
        })
    }

    pub fn site_count(&self) -> usize {
        self.tensors.len()
    }

    pub fn label_site(&self) -> usize {
        self.label_site
    }

    pub fn label_count(&self) -> usize {
        self.label_count
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    /// Total real degrees of freedom (re and im per complex entry).
    pub fn param_count(&self) -> usize {
        self.tensors.iter().map(|t| 2 * t.len()).sum()
    }

    /// Σ|w|² over all entries, the L2 regularization weight sum.
    pub fn weight_sq_sum(&self) -> f64 {
        self.tensors
            .iter()
            .map(|t| t.data().iter().map(|z| z.norm_sqr()).sum::<f64>())
            .sum()
    }

    /// Flattens every tensor entry as an (re, im) pair, site by site.
    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for t in &self.tensors {
            for z in t.data() {
                out.push(z.re);
                out.push(z.im);
            }
        }
        out
    }

    pub fn set_params_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::Dimension(format!(
                "{} values installed into {} parameters",
                flat.len(),
                self.param_count()
            )));
        }
        let mut pos = 0;
        for t in &mut self.tensors {
            for z in t.data_mut() {
                *z = Complex64::new(flat[pos], flat[pos + 1]);
                pos += 2;
            }
        }
        Ok(())
    }

    /// Flattens per-site gradient tensors with the same packing as
    /// [`Self::params_flat`].
    pub fn grads_flat(&self, grads: &[Tensor]) -> Result<Vec<f64>> {
        if grads.len() != self.tensors.len() {
            return Err(Error::Length(format!(
                "{} gradient tensors for {} sites",
                grads.len(),
                self.tensors.len()
            )));
        }
        let mut out = Vec::with_capacity(self.param_count());
        for (g, t) in grads.iter().zip(&self.tensors) {
            if g.shape() != t.shape() {
                return Err(Error::Shape(format!(
                    "gradient shape {:?} vs tensor shape {:?}",
                    g.shape(),
                    t.shape()
                )));
            }
            for z in g.data() {
                out.push(z.re);
                out.push(z.im);
            }
        }
        Ok(out)
    }

    fn check_image(&self, img: &Mps) -> Result<()> {
        if img.site_count() != self.tensors.len() {
            return Err(Error::Shape(format!(
                "image chain has {} sites, classifier {}",
                img.site_count(),
                self.tensors.len()
            )));
        }
        if img.phys_dims().iter().any(|&d| d != 2) {
            return Err(Error::Shape("image chain must have qubit sites".into()));
        }
        Ok(())
    }

    /// Absorbs one non-label site pair into a left-moving environment.
    fn step_left(&self, env: &Env, w: &Tensor, b: &Tensor) -> Result<Env> {
        // env (c, i); b (i, j, i'); w (c, j, c') -> (c', i')
        let t = contract(&env.t, b, &[(1, 0)])?;
        let next = contract(w, &t, &[(0, 0), (1, 1)])?;
        Env::rescale(next, env.ln)
    }

    /// Absorbs one non-label site pair into a right-moving environment.
    fn step_right(&self, env: &Env, w: &Tensor, b: &Tensor) -> Result<Env> {
        // b (i', j, i); env (c, i) -> t (i', j, c); w (c', j, c) -> (c', i')
        let t = contract(b, &env.t, &[(2, 1)])?;
        let next = contract(w, &t, &[(1, 1), (2, 2)])?;
        Env::rescale(next, env.ln)
    }

    /// Label tensor contracted with residual weights: Σ_λ r_λ W[:, :, λ, :].
    fn residual_label_tensor(&self, residuals: &[f64]) -> Result<Tensor> {
        let r = Tensor::new(
            vec![self.label_count],
            residuals.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        )?;
        contract(&self.tensors[self.label_site], &r, &[(2, 0)])
    }

    /// Left environments L_0..L_label (before each site up to the label) and
    /// right environments R_label..R_(n-1) (after each site down to the
    /// label).
    fn boundary_envs(&self, img: &Mps) -> Result<(Vec<Env>, Vec<Env>)> {
        let n = self.tensors.len();
        let mut lefts = Vec::with_capacity(self.label_site + 1);
        lefts.push(Env::unit());
        for k in 0..self.label_site {
            let next = self.step_left(&lefts[k], &self.tensors[k], img.tensor(k))?;
            lefts.push(next);
        }
        let mut rights = Vec::with_capacity(n - self.label_site);
        rights.push(Env::unit());
        for k in ((self.label_site + 1)..n).rev() {
            let prev = rights.last().unwrap();
            let next = self.step_right(prev, &self.tensors[k], img.tensor(k))?;
            rights.push(next);
        }
        rights.reverse(); // rights[i] is the env after site label_site + i
        Ok((lefts, rights))
    }

    /// Score vector: the real parts of the transfer contraction, with the
    /// accumulated log factors applied.
    pub fn scores(&self, img: &Mps) -> Result<Vec<f64>> {
        self.check_image(img)?;
        let (lefts, rights) = self.boundary_envs(img)?;
        self.scores_from_envs(img, lefts.last().unwrap(), rights.first().unwrap())
    }

    fn scores_from_envs(&self, img: &Mps, left: &Env, right: &Env) -> Result<Vec<f64>> {
        let w = &self.tensors[self.label_site];
        let b = img.tensor(self.label_site);
        // left (c, i); b (i, j, i') -> t (c, j, i')
        let t = contract(&left.t, b, &[(1, 0)])?;
        // w (c, j, λ, c') -> m (λ, c', i')
        let m = contract(w, &t, &[(0, 0), (1, 1)])?;
        // right (c', i') -> s (λ)
        let s = contract(&m, &right.t, &[(1, 0), (2, 1)])?;
        let scale = (left.ln + right.ln).exp();
        Ok(s.data().iter().map(|z| z.re * scale).collect())
    }

    /// Per-image cross-entropy gradients for every site tensor, alongside
    /// the scores. The gradient of the real loss w.r.t. a complex entry is
    /// packed as ∂L/∂Re + i·∂L/∂Im.
    pub fn grads(
        &self,
        img: &Mps,
        truth: usize,
        logit_scale: f64,
    ) -> Result<(Vec<f64>, Vec<Tensor>)> {
        self.check_image(img)?;
        if truth >= self.label_count {
            return Err(Error::Index(format!(
                "truth label {truth} out of range for {} classes",
                self.label_count
            )));
        }
        let n = self.tensors.len();
        let (lefts, rights) = self.boundary_envs(img)?;
        let scores = self.scores_from_envs(img, lefts.last().unwrap(), rights.first().unwrap())?;
        let residuals = softmax_residuals(&scores, truth, logit_scale);
        let w_res = self.residual_label_tensor(&residuals)?;

        let mut grads: Vec<Tensor> = self
            .tensors
            .iter()
            .map(|t| Tensor::zeros(t.shape().to_vec()))
            .collect();

        // Sites left of the label: plain left env, residual-weighted right
        // env swept through the label site.
        let mut right_res = self.step_right(
            &rights[0],
            &w_res,
            img.tensor(self.label_site),
        )?;
        for k in (0..self.label_site).rev() {
            let env_prod = {
                // lefts[k] (c, i); b (i, j, i') -> (c, j, i'); right (c', i') -> (c, j, c')
                let t = contract(&lefts[k].t, img.tensor(k), &[(1, 0)])?;
                contract(&t, &right_res.t, &[(2, 1)])?
            };
            let scale = (lefts[k].ln + right_res.ln).exp();
            grads[k] = env_prod.conj().scale(Complex64::new(scale, 0.0));
            if k > 0 {
                right_res = self.step_right(&right_res, &self.tensors[k], img.tensor(k))?;
            }
        }

        // Label site: grad[c, j, λ, c'] = r_λ · conj(L ⊗ B ⊗ R).
        {
            let left = lefts.last().unwrap();
            let right = &rights[0];
            let t = contract(&left.t, img.tensor(self.label_site), &[(1, 0)])?;
            let e3 = contract(&t, &right.t, &[(2, 1)])?; // (c, j, c')
            let scale = (left.ln + right.ln).exp();
            let shape = self.tensors[self.label_site].shape().to_vec();
            let (cl, cr) = (shape[0], shape[3]);
            let mut g = Tensor::zeros(shape);
            for c in 0..cl {
                for j in 0..2 {
                    for (lam, &r) in residuals.iter().enumerate() {
                        for cp in 0..cr {
                            let e = e3.get(&[c, j, cp]).conj();
                            g.set(
                                &[c, j, lam, cp],
                                e * Complex64::new(r * scale, 0.0),
                            );
                        }
                    }
                }
            }
            grads[self.label_site] = g;
        }

        // Sites right of the label: residual-weighted left env.
        let mut left_res = self.step_left(
            lefts.last().unwrap(),
            &w_res,
            img.tensor(self.label_site),
        )?;
        for k in self.label_site + 1..n {
            let env_prod = {
                let t = contract(&left_res.t, img.tensor(k), &[(1, 0)])?;
                contract(&t, &rights[k - self.label_site].t, &[(2, 1)])?
            };
            let scale = (left_res.ln + rights[k - self.label_site].ln).exp();
            grads[k] = env_prod.conj().scale(Complex64::new(scale, 0.0));
            if k + 1 < n {
                left_res = self.step_left(&left_res, &self.tensors[k], img.tensor(k))?;
            }
        }
        Ok((scores, grads))
    }
}

/// Argmax with ties broken by the lowest index.
pub fn argmax_score(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}
