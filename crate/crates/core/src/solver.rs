//! ADMM solver for low-rank tensor completion with a sum of mode-q
//! tensor p-th order tau norms.
//!
//! The model is
//!
//! ```text
//! min_B  sum_q beta_q ||unfold_q(B)||_tau_p   s.t.  P_Omega(B) = P_Omega(O)
//! ```
//!
//! split with one auxiliary tensor `M_q` and multiplier `T_q` per mode pair.
//! Each iteration updates `B` (closed form), every `M_q` (proximal step on
//! the mode-q unfolding), every `T_q`, and then grows `rho_q` by `mu`.

use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fourier::FourierOptions;
use crate::penalty::PenaltySpec;
use crate::tensor::{fold_q, unfold_q, DenseTensor, ModeQIndex};
use crate::tensor_prox::tensor_ptau_prox_with;

/// Observed-entry set Omega.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservationMask {
    shape: Vec<usize>,
    observed: Vec<bool>,
}

impl ObservationMask {
    pub fn new(shape: Vec<usize>, observed: Vec<bool>) -> Result<Self> {
        // Reuse the tensor shape checks.
        DenseTensor::zeros(&shape)?;
        if shape.iter().product::<usize>() != observed.len() {
            return Err(Error::DataLength {
                shape,
                len: observed.len(),
            });
        }
        Ok(Self { shape, observed })
    }

    /// Every entry observed.
    pub fn full(shape: &[usize]) -> Result<Self> {
        Self::new(shape.to_vec(), vec![true; shape.iter().product()])
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.observed
    }

    pub fn is_observed(&self, linear: usize) -> bool {
        self.observed[linear]
    }

    pub fn count(&self) -> usize {
        self.observed.iter().filter(|&&o| o).count()
    }

    /// Sampling rate `|Omega| / numel`.
    pub fn sr(&self) -> f64 {
        self.count() as f64 / self.observed.len() as f64
    }

    pub fn complement(&self) -> Self {
        Self {
            shape: self.shape.clone(),
            observed: self.observed.iter().map(|&o| !o).collect(),
        }
    }

    /// `P_Omega(t)`: observed entries kept, the rest set to zero.
    pub fn project(&self, t: &DenseTensor) -> Result<DenseTensor> {
        t.expect_shape(&self.shape)?;
        let data = t
            .data()
            .iter()
            .zip(&self.observed)
            .map(|(&v, &o)| if o { v } else { 0.0 })
            .collect();
        DenseTensor::new(self.shape.clone(), data)
    }
}

/// Coefficient handed to the proximal operator in the `M_q` update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProxWeight {
    /// `beta_q / rho_q`, the weight that actually minimizes the `M_q` subproblem.
    #[default]
    Consistent,
    /// `rho_q / beta_q`, kept for comparison runs.
    Inverted,
}

/// When the iteration is declared converged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StopRule {
    /// `rel_change <= eps` only.
    Change,
    /// `rel_change <= eps` and `||B - M_q||_F <= eps ||B||_F` for every pair.
    /// Guards against stalls where the proximal step annihilates every `M_q`
    /// and `B` stops moving long before the constraint is met.
    #[default]
    ChangeAndFeasibility,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub penalty: PenaltySpec,
    /// Weights per mode pair; `None` means uniform over `mode_pairs`.
    pub beta: Option<Vec<f64>>,
    /// Initial `rho_q`; a single value is broadcast to every pair.
    pub rho0: Vec<f64>,
    pub mu: f64,
    pub eps: f64,
    pub max_iter: usize,
    /// Mode-pair numbers `q`; `None` means all `N(N-1)/2` pairs.
    pub mode_pairs: Option<Vec<usize>>,
    pub prox_weight: ProxWeight,
    pub stop_rule: StopRule,
    /// Upper bound on `rho_q`.
    pub rho_cap: f64,
    pub fourier: FourierOptions,
}

impl SolverConfig {
    pub fn new(penalty: PenaltySpec) -> Self {
        Self {
            penalty,
            beta: None,
            rho0: vec![1e-3],
            mu: 1.05,
            eps: 1e-4,
            max_iter: 500,
            mode_pairs: None,
            prox_weight: ProxWeight::Consistent,
            stop_rule: StopRule::ChangeAndFeasibility,
            rho_cap: 1e10,
            fourier: FourierOptions::default(),
        }
    }

    /// Validates the configuration against a tensor of the given order and
    /// returns the pairs with their weights and initial penalties.
    pub fn resolve(&self, order: usize) -> Result<Vec<PairSetup>> {
        if order < 3 {
            return Err(Error::InvalidParameter(format!(
                "completion needs a tensor of order >= 3, got {order}"
            )));
        }
        let pairs: Vec<ModeQIndex> = match &self.mode_pairs {
            None => ModeQIndex::all(order),
            Some(qs) => {
                if qs.is_empty() {
                    return Err(Error::InvalidParameter("no mode pairs selected".into()));
                }
                let mut seen = std::collections::HashSet::new();
                qs.iter()
                    .map(|&q| {
                        if !seen.insert(q) {
                            return Err(Error::InvalidParameter(format!(
                                "mode pair {q} listed twice"
                            )));
                        }
                        ModeQIndex::from_q(q, order)
                    })
                    .collect::<Result<_>>()?
            }
        };
        let n = pairs.len();
        let beta = match &self.beta {
            None => vec![1.0 / n as f64; n],
            Some(b) => {
                if b.len() != n {
                    return Err(Error::InvalidParameter(format!(
                        "{} weights given for {n} mode pairs",
                        b.len()
                    )));
                }
                if b.iter().any(|&w| !(w >= 0.0 && w.is_finite())) {
                    return Err(Error::InvalidParameter(
                        "weights must be finite and non-negative".into(),
                    ));
                }
                let sum: f64 = b.iter().sum();
                if (sum - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidParameter(format!(
                        "weights must sum to 1, got {sum}"
                    )));
                }
                b.clone()
            }
        };
        let rho0 = match self.rho0.len() {
            1 => vec![self.rho0[0]; n],
            len if len == n => self.rho0.clone(),
            len => {
                return Err(Error::InvalidParameter(format!(
                    "{len} initial penalties given for {n} mode pairs"
                )))
            }
        };
        if rho0.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
            return Err(Error::InvalidParameter("rho0 must be positive".into()));
        }
        if !(self.mu > 1.0 && self.mu.is_finite()) {
            return Err(Error::InvalidParameter(format!("mu must be > 1, got {}", self.mu)));
        }
        if !(self.eps > 0.0) {
            return Err(Error::InvalidParameter(format!("eps must be > 0, got {}", self.eps)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be at least 1".into()));
        }
        if !(self.rho_cap >= rho0.iter().copied().fold(0.0, f64::max)) {
            return Err(Error::InvalidParameter("rho cap below rho0".into()));
        }
        if self.prox_weight == ProxWeight::Inverted && beta.iter().any(|&b| b == 0.0) {
            return Err(Error::InvalidParameter(
                "the rho/beta prox weight needs every beta > 0".into(),
            ));
        }
        Ok(pairs
            .into_iter()
            .zip(beta)
            .zip(rho0)
            .map(|((pair, beta), rho0)| PairSetup { pair, beta, rho0 })
            .collect())
    }
}

/// One mode pair with its weight and initial penalty parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairSetup {
    pub pair: ModeQIndex,
    pub beta: f64,
    pub rho0: f64,
}

/// Per-iteration diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationLog {
    pub iter: usize,
    /// `||B^{k+1} - B^k||_F^2 / ||B^k||_F^2`.
    pub rel_change: f64,
    /// `||B - M_q||_F` per pair.
    pub primal_residuals: Vec<f64>,
    /// `||T_q||_F` per pair.
    pub multiplier_norms: Vec<f64>,
    /// `sum_q beta_q ||unfold_q(M_q)||_tau_p`.
    pub objective: f64,
    /// Whether any `rho_q` hit the cap during this iteration.
    pub rho_capped: bool,
    /// Seconds since the start of the run.
    pub wall_time: f64,
}

/// Per-pair stationarity diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResidual {
    pub q: usize,
    /// `||B - M_q||_F`.
    pub feasibility: f64,
    /// `||T_q^{k+1} - T_q^k||_F / rho_q^k`.
    pub dual_drift: f64,
    /// `||T_q||_F`.
    pub multiplier_norm: f64,
}

/// ADMM iterate.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub b: DenseTensor,
    pub m: Vec<DenseTensor>,
    pub t: Vec<DenseTensor>,
    pub rho: Vec<f64>,
    pub iter: usize,
    pub pairs: Vec<PairSetup>,
    /// Last multiplier step divided by the `rho` that produced it.
    pub dual_drift: Vec<f64>,
    /// Norm of each `unfold_q(M_q)` after the last update.
    pub m_norms: Vec<f64>,
}

impl SolverState {
    /// `B^0 = P_Omega(O)`, `M_q^0 = B^0`, `T_q^0 = 0`.
    pub fn init(observed: &DenseTensor, mask: &ObservationMask, config: &SolverConfig) -> Result<Self> {
        observed.expect_shape(mask.shape())?;
        let pairs = config.resolve(observed.order())?;
        let b = mask.project(observed)?;
        let zero = DenseTensor::zeros(observed.shape())?;
        let n = pairs.len();
        Ok(Self {
            m: vec![b.clone(); n],
            t: vec![zero; n],
            rho: pairs.iter().map(|p| p.rho0).collect(),
            b,
            iter: 0,
            pairs,
            dual_drift: vec![0.0; n],
            m_norms: vec![0.0; n],
        })
    }

    /// `B = P_{Omega^c}((sum_q rho_q M_q - T_q) / sum_q rho_q) + P_Omega(O)`.
    pub fn update_b(&self, observed: &DenseTensor, mask: &ObservationMask) -> Result<DenseTensor> {
        observed.expect_shape(mask.shape())?;
        let rho_sum: f64 = self.rho.iter().sum();
        if !(rho_sum > 0.0) {
            return Err(Error::InvalidParameter("sum of rho_q is not positive".into()));
        }
        let mut data = vec![0.0; observed.len()];
        for ((m, t), &rho) in self.m.iter().zip(&self.t).zip(&self.rho) {
            for ((acc, &mv), &tv) in data.iter_mut().zip(m.data()).zip(t.data()) {
                *acc += rho * mv - tv;
            }
        }
        for (i, v) in data.iter_mut().enumerate() {
            *v = if mask.is_observed(i) {
                observed.data()[i]
            } else {
                *v / rho_sum
            };
        }
        DenseTensor::new(observed.shape().to_vec(), data)
    }

    fn prox_weight(&self, idx: usize, config: &SolverConfig) -> f64 {
        let (beta, rho) = (self.pairs[idx].beta, self.rho[idx]);
        match config.prox_weight {
            ProxWeight::Consistent => beta / rho,
            ProxWeight::Inverted => rho / beta,
        }
    }

    /// `M_q = fold_q(S_w(unfold_q(B + T_q / rho_q)))` with `w` the prox weight.
    /// Returns the new `M_q` and the norm of its unfolding.
    pub fn update_mq(&self, idx: usize, config: &SolverConfig) -> Result<(DenseTensor, f64)> {
        let q = self.pairs[idx].pair.q;
        let rho = self.rho[idx];
        let target = self.b.zip_map(&self.t[idx], |b, t| b + t / rho)?;
        let prox = tensor_ptau_prox_with(
            &unfold_q(&target, q)?,
            self.prox_weight(idx, config),
            &config.penalty,
            config.fourier,
        )?;
        Ok((fold_q(&prox.tensor, q, self.b.shape())?, prox.norm))
    }

    /// `T_q += rho_q (B - M_q)`, then `rho_q = min(mu rho_q, cap)`.
    /// Returns whether the cap bound.
    pub fn update_tq(&mut self, idx: usize, config: &SolverConfig) -> bool {
        let rho = self.rho[idx];
        let mut step_sq = 0.0;
        for ((t, &b), &m) in self.t[idx]
            .data_mut()
            .iter_mut()
            .zip(self.b.data())
            .zip(self.m[idx].data())
        {
            let step = rho * (b - m);
            step_sq += step * step;
            *t += step;
        }
        self.dual_drift[idx] = step_sq.sqrt() / rho;
        let grown = config.mu * rho;
        self.rho[idx] = grown.min(config.rho_cap);
        grown > config.rho_cap
    }

    /// One full iteration: B, all M_q, all T_q and rho_q.
    pub fn step(
        &mut self,
        observed: &DenseTensor,
        mask: &ObservationMask,
        config: &SolverConfig,
        start: Instant,
    ) -> Result<IterationLog> {
        let iteration = self.iter + 1;
        let b_new = self.update_b(observed, mask)?;
        if !b_new.all_finite() {
            return Err(Error::NonFinite { iteration });
        }
        let diff = (&b_new - &self.b).frobenius_norm_sq();
        let rel_change = diff / self.b.frobenius_norm_sq().max(1e-30);
        self.b = b_new;

        let updates = (0..self.pairs.len())
            .into_par_iter()
            .map(|idx| self.update_mq(idx, config))
            .collect::<Result<Vec<_>>>()?;
        for (idx, (m, norm)) in updates.into_iter().enumerate() {
            if !m.all_finite() || !norm.is_finite() {
                return Err(Error::NonFinite { iteration });
            }
            self.m[idx] = m;
            self.m_norms[idx] = norm;
        }
        let mut rho_capped = false;
        for idx in 0..self.pairs.len() {
            rho_capped |= self.update_tq(idx, config);
        }
        self.iter = iteration;

        let objective = self
            .pairs
            .iter()
            .zip(&self.m_norms)
            .map(|(p, n)| p.beta * n)
            .sum();
        Ok(IterationLog {
            iter: iteration,
            rel_change,
            primal_residuals: self.m.iter().map(|m| (&self.b - m).frobenius_norm()).collect(),
            multiplier_norms: self.t.iter().map(DenseTensor::frobenius_norm).collect(),
            objective,
            rho_capped,
            wall_time: start.elapsed().as_secs_f64(),
        })
    }

    pub fn kkt_residuals(&self) -> Vec<KktResidual> {
        self.pairs
            .iter()
            .enumerate()
            .map(|(idx, p)| KktResidual {
                q: p.pair.q,
                feasibility: (&self.b - &self.m[idx]).frobenius_norm(),
                dual_drift: self.dual_drift[idx],
                multiplier_norm: self.t[idx].frobenius_norm(),
            })
            .collect()
    }
}

/// Completed tensor plus the run history.
#[derive(Debug, Clone)]
pub struct SolveOutput {
    pub tensor: DenseTensor,
    pub log: Vec<IterationLog>,
    pub converged: bool,
    pub state: SolverState,
}

impl SolveOutput {
    pub fn iterations(&self) -> usize {
        self.log.len()
    }
}

/// Runs ADMM until `config.stop_rule` is met or `max_iter` is hit.
///
/// The first iteration never counts as converged when entries are missing:
/// with `M_q^0 = B^0` and `T_q^0 = 0` the first B-update reproduces `B^0`.
pub fn solve(observed: &DenseTensor, mask: &ObservationMask, config: &SolverConfig) -> Result<SolveOutput> {
    let mut state = SolverState::init(observed, mask, config)?;
    if !observed.all_finite() {
        return Err(Error::NonFinite { iteration: 0 });
    }
    let complete = mask.count() == mask.as_slice().len();
    let start = Instant::now();
    let mut log = Vec::new();
    let mut converged = false;
    while state.iter < config.max_iter {
        let entry = state.step(observed, mask, config, start)?;
        let feasible = match config.stop_rule {
            StopRule::Change => true,
            StopRule::ChangeAndFeasibility => {
                let bound = config.eps * state.b.frobenius_norm();
                entry.primal_residuals.iter().all(|&r| r <= bound)
            }
        };
        // A complete mask pins B to the observation, so one pass is final.
        let done = complete || (entry.rel_change <= config.eps && feasible && entry.iter > 1);
        log.push(entry);
        if done {
            converged = true;
            break;
        }
    }
    Ok(SolveOutput {
        tensor: state.b.clone(),
        log,
        converged,
        state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::penalty::PenaltyKind;
    use crate::tensor_prox::tensor_ptau_norm;

    fn lcg(shape: &[usize], seed: u64) -> DenseTensor {
        let mut s = seed ^ 0x2545F4914F6CDD1D;
        DenseTensor::from_fn(shape, |_| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        })
        .unwrap()
    }

    fn checker_mask(shape: &[usize]) -> ObservationMask {
        let n: usize = shape.iter().product();
        ObservationMask::new(shape.to_vec(), (0..n).map(|i| (i * 7) % 3 != 0).collect()).unwrap()
    }

    fn mpcp() -> SolverConfig {
        SolverConfig::new(PenaltySpec::from_tau_p(PenaltyKind::Mpcp, 0.5, 3.0).unwrap())
    }

    #[test]
    fn mask_accessors() {
        let m = checker_mask(&[3, 3, 3]);
        assert_eq!(m.count() + m.complement().count(), 27);
        assert!((m.sr() - m.count() as f64 / 27.0).abs() < 1e-15);
        assert_eq!(m.complement().complement(), m);
        assert_eq!(ObservationMask::full(&[2, 2]).unwrap().sr(), 1.0);
        assert!(ObservationMask::new(vec![2, 2], vec![true; 3]).is_err());
    }

    #[test]
    fn config_validation() {
        let c = mpcp();
        assert_eq!(c.resolve(3).unwrap().len(), 3);
        assert_eq!(c.resolve(4).unwrap().len(), 6);
        assert!(c.resolve(2).is_err());
        let mut bad = mpcp();
        bad.beta = Some(vec![0.5, 0.4, 0.2]);
        assert!(bad.resolve(3).is_err());
        let mut bad = mpcp();
        bad.mu = 1.0;
        assert!(bad.resolve(3).is_err());
        let mut sub = mpcp();
        sub.mode_pairs = Some(vec![3, 1]);
        sub.beta = Some(vec![0.25, 0.75]);
        let r = sub.resolve(3).unwrap();
        assert_eq!(r[0].pair.q, 3);
        assert_eq!(r[1].beta, 0.75);
        sub.mode_pairs = Some(vec![4]);
        assert!(sub.resolve(3).is_err());
    }

    #[test]
    fn b_update_single_pair_with_m_equal_o() {
        let o = lcg(&[3, 4, 2], 1);
        let mask = checker_mask(o.shape());
        let mut c = mpcp();
        c.mode_pairs = Some(vec![1]);
        let mut s = SolverState::init(&o, &mask, &c).unwrap();
        s.m[0] = o.clone();
        assert_eq!(s.update_b(&o, &mask).unwrap(), o);
    }

    #[test]
    fn b_update_full_mask_returns_observation() {
        let o = lcg(&[3, 4, 2], 2);
        let mask = ObservationMask::full(o.shape()).unwrap();
        let mut s = SolverState::init(&o, &mask, &mpcp()).unwrap();
        s.m = vec![lcg(o.shape(), 3); 3];
        s.t = vec![lcg(o.shape(), 4); 3];
        assert_eq!(s.update_b(&o, &mask).unwrap(), o);
    }

    #[test]
    fn b_update_weighted_average_by_hand() {
        let o = lcg(&[2, 3, 2], 5);
        let mask = checker_mask(o.shape());
        let mut c = mpcp();
        c.mode_pairs = Some(vec![1, 2]);
        c.beta = Some(vec![0.5, 0.5]);
        c.rho0 = vec![1.0, 3.0];
        let mut s = SolverState::init(&o, &mask, &c).unwrap();
        s.m = vec![lcg(o.shape(), 6), lcg(o.shape(), 7)];
        s.t = vec![lcg(o.shape(), 8), lcg(o.shape(), 9)];
        let b = s.update_b(&o, &mask).unwrap();
        for i in 0..o.len() {
            let expected = if mask.is_observed(i) {
                o.data()[i]
            } else {
                (1.0 * s.m[0].data()[i] - s.t[0].data()[i] + 3.0 * s.m[1].data()[i]
                    - s.t[1].data()[i])
                    / 4.0
            };
            assert!((b.data()[i] - expected).abs() < 1e-14);
        }
    }

    fn mq_objective(s: &SolverState, idx: usize, c: &SolverConfig, m: &DenseTensor) -> f64 {
        let q = s.pairs[idx].pair.q;
        let rho = s.rho[idx];
        let norm = tensor_ptau_norm(&unfold_q(m, q).unwrap(), &c.penalty).unwrap();
        let r = s.b.zip_map(m, |b, m| b - m).unwrap();
        let r = r.zip_map(&s.t[idx], |r, t| r + t / rho).unwrap();
        s.pairs[idx].beta * norm + 0.5 * rho * r.frobenius_norm_sq()
    }

    #[test]
    fn m_update_decreases_subproblem_objective() {
        let o = &lcg(&[4, 3, 5], 10) * 5.0;
        let mask = checker_mask(o.shape());
        let mut c = mpcp();
        c.rho0 = vec![0.5];
        let mut s = SolverState::init(&o, &mask, &c).unwrap();
        s.b = &o * 1.1;
        s.t = vec![lcg(o.shape(), 11), lcg(o.shape(), 12), lcg(o.shape(), 13)];
        for idx in 0..3 {
            let (m, _) = s.update_mq(idx, &c).unwrap();
            let target = s.b.zip_map(&s.t[idx], |b, t| b + t / s.rho[idx]).unwrap();
            let new = mq_objective(&s, idx, &c, &m);
            assert!(new <= mq_objective(&s, idx, &c, &s.m[idx]) + 1e-9);
            assert!(new <= mq_objective(&s, idx, &c, &target) + 1e-9);
        }
    }

    #[test]
    fn m_update_identity_and_zero_cases() {
        let o = &lcg(&[4, 3, 5], 14) * 1e4;
        let mask = checker_mask(o.shape());
        let mut c = mpcp();
        c.rho0 = vec![1e6];
        let mut s = SolverState::init(&o, &mask, &c).unwrap();
        s.b = o.clone();
        let (m, _) = s.update_mq(0, &c).unwrap();
        assert!((&m - &o).frobenius_norm() / o.frobenius_norm() < 1e-10);
        s.b = DenseTensor::zeros(o.shape()).unwrap();
        let (m, _) = s.update_mq(1, &c).unwrap();
        assert!(m.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn t_update_and_rho_growth() {
        let o = lcg(&[3, 3, 3], 15);
        let mask = checker_mask(o.shape());
        let mut c = mpcp();
        c.rho0 = vec![2.0];
        let mut s = SolverState::init(&o, &mask, &c).unwrap();
        s.m[0] = s.b.clone();
        s.update_tq(0, &c);
        assert!(s.t[0].data().iter().all(|&v| v == 0.0));
        let delta = lcg(o.shape(), 16);
        s.m[1] = &s.b - &delta;
        s.update_tq(1, &c);
        assert!((&s.t[1] - &(&delta * 2.0)).frobenius_norm() < 1e-14);
        assert!((s.rho[1] - 2.1).abs() < 1e-15);
        for _ in 0..49 {
            s.update_tq(2, &c);
        }
        let expected = 2.0 * 1.05f64.powi(49);
        assert!((s.rho[2] - expected).abs() / expected < 1e-12);
    }

    #[test]
    fn rho_cap_binds() {
        let o = lcg(&[2, 2, 2], 17);
        let mask = checker_mask(o.shape());
        let mut c = mpcp();
        c.rho0 = vec![1.0];
        c.rho_cap = 1.1;
        let mut s = SolverState::init(&o, &mask, &c).unwrap();
        assert!(!s.update_tq(0, &c));
        assert!(s.update_tq(0, &c));
        assert_eq!(s.rho[0], 1.1);
    }

    #[test]
    fn full_mask_stops_after_one_iteration() {
        let o = lcg(&[3, 4, 5], 18);
        let mask = ObservationMask::full(o.shape()).unwrap();
        let out = solve(&o, &mask, &mpcp()).unwrap();
        assert_eq!(out.iterations(), 1);
        assert!(out.converged);
        assert_eq!(out.tensor, o);
    }

    #[test]
    fn observed_entries_are_kept_exactly() {
        let o = &lcg(&[5, 4, 6], 19) * 10.0;
        let mask = checker_mask(o.shape());
        let mut c = mpcp();
        c.max_iter = 15;
        let mut s = SolverState::init(&o, &mask, &c).unwrap();
        let start = Instant::now();
        for _ in 0..15 {
            s.step(&o, &mask, &c, start).unwrap();
            for i in 0..o.len() {
                if mask.is_observed(i) {
                    assert_eq!(s.b.data()[i].to_bits(), o.data()[i].to_bits());
                }
            }
        }
    }

    #[test]
    fn first_iteration_feasibility_and_kkt() {
        let o = &lcg(&[4, 4, 4], 20) * 10.0;
        let mask = checker_mask(o.shape());
        let c = mpcp();
        let mut s = SolverState::init(&o, &mask, &c).unwrap();
        let log = s.step(&o, &mask, &c, Instant::now()).unwrap();
        let kkt = s.kkt_residuals();
        for (k, r) in kkt.iter().zip(&log.primal_residuals) {
            assert_eq!(k.feasibility, *r);
            assert!((k.dual_drift - k.feasibility).abs() <= 1e-12 * (1.0 + k.feasibility));
        }
        let mut fixed = SolverState::init(&o, &mask, &c).unwrap();
        fixed.b = o.clone();
        fixed.m = vec![o.clone(); 3];
        assert!(fixed.kkt_residuals().iter().all(|k| k.feasibility == 0.0 && k.dual_drift == 0.0 && k.multiplier_norm == 0.0));
    }

    #[test]
    fn non_finite_input_is_rejected() {
        let mut o = lcg(&[3, 3, 3], 21);
        o.data_mut()[4] = f64::NAN;
        let mask = checker_mask(o.shape());
        let mut full_o = o.clone();
        full_o.data_mut()[0] = f64::INFINITY;
        assert!(matches!(solve(&full_o, &mask, &mpcp()), Err(Error::NonFinite { .. })));
    }
}
