use super::encoding;
use super::{CmaesConfig, CmaesError, StopReason, MAX_CONDITION};
use crate::rng::StreamRng;
use faer::{Mat, Side};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Statistics of one `tell`.
#[derive(Clone, Debug, PartialEq)]
pub struct GenerationSummary {
    /// Generations completed after this update (1 for the first `tell`).
    pub generation: u64,
    pub best: f64,
    pub mean: f64,
    pub std: f64,
    pub sigma: f64,
    pub axis_ratio: f64,
    pub evaluations: u64,
}

/// Full optimizer state. Sampling uses the eigenbasis from the most recent
/// refresh; refreshes happen every `eigen_interval()` generations.
#[derive(Clone, Debug)]
pub struct CmaesState {
    config: CmaesConfig,
    n: usize,
    mu: usize,
    weights: Vec<f64>,
    mueff: f64,
    cc: f64,
    cs: f64,
    c1: f64,
    cmu: f64,
    damps: f64,
    chi_n: f64,

    mean: Vec<f64>,
    sigma: f64,
    ps: Vec<f64>,
    pc: Vec<f64>,
    /// Row-major `n × n`; only the upper triangle (`j >= i`) is maintained.
    cov: Vec<f64>,
    /// Row-major eigenvectors (columns) of the covariance at the last refresh.
    basis: Vec<f64>,
    /// Square roots of the eigenvalues at the last refresh.
    scales: Vec<f64>,
    /// Packed upper triangle of the covariance the basis was computed from;
    /// `None` while the basis is still the identity.
    eigen_source: Option<Vec<f64>>,
    eigen_generation: u64,

    generation: u64,
    evaluations: u64,
    best_fitness: Option<f64>,
    best_candidate: Option<Vec<f64>>,
}

impl CmaesState {
    pub fn new(config: &CmaesConfig, initial_mean: Vec<f64>) -> Result<Self, CmaesError> {
        config.validate()?;
        let n = initial_mean.len();
        if n == 0 {
            return Err(CmaesError::BadConfig("search space has dimension 0".into()));
        }
        if initial_mean.iter().any(|v| !v.is_finite()) {
            return Err(CmaesError::BadConfig("initial mean contains non-finite values".into()));
        }
        let lambda = config.population_size;
        let mu = lambda / 2;
        let raw: Vec<f64> = (1..=mu).map(|i| (mu as f64 + 0.5).ln() - (i as f64).ln()).collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let mueff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
        let nf = n as f64;
        let cc = (4.0 + mueff / nf) / (nf + 4.0 + 2.0 * mueff / nf);
        let cs = (mueff + 2.0) / (nf + mueff + 5.0);
        let c1 = 2.0 / ((nf + 1.3).powi(2) + mueff);
        let cmu = (1.0 - c1).min(2.0 * (mueff - 2.0 + 1.0 / mueff) / ((nf + 2.0).powi(2) + mueff));
        let damps = 1.0 + 2.0 * (((mueff - 1.0) / (nf + 1.0)).sqrt() - 1.0).max(0.0) + cs;
        let chi_n = nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf));

        Ok(CmaesState {
            config: config.clone(),
            n,
            mu,
            weights,
            mueff,
            cc,
            cs,
            c1,
            cmu,
            damps,
            chi_n,
            mean: initial_mean,
            sigma: config.init_sigma,
            ps: vec![0.0; n],
            pc: vec![0.0; n],
            cov: identity(n),
            basis: identity(n),
            scales: vec![1.0; n],
            eigen_source: None,
            eigen_generation: 0,
            generation: 0,
            evaluations: 0,
            best_fitness: None,
            best_candidate: None,
        })
    }

    pub fn config(&self) -> &CmaesConfig {
        &self.config
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn population_size(&self) -> usize {
        self.config.population_size
    }

    /// Number of parents used in recombination.
    pub fn parent_count(&self) -> usize {
        self.mu
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mueff(&self) -> f64 {
        self.mueff
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    /// Best fitness and candidate seen over all `tell` calls.
    pub fn best(&self) -> Option<(f64, &[f64])> {
        Some((self.best_fitness?, self.best_candidate.as_deref()?))
    }

    /// Seeds the best-so-far record, e.g. with an already evaluated start point.
    pub fn record_candidate(&mut self, candidate: &[f64], fitness: f64) {
        if self.best_fitness.is_none_or(|b| fitness > b) {
            self.best_fitness = Some(fitness);
            self.best_candidate = Some(candidate.to_vec());
        }
    }

    pub fn covariance(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        self.cov[a * self.n + b]
    }

    /// Full symmetric covariance, row-major.
    pub fn covariance_matrix(&self) -> Vec<f64> {
        let n = self.n;
        let mut full = self.cov.clone();
        for i in 0..n {
            for j in 0..i {
                full[i * n + j] = self.cov[j * n + i];
            }
        }
        full
    }

    /// Eigenvalues of the covariance at the last refresh.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.scales.iter().map(|d| d * d).collect()
    }

    pub fn axis_ratio(&self) -> f64 {
        let (lo, hi) = min_max(&self.scales);
        hi / lo
    }

    pub fn condition_number(&self) -> f64 {
        self.axis_ratio().powi(2)
    }

    /// Generations between eigendecompositions.
    pub fn eigen_interval(&self) -> u64 {
        let g = 1.0 / (10.0 * self.n as f64 * (self.c1 + self.cmu));
        (g.floor() as u64).max(1)
    }

    /// Samples `population_size` candidates around the mean.
    pub fn ask(&self, rng: &mut StreamRng) -> Vec<Vec<f64>> {
        let n = self.n;
        let mut scaled = vec![0.0; n];
        (0..self.config.population_size)
            .map(|_| {
                for (s, d) in scaled.iter_mut().zip(&self.scales) {
                    let z: f64 = rng.sample(StandardNormal);
                    *s = d * z;
                }
                let mut x = self.mean.clone();
                for (r, xr) in x.iter_mut().enumerate() {
                    let row = &self.basis[r * n..][..n];
                    *xr += self.sigma * dot(row, &scaled);
                }
                x
            })
            .collect()
    }

    /// Updates the distribution from evaluated candidates (higher fitness is better).
    /// Ties keep candidate order.
    pub fn tell(&mut self, candidates: &[Vec<f64>], fitness: &[f64]) -> Result<GenerationSummary, CmaesError> {
        let lambda = self.config.population_size;
        let n = self.n;
        if candidates.len() != lambda {
            return Err(CmaesError::LengthMismatch { expected: lambda, got: candidates.len() });
        }
        if fitness.len() != lambda {
            return Err(CmaesError::LengthMismatch { expected: lambda, got: fitness.len() });
        }
        if let Some(bad) = candidates.iter().find(|c| c.len() != n) {
            return Err(CmaesError::LengthMismatch { expected: n, got: bad.len() });
        }
        if let Some(index) = fitness.iter().position(|f| !f.is_finite()) {
            return Err(CmaesError::NonFiniteFitness { index });
        }

        let mut order: Vec<usize> = (0..lambda).collect();
        order.sort_by(|&a, &b| fitness[b].total_cmp(&fitness[a]));
        self.record_candidate(&candidates[order[0]], fitness[order[0]]);

        let old_mean = self.mean.clone();
        let steps: Vec<Vec<f64>> = order[..self.mu]
            .iter()
            .map(|&k| candidates[k].iter().zip(&old_mean).map(|(x, m)| (x - m) / self.sigma).collect())
            .collect();
        let mut mean_step = vec![0.0; n];
        for (w, y) in self.weights.iter().zip(&steps) {
            for (s, v) in mean_step.iter_mut().zip(y) {
                *s += w * v;
            }
        }
        for (m, s) in self.mean.iter_mut().zip(&mean_step) {
            *m += self.sigma * s;
        }

        // Conjugate evolution path uses C^{-1/2} from the current eigenbasis.
        let whitened = self.inverse_sqrt_times(&mean_step);
        let ps_gain = (self.cs * (2.0 - self.cs) * self.mueff).sqrt();
        for (p, v) in self.ps.iter_mut().zip(&whitened) {
            *p = (1.0 - self.cs) * *p + ps_gain * v;
        }
        let ps_norm = norm(&self.ps);
        let decay = 1.0 - (1.0 - self.cs).powf(2.0 * (self.generation + 1) as f64);
        let hsig = ps_norm / decay.sqrt() / self.chi_n < 1.4 + 2.0 / (n as f64 + 1.0);
        let pc_gain = if hsig { (self.cc * (2.0 - self.cc) * self.mueff).sqrt() } else { 0.0 };
        for (p, s) in self.pc.iter_mut().zip(&mean_step) {
            *p = (1.0 - self.cc) * *p + pc_gain * s;
        }

        let keep = 1.0 - self.c1 - self.cmu + if hsig { 0.0 } else { self.c1 * self.cc * (2.0 - self.cc) };
        for i in 0..n {
            let row = &mut self.cov[i * n + i..(i + 1) * n];
            let pci = self.c1 * self.pc[i];
            for (c, p) in row.iter_mut().zip(&self.pc[i..]) {
                *c = keep * *c + pci * p;
            }
        }
        for (w, y) in self.weights.iter().zip(&steps) {
            for i in 0..n {
                let s = self.cmu * w * y[i];
                if s == 0.0 {
                    continue;
                }
                let row = &mut self.cov[i * n + i..(i + 1) * n];
                for (c, v) in row.iter_mut().zip(&y[i..]) {
                    *c += s * v;
                }
            }
        }

        self.sigma *= ((self.cs / self.damps) * (ps_norm / self.chi_n - 1.0)).exp();
        self.generation += 1;
        self.evaluations += lambda as u64;

        if self.generation - self.eigen_generation >= self.eigen_interval() {
            self.refresh_eigen()?;
        }

        let mean_f = fitness.iter().sum::<f64>() / lambda as f64;
        let var = fitness.iter().map(|f| (f - mean_f).powi(2)).sum::<f64>() / lambda as f64;
        Ok(GenerationSummary {
            generation: self.generation,
            best: fitness[order[0]],
            mean: mean_f,
            std: var.sqrt(),
            sigma: self.sigma,
            axis_ratio: self.axis_ratio(),
            evaluations: self.evaluations,
        })
    }

    /// First satisfied stop condition, checked in the order
    /// target, evaluation budget, conditioning.
    pub fn should_stop(&self) -> Option<StopReason> {
        if let (Some(target), Some(best)) = (self.config.target_fitness, self.best_fitness) {
            if best >= target {
                return Some(StopReason::TargetReached);
            }
        }
        if let Some(max) = self.config.max_evaluations {
            if self.evaluations >= max {
                return Some(StopReason::MaxEvals);
            }
        }
        let cond = self.condition_number();
        if !cond.is_finite() || cond > MAX_CONDITION {
            return Some(StopReason::ConditionNumber);
        }
        None
    }

    /// Recomputes the eigenbasis from the current covariance.
    pub fn refresh_eigen(&mut self) -> Result<(), CmaesError> {
        let packed = pack_upper(&self.cov, self.n);
        self.apply_eigen_source(&packed)?;
        self.eigen_source = Some(packed);
        self.eigen_generation = self.generation;
        Ok(())
    }

    fn apply_eigen_source(&mut self, packed: &[f64]) -> Result<(), CmaesError> {
        let n = self.n;
        if packed.iter().any(|v| !v.is_finite()) {
            return Err(CmaesError::Eigen);
        }
        let full = unpack_upper(packed, n);
        let m = Mat::from_fn(n, n, |i, j| full[i * n + j]);
        let evd = m.self_adjoint_eigen(Side::Upper).map_err(|_| CmaesError::Eigen)?;
        let vals: Vec<f64> = (0..n).map(|i| evd.S()[i]).collect();
        let u = evd.U();
        let (lo, hi) = min_max(&vals);
        if !hi.is_finite() || hi <= 0.0 {
            return Err(CmaesError::Eigen);
        }
        // Lift a numerically non-positive spectrum by a diagonal shift, which
        // keeps the eigenvectors.
        let floor = hi * 1e-15;
        let shift = if lo < floor { floor - lo } else { 0.0 };
        if shift > 0.0 {
            for i in 0..n {
                self.cov[i * n + i] += shift;
            }
        }
        self.scales = vals.iter().map(|v| (v + shift).sqrt()).collect();
        for r in 0..n {
            for c in 0..n {
                self.basis[r * n + c] = u[(r, c)];
            }
        }
        Ok(())
    }

    /// `B D^{-1} B^T v` with the current eigenbasis.
    fn inverse_sqrt_times(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut coords = vec![0.0; n];
        for (r, vr) in v.iter().enumerate() {
            let row = &self.basis[r * n..][..n];
            for (c, b) in coords.iter_mut().zip(row) {
                *c += b * vr;
            }
        }
        for (c, d) in coords.iter_mut().zip(&self.scales) {
            *c /= d;
        }
        (0..n).map(|r| dot(&self.basis[r * n..][..n], &coords)).collect()
    }

    pub fn to_json(&self) -> Result<String, CmaesError> {
        serde_json::to_string(&self.record()).map_err(|e| CmaesError::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self, CmaesError> {
        let rec: StateRecord = serde_json::from_str(text).map_err(|e| CmaesError::Format(e.to_string()))?;
        Self::from_record(rec)
    }

    fn record(&self) -> StateRecord {
        StateRecord {
            format: STATE_FORMAT.into(),
            config: self.config.clone(),
            mean: self.mean.clone(),
            sigma: self.sigma,
            ps: self.ps.clone(),
            pc: self.pc.clone(),
            covariance_upper: pack_upper(&self.cov, self.n),
            eigen_source_upper: self.eigen_source.clone(),
            eigen_generation: self.eigen_generation,
            generation: self.generation,
            evaluations: self.evaluations,
            best_fitness: self.best_fitness,
            best_candidate: self.best_candidate.clone(),
        }
    }

    fn from_record(rec: StateRecord) -> Result<Self, CmaesError> {
        if rec.format != STATE_FORMAT {
            return Err(CmaesError::Format(format!("unknown format tag {:?}", rec.format)));
        }
        let mut s = CmaesState::new(&rec.config, rec.mean)?;
        let n = s.n;
        let packed_len = n * (n + 1) / 2;
        let check = |name: &str, len: usize, want: usize| {
            if len == want {
                Ok(())
            } else {
                Err(CmaesError::Format(format!("{name} has {len} entries, expected {want}")))
            }
        };
        check("ps", rec.ps.len(), n)?;
        check("pc", rec.pc.len(), n)?;
        check("covariance", rec.covariance_upper.len(), packed_len)?;
        if let Some(src) = &rec.eigen_source_upper {
            check("eigen source", src.len(), packed_len)?;
        }
        if let Some(c) = &rec.best_candidate {
            check("best candidate", c.len(), n)?;
        }
        s.sigma = rec.sigma;
        s.ps = rec.ps;
        s.pc = rec.pc;
        s.cov = unpack_upper(&rec.covariance_upper, n);
        s.generation = rec.generation;
        s.evaluations = rec.evaluations;
        s.eigen_generation = rec.eigen_generation;
        s.best_fitness = rec.best_fitness;
        s.best_candidate = rec.best_candidate;
        if let Some(src) = rec.eigen_source_upper {
            // The saved covariance already carries any repair shift, so keep it.
            let cov = std::mem::take(&mut s.cov);
            s.cov = vec![0.0; n * n];
            s.apply_eigen_source(&src)?;
            s.cov = cov;
            s.eigen_source = Some(src);
        }
        Ok(s)
    }
}

impl Serialize for CmaesState {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.record().serialize(s)
    }
}

impl<'de> Deserialize<'de> for CmaesState {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let rec = StateRecord::deserialize(d)?;
        CmaesState::from_record(rec).map_err(serde::de::Error::custom)
    }
}

const STATE_FORMAT: &str = "seesaw-cmaes-state";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StateRecord {
    format: String,
    config: CmaesConfig,
    #[serde(with = "encoding")]
    mean: Vec<f64>,
    sigma: f64,
    #[serde(with = "encoding")]
    ps: Vec<f64>,
    #[serde(with = "encoding")]
    pc: Vec<f64>,
    #[serde(with = "encoding")]
    covariance_upper: Vec<f64>,
    #[serde(with = "optional_encoding")]
    eigen_source_upper: Option<Vec<f64>>,
    eigen_generation: u64,
    generation: u64,
    evaluations: u64,
    best_fitness: Option<f64>,
    #[serde(with = "optional_encoding")]
    best_candidate: Option<Vec<f64>>,
}

mod optional_encoding {
    use super::encoding;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<Vec<f64>>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(v) => s.serialize_some(&encoding::encode(v)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<f64>>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|t| encoding::decode(&t).map_err(serde::de::Error::custom))
            .transpose()
    }
}

fn identity(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0;
    }
    m
}

fn pack_upper(m: &[f64], n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        out.extend_from_slice(&m[i * n + i..(i + 1) * n]);
    }
    out
}

fn unpack_upper(packed: &[f64], n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    let mut k = 0;
    for i in 0..n {
        for j in i..n {
            m[i * n + j] = packed[k];
            m[j * n + i] = packed[k];
            k += 1;
        }
    }
    m
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Seed;

    fn cfg(lambda: usize, sigma: f64) -> CmaesConfig {
        CmaesConfig { population_size: lambda, init_sigma: sigma, ..Default::default() }
    }

    fn sphere(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum()
    }

    fn rosenbrock(x: &[f64]) -> f64 {
        x.windows(2).map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2)).sum()
    }

    /// Minimizes `f` by maximizing `-f`; returns the best value and evaluations used.
    fn minimize(f: fn(&[f64]) -> f64, start: Vec<f64>, sigma: f64, lambda: usize, budget: u64, tol: f64, seed: u64) -> (f64, u64) {
        let mut s = CmaesState::new(&cfg(lambda, sigma), start).unwrap();
        let mut rng = Seed(seed).rng();
        let mut best = f64::INFINITY;
        while s.evaluations() < budget {
            let xs = s.ask(&mut rng);
            let fit: Vec<f64> = xs.iter().map(|x| -f(x)).collect();
            s.tell(&xs, &fit).unwrap();
            best = best.min(-s.best().unwrap().0);
            if best < tol || s.should_stop().is_some() {
                break;
            }
        }
        (best, s.evaluations())
    }

    #[test]
    fn initial_state() {
        let s = CmaesState::new(&cfg(32, 0.1), vec![0.0; 5]).unwrap();
        assert_eq!(s.sigma(), 0.1);
        assert_eq!(s.covariance_matrix(), identity(5));
        assert_eq!(s.parent_count(), 16);
        assert!((s.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(s.weights().windows(2).all(|w| w[0] > w[1]));
        assert_eq!(s.ask(&mut Seed(1).rng()).len(), 32);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(CmaesState::new(&cfg(1, 0.1), vec![0.0]).is_err());
        assert!(CmaesState::new(&cfg(4, 0.0), vec![0.0]).is_err());
        assert!(CmaesState::new(&cfg(4, 0.1), vec![]).is_err());
        let mut s = CmaesState::new(&cfg(4, 0.1), vec![0.0; 3]).unwrap();
        let xs = s.ask(&mut Seed(0).rng());
        assert!(matches!(s.tell(&xs, &[0.0; 3]), Err(CmaesError::LengthMismatch { .. })));
        assert!(matches!(s.tell(&xs, &[0.0, f64::NAN, 0.0, 0.0]), Err(CmaesError::NonFiniteFitness { index: 1 })));
    }

    #[test]
    fn vanishing_sigma_samples_the_mean() {
        let mean = vec![0.5, -1.0, 2.0];
        let s = CmaesState::new(&cfg(8, 1e-300), mean.clone()).unwrap();
        for x in s.ask(&mut Seed(2).rng()) {
            for (a, b) in x.iter().zip(&mean) {
                assert!((a - b).abs() < 1e-200);
            }
        }
    }

    #[test]
    fn sample_covariance_matches_sigma_squared_identity() {
        let s = CmaesState::new(&cfg(10_000, 0.5), vec![1.0; 4]).unwrap();
        let xs = s.ask(&mut Seed(3).rng());
        let m = xs.len() as f64;
        for i in 0..4 {
            for j in 0..4 {
                let c = xs.iter().map(|x| (x[i] - 1.0) * (x[j] - 1.0)).sum::<f64>() / m;
                let want = if i == j { 0.25 } else { 0.0 };
                assert!((c - want).abs() < 0.05 * 0.25, "cov[{i}][{j}] = {c}");
            }
        }
    }

    #[test]
    fn equal_fitness_moves_mean_to_weighted_parent_mean() {
        let mut s = CmaesState::new(&cfg(6, 0.3), vec![0.0; 2]).unwrap();
        let xs = s.ask(&mut Seed(4).rng());
        s.tell(&xs, &[1.0; 6]).unwrap();
        let w = s.weights().to_vec();
        for d in 0..2 {
            let want: f64 = w.iter().zip(&xs).map(|(w, x)| w * x[d]).sum();
            assert!((s.mean()[d] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn sphere_10d() {
        let (best, evals) = minimize(sphere, vec![1.0; 10], 0.3, 10, 20_000, 1e-10, 11);
        assert!(best < 1e-10, "best {best} after {evals}");
        assert!(evals <= 20_000);
    }

    #[test]
    fn rosenbrock_5d() {
        let solved = (0..10)
            .filter(|&seed| minimize(rosenbrock, vec![0.0; 5], 0.5, 8, 100_000, 1e-6, 100 + seed).0 < 1e-6)
            .count();
        assert!(solved >= 9, "solved {solved}/10");
    }

    #[test]
    fn deterministic_for_a_seed() {
        let run = || {
            let mut s = CmaesState::new(&cfg(12, 0.2), vec![0.3; 6]).unwrap();
            let mut rng = Seed(9).rng();
            for _ in 0..30 {
                let xs = s.ask(&mut rng);
                let fit: Vec<f64> = xs.iter().map(|x| -rosenbrock(x)).collect();
                s.tell(&xs, &fit).unwrap();
            }
            (s.mean().to_vec(), s.sigma(), s.covariance_matrix())
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn eigen_interval_is_lazy_in_high_dimension() {
        let s = CmaesState::new(&cfg(32, 0.1), vec![0.0; 2408]).unwrap();
        assert!(s.eigen_interval() > 1);
        let s = CmaesState::new(&cfg(32, 0.1), vec![0.0; 5]).unwrap();
        assert_eq!(s.eigen_interval(), 1);
    }

    #[test]
    fn stop_reasons_in_order() {
        let c = CmaesConfig { population_size: 4, init_sigma: 0.1, max_evaluations: Some(4), target_fitness: Some(0.5) };
        let mut s = CmaesState::new(&c, vec![0.0; 2]).unwrap();
        assert_eq!(s.should_stop(), None);
        let xs = s.ask(&mut Seed(0).rng());
        s.tell(&xs, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(s.should_stop(), Some(StopReason::TargetReached));
        let c = CmaesConfig { target_fitness: Some(5.0), ..c };
        let mut s = CmaesState::new(&c, vec![0.0; 2]).unwrap();
        s.tell(&xs, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(s.should_stop(), Some(StopReason::MaxEvals));
    }

    #[test]
    fn ill_conditioned_covariance_stops() {
        let mut s = CmaesState::new(&cfg(4, 0.1), vec![0.0; 2]).unwrap();
        s.cov = vec![1.0, 0.0, 0.0, 1e-16];
        s.refresh_eigen().unwrap();
        assert_eq!(s.should_stop(), Some(StopReason::ConditionNumber));
    }

    #[test]
    fn json_round_trip_resumes_identically() {
        let mut a = CmaesState::new(&cfg(8, 0.4), vec![0.5; 7]).unwrap();
        let mut rng = Seed(21).rng();
        for _ in 0..5 {
            let xs = a.ask(&mut rng);
            let fit: Vec<f64> = xs.iter().map(|x| -rosenbrock(x)).collect();
            a.tell(&xs, &fit).unwrap();
        }
        let mut b = CmaesState::from_json(&a.to_json().unwrap()).unwrap();
        let mut rb = rng.clone();
        for _ in 0..5 {
            let xa = a.ask(&mut rng);
            let xb = b.ask(&mut rb);
            assert_eq!(xa, xb);
            let fit: Vec<f64> = xa.iter().map(|x| -rosenbrock(x)).collect();
            a.tell(&xa, &fit).unwrap();
            b.tell(&xb, &fit).unwrap();
        }
        assert_eq!(a.mean(), b.mean());
        assert_eq!(a.covariance_matrix(), b.covariance_matrix());
        assert!(CmaesState::from_json("{}").is_err());
    }
}
