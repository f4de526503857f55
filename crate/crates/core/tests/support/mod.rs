//! Independent oracles shared by the integration tests and the acceptance suite.
#![allow(dead_code)]

pub mod sandwich;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use secbeam_core::algorithms::{init_mrt, PerfectOps, RegimeOps};
use secbeam_core::model::{sample_channels, ANTENNA_CIRCUIT_POWER_MW};
use secbeam_core::outage::OutageQuery;
use secbeam_core::solver::{solve, PowerBlock};
use secbeam_core::surrogates::Expr;
use secbeam_core::{BeamformerSet, ChannelSet, Regime, RunSeed, Scenario, SolverConfig, SubproblemModel};

/// A maximin subproblem with perfect channel knowledge around a random point.
pub struct TinySubproblem {
    pub terms: Vec<Expr>,
    pub constraints: Vec<Expr>,
    pub start: Vec<f64>,
    pub power: Vec<(std::ops::Range<usize>, f64)>,
}

pub fn tiny_scenario(m: usize, nt: usize) -> Scenario {
    let mut sc = Scenario::simulation_defaults(m, Regime::PerfectCsi, 20.0);
    sc.nt = nt;
    sc.pc = (m * nt) as f64 * ANTENNA_CIRCUIT_POWER_MW;
    sc
}

/// Expansion point: MRT scaled into the interior and rotated by a random
/// perturbation, so the instances are not all at full power.
pub fn tiny_subproblem(seed: u64) -> (Scenario, ChannelSet, TinySubproblem) {
    let sc = tiny_scenario(2, 2);
    let ch = sample_channels(&sc, RunSeed(seed));
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mrt = init_mrt(&sc, &ch.direct);
    let mut x = mrt.to_real();
    for v in &mut x {
        let z: f64 = StandardNormal.sample(&mut rng);
        *v += 0.5 * z;
    }
    let mut w = BeamformerSet::from_real(&x, sc.m, sc.nt);
    for i in 0..sc.m {
        let s = rng.random_range(0.3..0.95) * (sc.power[i] / w.norm_sq(i)).sqrt();
        w.w[i] *= num_complex::Complex64::from(s);
    }
    let ops = PerfectOps::new(&sc, &ch);
    let st = ops.initial_state(w.clone()).expect("nonzero beamformers");
    let layout = ops.layout(false);
    let (terms, constraints) = ops.subproblem(&st, &layout).expect("subproblem");
    let start = layout.pack(&w, None, None, None);
    let power = (0..sc.m).map(|i| (layout.w_block(i), sc.power[i])).collect();
    (sc, ch, TinySubproblem { terms, constraints, start, power })
}

impl TinySubproblem {
    /// Maximin value of the surrogate at `x`, or `None` outside the feasible set.
    pub fn value(&self, x: &[f64]) -> Option<f64> {
        for c in &self.constraints {
            if !(c.value(x)? >= 0.0) {
                return None;
            }
        }
        let mut v = f64::INFINITY;
        for t in &self.terms {
            v = v.min(t.value(x)?);
        }
        Some(v)
    }

    pub fn solve(&self) -> f64 {
        let mut start = self.start.clone();
        start.push(0.0);
        let power = self.power.iter().map(|(r, p)| PowerBlock { range: r.clone(), limit: *p }).collect();
        let model = SubproblemModel::epigraph(self.terms.clone(), self.constraints.clone(), start, power).unwrap();
        let out = solve(&model, &SolverConfig::default()).unwrap();
        self.value(&out.x[..self.start.len()]).expect("solver returns a feasible point")
    }

    /// Radial projection onto every power ball.
    fn project(&self, x: &mut [f64]) {
        for (range, p) in &self.power {
            let sq: f64 = x[range.clone()].iter().map(|v| v * v).sum();
            if sq > *p {
                let s = (p / sq).sqrt() * (1.0 - 1e-15);
                x[range.clone()].iter_mut().for_each(|v| *v *= s);
            }
        }
    }

    fn random_feasible(&self, rng: &mut ChaCha8Rng) -> Option<Vec<f64>> {
        for _ in 0..200 {
            let mut x = vec![0.0; self.start.len()];
            for (range, p) in &self.power {
                let r = p.sqrt() * rng.random_range(0.0f64..1.0).powf(1.0 / range.len() as f64);
                let dir: Vec<f64> = range.clone().map(|_| StandardNormal.sample(rng)).collect();
                let n = dir.iter().map(|d| d * d).sum::<f64>().sqrt();
                for (k, d) in range.clone().zip(dir) {
                    x[k] = r * d / n;
                }
            }
            if self.value(&x).is_some() {
                return Some(x);
            }
        }
        None
    }

    /// Soft minimum `-ln(sum exp(-beta t_i)) / beta`, within `ln(M) / beta` of the minimum.
    fn soft_value(&self, x: &[f64], beta: f64) -> Option<f64> {
        for c in &self.constraints {
            if !(c.value(x)? >= 0.0) {
                return None;
            }
        }
        let t: Vec<f64> = self.terms.iter().map(|e| e.value(x)).collect::<Option<_>>()?;
        let lo = t.iter().copied().fold(f64::INFINITY, f64::min);
        Some(lo - t.iter().map(|v| (-beta * (v - lo)).exp()).sum::<f64>().ln() / beta)
    }

    /// (1+1) evolution strategy with the one-fifth success rule on a soft
    /// minimum whose sharpness is raised in stages. Returns the best exact
    /// maximin value seen and where it was seen.
    fn anneal(&self, rng: &mut ChaCha8Rng, mut x: Vec<f64>, betas: &[f64], steps: usize, sigma0: f64) -> (f64, Vec<f64>) {
        let Some(v) = self.value(&x) else { return (f64::NEG_INFINITY, x) };
        let mut best = (v, x.clone());
        for &beta in betas {
            let Some(mut fx) = self.soft_value(&x, beta) else { break };
            let mut sigma = sigma0;
            for _ in 0..steps {
                let mut y: Vec<f64> = x
                    .iter()
                    .map(|v| {
                        let z: f64 = StandardNormal.sample(rng);
                        v + sigma * z
                    })
                    .collect();
                self.project(&mut y);
                match self.soft_value(&y, beta) {
                    Some(fy) if fy >= fx => {
                        x = y;
                        fx = fy;
                        sigma *= 1.5;
                        let v = self.value(&x).expect("feasible");
                        if v > best.0 {
                            best = (v, x.clone());
                        }
                    }
                    _ => sigma *= 1.5f64.powf(-0.25),
                }
                if sigma < 1e-12 {
                    break;
                }
            }
        }
        best
    }

    /// Random multistart annealed from every start, then a longer polish of
    /// the best point with sharper soft minima.
    pub fn brute_force(&self, seed: u64, starts: usize, steps: usize) -> f64 {
        const BETAS: [f64; 6] = [10.0, 1e2, 1e3, 1e4, 1e5, 1e6];
        const POLISH: [f64; 4] = [1e5, 1e6, 1e7, 1e8];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut points = vec![self.start.clone()];
        points.extend((0..starts).filter_map(|_| self.random_feasible(&mut rng)));
        let mut best = (f64::NEG_INFINITY, self.start.clone());
        for x in points {
            let found = self.anneal(&mut rng, x, &BETAS, steps / BETAS.len(), 0.1);
            if found.0 > best.0 {
                best = found;
            }
        }
        let mut x = best.1;
        for beta in POLISH {
            let found = self.cma_polish(&mut rng, x, beta, steps / POLISH.len());
            best.0 = best.0.max(found.0);
            x = found.1;
        }
        best.0
    }

    /// (1+1)-CMA-ES on the soft minimum: the covariance learns the ridge
    /// along which the active terms stay balanced.
    fn cma_polish(&self, rng: &mut ChaCha8Rng, mut x: Vec<f64>, beta: f64, steps: usize) -> (f64, Vec<f64>) {
        let n = x.len();
        let nf = n as f64;
        let (d, p_target, c_p, c_c, c_cov, p_thresh) =
            (1.0 + nf / 2.0, 2.0 / 11.0, 1.0 / 12.0, 2.0 / (nf + 2.0), 2.0 / (nf * nf + 6.0), 0.44);
        let mut cov: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
        let mut chol = cov.clone();
        let mut p_c = vec![0.0; n];
        let mut p_succ = p_target;
        let mut sigma = 1e-3;
        let Some(mut fx) = self.soft_value(&x, beta) else { return (f64::NEG_INFINITY, x) };
        let mut best = (self.value(&x).expect("feasible"), x.clone());
        for _ in 0..steps {
            let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
            let mut y: Vec<f64> = (0..n).map(|i| x[i] + sigma * (0..=i).map(|k| chol[i][k] * z[k]).sum::<f64>()).collect();
            self.project(&mut y);
            let fy = self.soft_value(&y, beta);
            let success = fy.is_some_and(|f| f >= fx);
            p_succ = (1.0 - c_p) * p_succ + c_p * f64::from(u8::from(success));
            if success {
                let step: Vec<f64> = (0..n).map(|i| (y[i] - x[i]) / sigma).collect();
                x = y;
                fx = fy.unwrap();
                let v = self.value(&x).expect("feasible");
                if v > best.0 {
                    best = (v, x.clone());
                }
                let (keep, extra) = if p_succ < p_thresh {
                    let a = (c_c * (2.0 - c_c)).sqrt();
                    p_c.iter_mut().zip(&step).for_each(|(p, s)| *p = (1.0 - c_c) * *p + a * s);
                    (1.0 - c_cov, 0.0)
                } else {
                    p_c.iter_mut().for_each(|p| *p *= 1.0 - c_c);
                    (1.0 - c_cov, c_cov * c_c * (2.0 - c_c))
                };
                for i in 0..n {
                    for j in 0..n {
                        cov[i][j] = (keep + extra) * cov[i][j] + c_cov * p_c[i] * p_c[j];
                    }
                }
                chol = cholesky(&cov);
            }
            sigma *= ((p_succ - p_target) / (d * (1.0 - p_target))).exp();
            if sigma < 1e-14 {
                break;
            }
        }
        best
    }
}

/// Lower Cholesky factor of a symmetric positive definite matrix.
fn cholesky(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = a[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
            l[i][j] = if i == j { s.max(1e-300).sqrt() } else { s / l[j][j] };
        }
    }
    l
}

/// Outage query whose probability is neither negligible nor certain: the
/// required excess `a / r - b` is a random multiple of the mean interference.
pub fn random_query(rng: &mut ChaCha8Rng, m: usize) -> OutageQuery {
    let norms: Vec<f64> = (0..m).map(|_| rng.random_range(0.2..3.0)).collect();
    let delta = 10f64.powf(rng.random_range(-3.0..0.0));
    let a = rng.random_range(1.0..50.0);
    let b = rng.random_range(0.5..3.0);
    let mean = delta * norms.iter().sum::<f64>();
    let excess = mean * rng.random_range(0.2..2.5);
    OutageQuery { a, b, r: a / (b + excess), delta, norms }
}

/// Tail of an Erlang(M, 1) variable by direct summation: `e^-y sum_k y^k / k!`.
pub fn erlang_tail_direct(m: usize, y: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 0..m {
        if k > 0 {
            term *= y / k as f64;
        }
        sum += term;
    }
    (-y).exp() * sum
}
