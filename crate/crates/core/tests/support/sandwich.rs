//! Tightness, one-sided domination and gradient checks for every bound builder.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use secbeam_core::model::sample_channels;
use secbeam_core::rates::{eve_outage_rate, eve_sinr, f_user_on, psi_eve, user_outage_rate, varphi};
use secbeam_core::surrogates::{
    build_a_ub, build_ell_lb, build_f_lb, build_g_io_lb, build_g_ub, build_lambda_lb, build_varphi_lb, trust_norm,
    BoundFunction, ExpansionState, VarLayout,
};
use secbeam_core::{BeamformerSet, CVector, ChannelSet, Regime, RunSeed, Scenario};

/// Random points kept per bound.
pub const POINTS: usize = 1000;

pub struct Fixture {
    pub sc: Scenario,
    pub ch: ChannelSet,
    pub state: ExpansionState,
    pub layout: VarLayout,
}

pub fn fixture(m: usize, seed: u64) -> Fixture {
    let sc = Scenario::simulation_defaults(m, Regime::UserOutage, 20.0);
    let ch = sample_channels(&sc, RunSeed(seed));
    let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
    let w = BeamformerSet {
        w: (0..m)
            .map(|_| {
                CVector::from_iterator(
                    sc.nt,
                    (0..sc.nt).map(|_| Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0))),
                )
            })
            .collect(),
    };
    let r = (0..m).map(|i| eve_outage_rate(&w, &ch, &sc, i, 1e-12).unwrap()).collect();
    let big_r = (0..m).map(|i| user_outage_rate(&w, &ch, &sc, i, 1e-12).unwrap()).collect();
    let layout = VarLayout { m, nt: sc.nt, has_r: true, has_big_r: true, has_t: false };
    Fixture { sc, ch, state: ExpansionState { w, r: Some(r), big_r: Some(big_r) }, layout }
}

impl Fixture {
    pub fn x0(&self) -> Vec<f64> {
        self.layout.pack(&self.state.w, self.state.r.as_deref(), self.state.big_r.as_deref(), None)
    }

    /// Gaussian steps on the beamformers, log-normal factors on the rates.
    pub fn perturb(&self, rng: &mut ChaCha8Rng, scale: f64) -> Vec<f64> {
        let mut x = self.x0();
        let wl = self.layout.w_len();
        for v in x.iter_mut().take(wl) {
            let z: f64 = StandardNormal.sample(rng);
            *v += scale * z;
        }
        for v in x.iter_mut().skip(wl) {
            let z: f64 = StandardNormal.sample(rng);
            *v *= (scale * z).exp();
        }
        x
    }

    fn all_vars(&self) -> Vec<usize> {
        (0..self.layout.n()).collect()
    }
}

/// Tightness at the expansion point to 1e-9, central-difference gradient
/// agreement to 1e-4 relative, and domination on `POINTS` random points of
/// the trust region.
pub fn check_bound(
    fx: &Fixture,
    bound: &BoundFunction,
    exact: &dyn Fn(&[f64]) -> f64,
    lower: bool,
    vars: &[usize],
) -> Result<(), String> {
    let x0 = fx.x0();
    let b0 = bound.expr.value(&x0).ok_or("bound undefined at the expansion point")?;
    let e0 = exact(&x0);
    if (b0 - e0).abs() > 1e-9 * (1.0 + e0.abs()) {
        return Err(format!("not tight: {b0} vs {e0}"));
    }
    let g = bound.expr.grad(&x0);
    for &k in vars {
        let step = 1e-6 * (1.0 + x0[k].abs());
        let (mut xp, mut xm) = (x0.clone(), x0.clone());
        xp[k] += step;
        xm[k] -= step;
        let fd = (exact(&xp) - exact(&xm)) / (2.0 * step);
        if (fd - g[k]).abs() > 1e-4 * (1.0 + fd.abs()) {
            return Err(format!("gradient {k}: {fd} vs {}", g[k]));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut accepted = 0;
    for n in 0..3 * POINTS {
        let x = fx.perturb(&mut rng, [0.02, 0.2, 1.0][n % 3]);
        if bound.trust.iter().any(|t| !(t.value(&x).unwrap_or(-1.0) >= 0.0)) {
            continue;
        }
        let Some(b) = bound.expr.value(&x) else { continue };
        let e = exact(&x);
        let slack = 1e-10 * (1.0 + e.abs());
        if lower && b > e + slack {
            return Err(format!("lower bound {b} exceeds {e}"));
        }
        if !lower && b < e - slack {
            return Err(format!("upper bound {b} below {e}"));
        }
        accepted += 1;
        if accepted == POINTS {
            return Ok(());
        }
    }
    Err(format!("only {accepted} points in the trust region"))
}

/// Runs every builder on a few fixtures; one entry per builder.
pub fn suite() -> Vec<(&'static str, Result<(), String>)> {
    let mut out = Vec::new();
    let mut record = |name, res: Result<(), String>| out.push((name, res));

    record("f_lb", (|| {
        for m in [1, 3] {
            let fx = fixture(m, 11);
            let h = fx.ch.direct.clone();
            for i in 0..m {
                let b = build_f_lb(&fx.state, &h, fx.sc.sigma_u[i], &fx.layout, i).map_err(|e| e.to_string())?;
                let exact = |x: &[f64]| f_user_on(&h, &fx.layout.unpack_w(x), fx.sc.sigma_u[i], i);
                check_bound(&fx, &b, &exact, true, &fx.all_vars())?;
            }
        }
        Ok(())
    })());

    record("g_ub", (|| {
        for m in [1, 3] {
            let fx = fixture(m, 12);
            let eve = fx.ch.eve_vec().map_err(|e| e.to_string())?.to_vec();
            for i in 0..m {
                let b = build_g_ub(&fx.state, &eve, fx.sc.sigma_e, &fx.layout, i).map_err(|e| e.to_string())?;
                let exact = |x: &[f64]| eve_sinr(&fx.layout.unpack_w(x), &eve, fx.sc.sigma_e, i).ln_1p();
                check_bound(&fx, &b, &exact, false, &fx.all_vars())?;
            }
        }
        Ok(())
    })());

    record("lambda_lb", (|| {
        let fx = fixture(3, 13);
        let hbar = [1.0, 0.7, 1.6];
        for (i, j) in [(0, 2), (1, 0)] {
            let b = build_lambda_lb(&fx.state, &hbar, &fx.layout, i, j).map_err(|e| e.to_string())?;
            let exact = |x: &[f64]| {
                let w = fx.layout.unpack_w(x);
                (x[fx.layout.r(i)] * hbar[j] * w.norm_sq(j) / (hbar[i] * w.norm_sq(i))).ln_1p()
            };
            check_bound(&fx, &b, &exact, true, &fx.all_vars())?;
        }
        Ok(())
    })());

    record("g_io_lb", (|| {
        for m in [1, 2, 3] {
            let fx = fixture(m, 14);
            let hbar = fx.ch.eve_var().map_err(|e| e.to_string())?.to_vec();
            for i in 0..m {
                let mut b = build_g_io_lb(&fx.state, &hbar, &fx.sc, &fx.layout, i).map_err(|e| e.to_string())?;
                b.trust = (0..m).filter(|&j| j != i).map(|j| trust_norm(&fx.state, &fx.layout, j)).collect();
                let exact =
                    |x: &[f64]| psi_eve(&fx.layout.unpack_w(x), &fx.ch, &fx.sc, i, x[fx.layout.r(i)]).unwrap();
                check_bound(&fx, &b, &exact, true, &fx.all_vars())?;
            }
        }
        Ok(())
    })());

    record("a_ub", (|| {
        let fx = fixture(2, 15);
        for i in 0..2 {
            let b = build_a_ub(&fx.state, &fx.layout, i).map_err(|e| e.to_string())?;
            let exact = |x: &[f64]| x[fx.layout.r(i)].ln_1p();
            check_bound(&fx, &b, &exact, false, &[fx.layout.r(i)])?;
        }
        Ok(())
    })());

    record("ell_lb", (|| {
        let fx = fixture(3, 16);
        let nominal = fx.ch.nominal().map_err(|e| e.to_string())?.to_vec();
        for i in 0..3 {
            let b = build_ell_lb(&fx.state, &nominal, &fx.layout, i).map_err(|e| e.to_string())?;
            let exact =
                |x: &[f64]| nominal[i][i].dotc(&fx.layout.unpack_w(x).w[i]).norm_sqr() / x[fx.layout.big_r(i)];
            check_bound(&fx, &b, &exact, true, &fx.all_vars())?;
        }
        Ok(())
    })());

    record("varphi_lb", (|| {
        let fx = fixture(3, 16);
        let nominal = fx.ch.nominal().map_err(|e| e.to_string())?.to_vec();
        for i in 0..3 {
            let b = build_varphi_lb(&fx.state, &nominal, &fx.sc, &fx.layout, i).map_err(|e| e.to_string())?;
            let exact =
                |x: &[f64]| varphi(&fx.layout.unpack_w(x), &fx.ch, &fx.sc, i, x[fx.layout.big_r(i)]).unwrap();
            check_bound(&fx, &b, &exact, true, &fx.all_vars())?;
        }
        Ok(())
    })());

    out
}
