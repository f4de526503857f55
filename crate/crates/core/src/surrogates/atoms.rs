//! Smooth scalar atoms over a real variable vector, with analytic gradients
//! and Hessians.

use nalgebra::DMatrix;

/// Sparse linear form `sum coef * x[idx]`.
pub type Lin = Vec<(usize, f64)>;

fn dot(a: &Lin, x: &[f64]) -> f64 {
    a.iter().map(|&(k, v)| v * x[k]).sum()
}

fn axpy(alpha: f64, a: &Lin, g: &mut [f64]) {
    for &(k, v) in a {
        g[k] += alpha * v;
    }
}

fn outer(alpha: f64, a: &Lin, b: &Lin, h: &mut DMatrix<f64>) {
    for &(i, u) in a {
        for &(j, v) in b {
            h[(i, j)] += alpha * u * v;
        }
    }
}

/// `c + a . x`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Affine {
    pub c: f64,
    pub a: Lin,
}

impl Affine {
    pub fn new(c: f64, a: Lin) -> Self {
        Self { c, a }
    }

    pub fn constant(c: f64) -> Self {
        Self { c, a: Vec::new() }
    }

    pub fn var(k: usize) -> Self {
        Self { c: 0.0, a: vec![(k, 1.0)] }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.c + dot(&self.a, x)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { c: s * self.c, a: self.a.iter().map(|&(k, v)| (k, s * v)).collect() }
    }

    pub fn plus(mut self, other: &Affine) -> Self {
        self.c += other.c;
        self.a.extend_from_slice(&other.a);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Atom {
    Affine(Affine),
    /// `sum_k (a_k . x)^2`.
    SquaredNorm(Vec<Lin>),
    /// `sum_k (a_k . x)^2 / l(x)`, defined for `l > 0`.
    QuadOverAffine { num: Vec<Lin>, den: Affine },
    /// `1 / l(x)`, defined for `l > 0`.
    ReciprocalAffine(Affine),
    /// `1 / (x_v l(x))`, defined for `x_v > 0`, `l > 0`.
    ReciprocalBilinear { var: usize, den: Affine },
    /// `sqrt(x_v)`, defined for `x_v > 0`.
    Sqrt(usize),
    /// `ln(1 + x_v)`, defined for `x_v > -1`.
    Log1p(usize),
}

impl Atom {
    pub fn value(&self, x: &[f64]) -> Option<f64> {
        match self {
            Atom::Affine(l) => Some(l.eval(x)),
            Atom::SquaredNorm(rows) => Some(rows.iter().map(|a| dot(a, x).powi(2)).sum()),
            Atom::QuadOverAffine { num, den } => {
                let l = den.eval(x);
                (l > 0.0).then(|| num.iter().map(|a| dot(a, x).powi(2)).sum::<f64>() / l)
            }
            Atom::ReciprocalAffine(l) => {
                let l = l.eval(x);
                (l > 0.0).then(|| 1.0 / l)
            }
            Atom::ReciprocalBilinear { var, den } => {
                let (v, l) = (x[*var], den.eval(x));
                (v > 0.0 && l > 0.0).then(|| 1.0 / (v * l))
            }
            Atom::Sqrt(v) => (x[*v] > 0.0).then(|| x[*v].sqrt()),
            Atom::Log1p(v) => (x[*v] > -1.0).then(|| x[*v].ln_1p()),
        }
    }

    /// Adds `alpha * grad` into `g`. Assumes `x` is in the domain.
    pub fn add_grad(&self, x: &[f64], alpha: f64, g: &mut [f64]) {
        match self {
            Atom::Affine(l) => axpy(alpha, &l.a, g),
            Atom::SquaredNorm(rows) => {
                for a in rows {
                    axpy(2.0 * alpha * dot(a, x), a, g);
                }
            }
            Atom::QuadOverAffine { num, den } => {
                let l = den.eval(x);
                let mut q = 0.0;
                for a in num {
                    let s = dot(a, x);
                    q += s * s;
                    axpy(2.0 * alpha * s / l, a, g);
                }
                axpy(-alpha * q / (l * l), &den.a, g);
            }
            Atom::ReciprocalAffine(den) => {
                let l = den.eval(x);
                axpy(-alpha / (l * l), &den.a, g);
            }
            Atom::ReciprocalBilinear { var, den } => {
                let (v, l) = (x[*var], den.eval(x));
                let p2 = (v * l).powi(2);
                g[*var] -= alpha * l / p2;
                axpy(-alpha * v / p2, &den.a, g);
            }
            Atom::Sqrt(v) => g[*v] += alpha * 0.5 / x[*v].sqrt(),
            Atom::Log1p(v) => g[*v] += alpha / (1.0 + x[*v]),
        }
    }

    /// Adds `alpha * hessian` into `h`. Assumes `x` is in the domain.
    pub fn add_hess(&self, x: &[f64], alpha: f64, h: &mut DMatrix<f64>) {
        match self {
            Atom::Affine(_) => {}
            Atom::SquaredNorm(rows) => {
                for a in rows {
                    outer(2.0 * alpha, a, a, h);
                }
            }
            Atom::QuadOverAffine { num, den } => {
                let l = den.eval(x);
                let mut q = 0.0;
                for a in num {
                    let s = dot(a, x);
                    q += s * s;
                    outer(2.0 * alpha / l, a, a, h);
                    // -(grad q grad l^T + grad l grad q^T) / l^2
                    let c = -2.0 * alpha * s / (l * l);
                    outer(c, a, &den.a, h);
                    outer(c, &den.a, a, h);
                }
                outer(2.0 * alpha * q / (l * l * l), &den.a, &den.a, h);
            }
            Atom::ReciprocalAffine(den) => {
                let l = den.eval(x);
                outer(2.0 * alpha / (l * l * l), &den.a, &den.a, h);
            }
            Atom::ReciprocalBilinear { var, den } => {
                let (v, l) = (x[*var], den.eval(x));
                let p = v * l;
                // grad p = l e_v + v a
                let mut gp = den.a.iter().map(|&(k, c)| (k, v * c)).collect::<Lin>();
                gp.push((*var, l));
                outer(2.0 * alpha / (p * p * p), &gp, &gp, h);
                let ev = vec![(*var, 1.0)];
                outer(-alpha / (p * p), &ev, &den.a, h);
                outer(-alpha / (p * p), &den.a, &ev, h);
            }
            Atom::Sqrt(v) => h[(*v, *v)] -= alpha * 0.25 / x[*v].powf(1.5),
            Atom::Log1p(v) => h[(*v, *v)] -= alpha / (1.0 + x[*v]).powi(2),
        }
    }
}

/// `constant + sum coef * atom`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Expr {
    pub constant: f64,
    pub terms: Vec<(f64, Atom)>,
}

impl Expr {
    pub fn constant(c: f64) -> Self {
        Self { constant: c, terms: Vec::new() }
    }

    pub fn with(mut self, coef: f64, atom: Atom) -> Self {
        self.push(coef, atom);
        self
    }

    pub fn push(&mut self, coef: f64, atom: Atom) {
        if coef != 0.0 {
            self.terms.push((coef, atom));
        }
    }

    pub fn add_const(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    /// `self + s * other`.
    pub fn add_scaled(mut self, s: f64, other: &Expr) -> Self {
        self.constant += s * other.constant;
        for (c, a) in &other.terms {
            self.push(s * c, a.clone());
        }
        self
    }

    pub fn value(&self, x: &[f64]) -> Option<f64> {
        let mut v = self.constant;
        for (c, a) in &self.terms {
            v += c * a.value(x)?;
        }
        Some(v)
    }

    /// Sum of absolute term values; a natural scale for tolerances.
    pub fn magnitude(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(c, a)| (c * a.value(x).unwrap_or(0.0)).abs())
            .sum::<f64>()
            + self.constant.abs()
    }

    pub fn add_grad(&self, x: &[f64], alpha: f64, g: &mut [f64]) {
        for (c, a) in &self.terms {
            a.add_grad(x, alpha * c, g);
        }
    }

    pub fn add_hess(&self, x: &[f64], alpha: f64, h: &mut DMatrix<f64>) {
        for (c, a) in &self.terms {
            a.add_hess(x, alpha * c, h);
        }
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        self.add_grad(x, 1.0, &mut g);
        g
    }

    pub fn hess(&self, x: &[f64]) -> DMatrix<f64> {
        let mut h = DMatrix::zeros(x.len(), x.len());
        self.add_hess(x, 1.0, &mut h);
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_lin(rng: &mut ChaCha8Rng, n: usize) -> Lin {
        let mut out = Lin::new();
        for k in 0..n {
            if rng.random_bool(0.7) {
                out.push((k, rng.random_range(-1.0..1.0)));
            }
        }
        out
    }

    fn rand_pos_affine(rng: &mut ChaCha8Rng, n: usize) -> Affine {
        Affine::new(5.0, rand_lin(rng, n))
    }

    fn atoms(rng: &mut ChaCha8Rng, n: usize) -> Vec<Atom> {
        vec![
            Atom::Affine(Affine::new(0.3, rand_lin(rng, n))),
            Atom::SquaredNorm(vec![rand_lin(rng, n), rand_lin(rng, n)]),
            Atom::QuadOverAffine { num: vec![rand_lin(rng, n), rand_lin(rng, n)], den: rand_pos_affine(rng, n) },
            Atom::ReciprocalAffine(rand_pos_affine(rng, n)),
            Atom::ReciprocalBilinear { var: 0, den: rand_pos_affine(rng, n) },
            Atom::Sqrt(1),
            Atom::Log1p(2),
        ]
    }

    fn point(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(0.2..1.0)).collect()
    }

    #[test]
    fn gradients_and_hessians_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 5;
        for _ in 0..50 {
            for atom in atoms(&mut rng, n) {
                let x = point(&mut rng, n);
                let mut g = vec![0.0; n];
                atom.add_grad(&x, 1.0, &mut g);
                let mut h = DMatrix::zeros(n, n);
                atom.add_hess(&x, 1.0, &mut h);
                let step = 1e-5;
                for k in 0..n {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[k] += step;
                    xm[k] -= step;
                    let fd = (atom.value(&xp).unwrap() - atom.value(&xm).unwrap()) / (2.0 * step);
                    assert!((fd - g[k]).abs() <= 1e-5 * (1.0 + g[k].abs()), "{atom:?} grad {k}");
                    let mut gp = vec![0.0; n];
                    let mut gm = vec![0.0; n];
                    atom.add_grad(&xp, 1.0, &mut gp);
                    atom.add_grad(&xm, 1.0, &mut gm);
                    for j in 0..n {
                        let fd = (gp[j] - gm[j]) / (2.0 * step);
                        assert!((fd - h[(j, k)]).abs() <= 1e-4 * (1.0 + h[(j, k)].abs()), "{atom:?} hess {j},{k}");
                    }
                }
            }
        }
    }

    #[test]
    fn midpoint_curvature() {
        // Convex atoms: SquaredNorm, QuadOverAffine, ReciprocalAffine, ReciprocalBilinear; concave: Sqrt, Log1p.
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 5;
        for _ in 0..1000 {
            for (idx, atom) in atoms(&mut rng, n).into_iter().enumerate() {
                let x = point(&mut rng, n);
                let y = point(&mut rng, n);
                let mid: Vec<f64> = x.iter().zip(&y).map(|(a, b)| 0.5 * (a + b)).collect();
                let (fx, fy, fm) = (atom.value(&x).unwrap(), atom.value(&y).unwrap(), atom.value(&mid).unwrap());
                let chord = 0.5 * (fx + fy);
                let slack = 1e-12 * (1.0 + chord.abs());
                match idx {
                    0 => assert!((fm - chord).abs() <= slack),
                    1..=4 => assert!(fm <= chord + slack, "{atom:?}"),
                    _ => assert!(fm >= chord - slack, "{atom:?}"),
                }
            }
        }
    }

    #[test]
    fn domains_are_guarded() {
        let x = [0.0, -2.0];
        assert_eq!(Atom::Sqrt(0).value(&x), None);
        assert_eq!(Atom::Log1p(1).value(&x), None);
        assert_eq!(Atom::ReciprocalAffine(Affine::var(0)).value(&x), None);
        assert_eq!(Atom::ReciprocalBilinear { var: 0, den: Affine::constant(1.0) }.value(&x), None);
        let e = Expr::constant(1.0).with(2.0, Atom::Sqrt(0));
        assert_eq!(e.value(&x), None);
        assert_eq!(Expr::constant(1.0).with(2.0, Atom::Affine(Affine::var(1))).value(&x), Some(-3.0));
    }
}
