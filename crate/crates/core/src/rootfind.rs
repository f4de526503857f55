//! Bisection with one-sided tolerances and integer bracket expansion.
//!
//! The two bisection flavours differ only in which side of zero the returned
//! point must land on: [`bisect_upper`] returns `r` with `0 <= f(r) <= eps_b`
//! and [`bisect_lower`] returns `r` with `-eps_b <= f(r) <= 0`.

use crate::error::{Error, Result};

/// Bisection iterations are capped well above what `f64` resolution needs.
const MAX_BISECTIONS: usize = 4096;

/// Largest multiplier tried by [`expand_bracket_integer`].
pub const MAX_EXPANSION: u64 = 1_000_000;

/// Interval with `f(lo) < 0 <= f(hi)` for an increasing `f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub f_lo: f64,
    pub f_hi: f64,
}

impl Bracket {
    pub fn new<F>(mut f: F, lo: f64, hi: f64) -> Result<Self>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let f_lo = f(lo)?;
        let f_hi = f(hi)?;
        let b = Self { lo, hi, f_lo, f_hi };
        if !(lo <= hi) || !(f_lo <= 0.0 && f_hi >= 0.0) {
            return Err(Error::NoSignChange { lo, hi });
        }
        Ok(b)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Bisection for an increasing `f`, terminating at `0 <= f(r) <= eps_b`.
pub fn bisect_upper<F>(mut f: F, bracket: Bracket, eps_b: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let accept = |v: f64| (0.0..=eps_b).contains(&v);
    if accept(bracket.f_hi) {
        return Ok(bracket.hi);
    }
    if accept(bracket.f_lo) {
        return Ok(bracket.lo);
    }
    if !(bracket.f_lo < 0.0 && bracket.f_hi > 0.0) {
        return Err(Error::NoSignChange { lo: bracket.lo, hi: bracket.hi });
    }
    let (mut lo, mut hi) = (bracket.lo, bracket.hi);
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = f(mid)?;
        if accept(v) {
            return Ok(mid);
        }
        if v < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::BisectionStalled { x: hi })
}

/// Bisection for an increasing `f`, terminating at `-eps_b <= f(r) <= 0`.
pub fn bisect_lower<F>(mut f: F, bracket: Bracket, eps_b: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let accept = |v: f64| (-eps_b..=0.0).contains(&v);
    if accept(bracket.f_lo) {
        return Ok(bracket.lo);
    }
    if accept(bracket.f_hi) {
        return Ok(bracket.hi);
    }
    if !(bracket.f_lo < 0.0 && bracket.f_hi > 0.0) {
        return Err(Error::NoSignChange { lo: bracket.lo, hi: bracket.hi });
    }
    let (mut lo, mut hi) = (bracket.lo, bracket.hi);
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = f(mid)?;
        if accept(v) {
            return Ok(mid);
        }
        if v > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Err(Error::BisectionStalled { x: lo })
}

/// Integer bracket search around `x0 > 0` for an increasing `f`.
///
/// If `f(x0) > 0` the bracket is `[x0 / nu, x0]` for the smallest integer
/// `nu` with `f(x0 / nu) < 0`; if `f(x0) < 0` it is `[x0, nu x0]` for the
/// smallest `nu` with `f(nu x0) >= 0`. Points where `f` reports a domain
/// error are skipped. `f(x0) == 0` yields the degenerate bracket `[x0, x0]`.
pub fn expand_bracket_integer<F>(mut f: F, x0: f64) -> Result<Bracket>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(x0 > 0.0 && x0.is_finite()) {
        return Err(Error::Domain(format!("bracket seed must be positive, got {x0}")));
    }
    let f0 = f(x0)?;
    if f0 == 0.0 {
        return Ok(Bracket { lo: x0, hi: x0, f_lo: 0.0, f_hi: 0.0 });
    }
    for nu in 2..=MAX_EXPANSION {
        let nu = nu as f64;
        if f0 > 0.0 {
            let x = x0 / nu;
            match f(x) {
                Ok(v) if v < 0.0 => return Ok(Bracket { lo: x, hi: x0, f_lo: v, f_hi: f0 }),
                Ok(_) | Err(Error::Domain(_)) => {}
                Err(e) => return Err(e),
            }
        } else {
            let x = x0 * nu;
            match f(x) {
                Ok(v) if v >= 0.0 => return Ok(Bracket { lo: x0, hi: x, f_lo: f0, f_hi: v }),
                Ok(_) | Err(Error::Domain(_)) => {}
                Err(e) => return Err(e),
            }
        }
    }
    Err(Error::NoBracket { x0, steps: MAX_EXPANSION })
}
