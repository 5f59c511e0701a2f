//! Adaptive Simpson quadrature.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Settings for [`adaptive_simpson`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Simpson {
    pub rel_tol: f64,
    /// Absolute floor on the tolerance, for integrals that are ~0.
    pub abs_tol: f64,
    pub max_depth: u32,
    /// Number of equal panels refined independently.
    pub initial_panels: usize,
}

impl Simpson {
    pub const fn with_rel_tol(rel_tol: f64) -> Self {
        Simpson {
            rel_tol,
            abs_tol: 1e-300,
            max_depth: 48,
            initial_panels: 8,
        }
    }
}

impl Default for Simpson {
    fn default() -> Self {
        Self::with_rel_tol(1e-6)
    }
}

/// `∫_a^b f` by recursive Simpson bisection with Richardson correction.
///
/// The tolerance is `rel_tol` times a coarse estimate of `∫|f|`. Subintervals
/// that hit `max_depth` are accepted and the call reports
/// [`Error::Quadrature`] carrying the estimate.
pub fn adaptive_simpson<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, opts: Simpson) -> Result<f64> {
    if !(b > a) {
        return Ok(0.0);
    }
    let panels = opts.initial_panels.max(1);
    let w = (b - a) / panels as f64;
    let mut coarse = [(0.0, 0.0, 0.0, 0.0, 0.0, 0.0); 64];
    let panels = panels.min(coarse.len());
    let mut scale = 0.0;
    let mut fl = f(a);
    for (p, slot) in coarse.iter_mut().enumerate().take(panels) {
        let l = a + p as f64 * w;
        let r = if p + 1 == panels { b } else { l + w };
        let m = 0.5 * (l + r);
        let fm = f(m);
        let fr = f(r);
        scale += (r - l) / 6.0 * (fl.abs() + 4.0 * fm.abs() + fr.abs());
        *slot = (l, r, fl, fm, fr, (r - l) / 6.0 * (fl + 4.0 * fm + fr));
        fl = fr;
    }
    let tol = (opts.rel_tol * scale).max(opts.abs_tol);
    let mut total = 0.0;
    let mut converged = true;
    for &(l, r, fl, fm, fr, whole) in coarse.iter().take(panels) {
        total += refine(&mut f, l, r, fl, fm, fr, whole, tol / panels as f64, opts.max_depth, &mut converged);
    }
    if converged && total.is_finite() {
        Ok(total)
    } else {
        Err(Error::Quadrature { estimate: total })
    }
}

#[allow(clippy::too_many_arguments)]
fn refine<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    converged: &mut bool,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    if depth == 0 {
        *converged = false;
        return left + right + delta / 15.0;
    }
    refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, converged)
        + refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, converged)
}

/// Adaptive Simpson over `[a, b]` split at every interior point of `breaks`.
pub fn adaptive_simpson_split<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    opts: Simpson,
) -> Result<f64> {
    if !(b > a) {
        return Ok(0.0);
    }
    let mut cuts: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    cuts.push(a);
    cuts.push(b);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut total = 0.0;
    let mut err = None;
    for w in cuts.windows(2) {
        match adaptive_simpson(&mut f, w[0], w[1], opts) {
            Ok(v) => total += v,
            Err(Error::Quadrature { estimate }) => {
                total += estimate;
                err = Some(());
            }
            Err(e) => return Err(e),
        }
    }
    match err {
        None => Ok(total),
        Some(()) => Err(Error::Quadrature { estimate: total }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let v = adaptive_simpson(|x| x * x * x - x, -1.0, 2.0, Simpson::default()).unwrap();
        assert!((v - 2.25).abs() < 1e-12);
    }

    #[test]
    fn exponential_to_tolerance() {
        let v = adaptive_simpson(|x| libm::exp(-3.0 * x), 0.0, 40.0, Simpson::with_rel_tol(1e-10)).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn kink_with_split() {
        let f = |x: f64| if x < 0.3 { 1.0 } else { libm::exp(-(x - 0.3)) };
        let v = adaptive_simpson_split(f, 0.0, 1.0, &[0.3], Simpson::with_rel_tol(1e-10)).unwrap();
        let exact = 0.3 + (1.0 - libm::exp(-0.7));
        assert!((v - exact).abs() < 1e-10);
    }

    #[test]
    fn reports_nonconvergence() {
        let opts = Simpson {
            max_depth: 2,
            ..Simpson::with_rel_tol(1e-14)
        };
        let r = adaptive_simpson(|x| libm::sin(1.0 / (x + 1e-3)), 0.0, 1.0, opts);
        assert!(matches!(r, Err(Error::Quadrature { .. })));
    }

    #[test]
    fn empty_interval_is_zero() {
        assert_eq!(adaptive_simpson(|_| 1.0, 1.0, 1.0, Simpson::default()), Ok(0.0));
    }
}
