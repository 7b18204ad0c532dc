use crate::{Error, Result};

/// Nodes and weights of composite Simpson's rule with `panels` subintervals.
///
/// Each panel `[a, a + Δ]` contributes `Δ/6 (g(a) + 4 g(a + Δ/2) + g(a + Δ))`;
/// shared endpoints are merged, giving `2 panels + 1` nodes.
pub fn simpson_nodes(lo: f64, hi: f64, panels: usize) -> Result<Vec<(f64, f64)>> {
    if !(lo < hi) || panels == 0 {
        return Err(Error::Invalid(format!(
            "simpson needs lo < hi and panels >= 1 (got [{lo}, {hi}], {panels})"
        )));
    }
    let h = (hi - lo) / panels as f64;
    let count = 2 * panels + 1;
    Ok((0..count)
        .map(|j| {
            let x = if j + 1 == count { hi } else { lo + j as f64 * h / 2.0 };
            let w = if j == 0 || j + 1 == count {
                1.0
            } else if j % 2 == 1 {
                4.0
            } else {
                2.0
            };
            (x, w * h / 6.0)
        })
        .collect())
}

/// Composite Simpson estimate of `∫ f` over `[lo, hi]`.
pub fn simpson_integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    panels: usize,
) -> Result<f64> {
    let mut acc = 0.0;
    for (x, w) in simpson_nodes(lo, hi, panels)? {
        let v = f(x);
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("integrand at {x}")));
        }
        acc += w * v;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_on_cubics() {
        let v = simpson_integrate(|x| 3.0 * x * x, 0.0, 1.0, 1).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
        let v = simpson_integrate(|x| x * x * x - 2.0 * x + 1.0, -1.0, 2.0, 7).unwrap();
        assert!((v - 3.75).abs() < 1e-12);
        assert_eq!(simpson_integrate(|_| 0.0, 0.0, 1.0, 10).unwrap(), 0.0);
    }

    #[test]
    fn oscillatory_against_trapezoid() {
        let f = |x: f64| (100.0 * x).sin();
        let v = simpson_integrate(f, 0.0, 0.01, 10).unwrap();
        let n = 1_000_000;
        let h = 0.01 / n as f64;
        let mut t = 0.5 * (f(0.0) + f(0.01));
        for i in 1..n {
            t += f(i as f64 * h);
        }
        t *= h;
        assert!((v - t).abs() <= 1e-8);
    }

    #[test]
    fn guards() {
        assert!(simpson_integrate(|x| x, 1.0, 0.0, 4).is_err());
        assert!(simpson_integrate(|x| x, 0.0, 1.0, 0).is_err());
        assert!(matches!(
            simpson_integrate(|_| f64::NAN, 0.0, 1.0, 2),
            Err(Error::NonFinite(_))
        ));
    }
}
