use nalgebra::{DMatrix, DVector};

use super::{simpson_nodes, GlgConfig};
use crate::eds::SpectralSystem;
use crate::lmm::{apply_lmm, LmmPair};
use crate::subspace::{check_finite, cosines_of, pair_metric, principal_cosines, sorted_svd, span_basis};
use crate::{Error, RealMatrix, Result};

/// Cosine gaps at or below this magnitude count as ties (subgradient 0).
const TIE: f64 = 1e-12;
/// Shift applied to a quadrature node whose spectrum is degenerate.
const RETRY_SHIFT: f64 = 1e-9;

/// `span(X^δ Uᵀ)` for every δ from a single QR.
///
/// `X^δ Uᵀ = F0 + δ·1·sᵀ` with `F0 = X Uᵀ` and `s = U·1`. With `[F0, 1] = W R`
/// the mapped matrix is `W (R0 + δ t sᵀ)` where `R0`, `t` are the blocks of
/// `R`, so every δ reduces to a small `(k+1) × k` factor `K(δ)`.
struct ShiftedSpan {
    w: RealMatrix,
    r0: RealMatrix,
    t: DVector<f64>,
    s: DVector<f64>,
}

impl ShiftedSpan {
    fn new(x: &RealMatrix, u: Option<&RealMatrix>) -> Self {
        let (f0, s) = match u {
            Some(u) => (x * u.transpose(), u.column_sum()),
            None => (x.clone(), DVector::from_element(x.ncols(), 1.0)),
        };
        let k = f0.ncols();
        let qr = f0.insert_column(k, 1.0).qr();
        let r = qr.r();
        Self {
            w: qr.q(),
            r0: r.columns(0, k).clone_owned(),
            t: r.column(k).clone_owned(),
            s,
        }
    }

    fn factor(&self, delta: f64) -> RealMatrix {
        &self.r0 + (&self.t * self.s.transpose()) * delta
    }

    /// Orthonormal basis of the span in `W` coordinates.
    fn coords(&self, delta: f64) -> RealMatrix {
        self.factor(delta).qr().q()
    }
}

/// Spans of both sides plus the cross product `W_sᵀ W_t`.
struct SpanPair {
    s: ShiftedSpan,
    t: ShiftedSpan,
    cross: RealMatrix,
}

impl SpanPair {
    fn new(s: ShiftedSpan, t: ShiftedSpan) -> Self {
        let cross = s.w.transpose() * &t.w;
        Self { s, t, cross }
    }

    fn cosines(&self, delta: f64) -> Vec<f64> {
        let qs = self.s.coords(delta);
        let qt = self.t.coords(delta);
        cosines_of(&(qs.transpose() * &self.cross * qt))
    }
}

/// A fixed `(Xs, Xt)` pair with the raw-pair cosines cached at every
/// quadrature node, so that the cost of a map pair only touches the mapped
/// side.
pub struct Problem {
    xs: RealMatrix,
    xt: RealMatrix,
    raw: SpanPair,
    nodes: Vec<(f64, f64)>,
    he: Vec<Vec<f64>>,
    lambda_s: f64,
    lambda_t: f64,
}

impl Problem {
    pub fn new(xs: &RealMatrix, xt: &RealMatrix, cfg: &GlgConfig) -> Result<Self> {
        cfg.validate()?;
        let (n, m) = xs.shape();
        let k = xt.ncols();
        if xt.nrows() != n {
            return Err(Error::Dimension(format!(
                "domains have {} and {} rows",
                n,
                xt.nrows()
            )));
        }
        if m == 0 || k == 0 || m > n || k > n {
            return Err(Error::Dimension(format!(
                "feature counts {m} and {k} must lie in 1..={n}"
            )));
        }
        check_finite(xs, "source matrix")?;
        check_finite(xt, "target matrix")?;
        let raw = SpanPair::new(ShiftedSpan::new(xs, None), ShiftedSpan::new(xt, None));
        let nodes = simpson_nodes(0.0, cfg.delta0, cfg.panels)?;
        let he = nodes.iter().map(|&(d, _)| raw.cosines(d)).collect();
        let (lambda_s, lambda_t) = cfg.lambdas(m, k);
        Ok(Self {
            xs: xs.clone(),
            xt: xt.clone(),
            raw,
            nodes,
            he,
            lambda_s,
            lambda_t,
        })
    }

    pub fn xs(&self) -> &RealMatrix {
        &self.xs
    }

    pub fn xt(&self) -> &RealMatrix {
        &self.xt
    }

    pub fn m(&self) -> usize {
        self.xs.ncols()
    }

    pub fn n(&self) -> usize {
        self.xt.ncols()
    }

    pub fn r(&self) -> usize {
        self.m().min(self.n())
    }

    pub fn lambdas(&self) -> (f64, f64) {
        (self.lambda_s, self.lambda_t)
    }

    /// Raw-pair cosines at each quadrature node.
    pub fn raw_cosines(&self) -> &[Vec<f64>] {
        &self.he
    }

    fn check(&self, maps: &LmmPair) -> Result<()> {
        let r = self.r();
        if maps.us().shape() != (r, self.m()) || maps.ut().shape() != (r, self.n()) {
            return Err(Error::Dimension(format!(
                "maps are {:?} and {:?}, expected ({r}, {}) and ({r}, {})",
                maps.us().shape(),
                maps.ut().shape(),
                self.m(),
                self.n()
            )));
        }
        Ok(())
    }

    fn mapped(&self, maps: &LmmPair) -> SpanPair {
        SpanPair::new(
            ShiftedSpan::new(&self.xs, Some(maps.us())),
            ShiftedSpan::new(&self.xt, Some(maps.ut())),
        )
    }

    fn regularizer(&self, maps: &LmmPair) -> f64 {
        0.5 * self.lambda_s * maps.us().norm_squared() + 0.5 * self.lambda_t * maps.ut().norm_squared()
    }

    /// The ℓ1 cosine gap at one δ, computed from the factored spans.
    pub fn integrand(&self, maps: &LmmPair, delta: f64) -> Result<f64> {
        self.check(maps)?;
        let ho = self.mapped(maps).cosines(delta);
        Ok(l1(&self.raw.cosines(delta), &ho))
    }

    /// The cost `J1` of a map pair.
    pub fn cost(&self, maps: &LmmPair) -> Result<f64> {
        self.check(maps)?;
        let mapped = self.mapped(maps);
        let mut acc = 0.0;
        for (&(d, w), he) in self.nodes.iter().zip(&self.he) {
            acc += w * l1(he, &mapped.cosines(d));
        }
        let j = acc + self.regularizer(maps);
        if !j.is_finite() {
            return Err(Error::NonFinite("cost".into()));
        }
        Ok(j)
    }

    /// Gradient of `J1` with respect to `Us` and `Ut`.
    pub fn gradient(&self, maps: &LmmPair) -> Result<(RealMatrix, RealMatrix)> {
        self.check(maps)?;
        let mapped = self.mapped(maps);
        let mut gs = maps.us() * self.lambda_s;
        let mut gt = maps.ut() * self.lambda_t;
        for (&(d, w), he) in self.nodes.iter().zip(&self.he) {
            let (ns, nt) = match self.node_gradient(&mapped, d, he) {
                Err(Error::Degenerate { .. }) => {
                    let shifted = d + RETRY_SHIFT;
                    self.node_gradient(&mapped, shifted, &self.raw.cosines(shifted))?
                }
                other => other?,
            };
            gs += ns * w;
            gt += nt * w;
        }
        Ok((gs, gt))
    }

    fn node_gradient(
        &self,
        mapped: &SpanPair,
        delta: f64,
        he: &[f64],
    ) -> Result<(RealMatrix, RealMatrix)> {
        let ks = mapped.s.factor(delta);
        let kt = mapped.t.factor(delta);
        let (us, ss, _) = sorted_svd(&ks);
        let (ut, st, _) = sorted_svd(&kt);
        let m = us.transpose() * &mapped.cross * &ut;
        let (p, sig, q) = sorted_svd(&m);
        let signs: Vec<f64> = he
            .iter()
            .zip(&sig)
            .map(|(h, s)| {
                let gap = h - s.clamp(0.0, 1.0);
                if gap.abs() <= TIE {
                    0.0
                } else {
                    -gap.signum()
                }
            })
            .collect();
        let smat = DMatrix::from_diagonal(&DVector::from_vec(signs));
        // ∂J/∂Y_s = Y_t Q S Pᵀ and ∂J/∂Y_t = Y_s P S Qᵀ
        let gys = &mapped.t.w * (&ut * (&q * &smat * p.transpose()));
        let gyt = &mapped.s.w * (&us * (&p * &smat * q.transpose()));
        let gs = side_gradient(&mapped.s, &us, &ss, &ks, &gys, &self.xs, delta)?;
        let gt = side_gradient(&mapped.t, &ut, &st, &kt, &gyt, &self.xt, delta)?;
        Ok((gs, gt))
    }
}

/// Pulls `∂J/∂Y` back to the map through the eigenvector derivatives of
/// `F Fᵀ` and `F = X^δ Uᵀ`.
fn side_gradient(
    span: &ShiftedSpan,
    uk: &RealMatrix,
    sig: &[f64],
    k: &RealMatrix,
    gy: &RealMatrix,
    x: &RealMatrix,
    delta: f64,
) -> Result<RealMatrix> {
    let y = &span.w * uk;
    let lam: Vec<f64> = sig.iter().map(|s| s * s).collect();
    let sys = SpectralSystem::from_parts(y, lam);
    for l in 0..sig.len() {
        sys.check_gap(l)?;
    }
    let h = sys.pinv_columns(gy);
    let y = sys.vectors();
    let fty = k.transpose() * uk;
    let fth = k.transpose() * (span.w.transpose() * &h);
    let df = -(&h * fty.transpose() + y * fth.transpose());
    let mut du = df.transpose() * x;
    let col = df.row_sum().transpose();
    for mut c in du.column_iter_mut() {
        c.axpy(delta, &col, 1.0);
    }
    Ok(du)
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// The integrand of `J1` at one δ, built literally from [`span_basis`] and
/// [`principal_cosines`] on the shifted matrices.
pub fn j1_integrand(xs: &RealMatrix, xt: &RealMatrix, maps: &LmmPair, delta: f64) -> Result<f64> {
    let xs_d = xs.add_scalar(delta);
    let xt_d = xt.add_scalar(delta);
    let r = maps.r();
    let he = principal_cosines(&span_basis(&xs_d, xs.ncols())?, &span_basis(&xt_d, xt.ncols())?)?;
    let ho = principal_cosines(
        &span_basis(&apply_lmm(&xs_d, maps.us())?, r)?,
        &span_basis(&apply_lmm(&xt_d, maps.ut())?, r)?,
    )?;
    pair_metric(&he, &ho)
}

/// `J1` of a map pair.
pub fn cost_j1(xs: &RealMatrix, xt: &RealMatrix, maps: &LmmPair, cfg: &GlgConfig) -> Result<f64> {
    Problem::new(xs, xt, cfg)?.cost(maps)
}

/// Gradient of `J1` with respect to `(Us, Ut)`.
pub fn grad_j1(
    xs: &RealMatrix,
    xt: &RealMatrix,
    maps: &LmmPair,
    cfg: &GlgConfig,
) -> Result<(RealMatrix, RealMatrix)> {
    Problem::new(xs, xt, cfg)?.gradient(maps)
}
