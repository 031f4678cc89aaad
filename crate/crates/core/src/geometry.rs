//! Charts, fields, and pointwise Riemannian geometry evaluated through jets.
//!
//! Every tensor here is fully covariant (all indices down) unless a name
//! says otherwise. Index conventions:
//!
//! * `christoffel[k][i][j] = Γ^k_ij`
//! * `riemann[k][i][j][s] = R_kijs`, normalized so that
//!   `g^{ks} R_kijs = Ric_ij`; equivalently `R̊(g) = Ric`.
//! * covariant derivatives put the new index first:
//!   `(∇T)[a][i..] = ∇_a T_i..`.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::jets::{Jet, JetError, MAX_ORDER};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("point has {got} coordinates, chart `{chart}` has dimension {expected}")]
    PointDimension {
        chart: String,
        got: usize,
        expected: usize,
    },
    #[error("coordinate {axis} = {value} outside chart `{chart}` domain ({lo}, {hi})")]
    OutsideDomain {
        chart: String,
        axis: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("metric of chart `{0}` is not symmetric")]
    NotSymmetric(String),
    #[error("metric of chart `{chart}` is not positive definite at {point:?}")]
    NotPositiveDefinite { chart: String, point: Vec<f64> },
    #[error("operation needs jet order {needed}, got {available}")]
    InsufficientOrder { needed: usize, available: usize },
    #[error("field `{field}` has dimension {got}, expected {expected}")]
    FieldDimension {
        field: String,
        got: usize,
        expected: usize,
    },
}

pub type Result<T, E = GeometryError> = std::result::Result<T, E>;

pub(crate) fn need_order(needed: usize, available: usize) -> Result<()> {
    if needed > available {
        Err(GeometryError::InsufficientOrder { needed, available })
    } else {
        Ok(())
    }
}

/// One coordinate axis of a chart: an open interval, optionally periodic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub periodic: bool,
}

impl Axis {
    pub fn open(lo: f64, hi: f64) -> Axis {
        Axis {
            lo,
            hi,
            periodic: false,
        }
    }

    /// `[0, period)`, wrapping.
    pub fn periodic(period: f64) -> Axis {
        Axis {
            lo: 0.0,
            hi: period,
            periodic: true,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        x.is_finite() && (self.periodic || (x > self.lo && x < self.hi))
    }
}

type JetFn<T> = dyn Fn(&[Jet]) -> T + Send + Sync;

/// Analytic coordinate patch with its metric.
///
/// The metric closure receives coordinate seed jets and returns the `n × n`
/// block of `g_ij` row-major. A closure that differentiates its inputs
/// internally declares that with `loss`: it is then fed seeds `loss` orders
/// higher than requested.
#[derive(Clone)]
pub struct Chart {
    name: String,
    axes: Vec<Axis>,
    loss: usize,
    metric: Arc<JetFn<Vec<Jet>>>,
}

impl fmt::Debug for Chart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Chart")
            .field("name", &self.name)
            .field("axes", &self.axes)
            .finish()
    }
}

impl Chart {
    pub fn new(
        name: impl Into<String>,
        axes: Vec<Axis>,
        metric: impl Fn(&[Jet]) -> Vec<Jet> + Send + Sync + 'static,
    ) -> Chart {
        Chart {
            name: name.into(),
            axes,
            loss: 0,
            metric: Arc::new(metric),
        }
    }

    pub fn with_loss(mut self, loss: usize) -> Chart {
        self.loss = loss;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    /// Highest frame order this chart supports.
    pub fn max_order(&self) -> usize {
        MAX_ORDER - self.loss
    }

    pub fn check_point(&self, point: &[f64]) -> Result<()> {
        if point.len() != self.dim() {
            return Err(GeometryError::PointDimension {
                chart: self.name.clone(),
                got: point.len(),
                expected: self.dim(),
            });
        }
        for (axis, (x, a)) in point.iter().zip(&self.axes).enumerate() {
            if !a.contains(*x) {
                return Err(GeometryError::OutsideDomain {
                    chart: self.name.clone(),
                    axis,
                    value: *x,
                    lo: a.lo,
                    hi: a.hi,
                });
            }
        }
        Ok(())
    }

    /// Metric block `g_ij` as order-`order` jets at `point`.
    pub fn metric_jets(&self, point: &[f64], order: usize) -> Result<TensorJet> {
        self.check_point(point)?;
        need_order(order, self.max_order())?;
        let n = self.dim();
        let seeds = Jet::seeds(point, order + self.loss)?;
        let raw = (self.metric)(&seeds);
        assert_eq!(raw.len(), n * n, "metric closure returned wrong block size");
        let mut g = TensorJet::zeros(n, 2, order);
        for i in 0..n {
            for j in 0..n {
                let a = &raw[i * n + j];
                let b = &raw[j * n + i];
                let scale = 1.0 + a.max_abs();
                if (a - b).max_abs() > 1e-12 * scale {
                    return Err(GeometryError::NotSymmetric(self.name.clone()));
                }
                *g.get_mut(&[i, j]) = a.truncate(order);
            }
        }
        Ok(g)
    }

    /// Metric components at `point` (no derivatives).
    pub fn metric_values(&self, point: &[f64]) -> Result<Vec<f64>> {
        Ok(self.metric_jets(point, 0)?.values())
    }

    /// Chart whose metric is `g + t·h` for a symmetric tensor field `h`.
    pub fn perturbed(&self, h: &TensorField, t: f64) -> Chart {
        assert_eq!(h.rank(), 2);
        let base = self.clone();
        let field = h.clone();
        let loss = self.loss.max(h.loss);
        Chart {
            name: format!("{}+{}*{}", self.name, t, h.name()),
            axes: self.axes.clone(),
            loss,
            metric: Arc::new(move |seeds: &[Jet]| {
                let g = (base.metric)(seeds);
                let h = (field.eval)(seeds);
                let order = seeds[0].order().saturating_sub(loss);
                g.iter()
                    .zip(&h)
                    .map(|(a, b)| {
                        let mut out = a.truncate(order);
                        out.axpy_assign(t, b);
                        out
                    })
                    .collect()
            }),
        }
    }
}

/// Scalar field given by a closure on coordinate seeds.
#[derive(Clone)]
pub struct ScalarField {
    name: String,
    dim: usize,
    loss: usize,
    eval: Arc<JetFn<Jet>>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarField({})", self.name)
    }
}

impl ScalarField {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        eval: impl Fn(&[Jet]) -> Jet + Send + Sync + 'static,
    ) -> ScalarField {
        ScalarField {
            name: name.into(),
            dim,
            loss: 0,
            eval: Arc::new(eval),
        }
    }

    pub fn constant(dim: usize, c: f64) -> ScalarField {
        ScalarField::new(format!("const({c})"), dim, move |s: &[Jet]| {
            Jet::constant(s[0].dim(), s[0].order(), c)
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn jet(&self, point: &[f64], order: usize) -> Result<Jet> {
        self.check_dim(point)?;
        need_order(order + self.loss, MAX_ORDER)?;
        let seeds = Jet::seeds(point, order + self.loss)?;
        Ok((self.eval)(&seeds).truncate(order))
    }

    pub fn value(&self, point: &[f64]) -> Result<f64> {
        Ok(self.jet(point, 0)?.value())
    }

    fn check_dim(&self, point: &[f64]) -> Result<()> {
        if point.len() != self.dim {
            return Err(GeometryError::FieldDimension {
                field: self.name.clone(),
                got: point.len(),
                expected: self.dim,
            });
        }
        Ok(())
    }

    /// `a·self + b·other`
    pub fn combine(&self, a: f64, other: &ScalarField, b: f64) -> ScalarField {
        let (f, g) = (self.clone(), other.clone());
        let loss = self.loss.max(other.loss);
        ScalarField {
            name: format!("{a}*{}+{b}*{}", self.name, other.name),
            dim: self.dim,
            loss,
            eval: Arc::new(move |s: &[Jet]| {
                let order = s[0].order() - loss;
                let mut out = (f.eval)(s).truncate(order).scale(a);
                out.axpy_assign(b, &(g.eval)(s));
                out
            }),
        }
    }
}

/// Covariant tensor field (rank 1 or 2) given by a closure on coordinate seeds.
///
/// Components are returned row-major. See [`Chart`] for `loss`.
#[derive(Clone)]
pub struct TensorField {
    name: String,
    dim: usize,
    rank: usize,
    loss: usize,
    eval: Arc<JetFn<Vec<Jet>>>,
}

impl fmt::Debug for TensorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TensorField({}, rank {})", self.name, self.rank)
    }
}

impl TensorField {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        rank: usize,
        loss: usize,
        eval: impl Fn(&[Jet]) -> Vec<Jet> + Send + Sync + 'static,
    ) -> TensorField {
        TensorField {
            name: name.into(),
            dim,
            rank,
            loss,
            eval: Arc::new(eval),
        }
    }

    /// Symmetric 2-tensor field.
    pub fn sym2(
        name: impl Into<String>,
        dim: usize,
        loss: usize,
        eval: impl Fn(&[Jet]) -> Vec<Jet> + Send + Sync + 'static,
    ) -> TensorField {
        TensorField::new(name, dim, 2, loss, eval)
    }

    pub fn one_form(
        name: impl Into<String>,
        dim: usize,
        loss: usize,
        eval: impl Fn(&[Jet]) -> Vec<Jet> + Send + Sync + 'static,
    ) -> TensorField {
        TensorField::new(name, dim, 1, loss, eval)
    }

    /// The metric of `chart`, viewed as a symmetric tensor field.
    pub fn metric_of(chart: &Chart) -> TensorField {
        let c = chart.clone();
        TensorField {
            name: "g".into(),
            dim: chart.dim(),
            rank: 2,
            loss: chart.loss,
            eval: Arc::new(move |s: &[Jet]| (c.metric)(s)),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn jet(&self, point: &[f64], order: usize) -> Result<TensorJet> {
        if point.len() != self.dim {
            return Err(GeometryError::FieldDimension {
                field: self.name.clone(),
                got: point.len(),
                expected: self.dim,
            });
        }
        need_order(order + self.loss, MAX_ORDER)?;
        let seeds = Jet::seeds(point, order + self.loss)?;
        let raw = (self.eval)(&seeds);
        assert_eq!(raw.len(), self.dim.pow(self.rank as u32));
        Ok(TensorJet {
            dim: self.dim,
            rank: self.rank,
            order,
            data: raw.into_iter().map(|j| j.truncate(order)).collect(),
        })
    }
}

/// Covariant tensor whose components are jets of a common order.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorJet {
    dim: usize,
    rank: usize,
    order: usize,
    data: Vec<Jet>,
}

impl TensorJet {
    pub fn zeros(dim: usize, rank: usize, order: usize) -> TensorJet {
        TensorJet {
            dim,
            rank,
            order,
            data: vec![Jet::zero(dim, order); dim.pow(rank as u32)],
        }
    }

    pub fn scalar(j: Jet) -> TensorJet {
        TensorJet {
            dim: j.dim(),
            rank: 0,
            order: j.order(),
            data: vec![j],
        }
    }

    pub fn from_fn(
        dim: usize,
        rank: usize,
        order: usize,
        mut f: impl FnMut(&[usize]) -> Jet,
    ) -> TensorJet {
        let len = dim.pow(rank as u32);
        let mut idx = vec![0; rank];
        let data = (0..len)
            .map(|flat| {
                unflatten(flat, dim, &mut idx);
                f(&idx).truncate(order)
            })
            .collect();
        TensorJet {
            dim,
            rank,
            order,
            data,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn components(&self) -> &[Jet] {
        &self.data
    }

    #[inline]
    fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.dim + i)
    }

    #[inline]
    pub fn get(&self, idx: &[usize]) -> &Jet {
        &self.data[self.flat(idx)]
    }

    #[inline]
    pub fn get_mut(&mut self, idx: &[usize]) -> &mut Jet {
        let f = self.flat(idx);
        &mut self.data[f]
    }

    #[inline]
    pub fn at2(&self, i: usize, j: usize) -> &Jet {
        &self.data[i * self.dim + j]
    }

    pub fn values(&self) -> Vec<f64> {
        self.data.iter().map(Jet::value).collect()
    }

    pub fn truncate(&self, order: usize) -> TensorJet {
        TensorJet {
            dim: self.dim,
            rank: self.rank,
            order: order.min(self.order),
            data: self.data.iter().map(|j| j.truncate(order)).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> TensorJet {
        TensorJet {
            dim: self.dim,
            rank: self.rank,
            order: self.order,
            data: self.data.iter().map(|j| j.scale(s)).collect(),
        }
    }

    /// Componentwise `self + s·other`, at the lower of the two orders.
    pub fn add_scaled(&self, s: f64, other: &TensorJet) -> TensorJet {
        assert_eq!((self.dim, self.rank), (other.dim, other.rank));
        let order = self.order.min(other.order);
        TensorJet {
            dim: self.dim,
            rank: self.rank,
            order,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| {
                    let mut out = a.truncate(order);
                    out.axpy_assign(s, b);
                    out
                })
                .collect(),
        }
    }

    /// Every component multiplied by the scalar jet `f`.
    pub fn mul_scalar(&self, f: &Jet) -> TensorJet {
        let order = self.order.min(f.order());
        TensorJet {
            dim: self.dim,
            rank: self.rank,
            order,
            data: self.data.iter().map(|a| a.mul_to(f, order)).collect(),
        }
    }

    /// Largest coefficient magnitude over all components.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, j| m.max(j.max_abs()))
    }

    pub fn to_sym2(&self) -> Sym2 {
        assert_eq!(self.rank, 2);
        Sym2::from_values(self.dim, self.values())
    }

    pub fn to_one_form(&self) -> OneForm {
        assert_eq!(self.rank, 1);
        OneForm(self.values())
    }
}

fn flat_index(dim: usize, idx: &[usize]) -> usize {
    idx.iter().fold(0, |acc, &i| acc * dim + i)
}

fn unflatten(mut flat: usize, dim: usize, idx: &mut [usize]) {
    for slot in idx.iter_mut().rev() {
        *slot = flat % dim;
        flat /= dim;
    }
}

/// Pointwise symmetric 2-tensor (covariant components, row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct Sym2 {
    dim: usize,
    data: Vec<f64>,
}

impl Sym2 {
    pub fn from_values(dim: usize, data: Vec<f64>) -> Sym2 {
        assert_eq!(data.len(), dim * dim);
        Sym2 { dim, data }
    }

    pub fn zeros(dim: usize) -> Sym2 {
        Sym2 {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn sub(&self, other: &Sym2) -> Sym2 {
        Sym2 {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn add_scaled(&self, s: f64, other: &Sym2) -> Sym2 {
        Sym2 {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + s * b)
                .collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Sym2 {
        Sym2 {
            dim: self.dim,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    /// Largest `|T_ij − T_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let n = self.dim;
        let mut m: f64 = 0.0;
        for i in 0..n {
            for j in 0..i {
                m = m.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        m
    }
}

/// Pointwise 1-form.
#[derive(Debug, Clone, PartialEq)]
pub struct OneForm(pub Vec<f64>);

impl OneForm {
    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// All pointwise geometric data at one point, as jets.
///
/// With frame order `K`: `g`, `g_inv` carry order `K`; `christoffel` and
/// `christoffel_lowered` order `K−1`; `riemann`, `ricci`, `scalar` order `K−2`.
#[derive(Debug, Clone)]
pub struct CurvatureFrame {
    pub point: Vec<f64>,
    pub order: usize,
    pub g: TensorJet,
    pub g_inv: TensorJet,
    /// `Γ^k_ij`
    pub christoffel: TensorJet,
    /// `Γ_{l,ij} = g_lk Γ^k_ij`
    pub christoffel_lowered: TensorJet,
    pub riemann: TensorJet,
    pub ricci: TensorJet,
    pub scalar: Jet,
}

impl CurvatureFrame {
    /// Frame of `chart` at `point` with metric jets of order `order`.
    pub fn new(chart: &Chart, point: &[f64], order: usize) -> Result<CurvatureFrame> {
        need_order(2, order)?;
        let g = chart.metric_jets(point, order)?;
        CurvatureFrame::from_metric(point, g).map_err(|e| match e {
            GeometryError::NotPositiveDefinite { point, .. } => {
                GeometryError::NotPositiveDefinite {
                    chart: chart.name().to_string(),
                    point,
                }
            }
            e => e,
        })
    }

    /// Frame from an explicit metric jet block. Used by the finite-difference
    /// oracle, which synthesizes metric jets from sampled values.
    pub fn from_metric(point: &[f64], g: TensorJet) -> Result<CurvatureFrame> {
        let n = g.dim();
        let order = g.order();
        need_order(2, order)?;
        let g0 = g.values();
        let a = invert_spd(n, &g0).ok_or_else(|| GeometryError::NotPositiveDefinite {
            chart: String::new(),
            point: point.to_vec(),
        })?;
        let g_inv = jet_inverse(&g, &a);

        // first kind: Γ_{l,ij} = ½(∂_i g_jl + ∂_j g_il − ∂_l g_ij)
        let dg: Vec<TensorJet> = (0..n)
            .map(|axis| TensorJet {
                dim: n,
                rank: 2,
                order: order - 1,
                data: g.data.iter().map(|c| c.diff_to(axis, order - 1)).collect(),
            })
            .collect();
        let mut lowered = TensorJet::zeros(n, 3, order - 1);
        for l in 0..n {
            for i in 0..n {
                for j in i..n {
                    let mut c = dg[i].at2(j, l).clone();
                    c += dg[j].at2(i, l);
                    c -= dg[l].at2(i, j);
                    let c = c.scale(0.5);
                    *lowered.get_mut(&[l, j, i]) = c.clone();
                    *lowered.get_mut(&[l, i, j]) = c;
                }
            }
        }
        let mut christoffel = TensorJet::zeros(n, 3, order - 1);
        for k in 0..n {
            for i in 0..n {
                for j in i..n {
                    let mut c = Jet::zero(n, order - 1);
                    for l in 0..n {
                        c.fma_assign(g_inv.at2(k, l), lowered.get(&[l, i, j]));
                    }
                    *christoffel.get_mut(&[k, j, i]) = c.clone();
                    *christoffel.get_mut(&[k, i, j]) = c;
                }
            }
        }

        // Rm_abcd = ∂_c Γ_{a,db} − ∂_d Γ_{a,cb} + Γ_{e,da} Γ^e_cb − Γ_{e,ca} Γ^e_db,
        // with Ric_bd = g^{ac} Rm_abcd.  Stored as riemann[k][i][j][s] = Rm_kisj.
        let ro = order - 2;
        let mut riemann = TensorJet::zeros(n, 4, ro);
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in (c + 1)..n {
                        let mut r = lowered.get(&[a, d, b]).diff_to(c, ro);
                        r -= &lowered.get(&[a, c, b]).diff_to(d, ro);
                        for e in 0..n {
                            r.fma_assign(lowered.get(&[e, d, a]), christoffel.get(&[e, c, b]));
                            r.fms_assign(lowered.get(&[e, c, a]), christoffel.get(&[e, d, b]));
                        }
                        *riemann.get_mut(&[a, b, c, d]) = -&r;
                        *riemann.get_mut(&[a, b, d, c]) = r;
                    }
                }
            }
        }

        let mut ricci = TensorJet::zeros(n, 2, ro);
        for i in 0..n {
            for j in i..n {
                let mut c = Jet::zero(n, ro);
                for k in 0..n {
                    for s in 0..n {
                        c.fma_assign(g_inv.at2(k, s), riemann.get(&[k, i, j, s]));
                    }
                }
                *ricci.get_mut(&[j, i]) = c.clone();
                *ricci.get_mut(&[i, j]) = c;
            }
        }
        let scalar = trace_with(&g_inv, &ricci, ro);

        Ok(CurvatureFrame {
            point: point.to_vec(),
            order,
            g,
            g_inv,
            christoffel,
            christoffel_lowered: lowered,
            riemann,
            ricci,
            scalar,
        })
    }

    pub fn dim(&self) -> usize {
        self.g.dim()
    }

    /// `√det g` at the point.
    pub fn volume_density(&self) -> f64 {
        let n = self.dim();
        let l = cholesky(n, &self.g.values()).expect("frame metric is positive definite");
        (0..n).map(|i| l[i * n + i]).product()
    }

    pub fn scalar_curvature(&self) -> f64 {
        self.scalar.value()
    }

    pub fn ricci_values(&self) -> Sym2 {
        self.ricci.to_sym2()
    }

    /// Eigenvalues of the Ricci endomorphism `g^{-1} Ric`, ascending.
    pub fn ricci_eigenvalues(&self) -> Vec<f64> {
        let n = self.dim();
        let l = cholesky(n, &self.g.values()).expect("frame metric is positive definite");
        // L^{-1} Ric L^{-T} is symmetric with the same spectrum as g^{-1} Ric
        let ric = self.ricci.values();
        let linv = lower_inverse(n, &l);
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for a in 0..n {
                    for b in 0..n {
                        s += linv[i * n + a] * ric[a * n + b] * linv[j * n + b];
                    }
                }
                m[i * n + j] = s;
            }
        }
        symmetric_eigenvalues(n, m)
    }

    /// Pointwise `⟨a, b⟩_g` of two symmetric tensors.
    pub fn inner_values(&self, a: &Sym2, b: &Sym2) -> f64 {
        let n = self.dim();
        let gi = self.g_inv.values();
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        s += gi[i * n + k] * gi[j * n + l] * a.get(i, j) * b.get(k, l);
                    }
                }
            }
        }
        s
    }

    /// `tr_g` of a pointwise symmetric tensor.
    pub fn trace_values(&self, a: &Sym2) -> f64 {
        let n = self.dim();
        let gi = self.g_inv.values();
        (0..n * n).map(|k| gi[k] * a.as_slice()[k]).sum()
    }

    /// `g^{ij} a_i b_j`
    pub fn one_form_inner(&self, a: &OneForm, b: &OneForm) -> f64 {
        let n = self.dim();
        let gi = self.g_inv.values();
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += gi[i * n + j] * a.0[i] * b.0[j];
            }
        }
        s
    }

    pub fn metric_values(&self) -> Sym2 {
        self.g.to_sym2()
    }
}

/// `g^{-1}` as jets: iterate `X ← A − A N X` with `A = g(0)^{-1}`, `N = g − g(0)`;
/// each sweep fixes one more order.
fn jet_inverse(g: &TensorJet, a: &[f64]) -> TensorJet {
    let n = g.dim();
    let order = g.order();
    let mut nil = g.clone();
    for c in nil.data.iter_mut() {
        *c = c.add_scalar(-c.value());
    }
    let constant = TensorJet::from_fn(n, 2, order, |ix| {
        Jet::constant(n, order, a[ix[0] * n + ix[1]])
    });
    let mut x = constant.clone();
    for _ in 0..order {
        // nx = N X
        let mut nx = TensorJet::zeros(n, 2, order);
        for i in 0..n {
            for j in 0..n {
                let c = nx.get_mut(&[i, j]);
                for k in 0..n {
                    c.fma_assign(nil.at2(i, k), x.at2(k, j));
                }
            }
        }
        let mut next = constant.clone();
        for i in 0..n {
            for j in 0..n {
                let c = next.get_mut(&[i, j]);
                for k in 0..n {
                    c.axpy_assign(-a[i * n + k], nx.at2(k, j));
                }
            }
        }
        x = next;
    }
    x
}

fn cholesky(n: usize, m: &[f64]) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = m[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Some(l)
}

fn lower_inverse(n: usize, l: &[f64]) -> Vec<f64> {
    let mut inv = vec![0.0; n * n];
    for col in 0..n {
        for i in 0..n {
            let mut s = if i == col { 1.0 } else { 0.0 };
            for k in 0..i {
                s -= l[i * n + k] * inv[k * n + col];
            }
            inv[i * n + col] = s / l[i * n + i];
        }
    }
    inv
}

/// Inverse of a symmetric positive definite matrix, `None` if not SPD.
pub fn invert_spd(n: usize, m: &[f64]) -> Option<Vec<f64>> {
    let l = cholesky(n, m)?;
    let li = lower_inverse(n, &l);
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            inv[i * n + j] = (0..n).map(|k| li[k * n + i] * li[k * n + j]).sum();
        }
    }
    Some(inv)
}

/// Eigenvalues of a small symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn symmetric_eigenvalues(n: usize, mut a: Vec<f64>) -> Vec<f64> {
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
    ev
}

fn trace_with(g_inv: &TensorJet, t: &TensorJet, order: usize) -> Jet {
    let n = t.dim();
    let mut c = Jet::zero(n, order);
    for i in 0..n {
        for j in 0..n {
            c.fma_assign(g_inv.at2(i, j), t.at2(i, j));
        }
    }
    c
}

// ---------------------------------------------------------------------------
// Covariant operators on jets. Each takes an output order and fails if the
// inputs cannot support it.

/// `∇T` at `order`. Needs `order < T.order()` and `order ≤ K − 1`.
pub fn covariant_derivative(
    frame: &CurvatureFrame,
    t: &TensorJet,
    order: usize,
) -> Result<TensorJet> {
    need_order(order + 1, t.order())?;
    need_order(order + 1, frame.order)?;
    let n = t.dim();
    let rank = t.rank();
    let gamma_live: Vec<bool> = frame.christoffel.data.iter().map(|c| !c.is_zero()).collect();
    let t_live: Vec<bool> = t.data.iter().map(|c| !c.is_zero()).collect();
    let mut out = Vec::with_capacity(n.pow(rank as u32 + 1));
    let mut idx = vec![0; rank + 1];
    let mut shifted = vec![0; rank];
    for flat in 0..n.pow(rank as u32 + 1) {
        unflatten(flat, n, &mut idx);
        let a = idx[0];
        let tail = &idx[1..];
        let mut c = t.get(tail).diff_to(a, order);
        for r in 0..rank {
            shifted.copy_from_slice(tail);
            for b in 0..n {
                shifted[r] = b;
                let gk = (b * n + a) * n + tail[r];
                let tk = flat_index(n, &shifted);
                if gamma_live[gk] && t_live[tk] {
                    c.fms_assign(&frame.christoffel.data[gk], &t.data[tk]);
                }
            }
        }
        out.push(c);
    }
    Ok(TensorJet {
        dim: n,
        rank: rank + 1,
        order,
        data: out,
    })
}

/// Coordinate gradient `df` as a 1-form.
pub fn differential(f: &Jet, order: usize) -> Result<TensorJet> {
    need_order(order + 1, f.order())?;
    let n = f.dim();
    Ok(TensorJet {
        dim: n,
        rank: 1,
        order,
        data: (0..n).map(|a| f.diff_to(a, order)).collect(),
    })
}

/// `tr_g T` for a rank-2 tensor.
pub fn trace(frame: &CurvatureFrame, t: &TensorJet, order: usize) -> Result<Jet> {
    need_order(order, t.order())?;
    Ok(trace_with(&frame.g_inv, t, order))
}

/// `⟨a, b⟩_g = g^{ik} g^{jl} a_ij b_kl` for rank-2 tensors.
pub fn inner(frame: &CurvatureFrame, a: &TensorJet, b: &TensorJet, order: usize) -> Result<Jet> {
    need_order(order, a.order().min(b.order()))?;
    let raised = raise_both(frame, b, order);
    let n = a.dim();
    let mut c = Jet::zero(n, order);
    for k in 0..n * n {
        c.fma_assign(&a.data[k], &raised.data[k]);
    }
    Ok(c)
}

/// `T^{ij} = g^{ik} g^{jl} T_kl`
fn raise_both(frame: &CurvatureFrame, t: &TensorJet, order: usize) -> TensorJet {
    let n = t.dim();
    let gi = &frame.g_inv;
    let mut half = TensorJet::zeros(n, 2, order);
    for i in 0..n {
        for l in 0..n {
            let c = half.get_mut(&[i, l]);
            for k in 0..n {
                c.fma_assign(gi.at2(i, k), t.at2(k, l));
            }
        }
    }
    let mut out = TensorJet::zeros(n, 2, order);
    for i in 0..n {
        for j in 0..n {
            let c = out.get_mut(&[i, j]);
            for l in 0..n {
                c.fma_assign(half.at2(i, l), gi.at2(l, j));
            }
        }
    }
    out
}

/// `∇²f`. Needs `f` of order `order + 2`.
pub fn hessian_jet(frame: &CurvatureFrame, f: &Jet, order: usize) -> Result<TensorJet> {
    let df = differential(f, order + 1)?;
    covariant_derivative(frame, &df, order)
}

/// `Δf = g^{ij} ∇_i∇_j f`.
pub fn laplacian_jet(frame: &CurvatureFrame, f: &Jet, order: usize) -> Result<Jet> {
    let h = hessian_jet(frame, f, order)?;
    trace(frame, &h, order)
}

/// `(δh)_j = −g^{ik} ∇_i h_kj`.
pub fn divergence_jet(frame: &CurvatureFrame, h: &TensorJet, order: usize) -> Result<TensorJet> {
    Ok(div_jet(frame, h, order)?.scale(-1.0))
}

/// `div_g T = g^{ik} ∇_i T_kj = −δT`.
pub fn div_jet(frame: &CurvatureFrame, t: &TensorJet, order: usize) -> Result<TensorJet> {
    let dt = covariant_derivative(frame, t, order)?;
    Ok(contract_divergence(frame, &dt, order))
}

/// `δ²h = g^{ik} g^{jl} ∇_i ∇_j h_kl`.
pub fn double_divergence_jet(frame: &CurvatureFrame, h: &TensorJet, order: usize) -> Result<Jet> {
    let ddh = second_covariant(frame, h, order)?;
    Ok(contract_double(frame, &ddh, order))
}

/// `∇∇T` with the two new indices first.
pub fn second_covariant(frame: &CurvatureFrame, t: &TensorJet, order: usize) -> Result<TensorJet> {
    let dt = covariant_derivative(frame, t, order + 1)?;
    covariant_derivative(frame, &dt, order)
}

/// `(δ*ω)_ij = ½(∇_i ω_j + ∇_j ω_i)`.
pub fn delta_star_jet(frame: &CurvatureFrame, omega: &TensorJet, order: usize) -> Result<TensorJet> {
    let dw = covariant_derivative(frame, omega, order)?;
    Ok(symmetrize(&dw))
}

/// Connection Laplacian `(Δh)_ij = g^{kl} ∇_k ∇_l h_ij`.
pub fn rough_laplacian_jet(frame: &CurvatureFrame, h: &TensorJet, order: usize) -> Result<TensorJet> {
    let ddh = second_covariant(frame, h, order)?;
    Ok(contract_rough(frame, &ddh, order))
}

/// `R̊(h)_ij = g^{kl} g^{st} R_kijs h_lt`.
pub fn curvature_action_jet(frame: &CurvatureFrame, h: &TensorJet, order: usize) -> Result<TensorJet> {
    need_order(order, frame.order - 2)?;
    need_order(order, h.order())?;
    let up = raise_both(frame, h, order);
    let n = h.dim();
    Ok(TensorJet::from_fn(n, 2, order, |ix| {
        let mut c = Jet::zero(n, order);
        for k in 0..n {
            for s in 0..n {
                c.fma_assign(frame.riemann.get(&[k, ix[0], ix[1], s]), up.at2(k, s));
            }
        }
        c
    }))
}

/// `g^{ik} (∇T)_{i k j}` from a precomputed `∇T` of a rank-2 tensor (that is, `div_g T`).
pub(crate) fn contract_divergence(frame: &CurvatureFrame, dt: &TensorJet, order: usize) -> TensorJet {
    let n = dt.dim();
    let data = (0..n)
        .map(|j| {
            let mut c = Jet::zero(n, order);
            for i in 0..n {
                for k in 0..n {
                    c.fma_assign(frame.g_inv.at2(i, k), dt.get(&[i, k, j]));
                }
            }
            c
        })
        .collect();
    TensorJet {
        dim: n,
        rank: 1,
        order,
        data,
    }
}

/// `g^{kl} (∇∇T)_{k l i j}` from a precomputed `∇∇T`.
pub(crate) fn contract_rough(frame: &CurvatureFrame, ddt: &TensorJet, order: usize) -> TensorJet {
    let n = ddt.dim();
    let gi = &frame.g_inv;
    TensorJet::from_fn(n, 2, order, |ix| {
        let mut c = Jet::zero(n, order);
        for k in 0..n {
            for l in 0..n {
                c.fma_assign(gi.at2(k, l), ddt.get(&[k, l, ix[0], ix[1]]));
            }
        }
        c
    })
}

/// `g^{ik} g^{jl} (∇∇T)_{i j k l}` from a precomputed `∇∇T`.
pub(crate) fn contract_double(frame: &CurvatureFrame, ddt: &TensorJet, order: usize) -> Jet {
    let n = ddt.dim();
    let gi = &frame.g_inv;
    let mut c = Jet::zero(n, order);
    for j in 0..n {
        for l in 0..n {
            let mut part = Jet::zero(n, order);
            for i in 0..n {
                for k in 0..n {
                    part.fma_assign(gi.at2(i, k), ddt.get(&[i, j, k, l]));
                }
            }
            c.fma_assign(gi.at2(j, l), &part);
        }
    }
    c
}

/// Symmetrization `½(T_ij + T_ji)` of a rank-2 tensor.
pub(crate) fn symmetrize(t: &TensorJet) -> TensorJet {
    TensorJet::from_fn(t.dim(), 2, t.order(), |ix| {
        (t.at2(ix[0], ix[1]) + t.at2(ix[1], ix[0])).scale(0.5)
    })
}

// ---------------------------------------------------------------------------
// Pointwise operators on fields.

pub fn hessian(frame: &CurvatureFrame, f: &ScalarField) -> Result<Sym2> {
    let fj = f.jet(&frame.point, 2)?;
    Ok(hessian_jet(frame, &fj, 0)?.to_sym2())
}

pub fn laplacian_scalar(frame: &CurvatureFrame, f: &ScalarField) -> Result<f64> {
    let fj = f.jet(&frame.point, 2)?;
    Ok(laplacian_jet(frame, &fj, 0)?.value())
}

pub fn divergence_sym2(frame: &CurvatureFrame, h: &TensorField) -> Result<OneForm> {
    let hj = h.jet(&frame.point, 1)?;
    Ok(divergence_jet(frame, &hj, 0)?.to_one_form())
}

pub fn double_divergence(frame: &CurvatureFrame, h: &TensorField) -> Result<f64> {
    let hj = h.jet(&frame.point, 2)?;
    Ok(double_divergence_jet(frame, &hj, 0)?.value())
}

pub fn delta_star(frame: &CurvatureFrame, omega: &TensorField) -> Result<Sym2> {
    let wj = omega.jet(&frame.point, 1)?;
    Ok(delta_star_jet(frame, &wj, 0)?.to_sym2())
}

pub fn rough_laplacian_sym2(frame: &CurvatureFrame, h: &TensorField) -> Result<Sym2> {
    let hj = h.jet(&frame.point, 2)?;
    Ok(rough_laplacian_jet(frame, &hj, 0)?.to_sym2())
}

pub fn curvature_action(frame: &CurvatureFrame, h: &TensorField) -> Result<Sym2> {
    let hj = h.jet(&frame.point, 0)?;
    Ok(curvature_action_jet(frame, &hj, 0)?.to_sym2())
}

/// Curvature quantities usable as fields for the covariant operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivedQuantity {
    Ricci,
    Scalar,
    /// `f·Ric`
    PotentialRicci,
    /// `f·R`
    PotentialScalar,
}

/// `Ric`, `R`, `f·Ric`, or `f·R` as a jet tensor of order `K − 2`
/// (rank 2 for the Ricci variants, rank 0 for the scalar ones).
///
/// `f` is required for the potential variants.
pub fn derived_field(
    frame: &CurvatureFrame,
    quantity: DerivedQuantity,
    f: Option<&Jet>,
) -> Result<TensorJet> {
    let order = frame.order - 2;
    let potential = || -> Result<Jet> {
        let f = f.expect("potential quantity needs f");
        need_order(order, f.order())?;
        Ok(f.truncate(order))
    };
    Ok(match quantity {
        DerivedQuantity::Ricci => frame.ricci.clone(),
        DerivedQuantity::Scalar => TensorJet::scalar(frame.scalar.clone()),
        DerivedQuantity::PotentialRicci => frame.ricci.mul_scalar(&potential()?),
        DerivedQuantity::PotentialScalar => {
            TensorJet::scalar(frame.scalar.mul_to(&potential()?, order))
        }
    })
}

impl TensorJet {
    /// The single component of a rank-0 tensor.
    pub fn as_scalar(&self) -> &Jet {
        assert_eq!(self.rank, 0);
        &self.data[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn euclidean(n: usize) -> Chart {
        Chart::new("euclid", vec![Axis::open(-10.0, 10.0); n], move |s: &[Jet]| {
            let (d, o) = (s[0].dim(), s[0].order());
            (0..n * n)
                .map(|k| Jet::constant(d, o, if k / n == k % n { 1.0 } else { 0.0 }))
                .collect()
        })
    }

    fn round_s2() -> Chart {
        Chart::new(
            "s2",
            vec![Axis::open(0.01, std::f64::consts::PI - 0.01), Axis::periodic(std::f64::consts::TAU)],
            |s: &[Jet]| {
                let (d, o) = (s[0].dim(), s[0].order());
                let sn = s[0].sin();
                vec![
                    Jet::constant(d, o, 1.0),
                    Jet::zero(d, o),
                    Jet::zero(d, o),
                    &sn * &sn,
                ]
            },
        )
    }

    #[test]
    fn flat_frame_vanishes() {
        let frame = CurvatureFrame::new(&euclidean(3), &[0.1, 0.2, 0.3], 3).unwrap();
        assert_eq!(frame.christoffel.max_abs(), 0.0);
        assert_eq!(frame.riemann.max_abs(), 0.0);
        assert_eq!(frame.scalar.max_abs(), 0.0);
    }

    #[test]
    fn s2_scalar_curvature() {
        let frame = CurvatureFrame::new(&round_s2(), &[1.0, 0.3], 4).unwrap();
        assert!((frame.scalar_curvature() - 2.0).abs() < 1e-13);
        // constant along the sphere
        assert!(frame.scalar.add_scalar(-2.0).max_abs() < 1e-12);
    }

    #[test]
    fn frame_errors() {
        let c = round_s2();
        assert!(matches!(
            CurvatureFrame::new(&c, &[0.0, 0.3], 2),
            Err(GeometryError::OutsideDomain { axis: 0, .. })
        ));
        assert!(matches!(
            CurvatureFrame::new(&c, &[1.0, 0.3], 1),
            Err(GeometryError::InsufficientOrder { .. })
        ));
        assert!(matches!(
            CurvatureFrame::new(&c, &[1.0], 2),
            Err(GeometryError::PointDimension { .. })
        ));
        let bad = Chart::new("neg", vec![Axis::open(-1.0, 1.0); 2], |s: &[Jet]| {
            let (d, o) = (s[0].dim(), s[0].order());
            vec![
                Jet::constant(d, o, 1.0),
                Jet::zero(d, o),
                Jet::zero(d, o),
                Jet::constant(d, o, -1.0),
            ]
        });
        assert!(matches!(
            CurvatureFrame::new(&bad, &[0.0, 0.0], 2),
            Err(GeometryError::NotPositiveDefinite { .. })
        ));
        let skew = Chart::new("skew", vec![Axis::open(-1.0, 1.0); 2], |s: &[Jet]| {
            let (d, o) = (s[0].dim(), s[0].order());
            vec![
                Jet::constant(d, o, 2.0),
                Jet::constant(d, o, 0.1),
                Jet::zero(d, o),
                Jet::constant(d, o, 2.0),
            ]
        });
        assert!(matches!(
            CurvatureFrame::new(&skew, &[0.0, 0.0], 2),
            Err(GeometryError::NotSymmetric(_))
        ));
    }

    #[test]
    fn inverse_metric_jets() {
        let frame = CurvatureFrame::new(&round_s2(), &[0.8, 0.0], 5).unwrap();
        let n = 2;
        for i in 0..n {
            for j in 0..n {
                let mut c = Jet::zero(n, 5);
                for k in 0..n {
                    c.fma_assign(frame.g.at2(i, k), frame.g_inv.at2(k, j));
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!(c.add_scalar(-expect).max_abs() < 1e-13);
            }
        }
    }

    #[test]
    fn flat_operators() {
        let frame = CurvatureFrame::new(&euclidean(2), &[0.4, -0.3], 3).unwrap();
        let f = ScalarField::new("x^2", 2, |s: &[Jet]| &s[0] * &s[0]);
        let h = hessian(&frame, &f).unwrap();
        assert_eq!(h.as_slice(), &[2.0, 0.0, 0.0, 0.0]);

        let f2 = ScalarField::new("x^2+y^2", 2, |s: &[Jet]| &(&s[0] * &s[0]) + &(&s[1] * &s[1]));
        assert!((laplacian_scalar(&frame, &f2).unwrap() - 4.0).abs() < 1e-14);
        assert_eq!(laplacian_scalar(&frame, &ScalarField::constant(2, 3.0)).unwrap(), 0.0);

        let h1 = TensorField::sym2("diag(x,0)", 2, 0, |s: &[Jet]| {
            let z = Jet::zero(2, s[0].order());
            vec![s[0].clone(), z.clone(), z.clone(), z]
        });
        let d = divergence_sym2(&frame, &h1).unwrap();
        assert_eq!(d.0, vec![-1.0, 0.0]);

        let h2 = TensorField::sym2("diag(x^2,y^2)", 2, 0, |s: &[Jet]| {
            let z = Jet::zero(2, s[0].order());
            vec![&s[0] * &s[0], z.clone(), z, &s[1] * &s[1]]
        });
        assert!((double_divergence(&frame, &h2).unwrap() - 4.0).abs() < 1e-14);

        let h3 = TensorField::sym2("diag(x^2,0)", 2, 0, |s: &[Jet]| {
            let z = Jet::zero(2, s[0].order());
            vec![&s[0] * &s[0], z.clone(), z.clone(), z]
        });
        assert_eq!(rough_laplacian_sym2(&frame, &h3).unwrap().as_slice(), &[2.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn metric_is_parallel() {
        let chart = round_s2();
        let frame = CurvatureFrame::new(&chart, &[1.1, 2.0], 4).unwrap();
        let g = TensorField::metric_of(&chart);
        assert!(divergence_sym2(&frame, &g).unwrap().max_abs() < 1e-14);
        assert!(double_divergence(&frame, &g).unwrap().abs() < 1e-13);
        assert!(rough_laplacian_sym2(&frame, &g).unwrap().max_abs() < 1e-13);
        let ric = curvature_action(&frame, &g).unwrap();
        assert!(ric.sub(&frame.ricci_values()).max_abs() < 1e-14);
    }

    #[test]
    fn delta_star_of_differential_is_hessian() {
        let chart = round_s2();
        let frame = CurvatureFrame::new(&chart, &[0.9, 0.4], 3).unwrap();
        let f = ScalarField::new("f", 2, |s: &[Jet]| &s[0].cos() * &s[1].sin());
        let df = TensorField::one_form("df", 2, 1, |s: &[Jet]| {
            let u = &s[0].cos() * &s[1].sin();
            let o = u.order() - 1;
            (0..2).map(|a| u.diff_to(a, o)).collect()
        });
        let a = delta_star(&frame, &df).unwrap();
        let b = hessian(&frame, &f).unwrap();
        assert!(a.sub(&b).max_abs() < 1e-14);
        assert!(b.asymmetry() < 1e-15);
    }

    #[test]
    fn ricci_eigenvalues_of_s2() {
        let frame = CurvatureFrame::new(&round_s2(), &[0.7, 0.0], 2).unwrap();
        let ev = frame.ricci_eigenvalues();
        assert!(ev.iter().all(|l| (l - 1.0).abs() < 1e-13), "{ev:?}");
        assert!((frame.volume_density() - 0.7f64.sin()).abs() < 1e-15);
    }

    #[test]
    fn jacobi_eigenvalues() {
        let ev = symmetric_eigenvalues(3, vec![2.0, 1.0, 0.0, 1.0, 2.0, 0.0, 0.0, 0.0, 5.0]);
        let expect = [1.0, 3.0, 5.0];
        for (a, b) in ev.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn derived_fields() {
        let frame = CurvatureFrame::new(&round_s2(), &[1.0, 0.0], 4).unwrap();
        let r = derived_field(&frame, DerivedQuantity::Scalar, None).unwrap();
        assert_eq!(r.order(), 2);
        assert!(r.as_scalar().add_scalar(-2.0).max_abs() < 1e-12);
        let f = Jet::constant(2, 4, 3.0);
        let fr = derived_field(&frame, DerivedQuantity::PotentialScalar, Some(&f)).unwrap();
        assert!((fr.as_scalar().value() - 6.0).abs() < 1e-12);
    }
}
