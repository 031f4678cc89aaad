//! σ₂-curvature, the linearized scalar and σ₂ curvature operators, their
//! L²-formal adjoints, and the pointwise identities between them.
//!
//! Constants used throughout, for dimension `n`:
//!
//! * `c_n = n / (4(n−1))`, the weight of the scalar-curvature part of `Λ`.
//! * CPE defect `D = ∇²f − R̊ic − (Ric − R/(n−1) g) f`.
//! * static defect `E = ∇²f − (Ric − R/(n−1) g) f`.
//!
//! The defects vanish for solutions of the critical point equation and the
//! vacuum static equation respectively; the extended trace identities hold
//! for every `(g, f)` and reduce to the classical ones when the defect is
//! zero.

use thiserror::Error;

use crate::geometry::{
    contract_divergence, contract_double, contract_rough, covariant_derivative,
    curvature_action_jet, differential, hessian_jet, inner, need_order, second_covariant,
    symmetrize, trace, CurvatureFrame, GeometryError, OneForm, ScalarField, Sym2, TensorField,
    TensorJet,
};
use crate::jets::Jet;

pub use crate::quadrature::rayleigh_identity;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OperatorError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("frame is not Einstein: max |traceless Ricci| = {traceless_norm:e}")]
    NotEinstein { traceless_norm: f64 },
}

pub type Result<T, E = OperatorError> = std::result::Result<T, E>;

/// Largest `‖R̊ic‖∞` accepted as Einstein.
pub const EINSTEIN_TOLERANCE: f64 = 1e-10;

fn dim_f(frame: &CurvatureFrame) -> f64 {
    frame.dim() as f64
}

fn scalar_weight(n: f64) -> f64 {
    n / (4.0 * (n - 1.0))
}

/// Two sides of an identity evaluated independently.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Balance {
    pub lhs: f64,
    pub rhs: f64,
}

impl Balance {
    pub fn defect(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }

    /// `|lhs − rhs| / max(1, |lhs|)`
    pub fn relative_defect(&self) -> f64 {
        self.defect() / self.lhs.abs().max(1.0)
    }
}

fn metric_scaled(frame: &CurvatureFrame, order: usize, s: &Jet) -> TensorJet {
    frame.g.truncate(order).mul_scalar(s)
}

/// `R̊ic = Ric − (R/n) g` as jets of order `K − 2`.
pub fn traceless_ricci_jet(frame: &CurvatureFrame) -> TensorJet {
    let order = frame.order - 2;
    let r_over_n = frame.scalar.scale(1.0 / dim_f(frame));
    frame
        .ricci
        .add_scaled(-1.0, &metric_scaled(frame, order, &r_over_n))
}

pub fn traceless_ricci(frame: &CurvatureFrame) -> Sym2 {
    traceless_ricci_jet(frame).to_sym2()
}

/// `|R̊ic|²_g`
pub fn traceless_ricci_norm_sq(frame: &CurvatureFrame) -> f64 {
    let t = traceless_ricci(frame);
    frame.inner_values(&t, &t)
}

/// Schouten tensor `A = Ric − R/(2(n−1)) g`.
pub fn schouten(frame: &CurvatureFrame) -> Sym2 {
    let n = dim_f(frame);
    let r = frame.scalar_curvature();
    frame
        .ricci_values()
        .add_scaled(-r / (2.0 * (n - 1.0)), &frame.metric_values())
}

/// `σ₂ = −½|Ric|² + n R² / (8(n−1))` as a jet of order `order ≤ K − 2`.
pub fn sigma2_jet(frame: &CurvatureFrame, order: usize) -> Result<Jet> {
    need_order(order, frame.order - 2)?;
    let n = dim_f(frame);
    let ric_sq = inner(frame, &frame.ricci, &frame.ricci, order)?;
    let r = frame.scalar.truncate(order);
    let mut out = ric_sq.scale(-0.5);
    out.axpy_assign(n / (8.0 * (n - 1.0)), &(&r * &r));
    Ok(out)
}

pub fn sigma2(frame: &CurvatureFrame) -> f64 {
    sigma2_jet(frame, 0)
        .expect("order 0 is always available")
        .value()
}

/// `σ₂` as the second elementary symmetric function of the Schouten
/// eigenvalues: `½[(tr A)² − |A|²]`.
pub fn sigma2_from_schouten(frame: &CurvatureFrame) -> f64 {
    let a = schouten(frame);
    let tr = frame.trace_values(&a);
    0.5 * (tr * tr - frame.inner_values(&a, &a))
}

/// Building blocks of the linearizations, evaluated once per `h`.
struct LinearizationTerms {
    /// `Δ tr h`
    lap_trace: f64,
    /// `δ²h`
    double_div: f64,
    /// `⟨Ric, h⟩`
    ric_h: f64,
    /// `Δh + ∇² tr h + 2δ*δh + 2R̊(h)`
    ricci_part: TensorJet,
}

fn linearization_terms(frame: &CurvatureFrame, h: &TensorJet) -> Result<LinearizationTerms> {
    need_order(2, h.order())?;
    let trh = trace(frame, h, 2)?;
    let hess_tr = hessian_jet(frame, &trh, 0)?;
    let lap_trace = trace(frame, &hess_tr, 0)?.value();

    let dh = covariant_derivative(frame, h, 1)?;
    let ddh = covariant_derivative(frame, &dh, 0)?;
    let double_div = contract_double(frame, &ddh, 0).value();
    let rough = contract_rough(frame, &ddh, 0);
    // δh = −div h
    let delta_h = contract_divergence(frame, &dh, 1).scale(-1.0);
    let delta_star_delta = symmetrize(&covariant_derivative(frame, &delta_h, 0)?);
    let action = curvature_action_jet(frame, h, 0)?;

    let ricci_part = rough
        .add_scaled(1.0, &hess_tr)
        .add_scaled(2.0, &delta_star_delta)
        .add_scaled(2.0, &action);
    let ric_h = inner(frame, &frame.ricci, h, 0)?.value();
    Ok(LinearizationTerms {
        lap_trace,
        double_div,
        ric_h,
        ricci_part,
    })
}

/// `γh = −Δ tr h + δ²h − ⟨Ric, h⟩` from a jet of `h` of order ≥ 2.
pub fn gamma_linearized_jet(frame: &CurvatureFrame, h: &TensorJet) -> Result<f64> {
    need_order(2, h.order())?;
    let trh = trace(frame, h, 2)?;
    let lap_trace = trace(frame, &hessian_jet(frame, &trh, 0)?, 0)?.value();
    let double_div = contract_double(frame, &second_covariant(frame, h, 0)?, 0).value();
    let ric_h = inner(frame, &frame.ricci, h, 0)?.value();
    Ok(-lap_trace + double_div - ric_h)
}

pub fn gamma_linearized(frame: &CurvatureFrame, h: &TensorField) -> Result<f64> {
    gamma_linearized_jet(frame, &h.jet(&frame.point, 2)?)
}

/// `γ*f = ∇²f − (Δf) g − f Ric` from a jet of `f` of order ≥ 2.
pub fn gamma_star_jet(frame: &CurvatureFrame, f: &Jet) -> Result<Sym2> {
    let hess = hessian_jet(frame, f, 0)?;
    let lap = trace(frame, &hess, 0)?.value();
    let f0 = f.value();
    Ok(hess
        .to_sym2()
        .add_scaled(-lap, &frame.metric_values())
        .add_scaled(-f0, &frame.ricci_values()))
}

pub fn gamma_star(frame: &CurvatureFrame, f: &ScalarField) -> Result<Sym2> {
    gamma_star_jet(frame, &f.jet(&frame.point, 2)?)
}

/// `Λh = ½⟨Ric, Δh + ∇² tr h + 2δ*δh + 2R̊(h)⟩ − c_n R (Δ tr h − δ²h + ⟨Ric, h⟩)`.
pub fn lambda_linearized_jet(frame: &CurvatureFrame, h: &TensorJet) -> Result<f64> {
    Ok(linearizations_jet(frame, h)?.1)
}

/// `(γh, Λh)` sharing the covariant derivatives of `h`.
pub fn linearizations_jet(frame: &CurvatureFrame, h: &TensorJet) -> Result<(f64, f64)> {
    let t = linearization_terms(frame, h)?;
    let n = dim_f(frame);
    let r = frame.scalar_curvature();
    let ric_part = inner(frame, &frame.ricci, &t.ricci_part, 0)?.value();
    let gamma = -t.lap_trace + t.double_div - t.ric_h;
    let lambda = 0.5 * ric_part - scalar_weight(n) * r * (t.lap_trace - t.double_div + t.ric_h);
    Ok((gamma, lambda))
}

pub fn lambda_linearized(frame: &CurvatureFrame, h: &TensorField) -> Result<f64> {
    lambda_linearized_jet(frame, &h.jet(&frame.point, 2)?)
}

/// `Λ*f` as jets of order `order`. Needs `K ≥ order + 4` and `f` of order `≥ order + 2`.
///
/// `Λ*f = ½Δ(fRic) + ½δ²(fRic) g + δ*δ(fRic) + f R̊(Ric) − c_n [Δ(fR) g − ∇²(fR) + fR Ric]`
pub fn lambda_star_jet(frame: &CurvatureFrame, f: &Jet, order: usize) -> Result<TensorJet> {
    need_order(order + 4, frame.order)?;
    lambda_star_from_parts(frame, &frame.ricci, &frame.scalar, f, order)
}

/// `Λ*f` with the Ricci and scalar curvature jets supplied separately (each of
/// order `≥ order + 2`). The frame only provides the connection and needs
/// `K ≥ order + 2`.
pub fn lambda_star_from_parts(
    frame: &CurvatureFrame,
    ricci: &TensorJet,
    scalar: &Jet,
    f: &Jet,
    order: usize,
) -> Result<TensorJet> {
    need_order(order + 2, frame.order)?;
    need_order(order + 2, ricci.order())?;
    need_order(order + 2, scalar.order())?;
    need_order(order + 2, f.order())?;
    let n = dim_f(frame);
    let fo = f.truncate(order + 2);
    let f_ric = ricci.truncate(order + 2).mul_scalar(&fo);
    let f_r = scalar.mul_to(&fo, order + 2);

    let d1 = covariant_derivative(frame, &f_ric, order + 1)?;
    let dd = covariant_derivative(frame, &d1, order)?;
    let rough = contract_rough(frame, &dd, order);
    let double_div = contract_double(frame, &dd, order);
    let delta = contract_divergence(frame, &d1, order + 1).scale(-1.0);
    let delta_star_delta = symmetrize(&covariant_derivative(frame, &delta, order)?);
    let action = curvature_action_jet(frame, &ricci.truncate(order), order)?
        .mul_scalar(&fo.truncate(order));

    let hess_fr = hessian_jet(frame, &f_r, order)?;
    let lap_fr = trace(frame, &hess_fr, order)?;
    let g = frame.g.truncate(order);
    let c = scalar_weight(n);

    let out = rough
        .scale(0.5)
        .add_scaled(0.5, &g.mul_scalar(&double_div))
        .add_scaled(1.0, &delta_star_delta)
        .add_scaled(1.0, &action)
        .add_scaled(-c, &g.mul_scalar(&lap_fr))
        .add_scaled(c, &hess_fr)
        .add_scaled(-c, &ricci.truncate(order).mul_scalar(&f_r.truncate(order)));
    Ok(out)
}

pub fn lambda_star(frame: &CurvatureFrame, f: &ScalarField) -> Result<Sym2> {
    Ok(lambda_star_jet(frame, &f.jet(&frame.point, 2)?, 0)?.to_sym2())
}

/// `tr Λ*f` against `(2−n)/4 RΔf + (n−2)/2 ⟨∇²f, Ric⟩ − 2σ₂ f`.
pub fn trace_lambda_star_direct_jet(frame: &CurvatureFrame, f: &Jet) -> Result<Balance> {
    let ls = lambda_star_jet(frame, f, 0)?;
    let lhs = trace(frame, &ls, 0)?.value();
    Ok(Balance {
        lhs,
        rhs: trace_rhs(frame, f)?,
    })
}

fn trace_rhs(frame: &CurvatureFrame, f: &Jet) -> Result<f64> {
    let n = dim_f(frame);
    let hess = hessian_jet(frame, f, 0)?;
    let lap = trace(frame, &hess, 0)?.value();
    let r = frame.scalar_curvature();
    let hess_ric = inner(frame, &hess, &frame.ricci, 0)?.value();
    Ok((2.0 - n) / 4.0 * r * lap + (n - 2.0) / 2.0 * hess_ric - 2.0 * sigma2(frame) * f.value())
}

pub fn trace_lambda_star_direct(frame: &CurvatureFrame, f: &ScalarField) -> Result<Balance> {
    trace_lambda_star_direct_jet(frame, &f.jet(&frame.point, 2)?)
}

/// Defects of `tr Λ*(1) = −2σ₂` and `div Λ*(1) = −½ dσ₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaStarOneDefects {
    pub trace: f64,
    /// Present when the frame has order ≥ 5.
    pub divergence: Option<OneForm>,
}

pub fn lambda_star_one_identities(frame: &CurvatureFrame) -> Result<LambdaStarOneDefects> {
    need_order(4, frame.order)?;
    let n = frame.dim();
    let one = Jet::constant(n, frame.order - 2, 1.0);
    let s2 = sigma2_jet(frame, frame.order - 2)?;
    let div_order = frame.order.checked_sub(5);
    let jet_order = if div_order.is_some() { 1 } else { 0 };
    let ls = lambda_star_jet(frame, &one, jet_order)?;
    let trace_defect = trace(frame, &ls, 0)?.value() + 2.0 * s2.value();
    let divergence = if div_order.is_some() {
        let d1 = covariant_derivative(frame, &ls, 0)?;
        let div = contract_divergence(frame, &d1, 0);
        let ds = differential(&s2, 0)?;
        Some(div.add_scaled(0.5, &ds).to_one_form())
    } else {
        None
    };
    Ok(LambdaStarOneDefects {
        trace: trace_defect,
        divergence,
    })
}

/// `Λ*(1) = ½ΔRic − (ΔR) g/(4(n−1)) + (2−n)/(4(n−1)) ∇²R + R̊(Ric) − c_n R Ric`,
/// assembled directly from Ricci and scalar curvature.
pub fn lambda_star_one_closed_form(frame: &CurvatureFrame) -> Result<Sym2> {
    need_order(4, frame.order)?;
    let n = dim_f(frame);
    let lap_ric = contract_rough(frame, &second_covariant(frame, &frame.ricci, 0)?, 0);
    let hess_r = hessian_jet(frame, &frame.scalar, 0)?;
    let lap_r = trace(frame, &hess_r, 0)?.value();
    let action = curvature_action_jet(frame, &frame.ricci, 0)?;
    let r = frame.scalar_curvature();
    Ok(lap_ric
        .to_sym2()
        .scale(0.5)
        .add_scaled(-lap_r / (4.0 * (n - 1.0)), &frame.metric_values())
        .add_scaled((2.0 - n) / (4.0 * (n - 1.0)), &hess_r.to_sym2())
        .add_scaled(1.0, &action.to_sym2())
        .add_scaled(-scalar_weight(n) * r, &frame.ricci_values()))
}

/// Full `Λ*f` and the Einstein closed form
/// `R(n−2)²/(4n(n−1)) (∇²f − Δf g − (R/n) f g)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EinsteinForms {
    pub full: Sym2,
    pub closed: Sym2,
}

impl EinsteinForms {
    pub fn max_defect(&self) -> f64 {
        self.full.sub(&self.closed).max_abs()
    }
}

pub fn einstein_lambda_star_closed_form(
    frame: &CurvatureFrame,
    f: &ScalarField,
) -> Result<EinsteinForms> {
    let traceless_norm = traceless_ricci(frame).max_abs();
    if traceless_norm > EINSTEIN_TOLERANCE {
        return Err(OperatorError::NotEinstein { traceless_norm });
    }
    let fj = f.jet(&frame.point, 2)?;
    let full = lambda_star_jet(frame, &fj, 0)?.to_sym2();
    let n = dim_f(frame);
    let r = frame.scalar_curvature();
    let hess = hessian_jet(frame, &fj, 0)?;
    let lap = trace(frame, &hess, 0)?.value();
    let coeff = r * (n - 2.0) * (n - 2.0) / (4.0 * n * (n - 1.0));
    let closed = hess
        .to_sym2()
        .add_scaled(-lap - r / n * fj.value(), &frame.metric_values())
        .scale(coeff);
    Ok(EinsteinForms { full, closed })
}

/// CPE defect `D` and static defect `E` at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct DefectTensors {
    pub cpe: Sym2,
    pub static_: Sym2,
}

fn defects_from(frame: &CurvatureFrame, f: &Jet) -> Result<(DefectTensors, Sym2)> {
    let n = dim_f(frame);
    let r = frame.scalar_curvature();
    let hess = hessian_jet(frame, f, 0)?.to_sym2();
    let modified = frame
        .ricci_values()
        .add_scaled(-r / (n - 1.0), &frame.metric_values());
    let static_ = hess.add_scaled(-f.value(), &modified);
    let traceless = traceless_ricci(frame);
    let cpe = static_.sub(&traceless);
    Ok((DefectTensors { cpe, static_ }, hess))
}

pub fn defect_tensors(frame: &CurvatureFrame, f: &ScalarField) -> Result<DefectTensors> {
    Ok(defects_from(frame, &f.jet(&frame.point, 2)?)?.0)
}

/// `γ*f − R̊ic`.
///
/// Also evaluates the two rearranged forms `∇²f − (Ric − R/(n−1) g)f − R̊ic`
/// and `∇²f + R f/(n(n−1)) g − (1+f) R̊ic`, which agree identically.
pub fn cpe_residual(frame: &CurvatureFrame, f: &ScalarField) -> Result<Sym2> {
    let fj = f.jet(&frame.point, 2)?;
    let residual = gamma_star_jet(frame, &fj)?.sub(&traceless_ricci(frame));
    let (defects, hess) = defects_from(frame, &fj)?;
    let n = dim_f(frame);
    let r = frame.scalar_curvature();
    let f0 = fj.value();
    let scaled_form = hess
        .add_scaled(r * f0 / (n * (n - 1.0)), &frame.metric_values())
        .add_scaled(-(1.0 + f0), &traceless_ricci(frame));
    let scale = 1.0 + hess.max_abs() + f0.abs() * frame.ricci_values().max_abs();
    debug_assert!(
        defects.cpe.sub(&scaled_form).max_abs() <= 1e-12 * scale,
        "CPE rearrangements disagree"
    );
    Ok(residual)
}

/// `γ*f`.
pub fn vacuum_static_residual(frame: &CurvatureFrame, f: &ScalarField) -> Result<Sym2> {
    gamma_star(frame, f)
}

/// `Δf + R f / (n−1)`.
pub fn laplacian_eigen_relation(frame: &CurvatureFrame, f: &ScalarField) -> Result<f64> {
    let fj = f.jet(&frame.point, 2)?;
    let lap = trace(frame, &hessian_jet(frame, &fj, 0)?, 0)?.value();
    let n = dim_f(frame);
    Ok(lap + frame.scalar_curvature() * fj.value() / (n - 1.0))
}

/// `∇²f + R f / (n(n−1)) g`.
pub fn obata_residual(frame: &CurvatureFrame, f: &ScalarField) -> Result<Sym2> {
    let fj = f.jet(&frame.point, 2)?;
    let n = dim_f(frame);
    let hess = hessian_jet(frame, &fj, 0)?.to_sym2();
    Ok(hess.add_scaled(
        frame.scalar_curvature() * fj.value() / (n * (n - 1.0)),
        &frame.metric_values(),
    ))
}

/// `tr Λ*f` against `((n−2+nf)/2)|R̊ic|² + ((2−n)/4) R tr D + ((n−2)/2)⟨D, Ric⟩`.
pub fn lemma_extended_identity(frame: &CurvatureFrame, f: &ScalarField) -> Result<Balance> {
    let fj = f.jet(&frame.point, 2)?;
    let lhs = trace(frame, &lambda_star_jet(frame, &fj, 0)?, 0)?.value();
    let (defects, _) = defects_from(frame, &fj)?;
    let n = dim_f(frame);
    let r = frame.scalar_curvature();
    let d = &defects.cpe;
    let rhs = (n - 2.0 + n * fj.value()) / 2.0 * traceless_ricci_norm_sq(frame)
        + (2.0 - n) / 4.0 * r * frame.trace_values(d)
        + (n - 2.0) / 2.0 * frame.inner_values(d, &frame.ricci_values());
    Ok(Balance { lhs, rhs })
}

/// `tr Λ*f` against `(n/2)|R̊ic|² f + ((2−n)/4) R tr E + ((n−2)/2)⟨E, Ric⟩`.
pub fn static_extended_identity(frame: &CurvatureFrame, f: &ScalarField) -> Result<Balance> {
    let fj = f.jet(&frame.point, 2)?;
    let lhs = trace(frame, &lambda_star_jet(frame, &fj, 0)?, 0)?.value();
    let (defects, _) = defects_from(frame, &fj)?;
    let n = dim_f(frame);
    let r = frame.scalar_curvature();
    let e = &defects.static_;
    let rhs = n / 2.0 * traceless_ricci_norm_sq(frame) * fj.value()
        + (2.0 - n) / 4.0 * r * frame.trace_values(e)
        + (n - 2.0) / 2.0 * frame.inner_values(e, &frame.ricci_values());
    Ok(Balance { lhs, rhs })
}
