//! Truncated multivariate Taylor arithmetic.
//!
//! A [`Jet`] of order `K` in `n` variables stores the Taylor coefficients
//! `∂^α u / α!` of a scalar quantity for every multi-index with `|α| ≤ K`.
//! Coefficients use a dense graded-lexicographic layout. Because the layout
//! for order `k` is a prefix of the layout for any order above `k`,
//! truncation is a slice and mixed-order products only touch the shared
//! prefix.
//!
//! Layout tables (enumeration, product pairs, derivative maps) are built
//! once per dimension and shared.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::OnceLock;

use thiserror::Error;

/// Highest supported truncation order.
pub const MAX_ORDER: usize = 5;
/// Highest supported number of variables.
pub const MAX_DIM: usize = 6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JetError {
    #[error("jet dimension {0} outside 1..={MAX_DIM}")]
    DimensionOutOfRange(usize),
    #[error("jet order {0} outside 0..={MAX_ORDER}")]
    OrderOutOfRange(usize),
    #[error("axis {axis} out of range for dimension {dim}")]
    AxisOutOfRange { axis: usize, dim: usize },
    #[error("point has {got} coordinates, expected {expected}")]
    PointDimension { got: usize, expected: usize },
    #[error("jet shape mismatch: ({0}, {1}) vs ({2}, {3})")]
    ShapeMismatch(usize, usize, usize, usize),
    #[error("division by a jet with zero constant term")]
    DivisionByZero,
    #[error("{func} undefined at {value}")]
    Domain { func: &'static str, value: f64 },
    #[error("multi-index degree {degree} exceeds jet order {order}")]
    DegreeExceedsOrder { degree: usize, order: usize },
}

/// Exponent vector of a monomial `x^α`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<u8>);

impl MultiIndex {
    pub fn new(exponents: Vec<u8>) -> Self {
        MultiIndex(exponents)
    }

    pub fn zero(dim: usize) -> Self {
        MultiIndex(vec![0; dim])
    }

    /// `e_axis`.
    pub fn unit(dim: usize, axis: usize) -> Self {
        let mut e = vec![0; dim];
        e[axis] = 1;
        MultiIndex(e)
    }

    pub fn exponents(&self) -> &[u8] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    /// `α! = Π α_i!`
    pub fn factorial(&self) -> f64 {
        self.0.iter().map(|&e| factorial(e as usize)).product()
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Number of coefficients of an order-`order` jet in `dim` variables, `C(dim+order, order)`.
pub fn coefficient_count(dim: usize, order: usize) -> usize {
    let mut c = 1usize;
    for i in 1..=order {
        c = c * (dim + i) / i;
    }
    c
}

struct Layout {
    indices: Vec<MultiIndex>,
    lookup: HashMap<MultiIndex, usize>,
    len_by_order: [usize; MAX_ORDER + 1],
    /// `(i, j, target)` sorted by target position.
    products: Vec<(u16, u16, u16)>,
    products_by_order: [usize; MAX_ORDER + 1],
    /// Per axis: for each target position of an order `MAX_ORDER - 1` jet,
    /// the source position and the factor `α_axis + 1`.
    derivative: Vec<Vec<(u16, f64)>>,
    factorials: Vec<f64>,
}

impl Layout {
    fn build(dim: usize) -> Layout {
        let mut indices = Vec::new();
        let mut len_by_order = [0; MAX_ORDER + 1];
        for (degree, len) in len_by_order.iter_mut().enumerate() {
            let mut current = vec![0u8; dim];
            enumerate_degree(dim, 0, degree, &mut current, &mut indices);
            *len = indices.len();
        }
        let lookup: HashMap<MultiIndex, usize> = indices
            .iter()
            .enumerate()
            .map(|(p, m)| (m.clone(), p))
            .collect();

        let mut products = Vec::new();
        for (i, a) in indices.iter().enumerate() {
            for (j, b) in indices.iter().enumerate() {
                if a.degree() + b.degree() > MAX_ORDER {
                    continue;
                }
                let sum = MultiIndex(a.0.iter().zip(&b.0).map(|(x, y)| x + y).collect());
                products.push((i as u16, j as u16, lookup[&sum] as u16));
            }
        }
        products.sort_by_key(|&(i, j, c)| (c, i, j));
        let mut products_by_order = [0; MAX_ORDER + 1];
        for (order, slot) in products_by_order.iter_mut().enumerate() {
            *slot = products
                .iter()
                .take_while(|&&(_, _, c)| (c as usize) < len_by_order[order])
                .count();
        }

        let derivative = (0..dim)
            .map(|axis| {
                indices[..len_by_order[MAX_ORDER - 1]]
                    .iter()
                    .map(|m| {
                        let mut up = m.clone();
                        up.0[axis] += 1;
                        (lookup[&up] as u16, (m.0[axis] + 1) as f64)
                    })
                    .collect()
            })
            .collect();
        let factorials = indices.iter().map(MultiIndex::factorial).collect();

        Layout {
            indices,
            lookup,
            len_by_order,
            products,
            products_by_order,
            derivative,
            factorials,
        }
    }
}

// Lexicographically descending within a degree: x0^d first.
fn enumerate_degree(
    dim: usize,
    axis: usize,
    remaining: usize,
    current: &mut Vec<u8>,
    out: &mut Vec<MultiIndex>,
) {
    if axis == dim - 1 {
        current[axis] = remaining as u8;
        out.push(MultiIndex(current.clone()));
        current[axis] = 0;
        return;
    }
    for e in (0..=remaining).rev() {
        current[axis] = e as u8;
        enumerate_degree(dim, axis + 1, remaining - e, current, out);
    }
    current[axis] = 0;
}

fn layout(dim: usize) -> &'static Layout {
    static LAYOUTS: [OnceLock<Layout>; MAX_DIM + 1] = [const { OnceLock::new() }; MAX_DIM + 1];
    LAYOUTS[dim].get_or_init(|| Layout::build(dim))
}

/// Truncated Taylor expansion of a scalar at a base point.
#[derive(Clone, PartialEq)]
pub struct Jet {
    dim: u8,
    order: u8,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("dim", &self.dim)
            .field("order", &self.order)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

fn check_shape(dim: usize, order: usize) -> Result<(), JetError> {
    if dim == 0 || dim > MAX_DIM {
        return Err(JetError::DimensionOutOfRange(dim));
    }
    if order > MAX_ORDER {
        return Err(JetError::OrderOutOfRange(order));
    }
    Ok(())
}

impl Jet {
    /// Constant jet. Panics on an unsupported shape; see [`Jet::try_constant`].
    pub fn constant(dim: usize, order: usize, value: f64) -> Jet {
        Jet::try_constant(dim, order, value).expect("invalid jet shape")
    }

    pub fn try_constant(dim: usize, order: usize, value: f64) -> Result<Jet, JetError> {
        check_shape(dim, order)?;
        let mut coeffs = vec![0.0; coefficient_count(dim, order)];
        coeffs[0] = value;
        Ok(Jet {
            dim: dim as u8,
            order: order as u8,
            coeffs,
        })
    }

    pub fn zero(dim: usize, order: usize) -> Jet {
        Jet::constant(dim, order, 0.0)
    }

    /// Builds a jet from coefficients in layout order.
    pub fn from_coefficients(dim: usize, order: usize, coeffs: Vec<f64>) -> Result<Jet, JetError> {
        check_shape(dim, order)?;
        let expected = coefficient_count(dim, order);
        if coeffs.len() != expected {
            return Err(JetError::ShapeMismatch(dim, order, coeffs.len(), expected));
        }
        Ok(Jet {
            dim: dim as u8,
            order: order as u8,
            coeffs,
        })
    }

    /// Jet of the coordinate function `x_axis` at `point`.
    pub fn seed(point: &[f64], axis: usize, order: usize) -> Result<Jet, JetError> {
        let dim = point.len();
        check_shape(dim, order)?;
        if axis >= dim {
            return Err(JetError::AxisOutOfRange { axis, dim });
        }
        let mut jet = Jet::constant(dim, order, point[axis]);
        if order > 0 {
            // degree-one block is e_0, e_1, ... in that order
            jet.coeffs[1 + axis] = 1.0;
        }
        Ok(jet)
    }

    /// All coordinate seeds at `point`.
    pub fn seeds(point: &[f64], order: usize) -> Result<Vec<Jet>, JetError> {
        (0..point.len()).map(|a| Jet::seed(point, a, order)).collect()
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn order(&self) -> usize {
        self.order as usize
    }

    /// Constant term.
    #[inline]
    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    /// Multi-indices matching [`Jet::coefficients`] position by position.
    pub fn indices(&self) -> &'static [MultiIndex] {
        &layout(self.dim()).indices[..self.coeffs.len()]
    }

    fn position(&self, alpha: &MultiIndex) -> Result<usize, JetError> {
        if alpha.dim() != self.dim() {
            return Err(JetError::ShapeMismatch(
                alpha.dim(),
                alpha.degree(),
                self.dim(),
                self.order(),
            ));
        }
        if alpha.degree() > self.order() {
            return Err(JetError::DegreeExceedsOrder {
                degree: alpha.degree(),
                order: self.order(),
            });
        }
        Ok(layout(self.dim()).lookup[alpha])
    }

    /// Taylor coefficient `∂^α u / α!`.
    pub fn coefficient(&self, alpha: &MultiIndex) -> Result<f64, JetError> {
        Ok(self.coeffs[self.position(alpha)?])
    }

    /// Partial derivative `∂^α u` at the base point.
    pub fn derivative(&self, alpha: &MultiIndex) -> Result<f64, JetError> {
        let p = self.position(alpha)?;
        Ok(self.coeffs[p] * layout(self.dim()).factorials[p])
    }

    /// Drops every coefficient above `order`.
    pub fn truncate(&self, order: usize) -> Jet {
        let order = order.min(self.order());
        let len = layout(self.dim()).len_by_order[order];
        Jet {
            dim: self.dim,
            order: order as u8,
            coeffs: self.coeffs[..len].to_vec(),
        }
    }

    /// Coordinate derivative `∂_axis`, one order lower.
    pub fn diff(&self, axis: usize) -> Result<Jet, JetError> {
        if axis >= self.dim() {
            return Err(JetError::AxisOutOfRange {
                axis,
                dim: self.dim(),
            });
        }
        if self.order == 0 {
            return Err(JetError::OrderOutOfRange(0));
        }
        Ok(self.diff_to(axis, self.order() - 1))
    }

    /// `∂_axis` truncated at `order`; `order` must be below `self.order()`.
    pub(crate) fn diff_to(&self, axis: usize, order: usize) -> Jet {
        debug_assert!(order < self.order());
        let l = layout(self.dim());
        let len = l.len_by_order[order];
        let coeffs = l.derivative[axis][..len]
            .iter()
            .map(|&(src, factor)| factor * self.coeffs[src as usize])
            .collect();
        Jet {
            dim: self.dim,
            order: order as u8,
            coeffs,
        }
    }

    /// Product truncated at `order`, which must not exceed either operand's order.
    pub fn mul_to(&self, other: &Jet, order: usize) -> Jet {
        debug_assert_eq!(self.dim, other.dim);
        debug_assert!(order <= self.order() && order <= other.order());
        let l = layout(self.dim());
        let mut coeffs = vec![0.0; l.len_by_order[order]];
        let a = &self.coeffs;
        let b = &other.coeffs;
        for &(i, j, c) in &l.products[..l.products_by_order[order]] {
            coeffs[c as usize] += a[i as usize] * b[j as usize];
        }
        Jet {
            dim: self.dim,
            order: order as u8,
            coeffs,
        }
    }

    /// `self += a * b`, truncated at `self.order()`.
    pub fn fma_assign(&mut self, a: &Jet, b: &Jet) {
        debug_assert!(self.order <= a.order && self.order <= b.order);
        if a.is_zero() || b.is_zero() {
            return;
        }
        let l = layout(self.dim());
        let (x, y) = (&a.coeffs, &b.coeffs);
        for &(i, j, c) in &l.products[..l.products_by_order[self.order()]] {
            self.coeffs[c as usize] += x[i as usize] * y[j as usize];
        }
    }

    /// `self -= a * b`, truncated at `self.order()`.
    pub fn fms_assign(&mut self, a: &Jet, b: &Jet) {
        debug_assert!(self.order <= a.order && self.order <= b.order);
        if a.is_zero() || b.is_zero() {
            return;
        }
        let l = layout(self.dim());
        let (x, y) = (&a.coeffs, &b.coeffs);
        for &(i, j, c) in &l.products[..l.products_by_order[self.order()]] {
            self.coeffs[c as usize] -= x[i as usize] * y[j as usize];
        }
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet {
            dim: self.dim,
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// `self += s * other` on the shared prefix; `other.order()` must be at least `self.order()`.
    pub fn axpy_assign(&mut self, s: f64, other: &Jet) {
        debug_assert!(other.order >= self.order);
        for (x, y) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *x += s * y;
        }
    }

    pub fn add_scalar(&self, s: f64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += s;
        out
    }

    /// Largest coefficient magnitude.
    /// True when every coefficient is exactly zero.
    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    fn same_shape(&self, other: &Jet) -> Result<(), JetError> {
        if self.dim != other.dim || self.order != other.order {
            return Err(JetError::ShapeMismatch(
                self.dim(),
                self.order(),
                other.dim(),
                other.order(),
            ));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Jet) -> Result<Jet, JetError> {
        self.same_shape(other)?;
        Ok(self + other)
    }

    pub fn try_sub(&self, other: &Jet) -> Result<Jet, JetError> {
        self.same_shape(other)?;
        Ok(self - other)
    }

    pub fn try_mul(&self, other: &Jet) -> Result<Jet, JetError> {
        self.same_shape(other)?;
        Ok(self * other)
    }

    pub fn try_div(&self, other: &Jet) -> Result<Jet, JetError> {
        self.same_shape(other)?;
        let inv = other.recip()?;
        Ok(self.mul_to(&inv, self.order()))
    }

    /// Composes a univariate function given its normalized Taylor
    /// coefficients `f^(k)(u0) / k!` at the constant term `u0`.
    pub fn compose(&self, taylor: &[f64]) -> Jet {
        let order = self.order();
        debug_assert!(taylor.len() > order);
        let mut shift = self.clone();
        shift.coeffs[0] = 0.0;
        let mut acc = Jet::constant(self.dim(), order, taylor[order]);
        for k in (0..order).rev() {
            acc = acc.mul_to(&shift, order);
            acc.coeffs[0] += taylor[k];
        }
        acc
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cycle = [s, c, -s, -c];
        let taylor: Vec<f64> = (0..=self.order())
            .map(|k| cycle[k % 4] / factorial(k))
            .collect();
        self.compose(&taylor)
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cycle = [c, -s, -c, s];
        let taylor: Vec<f64> = (0..=self.order())
            .map(|k| cycle[k % 4] / factorial(k))
            .collect();
        self.compose(&taylor)
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        let taylor: Vec<f64> = (0..=self.order()).map(|k| e / factorial(k)).collect();
        self.compose(&taylor)
    }

    pub fn ln(&self) -> Result<Jet, JetError> {
        let u = self.value();
        if u <= 0.0 || !u.is_finite() {
            return Err(JetError::Domain {
                func: "ln",
                value: u,
            });
        }
        let taylor: Vec<f64> = (0..=self.order())
            .map(|k| match k {
                0 => u.ln(),
                k => {
                    let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                    sign / (k as f64 * u.powi(k as i32))
                }
            })
            .collect();
        Ok(self.compose(&taylor))
    }

    /// `u^p` for real `p`; needs a positive constant term unless `p` is a
    /// non-negative integer.
    pub fn powf(&self, p: f64) -> Result<Jet, JetError> {
        let u = self.value();
        let integral = p.fract() == 0.0 && p >= 0.0;
        if !(u > 0.0 || integral && u.is_finite()) {
            return Err(JetError::Domain {
                func: "pow",
                value: u,
            });
        }
        let mut taylor = Vec::with_capacity(self.order() + 1);
        let mut binom = 1.0;
        for k in 0..=self.order() {
            let exponent = p - k as f64;
            let term = if integral && exponent < 0.0 {
                0.0
            } else {
                binom * u.powf(exponent)
            };
            taylor.push(term);
            binom *= (p - k as f64) / (k as f64 + 1.0);
        }
        Ok(self.compose(&taylor))
    }

    pub fn sqrt(&self) -> Result<Jet, JetError> {
        if self.value() <= 0.0 {
            return Err(JetError::Domain {
                func: "sqrt",
                value: self.value(),
            });
        }
        self.powf(0.5)
    }

    pub fn recip(&self) -> Result<Jet, JetError> {
        let u = self.value();
        if u == 0.0 {
            return Err(JetError::DivisionByZero);
        }
        let inv = 1.0 / u;
        let mut taylor = Vec::with_capacity(self.order() + 1);
        let mut term = inv;
        for _ in 0..=self.order() {
            taylor.push(term);
            term *= -inv;
        }
        Ok(self.compose(&taylor))
    }
}

// Operator impls truncate to the lower of the two orders. The checked
// `try_*` methods require identical shapes.

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        assert_eq!(self.dim, rhs.dim, "jet dimension mismatch");
        let (lo, hi) = if self.order <= rhs.order {
            (self, rhs)
        } else {
            (rhs, self)
        };
        let mut out = lo.clone();
        out.axpy_assign(1.0, hi);
        out
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        assert_eq!(self.dim, rhs.dim, "jet dimension mismatch");
        let order = self.order.min(rhs.order) as usize;
        let mut out = self.truncate(order);
        out.axpy_assign(-1.0, rhs);
        out
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        assert_eq!(self.dim, rhs.dim, "jet dimension mismatch");
        self.mul_to(rhs, self.order.min(rhs.order) as usize)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        &self + &rhs
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        &self - &rhs
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        &self * &rhs
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(mut self, rhs: f64) -> Jet {
        self.coeffs.iter_mut().for_each(|c| *c *= rhs);
        self
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: f64) -> Jet {
        self.coeffs[0] += rhs;
        self
    }
}

impl AddAssign<&Jet> for Jet {
    fn add_assign(&mut self, rhs: &Jet) {
        assert_eq!(self.dim, rhs.dim, "jet dimension mismatch");
        if rhs.order < self.order {
            *self = self.truncate(rhs.order());
        }
        self.axpy_assign(1.0, rhs);
    }
}

impl SubAssign<&Jet> for Jet {
    fn sub_assign(&mut self, rhs: &Jet) {
        assert_eq!(self.dim, rhs.dim, "jet dimension mismatch");
        if rhs.order < self.order {
            *self = self.truncate(rhs.order());
        }
        self.axpy_assign(-1.0, rhs);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn layout_sizes_match_binomials() {
        assert_eq!(coefficient_count(4, 5), 126);
        assert_eq!(coefficient_count(3, 0), 1);
        for dim in 1..=4 {
            let l = layout(dim);
            for order in 0..=MAX_ORDER {
                assert_eq!(l.len_by_order[order], coefficient_count(dim, order));
            }
        }
    }

    #[test]
    fn layout_is_graded_and_stable() {
        let l = layout(3);
        let degrees: Vec<usize> = l.indices.iter().map(MultiIndex::degree).collect();
        assert!(degrees.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(l.indices[1].exponents(), &[1, 0, 0]);
        assert_eq!(l.indices[3].exponents(), &[0, 0, 1]);
        assert_eq!(l.indices[4].exponents(), &[2, 0, 0]);
    }

    #[test]
    fn seed_examples() {
        let x = Jet::seed(&[0.0, 0.0], 0, 2).unwrap();
        assert_eq!(x.coefficients(), &[0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        let c = Jet::seed(&[3.0], 0, 0).unwrap();
        assert_eq!(c.coefficients(), &[3.0]);
        let y = Jet::seed(&[1.0, 2.0], 1, 1).unwrap();
        assert_eq!(y.coefficients(), &[2.0, 0.0, 1.0]);
    }

    #[test]
    fn seed_errors() {
        assert!(matches!(
            Jet::seed(&[0.0, 0.0], 2, 1),
            Err(JetError::AxisOutOfRange { .. })
        ));
        assert!(matches!(
            Jet::seed(&[0.0], 0, 6),
            Err(JetError::OrderOutOfRange(6))
        ));
        assert!(matches!(
            Jet::seed(&[0.0; 7], 0, 1),
            Err(JetError::DimensionOutOfRange(7))
        ));
    }

    #[test]
    fn square_of_coordinate() {
        let x = Jet::seed(&[0.0], 0, 2).unwrap();
        let sq = x.try_mul(&x).unwrap();
        assert_eq!(sq.coefficients(), &[0.0, 0.0, 1.0]);
        assert_eq!(sq.derivative(&MultiIndex::new(vec![2])).unwrap(), 2.0);
    }

    #[test]
    fn quotient_identity() {
        let x = Jet::seed(&[0.0, 0.0], 0, 4).unwrap();
        let one_plus = x.add_scalar(1.0);
        let q = one_plus.try_div(&one_plus).unwrap();
        assert!(close(q.value(), 1.0, 1e-15));
        assert!(q.coefficients()[1..].iter().all(|c| c.abs() < 1e-15));
    }

    #[test]
    fn arith_errors() {
        let a = Jet::constant(2, 2, 1.0);
        let b = Jet::constant(2, 3, 1.0);
        let c = Jet::constant(3, 2, 1.0);
        assert!(matches!(a.try_add(&b), Err(JetError::ShapeMismatch(..))));
        assert!(matches!(a.try_mul(&c), Err(JetError::ShapeMismatch(..))));
        let z = Jet::seed(&[0.0, 1.0], 0, 2).unwrap();
        assert!(matches!(a.try_div(&z), Err(JetError::DivisionByZero)));
    }

    #[test]
    fn sin_cos_product_two_routes() {
        let x = Jet::seed(&[0.3, -0.2], 0, 5).unwrap();
        let y = Jet::seed(&[0.3, -0.2], 1, 5).unwrap();
        let u = &(&x * 2.0) + &y;
        let prod = &u.sin() * &u.cos();
        // sin u cos u = sin(2u) / 2
        let direct = u.scale(2.0).sin().scale(0.5);
        for (a, b) in prod.coefficients().iter().zip(direct.coefficients()) {
            assert!(close(*a, *b, 1e-15), "{a} vs {b}");
        }
    }

    #[test]
    fn maclaurin_series() {
        let x = Jet::seed(&[0.0], 0, 3).unwrap();
        let s = x.sin();
        let expect = [0.0, 1.0, 0.0, -1.0 / 6.0];
        for (a, b) in s.coefficients().iter().zip(expect) {
            assert!(close(*a, b, 1e-16));
        }
        assert!(close(s.derivative(&MultiIndex::new(vec![3])).unwrap(), -1.0, 1e-15));
        assert_eq!(Jet::constant(2, 3, 0.0).exp(), Jet::constant(2, 3, 1.0));

        let r = Jet::seed(&[0.0], 0, 2).unwrap().add_scalar(1.0).sqrt().unwrap();
        let expect = [1.0, 0.5, -0.125];
        for (a, b) in r.coefficients().iter().zip(expect) {
            assert!(close(*a, b, 1e-16));
        }
    }

    #[test]
    fn elementary_inverse_pairs() {
        let x = Jet::seed(&[0.7, 0.1], 0, 5).unwrap();
        let y = Jet::seed(&[0.7, 0.1], 1, 5).unwrap();
        let u = (&(&x * &y) + &x).add_scalar(1.5);
        let back = u.ln().unwrap().exp();
        for (a, b) in back.coefficients().iter().zip(u.coefficients()) {
            assert!(close(*a, *b, 1e-14));
        }
        let sq = u.sqrt().unwrap();
        let again = &sq * &sq;
        for (a, b) in again.coefficients().iter().zip(u.coefficients()) {
            assert!(close(*a, *b, 1e-14));
        }
        let cube = u.powf(3.0).unwrap();
        let direct = &(&u * &u) * &u;
        for (a, b) in cube.coefficients().iter().zip(direct.coefficients()) {
            assert!(close(*a, *b, 1e-13));
        }
    }

    #[test]
    fn domain_errors() {
        let neg = Jet::constant(1, 2, -1.0);
        assert!(matches!(neg.ln(), Err(JetError::Domain { func: "ln", .. })));
        assert!(matches!(neg.sqrt(), Err(JetError::Domain { .. })));
        assert!(matches!(neg.powf(0.5), Err(JetError::Domain { .. })));
        assert!(neg.powf(2.0).is_ok());
        assert!(matches!(
            Jet::constant(1, 2, 0.0).recip(),
            Err(JetError::DivisionByZero)
        ));
    }

    #[test]
    fn derivative_degree_check() {
        let x = Jet::seed(&[0.0, 0.0], 0, 2).unwrap();
        assert!(matches!(
            x.derivative(&MultiIndex::new(vec![2, 1])),
            Err(JetError::DegreeExceedsOrder { degree: 3, order: 2 })
        ));
        assert_eq!(x.derivative(&MultiIndex::zero(2)).unwrap(), 0.0);
    }

    #[test]
    fn coordinate_derivative_shifts_coefficients() {
        let x = Jet::seed(&[0.5, 0.0], 0, 4).unwrap();
        let y = Jet::seed(&[0.5, 0.0], 1, 4).unwrap();
        // u = x^2 y
        let u = &(&x * &x) * &y;
        let ux = u.diff(0).unwrap();
        let expect = &(&x * &y) * 2.0;
        for (a, b) in ux.coefficients().iter().zip(expect.coefficients()) {
            assert!(close(*a, *b, 1e-15));
        }
        assert_eq!(ux.order(), 3);
        assert!(Jet::constant(2, 0, 1.0).diff(0).is_err());
    }

    #[test]
    fn mixed_order_ops_truncate() {
        let x = Jet::seed(&[0.2], 0, 4).unwrap();
        let lo = x.truncate(2);
        let p = &x * &lo;
        assert_eq!(p.order(), 2);
        let mut acc = x.clone();
        acc += &lo;
        assert_eq!(acc.order(), 2);
    }
}
