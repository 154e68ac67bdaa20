//! Polynomial vector fields and their exact Lie brackets.

use std::fmt;

use crate::error::{Error, Result};
use crate::poly::{parse_polynomial, Coeff, Polynomial, Rational};

/// A vector field `V = Σ V_i ∂_i` on `ℝⁿ` with polynomial components.
#[derive(Clone, PartialEq, Debug)]
pub struct PolyVectorField<C: Coeff = f64> {
    components: Vec<Polynomial<C>>,
}

impl<C: Coeff> PolyVectorField<C> {
    pub fn new(components: Vec<Polynomial<C>>) -> Result<Self> {
        let n = components.len();
        if let Some(bad) = components.iter().find(|c| c.nvars() != n) {
            return Err(Error::Dimension(format!("component in {} variables for a field on R^{n}", bad.nvars())));
        }
        Ok(Self { components })
    }

    pub fn zero(n: usize) -> Self {
        Self { components: (0..n).map(|_| Polynomial::zero(n)).collect() }
    }

    /// Constant field with the given components.
    pub fn constant(values: &[C]) -> Self {
        let n = values.len();
        Self { components: values.iter().map(|v| Polynomial::constant(n, v.clone())).collect() }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Polynomial<C>] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &Polynomial<C> {
        &self.components[i]
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(Polynomial::is_zero)
    }

    pub fn eval(&self, x: &[C]) -> Vec<C> {
        self.components.iter().map(|c| c.eval(x)).collect()
    }

    pub fn eval_f64(&self, x: &[f64]) -> Vec<f64> {
        self.components.iter().map(|c| c.eval_f64(x)).collect()
    }

    /// Jacobian matrix `∂V_i/∂x_j` as polynomials, row-major.
    pub fn jacobian(&self) -> Vec<Vec<Polynomial<C>>> {
        self.components.iter().map(|c| (0..self.dim()).map(|j| c.derivative(j)).collect()).collect()
    }

    /// Directional derivative `V(g) = Σ V_i ∂_i g` of a function.
    pub fn apply(&self, g: &Polynomial<C>) -> Polynomial<C> {
        let mut acc = Polynomial::zero(self.dim());
        for (i, vi) in self.components.iter().enumerate() {
            if vi.is_zero() {
                continue;
            }
            acc = &acc + &(vi * &g.derivative(i));
        }
        acc
    }

    /// Multiplies every component by the function `g`.
    pub fn mul_fn(&self, g: &Polynomial<C>) -> Self {
        Self { components: self.components.iter().map(|c| c * g).collect() }
    }

    pub fn scale(&self, c: &C) -> Self {
        Self { components: self.components.iter().map(|p| p.scale(c)).collect() }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_dims(self, other)?;
        Ok(Self { components: self.components.iter().zip(&other.components).map(|(a, b)| a + b).collect() })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_dims(self, other)?;
        Ok(Self { components: self.components.iter().zip(&other.components).map(|(a, b)| a - b).collect() })
    }

    /// Re-expands every component around `shift` (see [`Polynomial::translate`]).
    pub fn translate(&self, shift: &[C]) -> Self {
        Self { components: self.components.iter().map(|c| c.translate(shift)).collect() }
    }

    pub fn to_f64(&self) -> PolyVectorField<f64> {
        PolyVectorField { components: self.components.iter().map(Polynomial::to_f64).collect() }
    }

    pub fn map_coeffs<D: Coeff>(&self, f: impl Fn(&C) -> D + Copy) -> PolyVectorField<D> {
        PolyVectorField { components: self.components.iter().map(|c| c.map_coeffs(f)).collect() }
    }

    /// Canonical text of each component.
    pub fn to_texts(&self) -> Vec<String> {
        self.components.iter().map(Polynomial::to_text).collect()
    }
}

impl PolyVectorField<f64> {
    /// Exact conversion of double coefficients to rationals.
    pub fn to_exact(&self) -> PolyVectorField<Rational> {
        self.map_coeffs(|c| Rational::from_f64(*c).expect("finite coefficient"))
    }
}

impl<C: Coeff> fmt::Display for PolyVectorField<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.to_texts().join(", "))
    }
}

fn check_dims<C: Coeff>(v: &PolyVectorField<C>, w: &PolyVectorField<C>) -> Result<()> {
    if v.dim() != w.dim() {
        return Err(Error::Dimension(format!("fields on R^{} and R^{}", v.dim(), w.dim())));
    }
    Ok(())
}

/// Parses one expression per component; the component count fixes `n`.
pub fn parse_polynomial_field<S: AsRef<str>>(expressions: &[S], n: usize) -> Result<PolyVectorField<Rational>> {
    if expressions.len() != n {
        return Err(Error::Dimension(format!("{} components given for a field on R^{n}", expressions.len())));
    }
    let components = expressions.iter().map(|e| parse_polynomial(e.as_ref(), n)).collect::<Result<Vec<_>>>()?;
    PolyVectorField::new(components)
}

/// The Lie bracket `[V, W] = (DW)V − (DV)W`.
pub fn lie_bracket<C: Coeff>(v: &PolyVectorField<C>, w: &PolyVectorField<C>) -> Result<PolyVectorField<C>> {
    check_dims(v, w)?;
    let components = (0..v.dim()).map(|i| &v.apply(w.component(i)) - &w.apply(v.component(i))).collect();
    Ok(PolyVectorField { components })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(e: &[&str]) -> PolyVectorField<Rational> {
        parse_polynomial_field(e, e.len()).unwrap()
    }

    #[test]
    fn heisenberg_bracket_is_vertical() {
        let x = field(&["1", "0", "-1/2*x2"]);
        let y = field(&["0", "1", "1/2*x1"]);
        assert_eq!(lie_bracket(&x, &y).unwrap(), field(&["0", "0", "1"]));
        assert!(lie_bracket(&x, &x).unwrap().is_zero());
    }

    #[test]
    fn arity_is_checked() {
        assert!(matches!(parse_polynomial_field(&["x1^2*x2 - 1/2"], 2), Err(Error::Dimension(_))));
        let a = field(&["1", "0"]);
        let b = field(&["1", "0", "0"]);
        assert!(lie_bracket(&a, &b).is_err());
    }

    #[test]
    fn zero_field_parses() {
        assert!(field(&["0", "0", "0"]).is_zero());
    }
}
