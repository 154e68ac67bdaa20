//! Sparse multivariate polynomials over exact rationals or `f64`.
//!
//! A [`Polynomial`] stores a normalized map from exponent multi-indices to
//! non-zero coefficients. The coefficient field is abstracted by [`Coeff`] so
//! that the same code computes exact Lie brackets (with [`Rational`]) and fast
//! evaluations along numerical flows (with `f64`).

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Arbitrary precision rational number used for exact arithmetic.
pub type Rational = BigRational;

/// Coefficient field of a polynomial.
pub trait Coeff:
    Clone
    + fmt::Debug
    + PartialEq
    + Zero
    + One
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Send
    + Sync
    + 'static
{
    /// `num / den` in this field.
    fn from_ratio(num: i64, den: i64) -> Self;
    /// Exact conversion from a double (every finite double is a dyadic rational).
    fn from_f64(x: f64) -> Option<Self>;
    fn to_f64(&self) -> f64;
    /// Rational coefficients print as `p/q`, doubles with their shortest
    /// round-trip representation.
    fn write_abs(&self, f: &mut String);
    fn is_negative(&self) -> bool;
    fn magnitude(&self) -> Self {
        if self.is_negative() {
            -self.clone()
        } else {
            self.clone()
        }
    }
}

impl Coeff for f64 {
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn from_f64(x: f64) -> Option<Self> {
        x.is_finite().then_some(x)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn write_abs(&self, f: &mut String) {
        let a = f64::abs(*self);
        if a.fract() == 0.0 && a < 1e15 {
            f.push_str(&format!("{}", a as i64));
        } else {
            f.push_str(&format!("{a:?}"));
        }
    }

    fn is_negative(&self) -> bool {
        *self < 0.0
    }
}

impl Coeff for Rational {
    fn from_ratio(num: i64, den: i64) -> Self {
        Rational::new(BigInt::from(num), BigInt::from(den))
    }

    fn from_f64(x: f64) -> Option<Self> {
        Rational::from_float(x)
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn write_abs(&self, f: &mut String) {
        let a = Signed::abs(self);
        if a.is_integer() {
            f.push_str(&a.numer().to_string());
        } else {
            f.push_str(&format!("{}/{}", a.numer(), a.denom()));
        }
    }

    fn is_negative(&self) -> bool {
        Signed::is_negative(self)
    }
}

/// Exponent multi-index of a monomial.
pub type Monomial = Vec<u32>;

/// Sparse polynomial in `nvars` variables `x1..xn`.
#[derive(Clone, PartialEq, Debug)]
pub struct Polynomial<C: Coeff = f64> {
    nvars: usize,
    terms: BTreeMap<Monomial, C>,
}

impl<C: Coeff> Polynomial<C> {
    pub fn zero(nvars: usize) -> Self {
        Self { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: C) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    /// The coordinate function `x_{i+1}` (zero-based `i`).
    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Self::monomial(e, C::one())
    }

    pub fn monomial(exponents: Monomial, c: C) -> Self {
        let mut p = Self::zero(exponents.len());
        p.add_term(exponents, c);
        p
    }

    /// Builds a polynomial from a list of terms, merging duplicates and
    /// dropping zeros.
    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Monomial, C)>) -> Self {
        let mut p = Self::zero(nvars);
        for (e, c) in terms {
            assert_eq!(e.len(), nvars, "exponent length must equal nvars");
            p.add_term(e, c);
        }
        p
    }

    fn add_term(&mut self, e: Monomial, c: C) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&e) {
            Some(v) => {
                let s = v.clone() + c;
                if s.is_zero() {
                    self.terms.remove(&e);
                } else {
                    *v = s;
                }
            }
            None => {
                self.terms.insert(e, c);
            }
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &C)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Total degree; zero polynomial has degree 0.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum::<u32>()).max().unwrap_or(0)
    }

    pub fn coeff(&self, e: &[u32]) -> C {
        self.terms.get(e).cloned().unwrap_or_else(C::zero)
    }

    pub fn scale(&self, c: &C) -> Self {
        if c.is_zero() {
            return Self::zero(self.nvars);
        }
        Self {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(e, v)| (e.clone(), v.clone() * c.clone()))
                .filter(|(_, v)| !v.is_zero())
                .collect(),
        }
    }

    /// Partial derivative with respect to `x_{i+1}`.
    pub fn derivative(&self, i: usize) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[i] == 0 {
                continue;
            }
            let mut e2 = e.clone();
            e2[i] -= 1;
            out.add_term(e2, c.clone() * C::from_ratio(e[i] as i64, 1));
        }
        out
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::constant(self.nvars, C::one());
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// Evaluates at a point given in the coefficient field.
    pub fn eval(&self, x: &[C]) -> C {
        assert_eq!(x.len(), self.nvars);
        let mut acc = C::zero();
        for (e, c) in &self.terms {
            let mut m = c.clone();
            for (xi, &k) in x.iter().zip(e) {
                for _ in 0..k {
                    m = m * xi.clone();
                }
            }
            acc = acc + m;
        }
        acc
    }

    /// Evaluates in double precision regardless of the coefficient field.
    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.nvars);
        self.terms
            .iter()
            .map(|(e, c)| c.to_f64() * x.iter().zip(e).map(|(xi, &k)| xi.powi(k as i32)).product::<f64>())
            .sum()
    }

    /// Substitutes `x_i -> x_i + shift_i`, i.e. re-expands around `shift`.
    pub fn translate(&self, shift: &[C]) -> Self {
        assert_eq!(shift.len(), self.nvars);
        let lin: Vec<Self> = (0..self.nvars)
            .map(|i| {
                let mut p = Self::var(self.nvars, i);
                p.add_term(vec![0; self.nvars], shift[i].clone());
                p
            })
            .collect();
        self.compose(&lin)
    }

    /// Substitutes `x_i -> subs[i]`.
    pub fn compose(&self, subs: &[Self]) -> Self {
        assert_eq!(subs.len(), self.nvars);
        let nv = subs.first().map(|s| s.nvars).unwrap_or(self.nvars);
        let mut out = Polynomial::zero(nv);
        let mut cache: BTreeMap<(usize, u32), Self> = BTreeMap::new();
        for (e, c) in &self.terms {
            let mut m = Polynomial::constant(nv, c.clone());
            for (i, &k) in e.iter().enumerate() {
                if k == 0 {
                    continue;
                }
                let pw = cache.entry((i, k)).or_insert_with(|| subs[i].pow(k)).clone();
                m = &m * &pw;
            }
            out = &out + &m;
        }
        out
    }

    /// The same polynomial viewed in `nvars` variables, with `x_i` renamed to
    /// `x_{i+offset}`.
    pub fn embed(&self, nvars: usize, offset: usize) -> Self {
        assert!(offset + self.nvars <= nvars);
        Self {
            nvars,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| {
                    let mut e2 = vec![0; nvars];
                    e2[offset..offset + self.nvars].copy_from_slice(e);
                    (e2, c.clone())
                })
                .collect(),
        }
    }

    /// Drops every term of total degree above `order`.
    pub fn truncate(&self, order: u32) -> Self {
        Self {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| e.iter().sum::<u32>() <= order)
                .map(|(e, c)| (e.clone(), c.clone()))
                .collect(),
        }
    }

    /// Product truncated at total degree `order`.
    pub fn mul_truncated(&self, other: &Self, order: u32) -> Self {
        assert_eq!(self.nvars, other.nvars);
        let mut out = Self::zero(self.nvars);
        for (e1, c1) in &self.terms {
            let d1: u32 = e1.iter().sum();
            if d1 > order {
                continue;
            }
            for (e2, c2) in &other.terms {
                if d1 + e2.iter().sum::<u32>() > order {
                    continue;
                }
                let e: Monomial = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_term(e, c1.clone() * c2.clone());
            }
        }
        out
    }

    pub fn map_coeffs<D: Coeff>(&self, f: impl Fn(&C) -> D) -> Polynomial<D> {
        Polynomial::from_terms(self.nvars, self.terms.iter().map(|(e, c)| (e.clone(), f(c))))
    }

    pub fn to_f64(&self) -> Polynomial<f64> {
        self.map_coeffs(|c| c.to_f64())
    }

    /// Canonical text form, parseable by [`parse_polynomial`].
    pub fn to_text(&self) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut s = String::new();
        // Highest total degree first, then lexicographic on exponents.
        let mut keys: Vec<&Monomial> = self.terms.keys().collect();
        keys.sort_by(|a, b| {
            let da: u32 = a.iter().sum();
            let db: u32 = b.iter().sum();
            db.cmp(&da).then_with(|| b.cmp(a))
        });
        for (idx, e) in keys.into_iter().enumerate() {
            let c = &self.terms[e];
            if idx == 0 {
                if c.is_negative() {
                    s.push('-');
                }
            } else if c.is_negative() {
                s.push_str(" - ");
            } else {
                s.push_str(" + ");
            }
            let is_const = e.iter().all(|&k| k == 0);
            let abs = c.magnitude();
            let unit = abs.is_one();
            if is_const || !unit {
                abs.write_abs(&mut s);
            }
            let mut first_factor = is_const || !unit;
            for (i, &k) in e.iter().enumerate() {
                if k == 0 {
                    continue;
                }
                if first_factor {
                    s.push('*');
                }
                first_factor = true;
                s.push_str(&format!("x{}", i + 1));
                if k > 1 {
                    s.push_str(&format!("^{k}"));
                }
            }
        }
        s
    }
}

impl<C: Coeff> fmt::Display for Polynomial<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl<C: Coeff> Add for &Polynomial<C> {
    type Output = Polynomial<C>;
    fn add(self, rhs: Self) -> Polynomial<C> {
        assert_eq!(self.nvars, rhs.nvars);
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }
}

impl<C: Coeff> Sub for &Polynomial<C> {
    type Output = Polynomial<C>;
    fn sub(self, rhs: Self) -> Polynomial<C> {
        assert_eq!(self.nvars, rhs.nvars);
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), -c.clone());
        }
        out
    }
}

impl<C: Coeff> Mul for &Polynomial<C> {
    type Output = Polynomial<C>;
    fn mul(self, rhs: Self) -> Polynomial<C> {
        assert_eq!(self.nvars, rhs.nvars);
        let mut out = Polynomial::zero(self.nvars);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &rhs.terms {
                let e: Monomial = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_term(e, c1.clone() * c2.clone());
            }
        }
        out
    }
}

impl<C: Coeff> Neg for &Polynomial<C> {
    type Output = Polynomial<C>;
    fn neg(self) -> Polynomial<C> {
        self.scale(&-C::one())
    }
}

// ---------------------------------------------------------------------------
// Parsing

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse { position: self.pos, message: msg.into() }
    }

    fn digits(&mut self) -> &'a str {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("")
    }

    fn uint(&mut self) -> Result<u64> {
        self.skip_ws();
        let d = self.digits();
        if d.is_empty() {
            return Err(self.err("expected unsigned integer"));
        }
        d.parse().map_err(|_| self.err("integer out of range"))
    }

    /// `p`, `p/q` or a decimal literal with optional exponent.
    fn number(&mut self) -> Result<Rational> {
        self.skip_ws();
        let start = self.pos;
        let int_part = self.digits();
        let mut frac_part = "";
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            frac_part = self.digits();
        }
        if int_part.is_empty() && frac_part.is_empty() {
            self.pos = start;
            return Err(self.err("expected number"));
        }
        let mut exp: i64 = 0;
        if matches!(self.src.get(self.pos), Some(b'e') | Some(b'E')) {
            self.pos += 1;
            let mut sign = 1;
            match self.src.get(self.pos) {
                Some(b'-') => {
                    sign = -1;
                    self.pos += 1;
                }
                Some(b'+') => self.pos += 1,
                _ => {}
            }
            let d = self.digits();
            if d.is_empty() {
                return Err(self.err("malformed exponent"));
            }
            exp = sign * d.parse::<i64>().map_err(|_| self.err("exponent out of range"))?;
        }
        let digits = format!("{int_part}{frac_part}");
        let mantissa: BigInt = digits.parse().map_err(|_| self.err("malformed number"))?;
        let scale = exp - frac_part.len() as i64;
        let ten = BigInt::from(10);
        let mut value = Rational::from_integer(mantissa);
        if scale >= 0 {
            value *= Rational::from_integer(num_traits::pow(ten, scale as usize));
        } else {
            value /= Rational::from_integer(num_traits::pow(ten, (-scale) as usize));
        }
        // Rational form p/q only when no decimal point or exponent was used.
        self.skip_ws();
        if self.src.get(self.pos) == Some(&b'/') && frac_part.is_empty() && exp == 0 {
            let save = self.pos;
            self.pos += 1;
            self.skip_ws();
            if self.src.get(self.pos).is_some_and(|c| c.is_ascii_digit()) {
                let q = self.uint()?;
                if q == 0 {
                    return Err(self.err("division by zero in rational literal"));
                }
                value /= Rational::from_integer(BigInt::from(q));
            } else {
                self.pos = save;
            }
        }
        Ok(value)
    }

    fn factor(&mut self, nvars: usize) -> Result<Polynomial<Rational>> {
        match self.peek() {
            Some(b'x') => {
                let at = self.pos;
                self.pos += 1;
                let idx = self.digits();
                if idx.is_empty() {
                    return Err(self.err("expected variable index after 'x'"));
                }
                let i: usize = idx.parse().map_err(|_| self.err("variable index out of range"))?;
                if i == 0 || i > nvars {
                    return Err(Error::Parse {
                        position: at,
                        message: format!("unknown variable x{i} (expected x1..x{nvars})"),
                    });
                }
                let mut e = vec![0u32; nvars];
                e[i - 1] = 1;
                if self.peek() == Some(b'^') {
                    self.pos += 1;
                    self.skip_ws();
                    if self.src.get(self.pos) == Some(&b'-') {
                        return Err(self.err("negative exponent"));
                    }
                    let k = self.uint()?;
                    e[i - 1] = u32::try_from(k).map_err(|_| self.err("exponent too large"))?;
                }
                Ok(Polynomial::monomial(e, Rational::one()))
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let v = self.number()?;
                if self.peek() == Some(b'^') {
                    return Err(self.err("exponents are only allowed on variables"));
                }
                Ok(Polynomial::constant(nvars, v))
            }
            Some(_) => Err(self.err("unexpected character")),
            None => Err(self.err("unexpected end of input")),
        }
    }

    fn term(&mut self, nvars: usize) -> Result<Polynomial<Rational>> {
        let mut acc = self.factor(nvars)?;
        while self.peek() == Some(b'*') {
            self.pos += 1;
            let f = self.factor(nvars)?;
            acc = &acc * &f;
        }
        Ok(acc)
    }

    fn expr(&mut self, nvars: usize) -> Result<Polynomial<Rational>> {
        let mut sign = Rational::one();
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                sign = -sign;
            }
            Some(b'+') => self.pos += 1,
            _ => {}
        }
        let mut acc = self.term(nvars)?.scale(&sign);
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    acc = &acc + &self.term(nvars)?;
                }
                Some(b'-') => {
                    self.pos += 1;
                    acc = &acc - &self.term(nvars)?;
                }
                None => return Ok(acc),
                Some(_) => return Err(self.err("expected '+', '-' or end of expression")),
            }
        }
    }
}

/// Parses one polynomial expression in the variables `x1..x{nvars}`.
///
/// Grammar: `expr := ["+"|"-"] term (("+"|"-") term)*`, `term := factor ("*" factor)*`,
/// `factor := "x" uint ["^" uint] | rational | decimal`. Whitespace is ignored.
pub fn parse_polynomial(src: &str, nvars: usize) -> Result<Polynomial<Rational>> {
    let mut lx = Lexer { src: src.as_bytes(), pos: 0 };
    if lx.peek().is_none() {
        return Err(lx.err("empty expression"));
    }
    lx.expr(nvars)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    #[test]
    fn parse_heisenberg_component() {
        let p = parse_polynomial("-1/2*x2", 3).unwrap();
        assert_eq!(p.coeff(&[0, 1, 0]), q(-1, 2));
        assert_eq!(p.num_terms(), 1);
    }

    #[test]
    fn parse_decimal_and_powers() {
        let p = parse_polynomial(" 0.25 * x1^2*x2 - 3 + x1*x1 ", 2).unwrap();
        assert_eq!(p.coeff(&[2, 1]), q(1, 4));
        assert_eq!(p.coeff(&[2, 0]), q(1, 1));
        assert_eq!(p.coeff(&[0, 0]), q(-3, 1));
        let p = parse_polynomial("1.5e-1*x1", 1).unwrap();
        assert_eq!(p.coeff(&[1]), q(3, 20));
    }

    #[test]
    fn zeros_are_dropped() {
        let p = parse_polynomial("x1 - x1 + 0*x2", 2).unwrap();
        assert!(p.is_zero());
        assert_eq!(p.to_text(), "0");
    }

    #[test]
    fn parse_errors_carry_position() {
        match parse_polynomial("x1 + x4", 3) {
            Err(Error::Parse { position, message }) => {
                assert_eq!(position, 5);
                assert!(message.contains("x4"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_polynomial("x1^-2", 2), Err(Error::Parse { .. })));
        assert!(matches!(parse_polynomial("x1 +", 2), Err(Error::Parse { .. })));
        assert!(matches!(parse_polynomial("2 ** x1", 2), Err(Error::Parse { .. })));
        assert!(matches!(parse_polynomial("", 2), Err(Error::Parse { .. })));
        assert!(matches!(parse_polynomial("1/0", 2), Err(Error::Parse { .. })));
    }

    #[test]
    fn printer_output_is_canonical() {
        let p = parse_polynomial("1/2*x1 - x2^2*x3 + 7 - x1*x2", 3).unwrap();
        assert_eq!(p.to_text(), "-x2^2*x3 - x1*x2 + 1/2*x1 + 7");
    }

    #[test]
    fn derivative_and_translate() {
        let p = parse_polynomial("x1^3*x2 + 2*x2", 2).unwrap();
        assert_eq!(p.derivative(0), parse_polynomial("3*x1^2*x2", 2).unwrap());
        let t = p.translate(&[q(1, 1), q(0, 1)]);
        // (x1+1)^3 x2 + 2 x2
        assert_eq!(t, parse_polynomial("x1^3*x2 + 3*x1^2*x2 + 3*x1*x2 + 3*x2", 2).unwrap());
    }

    #[test]
    fn float_printing_round_trips() {
        let p = parse_polynomial("0.1*x1 - 3*x2", 2).unwrap().to_f64();
        let back = parse_polynomial(&p.to_text(), 2).unwrap().to_f64();
        assert_eq!(p, back);
    }
}
