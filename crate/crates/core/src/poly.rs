//! Sparse multivariate polynomials over an exact field, in named jet
//! coordinates. The coordinate `x` (when it is the first variable) may carry
//! negative exponents; every other variable is an ordinary polynomial
//! variable.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use thiserror::Error;

use crate::scalar::{parse_scalar, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    #[error("polynomials live on different coordinate tables")]
    VarTableMismatch,
    #[error("negative exponent on `{0}`; only x may carry negative powers")]
    NegativeExponent(String),
    #[error("cannot substitute zero into a pole of `{0}`")]
    PoleSubstitution(String),
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
}

/// Ordered coordinate names. Index 0 is `x` whenever `x` is present.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VarTable {
    names: Vec<String>,
}

impl VarTable {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Arc<Self>, PolyError> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(PolyError::DuplicateVariable(n.clone()));
            }
            if n == "x" && i != 0 {
                return Err(PolyError::Parse {
                    pos: 0,
                    msg: "x must be the first coordinate".into(),
                });
            }
        }
        Ok(Arc::new(VarTable { names }))
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Whether variable `i` admits negative exponents.
    pub fn is_laurent(&self, i: usize) -> bool {
        i == 0 && self.names.first().is_some_and(|n| n == "x")
    }
}

fn same_table(a: &Arc<VarTable>, b: &Arc<VarTable>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

/// Exponent vector, ordered graded-lexicographically.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Monomial(pub Vec<i32>);

impl Monomial {
    pub fn one(n: usize) -> Self {
        Monomial(vec![0; n])
    }

    pub fn degree(&self) -> i32 {
        self.0.iter().sum()
    }

    pub fn exps(&self) -> &[i32] {
        &self.0
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone)]
pub struct Poly<T> {
    vars: Arc<VarTable>,
    terms: BTreeMap<Monomial, T>,
}

impl<T: Scalar> PartialEq for Poly<T> {
    fn eq(&self, other: &Self) -> bool {
        same_table(&self.vars, &other.vars) && self.terms == other.terms
    }
}

impl<T: Scalar> Eq for Poly<T> {}

impl<T: Scalar> Poly<T> {
    pub fn zero(vars: &Arc<VarTable>) -> Self {
        Poly {
            vars: vars.clone(),
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(vars: &Arc<VarTable>, c: T) -> Self {
        Self::monomial(vars, Monomial::one(vars.len()), c)
    }

    pub fn one(vars: &Arc<VarTable>) -> Self {
        Self::constant(vars, T::one())
    }

    pub fn var(vars: &Arc<VarTable>, i: usize) -> Self {
        let mut e = vec![0; vars.len()];
        e[i] = 1;
        Self::monomial(vars, Monomial(e), T::one())
    }

    pub fn var_named(vars: &Arc<VarTable>, name: &str) -> Result<Self, PolyError> {
        let i = vars
            .index_of(name)
            .ok_or_else(|| PolyError::UnknownVariable(name.to_string()))?;
        Ok(Self::var(vars, i))
    }

    pub fn monomial(vars: &Arc<VarTable>, m: Monomial, c: T) -> Self {
        assert_eq!(m.0.len(), vars.len());
        for (i, &e) in m.0.iter().enumerate() {
            assert!(e >= 0 || vars.is_laurent(i), "negative exponent on {}", vars.name(i));
        }
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Poly {
            vars: vars.clone(),
            terms,
        }
    }

    pub fn from_terms(
        vars: &Arc<VarTable>,
        terms: impl IntoIterator<Item = (Monomial, T)>,
    ) -> Result<Self, PolyError> {
        let mut p = Poly::zero(vars);
        for (m, c) in terms {
            for (i, &e) in m.0.iter().enumerate() {
                if e < 0 && !vars.is_laurent(i) {
                    return Err(PolyError::NegativeExponent(vars.name(i).to_string()));
                }
            }
            p.add_term(m, c);
        }
        Ok(p)
    }

    pub fn vars(&self) -> &Arc<VarTable> {
        &self.vars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &T)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Monomial) -> T {
        self.terms.get(m).cloned().unwrap_or_else(T::zero)
    }

    pub fn constant_term(&self) -> T {
        self.coeff(&Monomial::one(self.vars.len()))
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|m| m.0.iter().all(|&e| e == 0))
    }

    /// Largest term in graded-lex order.
    pub fn leading_term(&self) -> Option<(&Monomial, &T)> {
        self.terms.iter().next_back()
    }

    pub fn total_degree(&self) -> Option<i32> {
        self.terms.keys().map(Monomial::degree).max()
    }

    pub fn depends_on(&self, i: usize) -> bool {
        self.terms.keys().any(|m| m.0[i] != 0)
    }

    pub fn max_exponent(&self, i: usize) -> Option<i32> {
        self.terms.keys().map(|m| m.0[i]).max()
    }

    pub fn has_negative_exponents(&self) -> bool {
        self.terms.keys().any(|m| m.0.iter().any(|&e| e < 0))
    }

    pub(crate) fn add_term(&mut self, m: Monomial, c: T) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(v) => {
                *v += c;
                if v.is_zero() {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    pub fn checked_add(&self, other: &Poly<T>) -> Result<Poly<T>, PolyError> {
        if !same_table(&self.vars, &other.vars) {
            return Err(PolyError::VarTableMismatch);
        }
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn checked_mul(&self, other: &Poly<T>) -> Result<Poly<T>, PolyError> {
        if !same_table(&self.vars, &other.vars) {
            return Err(PolyError::VarTableMismatch);
        }
        let mut out = Poly::zero(&self.vars);
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.add_term(m1.mul(m2), c1.clone() * c2);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, s: &T) -> Poly<T> {
        if s.is_zero() {
            return Poly::zero(&self.vars);
        }
        Poly {
            vars: self.vars.clone(),
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), c.clone() * s))
                .collect(),
        }
    }

    /// `self += s * other`, the workhorse of linear combinations.
    pub fn add_scaled(&mut self, other: &Poly<T>, s: &T) {
        assert!(same_table(&self.vars, &other.vars), "vartable mismatch");
        if s.is_zero() {
            return;
        }
        for (m, c) in &other.terms {
            self.add_term(m.clone(), c.clone() * s);
        }
    }

    pub fn mul_monomial(&self, m: &Monomial, s: &T) -> Poly<T> {
        let mut out = Poly::zero(&self.vars);
        for (m1, c1) in &self.terms {
            out.add_term(m1.mul(m), c1.clone() * s);
        }
        out
    }

    pub fn pow(&self, n: u32) -> Poly<T> {
        let mut out = Poly::one(&self.vars);
        for _ in 0..n {
            out = &out * self;
        }
        out
    }

    /// Formal partial derivative with respect to variable `i`.
    pub fn partial(&self, i: usize) -> Poly<T> {
        let mut out = Poly::zero(&self.vars);
        for (m, c) in &self.terms {
            let e = m.0[i];
            if e == 0 {
                continue;
            }
            let mut dm = m.clone();
            dm.0[i] -= 1;
            out.add_term(dm, c.clone() * T::from_int(e as i64));
        }
        out
    }

    pub fn partial_named(&self, name: &str) -> Result<Poly<T>, PolyError> {
        let i = self
            .vars
            .index_of(name)
            .ok_or_else(|| PolyError::UnknownVariable(name.to_string()))?;
        Ok(self.partial(i))
    }

    /// Sets variable `i` to zero; fails if `i` carries a negative power.
    pub fn substitute_zero(&self, i: usize) -> Result<Poly<T>, PolyError> {
        let mut out = Poly::zero(&self.vars);
        for (m, c) in &self.terms {
            match m.0[i].cmp(&0) {
                Ordering::Less => {
                    return Err(PolyError::PoleSubstitution(self.vars.name(i).to_string()))
                }
                Ordering::Equal => out.add_term(m.clone(), c.clone()),
                Ordering::Greater => {}
            }
        }
        Ok(out)
    }

    /// Re-expresses the polynomial over another table, matching names.
    pub fn embed(&self, target: &Arc<VarTable>) -> Result<Poly<T>, PolyError> {
        if same_table(&self.vars, target) {
            return Ok(self.clone());
        }
        let map: Vec<Option<usize>> = self
            .vars
            .names()
            .iter()
            .map(|n| target.index_of(n))
            .collect();
        let mut out = Poly::zero(target);
        for (m, c) in &self.terms {
            let mut e = vec![0; target.len()];
            for (i, &ex) in m.0.iter().enumerate() {
                if ex == 0 {
                    continue;
                }
                let j = map[i]
                    .ok_or_else(|| PolyError::UnknownVariable(self.vars.name(i).to_string()))?;
                if ex < 0 && !target.is_laurent(j) {
                    return Err(PolyError::NegativeExponent(target.name(j).to_string()));
                }
                e[j] = ex;
            }
            out.add_term(Monomial(e), c.clone());
        }
        Ok(out)
    }

    /// Rational content: gcd of numerators over lcm of denominators.
    pub fn content(&self) -> T {
        self.terms
            .values()
            .fold(T::zero(), |acc, c| acc.rational_gcd(c))
    }

    /// Largest monomial dividing every term (componentwise minimum).
    pub fn monomial_content(&self) -> Monomial {
        let n = self.vars.len();
        let mut it = self.terms.keys();
        let Some(first) = it.next() else {
            return Monomial::one(n);
        };
        let mut e = first.0.clone();
        for m in it {
            for (a, b) in e.iter_mut().zip(&m.0) {
                *a = (*a).min(*b);
            }
        }
        Monomial(e)
    }

    /// Divides out rational content and makes the leading coefficient positive.
    pub fn primitive_part(&self) -> Poly<T> {
        if self.is_zero() {
            return self.clone();
        }
        let mut c = self.content();
        if self.leading_term().is_some_and(|(_, lc)| lc.is_negative()) {
            c = -c;
        }
        self.scale(&(T::one() / c))
    }

    /// Exact division; `None` when `d` does not divide `self`.
    /// Only defined for polynomials without negative exponents.
    pub fn div_exact(&self, d: &Poly<T>) -> Option<Poly<T>> {
        if d.is_zero() || self.has_negative_exponents() || d.has_negative_exponents() {
            return None;
        }
        let (ld, lc) = d.leading_term().map(|(m, c)| (m.clone(), c.clone()))?;
        let mut rem = self.clone();
        let mut quot = Poly::zero(&self.vars);
        while let Some((lm, c)) = rem.leading_term().map(|(m, c)| (m.clone(), c.clone())) {
            let diff: Vec<i32> = lm.0.iter().zip(&ld.0).map(|(a, b)| a - b).collect();
            if diff.iter().any(|&e| e < 0) {
                return None;
            }
            let q = Monomial(diff);
            let s = c / &lc;
            rem.add_scaled(&d.mul_monomial(&q, &T::one()), &-s.clone());
            quot.add_term(q, s);
        }
        Some(quot)
    }

    /// Evaluates every variable at the given values (`x` must be nonzero
    /// when it carries negative powers).
    pub fn evaluate(&self, point: &[T]) -> T {
        let mut acc = T::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (i, &e) in m.0.iter().enumerate() {
                if e > 0 {
                    for _ in 0..e {
                        t *= &point[i];
                    }
                } else if e < 0 {
                    for _ in 0..(-e) {
                        t /= &point[i];
                    }
                }
            }
            acc += t;
        }
        acc
    }

    pub fn parse(text: &str, vars: &Arc<VarTable>) -> Result<Poly<T>, PolyError> {
        Parser {
            src: text.as_bytes(),
            pos: 0,
            vars,
        }
        .parse_all()
    }
}

impl<'a, T: Scalar> Add for &'a Poly<T> {
    type Output = Poly<T>;
    /// Panics if the operands use different coordinate tables.
    fn add(self, rhs: &'a Poly<T>) -> Poly<T> {
        self.checked_add(rhs).expect("vartable mismatch")
    }
}

impl<'a, T: Scalar> Sub for &'a Poly<T> {
    type Output = Poly<T>;
    fn sub(self, rhs: &'a Poly<T>) -> Poly<T> {
        let mut out = self.clone();
        out.add_scaled(rhs, &-T::one());
        out
    }
}

impl<'a, T: Scalar> Mul for &'a Poly<T> {
    type Output = Poly<T>;
    fn mul(self, rhs: &'a Poly<T>) -> Poly<T> {
        self.checked_mul(rhs).expect("vartable mismatch")
    }
}

impl<T: Scalar> Neg for &Poly<T> {
    type Output = Poly<T>;
    fn neg(self) -> Poly<T> {
        self.scale(&-T::one())
    }
}

impl<T: Scalar> Add for Poly<T> {
    type Output = Poly<T>;
    fn add(self, rhs: Poly<T>) -> Poly<T> {
        &self + &rhs
    }
}

impl<T: Scalar> Sub for Poly<T> {
    type Output = Poly<T>;
    fn sub(self, rhs: Poly<T>) -> Poly<T> {
        &self - &rhs
    }
}

impl<T: Scalar> Mul for Poly<T> {
    type Output = Poly<T>;
    fn mul(self, rhs: Poly<T>) -> Poly<T> {
        &self * &rhs
    }
}

fn write_monomial(f: &mut fmt::Formatter<'_>, vars: &VarTable, m: &Monomial) -> fmt::Result {
    let mut first = true;
    for (i, &e) in m.0.iter().enumerate() {
        if e == 0 {
            continue;
        }
        if !first {
            write!(f, "*")?;
        }
        first = false;
        write!(f, "{}", vars.name(i))?;
        if e != 1 {
            write!(f, "^{e}")?;
        }
    }
    Ok(())
}

impl<T: Scalar> fmt::Display for Poly<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.terms.iter().rev().enumerate() {
            let negative = c.is_negative();
            let mag = c.abs();
            match (k, negative) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let is_unit_monomial = m.0.iter().all(|&e| e == 0);
            if is_unit_monomial {
                write!(f, "{mag}")?;
            } else if mag.is_one() {
                write_monomial(f, &self.vars, m)?;
            } else {
                write!(f, "{mag}*")?;
                write_monomial(f, &self.vars, m)?;
            }
        }
        Ok(())
    }
}

impl<T: Scalar> fmt::Debug for Poly<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Poly({self})")
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    vars: &'a Arc<VarTable>,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T, PolyError> {
        Err(PolyError::Parse {
            pos: self.pos,
            msg: msg.into(),
        })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn parse_all<T: Scalar>(mut self) -> Result<Poly<T>, PolyError> {
        let p = self.expr()?;
        match self.peek() {
            None => Ok(p),
            Some(c) if c.is_ascii_alphanumeric() || c == b'(' => {
                self.err("juxtaposition is not allowed; use `*`")
            }
            Some(c) => self.err(format!("unexpected `{}`", c as char)),
        }
    }

    fn expr<T: Scalar>(&mut self) -> Result<Poly<T>, PolyError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    let t = self.term()?;
                    acc = &acc + &t;
                }
                Some(b'-') => {
                    self.pos += 1;
                    let t = self.term()?;
                    acc = &acc - &t;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term<T: Scalar>(&mut self) -> Result<Poly<T>, PolyError> {
        let mut acc = self.unary()?;
        while self.peek() == Some(b'*') {
            self.pos += 1;
            let f = self.unary()?;
            acc = &acc * &f;
        }
        Ok(acc)
    }

    fn unary<T: Scalar>(&mut self) -> Result<Poly<T>, PolyError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            let p = self.unary()?;
            return Ok(-&p);
        }
        self.power()
    }

    fn power<T: Scalar>(&mut self) -> Result<Poly<T>, PolyError> {
        let (base, var) = self.atom()?;
        if self.peek() != Some(b'^') {
            return Ok(base);
        }
        self.pos += 1;
        self.skip_ws();
        let negative = if self.src.get(self.pos) == Some(&b'-') {
            self.pos += 1;
            true
        } else {
            false
        };
        let digits = self.digits();
        if digits.is_empty() {
            return self.err("expected integer exponent");
        }
        let e: i32 = match digits.parse() {
            Ok(e) => e,
            Err(_) => return self.err("exponent too large"),
        };
        if negative {
            match var {
                Some(i) if self.vars.is_laurent(i) => {
                    let mut m = vec![0; self.vars.len()];
                    m[i] = -e;
                    Ok(Poly::monomial(self.vars, Monomial(m), T::one()))
                }
                Some(i) => Err(PolyError::NegativeExponent(self.vars.name(i).to_string())),
                None => self.err("negative exponents are only allowed on x"),
            }
        } else {
            Ok(base.pow(e as u32))
        }
    }

    fn digits(&mut self) -> String {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()
    }

    fn atom<T: Scalar>(&mut self) -> Result<(Poly<T>, Option<usize>), PolyError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let p = self.expr()?;
                if self.peek() != Some(b')') {
                    return self.err("expected `)`");
                }
                self.pos += 1;
                Ok((p, None))
            }
            Some(c) if c.is_ascii_digit() => {
                let mut text = self.digits();
                if self.src.get(self.pos) == Some(&b'/') {
                    self.pos += 1;
                    let d = self.digits();
                    if d.is_empty() {
                        return self.err("expected denominator");
                    }
                    text = format!("{text}/{d}");
                }
                match parse_scalar::<T>(&text) {
                    Some(v) => Ok((Poly::constant(self.vars, v), None)),
                    None => self.err(format!("invalid number `{text}`")),
                }
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphabetic() {
                    self.pos += 1;
                }
                self.digits();
                if self
                    .src
                    .get(self.pos)
                    .is_some_and(|b| b.is_ascii_alphabetic())
                {
                    return self.err("juxtaposition is not allowed; use `*`");
                }
                let name = String::from_utf8_lossy(&self.src[start..self.pos]).into_owned();
                let i = self
                    .vars
                    .index_of(&name)
                    .ok_or(PolyError::UnknownVariable(name))?;
                Ok((Poly::var(self.vars, i), Some(i)))
            }
            Some(c) => self.err(format!("unexpected `{}`", c as char)),
            None => self.err("unexpected end of input"),
        }
    }
}

/// Quotient of two polynomials. Equality is decided by cross-multiplication.
#[derive(Clone)]
pub struct RatFunc<T> {
    num: Poly<T>,
    den: Poly<T>,
}

impl<T: Scalar> fmt::Debug for RatFunc<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) / ({})", self.num, self.den)
    }
}

impl<T: Scalar> PartialEq for RatFunc<T> {
    fn eq(&self, other: &Self) -> bool {
        &self.num * &other.den == &other.num * &self.den
    }
}

impl<T: Scalar> RatFunc<T> {
    pub fn new(num: Poly<T>, den: Poly<T>) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        RatFunc { num, den }.normalized()
    }

    pub fn from_poly(p: Poly<T>) -> Self {
        let one = Poly::one(p.vars());
        RatFunc { num: p, den: one }
    }

    pub fn num(&self) -> &Poly<T> {
        &self.num
    }

    pub fn den(&self) -> &Poly<T> {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// Cheap simplification: cancels common monomial factors, exact
    /// polynomial division when the denominator divides the numerator, and
    /// scalar content. No general gcd is attempted.
    fn normalized(mut self) -> Self {
        if self.num.is_zero() {
            self.den = Poly::one(self.den.vars());
            return self;
        }
        let mn = self.num.monomial_content();
        let md = self.den.monomial_content();
        let common: Vec<i32> = mn.0.iter().zip(&md.0).map(|(a, b)| -(*a).min(*b)).collect();
        if common.iter().any(|&e| e != 0) {
            let m = Monomial(common);
            self.num = self.num.mul_monomial(&m, &T::one());
            self.den = self.den.mul_monomial(&m, &T::one());
        }
        if !self.den.is_constant() {
            if let Some(q) = self.num.div_exact(&self.den) {
                self.num = q;
                self.den = Poly::one(self.den.vars());
            }
        }
        let lc = self
            .den
            .leading_term()
            .map(|(_, c)| c.clone())
            .expect("nonzero denominator");
        let inv = T::one() / lc;
        self.num = self.num.scale(&inv);
        self.den = self.den.scale(&inv);
        self
    }

    pub fn add(&self, other: &Self) -> Self {
        if self.den == other.den {
            return RatFunc::new(&self.num + &other.num, self.den.clone());
        }
        RatFunc::new(
            &(&self.num * &other.den) + &(&other.num * &self.den),
            &self.den * &other.den,
        )
    }

    pub fn neg(&self) -> Self {
        RatFunc {
            num: -&self.num,
            den: self.den.clone(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        RatFunc::new(&self.num * &other.num, &self.den * &other.den)
    }

    /// Panics on division by the zero function.
    pub fn div(&self, other: &Self) -> Self {
        assert!(!other.is_zero(), "division by zero rational function");
        RatFunc::new(&self.num * &other.den, &self.den * &other.num)
    }
}

/// Kernel of a matrix of polynomials over the rational function field.
///
/// Every returned vector has polynomial entries, with scalar and monomial
/// content removed and a positive leading coefficient on its first nonzero
/// entry. `M v = 0` is re-verified symbolically before returning.
pub fn ratfunc_kernel<T: Scalar>(
    m: &[Vec<Poly<T>>],
    cols: usize,
    vars: &Arc<VarTable>,
) -> Result<Vec<Vec<Poly<T>>>, PolyError> {
    let (echelon, pivots) = ratfunc_rref(m, cols, vars)?;
    let mut is_pivot = vec![false; cols];
    for &p in &pivots {
        is_pivot[p] = true;
    }
    let mut out = Vec::new();
    for free in (0..cols).filter(|&c| !is_pivot[c]) {
        let mut v: Vec<RatFunc<T>> = (0..cols)
            .map(|_| RatFunc::from_poly(Poly::zero(vars)))
            .collect();
        v[free] = RatFunc::from_poly(Poly::one(vars));
        for (row, &p) in pivots.iter().enumerate() {
            v[p] = echelon[row][free].neg();
        }
        out.push(clear_denominators(&v));
    }
    for v in &out {
        for row in m {
            let mut acc = Poly::zero(vars);
            for (a, b) in row.iter().zip(v) {
                acc = &acc + &(a * b);
            }
            assert!(acc.is_zero(), "fraction-field kernel vector failed verification");
        }
    }
    Ok(out)
}

/// Rank over the rational function field.
pub fn ratfunc_rank<T: Scalar>(
    m: &[Vec<Poly<T>>],
    cols: usize,
    vars: &Arc<VarTable>,
) -> Result<usize, PolyError> {
    Ok(ratfunc_rref(m, cols, vars)?.1.len())
}

#[allow(clippy::type_complexity)]
fn ratfunc_rref<T: Scalar>(
    m: &[Vec<Poly<T>>],
    cols: usize,
    vars: &Arc<VarTable>,
) -> Result<(Vec<Vec<RatFunc<T>>>, Vec<usize>), PolyError> {
    let mut rows: Vec<Vec<RatFunc<T>>> = Vec::with_capacity(m.len());
    for row in m {
        if row.len() != cols {
            return Err(PolyError::VarTableMismatch);
        }
        let mut r = Vec::with_capacity(cols);
        for p in row {
            r.push(RatFunc::from_poly(p.embed(vars)?));
        }
        rows.push(r);
    }
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows.len() {
            break;
        }
        let best = (r..rows.len())
            .filter(|&i| !rows[i][c].is_zero())
            .min_by_key(|&i| rows[i][c].num().len() + rows[i][c].den().len());
        let Some(p) = best else { continue };
        rows.swap(r, p);
        let inv = RatFunc::from_poly(Poly::one(vars)).div(&rows[r][c]);
        for j in c..cols {
            rows[r][j] = rows[r][j].mul(&inv);
        }
        for i in 0..rows.len() {
            if i == r || rows[i][c].is_zero() {
                continue;
            }
            let f = rows[i][c].clone();
            for j in c..cols {
                if rows[r][j].is_zero() {
                    continue;
                }
                let d = f.mul(&rows[r][j]);
                rows[i][j] = rows[i][j].sub(&d);
            }
        }
        pivots.push(c);
        r += 1;
    }
    rows.truncate(r);
    Ok((rows, pivots))
}

fn clear_denominators<T: Scalar>(v: &[RatFunc<T>]) -> Vec<Poly<T>> {
    let vars = v[0].num().vars().clone();
    let mut dens: Vec<Poly<T>> = Vec::new();
    for f in v {
        if !f.is_zero() && !f.den().is_constant() && !dens.contains(f.den()) {
            dens.push(f.den().clone());
        }
    }
    let common = dens.iter().fold(Poly::one(&vars), |acc, d| &acc * d);
    let mut out: Vec<Poly<T>> = v
        .iter()
        .map(|f| {
            if f.is_zero() {
                return Poly::zero(&vars);
            }
            let scaled = &f.num * &common;
            scaled.div_exact(&f.den).expect("common denominator is a multiple")
        })
        .collect();
    // Strip factors shared by all entries.
    for d in &dens {
        let divided: Option<Vec<Poly<T>>> = out
            .iter()
            .map(|p| if p.is_zero() { Some(p.clone()) } else { p.div_exact(d) })
            .collect();
        if let Some(divided) = divided {
            out = divided;
        }
    }
    let mut mono: Option<Vec<i32>> = None;
    for p in out.iter().filter(|p| !p.is_zero()) {
        let mc = p.monomial_content().0;
        mono = Some(match mono {
            None => mc,
            Some(acc) => acc.iter().zip(&mc).map(|(a, b)| (*a).min(*b)).collect(),
        });
    }
    if let Some(mc) = mono {
        let inv = Monomial(mc.iter().map(|e| -e).collect());
        out = out.iter().map(|p| p.mul_monomial(&inv, &T::one())).collect();
    }
    let content = out
        .iter()
        .fold(T::zero(), |acc, p| acc.rational_gcd(&p.content()));
    if !content.is_zero() {
        let lead_negative = out
            .iter()
            .find(|p| !p.is_zero())
            .and_then(|p| p.leading_term().map(|(_, c)| c.is_negative()))
            .unwrap_or(false);
        let s = if lead_negative { -content } else { content };
        let inv = T::one() / s;
        out = out.iter().map(|p| p.scale(&inv)).collect();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rat;
    use proptest::prelude::*;

    fn table() -> Arc<VarTable> {
        VarTable::new(["x", "y0", "z0", "z1", "z2", "z3"]).unwrap()
    }

    fn p(s: &str) -> Poly<Rat> {
        Poly::parse(s, &table()).unwrap()
    }

    #[test]
    fn partial_derivatives() {
        assert_eq!(p("x^2*z0").partial(0), p("2*x*z0"));
        assert_eq!(p("x^-1").partial(0), -&p("x^-2"));
        // g_{1,1} = (x z1 - z0)/2 differentiates to z1/2
        assert_eq!(p("(x*z1 - z0)*1/2").partial(0), p("1/2*z1"));
        assert_eq!(
            p("x").partial_named("w"),
            Err(PolyError::UnknownVariable("w".into()))
        );
    }

    #[test]
    fn ring_operations() {
        assert_eq!(&p("x + z0") * &p("x - z0"), p("x^2 - z0^2"));
        let q = p("3*x*y0 - 1/2*z3^2 + 7");
        assert!((&q + &q.scale(&Rat::from_int(-1))).is_zero());
        assert_eq!(&p("x^-1") * &p("x^2"), p("x"));
    }

    #[test]
    fn substitute_zero_respects_poles() {
        assert_eq!(p("x*z0 + z1").substitute_zero(0).unwrap(), p("z1"));
        assert_eq!(
            p("x^-1 + z1").substitute_zero(0),
            Err(PolyError::PoleSubstitution("x".into()))
        );
    }

    #[test]
    fn mismatched_tables_are_rejected() {
        let other = VarTable::new(["x", "y0"]).unwrap();
        let a = p("x");
        let b = Poly::<Rat>::var(&other, 0);
        assert_eq!(a.checked_add(&b), Err(PolyError::VarTableMismatch));
        assert_eq!(a.checked_mul(&b), Err(PolyError::VarTableMismatch));
    }

    #[test]
    fn negative_exponents_only_on_x() {
        assert!(matches!(
            Poly::<Rat>::parse("z0^-1", &table()),
            Err(PolyError::NegativeExponent(_))
        ));
        let no_x = VarTable::new(["y0", "z0"]).unwrap();
        assert!(!no_x.is_laurent(0));
    }

    #[test]
    fn parser_rejects_juxtaposition_and_garbage() {
        assert!(Poly::<Rat>::parse("2x", &table()).is_err());
        assert!(Poly::<Rat>::parse("x z0", &table()).is_err());
        assert!(Poly::<Rat>::parse("x +", &table()).is_err());
        assert!(matches!(
            Poly::<Rat>::parse("w1", &table()),
            Err(PolyError::UnknownVariable(_))
        ));
        assert_eq!(p("(x*z1 - 2*z0)").to_string(), "x*z1 - 2*z0");
    }

    #[test]
    fn display_is_grlex_descending() {
        assert_eq!(p("1 + z0 + x^2").to_string(), "x^2 + z0 + 1");
        assert_eq!(p("-1/2*z1 + x^-1").to_string(), "-1/2*z1 + x^-1");
    }

    #[test]
    fn div_exact_finds_factors() {
        let a = p("x^2 - z0^2");
        assert_eq!(a.div_exact(&p("x - z0")), Some(p("x + z0")));
        assert_eq!(a.div_exact(&p("x + 2*z0")), None);
    }

    #[test]
    fn ratfunc_kernel_examples() {
        let t = table();
        let k = ratfunc_kernel(&[vec![p("z3")]], 1, &t).unwrap();
        assert!(k.is_empty());
        let k = ratfunc_kernel(&[vec![Poly::<Rat>::zero(&t)]], 1, &t).unwrap();
        assert_eq!(k.len(), 1);
        let k = ratfunc_kernel(&[vec![p("z1"), p("z1*x")]], 2, &t).unwrap();
        assert_eq!(k, vec![vec![p("x"), p("-1")]]);
    }

    #[test]
    fn ratfunc_kernel_over_function_field() {
        let t = table();
        // rank 1 over the function field, rank 2 at special points
        let m = vec![
            vec![p("z0"), p("z1"), p("x")],
            vec![p("z0*z2"), p("z1*z2"), p("x*z2")],
        ];
        let k = ratfunc_kernel(&m, 3, &t).unwrap();
        assert_eq!(k.len(), 2);
        assert_eq!(ratfunc_rank(&m, 3, &t).unwrap() + k.len(), 3);
    }

    #[test]
    fn ratfunc_equality_by_cross_multiplication() {
        let a = RatFunc::new(p("x^2 - z0^2"), p("x - z0"));
        let b = RatFunc::from_poly(p("x + z0"));
        assert_eq!(a, b);
        assert_eq!(a.den(), &p("1"));
    }

    fn arb_poly() -> impl Strategy<Value = Poly<Rat>> {
        proptest::collection::vec(((0i32..3, 0i32..3, 0i32..2), -5i64..6), 0..5).prop_map(|ts| {
            let t = table();
            let mut out = Poly::zero(&t);
            for ((a, b, c), coef) in ts {
                let m = Monomial(vec![a - 1, b, c, 0, 0, 0]);
                out.add_term(m, Rat::from_int(coef));
            }
            out
        })
    }

    proptest! {
        #[test]
        fn ring_axioms(a in arb_poly(), b in arb_poly(), c in arb_poly()) {
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
            prop_assert_eq!(&a + &b, &b + &a);
            prop_assert_eq!(&a * &b, &b * &a);
        }

        #[test]
        fn partial_is_a_derivation(a in arb_poly(), b in arb_poly(), var in 0usize..3) {
            prop_assert_eq!((&a + &b).partial(var), &a.partial(var) + &b.partial(var));
            prop_assert_eq!(
                (&a * &b).partial(var),
                &(&a.partial(var) * &b) + &(&a * &b.partial(var))
            );
        }

        #[test]
        fn display_parse_round_trip(a in arb_poly()) {
            let text = a.to_string();
            prop_assert_eq!(Poly::<Rat>::parse(&text, &table()).unwrap(), a);
        }
    }
}
