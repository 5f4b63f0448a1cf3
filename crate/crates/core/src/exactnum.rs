//! Exact arithmetic in the ring ℚ[√2, √3].
//!
//! Every value is stored as `c1 + c2·√2 + c3·√3 + c6·√6` with arbitrary
//! precision rational coefficients. The basis `{1, √2, √3, √6}` is linearly
//! independent over ℚ, so the representation is unique and equality is
//! coefficient-wise.
//!
//! Comparison is exact. A floating point estimate with a rigorous error
//! bound settles most comparisons; when the estimate is too close to zero the
//! sign is decided algebraically by squaring conjugate forms.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Rational coefficient. Always reduced with a positive denominator.
pub type Rational = BigRational;

/// Radicands of the four basis elements, indexed by a two-bit mask:
/// bit 0 selects √2 and bit 1 selects √3.
const RADICANDS: [u32; 4] = [1, 2, 3, 6];

/// An element of ℚ[√2, √3].
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct ExactValue {
    coeffs: [Rational; 4],
}

fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

impl ExactValue {
    /// Builds `c1 + c2·√2 + c3·√3 + c6·√6`.
    pub fn new(c1: Rational, c2: Rational, c3: Rational, c6: Rational) -> Self {
        ExactValue {
            coeffs: [c1, c2, c3, c6],
        }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::rational(Rational::one())
    }

    pub fn rational(r: Rational) -> Self {
        ExactValue {
            coeffs: [r, Rational::zero(), Rational::zero(), Rational::zero()],
        }
    }

    /// The rational `num/den`. Panics if `den` is zero.
    pub fn ratio(num: i64, den: i64) -> Self {
        Self::rational(rat(num, den))
    }

    pub fn integer(n: i64) -> Self {
        Self::ratio(n, 1)
    }

    pub fn sqrt2() -> Self {
        Self::new(Rational::zero(), Rational::one(), Rational::zero(), Rational::zero())
    }

    pub fn sqrt3() -> Self {
        Self::new(Rational::zero(), Rational::zero(), Rational::one(), Rational::zero())
    }

    pub fn sqrt6() -> Self {
        Self::new(Rational::zero(), Rational::zero(), Rational::zero(), Rational::one())
    }

    /// Rational coefficient of `1`.
    pub fn c1(&self) -> &Rational {
        &self.coeffs[0]
    }

    /// Rational coefficient of `√2`.
    pub fn c2(&self) -> &Rational {
        &self.coeffs[1]
    }

    /// Rational coefficient of `√3`.
    pub fn c3(&self) -> &Rational {
        &self.coeffs[2]
    }

    /// Rational coefficient of `√6`.
    pub fn c6(&self) -> &Rational {
        &self.coeffs[3]
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    pub fn is_rational(&self) -> bool {
        self.coeffs[1..].iter().all(Zero::is_zero)
    }

    /// Multiplies every coefficient by `r`.
    pub fn scale(&self, r: &Rational) -> Self {
        ExactValue {
            coeffs: std::array::from_fn(|i| &self.coeffs[i] * r),
        }
    }

    /// `½(1 + self)`, the success probability for an advantage `self`.
    pub fn half_plus_half(&self) -> Self {
        (Self::one() + self).scale(&rat(1, 2))
    }

    /// `1/√n` when it lies in the ring, i.e. when the square-free part of `n`
    /// is one of 1, 2, 3 or 6.
    pub fn inv_sqrt(n: u64) -> Option<Self> {
        if n == 0 {
            return None;
        }
        let (square_root, free) = split_square(n);
        let mask = RADICANDS.iter().position(|&r| u64::from(r) == free)?;
        // 1/(s·√f) = √f / (s·f)
        let mut coeffs: [Rational; 4] = Default::default();
        coeffs[mask] = Rational::new(
            BigInt::one(),
            BigInt::from(square_root) * BigInt::from(free),
        );
        Some(ExactValue { coeffs })
    }

    /// Double precision value. Each term is converted separately, so the
    /// result carries roughly 15 significant digits unless the terms cancel.
    pub fn to_f64(&self) -> f64 {
        self.coeffs
            .iter()
            .zip(RADICANDS)
            .map(|(c, r)| rational_to_f64(c) * f64::from(r).sqrt())
            .sum()
    }

    /// Decimal expansion with `digits` digits after the point, computed with
    /// integer square roots so it is correct regardless of cancellation
    /// (up to the final rounding digit).
    pub fn to_decimal_string(&self, digits: u32) -> String {
        const GUARD: u32 = 6;
        let scale_pow = digits + GUARD;
        let ten = BigInt::from(10u32);
        let scale = num_traits::pow(ten.clone(), scale_pow as usize);
        let mut total = BigInt::zero();
        for (c, r) in self.coeffs.iter().zip(RADICANDS) {
            if c.is_zero() {
                continue;
            }
            // floor(√r · 10^scale_pow)
            let root = (BigInt::from(r) * &scale * &scale).sqrt();
            total += (c.numer() * root).div_floor(c.denom());
        }
        // round the guard digits away
        let guard = num_traits::pow(ten, GUARD as usize);
        let negative = total.is_negative();
        let magnitude = total.abs();
        let rounded = (magnitude + &guard / 2u32) / guard;
        let text = rounded.to_str_radix(10);
        let body = if digits == 0 {
            text
        } else {
            let width = digits as usize + 1;
            let padded = format!("{text:0>width$}");
            let (int, frac) = padded.split_at(padded.len() - digits as usize);
            format!("{int}.{frac}")
        };
        if negative && rounded_is_nonzero(&body) {
            format!("-{body}")
        } else {
            body
        }
    }

    /// Sign of the value, decided exactly.
    pub fn signum(&self) -> Ordering {
        // Fast path: the f64 estimate is within `bound` of the true value.
        let terms: Vec<f64> = self
            .coeffs
            .iter()
            .zip(RADICANDS)
            .map(|(c, r)| rational_to_f64(c) * f64::from(r).sqrt())
            .collect();
        if terms.iter().all(|t| t.is_finite()) {
            let estimate: f64 = terms.iter().sum();
            let bound = terms.iter().map(|t| t.abs()).sum::<f64>() * 1e-12;
            if estimate > bound {
                return Ordering::Greater;
            }
            if estimate < -bound {
                return Ordering::Less;
            }
        }
        self.exact_signum()
    }

    /// Sign via conjugates: write the value as `P + Q·√3` with `P, Q` in
    /// ℚ(√2); when the signs of `P` and `Q` disagree compare `P²` with `3Q²`.
    fn exact_signum(&self) -> Ordering {
        let [c1, c2, c3, c6] = &self.coeffs;
        let sp = sign_q2(c1, c2);
        let sq = sign_q2(c3, c6);
        match (sp, sq) {
            (Ordering::Equal, s) | (s, Ordering::Equal) => s,
            (a, b) if a == b => a,
            (a, _) => {
                let two = rat(2, 1);
                let three = rat(3, 1);
                // P² - 3Q² = (c1² + 2c2² - 3c3² - 6c6²) + (2c1c2 - 6c3c6)·√2
                let u = c1 * c1 + &two * c2 * c2 - &three * c3 * c3 - rat(6, 1) * c6 * c6;
                let v = &two * c1 * c2 - rat(6, 1) * c3 * c6;
                match sign_q2(&u, &v) {
                    Ordering::Greater => a,
                    Ordering::Less => a.reverse(),
                    // P² = 3Q² with P, Q rational-in-√2 is impossible unless both vanish
                    Ordering::Equal => Ordering::Equal,
                }
            }
        }
    }

    /// Advantage term `2^(-k/2) · 3^(-j/2)`.
    pub fn delta(k: u32, j: u32) -> Self {
        let two = BigInt::from(2u32);
        let three = BigInt::from(3u32);
        let den = num_traits::pow(two, (k / 2) as usize) * num_traits::pow(three, (j / 2) as usize);
        let base = Rational::new(BigInt::one(), den);
        let mut value = Self::rational(base);
        if k % 2 == 1 {
            // 1/√2 = √2/2
            value = value * Self::sqrt2().scale(&rat(1, 2));
        }
        if j % 2 == 1 {
            value = value * Self::sqrt3().scale(&rat(1, 3));
        }
        value
    }
}

/// `n = s² · f` with `f` square-free.
fn split_square(mut n: u64) -> (u64, u64) {
    let mut root = 1u64;
    let mut free = 1u64;
    let mut p = 2u64;
    while p * p <= n {
        let mut e = 0;
        while n.is_multiple_of(p) {
            n /= p;
            e += 1;
        }
        root *= p.pow(e / 2);
        if e % 2 == 1 {
            free *= p;
        }
        p += 1;
    }
    (root, free * n)
}

fn rounded_is_nonzero(body: &str) -> bool {
    body.bytes().any(|b| b.is_ascii_digit() && b != b'0')
}

fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // enormous numerators and denominators: shift both down first
        let shift = r.denom().bits().max(r.numer().bits()).saturating_sub(1000);
        let n = (r.numer() >> shift).to_f64().unwrap_or(f64::NAN);
        let d = (r.denom() >> shift).to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

fn rational_sign(r: &Rational) -> Ordering {
    match r.numer().sign() {
        Sign::Minus => Ordering::Less,
        Sign::NoSign => Ordering::Equal,
        Sign::Plus => Ordering::Greater,
    }
}

/// Sign of `u + v·√2`.
fn sign_q2(u: &Rational, v: &Rational) -> Ordering {
    let su = rational_sign(u);
    let sv = rational_sign(v);
    match (su, sv) {
        (Ordering::Equal, s) | (s, Ordering::Equal) => s,
        (a, b) if a == b => a,
        (a, _) => {
            let diff = u * u - rat(2, 1) * v * v;
            match rational_sign(&diff) {
                Ordering::Greater => a,
                Ordering::Less => a.reverse(),
                Ordering::Equal => Ordering::Equal,
            }
        }
    }
}

impl PartialOrd for ExactValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExactValue {
    fn cmp(&self, other: &Self) -> Ordering {
        if self == other {
            return Ordering::Equal;
        }
        (self - other).signum()
    }
}

impl Add for &ExactValue {
    type Output = ExactValue;

    fn add(self, rhs: &ExactValue) -> ExactValue {
        ExactValue {
            coeffs: std::array::from_fn(|i| &self.coeffs[i] + &rhs.coeffs[i]),
        }
    }
}

impl Sub for &ExactValue {
    type Output = ExactValue;

    fn sub(self, rhs: &ExactValue) -> ExactValue {
        ExactValue {
            coeffs: std::array::from_fn(|i| &self.coeffs[i] - &rhs.coeffs[i]),
        }
    }
}

impl Mul for &ExactValue {
    type Output = ExactValue;

    fn mul(self, rhs: &ExactValue) -> ExactValue {
        let mut coeffs: [Rational; 4] = Default::default();
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                // √x·√y = (shared primes)·√(x xor y) on the bitmask basis
                let shared = i & j;
                let factor = RADICANDS[shared];
                coeffs[i ^ j] += a * b * BigInt::from(factor);
            }
        }
        ExactValue { coeffs }
    }
}

impl Neg for &ExactValue {
    type Output = ExactValue;

    fn neg(self) -> ExactValue {
        ExactValue {
            coeffs: std::array::from_fn(|i| -&self.coeffs[i]),
        }
    }
}

macro_rules! forward_owned {
    ($($tr:ident $method:ident),*) => {$(
        impl $tr for ExactValue {
            type Output = ExactValue;
            fn $method(self, rhs: ExactValue) -> ExactValue {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&ExactValue> for ExactValue {
            type Output = ExactValue;
            fn $method(self, rhs: &ExactValue) -> ExactValue {
                (&self).$method(rhs)
            }
        }
        impl $tr<ExactValue> for &ExactValue {
            type Output = ExactValue;
            fn $method(self, rhs: ExactValue) -> ExactValue {
                self.$method(&rhs)
            }
        }
    )*};
}

forward_owned!(Add add, Sub sub, Mul mul);

impl Neg for ExactValue {
    type Output = ExactValue;

    fn neg(self) -> ExactValue {
        -&self
    }
}

impl AddAssign<&ExactValue> for ExactValue {
    fn add_assign(&mut self, rhs: &ExactValue) {
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a += b;
        }
    }
}

impl std::iter::Sum for ExactValue {
    fn sum<I: Iterator<Item = ExactValue>>(iter: I) -> Self {
        iter.fold(ExactValue::zero(), |acc, x| acc + x)
    }
}

impl From<i64> for ExactValue {
    fn from(n: i64) -> Self {
        ExactValue::integer(n)
    }
}

impl From<Rational> for ExactValue {
    fn from(r: Rational) -> Self {
        ExactValue::rational(r)
    }
}

impl fmt::Display for ExactValue {
    /// Renders `a/b + c/d*sqrt2 + e/f*sqrt3 + g/h*sqrt6`, omitting zero terms.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (c, r) in self.coeffs.iter().zip(RADICANDS) {
            if c.is_zero() {
                continue;
            }
            let magnitude = c.abs();
            if first {
                if c.is_negative() {
                    f.write_str("-")?;
                }
            } else if c.is_negative() {
                f.write_str(" - ")?;
            } else {
                f.write_str(" + ")?;
            }
            write!(f, "{magnitude}")?;
            if r != 1 {
                write!(f, "*sqrt{r}")?;
            }
            first = false;
        }
        if first {
            f.write_str("0")?;
        }
        Ok(())
    }
}

impl fmt::Debug for ExactValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ExactValue({self} ≈ {:.12})", self.to_f64())
    }
}

impl FromStr for ExactValue {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::Parse(format!("exact value {s:?}: {why}"));
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(bad("empty"));
        }
        let mut coeffs: [Rational; 4] = Default::default();
        let bytes = compact.as_bytes();
        let mut pos = 0;
        while pos < bytes.len() {
            let mut negative = false;
            if bytes[pos] == b'+' || bytes[pos] == b'-' {
                negative = bytes[pos] == b'-';
                pos += 1;
            } else if pos != 0 {
                return Err(bad("expected + or -"));
            }
            let end = compact[pos..]
                .find(['+', '-'])
                .map_or(compact.len(), |off| pos + off);
            let term = &compact[pos..end];
            if term.is_empty() {
                return Err(bad("empty term"));
            }
            let (coef_text, radicand) = match term.find("sqrt") {
                Some(at) => {
                    let radicand: u32 = term[at + 4..]
                        .parse()
                        .map_err(|_| bad("bad radicand"))?;
                    let coef = term[..at].strip_suffix('*').unwrap_or(&term[..at]);
                    if !term[..at].is_empty() && !term[..at].ends_with('*') {
                        return Err(bad("expected '*' before sqrt"));
                    }
                    (coef, radicand)
                }
                None => (term, 1),
            };
            let slot = RADICANDS
                .iter()
                .position(|&r| r == radicand)
                .ok_or_else(|| bad("radicand must be 2, 3 or 6"))?;
            let mut value = if coef_text.is_empty() {
                Rational::one()
            } else {
                parse_rational(coef_text).ok_or_else(|| bad("bad rational"))?
            };
            if negative {
                value = -value;
            }
            coeffs[slot] += value;
            pos = end;
        }
        Ok(ExactValue { coeffs })
    }
}

fn parse_rational(text: &str) -> Option<Rational> {
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n, d),
        None => (text, "1"),
    };
    let all_digits = |t: &str| !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit());
    if !all_digits(num) || !all_digits(den) {
        return None;
    }
    let den: BigInt = den.parse().ok()?;
    if den.is_zero() {
        return None;
    }
    Some(Rational::new(num.parse().ok()?, den))
}
