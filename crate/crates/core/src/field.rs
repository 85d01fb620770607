//! Exact arithmetic in F_q for prime powers q = p^k, with traces, additive
//! characters, and multiplicative subgroups.
//!
//! The library targets desk scale (q of a few hundred at most), so a field is
//! realized as full lookup tables over canonical element indices. The
//! canonical index of an element with coefficient vector (c_0, .., c_{k-1})
//! over F_p is c_0 + c_1 p + ... + c_{k-1} p^{k-1}; canonical element order is
//! index order. For k = 1 the index is just the residue.

use std::sync::Arc;

use num_complex::Complex;
use thiserror::Error;

use crate::scalar::{real_from_u64, Real};

/// Largest supported field order. Tables are q*q entries each.
pub const MAX_FIELD_ORDER: u64 = 2048;

#[derive(Debug, Error, PartialEq, Eq, Clone)]
pub enum FieldError {
    #[error("{0} is not prime")]
    NonPrime(u64),
    #[error("q = {q} is {rem} mod 4, not 3 mod 4 (construct with new_any_residue to override)")]
    WrongResidue { q: u64, rem: u64 },
    #[error("division by zero")]
    DivisionByZero,
    #[error("{d} does not divide the multiplicative group order {group_order}")]
    NotADivisor { d: u64, group_order: u64 },
    #[error("field order {q} exceeds the supported maximum {max}")]
    TooLarge { q: u64, max: u64 },
    #[error("extension degree must be at least 1")]
    ZeroDegree,
    #[error("element index {index} out of range for field of order {q}")]
    BadElement { index: u64, q: u64 },
}

/// An element of F_q, stored as its canonical index into the field tables.
///
/// Elements are only meaningful relative to the `Field` that produced them;
/// all arithmetic goes through the field.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct FieldElement(pub(crate) u32);

impl FieldElement {
    #[inline]
    pub fn index(self) -> u32 {
        self.0
    }
}

struct FieldData {
    p: u64,
    k: u32,
    q: u64,
    /// Non-leading coefficients (low-to-high) of the monic modulus polynomial;
    /// empty for prime fields.
    modulus: Vec<u64>,
    residue_checked: bool,
    add: Vec<u32>,
    sub: Vec<u32>,
    mul: Vec<u32>,
    neg: Vec<u32>,
    inv: Vec<u32>, // inv[0] is a sentinel, never read through the public API
    trace: Vec<u32>,
    primitive_root: FieldElement,
}

/// The field F_q. Cheap to clone and safe to share across threads; all
/// operations are pure lookups against immutable tables.
#[derive(Clone)]
pub struct Field(Arc<FieldData>);

impl std::fmt::Debug for Field {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Field")
            .field("p", &self.0.p)
            .field("k", &self.0.k)
            .field("q", &self.0.q)
            .field("modulus", &self.0.modulus)
            .finish()
    }
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.0.p == other.0.p && self.0.k == other.0.k && self.0.modulus == other.0.modulus
    }
}
impl Eq for Field {}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

// ---- polynomial helpers over F_p (used only during construction) ----

fn poly_trim(v: &mut Vec<u64>) {
    while v.last() == Some(&0) {
        v.pop();
    }
}

/// Remainder of `a` modulo the monic polynomial `m` (coefficients low-to-high,
/// leading coefficient 1 implicit at degree `m.len()`), over F_p.
fn poly_rem_monic(a: &[u64], m_low: &[u64], p: u64) -> Vec<u64> {
    let deg_m = m_low.len();
    let mut r: Vec<u64> = a.to_vec();
    while r.len() > deg_m {
        let lead = *r.last().unwrap() % p;
        let shift = r.len() - 1 - deg_m;
        if lead != 0 {
            for (i, &mc) in m_low.iter().enumerate() {
                let idx = shift + i;
                let sub = (lead * mc) % p;
                r[idx] = (r[idx] + p * p - sub) % p;
            }
        }
        r.pop();
        poly_trim(&mut r);
        if r.is_empty() {
            break;
        }
    }
    r
}

/// True remainder of `a` mod a general monic divisor given as a full
/// coefficient vector (low-to-high, last entry 1).
fn poly_rem_general(a: &[u64], d: &[u64], p: u64) -> Vec<u64> {
    debug_assert_eq!(*d.last().unwrap(), 1);
    let low = &d[..d.len() - 1];
    poly_rem_monic(a, low, p)
}

/// Exhaustive irreducibility test by trial division with all monic
/// polynomials of degree 1..=k/2.
fn is_irreducible_monic(low: &[u64], p: u64) -> bool {
    let k = low.len();
    let mut full: Vec<u64> = low.to_vec();
    full.push(1);
    for deg in 1..=(k / 2).max(1) {
        if deg > k / 2 && k > 1 {
            break;
        }
        // all monic divisors of this degree
        let count = p.pow(deg as u32);
        for enc in 0..count {
            let mut d: Vec<u64> = Vec::with_capacity(deg + 1);
            let mut e = enc;
            for _ in 0..deg {
                d.push(e % p);
                e /= p;
            }
            d.push(1);
            let r = poly_rem_general(&full, &d, p);
            if r.is_empty() {
                return false;
            }
        }
    }
    true
}

/// Smallest monic irreducible polynomial of degree k over F_p, by
/// lexicographic order on the low-to-high non-leading coefficient vector.
fn find_irreducible(p: u64, k: u32) -> Vec<u64> {
    let k = k as usize;
    let mut coeffs = vec![0u64; k];
    loop {
        if is_irreducible_monic(&coeffs, p) {
            return coeffs;
        }
        // lexicographic successor: last coordinate least significant
        let mut pos = k;
        loop {
            assert!(pos > 0, "no irreducible polynomial found (impossible)");
            pos -= 1;
            coeffs[pos] += 1;
            if coeffs[pos] < p {
                break;
            }
            coeffs[pos] = 0;
        }
    }
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

impl Field {
    /// The field F_{p^k}, rejecting orders not congruent to 3 mod 4.
    pub fn new(p: u64, k: u32) -> Result<Field, FieldError> {
        Self::build(p, k, true)
    }

    /// The field F_{p^k} for any residue class. Downstream geometry that
    /// relies on -1 being a non-square is outside its supported regime on
    /// such fields; reports mark it accordingly.
    pub fn new_any_residue(p: u64, k: u32) -> Result<Field, FieldError> {
        Self::build(p, k, false)
    }

    fn build(p: u64, k: u32, strict: bool) -> Result<Field, FieldError> {
        if k == 0 {
            return Err(FieldError::ZeroDegree);
        }
        if !is_prime(p) {
            return Err(FieldError::NonPrime(p));
        }
        let q = p
            .checked_pow(k)
            .filter(|&q| q <= MAX_FIELD_ORDER)
            .ok_or(FieldError::TooLarge {
                q: u64::MAX,
                max: MAX_FIELD_ORDER,
            })?;
        if q > MAX_FIELD_ORDER {
            return Err(FieldError::TooLarge {
                q,
                max: MAX_FIELD_ORDER,
            });
        }
        if strict && q % 4 != 3 {
            return Err(FieldError::WrongResidue { q, rem: q % 4 });
        }
        let modulus = if k == 1 {
            Vec::new()
        } else {
            find_irreducible(p, k)
        };

        let qs = q as usize;
        let ks = k as usize;
        // digit vectors for every element
        let digits: Vec<Vec<u64>> = (0..q)
            .map(|idx| {
                let mut v = Vec::with_capacity(ks);
                let mut e = idx;
                for _ in 0..ks {
                    v.push(e % p);
                    e /= p;
                }
                v
            })
            .collect();
        let encode = |coeffs: &[u64]| -> u32 {
            let mut idx = 0u64;
            for &c in coeffs.iter().rev() {
                idx = idx * p + (c % p);
            }
            idx as u32
        };

        let mut add = vec![0u32; qs * qs];
        let mut mul = vec![0u32; qs * qs];
        let mut neg = vec![0u32; qs];
        for a in 0..qs {
            let da = &digits[a];
            let nv: Vec<u64> = da.iter().map(|&c| (p - c) % p).collect();
            neg[a] = encode(&nv);
            for b in a..qs {
                let db = &digits[b];
                let sum: Vec<u64> = da.iter().zip(db).map(|(&x, &y)| (x + y) % p).collect();
                let s = encode(&sum);
                add[a * qs + b] = s;
                add[b * qs + a] = s;
                // product with modular reduction
                let mut prod = vec![0u64; 2 * ks - 1];
                for (i, &x) in da.iter().enumerate() {
                    if x == 0 {
                        continue;
                    }
                    for (j, &y) in db.iter().enumerate() {
                        prod[i + j] = (prod[i + j] + x * y) % p;
                    }
                }
                let m = if ks == 1 {
                    // prod has a single coefficient already reduced
                    encode(&prod)
                } else {
                    let mut r = poly_rem_monic(&prod, &modulus, p);
                    r.resize(ks, 0);
                    encode(&r)
                };
                mul[a * qs + b] = m;
                mul[b * qs + a] = m;
            }
        }
        let mut sub = vec![0u32; qs * qs];
        for a in 0..qs {
            for b in 0..qs {
                sub[a * qs + b] = add[a * qs + neg[b] as usize];
            }
        }

        let table_pow = |base: u32, mut e: u64| -> u32 {
            let mut acc = 1u32; // index of 1
            let mut b = base;
            while e > 0 {
                if e & 1 == 1 {
                    acc = mul[acc as usize * qs + b as usize];
                }
                b = mul[b as usize * qs + b as usize];
                e >>= 1;
            }
            acc
        };

        let mut inv = vec![0u32; qs];
        for a in 1..qs {
            inv[a] = table_pow(a as u32, q - 2);
        }

        // trace via Frobenius orbits
        let mut trace = vec![0u32; qs];
        for a in 0..qs {
            let mut acc = a as u32;
            let mut fr = a as u32;
            for _ in 1..ks {
                fr = table_pow(fr, p);
                acc = add[acc as usize * qs + fr as usize];
            }
            debug_assert!(
                (acc as u64) < p,
                "trace must land in the prime subfield (index {acc} >= p {p})"
            );
            trace[a] = acc;
        }

        // smallest element of multiplicative order q-1
        let group_order = q - 1;
        let factors = prime_factors(group_order);
        let mut primitive_root = FieldElement(1);
        if group_order > 1 {
            'outer: for cand in 2..qs as u32 {
                for &r in &factors {
                    if table_pow(cand, group_order / r) == 1 {
                        continue 'outer;
                    }
                }
                primitive_root = FieldElement(cand);
                break;
            }
        }

        Ok(Field(Arc::new(FieldData {
            p,
            k,
            q,
            modulus,
            residue_checked: strict,
            add,
            sub,
            mul,
            neg,
            inv,
            trace,
            primitive_root,
        })))
    }

    #[inline]
    pub fn p(&self) -> u64 {
        self.0.p
    }
    #[inline]
    pub fn k(&self) -> u32 {
        self.0.k
    }
    #[inline]
    pub fn q(&self) -> u64 {
        self.0.q
    }
    #[inline]
    pub fn qs(&self) -> usize {
        self.0.q as usize
    }
    #[inline]
    pub fn group_order(&self) -> u64 {
        self.0.q - 1
    }
    /// Non-leading coefficients (low-to-high) of the modulus; empty for k = 1.
    pub fn modulus(&self) -> &[u64] {
        &self.0.modulus
    }
    /// Whether q = 3 mod 4, the regime every counting statement here targets.
    #[inline]
    pub fn is_standard_regime(&self) -> bool {
        self.0.q % 4 == 3
    }
    /// Whether the residue check was enforced at construction.
    pub fn residue_checked(&self) -> bool {
        self.0.residue_checked
    }

    #[inline]
    pub fn zero(&self) -> FieldElement {
        FieldElement(0)
    }
    #[inline]
    pub fn one(&self) -> FieldElement {
        FieldElement(1)
    }

    pub fn element(&self, index: u64) -> FieldElement {
        assert!(index < self.0.q, "element index {index} out of range");
        FieldElement(index as u32)
    }

    pub fn try_element(&self, index: u64) -> Result<FieldElement, FieldError> {
        if index < self.0.q {
            Ok(FieldElement(index as u32))
        } else {
            Err(FieldError::BadElement { index, q: self.0.q })
        }
    }

    /// Element with the given coefficient vector over F_p (low-to-high,
    /// truncated or zero-padded to length k; residues reduced mod p).
    pub fn from_coeffs(&self, coeffs: &[u64]) -> FieldElement {
        let mut idx = 0u64;
        for i in (0..self.0.k as usize).rev() {
            let c = coeffs.get(i).copied().unwrap_or(0) % self.0.p;
            idx = idx * self.0.p + c;
        }
        FieldElement(idx as u32)
    }

    /// Coefficient vector (low-to-high) of an element.
    pub fn coeffs(&self, e: FieldElement) -> Vec<u64> {
        let mut v = Vec::with_capacity(self.0.k as usize);
        let mut idx = e.0 as u64;
        for _ in 0..self.0.k {
            v.push(idx % self.0.p);
            idx /= self.0.p;
        }
        v
    }

    pub fn elements(&self) -> impl Iterator<Item = FieldElement> + '_ {
        (0..self.0.q as u32).map(FieldElement)
    }

    #[inline]
    pub fn add(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        FieldElement(self.0.add[a.0 as usize * self.qs() + b.0 as usize])
    }
    #[inline]
    pub fn sub(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        FieldElement(self.0.sub[a.0 as usize * self.qs() + b.0 as usize])
    }
    #[inline]
    pub fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        FieldElement(self.0.mul[a.0 as usize * self.qs() + b.0 as usize])
    }
    #[inline]
    pub fn neg(&self, a: FieldElement) -> FieldElement {
        FieldElement(self.0.neg[a.0 as usize])
    }
    #[inline]
    pub fn square(&self, a: FieldElement) -> FieldElement {
        self.mul(a, a)
    }

    pub fn inv(&self, a: FieldElement) -> Result<FieldElement, FieldError> {
        if a.0 == 0 {
            Err(FieldError::DivisionByZero)
        } else {
            Ok(FieldElement(self.0.inv[a.0 as usize]))
        }
    }

    pub fn pow(&self, a: FieldElement, mut e: u64) -> FieldElement {
        let mut acc = FieldElement(1);
        let mut b = a;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, b);
            }
            b = self.mul(b, b);
            e >>= 1;
        }
        acc
    }

    /// Tr(x) = x + x^p + ... + x^{p^{k-1}}, as a residue mod p.
    #[inline]
    pub fn trace(&self, a: FieldElement) -> u64 {
        self.0.trace[a.0 as usize] as u64
    }

    /// The additive character chi(x) = exp(2 pi i Tr(x) / p).
    pub fn character<R: Real>(&self, a: FieldElement) -> Complex<R> {
        let angle = R::TAU() * real_from_u64::<R>(self.trace(a)) / real_from_u64::<R>(self.0.p);
        Complex::new(angle.cos(), angle.sin())
    }

    /// Table of chi over residues mod p: entry t is exp(2 pi i t / p).
    pub fn character_roots<R: Real>(&self) -> Vec<Complex<R>> {
        (0..self.0.p)
            .map(|t| {
                let angle = R::TAU() * real_from_u64::<R>(t) / real_from_u64::<R>(self.0.p);
                Complex::new(angle.cos(), angle.sin())
            })
            .collect()
    }

    /// Smallest canonical element of multiplicative order q - 1.
    pub fn primitive_root(&self) -> FieldElement {
        self.0.primitive_root
    }

    /// The multiplicative subgroup of order d (requires d | q - 1), generated
    /// by g^{(q-1)/d} for the canonical primitive root g.
    pub fn subgroup_of_order(&self, d: u64) -> Result<MultiplicativeSubgroup, FieldError> {
        let group_order = self.group_order();
        if d == 0 || group_order % d != 0 {
            return Err(FieldError::NotADivisor { d, group_order });
        }
        let generator = self.pow(self.primitive_root(), group_order / d);
        let mut elements = Vec::with_capacity(d as usize);
        let mut x = FieldElement(1);
        for _ in 0..d {
            elements.push(x);
            x = self.mul(x, generator);
        }
        debug_assert_eq!(x, FieldElement(1));
        elements.sort_unstable();
        elements.dedup();
        debug_assert_eq!(elements.len() as u64, d);
        let mut member = vec![false; self.qs()];
        for e in &elements {
            member[e.0 as usize] = true;
        }
        Ok(MultiplicativeSubgroup {
            order: d,
            elements,
            generator,
            member,
        })
    }

    /// All of F_q^*.
    pub fn full_multiplicative_group(&self) -> MultiplicativeSubgroup {
        self.subgroup_of_order(self.group_order())
            .expect("q-1 divides itself")
    }

    /// Divisors of q - 1, i.e. the available subgroup orders.
    pub fn subgroup_orders(&self) -> Vec<u64> {
        let n = self.group_order();
        let mut out: Vec<u64> = (1..=n).filter(|d| n % d == 0).collect();
        out.sort_unstable();
        out
    }
}

/// A multiplicative subgroup A of F_q^*, with its sorted element list and a
/// membership mask for O(1) support tests.
#[derive(Clone, Debug)]
pub struct MultiplicativeSubgroup {
    order: u64,
    elements: Vec<FieldElement>,
    generator: FieldElement,
    member: Vec<bool>,
}

impl MultiplicativeSubgroup {
    #[inline]
    pub fn order(&self) -> u64 {
        self.order
    }
    pub fn elements(&self) -> &[FieldElement] {
        &self.elements
    }
    pub fn generator(&self) -> FieldElement {
        self.generator
    }
    #[inline]
    pub fn contains(&self, e: FieldElement) -> bool {
        self.member[e.0 as usize]
    }
    /// |A|^3 >= q^2, the size regime the spectral estimates are stated for.
    pub fn size_condition_met(&self, q: u64) -> bool {
        self.order.pow(3) >= q * q
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_prime_and_wrong_residue() {
        assert_eq!(Field::new(4, 1).unwrap_err(), FieldError::NonPrime(4));
        assert_eq!(
            Field::new(5, 1).unwrap_err(),
            FieldError::WrongResidue { q: 5, rem: 1 }
        );
        assert!(Field::new_any_residue(5, 1).is_ok());
        assert_eq!(Field::new(3, 0).unwrap_err(), FieldError::ZeroDegree);
    }

    #[test]
    fn f7_basics() {
        let f = Field::new(7, 1).unwrap();
        assert_eq!(f.q(), 7);
        assert!(f.modulus().is_empty());
        let three = f.element(3);
        let five = f.element(5);
        assert_eq!(f.mul(three, five), f.one());
        assert_eq!(f.inv(three).unwrap(), five);
        assert_eq!(f.inv(f.zero()).unwrap_err(), FieldError::DivisionByZero);
    }

    #[test]
    fn f27_modulus_matches_exhaustive_search() {
        // Independent oracle: scan monic cubics over F_3 in lexicographic
        // coefficient order and take the first with no factor of degree 1.
        // For cubics, rootlessness is equivalent to irreducibility.
        let p = 3i64;
        let mut expected = None;
        'scan: for c0 in 0..p {
            for c1 in 0..p {
                for c2 in 0..p {
                    let f = |x: i64| (x * x * x + c2 * x * x + c1 * x + c0).rem_euclid(p);
                    if (0..p).all(|x| f(x) != 0) {
                        expected = Some(vec![c0 as u64, c1 as u64, c2 as u64]);
                        break 'scan;
                    }
                }
            }
        }
        let field = Field::new(3, 3).unwrap();
        assert_eq!(field.q(), 27);
        assert_eq!(field.modulus(), expected.unwrap().as_slice());
        assert_eq!(field.modulus(), &[1, 0, 2]);
    }

    fn all_standard_fields_up_to_49() -> Vec<Field> {
        [
            (3u64, 1u32),
            (7, 1),
            (11, 1),
            (19, 1),
            (23, 1),
            (3, 3),
            (31, 1),
            (43, 1),
            (47, 1),
        ]
        .into_iter()
        .map(|(p, k)| Field::new(p, k).unwrap())
        .collect()
    }

    #[test]
    fn arithmetic_axioms_exhaustive() {
        for field in all_standard_fields_up_to_49() {
            let q = field.qs();
            for a in 0..q as u32 {
                let a = FieldElement(a);
                assert_eq!(field.add(a, field.neg(a)), field.zero());
                if a != field.zero() {
                    assert_eq!(field.mul(a, field.inv(a).unwrap()), field.one());
                    assert_eq!(field.pow(a, field.q() - 1), field.one());
                }
                for b in 0..q as u32 {
                    let b = FieldElement(b);
                    assert_eq!(field.add(a, b), field.add(b, a));
                    assert_eq!(field.mul(a, b), field.mul(b, a));
                    assert_eq!(field.sub(a, b), field.add(a, field.neg(b)));
                    for c in 0..q as u32 {
                        let c = FieldElement(c);
                        assert_eq!(
                            field.mul(a, field.add(b, c)),
                            field.add(field.mul(a, b), field.mul(a, c))
                        );
                        assert_eq!(field.mul(field.mul(a, b), c), field.mul(a, field.mul(b, c)));
                        assert_eq!(field.add(field.add(a, b), c), field.add(a, field.add(b, c)));
                    }
                }
            }
        }
    }

    #[test]
    fn trace_and_character_properties() {
        let f7 = Field::new(7, 1).unwrap();
        for x in f7.elements() {
            assert_eq!(f7.trace(x), x.index() as u64);
        }
        assert_eq!(f7.character::<f64>(f7.zero()), Complex::new(1.0, 0.0));

        let f27 = Field::new(3, 3).unwrap();
        for x in f27.elements() {
            // Tr(x) = x + x^3 + x^9 computed through the public power map
            let t = f27.add(f27.add(x, f27.pow(x, 3)), f27.pow(x, 9));
            assert!(t.index() < 3);
            assert_eq!(f27.trace(x), t.index() as u64);
            let chi = f27.character::<f64>(x);
            assert!((chi.norm() - 1.0).abs() < 1e-12);
        }
        // additivity on all pairs
        for x in f27.elements() {
            for y in f27.elements() {
                let lhs = f27.character::<f64>(f27.add(x, y));
                let rhs = f27.character::<f64>(x) * f27.character::<f64>(y);
                assert!((lhs - rhs).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn character_orthogonality() {
        for field in all_standard_fields_up_to_49() {
            for m in field.elements() {
                let mut sum = Complex::new(0.0f64, 0.0);
                for x in field.elements() {
                    sum += field.character::<f64>(field.mul(m, x));
                }
                let expected = if m == field.zero() {
                    field.q() as f64
                } else {
                    0.0
                };
                assert!(
                    (sum - Complex::new(expected, 0.0)).norm() < 1e-9,
                    "q={} m={:?} sum={sum}",
                    field.q(),
                    m
                );
            }
        }
    }

    #[test]
    fn subgroups_of_f7() {
        let f = Field::new(7, 1).unwrap();
        assert_eq!(f.primitive_root(), f.element(3));
        let a3 = f.subgroup_of_order(3).unwrap();
        let idx: Vec<u32> = a3.elements().iter().map(|e| e.index()).collect();
        assert_eq!(idx, vec![1, 2, 4]);
        let a6 = f.subgroup_of_order(6).unwrap();
        assert_eq!(a6.order(), 6);
        assert_eq!(a6.elements().len(), 6);
        assert_eq!(
            f.subgroup_of_order(4).unwrap_err(),
            FieldError::NotADivisor {
                d: 4,
                group_order: 6
            }
        );
    }

    #[test]
    fn subgroup_closure_and_inverses() {
        for field in [Field::new(7, 1).unwrap(), Field::new(31, 1).unwrap()] {
            for d in field.subgroup_orders() {
                let a = field.subgroup_of_order(d).unwrap();
                assert!(a.contains(field.one()));
                for &x in a.elements() {
                    assert!(a.contains(field.inv(x).unwrap()));
                    for &y in a.elements() {
                        assert!(a.contains(field.mul(x, y)));
                    }
                }
            }
        }
    }
}
