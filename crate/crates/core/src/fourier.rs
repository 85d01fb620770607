//! Discrete Fourier analysis over F_q and F_q^2, the normalized subgroup
//! measure sigma, the 4-point counting forms, the box norm, and the
//! generalized von-Neumann estimate with exactly computable error terms.
//!
//! Transforms follow the normalized convention
//! `fhat(m) = q^{-n} sum_x chi(-m.x) f(x)` with inversion
//! `f(x) = sum_m fhat(m) chi(x.m)`, so Plancherel reads
//! `sum_m |fhat(m)|^2 = q^{-n} sum_x |f(x)|^2`.
//!
//! Every asymptotic error in the estimates is replaced by the exact spectral
//! quantity `eps_A = max_{m != 0} |sigma_hat(m)|`, which makes each estimate a
//! machine-checkable inequality with no unknown constants.

use num_complex::Complex;

use crate::field::{Field, FieldElement, MultiplicativeSubgroup};
use crate::geometry::GridSet;
use crate::scalar::{real_from_u64, Real};

/// A real-valued function on F_q^2 with values in [-1, 1], stored row-major:
/// entry (a, c) at index a*q + c.
#[derive(Clone, Debug)]
pub struct GridFunction<R: Real> {
    field: Field,
    values: Vec<R>,
}

/// A real-valued function on F_q with values in [-1, 1].
#[derive(Clone, Debug)]
pub struct LineFunction<R: Real> {
    field: Field,
    values: Vec<R>,
}

fn assert_bounded<R: Real>(values: &[R]) {
    let slack = real_from_u64::<R>(1) + R::epsilon() * real_from_u64::<R>(16);
    assert!(
        values.iter().all(|v| v.abs() <= slack),
        "function values must lie in [-1, 1]"
    );
}

impl<R: Real> GridFunction<R> {
    pub fn from_values(field: Field, values: Vec<R>) -> Self {
        assert_eq!(values.len(), field.qs() * field.qs());
        assert_bounded(&values);
        GridFunction { field, values }
    }

    pub fn constant(field: Field, c: R) -> Self {
        let n = field.qs() * field.qs();
        Self::from_values(field, vec![c; n])
    }

    pub fn zero(field: Field) -> Self {
        Self::constant(field, R::zero())
    }

    /// Indicator of a grid set.
    pub fn indicator(set: &GridSet) -> Self {
        let values = set
            .cells()
            .iter()
            .map(|&b| if b { R::one() } else { R::zero() })
            .collect();
        GridFunction {
            field: set.field().clone(),
            values,
        }
    }

    #[inline]
    pub fn field(&self) -> &Field {
        &self.field
    }

    #[inline]
    pub fn values(&self) -> &[R] {
        &self.values
    }

    #[inline]
    pub fn get(&self, a: FieldElement, c: FieldElement) -> R {
        self.values[a.index() as usize * self.field.qs() + c.index() as usize]
    }

    /// Pointwise difference; panics if the result leaves [-1, 1] materially.
    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.field, other.field);
        let values: Vec<R> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| a - b)
            .collect();
        Self::from_values(self.field.clone(), values)
    }

    /// Mean value E_x f(x).
    pub fn mean(&self) -> R {
        let mut s = R::zero();
        for &v in &self.values {
            s += v;
        }
        s / real_from_u64::<R>(self.field.q() * self.field.q())
    }

    /// E_x f(x)^2.
    pub fn mean_square(&self) -> R {
        let mut s = R::zero();
        for &v in &self.values {
            s += v * v;
        }
        s / real_from_u64::<R>(self.field.q() * self.field.q())
    }
}

impl<R: Real> LineFunction<R> {
    pub fn from_values(field: Field, values: Vec<R>) -> Self {
        assert_eq!(values.len(), field.qs());
        assert_bounded(&values);
        LineFunction { field, values }
    }

    pub fn constant(field: Field, c: R) -> Self {
        let n = field.qs();
        Self::from_values(field, vec![c; n])
    }

    #[inline]
    pub fn field(&self) -> &Field {
        &self.field
    }

    #[inline]
    pub fn values(&self) -> &[R] {
        &self.values
    }

    pub fn mean(&self) -> R {
        let mut s = R::zero();
        for &v in &self.values {
            s += v;
        }
        s / real_from_u64::<R>(self.field.q())
    }
}

/// Fourier coefficients of a function on F_q^n, n in {1, 2}.
#[derive(Clone, Debug)]
pub struct SpectralFunction<R: Real> {
    field: Field,
    arity: u8,
    coeffs: Vec<Complex<R>>,
}

impl<R: Real> SpectralFunction<R> {
    #[inline]
    pub fn field(&self) -> &Field {
        &self.field
    }

    #[inline]
    pub fn arity(&self) -> u8 {
        self.arity
    }

    #[inline]
    pub fn coeffs(&self) -> &[Complex<R>] {
        &self.coeffs
    }

    #[inline]
    pub fn get1(&self, m: FieldElement) -> Complex<R> {
        debug_assert_eq!(self.arity, 1);
        self.coeffs[m.index() as usize]
    }

    /// sum_m |fhat(m)|^2, the spectral side of Plancherel.
    pub fn l2_sq(&self) -> R {
        let mut s = R::zero();
        for c in &self.coeffs {
            s += c.norm_sqr();
        }
        s
    }

    pub fn max_offzero(&self) -> R {
        self.coeffs
            .iter()
            .skip(1)
            .map(|c| c.norm())
            .fold(R::zero(), |acc, v| if v > acc { v } else { acc })
    }
}

/// chi(t) for residues t mod p and its conjugate, as lookup tables.
fn char_tables<R: Real>(f: &Field) -> (Vec<Complex<R>>, Vec<Complex<R>>) {
    let roots = f.character_roots::<R>();
    let conj: Vec<Complex<R>> = roots.iter().map(|c| c.conj()).collect();
    (roots, conj)
}

fn dft1_kernel<R: Real>(
    f: &Field,
    values: &[Complex<R>],
    conj: &[Complex<R>],
    normalize: bool,
) -> Vec<Complex<R>> {
    let q = f.qs();
    let inv_q = R::one() / real_from_u64::<R>(f.q());
    let mut out = vec![Complex::new(R::zero(), R::zero()); q];
    for m in 0..q {
        let me = FieldElement(m as u32);
        let mut acc = Complex::new(R::zero(), R::zero());
        for (x, v) in values.iter().enumerate() {
            let t = f.trace(f.mul(me, FieldElement(x as u32))) as usize;
            acc += conj[t] * *v;
        }
        out[m] = if normalize { acc * inv_q } else { acc };
    }
    out
}

/// One-variable transform.
pub fn dft1<R: Real>(f: &LineFunction<R>) -> SpectralFunction<R> {
    let field = f.field().clone();
    let (_, conj) = char_tables::<R>(&field);
    let complex_vals: Vec<Complex<R>> = f
        .values()
        .iter()
        .map(|&v| Complex::new(v, R::zero()))
        .collect();
    let coeffs = dft1_kernel(&field, &complex_vals, &conj, true);
    SpectralFunction {
        field,
        arity: 1,
        coeffs,
    }
}

/// One-variable inversion: f(x) = sum_m fhat(m) chi(x m).
pub fn idft1<R: Real>(s: &SpectralFunction<R>) -> Vec<Complex<R>> {
    assert_eq!(s.arity, 1);
    let f = &s.field;
    let (roots, _) = char_tables::<R>(f);
    let q = f.qs();
    let mut out = vec![Complex::new(R::zero(), R::zero()); q];
    for (x, o) in out.iter_mut().enumerate() {
        let xe = FieldElement(x as u32);
        let mut acc = Complex::new(R::zero(), R::zero());
        for (m, c) in s.coeffs.iter().enumerate() {
            let t = f.trace(f.mul(xe, FieldElement(m as u32))) as usize;
            acc += roots[t] * *c;
        }
        *o = acc;
    }
    out
}

/// Two-variable transform, factored per axis: rows first, then columns.
pub fn dft2<R: Real>(f: &GridFunction<R>) -> SpectralFunction<R> {
    let field = f.field().clone();
    let q = field.qs();
    let (_, conj) = char_tables::<R>(&field);
    // stage 1: transform each row over the second variable
    let mut stage: Vec<Complex<R>> = Vec::with_capacity(q * q);
    for a in 0..q {
        let row: Vec<Complex<R>> = f.values()[a * q..(a + 1) * q]
            .iter()
            .map(|&v| Complex::new(v, R::zero()))
            .collect();
        stage.extend(dft1_kernel(&field, &row, &conj, true));
    }
    // stage 2: transform each column over the first variable
    let mut coeffs = vec![Complex::new(R::zero(), R::zero()); q * q];
    let mut col = vec![Complex::new(R::zero(), R::zero()); q];
    for m2 in 0..q {
        for a in 0..q {
            col[a] = stage[a * q + m2];
        }
        let tr = dft1_kernel(&field, &col, &conj, true);
        for m1 in 0..q {
            coeffs[m1 * q + m2] = tr[m1];
        }
    }
    SpectralFunction {
        field,
        arity: 2,
        coeffs,
    }
}

/// Two-variable inversion.
pub fn idft2<R: Real>(s: &SpectralFunction<R>) -> Vec<Complex<R>> {
    assert_eq!(s.arity, 2);
    let f = s.field.clone();
    let q = f.qs();
    let (roots, _) = char_tables::<R>(&f);
    let inv_kernel = |vals: &[Complex<R>]| -> Vec<Complex<R>> {
        let mut out = vec![Complex::new(R::zero(), R::zero()); q];
        for (x, o) in out.iter_mut().enumerate() {
            let xe = FieldElement(x as u32);
            let mut acc = Complex::new(R::zero(), R::zero());
            for (m, c) in vals.iter().enumerate() {
                let t = f.trace(f.mul(xe, FieldElement(m as u32))) as usize;
                acc += roots[t] * *c;
            }
            *o = acc;
        }
        out
    };
    // invert columns (first variable), then rows (second variable)
    let mut stage = vec![Complex::new(R::zero(), R::zero()); q * q];
    let mut col = vec![Complex::new(R::zero(), R::zero()); q];
    for m2 in 0..q {
        for m1 in 0..q {
            col[m1] = s.coeffs[m1 * q + m2];
        }
        let inv = inv_kernel(&col);
        for x1 in 0..q {
            stage[x1 * q + m2] = inv[x1];
        }
    }
    let mut out = vec![Complex::new(R::zero(), R::zero()); q * q];
    for x1 in 0..q {
        let inv = inv_kernel(&stage[x1 * q..(x1 + 1) * q]);
        out[x1 * q..(x1 + 1) * q].copy_from_slice(&inv);
    }
    out
}

/// The normalized measure of a multiplicative subgroup A: sigma(x) = q/|A| on
/// A and 0 elsewhere, so E_x sigma(x) = 1, together with its spectrum and the
/// exact off-zero spectral maximum that drives every error bound.
#[derive(Clone, Debug)]
pub struct SubgroupMeasure<R: Real> {
    field: Field,
    subgroup_order: u64,
    support: Vec<bool>,
    support_elems: Vec<FieldElement>,
    weight: R,
    spectrum: SpectralFunction<R>,
    max_offzero: R,
    /// max_offzero * |A| / sqrt(q): the normalized character-sum constant.
    normalized_constant: R,
    size_condition: bool,
}

impl<R: Real> SubgroupMeasure<R> {
    pub fn new(field: &Field, a: &MultiplicativeSubgroup) -> Self {
        let q = field.qs();
        let weight = real_from_u64::<R>(field.q()) / real_from_u64::<R>(a.order());
        let mut support = vec![false; q];
        let mut values = vec![R::zero(); q];
        for &e in a.elements() {
            support[e.index() as usize] = true;
            values[e.index() as usize] = weight;
        }
        // sigma exceeds 1 pointwise, so transform the raw vector directly
        let (_, conj) = char_tables::<R>(field);
        let complex_vals: Vec<Complex<R>> =
            values.iter().map(|&v| Complex::new(v, R::zero())).collect();
        let coeffs = dft1_kernel(field, &complex_vals, &conj, true);
        let spectrum = SpectralFunction {
            field: field.clone(),
            arity: 1,
            coeffs,
        };
        let max_offzero = spectrum.max_offzero();
        let normalized_constant =
            max_offzero * real_from_u64::<R>(a.order()) / real_from_u64::<R>(field.q()).sqrt();
        SubgroupMeasure {
            field: field.clone(),
            subgroup_order: a.order(),
            support,
            support_elems: a.elements().to_vec(),
            weight,
            spectrum,
            max_offzero,
            normalized_constant,
            size_condition: a.size_condition_met(field.q()),
        }
    }

    #[inline]
    pub fn field(&self) -> &Field {
        &self.field
    }
    #[inline]
    pub fn subgroup_order(&self) -> u64 {
        self.subgroup_order
    }
    #[inline]
    pub fn weight(&self) -> R {
        self.weight
    }
    #[inline]
    pub fn value(&self, x: FieldElement) -> R {
        if self.support[x.index() as usize] {
            self.weight
        } else {
            R::zero()
        }
    }
    pub fn support_elements(&self) -> &[FieldElement] {
        &self.support_elems
    }
    pub fn spectrum(&self) -> &SpectralFunction<R> {
        &self.spectrum
    }
    /// eps_A = max_{m != 0} |sigma_hat(m)|, the exact error unit.
    #[inline]
    pub fn max_offzero(&self) -> R {
        self.max_offzero
    }
    pub fn normalized_constant(&self) -> R {
        self.normalized_constant
    }
    /// Whether |A|^3 >= q^2 holds; reported, never enforced.
    pub fn size_condition(&self) -> bool {
        self.size_condition
    }

    /// Serializable summary of the spectral profile.
    pub fn summary(&self) -> SpectralSummary {
        SpectralSummary {
            q: self.field.q(),
            subgroup_order: self.subgroup_order,
            sigma_zero: crate::scalar::real_to_f64(self.spectrum.coeffs()[0].norm()),
            max_offzero: crate::scalar::real_to_f64(self.max_offzero),
            normalized_constant: crate::scalar::real_to_f64(self.normalized_constant),
            size_condition: self.size_condition,
        }
    }
}

/// Spectral profile of a subgroup measure, for reports.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize, PartialEq)]
pub struct SpectralSummary {
    pub q: u64,
    pub subgroup_order: u64,
    pub sigma_zero: f64,
    pub max_offzero: f64,
    pub normalized_constant: f64,
    pub size_condition: bool,
}

/// The plain 4-point counting form
/// M(f1, f2, f3, f4) = E_{a,b,c,d} f1(a,c) f2(a,d) f3(b,c) f4(b,d),
/// evaluated in O(q^3) by pairing rows over (a, b).
pub fn rect_form<R: Real>(
    f1: &GridFunction<R>,
    f2: &GridFunction<R>,
    f3: &GridFunction<R>,
    f4: &GridFunction<R>,
) -> R {
    let field = f1.field();
    let q = field.qs();
    let inv_q4 = R::one() / real_from_u64::<R>(field.q().pow(4));
    let mut total = R::zero();
    for a in 0..q {
        let r1 = &f1.values()[a * q..(a + 1) * q];
        let r2 = &f2.values()[a * q..(a + 1) * q];
        for b in 0..q {
            let r3 = &f3.values()[b * q..(b + 1) * q];
            let r4 = &f4.values()[b * q..(b + 1) * q];
            let mut p13 = R::zero();
            let mut p24 = R::zero();
            for c in 0..q {
                p13 += r1[c] * r3[c];
                p24 += r2[c] * r4[c];
            }
            total += p13 * p24;
        }
    }
    total * inv_q4
}

/// Box norm: M(f, f, f, f)^{1/4}. The diagonal form is a sum of squares, so
/// it is clamped at zero before the root.
pub fn box_norm<R: Real>(f: &GridFunction<R>) -> R {
    let m = rect_form(f, f, f, f);
    let m = if m > R::zero() { m } else { R::zero() };
    m.sqrt().sqrt()
}

/// The sigma-weighted counting form
/// N(f1..f4) = E_{a,b,c,d} f1(a,c) f2(a,d) f3(b,c) f4(b,d) sigma(a-b) sigma(c-d),
/// by direct evaluation of the quadruple sum.
pub fn weighted_rect_form_naive<R: Real>(
    f1: &GridFunction<R>,
    f2: &GridFunction<R>,
    f3: &GridFunction<R>,
    f4: &GridFunction<R>,
    sigma: &SubgroupMeasure<R>,
) -> R {
    let field = f1.field();
    let q = field.qs();
    let mut svals = vec![R::zero(); q];
    for x in 0..q {
        svals[x] = sigma.value(FieldElement(x as u32));
    }
    let inv_q4 = R::one() / real_from_u64::<R>(field.q().pow(4));
    let mut total = R::zero();
    for a in 0..q {
        let r1 = &f1.values()[a * q..(a + 1) * q];
        let r2 = &f2.values()[a * q..(a + 1) * q];
        for b in 0..q {
            let sab = svals[field
                .sub(FieldElement(a as u32), FieldElement(b as u32))
                .index() as usize];
            if sab == R::zero() {
                continue;
            }
            let r3 = &f3.values()[b * q..(b + 1) * q];
            let r4 = &f4.values()[b * q..(b + 1) * q];
            let mut inner = R::zero();
            for c in 0..q {
                for d in 0..q {
                    let scd = svals[field
                        .sub(FieldElement(c as u32), FieldElement(d as u32))
                        .index() as usize];
                    if scd == R::zero() {
                        continue;
                    }
                    inner += r1[c] * r2[d] * r3[c] * r4[d] * scd;
                }
            }
            total += sab * inner;
        }
    }
    total * inv_q4
}

/// Same value as the naive form, evaluated over the support of sigma only:
/// with a = b + s and c = d + t for s, t in A, the weights become the
/// constant (q/|A|)^2, leaving O(q^2 |A|^2) multiply-adds.
pub fn weighted_rect_form<R: Real>(
    f1: &GridFunction<R>,
    f2: &GridFunction<R>,
    f3: &GridFunction<R>,
    f4: &GridFunction<R>,
    sigma: &SubgroupMeasure<R>,
) -> R {
    let field = f1.field();
    let q = field.qs();
    let mut total = R::zero();
    let mut row_shift = vec![0usize; q];
    let mut col_shift = vec![0usize; q];
    for &s in sigma.support_elements() {
        for (b, rs) in row_shift.iter_mut().enumerate() {
            *rs = field.add(FieldElement(b as u32), s).index() as usize;
        }
        for &t in sigma.support_elements() {
            for (d, cs) in col_shift.iter_mut().enumerate() {
                *cs = field.add(FieldElement(d as u32), t).index() as usize;
            }
            let mut part = R::zero();
            for b in 0..q {
                let a = row_shift[b];
                let r1 = &f1.values()[a * q..(a + 1) * q];
                let r2 = &f2.values()[a * q..(a + 1) * q];
                let r3 = &f3.values()[b * q..(b + 1) * q];
                let r4 = &f4.values()[b * q..(b + 1) * q];
                for d in 0..q {
                    let c = col_shift[d];
                    part += r1[c] * r2[d] * r3[c] * r4[d];
                }
            }
            total += part;
        }
    }
    let w2 = sigma.weight() * sigma.weight();
    total * w2 / real_from_u64::<R>(field.q().pow(4))
}

/// Both sides of the weighted/plain mean comparison for one-variable
/// functions. The gap is an exact spectral identity:
/// E_{x,y} f(x) g(y) sigma(x-y) - (E f)(E g)
///   = sum_{m != 0} sigma_hat(m) conj(fhat(m)) ghat(m),
/// and is bounded by eps_A ||fhat||_2 ||ghat||_2.
#[derive(Clone, Debug)]
pub struct PairGap<R: Real> {
    pub weighted_mean: R,
    pub plain_mean: R,
    pub gap: R,
    pub spectral_gap: R,
    pub bound: R,
}

pub fn sigma_pair_gap<R: Real>(
    f: &LineFunction<R>,
    g: &LineFunction<R>,
    sigma: &SubgroupMeasure<R>,
) -> PairGap<R> {
    let field = f.field();
    let q = field.qs();
    // weighted mean over the support of sigma
    let mut acc = R::zero();
    for &s in sigma.support_elements() {
        for y in 0..q {
            let x = field.add(FieldElement(y as u32), s).index() as usize;
            acc += f.values()[x] * g.values()[y];
        }
    }
    let weighted_mean = acc * sigma.weight() / real_from_u64::<R>(field.q() * field.q());
    let plain_mean = f.mean() * g.mean();
    let gap = (weighted_mean - plain_mean).abs();

    let fh = dft1(f);
    let gh = dft1(g);
    let mut spectral = Complex::new(R::zero(), R::zero());
    for m in 1..q {
        spectral += sigma.spectrum().coeffs()[m] * fh.coeffs()[m].conj() * gh.coeffs()[m];
    }
    let spectral_gap = spectral.norm();
    let bound = sigma.max_offzero() * fh.l2_sq().sqrt() * gh.l2_sq().sqrt();
    PairGap {
        weighted_mean,
        plain_mean,
        gap,
        spectral_gap,
        bound,
    }
}

/// Verified von-Neumann estimate: with e1 = 2 eps_A + eps_A^2 the per-step
/// error of the weighted/plain comparison for [-1,1]-valued functions, two
/// Cauchy-Schwarz steps give
/// |N(f1..f4)|^4 <= M(fj, fj, fj, fj) + E_acc for every j,
/// where E_acc = 3 e1 + e1^2. Consequently
/// |N| <= min_j ||fj||_box + E_acc^{1/4}.
#[derive(Clone, Debug)]
pub struct VonNeumannReport<R: Real> {
    pub n_value: R,
    pub eps_a: R,
    pub step_error: R,
    pub accumulated_error: R,
    /// Per-argument diagonal forms M(fj, fj, fj, fj).
    pub diagonal_forms: [R; 4],
    pub box_norms: [R; 4],
    pub min_box: R,
    pub lemma_bound: R,
}

impl<R: Real> VonNeumannReport<R> {
    /// |N|^4 <= M_j + E_acc for every j, within tol.
    pub fn fourth_power_holds(&self, tol: R) -> bool {
        let n4 = self.n_value.abs().powi(4);
        self.diagonal_forms
            .iter()
            .all(|&m| n4 <= m + self.accumulated_error + tol)
    }

    /// |N| <= min_j box_j + E_acc^{1/4}, within tol.
    pub fn lemma_holds(&self, tol: R) -> bool {
        self.n_value.abs() <= self.lemma_bound + tol
    }
}

pub fn von_neumann_check<R: Real>(
    f1: &GridFunction<R>,
    f2: &GridFunction<R>,
    f3: &GridFunction<R>,
    f4: &GridFunction<R>,
    sigma: &SubgroupMeasure<R>,
) -> VonNeumannReport<R> {
    let n_value = weighted_rect_form(f1, f2, f3, f4, sigma);
    let eps_a = sigma.max_offzero();
    let step_error = eps_a + eps_a + eps_a * eps_a;
    let accumulated_error = step_error + step_error + step_error + step_error * step_error;
    let diagonal_forms = [
        rect_form(f1, f1, f1, f1),
        rect_form(f2, f2, f2, f2),
        rect_form(f3, f3, f3, f3),
        rect_form(f4, f4, f4, f4),
    ];
    let box_norms = [box_norm(f1), box_norm(f2), box_norm(f3), box_norm(f4)];
    let min_box = box_norms
        .iter()
        .fold(R::infinity(), |acc, &v| if v < acc { v } else { acc });
    let lemma_bound = min_box + accumulated_error.sqrt().sqrt();
    VonNeumannReport {
        n_value,
        eps_a,
        step_error,
        accumulated_error,
        diagonal_forms,
        box_norms,
        min_box,
        lemma_bound,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn line<R: Real>(f: &Field, vals: &[f64]) -> LineFunction<R> {
        LineFunction::from_values(
            f.clone(),
            vals.iter()
                .map(|&v| crate::scalar::real_from_f64(v))
                .collect(),
        )
    }

    #[test]
    fn dft_point_mass_and_constant() {
        let f = Field::new(7, 1).unwrap();
        let mut vals = vec![0.0f64; 7];
        vals[0] = 1.0;
        let pm = line::<f64>(&f, &vals);
        let s = dft1(&pm);
        for c in s.coeffs() {
            assert!((c - Complex::new(1.0 / 7.0, 0.0)).norm() < 1e-12);
        }
        let ones = LineFunction::constant(f.clone(), 1.0f64);
        let s = dft1(&ones);
        assert!((s.coeffs()[0] - Complex::new(1.0, 0.0)).norm() < 1e-12);
        for c in &s.coeffs()[1..] {
            assert!(c.norm() < 1e-12);
        }
    }

    #[test]
    fn dft_roundtrip_and_plancherel() {
        for field in [Field::new(7, 1).unwrap(), Field::new(3, 3).unwrap()] {
            let mut rng = ChaCha8Rng::seed_from_u64(field.q());
            // one variable
            let f = sample::sign_line::<f64>(&field, &mut rng);
            let s = dft1(&f);
            let back = idft1(&s);
            for (orig, b) in f.values().iter().zip(&back) {
                assert!((b.re - orig).abs() < 1e-9 && b.im.abs() < 1e-9);
            }
            let direct: f64 = f.values().iter().map(|v| v * v).sum::<f64>() / field.q() as f64;
            assert!((s.l2_sq() - direct).abs() < 1e-9);

            // two variables
            let g = sample::bounded_grid::<f64>(&field, &mut rng);
            let s2 = dft2(&g);
            let back2 = idft2(&s2);
            for (orig, b) in g.values().iter().zip(&back2) {
                assert!((b.re - orig).abs() < 1e-9 && b.im.abs() < 1e-9);
            }
            let direct2: f64 =
                g.values().iter().map(|v| v * v).sum::<f64>() / (field.q() * field.q()) as f64;
            assert!((s2.l2_sq() - direct2).abs() < 1e-9);
        }
    }

    #[test]
    fn dft_works_in_single_precision() {
        let field = Field::new(7, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = sample::sign_line::<f32>(&field, &mut rng);
        let s = dft1(&f);
        let back = idft1(&s);
        for (orig, b) in f.values().iter().zip(&back) {
            assert!((b.re - orig).abs() < 1e-3);
        }
    }

    #[test]
    fn sigma_spectrum_small_cases() {
        let f3 = Field::new(3, 1).unwrap();
        let a = f3.full_multiplicative_group(); // {1, 2}
        let sigma = SubgroupMeasure::<f64>::new(&f3, &a);
        assert!((sigma.spectrum().coeffs()[0].norm() - 1.0).abs() < 1e-12);
        assert!((sigma.spectrum().coeffs()[1].norm() - 0.5).abs() < 1e-12);

        for q in [7u64, 11] {
            let f = Field::new(q, 1).unwrap();
            let a = f.full_multiplicative_group();
            let sigma = SubgroupMeasure::<f64>::new(&f, &a);
            for m in 1..f.qs() {
                let c = sigma.spectrum().coeffs()[m].norm();
                assert!((c - 1.0 / (q as f64 - 1.0)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sigma_zero_coefficient_and_mean() {
        for q in [7u64, 31, 43] {
            let f = Field::new(q, 1).unwrap();
            for d in f.subgroup_orders() {
                let a = f.subgroup_of_order(d).unwrap();
                let sigma = SubgroupMeasure::<f64>::new(&f, &a);
                let zero = sigma.spectrum().coeffs()[0];
                assert!((zero - Complex::new(1.0, 0.0)).norm() < 1e-9);
                let mean: f64 = (0..f.qs())
                    .map(|i| sigma.value(FieldElement(i as u32)))
                    .sum::<f64>()
                    / q as f64;
                assert!((mean - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rect_form_basics() {
        let f = Field::new(7, 1).unwrap();
        let c = GridFunction::constant(f.clone(), 0.5f64);
        let m = rect_form(&c, &c, &c, &c);
        assert!((m - 0.0625).abs() < 1e-12);
        assert!((box_norm(&c) - 0.5).abs() < 1e-12);

        let full = GridFunction::<f64>::indicator(&GridSet::full(f.clone()));
        assert!((rect_form(&full, &full, &full, &full) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rect_form_bounded_by_box_norms() {
        let f = Field::new(11, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let fs: Vec<GridFunction<f64>> =
                (0..4).map(|_| sample::bounded_grid(&f, &mut rng)).collect();
            let m = rect_form(&fs[0], &fs[1], &fs[2], &fs[3]);
            let min_box = fs.iter().map(box_norm).fold(f64::INFINITY, f64::min);
            assert!(m <= min_box + 1e-9, "m={m} min_box={min_box}");
            // Cauchy-Schwarz factorization along the proof line
            let lhs = m * m;
            let rhs = rect_form(&fs[0], &fs[0], &fs[2], &fs[2])
                * rect_form(&fs[1], &fs[1], &fs[3], &fs[3]);
            assert!(lhs <= rhs + 1e-9);
        }
    }

    #[test]
    fn indicator_form_matches_exact_axis_count() {
        let f = Field::new(7, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let s = sample::grid_subset(&f, 20, &mut rng);
            let ind = GridFunction::<f64>::indicator(&s);
            let m = rect_form(&ind, &ind, &ind, &ind);
            let exact = crate::energy::rect_count_axis(&s) as f64 / (f.q() as f64).powi(4);
            assert!((m - exact).abs() < 1e-9);
            let density = s.len() as f64 / (f.q() * f.q()) as f64;
            assert!(m >= density.powi(4) - 1e-12);
        }
    }

    #[test]
    fn weighted_form_modes_agree() {
        for q in [7u64, 11] {
            let f = Field::new(q, 1).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(q);
            for d in f.subgroup_orders() {
                let a = f.subgroup_of_order(d).unwrap();
                let sigma = SubgroupMeasure::<f64>::new(&f, &a);
                let fs: Vec<GridFunction<f64>> =
                    (0..4).map(|_| sample::bounded_grid(&f, &mut rng)).collect();
                let naive = weighted_rect_form_naive(&fs[0], &fs[1], &fs[2], &fs[3], &sigma);
                let fast = weighted_rect_form(&fs[0], &fs[1], &fs[2], &fs[3], &sigma);
                let scale = naive.abs().max(1e-12);
                assert!(
                    (naive - fast).abs() / scale < 1e-6,
                    "q={q} d={d} naive={naive} fast={fast}"
                );
            }
        }
    }

    #[test]
    fn weighted_form_of_ones_is_one() {
        let f = Field::new(11, 1).unwrap();
        let ones = GridFunction::constant(f.clone(), 1.0f64);
        for d in f.subgroup_orders() {
            let a = f.subgroup_of_order(d).unwrap();
            let sigma = SubgroupMeasure::<f64>::new(&f, &a);
            let n = weighted_rect_form(&ones, &ones, &ones, &ones, &sigma);
            assert!((n - 1.0).abs() < 1e-9, "d={d} n={n}");
        }
    }

    #[test]
    fn pair_gap_is_exact_spectral_identity() {
        let f = Field::new(7, 1).unwrap();
        let a = f.subgroup_of_order(3).unwrap();
        let sigma = SubgroupMeasure::<f64>::new(&f, &a);

        let ones = LineFunction::constant(f.clone(), 1.0f64);
        let g0 = sigma_pair_gap(&ones, &ones, &sigma);
        assert!(g0.gap < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let u = sample::sign_line::<f64>(&f, &mut rng);
            let v = sample::sign_line::<f64>(&f, &mut rng);
            let g = sigma_pair_gap(&u, &v, &sigma);
            assert!((g.gap - g.spectral_gap).abs() < 1e-9);
            assert!(g.gap <= g.bound + 1e-9);
            assert!(g.bound <= sigma.max_offzero() + 1e-9);
        }
    }

    #[test]
    fn von_neumann_zero_and_random() {
        let f = Field::new(11, 1).unwrap();
        let a = f.subgroup_of_order(5).unwrap();
        let sigma = SubgroupMeasure::<f64>::new(&f, &a);
        let z = GridFunction::zero(f.clone());
        let r = von_neumann_check(&z, &z, &z, &z, &sigma);
        assert_eq!(r.n_value, 0.0);
        assert!(r.fourth_power_holds(1e-9));

        // random indicators at the largest proper subgroup of each q
        for (q, d) in [(7u64, 3u64), (11, 5), (19, 9)] {
            let f = Field::new(q, 1).unwrap();
            let a = f.subgroup_of_order(d).unwrap();
            let sigma = SubgroupMeasure::<f64>::new(&f, &a);
            let mut rng = ChaCha8Rng::seed_from_u64(6 + q);
            for _ in 0..10 {
                let s = sample::grid_subset(&f, (q * q / 2) as usize, &mut rng);
                let ind = GridFunction::<f64>::indicator(&s);
                let r = von_neumann_check(&ind, &ind, &ind, &ind, &sigma);
                assert!(r.fourth_power_holds(1e-9), "q={q}");
                assert!(r.lemma_holds(1e-9), "q={q}");
            }
        }
    }

    #[test]
    fn plancherel_sweep_over_supported_orders() {
        // every standard-regime field order up to the desk-scale ceiling
        let qs: Vec<(u64, u32)> = vec![
            (3, 1),
            (7, 1),
            (11, 1),
            (19, 1),
            (23, 1),
            (3, 3),
            (31, 1),
            (43, 1),
            (47, 1),
            (59, 1),
            (67, 1),
            (71, 1),
            (79, 1),
            (83, 1),
        ];
        for (p, k) in qs {
            let field = Field::new(p, k).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(field.q());
            let line = sample::sign_line::<f64>(&field, &mut rng);
            let s1 = dft1(&line);
            let d1: f64 = line.values().iter().map(|v| v * v).sum::<f64>() / field.q() as f64;
            assert!((s1.l2_sq() - d1).abs() < 1e-9, "q={}", field.q());
            let back = idft1(&s1);
            for (orig, b) in line.values().iter().zip(&back) {
                assert!((b.re - orig).abs() < 1e-9 && b.im.abs() < 1e-9);
            }

            let grid = sample::bounded_grid::<f64>(&field, &mut rng);
            let s2 = dft2(&grid);
            let d2: f64 =
                grid.values().iter().map(|v| v * v).sum::<f64>() / (field.q() * field.q()) as f64;
            assert!((s2.l2_sq() - d2).abs() < 1e-9, "q={}", field.q());
        }
    }

    #[test]
    fn spectral_summary_serializes() {
        let f = Field::new(7, 1).unwrap();
        let a = f.subgroup_of_order(3).unwrap();
        let sigma = SubgroupMeasure::<f64>::new(&f, &a);
        let v = serde_json::to_value(sigma.summary()).unwrap();
        assert_eq!(v["q"], 7);
        assert_eq!(v["subgroup_order"], 3);
        assert!(v["max_offzero"].is_f64());
        assert!(v["normalized_constant"].is_f64());
    }
}
