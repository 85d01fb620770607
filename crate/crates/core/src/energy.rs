//! Exact counting of energy tuples and rectangles.
//!
//! An energy tuple is an ordered (a, b, c, d) in X^4 with a + b = c + d; it is
//! non-trivial when the four points are pairwise distinct. All counts are
//! over ordered tuples. The brute-force O(|X|^4) counters are shipped
//! functions, not test-only code, so they can be run on demand as oracles.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::field::{Field, FieldElement, MultiplicativeSubgroup};
use crate::geometry::{
    add3, dot2, is_rectangle_quad, project, sub2, GridSet, ParaboloidSet, Point2, Point3,
};

/// Energy counts for a paraboloid set. `total` is the number of energy
/// tuples, `nontrivial` the pairwise-distinct ones, and `by_sum` optionally
/// records the representation count r(s) for every realized pair sum.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct EnergyReport {
    pub total: u64,
    pub nontrivial: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub by_sum: Option<BTreeMap<String, u64>>,
}

/// Ordered rectangle quadruple counts over a plane set.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct RectangleCount {
    pub ordered_total: u64,
    pub degenerate: u64,
    pub nondegenerate: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub by_sides: Option<BTreeMap<String, u64>>,
}

impl RectangleCount {
    /// Each geometric rectangle with distinct vertices appears as 8 ordered
    /// quadruples (4 starting diagonal choices times 2 orientations per pair).
    pub fn unordered_nondegenerate(&self) -> u64 {
        debug_assert_eq!(self.nondegenerate % 8, 0);
        self.nondegenerate / 8
    }
}

/// Restriction on the side quadrances of counted rectangles.
#[derive(Clone, Copy, Debug)]
pub enum SideFilter<'a> {
    /// Unordered pair {lambda, beta} must match exactly.
    Pair(FieldElement, FieldElement),
    /// Both side quadrances must lie in the subgroup.
    InSubgroup(&'a MultiplicativeSubgroup),
}

#[inline]
fn sum_index(f: &Field, a: Point3, b: Point3) -> usize {
    let q = f.qs();
    let s = add3(f, a, b);
    (s.x.index() as usize * q + s.y.index() as usize) * q + s.z.index() as usize
}

fn sum_key(f: &Field, a: Point3, b: Point3) -> String {
    let s = add3(f, a, b);
    format!("{},{},{}", s.x.index(), s.y.index(), s.z.index())
}

/// E(X) = sum over pair sums s of r(s)^2, where r(s) counts ordered pairs
/// with a + b = s. Agrees with the O(|X|^4) brute-force count.
pub fn energy_count(x: &ParaboloidSet) -> u64 {
    let f = x.field();
    let q = f.qs();
    let mut r = vec![0u32; q * q * q];
    for &a in x.points() {
        for &b in x.points() {
            r[sum_index(f, a, b)] += 1;
        }
    }
    r.iter().map(|&c| (c as u64) * (c as u64)).sum()
}

/// Number of energy tuples with a, b, c, d pairwise distinct.
///
/// Per sum s, the points a with s - a in X come in pairs {a, s - a} once the
/// self-paired point (2a = s) is dropped; with m remaining points each first
/// coordinate admits m - 2 partners, giving m(m - 2) ordered tuples.
pub fn energy_nontrivial(x: &ParaboloidSet) -> u64 {
    let f = x.field();
    let q = f.qs();
    let mut r = vec![0u32; q * q * q];
    for &a in x.points() {
        for &b in x.points() {
            r[sum_index(f, a, b)] += 1;
        }
    }
    let two_inv = if f.p() != 2 {
        Some(f.inv(f.element(2)).unwrap())
    } else {
        None
    };
    let mut total = 0u64;
    // sparse walk over the realized sums, visiting each once
    let mut seen = vec![false; q * q * q];
    for &a in x.points() {
        for &b in x.points() {
            let idx = sum_index(f, a, b);
            if seen[idx] {
                continue;
            }
            seen[idx] = true;
            let m = r[idx] as u64;
            if m < 2 {
                continue;
            }
            let s = add3(f, a, b);
            // unique self-paired candidate a0 with 2 a0 = s
            let self_paired = match two_inv {
                Some(h) => {
                    let a0 = Point3::new(f.mul(s.x, h), f.mul(s.y, h), f.mul(s.z, h));
                    u64::from(x.contains(a0))
                }
                None => 0,
            };
            let m_free = m - self_paired;
            if m_free >= 2 {
                total += m_free * (m_free - 2);
            }
        }
    }
    total
}

/// Full energy report; `with_sums` additionally materializes r(s).
pub fn energy_report(x: &ParaboloidSet, with_sums: bool) -> EnergyReport {
    let by_sum = with_sums.then(|| {
        let f = x.field();
        let mut map: BTreeMap<String, u64> = BTreeMap::new();
        for &a in x.points() {
            for &b in x.points() {
                *map.entry(sum_key(f, a, b)).or_insert(0) += 1;
            }
        }
        map
    });
    EnergyReport {
        total: energy_count(x),
        nontrivial: energy_nontrivial(x),
        by_sum,
    }
}

/// Definitional O(|X|^4) energy count.
pub fn energy_count_bruteforce(x: &ParaboloidSet) -> u64 {
    let f = x.field();
    let pts = x.points();
    let mut total = 0u64;
    for &a in pts {
        for &b in pts {
            let s = add3(f, a, b);
            for &c in pts {
                for &d in pts {
                    if add3(f, c, d) == s {
                        total += 1;
                    }
                }
            }
        }
    }
    total
}

/// Definitional O(|X|^4) non-trivial energy count.
pub fn energy_nontrivial_bruteforce(x: &ParaboloidSet) -> u64 {
    nontrivial_energy_tuples(x).len() as u64
}

/// All non-trivial energy tuples in canonical (lexicographic) order.
pub fn nontrivial_energy_tuples(x: &ParaboloidSet) -> Vec<[Point3; 4]> {
    let f = x.field();
    let pts = x.points();
    let mut out = Vec::new();
    for &a in pts {
        for &b in pts {
            if b == a {
                continue;
            }
            let s = add3(f, a, b);
            for &c in pts {
                if c == a || c == b {
                    continue;
                }
                let d = sub3_point(f, s, c);
                if d == a || d == b || d == c {
                    continue;
                }
                if x.contains(d) {
                    out.push([a, b, c, d]);
                }
            }
        }
    }
    out
}

#[inline]
fn sub3_point(f: &Field, s: Point3, c: Point3) -> Point3 {
    Point3::new(f.sub(s.x, c.x), f.sub(s.y, c.y), f.sub(s.z, c.z))
}

/// Axis-aligned rectangle count including degenerate terms:
/// sum over a, b, c, d of S(a,c) S(a,d) S(b,c) S(b,d), computed in O(q^3)
/// from column-pair intersection counts.
pub fn rect_count_axis(s: &GridSet) -> u64 {
    let f = s.field();
    let q = f.qs();
    let cells = s.cells();
    let mut total = 0u64;
    for a in 0..q {
        let row_a = &cells[a * q..(a + 1) * q];
        for b in 0..q {
            let row_b = &cells[b * q..(b + 1) * q];
            let mut common = 0u64;
            for c in 0..q {
                common += u64::from(row_a[c] && row_b[c]);
            }
            total += common * common;
        }
    }
    total
}

/// Degenerate part of the axis count (a = b or c = d terms):
/// sum of squared row sizes plus squared column sizes minus |S|.
pub fn rect_count_axis_degenerate(s: &GridSet) -> u64 {
    let f = s.field();
    let q = f.qs();
    let cells = s.cells();
    let mut rows = vec![0u64; q];
    let mut cols = vec![0u64; q];
    for a in 0..q {
        for c in 0..q {
            if cells[a * q + c] {
                rows[a] += 1;
                cols[c] += 1;
            }
        }
    }
    let r2: u64 = rows.iter().map(|&r| r * r).sum();
    let c2: u64 = cols.iter().map(|&c| c * c).sum();
    r2 + c2 - s.len() as u64
}

/// Ordered rectangle quadruples (x, z, y, t) in S^4, split into degenerate
/// (a zero side quadrance) and non-degenerate, with optional side filtering.
/// Iterates (x, z, y) with the orthogonality test and completes t = x + y - z.
pub fn rect_count_all(
    s: &GridSet,
    filter: Option<SideFilter<'_>>,
    collect_sides: bool,
) -> RectangleCount {
    let f = s.field();
    let pts: Vec<Point2> = s.points().collect();
    let mut ordered_total = 0u64;
    let mut degenerate = 0u64;
    let mut nondegenerate = 0u64;
    let mut by_sides: BTreeMap<String, u64> = BTreeMap::new();
    for &x in &pts {
        for &z in &pts {
            let xz = sub2(f, x, z);
            for &y in &pts {
                let zy = sub2(f, y, z);
                if dot2(f, xz, zy) != f.zero() {
                    continue;
                }
                let t = Point2::new(f.sub(f.add(x.x, y.x), z.x), f.sub(f.add(x.y, y.y), z.y));
                if !s.contains(t) {
                    continue;
                }
                let lambda = dot2(f, xz, xz);
                let beta = dot2(f, zy, zy);
                let keep = match filter {
                    None => true,
                    Some(SideFilter::Pair(l, b)) => {
                        (lambda == l && beta == b) || (lambda == b && beta == l)
                    }
                    Some(SideFilter::InSubgroup(a)) => {
                        lambda != f.zero()
                            && beta != f.zero()
                            && a.contains(lambda)
                            && a.contains(beta)
                    }
                };
                if !keep {
                    continue;
                }
                ordered_total += 1;
                if lambda == f.zero() || beta == f.zero() {
                    degenerate += 1;
                } else {
                    nondegenerate += 1;
                    if collect_sides {
                        let (lo, hi) = if lambda <= beta {
                            (lambda, beta)
                        } else {
                            (beta, lambda)
                        };
                        *by_sides
                            .entry(format!("{},{}", lo.index(), hi.index()))
                            .or_insert(0) += 1;
                    }
                }
            }
        }
    }
    RectangleCount {
        ordered_total,
        degenerate,
        nondegenerate,
        by_sides: collect_sides.then_some(by_sides),
    }
}

/// Axis-aligned counts against a subgroup A:
/// `diff_in_subgroup` counts (a, b, c, d) with the four cells in S and both
/// coordinate differences a - b, c - d in A (the sigma-weighted form times
/// q^2 |A|^2 / q^4 counts exactly these);
/// `sides_in_subgroup` counts those with both side quadrances (a-b)^2,
/// (c-d)^2 in A, a superset since A is closed under squaring.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
pub struct AxisSubgroupCount {
    pub diff_in_subgroup: u64,
    pub sides_in_subgroup: u64,
}

pub fn axis_subgroup_rect_count(s: &GridSet, a: &MultiplicativeSubgroup) -> AxisSubgroupCount {
    let f = s.field();
    let q = f.qs();
    let cells = s.cells();
    let diff_set: Vec<FieldElement> = a.elements().to_vec();
    let side_set: Vec<FieldElement> = f
        .elements()
        .filter(|&d| d != f.zero() && a.contains(f.square(d)))
        .collect();
    let count_for = |dirs: &[FieldElement]| -> u64 {
        let mut total = 0u64;
        for &sdiff in dirs {
            // shifted row index: a = b + s
            let mut row_shift = vec![0usize; q];
            for b in 0..q {
                row_shift[b] = f.add(FieldElement(b as u32), sdiff).index() as usize;
            }
            for &tdiff in dirs {
                let mut col_shift = vec![0usize; q];
                for d in 0..q {
                    col_shift[d] = f.add(FieldElement(d as u32), tdiff).index() as usize;
                }
                for b in 0..q {
                    let ra = &cells[row_shift[b] * q..row_shift[b] * q + q];
                    let rb = &cells[b * q..b * q + q];
                    for d in 0..q {
                        let dc = col_shift[d];
                        total += u64::from(ra[dc] && ra[d] && rb[dc] && rb[d]);
                    }
                }
            }
        }
        total
    };
    AxisSubgroupCount {
        diff_in_subgroup: count_for(&diff_set),
        sides_in_subgroup: count_for(&side_set),
    }
}

/// Result of the per-quadruple correspondence check between energy tuples of
/// X and rectangle quadruples of the projected set.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct BijectionOutcome {
    pub holds: bool,
    /// First quadruple (a, b, c, d), as canonical indices, violating the
    /// correspondence; None when the check holds.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<[[u32; 3]; 4]>,
    pub energy_total: u64,
    pub rect_total: u64,
    pub energy_nontrivial: u64,
    pub rect_nondegenerate: u64,
}

/// Checks, over every ordered quadruple of X^4, that a + b = c + d holds
/// exactly when the projections (a, c, b, d) form a rectangle quadruple, and
/// that the aggregate counts agree (totals, and non-trivial against
/// non-degenerate). Requires q = 3 mod 4.
pub fn bijection_check(x: &ParaboloidSet) -> BijectionOutcome {
    let f = x.field();
    debug_assert!(f.is_standard_regime());
    let pts = x.points();
    let mut counterexample = None;
    'outer: for &a in pts {
        for &b in pts {
            let s = add3(f, a, b);
            for &c in pts {
                for &d in pts {
                    let energy = add3(f, c, d) == s;
                    let rect = is_rectangle_quad(f, project(a), project(c), project(b), project(d));
                    if energy != rect {
                        counterexample =
                            Some([a, b, c, d].map(|p| [p.x.index(), p.y.index(), p.z.index()]));
                        break 'outer;
                    }
                }
            }
        }
    }
    let grid = x.to_grid_set();
    let rect = rect_count_all(&grid, None, false);
    let energy_total = energy_count(x);
    let energy_nt = energy_nontrivial(x);
    let holds = counterexample.is_none()
        && energy_total == rect.ordered_total
        && energy_nt == rect.nondegenerate;
    BijectionOutcome {
        holds,
        counterexample,
        energy_total,
        rect_total: rect.ordered_total,
        energy_nontrivial: energy_nt,
        rect_nondegenerate: rect.nondegenerate,
    }
}

/// Energy of the full paraboloid against the 2 q^5 ceiling.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ParaboloidEnergy {
    pub q: u64,
    pub point_count: u64,
    pub energy: u64,
    pub bound: u64,
    pub ratio: f64,
}

pub fn paraboloid_energy_bound(field: &Field) -> ParaboloidEnergy {
    let p = ParaboloidSet::full(field.clone());
    let energy = energy_count(&p);
    let bound = 2 * field.q().pow(5);
    ParaboloidEnergy {
        q: field.q(),
        point_count: p.len() as u64,
        energy,
        bound,
        ratio: energy as f64 / bound as f64,
    }
}
