//! Points in F_q^2 and F_q^3, the paraboloid z = x^2 + y^2 and its lift,
//! quadrance (the finite-field stand-in for squared length), rectangles,
//! circles, and squares.
//!
//! "Side-length" is always a quadrance: Q(u, v) = (u - v) . (u - v). F_q has
//! no metric, but for q = 3 mod 4 there are no isotropic vectors, so Q(u, v)
//! vanishes exactly when u = v.

use std::collections::BTreeSet;
use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::field::{Field, FieldElement, FieldError};

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Point2 {
    pub x: FieldElement,
    pub y: FieldElement,
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Point3 {
    pub x: FieldElement,
    pub y: FieldElement,
    pub z: FieldElement,
}

impl Point2 {
    pub fn new(x: FieldElement, y: FieldElement) -> Self {
        Point2 { x, y }
    }
}

impl Point3 {
    pub fn new(x: FieldElement, y: FieldElement, z: FieldElement) -> Self {
        Point3 { x, y, z }
    }
}

#[derive(Debug, Error, PartialEq, Eq, Clone)]
pub enum GeometryError {
    #[error("side quadrance must be non-zero")]
    ZeroSide,
    #[error("point ({x}, {y}, {z}) is not on the paraboloid")]
    OffParaboloid { x: u32, y: u32, z: u32 },
    #[error("operation requires odd characteristic")]
    CharacteristicTwo,
}

#[inline]
pub fn add2(f: &Field, u: Point2, v: Point2) -> Point2 {
    Point2::new(f.add(u.x, v.x), f.add(u.y, v.y))
}

#[inline]
pub fn sub2(f: &Field, u: Point2, v: Point2) -> Point2 {
    Point2::new(f.sub(u.x, v.x), f.sub(u.y, v.y))
}

#[inline]
pub fn dot2(f: &Field, u: Point2, v: Point2) -> FieldElement {
    f.add(f.mul(u.x, v.x), f.mul(u.y, v.y))
}

#[inline]
pub fn add3(f: &Field, u: Point3, v: Point3) -> Point3 {
    Point3::new(f.add(u.x, v.x), f.add(u.y, v.y), f.add(u.z, v.z))
}

#[inline]
pub fn sub3(f: &Field, u: Point3, v: Point3) -> Point3 {
    Point3::new(f.sub(u.x, v.x), f.sub(u.y, v.y), f.sub(u.z, v.z))
}

#[inline]
pub fn dot3(f: &Field, u: Point3, v: Point3) -> FieldElement {
    f.add(f.add(f.mul(u.x, v.x), f.mul(u.y, v.y)), f.mul(u.z, v.z))
}

/// lift(u) = (u, u.u), a point of the paraboloid.
#[inline]
pub fn lift(f: &Field, u: Point2) -> Point3 {
    Point3::new(u.x, u.y, dot2(f, u, u))
}

/// First two coordinates; inverts `lift` on paraboloid points.
#[inline]
pub fn project(w: Point3) -> Point2 {
    Point2::new(w.x, w.y)
}

#[inline]
pub fn on_paraboloid(f: &Field, w: Point3) -> bool {
    f.add(f.square(w.x), f.square(w.y)) == w.z
}

/// Q(u, v) = (u - v).(u - v).
#[inline]
pub fn quadrance(f: &Field, u: Point2, v: Point2) -> FieldElement {
    let d = sub2(f, u, v);
    dot2(f, d, d)
}

/// A subset of F_q^2 with O(1) membership.
#[derive(Clone, Debug)]
pub struct GridSet {
    field: Field,
    cells: Vec<bool>,
    size: usize,
}

impl GridSet {
    pub fn empty(field: Field) -> Self {
        let q = field.qs();
        GridSet {
            field,
            cells: vec![false; q * q],
            size: 0,
        }
    }

    pub fn full(field: Field) -> Self {
        let q = field.qs();
        GridSet {
            field,
            cells: vec![true; q * q],
            size: q * q,
        }
    }

    pub fn from_points<I: IntoIterator<Item = Point2>>(field: Field, points: I) -> Self {
        let mut s = Self::empty(field);
        for p in points {
            s.insert(p);
        }
        s
    }

    #[inline]
    pub fn field(&self) -> &Field {
        &self.field
    }

    #[inline]
    pub fn cell_index(&self, p: Point2) -> usize {
        p.x.index() as usize * self.field.qs() + p.y.index() as usize
    }

    #[inline]
    pub fn contains(&self, p: Point2) -> bool {
        self.cells[self.cell_index(p)]
    }

    #[inline]
    pub fn contains_index(&self, cell: usize) -> bool {
        self.cells[cell]
    }

    pub fn insert(&mut self, p: Point2) -> bool {
        let i = self.cell_index(p);
        if self.cells[i] {
            false
        } else {
            self.cells[i] = true;
            self.size += 1;
            true
        }
    }

    pub fn remove(&mut self, p: Point2) -> bool {
        let i = self.cell_index(p);
        if self.cells[i] {
            self.cells[i] = false;
            self.size -= 1;
            true
        } else {
            false
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    pub fn points(&self) -> impl Iterator<Item = Point2> + '_ {
        let q = self.field.qs();
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| {
                Point2::new(FieldElement((i / q) as u32), FieldElement((i % q) as u32))
            })
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }
}

/// A deduplicated set of points on the paraboloid, kept in canonical order.
#[derive(Clone, Debug)]
pub struct ParaboloidSet {
    field: Field,
    points: Vec<Point3>,
}

impl ParaboloidSet {
    pub fn from_points<I: IntoIterator<Item = Point3>>(
        field: Field,
        points: I,
    ) -> Result<Self, GeometryError> {
        let mut pts: Vec<Point3> = Vec::new();
        for w in points {
            if !on_paraboloid(&field, w) {
                return Err(GeometryError::OffParaboloid {
                    x: w.x.index(),
                    y: w.y.index(),
                    z: w.z.index(),
                });
            }
            pts.push(w);
        }
        pts.sort_unstable();
        pts.dedup();
        Ok(ParaboloidSet { field, points: pts })
    }

    /// Lift a set of base points; the lift is injective, so sizes agree.
    pub fn from_base_points<I: IntoIterator<Item = Point2>>(field: Field, base: I) -> Self {
        let mut pts: Vec<Point3> = base.into_iter().map(|u| lift(&field, u)).collect();
        pts.sort_unstable();
        pts.dedup();
        ParaboloidSet { field, points: pts }
    }

    /// Every point of the paraboloid: exactly q^2 of them.
    pub fn full(field: Field) -> Self {
        let all: Vec<Point2> = (0..field.q())
            .flat_map(|x| (0..field.q()).map(move |y| (x, y)))
            .map(|(x, y)| Point2::new(FieldElement(x as u32), FieldElement(y as u32)))
            .collect();
        Self::from_base_points(field, all)
    }

    #[inline]
    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn contains(&self, w: Point3) -> bool {
        self.points.binary_search(&w).is_ok()
    }

    /// The projected base set; bijective with the point list.
    pub fn to_grid_set(&self) -> GridSet {
        GridSet::from_points(self.field.clone(), self.points.iter().map(|&w| project(w)))
    }
}

/// An ordered rectangle quadruple (x, z, y, t): opposite vertices are
/// positions 1,3 and 2,4, so x + y = z + t and the angle at z is right.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RectangleQuad {
    pub vertices: [Point2; 4],
    /// (Q(x - z), Q(z - y)); opposite sides have equal quadrance.
    pub side_quadrances: (FieldElement, FieldElement),
    /// True when a side quadrance is zero, which (for q = 3 mod 4) means
    /// coincident vertices.
    pub degenerate: bool,
}

#[derive(Debug, Error, PartialEq, Eq, Clone)]
#[error("not a rectangle: vertex sum condition {} / orthogonality {}", if *.sum_ok { "holds" } else { "fails" }, if *.orthogonal { "holds" } else { "fails" })]
pub struct NotARectangle {
    pub sum_ok: bool,
    pub orthogonal: bool,
}

/// Tests the two rectangle conditions: x + y = z + t and (x-z).(y-z) = 0.
/// Right angles at the other three vertices follow algebraically.
#[inline]
pub fn is_rectangle_quad(f: &Field, x: Point2, z: Point2, y: Point2, t: Point2) -> bool {
    add2(f, x, y) == add2(f, z, t) && dot2(f, sub2(f, x, z), sub2(f, y, z)) == f.zero()
}

pub fn classify_rectangle(
    f: &Field,
    x: Point2,
    z: Point2,
    y: Point2,
    t: Point2,
) -> Result<RectangleQuad, NotARectangle> {
    let sum_ok = add2(f, x, y) == add2(f, z, t);
    let orthogonal = dot2(f, sub2(f, x, z), sub2(f, y, z)) == f.zero();
    if !(sum_ok && orthogonal) {
        return Err(NotARectangle { sum_ok, orthogonal });
    }
    let lambda = quadrance(f, x, z);
    let beta = quadrance(f, z, y);
    Ok(RectangleQuad {
        vertices: [x, z, y, t],
        side_quadrances: (lambda, beta),
        degenerate: lambda == f.zero() || beta == f.zero(),
    })
}

/// All points at quadrance r from the center, by exhaustive scan. For
/// q = 3 mod 4 this has q + 1 points when r != 0 and one point when r = 0.
pub fn circle_points(f: &Field, center: Point2, r: FieldElement) -> Vec<Point2> {
    let mut out = Vec::new();
    for x in f.elements() {
        for y in f.elements() {
            let u = Point2::new(x, y);
            if quadrance(f, u, center) == r {
                out.push(u);
            }
        }
    }
    out
}

/// All squares of side quadrance `side`, as canonical (sorted) vertex
/// 4-tuples. Generated as {u, u+d, u+d+dp, u+dp} over base points u and
/// directions d with Q(d) = side, where dp = (-d_y, d_x); duplicates from the
/// several generating corners are removed.
pub fn enumerate_squares(f: &Field, side: FieldElement) -> Result<Vec<[Point2; 4]>, GeometryError> {
    if side == f.zero() {
        return Err(GeometryError::ZeroSide);
    }
    let origin = Point2::new(f.zero(), f.zero());
    let directions = circle_points(f, origin, side);
    let mut seen: BTreeSet<[Point2; 4]> = BTreeSet::new();
    for x in f.elements() {
        for y in f.elements() {
            let u = Point2::new(x, y);
            for &d in &directions {
                let dp = Point2::new(f.neg(d.y), d.x);
                let v1 = u;
                let v2 = add2(f, u, d);
                let v3 = add2(f, v2, dp);
                let v4 = add2(f, u, dp);
                let mut key = [v1, v2, v3, v4];
                key.sort_unstable();
                seen.insert(key);
            }
        }
    }
    Ok(seen.into_iter().collect())
}

/// Center of the circumscribed circle of a square given as a canonical
/// 4-set: the vertex centroid. All four vertices sit at quadrance
/// side/2 from it.
pub fn square_center(f: &Field, square: &[Point2; 4]) -> Result<Point2, GeometryError> {
    if f.p() == 2 {
        return Err(GeometryError::CharacteristicTwo);
    }
    let four = f.add(f.add(f.one(), f.one()), f.add(f.one(), f.one()));
    let inv4 = f.inv(four).map_err(|_| GeometryError::CharacteristicTwo)?;
    let mut sx = f.zero();
    let mut sy = f.zero();
    for v in square {
        sx = f.add(sx, v.x);
        sy = f.add(sy, v.y);
    }
    Ok(Point2::new(f.mul(sx, inv4), f.mul(sy, inv4)))
}

// ---- point set file format ----
//
// Header line: `# field <p> <k> <c0,c1,...>` (modulus omitted for k = 1, a
// trailing `nonstandard` marker when the field was built without the residue
// check). Then one point per line: comma-separated canonical indices,
// 2 columns for plane sets, 3 for paraboloid sets.

#[derive(Debug, Error)]
pub enum PointFileError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("missing `# field` header line")]
    MissingHeader,
    #[error("malformed header: {0}")]
    BadHeader(String),
    #[error("malformed point on line {line}")]
    BadLine { line: usize },
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

fn write_header<W: Write>(f: &Field, w: &mut W) -> io::Result<()> {
    let mut header = format!("# field {} {}", f.p(), f.k());
    if f.k() > 1 {
        let coeffs: Vec<String> = f.modulus().iter().map(|c| c.to_string()).collect();
        header.push(' ');
        header.push_str(&coeffs.join(","));
    }
    if !f.residue_checked() && !f.is_standard_regime() {
        header.push_str(" nonstandard");
    }
    writeln!(w, "{header}")
}

fn read_header(line: &str) -> Result<Field, PointFileError> {
    let rest = line
        .strip_prefix("# field")
        .ok_or(PointFileError::MissingHeader)?
        .trim();
    let mut parts = rest.split_whitespace();
    let p: u64 = parts
        .next()
        .ok_or_else(|| PointFileError::BadHeader("missing p".into()))?
        .parse()
        .map_err(|_| PointFileError::BadHeader("bad p".into()))?;
    let k: u32 = parts
        .next()
        .ok_or_else(|| PointFileError::BadHeader("missing k".into()))?
        .parse()
        .map_err(|_| PointFileError::BadHeader("bad k".into()))?;
    let mut nonstandard = false;
    let mut modulus: Vec<u64> = Vec::new();
    for tok in parts {
        if tok == "nonstandard" {
            nonstandard = true;
        } else {
            for c in tok.split(',') {
                modulus
                    .push(c.parse().map_err(|_| {
                        PointFileError::BadHeader("bad modulus coefficient".into())
                    })?);
            }
        }
    }
    let field = if nonstandard {
        Field::new_any_residue(p, k)?
    } else {
        Field::new(p, k)?
    };
    if k > 1 && field.modulus() != modulus.as_slice() {
        return Err(PointFileError::BadHeader(format!(
            "modulus {:?} does not match the canonical modulus {:?}",
            modulus,
            field.modulus()
        )));
    }
    Ok(field)
}

pub fn write_grid_set<W: Write>(set: &GridSet, mut w: W) -> io::Result<()> {
    write_header(set.field(), &mut w)?;
    for p in set.points() {
        writeln!(w, "{},{}", p.x.index(), p.y.index())?;
    }
    Ok(())
}

pub fn write_paraboloid_set<W: Write>(set: &ParaboloidSet, mut w: W) -> io::Result<()> {
    write_header(set.field(), &mut w)?;
    for p in set.points() {
        writeln!(w, "{},{},{}", p.x.index(), p.y.index(), p.z.index())?;
    }
    Ok(())
}

fn read_lines<R: BufRead>(
    r: R,
    cols: usize,
) -> Result<(Field, Vec<Vec<FieldElement>>), PointFileError> {
    let mut field: Option<Field> = None;
    let mut rows = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            if field.is_none() && line.starts_with("# field") {
                field = Some(read_header(line)?);
            }
            continue;
        }
        let f = field.as_ref().ok_or(PointFileError::MissingHeader)?;
        let mut row = Vec::with_capacity(cols);
        for tok in line.split(',') {
            let v: u64 = tok
                .trim()
                .parse()
                .map_err(|_| PointFileError::BadLine { line: i + 1 })?;
            row.push(f.try_element(v)?);
        }
        if row.len() != cols {
            return Err(PointFileError::BadLine { line: i + 1 });
        }
        rows.push(row);
    }
    let field = field.ok_or(PointFileError::MissingHeader)?;
    Ok((field, rows))
}

pub fn read_grid_set<R: BufRead>(r: R) -> Result<GridSet, PointFileError> {
    let (field, rows) = read_lines(r, 2)?;
    Ok(GridSet::from_points(
        field,
        rows.into_iter().map(|row| Point2::new(row[0], row[1])),
    ))
}

pub fn read_paraboloid_set<R: BufRead>(r: R) -> Result<ParaboloidSet, PointFileError> {
    let (field, rows) = read_lines(r, 3)?;
    Ok(ParaboloidSet::from_points(
        field,
        rows.into_iter()
            .map(|row| Point3::new(row[0], row[1], row[2])),
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(f: &Field, x: u64, y: u64) -> Point2 {
        Point2::new(f.element(x), f.element(y))
    }

    #[test]
    fn lift_project_roundtrip() {
        let f = Field::new(3, 1).unwrap();
        let u = pt(&f, 1, 1);
        let w = lift(&f, u);
        assert_eq!(w, Point3::new(f.element(1), f.element(1), f.element(2)));
        for x in f.elements() {
            for y in f.elements() {
                let u = Point2::new(x, y);
                assert_eq!(project(lift(&f, u)), u);
            }
        }
        assert!(on_paraboloid(
            &f,
            Point3::new(f.element(0), f.element(1), f.element(1))
        ));
        assert!(!on_paraboloid(
            &f,
            Point3::new(f.element(0), f.element(1), f.element(2))
        ));
    }

    #[test]
    fn quadrance_values_and_isotropy() {
        let f7 = Field::new(7, 1).unwrap();
        assert_eq!(quadrance(&f7, pt(&f7, 0, 0), pt(&f7, 1, 2)), f7.element(5));
        for x in f7.elements() {
            for y in f7.elements() {
                let u = Point2::new(x, y);
                assert_eq!(quadrance(&f7, u, u), f7.zero());
            }
        }
        // q = 3 mod 4: Q(u, v) = 0 iff u = v
        for x in f7.elements() {
            for y in f7.elements() {
                let u = Point2::new(x, y);
                let zero_q = quadrance(&f7, u, pt(&f7, 0, 0)) == f7.zero();
                assert_eq!(zero_q, u == pt(&f7, 0, 0));
            }
        }
        // contrast in the unsupported regime: q = 5 has isotropic differences
        let f5 = Field::new_any_residue(5, 1).unwrap();
        assert_eq!(quadrance(&f5, pt(&f5, 0, 0), pt(&f5, 1, 2)), f5.zero());
    }

    #[test]
    fn rectangle_classification() {
        let f = Field::new(3, 1).unwrap();
        let r =
            classify_rectangle(&f, pt(&f, 0, 0), pt(&f, 1, 0), pt(&f, 1, 1), pt(&f, 0, 1)).unwrap();
        assert_eq!(r.side_quadrances, (f.element(1), f.element(1)));
        assert!(!r.degenerate);

        // sum condition failure
        let err = classify_rectangle(&f, pt(&f, 0, 0), pt(&f, 1, 0), pt(&f, 1, 2), pt(&f, 0, 1))
            .unwrap_err();
        assert!(!err.sum_ok);

        // collinear quadruple: fails orthogonality, hence not a rectangle
        let err = classify_rectangle(&f, pt(&f, 0, 0), pt(&f, 1, 0), pt(&f, 2, 0), pt(&f, 1, 0))
            .unwrap_err();
        assert!(err.sum_ok && !err.orthogonal);

        // coincident vertices give a genuine degenerate rectangle
        let r =
            classify_rectangle(&f, pt(&f, 0, 0), pt(&f, 1, 0), pt(&f, 1, 0), pt(&f, 0, 0)).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.side_quadrances.1, f.zero());
    }

    #[test]
    fn rectangle_translation_invariance() {
        let f = Field::new(7, 1).unwrap();
        let quad = [pt(&f, 0, 0), pt(&f, 1, 0), pt(&f, 1, 1), pt(&f, 0, 1)];
        for sx in f.elements() {
            for sy in f.elements() {
                let s = Point2::new(sx, sy);
                let t: Vec<Point2> = quad.iter().map(|&v| add2(&f, v, s)).collect();
                assert!(is_rectangle_quad(&f, t[0], t[1], t[2], t[3]));
            }
        }
    }

    #[test]
    fn circle_cardinalities() {
        for field in [
            Field::new(3, 1).unwrap(),
            Field::new(7, 1).unwrap(),
            Field::new(11, 1).unwrap(),
            Field::new(19, 1).unwrap(),
            Field::new(23, 1).unwrap(),
            Field::new(3, 3).unwrap(),
            Field::new(31, 1).unwrap(),
        ] {
            let origin = Point2::new(field.zero(), field.zero());
            for r in field.elements() {
                let pts = circle_points(&field, origin, r);
                let expected = if r == field.zero() { 1 } else { field.qs() + 1 };
                assert_eq!(pts.len(), expected, "q={} r={:?}", field.q(), r);
            }
            // translation invariance of circle size
            let c = Point2::new(field.element(3 % field.q()), field.element(5 % field.q()));
            assert_eq!(
                circle_points(&field, c, field.one()).len(),
                circle_points(&field, origin, field.one()).len()
            );
        }
        let f7 = Field::new(7, 1).unwrap();
        let o = Point2::new(f7.zero(), f7.zero());
        assert_eq!(circle_points(&f7, o, f7.one()).len(), 8);
        assert_eq!(circle_points(&f7, o, f7.zero()), vec![o]);
    }

    #[test]
    fn squares_q3_side1() {
        let f = Field::new(3, 1).unwrap();
        let squares = enumerate_squares(&f, f.one()).unwrap();
        assert_eq!(squares.len(), 9);
        assert_eq!(
            enumerate_squares(&f, f.zero()).unwrap_err(),
            GeometryError::ZeroSide
        );
    }

    #[test]
    fn squares_sides_and_circumcircle() {
        let two_inv = |f: &Field| f.inv(f.element(2)).unwrap();
        for field in [Field::new(3, 1).unwrap(), Field::new(7, 1).unwrap()] {
            for side_idx in 1..field.q() {
                let side = field.element(side_idx);
                let squares = enumerate_squares(&field, side).unwrap();
                assert!(squares.len() as u64 <= field.q().pow(3));
                let radius = field.mul(two_inv(&field), side);
                for sq in &squares {
                    let center = square_center(&field, sq).unwrap();
                    for &v in sq {
                        assert_eq!(quadrance(&field, v, center), radius);
                    }
                    // side multiset: each vertex has exactly two neighbours at
                    // quadrance `side`
                    for &v in sq {
                        let n = sq
                            .iter()
                            .filter(|&&w| w != v && quadrance(&field, v, w) == side)
                            .count();
                        assert_eq!(n, 2);
                    }
                }
            }
        }
    }

    #[test]
    fn lifted_circle_lies_on_a_sphere() {
        // Solve for a sphere through the first four lifted points and check
        // the rest: Q3(w - c) = rho is linear in (c, rho - Q3(c)) once
        // expanded, since Q3(w) is known.
        let f = Field::new(7, 1).unwrap();
        let origin = Point2::new(f.zero(), f.zero());
        for r_idx in 1..f.q() {
            let r = f.element(r_idx);
            let lifted: Vec<Point3> = circle_points(&f, origin, r)
                .into_iter()
                .map(|u| lift(&f, u))
                .collect();
            assert!(lifted.len() >= 4);
            // unknowns: (c1, c2, c3, e) with 2 w.c - e = Q3(w)
            let mut rows: Vec<[FieldElement; 5]> = Vec::new();
            let two = f.element(2);
            for w in &lifted {
                rows.push([
                    f.mul(two, w.x),
                    f.mul(two, w.y),
                    f.mul(two, w.z),
                    f.neg(f.one()),
                    dot3(&f, *w, *w),
                ]);
            }
            // Gaussian elimination over F_q on the full (consistent) system;
            // free variables default to zero
            let mut m: Vec<[FieldElement; 5]> = rows.clone();
            let nrows = m.len();
            let mut pivot_col_of_row: Vec<Option<usize>> = vec![None; nrows];
            let mut rank = 0usize;
            for col in 0..4 {
                let Some(pivot) = (rank..nrows).find(|&i| m[i][col] != f.zero()) else {
                    continue;
                };
                m.swap(rank, pivot);
                let inv = f.inv(m[rank][col]).unwrap();
                for j in 0..5 {
                    m[rank][j] = f.mul(m[rank][j], inv);
                }
                for i in 0..nrows {
                    if i != rank && m[i][col] != f.zero() {
                        let factor = m[i][col];
                        for j in 0..5 {
                            m[i][j] = f.sub(m[i][j], f.mul(factor, m[rank][j]));
                        }
                    }
                }
                pivot_col_of_row[rank] = Some(col);
                rank += 1;
            }
            // consistency: no row reduces to 0 = nonzero
            for row in &m {
                let lhs_zero = row[..4].iter().all(|&v| v == f.zero());
                assert!(
                    !(lhs_zero && row[4] != f.zero()),
                    "lifted circle sphere system is solvable"
                );
            }
            let mut sol = [f.zero(); 4];
            for (i, pc) in pivot_col_of_row.iter().enumerate() {
                if let Some(c) = pc {
                    sol[*c] = m[i][4];
                }
            }
            for row in &rows {
                let lhs = f.add(
                    f.add(f.mul(row[0], sol[0]), f.mul(row[1], sol[1])),
                    f.add(f.mul(row[2], sol[2]), f.mul(row[3], sol[3])),
                );
                assert_eq!(lhs, row[4]);
            }
        }
    }

    #[test]
    fn point_file_roundtrip() {
        let f = Field::new(3, 3).unwrap();
        let base = [pt(&f, 0, 0), pt(&f, 5, 20), pt(&f, 26, 1)];
        let x = ParaboloidSet::from_base_points(f.clone(), base);
        let mut buf = Vec::new();
        write_paraboloid_set(&x, &mut buf).unwrap();
        let back = read_paraboloid_set(buf.as_slice()).unwrap();
        assert_eq!(back.points(), x.points());
        assert_eq!(back.field(), x.field());

        let s = GridSet::from_points(f.clone(), base);
        let mut buf = Vec::new();
        write_grid_set(&s, &mut buf).unwrap();
        let back = read_grid_set(buf.as_slice()).unwrap();
        assert_eq!(back.len(), s.len());
        for p in s.points() {
            assert!(back.contains(p));
        }
    }

    #[test]
    fn paraboloid_set_rejects_off_surface_points() {
        let f = Field::new(3, 1).unwrap();
        let bad = Point3::new(f.element(0), f.element(1), f.element(2));
        assert!(matches!(
            ParaboloidSet::from_points(f.clone(), [bad]),
            Err(GeometryError::OffParaboloid { .. })
        ));
        let full = ParaboloidSet::full(f);
        assert_eq!(full.len(), 9);
    }
}
