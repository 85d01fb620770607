//! Extremal constructions: random-deletion sets with no non-trivial energy
//! tuple, the square hypergraph and its independent sets, and the Spencer
//! independence-number calculator.
//!
//! Every construction re-verifies its own output from scratch through the
//! exact counters; the certificate never trusts the construction path.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energy::{nontrivial_energy_tuples, rect_count_all, SideFilter};
use crate::field::{Field, FieldElement};
use crate::geometry::{enumerate_squares, GridSet, ParaboloidSet, Point2, Point3};

#[derive(Debug, Error, PartialEq, Eq, Clone)]
pub enum ConstructError {
    #[error("side quadrance must be non-zero")]
    ZeroSide,
    #[error("hypergraph has {edges} edges but needs at least {needed} (n/k)")]
    TooFewEdges { edges: u64, needed: u64 },
    #[error("construction failed after {attempts} attempts")]
    Failed { attempts: u32 },
}

/// Spencer's bound: a k-uniform hypergraph with n vertices and m >= n/k
/// edges has an independent set of size at least
/// (1 - 1/k) * floor((n^k / (k m))^{1/(k-1)}).
/// Evaluated exactly: the inner floor is the largest r with
/// r^{k-1} * k * m <= n^k, and the outer product is floored again.
pub fn spencer_bound(k: u32, n: u64, m: u64) -> Result<u64, ConstructError> {
    assert!(k >= 2, "uniformity must be at least 2");
    if m * (k as u64) < n {
        return Err(ConstructError::TooFewEdges {
            edges: m,
            needed: n.div_ceil(k as u64),
        });
    }
    let nk = (n as u128).pow(k);
    let km = k as u128 * m as u128;
    // binary search the (k-1)-th integer root of n^k / (k m)
    let mut lo = 0u128;
    let mut hi = (n as u128) + 1;
    while lo + 1 < hi {
        let mid = (lo + hi) / 2;
        let pow = mid.checked_pow(k - 1);
        match pow {
            Some(p) if p.saturating_mul(km) <= nk => lo = mid,
            _ => hi = mid,
        }
    }
    Ok(((k as u128 - 1) * lo / k as u128) as u64)
}

/// A k-uniform hypergraph on the plane F_q^2 given by explicit edges.
#[derive(Debug, Clone)]
pub struct HypergraphInstance {
    pub uniformity: u32,
    pub vertex_count: u64,
    pub edge_count: u64,
    /// Canonical (sorted) vertex 4-sets.
    pub edges: Vec<[Point2; 4]>,
}

/// Vertices are all of F_q^2, edges are the squares of the given side
/// quadrance. The edge count never exceeds q^3: the squares with a common
/// circumscribed circle number at most q, and there are q^2 circles of the
/// relevant radius.
pub fn square_hypergraph(
    field: &Field,
    side: FieldElement,
) -> Result<HypergraphInstance, ConstructError> {
    let edges = enumerate_squares(field, side).map_err(|_| ConstructError::ZeroSide)?;
    let n = field.q() * field.q();
    let m = edges.len() as u64;
    assert!(m <= field.q().pow(3), "square count exceeded q^3");
    Ok(HypergraphInstance {
        uniformity: 4,
        vertex_count: n,
        edge_count: m,
        edges,
    })
}

/// Outcome of a verified construction.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Certificate {
    /// Which exact counter certified the construction.
    pub name: String,
    /// Number of forbidden configurations found at verification time.
    pub forbidden_count: u64,
    pub verified: bool,
}

#[derive(Debug, Clone)]
pub struct ConstructionResult {
    pub kind: &'static str,
    pub seed: u64,
    pub attempts: u32,
    pub target_size: u64,
    pub achieved_size: u64,
    pub certificate: Certificate,
    pub points: ParaboloidSet,
}

impl serde::Serialize for ConstructionResult {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        #[derive(serde::Serialize)]
        struct FieldDesc {
            p: u64,
            k: u32,
            modulus: Vec<u64>,
        }
        let f = self.points.field();
        let mut st = s.serialize_struct("ConstructionResult", 8)?;
        st.serialize_field("kind", self.kind)?;
        st.serialize_field("seed", &self.seed)?;
        st.serialize_field("attempts", &self.attempts)?;
        st.serialize_field("target_size", &self.target_size)?;
        st.serialize_field("achieved_size", &self.achieved_size)?;
        st.serialize_field("certificate", &self.certificate)?;
        st.serialize_field(
            "field",
            &FieldDesc {
                p: f.p(),
                k: f.k(),
                modulus: f.modulus().to_vec(),
            },
        )?;
        let pts: Vec<[u32; 3]> = self
            .points
            .points()
            .iter()
            .map(|p| [p.x.index(), p.y.index(), p.z.index()])
            .collect();
        st.serialize_field("points", &pts)?;
        st.end()
    }
}

/// Samples each paraboloid point with probability 1/(2q), then deletes the
/// canonically smallest point of every surviving non-trivial energy tuple
/// (processing tuples in canonical order, skipping those already broken).
/// Retries with incremented seeds while the survivor count stays below q/8.
pub fn random_energy_free(field: &Field, seed: u64) -> Result<ConstructionResult, ConstructError> {
    const MAX_ATTEMPTS: u32 = 32;
    debug_assert!(field.is_standard_regime());
    let q = field.q();
    let target = q.div_ceil(8);
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt as u64));
        let sample = crate::sample::paraboloid_bernoulli(field, 1, 2 * q, &mut rng);
        let survivors = delete_energy_tuples(&sample);
        let achieved = survivors.len() as u64;
        if achieved < target && attempt + 1 < MAX_ATTEMPTS {
            continue;
        }
        if achieved < target {
            return Err(ConstructError::Failed {
                attempts: MAX_ATTEMPTS,
            });
        }
        // certificate: exhaustive recount from scratch
        let remaining = nontrivial_energy_tuples(&survivors).len() as u64;
        return Ok(ConstructionResult {
            kind: "random-energy-free",
            seed,
            attempts: attempt + 1,
            target_size: target,
            achieved_size: achieved,
            certificate: Certificate {
                name: "nontrivial_energy_tuples".into(),
                forbidden_count: remaining,
                verified: remaining == 0,
            },
            points: survivors,
        });
    }
    unreachable!()
}

fn delete_energy_tuples(sample: &ParaboloidSet) -> ParaboloidSet {
    let tuples = nontrivial_energy_tuples(sample);
    let mut deleted: Vec<Point3> = Vec::new();
    let is_deleted = |deleted: &[Point3], p: Point3| deleted.binary_search(&p).is_ok();
    for tuple in &tuples {
        if tuple.iter().any(|&p| is_deleted(&deleted, p)) {
            continue;
        }
        let victim = *tuple.iter().min().unwrap();
        let pos = deleted.binary_search(&victim).unwrap_err();
        deleted.insert(pos, victim);
    }
    ParaboloidSet::from_points(
        sample.field().clone(),
        sample
            .points()
            .iter()
            .copied()
            .filter(|&p| !is_deleted(&deleted, p)),
    )
    .expect("surviving points stay on the paraboloid")
}

/// Probabilistic-deletion independent set in the square hypergraph of side
/// quadrance `side`, lifted to the paraboloid. Samples vertices with the
/// Spencer-order probability t = (n^k / (k m))^{1/(k-1)} / n, deletes the
/// smallest vertex of each surviving edge, and keeps the best of a fixed
/// round of derived seeds. The certificate is the exhaustive count of
/// rectangles with side pair (side, side) on the plane set.
pub fn square_free_independent_set(
    field: &Field,
    side: FieldElement,
    seed: u64,
) -> Result<ConstructionResult, ConstructError> {
    const INNER_ATTEMPTS: u32 = 8;
    let hg = square_hypergraph(field, side)?;
    let n = hg.vertex_count;
    let m = hg.edge_count.max(1);
    let target = spencer_bound(4, n, hg.edge_count).unwrap_or(0);
    let t = ((n as f64).powi(4) / (4.0 * m as f64)).cbrt() / n as f64;
    let t = t.clamp(0.0, 1.0);

    let mut best: Option<Vec<Point2>> = None;
    for attempt in 0..INNER_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(attempt as u64);
        let mut picked = GridSet::empty(field.clone());
        for x in field.elements() {
            for y in field.elements() {
                if rng.random::<f64>() < t {
                    picked.insert(Point2::new(x, y));
                }
            }
        }
        // delete the smallest vertex of each fully surviving edge
        for edge in &hg.edges {
            if edge.iter().all(|&v| picked.contains(v)) {
                picked.remove(edge[0]);
            }
        }
        let pts: Vec<Point2> = picked.points().collect();
        if best.as_ref().is_none_or(|b| pts.len() > b.len()) {
            best = Some(pts);
        }
    }
    let best = best.unwrap_or_default();

    // certificate from scratch: no square of this side inside the set
    let plane = GridSet::from_points(field.clone(), best.iter().copied());
    let cert_count =
        rect_count_all(&plane, Some(SideFilter::Pair(side, side)), false).nondegenerate;
    let independent = hg
        .edges
        .iter()
        .all(|edge| !edge.iter().all(|&v| plane.contains(v)));
    let lifted = ParaboloidSet::from_base_points(field.clone(), best.iter().copied());
    assert_eq!(lifted.len(), plane.len(), "lift is injective");
    Ok(ConstructionResult {
        kind: "square-free-independent-set",
        seed,
        attempts: INNER_ATTEMPTS,
        target_size: target,
        achieved_size: lifted.len() as u64,
        certificate: Certificate {
            name: "rect_count_all(side,side)".into(),
            forbidden_count: cert_count,
            verified: cert_count == 0 && independent,
        },
        points: lifted,
    })
}
