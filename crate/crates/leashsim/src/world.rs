//! Geometry containers for the physical and virtual environments: poses,
//! polygonal obstacles, the rectangular tracked space, and the point/segment
//! queries used by goal selection and the reset trigger.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::math::{wrap_angle, Vec2};

/// Planar position plus heading. Heading is normalized to [0, 2*pi).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub p: Vec2,
    pub theta: f64,
}

impl Pose {
    pub fn new(p: Vec2, theta: f64) -> Self {
        Pose {
            p,
            theta: wrap_angle(theta),
        }
    }

    /// Unit vector along the heading.
    #[inline]
    pub fn heading(&self) -> Vec2 {
        Vec2::from_angle(self.theta)
    }
}

/// A simple polygon with counter-clockwise winding, used for virtual obstacles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolygonObstacleRaw")]
pub struct PolygonObstacle {
    pub vertices: Vec<Vec2>,
    pub id: String,
}

#[derive(Deserialize)]
struct PolygonObstacleRaw {
    vertices: Vec<Vec2>,
    id: String,
}

impl TryFrom<PolygonObstacleRaw> for PolygonObstacle {
    type Error = SimError;
    fn try_from(raw: PolygonObstacleRaw) -> Result<Self> {
        PolygonObstacle::new(raw.vertices, raw.id)
    }
}

impl PolygonObstacle {
    /// Build a polygon, rejecting anything that is not a simple CCW polygon
    /// with at least 3 finite vertices.
    pub fn new(vertices: Vec<Vec2>, id: impl Into<String>) -> Result<Self> {
        let id = id.into();
        if vertices.len() < 3 {
            return Err(SimError::InvalidGeometry(format!(
                "polygon '{id}' has {} vertices, need at least 3",
                vertices.len()
            )));
        }
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(SimError::InvalidGeometry(format!(
                "polygon '{id}' has non-finite vertices"
            )));
        }
        let poly = PolygonObstacle { vertices, id };
        if poly.signed_area() <= 0.0 {
            return Err(SimError::InvalidGeometry(format!(
                "polygon '{}' is not counter-clockwise",
                poly.id
            )));
        }
        if !poly.is_simple() {
            return Err(SimError::InvalidGeometry(format!(
                "polygon '{}' is self-intersecting",
                poly.id
            )));
        }
        Ok(poly)
    }

    /// Axis-aligned rectangle helper (CCW winding).
    pub fn rect(center: Vec2, half_w: f64, half_h: f64, id: impl Into<String>) -> Result<Self> {
        PolygonObstacle::new(
            vec![
                Vec2::new(center.x - half_w, center.y - half_h),
                Vec2::new(center.x + half_w, center.y - half_h),
                Vec2::new(center.x + half_w, center.y + half_h),
                Vec2::new(center.x - half_w, center.y + half_h),
            ],
            id,
        )
    }

    pub fn edges(&self) -> impl Iterator<Item = (Vec2, Vec2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    fn signed_area(&self) -> f64 {
        self.edges().map(|(a, b)| a.cross(b)).sum::<f64>() / 2.0
    }

    // Non-adjacent edge pairs must not intersect; adjacent edges may only
    // touch at their shared vertex.
    fn is_simple(&self) -> bool {
        let edges: Vec<_> = self.edges().collect();
        let n = edges.len();
        for i in 0..n {
            for j in (i + 1)..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                let (a, b) = edges[i];
                let (c, d) = edges[j];
                if adjacent {
                    // Shared endpoint is fine; anything more means degeneracy.
                    if segments_overlap_beyond_endpoint(a, b, c, d) {
                        return false;
                    }
                } else if segment_intersection(a, b, c, d).is_some() {
                    return false;
                }
            }
        }
        true
    }
}

/// The axis-aligned rectangular tracked space (the physical room).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackedSpace {
    pub center: Vec2,
    pub half_extents: Vec2,
}

impl TrackedSpace {
    pub fn new(center: Vec2, half_extents: Vec2) -> Result<Self> {
        if half_extents.x <= 0.0 || half_extents.y <= 0.0 {
            return Err(SimError::InvalidGeometry(
                "tracked space half extents must be strictly positive".into(),
            ));
        }
        Ok(TrackedSpace {
            center,
            half_extents,
        })
    }

    pub fn contains(&self, p: Vec2) -> bool {
        let d = p - self.center;
        d.x.abs() <= self.half_extents.x && d.y.abs() <= self.half_extents.y
    }
}

/// Obstacles and agents of one environment, physical or virtual.
///
/// Goal markers and objects of interest only make sense for the virtual side;
/// they stay empty for the physical room.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    #[serde(default)]
    pub obstacles: Vec<PolygonObstacle>,
    #[serde(default)]
    pub users: Vec<Pose>,
    #[serde(default)]
    pub robots: Vec<Pose>,
    #[serde(default)]
    pub potential_goals: Vec<Vec2>,
    #[serde(default)]
    pub objects_of_interest: Vec<String>,
}

/// True iff `p` is inside `poly` or on its boundary (closed-set semantics).
pub fn point_in_polygon(poly: &PolygonObstacle, p: Vec2) -> bool {
    // Boundary points count as inside.
    for (a, b) in poly.edges() {
        if point_on_segment(p, a, b) {
            return true;
        }
    }
    // Even-odd ray crossing with the half-open rule on y, so vertices are not
    // double-counted.
    let mut inside = false;
    for (a, b) in poly.edges() {
        if (a.y > p.y) != (b.y > p.y) {
            let x_cross = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if p.x < x_cross {
                inside = !inside;
            }
        }
    }
    inside
}

/// Nearest intersection of segment `ab` with any obstacle edge, as the hit
/// point and its distance from `a`. `None` when the segment is clear.
pub fn segment_first_hit(
    a: Vec2,
    b: Vec2,
    obstacles: &[PolygonObstacle],
) -> Option<(Vec2, f64)> {
    debug_assert!(a != b, "segment_first_hit requires a != b");
    let mut best: Option<(Vec2, f64)> = None;
    for poly in obstacles {
        for (c, d) in poly.edges() {
            if let Some(hit) = segment_intersection(a, b, c, d) {
                let dist = (hit - a).norm();
                if best.is_none_or(|(_, d0)| dist < d0) {
                    best = Some((hit, dist));
                }
            }
        }
    }
    best
}

/// Distance from `p` to the nearest wall of `space`, with that wall's outward
/// normal. Ties break in wall order +x, -x, +y, -y.
///
/// Errors when `p` lies strictly outside the rectangle: the user has escaped
/// the tracked space and the simulation is in a faulted state.
pub fn boundary_distance(space: &TrackedSpace, p: Vec2) -> Result<(f64, Vec2)> {
    let d = p - space.center;
    let walls = [
        (space.half_extents.x - d.x, Vec2::new(1.0, 0.0)),
        (space.half_extents.x + d.x, Vec2::new(-1.0, 0.0)),
        (space.half_extents.y - d.y, Vec2::new(0.0, 1.0)),
        (space.half_extents.y + d.y, Vec2::new(0.0, -1.0)),
    ];
    let mut best = walls[0];
    for w in &walls[1..] {
        if w.0 < best.0 {
            best = *w;
        }
    }
    if best.0 < 0.0 {
        return Err(SimError::OutsideTrackedSpace(p));
    }
    Ok(best)
}

/// True iff `p` lies on segment `ab` (within a small absolute tolerance).
pub fn point_on_segment(p: Vec2, a: Vec2, b: Vec2) -> bool {
    const EPS: f64 = 1e-12;
    let ab = b - a;
    let ap = p - a;
    if ab.cross(ap).abs() > EPS * ab.norm().max(1.0) {
        return false;
    }
    let t = ap.dot(ab);
    t >= -EPS && t <= ab.norm_squared() + EPS
}

/// Proper intersection point of segments `ab` and `cd`, endpoints included.
/// Collinear overlaps report the overlap point nearest to `a`.
pub fn segment_intersection(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> Option<Vec2> {
    let r = b - a;
    let s = d - c;
    let denom = r.cross(s);
    let qp = c - a;
    if denom == 0.0 {
        // Parallel. Only collinear segments can still touch.
        if qp.cross(r) != 0.0 {
            return None;
        }
        let len2 = r.norm_squared();
        if len2 == 0.0 {
            return None;
        }
        let t0 = qp.dot(r) / len2;
        let t1 = (d - a).dot(r) / len2;
        let (lo, hi) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
        let t = lo.max(0.0);
        if t <= hi.min(1.0) {
            return Some(a + r * t);
        }
        return None;
    }
    let t = qp.cross(s) / denom;
    let u = qp.cross(r) / denom;
    if (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u) {
        Some(a + r * t)
    } else {
        None
    }
}

// Used by the simplicity check: adjacent edges sharing one endpoint are legal,
// but collinear overlap or a crossing away from the shared vertex is not.
fn segments_overlap_beyond_endpoint(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> bool {
    let r = b - a;
    let s = d - c;
    if r.cross(s) == 0.0 && (c - a).cross(r) == 0.0 {
        // Collinear adjacent edges: the polygon has a spike or doubles back.
        return true;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_square() -> PolygonObstacle {
        PolygonObstacle::new(
            vec![
                Vec2::new(0.0, 0.0),
                Vec2::new(1.0, 0.0),
                Vec2::new(1.0, 1.0),
                Vec2::new(0.0, 1.0),
            ],
            "square",
        )
        .unwrap()
    }

    #[test]
    fn pip_interior_exterior_boundary() {
        let sq = unit_square();
        assert!(point_in_polygon(&sq, Vec2::new(0.5, 0.5)));
        assert!(!point_in_polygon(&sq, Vec2::new(2.0, 0.5)));
        // Boundary counts as inside.
        assert!(point_in_polygon(&sq, Vec2::new(1.0, 0.5)));
    }

    #[test]
    fn pip_concave() {
        // L-shaped polygon: the notch at (0.75, 0.75) is outside.
        let poly = PolygonObstacle::new(
            vec![
                Vec2::new(0.0, 0.0),
                Vec2::new(1.0, 0.0),
                Vec2::new(1.0, 0.5),
                Vec2::new(0.5, 0.5),
                Vec2::new(0.5, 1.0),
                Vec2::new(0.0, 1.0),
            ],
            "ell",
        )
        .unwrap();
        assert!(point_in_polygon(&poly, Vec2::new(0.25, 0.75)));
        assert!(!point_in_polygon(&poly, Vec2::new(0.75, 0.75)));
    }

    #[test]
    fn polygon_construction_rejects_bad_input() {
        assert!(PolygonObstacle::new(vec![Vec2::ZERO, Vec2::new(1.0, 0.0)], "two").is_err());
        // Clockwise winding rejected.
        assert!(PolygonObstacle::new(
            vec![Vec2::new(0.0, 0.0), Vec2::new(0.0, 1.0), Vec2::new(1.0, 0.0)],
            "cw"
        )
        .is_err());
        // Bowtie rejected.
        assert!(PolygonObstacle::new(
            vec![
                Vec2::new(0.0, 0.0),
                Vec2::new(1.0, 1.0),
                Vec2::new(1.0, 0.0),
                Vec2::new(0.0, 1.0),
            ],
            "bowtie"
        )
        .is_err());
    }

    #[test]
    fn first_hit_axis_crossing() {
        let sq = unit_square();
        let (hit, dist) =
            segment_first_hit(Vec2::new(-1.0, 0.5), Vec2::new(2.0, 0.5), &[sq]).unwrap();
        assert_relative_eq!(hit.x, 0.0, epsilon = 1e-12);
        assert_relative_eq!(hit.y, 0.5, epsilon = 1e-12);
        assert_relative_eq!(dist, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn first_hit_disjoint() {
        let sq = unit_square();
        assert!(segment_first_hit(Vec2::new(5.0, 5.0), Vec2::new(6.0, 6.0), &[sq]).is_none());
    }

    #[test]
    fn first_hit_from_inside_exits_at_edge() {
        // Oracle: test every edge, take the minimum distance.
        let sq = unit_square();
        let a = Vec2::new(0.25, 0.5);
        let b = Vec2::new(3.0, 0.5);
        let mut oracle: Option<f64> = None;
        for (c, d) in sq.edges() {
            if let Some(hit) = segment_intersection(a, b, c, d) {
                let dist = (hit - a).norm();
                oracle = Some(oracle.map_or(dist, |o: f64| o.min(dist)));
            }
        }
        let (hit, dist) = segment_first_hit(a, b, &[sq]).unwrap();
        assert_relative_eq!(dist, oracle.unwrap(), epsilon = 1e-12);
        assert_relative_eq!(dist, 0.75, epsilon = 1e-12);
        assert_relative_eq!(hit.x, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn boundary_distance_cases() {
        let space = TrackedSpace::new(Vec2::ZERO, Vec2::new(2.0, 2.0)).unwrap();
        let (d, n) = boundary_distance(&space, Vec2::new(1.0, 0.0)).unwrap();
        assert_relative_eq!(d, 1.0);
        assert_eq!(n, Vec2::new(1.0, 0.0));
        // Center: all walls tie, +x wins.
        let (d, n) = boundary_distance(&space, Vec2::ZERO).unwrap();
        assert_relative_eq!(d, 2.0);
        assert_eq!(n, Vec2::new(1.0, 0.0));
        // Corner tie also resolves to +x.
        let (d, n) = boundary_distance(&space, Vec2::new(1.9, 1.9)).unwrap();
        assert_relative_eq!(d, 0.1, epsilon = 1e-12);
        assert_eq!(n, Vec2::new(1.0, 0.0));
    }

    #[test]
    fn boundary_distance_outside_is_error() {
        let space = TrackedSpace::new(Vec2::ZERO, Vec2::new(2.0, 2.0)).unwrap();
        assert!(boundary_distance(&space, Vec2::new(2.5, 0.0)).is_err());
        // On a wall is still inside, with distance zero.
        let (d, _) = boundary_distance(&space, Vec2::new(2.0, 0.3)).unwrap();
        assert_eq!(d, 0.0);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn star_polygon(center: Vec2, angles: &[f64], radii: &[f64]) -> Option<PolygonObstacle> {
            let vertices: Vec<Vec2> = angles
                .iter()
                .zip(radii)
                .map(|(&a, &r)| center + Vec2::from_angle(a) * r)
                .collect();
            PolygonObstacle::new(vertices, "star").ok()
        }

        // Winding-number containment, independent of the crossing-count path.
        fn winding_inside(poly: &PolygonObstacle, p: Vec2) -> bool {
            let mut total = 0.0;
            for (a, b) in poly.edges() {
                let va = a - p;
                let vb = b - p;
                let cross = va.cross(vb);
                let dot = va.dot(vb);
                if cross.abs() < 1e-12 * va.norm().max(vb.norm()).max(1.0) && dot <= 1e-12 {
                    return true;
                }
                total += cross.atan2(dot);
            }
            total.abs() > std::f64::consts::PI
        }

        proptest! {
            #[test]
            fn pip_matches_winding_oracle(
                raw in proptest::collection::vec((0.0f64..std::f64::consts::TAU, 0.5f64..3.0), 3..9),
                px in -5.0f64..5.0, py in -5.0f64..5.0,
            ) {
                let mut angles: Vec<f64> = raw.iter().map(|r| r.0).collect();
                angles.sort_by(|a, b| a.total_cmp(b));
                angles.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
                prop_assume!(angles.len() >= 3);
                let radii: Vec<f64> = raw.iter().take(angles.len()).map(|r| r.1).collect();
                let Some(poly) = star_polygon(Vec2::ZERO, &angles, &radii) else {
                    return Ok(());
                };
                let p = Vec2::new(px, py);
                prop_assert_eq!(point_in_polygon(&poly, p), winding_inside(&poly, p));
            }

            // First hit is the minimum over all per-edge intersections.
            #[test]
            fn first_hit_is_min_over_edges(
                ax in -4.0f64..4.0, ay in -4.0f64..4.0,
                bx in -4.0f64..4.0, by in -4.0f64..4.0,
                cx in -2.0f64..2.0, cy in -2.0f64..2.0,
                half in 0.3f64..1.5,
            ) {
                let a = Vec2::new(ax, ay);
                let b = Vec2::new(bx, by);
                prop_assume!(a != b);
                let poly = PolygonObstacle::rect(Vec2::new(cx, cy), half, half, "box").unwrap();
                let brute: Option<f64> = poly
                    .edges()
                    .filter_map(|(c, d)| segment_intersection(a, b, c, d).map(|h| (h - a).norm()))
                    .min_by(|x, y| x.total_cmp(y));
                match (segment_first_hit(a, b, &[poly]), brute) {
                    (None, None) => {}
                    (Some((_, df)), Some(db)) => prop_assert!((df - db).abs() < 1e-12),
                    other => prop_assert!(false, "disagreement: {:?}", other),
                }
            }
        }
    }

    #[test]
    fn boundary_distance_lipschitz() {
        let space = TrackedSpace::new(Vec2::new(0.5, -0.25), Vec2::new(2.0, 1.5)).unwrap();
        let pts = [
            Vec2::new(0.0, 0.0),
            Vec2::new(1.2, 0.8),
            Vec2::new(-1.3, -1.6),
            Vec2::new(2.4, 1.2),
        ];
        for &a in &pts {
            for &b in &pts {
                let (da, _) = boundary_distance(&space, a).unwrap();
                let (db, _) = boundary_distance(&space, b).unwrap();
                assert!((da - db).abs() <= a.distance(b) + 1e-12);
            }
        }
    }
}
