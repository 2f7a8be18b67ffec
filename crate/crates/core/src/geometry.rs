//! Arclength-parameterized open arcs.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Number of grid points used by the construction-time validity checks.
pub const VALIDATION_GRID: usize = 2048;

/// Tolerance on `| |X'(s)| - 1 |` for an arc to count as unit speed.
pub const UNIT_SPEED_TOL: f64 = 1e-10;

/// Arc-chord constants below this value are treated as self-intersection.
pub const DEGENERATE_ARC_CHORD: f64 = 1e-8;

type CurveMap = Arc<dyn Fn(f64) -> [f64; 2] + Send + Sync>;

/// A smooth open arc `X: [a, b] -> R^2` parameterized by arclength.
///
/// Cloning is cheap: the position and tangent maps are shared.
#[derive(Clone)]
pub struct ArcParameterization {
    name: String,
    a: f64,
    b: f64,
    position: CurveMap,
    tangent: CurveMap,
}

impl fmt::Debug for ArcParameterization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ArcParameterization")
            .field("name", &self.name)
            .field("domain", &(self.a, self.b))
            .finish()
    }
}

impl ArcParameterization {
    /// Builds a custom arc and validates unit speed and the arc-chord
    /// condition on a fixed grid of [`VALIDATION_GRID`] points.
    pub fn new<P, T>(
        name: impl Into<String>,
        domain: (f64, f64),
        position: P,
        tangent: T,
    ) -> Result<Self>
    where
        P: Fn(f64) -> [f64; 2] + Send + Sync + 'static,
        T: Fn(f64) -> [f64; 2] + Send + Sync + 'static,
    {
        let (a, b) = domain;
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidArgument(format!(
                "arc domain [{a}, {b}] is empty"
            )));
        }
        let arc = Self {
            name: name.into(),
            a,
            b,
            position: Arc::new(position),
            tangent: Arc::new(tangent),
        };
        arc.check_unit_speed(VALIDATION_GRID)?;
        arc_chord_constant(&arc, VALIDATION_GRID)?;
        Ok(arc)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    /// Total arclength `b - a`.
    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    pub fn position(&self, s: f64) -> [f64; 2] {
        (self.position)(s)
    }

    pub fn tangent(&self, s: f64) -> [f64; 2] {
        (self.tangent)(s)
    }

    /// Unit normal, the tangent rotated counter-clockwise.
    pub fn normal(&self, s: f64) -> [f64; 2] {
        let [tx, ty] = self.tangent(s);
        [-ty, tx]
    }

    pub fn endpoints(&self) -> ([f64; 2], [f64; 2]) {
        (self.position(self.a), self.position(self.b))
    }

    /// `log(|X(s) - X(t)| / |s - t|)`, extended to the diagonal by `log|X'(s)|`.
    ///
    /// Below a separation of 1e-8 the difference quotient is replaced by the
    /// tangent at the midpoint, which agrees to second order.
    pub fn log_chord_ratio(&self, s: f64, t: f64) -> f64 {
        let ds = s - t;
        if ds.abs() < 1e-8 {
            let [tx, ty] = self.tangent(0.5 * (s + t));
            return tx.hypot(ty).ln();
        }
        let [xs, ys] = self.position(s);
        let [xt, yt] = self.position(t);
        ((xs - xt) / ds).hypot((ys - yt) / ds).ln()
    }

    /// Euclidean distance from `p` to the arc, estimated on `n` samples and
    /// refined by golden-section search around the closest sample.
    pub fn distance_to(&self, p: [f64; 2], n: usize) -> f64 {
        let n = n.max(2);
        let h = self.length() / (n - 1) as f64;
        let dist = |s: f64| {
            let [x, y] = self.position(s);
            (x - p[0]).hypot(y - p[1])
        };
        let mut best = (self.a, f64::INFINITY);
        for k in 0..n {
            let s = (self.a + k as f64 * h).min(self.b);
            let d = dist(s);
            if d < best.1 {
                best = (s, d);
            }
        }
        let (mut lo, mut hi) = ((best.0 - h).max(self.a), (best.0 + h).min(self.b));
        let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..80 {
            let m1 = hi - inv_phi * (hi - lo);
            let m2 = lo + inv_phi * (hi - lo);
            if dist(m1) < dist(m2) {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        best.1.min(dist(0.5 * (lo + hi)))
    }

    fn check_unit_speed(&self, n: usize) -> Result<()> {
        for k in 0..n {
            let s = self.a + (self.b - self.a) * k as f64 / (n - 1) as f64;
            let [tx, ty] = self.tangent(s);
            let speed = tx.hypot(ty);
            if (speed - 1.0).abs() > UNIT_SPEED_TOL {
                return Err(Error::NotUnitSpeed {
                    name: self.name.clone(),
                    s,
                    speed,
                });
            }
        }
        Ok(())
    }
}

/// A parameter value together with its distances to both ends of the
/// domain.
///
/// Quadrature near an endpoint produces points whose distance to that
/// endpoint is far smaller than `s` itself; carrying `dl = s - a` and
/// `dr = b - s` separately keeps `d^{-1/2}` evaluations accurate there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamPoint {
    pub s: f64,
    pub dl: f64,
    pub dr: f64,
}

impl ParamPoint {
    pub fn in_domain(s: f64, (a, b): (f64, f64)) -> Self {
        Self {
            s,
            dl: s - a,
            dr: b - s,
        }
    }
}

/// The straight segment `{(s, 0) : s in [-1, 1]}`.
pub fn make_segment() -> ArcParameterization {
    ArcParameterization {
        name: "segment".into(),
        a: -1.0,
        b: 1.0,
        position: Arc::new(|s| [s, 0.0]),
        tangent: Arc::new(|_| [1.0, 0.0]),
    }
}

/// The upper unit semicircle `{(cos s, sin s) : s in [0, pi]}`.
pub fn make_semicircle() -> ArcParameterization {
    ArcParameterization {
        name: "semicircle".into(),
        a: 0.0,
        b: PI,
        position: Arc::new(|s| [s.cos(), s.sin()]),
        tangent: Arc::new(|s| [-s.sin(), s.cos()]),
    }
}

/// Looks up one of the built-in arcs by name.
pub fn arc_by_name(name: &str) -> Result<ArcParameterization> {
    match name {
        "segment" => Ok(make_segment()),
        "semicircle" => Ok(make_semicircle()),
        other => Err(Error::InvalidArgument(format!("unknown arc `{other}`"))),
    }
}

/// Minimum of `|X(s) - X(t)| / |s - t|` over all pairs of `n_samples`
/// uniformly spaced parameters.
///
/// Grids are nested across calls only when the sample counts are, so the
/// estimate is an upper bound on the true infimum that can only decrease as
/// pairs are added.
pub fn arc_chord_constant(arc: &ArcParameterization, n_samples: usize) -> Result<f64> {
    if n_samples < 2 {
        return Err(Error::InvalidArgument(
            "arc_chord_constant needs at least 2 samples".into(),
        ));
    }
    let (a, b) = arc.domain();
    let params: Vec<f64> = (0..n_samples)
        .map(|k| a + (b - a) * k as f64 / (n_samples - 1) as f64)
        .collect();
    let points: Vec<[f64; 2]> = params.iter().map(|&s| arc.position(s)).collect();
    let mut min_ratio = f64::INFINITY;
    for i in 0..n_samples {
        for j in (i + 1)..n_samples {
            let chord = (points[i][0] - points[j][0]).hypot(points[i][1] - points[j][1]);
            let ratio = chord / (params[j] - params[i]);
            min_ratio = min_ratio.min(ratio);
        }
    }
    if min_ratio < DEGENERATE_ARC_CHORD {
        return Err(Error::DegenerateGeometry {
            constant: min_ratio,
        });
    }
    Ok(min_ratio)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn segment_basics() {
        let seg = make_segment();
        assert_eq!(seg.position(0.0), [0.0, 0.0]);
        let [tx, ty] = seg.tangent(0.7);
        assert_abs_diff_eq!(tx.hypot(ty), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            arc_chord_constant(&seg, 1000).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(arc_chord_constant(&seg, 100).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn semicircle_basics() {
        let arc = make_semicircle();
        let [x, y] = arc.position(PI / 2.0);
        assert_abs_diff_eq!(x, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(y, 1.0, epsilon = 1e-15);
        let [tx, ty] = arc.tangent(1.1);
        assert_abs_diff_eq!(tx.hypot(ty), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn semicircle_arc_chord_matches_dense_minimum() {
        // Independent route: the chord ratio depends only on u = |s - t| and
        // equals 2 sin(u/2) / u, so scan u on a fine grid.
        let oracle = (1..=200_000)
            .map(|k| {
                let u = PI * k as f64 / 200_000.0;
                2.0 * (0.5 * u).sin() / u
            })
            .fold(f64::INFINITY, f64::min);
        assert_abs_diff_eq!(oracle, 2.0 / PI, epsilon = 1e-12);
        let c = arc_chord_constant(&make_semicircle(), 2000).unwrap();
        assert_abs_diff_eq!(c, 0.63662, epsilon = 1e-3);
    }

    #[test]
    fn figure_eight_is_degenerate() {
        // Lemniscate-like curve through the origin twice. Tangents are not
        // unit length, so exercise the arc-chord routine directly.
        let arc = ArcParameterization {
            name: "eight".into(),
            a: 0.0,
            b: 2.0 * PI,
            position: Arc::new(|s| [s.sin(), (2.0 * s).sin() / 2.0]),
            tangent: Arc::new(|_| [1.0, 0.0]),
        };
        assert!(matches!(
            arc_chord_constant(&arc, 401),
            Err(Error::DegenerateGeometry { .. })
        ));
    }

    #[test]
    fn custom_arc_rejects_non_unit_speed() {
        let err = ArcParameterization::new("fast", (0.0, 1.0), |s| [2.0 * s, 0.0], |_| [2.0, 0.0]);
        assert!(matches!(err, Err(Error::NotUnitSpeed { .. })));
    }

    #[test]
    fn custom_arc_accepts_rotated_segment() {
        let (c, s) = (0.6, 0.8);
        let arc = ArcParameterization::new(
            "rotated",
            (0.0, 1.5),
            move |t| [c * t, s * t],
            move |_| [c, s],
        )
        .unwrap();
        assert_abs_diff_eq!(arc.log_chord_ratio(0.1, 0.9), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn arc_chord_nonincreasing_in_nested_samples() {
        let arc = make_semicircle();
        let mut prev = f64::INFINITY;
        for n in [3, 5, 9, 17, 33, 65, 129] {
            let c = arc_chord_constant(&arc, n).unwrap();
            assert!(c <= prev + 1e-15);
            prev = c;
        }
    }

    #[test]
    fn registered_arcs_unit_speed_and_lipschitz() {
        for arc in [make_segment(), make_semicircle()] {
            let (a, b) = arc.domain();
            for k in 0..1000 {
                let s = a + (b - a) * k as f64 / 999.0;
                let [tx, ty] = arc.tangent(s);
                assert!((tx.hypot(ty) - 1.0).abs() <= 1e-10);
                let delta = 1e-4;
                if s + delta <= b {
                    let [x0, y0] = arc.position(s);
                    let [x1, y1] = arc.position(s + delta);
                    assert!((x1 - x0).hypot(y1 - y0) <= (1.0 + 1e-6) * delta);
                }
            }
        }
    }

    #[test]
    fn semicircle_log_chord_ratio() {
        let arc = make_semicircle();
        assert_abs_diff_eq!(arc.log_chord_ratio(1.0, 1.0), 0.0, epsilon = 1e-15);
        let u: f64 = 1.3;
        assert_abs_diff_eq!(
            arc.log_chord_ratio(0.2, 0.2 + u),
            (2.0 * (0.5 * u).sin() / u).ln(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn distance_to_semicircle() {
        let arc = make_semicircle();
        assert_abs_diff_eq!(arc.distance_to([0.0, 0.0], 64), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(arc.distance_to([0.0, 1.5], 64), 0.5, epsilon = 1e-10);
        assert_abs_diff_eq!(arc.distance_to([2.0, 0.0], 64), 1.0, epsilon = 1e-10);
    }
}
