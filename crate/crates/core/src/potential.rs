//! The exterior field `u = V psi_h` evaluated off the arc.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::{integration_pieces, Piece, QuadratureOrders, RuleSet};
use crate::solver::Solution;
use crate::spaces::{EnrichedSpace, Method};

/// Default exclusion distance as a fraction of the arc length.
pub const DEFAULT_GUARD_FRACTION: f64 = 1e-3;

/// A subpiece is split while the evaluation point lies closer to its
/// midpoint than this many subpiece lengths.
const NEAR_RATIO: f64 = 1.0;

const MAX_DEPTH: usize = 60;

/// Samples used to locate the closest point of the arc.
const DISTANCE_SAMPLES: usize = 512;

pub fn default_guard(sol: &Solution) -> f64 {
    DEFAULT_GUARD_FRACTION * sol.arc.length()
}

/// `u(x) = -(1/2 pi) int ln|x - X(t)| psi_h(t) dt`, refusing points closer
/// than the default guard to the arc.
pub fn eval_potential(sol: &Solution, point: [f64; 2]) -> Result<f64> {
    eval_potential_guarded(sol, point, default_guard(sol))
}

/// As [`eval_potential`] with an explicit guard; a guard of zero admits
/// points on the arc, where the log singularity is integrable.
pub fn eval_potential_guarded(sol: &Solution, point: [f64; 2], guard: f64) -> Result<f64> {
    if guard > 0.0 {
        let distance = sol.arc.distance_to(point, DISTANCE_SAMPLES);
        if distance < guard {
            return Err(Error::TooCloseToArc {
                x: point[0],
                y: point[1],
                distance,
                guard,
            });
        }
    }
    Ok(PotentialEvaluator::new(sol).eval(point))
}

/// Reusable state for evaluating the potential of one solution at many
/// points. Performs no guard checks.
pub struct PotentialEvaluator<'a> {
    sol: &'a Solution,
    pieces: Vec<Piece>,
    rules: RuleSet,
}

impl<'a> PotentialEvaluator<'a> {
    pub fn new(sol: &'a Solution) -> Self {
        let orders = QuadratureOrders::default();
        let pieces = integration_pieces(
            sol.psi_space.partition(),
            sol.psi_space.method() == Method::Enriched,
            orders.transition_split,
        );
        Self {
            sol,
            pieces,
            rules: RuleSet::new(orders).expect("default orders are valid"),
        }
    }

    pub fn eval(&self, point: [f64; 2]) -> f64 {
        if self.sol.psi_coeffs.iter().all(|&c| c == 0.0) {
            return 0.0;
        }
        let total: f64 = self
            .pieces
            .iter()
            .map(|p| self.piece_integral(p, point, 0.0, 1.0, 0))
            .sum();
        -total / (2.0 * PI)
    }

    fn piece_integral(
        &self,
        piece: &Piece,
        point: [f64; 2],
        x0: f64,
        x1: f64,
        depth: usize,
    ) -> f64 {
        let (lo, _) = piece.point(x0);
        let (hi, _) = piece.point(x1);
        let (mid, _) = piece.point(0.5 * (x0 + x1));
        let len = (hi.s - lo.s).abs();
        let [mx, my] = self.sol.arc.position(mid.s);
        if depth < MAX_DEPTH && (mx - point[0]).hypot(my - point[1]) < NEAR_RATIO * len {
            let xm = 0.5 * (x0 + x1);
            return self.piece_integral(piece, point, x0, xm, depth + 1)
                + self.piece_integral(piece, point, xm, x1, depth + 1);
        }
        let (xs, ws) = self.rules.base();
        let space = &self.sol.psi_space;
        let active = space.active_on_element(piece.element);
        let mut sum = 0.0;
        for (&xi, &wi) in xs.iter().zip(ws) {
            let (pt, jac) = piece.point(x0 + (x1 - x0) * xi);
            let density = density_at(space, &self.sol.psi_coeffs, &active, piece.element, &pt);
            let [x, y] = self.sol.arc.position(pt.s);
            let r = (x - point[0]).hypot(y - point[1]);
            if r > 0.0 {
                sum += wi * jac * r.ln() * density;
            }
        }
        sum * (x1 - x0)
    }
}

fn density_at(
    space: &EnrichedSpace,
    coeffs: &[f64],
    active: &[usize],
    element: usize,
    pt: &crate::geometry::ParamPoint,
) -> f64 {
    active
        .iter()
        .map(|&i| coeffs[i] * space.eval_on_element(i, element, pt, false))
        .sum()
}

/// Rectangle and resolution of a sampling grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
    /// Exclusion distance; `None` uses the default guard.
    pub exclusion: Option<f64>,
}

impl GridSpec {
    pub fn square(half_width: f64, n: usize) -> Self {
        Self {
            x_min: -half_width,
            x_max: half_width,
            y_min: -half_width,
            y_max: half_width,
            nx: n,
            ny: n,
            exclusion: None,
        }
    }

    fn coordinate(lo: f64, hi: f64, n: usize, k: usize) -> f64 {
        if n == 1 {
            0.5 * (lo + hi)
        } else {
            lo + (hi - lo) * k as f64 / (n - 1) as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldSample {
    pub x: f64,
    pub y: f64,
    /// Empty for masked points.
    pub u: Option<f64>,
    #[serde(serialize_with = "flag")]
    pub masked: bool,
}

fn flag<S: serde::Serializer>(b: &bool, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_u8(u8::from(*b))
}

/// Potential sampled on a grid; rows run along `x` with `y` increasing
/// from one row to the next.
#[derive(Debug, Clone)]
pub struct FieldGrid {
    pub spec: GridSpec,
    pub exclusion: f64,
    pub samples: Vec<FieldSample>,
}

impl FieldGrid {
    pub fn evaluated(&self) -> impl Iterator<Item = &FieldSample> {
        self.samples.iter().filter(|s| !s.masked)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for s in &self.samples {
            w.serialize(s)
                .map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
        }
        w.flush()
            .map_err(|e| Error::InvalidArgument(format!("csv: {e}")))
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| {
            Error::InvalidArgument(format!("cannot create {}: {e}", path.display()))
        })?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// Evaluates the potential on a grid, masking points within the exclusion
/// distance of the arc.
pub fn field_grid(sol: &Solution, spec: GridSpec) -> Result<FieldGrid> {
    if spec.nx == 0 || spec.ny == 0 || !(spec.x_max >= spec.x_min) || !(spec.y_max >= spec.y_min) {
        return Err(Error::InvalidArgument(format!("invalid grid {spec:?}")));
    }
    let exclusion = spec.exclusion.unwrap_or_else(|| default_guard(sol));
    let points: Vec<[f64; 2]> = (0..spec.ny)
        .flat_map(|j| {
            (0..spec.nx).map(move |i| {
                [
                    GridSpec::coordinate(spec.x_min, spec.x_max, spec.nx, i),
                    GridSpec::coordinate(spec.y_min, spec.y_max, spec.ny, j),
                ]
            })
        })
        .collect();
    let evaluator = PotentialEvaluator::new(sol);
    let sample = |p: [f64; 2]| {
        let masked = sol.arc.distance_to(p, DISTANCE_SAMPLES) < exclusion;
        FieldSample {
            x: p[0],
            y: p[1],
            u: (!masked).then(|| evaluator.eval(p)),
            masked,
        }
    };
    let workers = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(points.len());
    let samples = if workers <= 1 {
        points.iter().map(|&p| sample(p)).collect()
    } else {
        let chunk = points.len().div_ceil(workers);
        std::thread::scope(|scope| {
            let handles: Vec<_> = points
                .chunks(chunk)
                .map(|c| scope.spawn(|| c.iter().map(|&p| sample(p)).collect::<Vec<_>>()))
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("grid worker panicked"))
                .collect()
        })
    };
    Ok(FieldGrid {
        spec,
        exclusion,
        samples,
    })
}

/// Outcome of [`jump_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpCheck {
    /// `n . (grad u(x - delta n) - grad u(x + delta n))`.
    pub jump: f64,
    pub psi: f64,
}

impl JumpCheck {
    pub fn relative_error(&self) -> f64 {
        (self.jump - self.psi).abs() / self.psi.abs()
    }
}

/// Normal-derivative jump of the potential across the arc at parameter `s`,
/// by central differences of step `delta / 4` at `x +- delta n`.
pub fn jump_check(sol: &Solution, s: f64, delta: f64) -> Result<JumpCheck> {
    let (a, b) = sol.domain();
    let guard = default_guard(sol);
    if !(delta >= guard) {
        return Err(Error::InvalidArgument(format!(
            "offset {delta:.3e} is below the exclusion distance {guard:.3e}"
        )));
    }
    if s - a < 4.0 * delta || b - s < 4.0 * delta {
        return Err(Error::InvalidArgument(format!(
            "parameter {s} is closer than 4 delta to an endpoint of [{a}, {b}]"
        )));
    }
    let evaluator = PotentialEvaluator::new(sol);
    let [x, y] = sol.arc.position(s);
    let [nx, ny] = sol.arc.normal(s);
    let u = |t: f64| evaluator.eval([x + t * nx, y + t * ny]);
    let step = 0.25 * delta;
    let normal_derivative = |t: f64| (u(t + step) - u(t - step)) / (2.0 * step);
    Ok(JumpCheck {
        jump: normal_derivative(-delta) - normal_derivative(delta),
        psi: sol.psi(s)?,
    })
}

/// Five-point discrete Laplacian of the potential at `point` with spacing
/// `h`.
pub fn discrete_laplacian(sol: &Solution, point: [f64; 2], h: f64) -> Result<f64> {
    let guard = default_guard(sol);
    let distance = sol.arc.distance_to(point, DISTANCE_SAMPLES);
    if distance - h < guard {
        return Err(Error::TooCloseToArc {
            x: point[0],
            y: point[1],
            distance,
            guard,
        });
    }
    let evaluator = PotentialEvaluator::new(sol);
    let [x, y] = point;
    let centre = evaluator.eval(point);
    let sum = evaluator.eval([x + h, y])
        + evaluator.eval([x - h, y])
        + evaluator.eval([x, y + h])
        + evaluator.eval([x, y - h]);
    Ok((sum - 4.0 * centre) / (h * h))
}
