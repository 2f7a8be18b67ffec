//! Globally adaptive Gauss–Kronrod (7, 15) integration.
//!
//! Used as the independent oracle for every specialized rule, so it shares
//! no code with them.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Hard cap on the number of subintervals.
pub const MAX_SUBINTERVALS: usize = 4000;

const ROUNDOFF_FACTOR: f64 = 50.0;

struct Segment {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: FnMut(f64) -> f64>(f: &mut F, lo: f64, hi: f64) -> (f64, f64) {
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    let fc = f(mid);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let sum = f(mid - dx) + f(mid + dx);
        kron += WGK[j] * sum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * sum;
        }
    }
    (kron * half, ((kron - gauss) * half).abs())
}

/// Integrates `f` over `interval` to relative accuracy `tol`.
///
/// The integrand is never evaluated at the interval endpoints, so algebraic
/// and logarithmic endpoint singularities are admissible.
pub fn adaptive_integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    interval: (f64, f64),
    tol: f64,
) -> Result<f64> {
    adaptive_with_breakpoints(&mut f, interval, &[], tol)
}

/// Like [`adaptive_integrate`] but starts from a partition that includes the
/// given interior `breakpoints`, where the integrand may be singular.
pub fn adaptive_with_breakpoints<F: FnMut(f64) -> f64>(
    f: &mut F,
    interval: (f64, f64),
    breakpoints: &[f64],
    tol: f64,
) -> Result<f64> {
    let (a, b) = interval;
    if !(a < b) || !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "adaptive_integrate needs a < b and tol > 0 (got [{a}, {b}], tol = {tol})"
        )));
    }
    let mut cuts = vec![a];
    let mut interior: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&p| p > a && p < b)
        .collect();
    interior.sort_by(|x, y| x.total_cmp(y));
    cuts.extend(interior);
    cuts.push(b);

    let mut heap = BinaryHeap::new();
    let (mut total, mut err_total, mut abs_total) = (0.0, 0.0, 0.0);
    for w in cuts.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let (value, error) = kronrod(f, w[0], w[1]);
        total += value;
        err_total += error;
        abs_total += value.abs();
        heap.push(Segment {
            lo: w[0],
            hi: w[1],
            value,
            error,
        });
    }

    let mut count = heap.len();
    loop {
        if !(err_total.is_finite() && total.is_finite()) {
            return Err(Error::QuadratureNotConverged {
                estimate: err_total,
                subdivisions: count,
            });
        }
        // Cancellation floor: a vanishing integral is only resolvable to
        // rounding relative to the magnitude of its pieces.
        let floor = ROUNDOFF_FACTOR * f64::EPSILON * abs_total;
        if err_total <= (tol * total.abs()).max(floor) || err_total <= 1e-300 {
            break;
        }
        if count >= MAX_SUBINTERVALS {
            return Err(Error::QuadratureNotConverged {
                estimate: err_total,
                subdivisions: count,
            });
        }
        let seg = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (seg.lo + seg.hi);
        if mid <= seg.lo || mid >= seg.hi {
            // Interval cannot be split further in floating point.
            return Err(Error::QuadratureNotConverged {
                estimate: err_total,
                subdivisions: count,
            });
        }
        let (v1, e1) = kronrod(f, seg.lo, mid);
        let (v2, e2) = kronrod(f, mid, seg.hi);
        total += v1 + v2 - seg.value;
        abs_total += v1.abs() + v2.abs() - seg.value.abs();
        err_total += e1 + e2 - seg.error;
        heap.push(Segment {
            lo: seg.lo,
            hi: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            lo: mid,
            hi: seg.hi,
            value: v2,
            error: e2,
        });
        count += 1;
        if count % 64 == 0 {
            // Refresh the running sums to stop cancellation drift.
            total = heap.iter().map(|s| s.value).sum();
            err_total = heap.iter().map(|s| s.error).sum();
            abs_total = heap.iter().map(|s| s.value.abs()).sum();
        }
    }
    Ok(heap.iter().map(|s| s.value).sum())
}
