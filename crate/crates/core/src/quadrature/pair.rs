//! Double integrals against the kernel `log|s - t|` and against smooth
//! kernels, over pairs of integration pieces.
//!
//! The parameter domain is cut into pieces (mesh elements, or subpieces of
//! elements in the cutoff transition zone). Each piece carries a map from
//! the reference interval [0, 1]. Pieces touching a domain endpoint use the
//! quadratic map `s = a + L u^2`, whose Jacobian `2 L u` cancels the
//! `d^{-1/2}` endpoint behaviour of the enriched density space, so every
//! pulled-back integrand is smooth in reference coordinates.
//!
//! A pair of pieces is either identical, touching at one point, or
//! separated. Identical and touching pairs are split along the singular
//! set and transformed so the singularity becomes a `ln x` factor in one
//! variable, integrated by the `-ln x` Gauss rule.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{ArcParameterization, ParamPoint};
use crate::spaces::{CutoffFunction, Partition};

use super::rules::{legendre_reference, log_weight};
use super::QuadratureOrders;

/// Target relative accuracy when choosing reduced orders for separated
/// pairs.
const FAR_FIELD_EPS: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PieceMap {
    /// `s = lo + L x`.
    Affine,
    /// `s = lo + L x^2`; the piece starts at the left domain endpoint.
    GradedLeft,
    /// `s = hi - L x^2`; the piece ends at the right domain endpoint.
    GradedRight,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PieceEnd {
    Lo,
    Hi,
}

/// A parameter subinterval `[lo, hi]` of mesh element `element`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    /// `lo - a`, the distance of `lo` from the left domain end.
    pub dl_lo: f64,
    /// `b - hi`, the distance of `hi` from the right domain end.
    pub dr_hi: f64,
    pub element: usize,
    pub map: PieceMap,
    /// Set for subpieces of the cutoff transition zone, where the enriched
    /// basis is smooth but not close to polynomial.
    pub transition: bool,
}

impl Piece {
    pub fn new(lo: f64, hi: f64, domain: (f64, f64), element: usize, map: PieceMap) -> Self {
        Self {
            lo,
            hi,
            dl_lo: lo - domain.0,
            dr_hi: domain.1 - hi,
            element,
            map,
            transition: false,
        }
    }

    pub fn in_transition(mut self) -> Self {
        self.transition = true;
        self
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    /// Point and Jacobian `ds/dx` at reference coordinate `x` in [0, 1].
    pub fn point(&self, x: f64) -> (ParamPoint, f64) {
        let len = self.length();
        match self.map {
            PieceMap::Affine => (
                ParamPoint {
                    s: self.lo + len * x,
                    dl: self.dl_lo + len * x,
                    dr: self.dr_hi + len * (1.0 - x),
                },
                len,
            ),
            PieceMap::GradedLeft => {
                let d = len * x * x;
                (
                    ParamPoint {
                        s: self.lo + d,
                        dl: self.dl_lo + d,
                        dr: self.dr_hi + len * (1.0 - x) * (1.0 + x),
                    },
                    2.0 * len * x,
                )
            }
            PieceMap::GradedRight => {
                let d = len * x * x;
                (
                    ParamPoint {
                        s: self.hi - d,
                        dl: self.dl_lo + len * (1.0 - x) * (1.0 + x),
                        dr: self.dr_hi + d,
                    },
                    2.0 * len * x,
                )
            }
        }
    }

    /// Point, Jacobian and `alpha(x)` for a reference coordinate measured
    /// from `end`, such that the distance of the point from that end is
    /// `x * alpha(x)` with `alpha` smooth and positive.
    ///
    /// A graded piece can only be approached from its interior end.
    pub fn from_end(&self, end: PieceEnd, x: f64) -> (ParamPoint, f64, f64) {
        let len = self.length();
        match (self.map, end) {
            (PieceMap::Affine, PieceEnd::Lo) => {
                let (p, j) = self.point(x);
                (p, j, len)
            }
            (PieceMap::Affine, PieceEnd::Hi) => {
                let (p, j) = self.point(1.0 - x);
                (p, j, len)
            }
            (PieceMap::GradedLeft, PieceEnd::Hi) | (PieceMap::GradedRight, PieceEnd::Lo) => {
                let (p, j) = self.point(1.0 - x);
                (p, j, len * (2.0 - x))
            }
            _ => unreachable!("graded pieces only touch other pieces at their interior end"),
        }
    }

    /// Location, in [-1, 1] reference units measured from this piece, of the
    /// nearest point of a singularity lying `gap` beyond `toward`.
    fn singularity_location(&self, gap: f64) -> f64 {
        let ratio = gap / self.length();
        match self.map {
            PieceMap::Affine => 1.0 + 2.0 * ratio,
            PieceMap::GradedLeft | PieceMap::GradedRight => 2.0 * (1.0 + ratio).sqrt() - 1.0,
        }
    }
}

/// Splits the partition into integration pieces.
///
/// The two end pieces are graded. When `enriched` is set, elements meeting
/// the cutoff transition zone (scaled distance in `[1/8, 1/4]` from either
/// end) are split into `split` equal subpieces.
pub fn integration_pieces(partition: &Partition, enriched: bool, split: usize) -> Vec<Piece> {
    let domain = partition.domain();
    let (a, b) = domain;
    let half = 0.5 * (b - a);
    let (t_lo, t_hi) = (
        CutoffFunction::PLATEAU * half,
        CutoffFunction::SUPPORT * half,
    );
    let n = partition.num_elements();
    let mut pieces = Vec::with_capacity(n + 4 * split);
    for e in 0..n {
        let (lo, hi) = partition.element(e);
        let tol = 1e-12 * (b - a);
        let in_zone = |d_near: f64, d_far: f64| d_near < t_hi - tol && d_far > t_lo + tol;
        let zone = enriched && (in_zone(lo - a, hi - a) || in_zone(b - hi, b - lo));
        let parts = if zone { split.max(1) } else { 1 };
        for k in 0..parts {
            let plo = if k == 0 {
                lo
            } else {
                lo + (hi - lo) * k as f64 / parts as f64
            };
            let phi = if k + 1 == parts {
                hi
            } else {
                lo + (hi - lo) * (k + 1) as f64 / parts as f64
            };
            let map = if e == 0 && k == 0 {
                PieceMap::GradedLeft
            } else if e + 1 == n && k + 1 == parts {
                PieceMap::GradedRight
            } else {
                PieceMap::Affine
            };
            let piece = Piece::new(plo, phi, domain, e, map);
            pieces.push(if zone { piece.in_transition() } else { piece });
        }
    }
    pieces
}

/// One node of a double-integral rule over a pair of pieces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairNode {
    pub s: ParamPoint,
    pub t: ParamPoint,
    pub w: f64,
}

/// Gauss rules on [0, 1] at the base order and its reductions, plus the
/// `-ln x` rule.
#[derive(Debug, Clone)]
pub struct RuleSet {
    orders: QuadratureOrders,
    gauss: Vec<(usize, Vec<f64>, Vec<f64>)>,
    log_nodes: Vec<f64>,
    log_weights: Vec<f64>,
}

impl RuleSet {
    pub fn new(orders: QuadratureOrders) -> Result<Self> {
        if orders.gauss < 4
            || orders.gauss > super::MAX_ORDER
            || orders.log < 1
            || orders.log > super::MAX_ORDER
        {
            return Err(Error::InvalidArgument(format!(
                "unsupported quadrature orders {orders:?}"
            )));
        }
        let mut levels = vec![orders.gauss];
        for div in [2, 4] {
            let n = (orders.gauss / div).max(2);
            if !levels.contains(&n) {
                levels.push(n);
            }
        }
        levels.sort_unstable();
        let gauss = levels
            .into_iter()
            .map(|n| {
                let (x, w) = legendre_reference(n);
                (
                    n,
                    x.iter().map(|t| 0.5 * (t + 1.0)).collect(),
                    w.iter().map(|v| 0.5 * v).collect(),
                )
            })
            .collect();
        let log = log_weight(orders.log)?;
        Ok(Self {
            orders,
            gauss,
            log_nodes: log.nodes,
            log_weights: log.weights,
        })
    }

    pub fn orders(&self) -> QuadratureOrders {
        self.orders
    }

    /// Gauss–Legendre nodes and weights on [0, 1] at one of the available
    /// orders (see [`available`](Self::available)).
    pub fn gauss01(&self, n: usize) -> (&[f64], &[f64]) {
        let (_, x, w) = self
            .gauss
            .iter()
            .find(|(m, _, _)| *m == n)
            .expect("requested Gauss order is not part of the rule set");
        (x, w)
    }

    pub fn base(&self) -> (&[f64], &[f64]) {
        self.gauss01(self.orders.gauss)
    }

    pub fn available(&self) -> impl Iterator<Item = usize> + '_ {
        self.gauss.iter().map(|(n, _, _)| *n)
    }

    pub fn log01(&self) -> (&[f64], &[f64]) {
        (&self.log_nodes, &self.log_weights)
    }

    /// Orders for a separated pair, chosen so that the Gauss error bound
    /// `rho^{-2n}` for an integrand analytic inside the Bernstein ellipse
    /// reaching the other piece, or an endpoint of the domain for affine
    /// pieces, stays below 1e-15. Transition pieces keep the base order.
    pub fn far_orders(&self, p: &Piece, q: &Piece) -> (usize, usize) {
        let gap = if p.hi <= q.lo {
            q.lo - p.hi
        } else {
            p.lo - q.hi
        };
        let pick = |piece: &Piece| {
            if piece.transition {
                return self.orders.gauss;
            }
            let nearest = match piece.map {
                PieceMap::Affine => gap.min(piece.dl_lo).min(piece.dr_hi),
                PieceMap::GradedLeft | PieceMap::GradedRight => gap,
            };
            let x = piece.singularity_location(nearest);
            let rho = x + (x * x - 1.0).max(0.0).sqrt();
            let needed = (-FAR_FIELD_EPS.ln()) / (2.0 * rho.ln());
            self.available()
                .find(|&n| n as f64 >= needed)
                .unwrap_or(self.orders.gauss)
        };
        (pick(p), pick(q))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum PairKind {
    Same,
    /// First piece ends where the second begins.
    Touching,
    /// Second piece ends where the first begins.
    TouchingReversed,
    Separated,
}

pub(crate) fn classify(p: &Piece, q: &Piece) -> Result<PairKind> {
    if p.lo == q.lo && p.hi == q.hi {
        if p.map != q.map {
            return Err(Error::InvalidArgument(
                "identical pieces with different maps".into(),
            ));
        }
        return Ok(PairKind::Same);
    }
    if p.hi == q.lo {
        return Ok(PairKind::Touching);
    }
    if q.hi == p.lo {
        return Ok(PairKind::TouchingReversed);
    }
    if p.hi < q.lo || q.hi < p.lo {
        return Ok(PairKind::Separated);
    }
    Err(Error::InvalidArgument(format!(
        "pieces [{}, {}] and [{}, {}] overlap without coinciding",
        p.lo, p.hi, q.lo, q.hi
    )))
}

/// Nodes for `int_p int_q F(s) G(t) ln|s - t| dt ds` on an identical or
/// touching pair.
pub(crate) fn near_log_nodes(
    rules: &RuleSet,
    p: &Piece,
    q: &Piece,
    kind: PairKind,
) -> Vec<PairNode> {
    match kind {
        PairKind::Same => same_piece_nodes(rules, p),
        PairKind::Touching => touching_nodes(rules, p, q),
        PairKind::TouchingReversed => touching_nodes(rules, q, p)
            .into_iter()
            .map(|n| PairNode {
                s: n.t,
                t: n.s,
                w: n.w,
            })
            .collect(),
        PairKind::Separated => unreachable!("separated pairs use tensor rules"),
    }
}

fn same_piece_nodes(rules: &RuleSet, p: &Piece) -> Vec<PairNode> {
    let (gx, gw) = rules.base();
    let (lx, lw) = rules.log01();
    let ln_len = p.length().ln();
    let graded = p.map != PieceMap::Affine;
    let mut out = Vec::with_capacity(gx.len() * gx.len() + 8 * gx.len() * lx.len());

    // ln L, separable.
    for (&xi, &wi) in gx.iter().zip(gw) {
        let (s, js) = p.point(xi);
        for (&xj, &wj) in gx.iter().zip(gw) {
            let (t, jt) = p.point(xj);
            out.push(PairNode {
                s,
                t,
                w: wi * wj * js * jt * ln_len,
            });
        }
    }

    let push_mirrored = |x: f64, y: f64, w: f64, out: &mut Vec<PairNode>| {
        let (s, js) = p.point(x);
        let (t, jt) = p.point(y);
        let w = w * js * jt;
        out.push(PairNode { s, t, w });
        out.push(PairNode { s: t, t: s, w });
    };

    // ln|x - y| on the triangle y < x with y = x (1 - v):
    // x * [ln x + ln v] dv dx.
    for (&x, &wl) in lx.iter().zip(lw) {
        for (&v, &wg) in gx.iter().zip(gw) {
            push_mirrored(x, x * (1.0 - v), -wl * wg * x, &mut out);
        }
    }
    for (&x, &wg) in gx.iter().zip(gw) {
        for (&v, &wl) in lx.iter().zip(lw) {
            push_mirrored(x, x * (1.0 - v), -wg * wl * x, &mut out);
        }
    }

    if graded {
        // |s - t| = L |u - v| (u + v); the ln(u + v) factor is singular only
        // at the corner u = v = 0. On v < u with v = u w:
        // u * [ln u + ln(1 + w)].
        for (&u, &wl) in lx.iter().zip(lw) {
            for (&w, &wg) in gx.iter().zip(gw) {
                push_mirrored(u, u * w, -wl * wg * u, &mut out);
            }
        }
        for (&u, &wu) in gx.iter().zip(gw) {
            for (&w, &ww) in gx.iter().zip(gw) {
                push_mirrored(u, u * w, wu * ww * u * (1.0 + w).ln(), &mut out);
            }
        }
    }
    out
}

/// `p` ends where `q` begins. With `x`, `y` measured from the shared point,
/// `|s - t| = x alpha_p(x) + y alpha_q(y)`.
fn touching_nodes(rules: &RuleSet, p: &Piece, q: &Piece) -> Vec<PairNode> {
    let (gx, gw) = rules.base();
    let (lx, lw) = rules.log01();
    let mut out = Vec::with_capacity(2 * gx.len() * (gx.len() + lx.len()));

    // Triangle y <= x, y = x w: x [ln x + ln(alpha_p(x) + w alpha_q(x w))].
    for (&w, &ww) in gx.iter().zip(gw) {
        for (&x, &wl) in lx.iter().zip(lw) {
            let (s, js, _) = p.from_end(PieceEnd::Hi, x);
            let (t, jt, _) = q.from_end(PieceEnd::Lo, x * w);
            out.push(PairNode {
                s,
                t,
                w: -wl * ww * x * js * jt,
            });
        }
        for (&x, &wx) in gx.iter().zip(gw) {
            let (s, js, ap) = p.from_end(PieceEnd::Hi, x);
            let (t, jt, aq) = q.from_end(PieceEnd::Lo, x * w);
            out.push(PairNode {
                s,
                t,
                w: wx * ww * x * js * jt * (ap + w * aq).ln(),
            });
        }
    }
    // Triangle x <= y, x = y w: y [ln y + ln(w alpha_p(y w) + alpha_q(y))].
    for (&w, &ww) in gx.iter().zip(gw) {
        for (&y, &wl) in lx.iter().zip(lw) {
            let (s, js, _) = p.from_end(PieceEnd::Hi, y * w);
            let (t, jt, _) = q.from_end(PieceEnd::Lo, y);
            out.push(PairNode {
                s,
                t,
                w: -wl * ww * y * js * jt,
            });
        }
        for (&y, &wy) in gx.iter().zip(gw) {
            let (s, js, ap) = p.from_end(PieceEnd::Hi, y * w);
            let (t, jt, aq) = q.from_end(PieceEnd::Lo, y);
            out.push(PairNode {
                s,
                t,
                w: wy * ww * y * js * jt * (w * ap + aq).ln(),
            });
        }
    }
    out
}

/// Tensor Gauss nodes on a pair, weights multiplied by `kernel(s, t)`.
pub(crate) fn tensor_nodes<K: Fn(&ParamPoint, &ParamPoint) -> f64>(
    rules: &RuleSet,
    p: &Piece,
    q: &Piece,
    orders: (usize, usize),
    kernel: K,
) -> Vec<PairNode> {
    let (px, pw) = rules.gauss01(orders.0);
    let (qx, qw) = rules.gauss01(orders.1);
    let mut out = Vec::with_capacity(px.len() * qx.len());
    for (&xi, &wi) in px.iter().zip(pw) {
        let (s, js) = p.point(xi);
        for (&xj, &wj) in qx.iter().zip(qw) {
            let (t, jt) = q.point(xj);
            out.push(PairNode {
                s,
                t,
                w: wi * wj * js * jt * kernel(&s, &t),
            });
        }
    }
    out
}

/// `int int f(s) (-1/(2 pi)) ln|s - t| g(t) dt ds`, where `f` is supported on
/// `f_pieces` and `g` on `g_pieces`.
///
/// Any two pieces from the two lists must coincide, touch, or be separated.
pub fn galerkin_log_pair<F, G>(
    f: F,
    f_pieces: &[Piece],
    g: G,
    g_pieces: &[Piece],
    rules: &RuleSet,
) -> Result<f64>
where
    F: Fn(&ParamPoint) -> f64,
    G: Fn(&ParamPoint) -> f64,
{
    let mut total = 0.0;
    for p in f_pieces {
        for q in g_pieces {
            let kind = classify(p, q)?;
            let nodes = if kind == PairKind::Separated {
                tensor_nodes(rules, p, q, rules.far_orders(p, q), |s, t| {
                    (s.s - t.s).abs().ln()
                })
            } else {
                near_log_nodes(rules, p, q, kind)
            };
            total += nodes.iter().map(|n| n.w * f(&n.s) * g(&n.t)).sum::<f64>();
        }
    }
    Ok(-total / (2.0 * PI))
}

/// Smooth remainder `r(s, t) = -(1/(2 pi)) ln(|X(s) - X(t)| / |s - t|)` of the
/// single-layer kernel, extended to the diagonal by its limit.
pub fn smooth_remainder(arc: &ArcParameterization, s: f64, t: f64) -> f64 {
    -arc.log_chord_ratio(s, t) / (2.0 * PI)
}

/// `int int f(s) r(s, t) g(t) dt ds` with the smooth remainder kernel,
/// by tensor Gauss rules on every pair of pieces.
pub fn galerkin_smooth_pair<F, G>(
    f: F,
    f_pieces: &[Piece],
    g: G,
    g_pieces: &[Piece],
    arc: &ArcParameterization,
    rules: &RuleSet,
) -> Result<f64>
where
    F: Fn(&ParamPoint) -> f64,
    G: Fn(&ParamPoint) -> f64,
{
    let n = rules.orders().gauss;
    let mut total = 0.0;
    for p in f_pieces {
        for q in g_pieces {
            classify(p, q)?;
            let nodes = tensor_nodes(rules, p, q, (n, n), |s, t| smooth_remainder(arc, s.s, t.s));
            total += nodes
                .iter()
                .map(|nd| nd.w * f(&nd.s) * g(&nd.t))
                .sum::<f64>();
        }
    }
    Ok(total)
}
