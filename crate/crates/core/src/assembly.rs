//! Block Galerkin system for the coupled surface / single-layer problem.
//!
//! With `phi_i` the basis of the `U` space and `zeta_i` that of the density
//! space, the blocks are
//!
//! ```text
//! A_ij  = <phi_j', phi_i'>        C_ij  = <zeta_j, phi_i>
//! Cp_ij = <phi_j, zeta_i>         V_ij  = <V_S zeta_j, zeta_i>
//! F_i   = <f, phi_i> + g_left phi_i(a) + g_right phi_i(b)
//! H_i   = <h, zeta_i>
//! ```
//!
//! and the full system is `[[A, C], [-Cp, V]] (U, psi) = (F, H)`.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{make_segment, make_semicircle, ArcParameterization};
use crate::matrix::DenseMatrix;
use crate::quadrature::pair::{classify, near_log_nodes, PairKind};
use crate::quadrature::{adaptive_integrate, integration_pieces, Piece, QuadratureOrders, RuleSet};
use crate::spaces::{build_uniform_partition, EnrichedSpace, Method, MIN_ELEMENTS};

/// A real function of the arclength parameter.
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Relative size of `int f + g_left + g_right` above which a problem is
/// flagged as incompatible.
pub const COMPATIBILITY_TOL: f64 = 1e-8;

/// Data of one coupled problem and its discretization.
#[derive(Clone)]
pub struct ProblemSpec {
    name: String,
    arc: ArcParameterization,
    f: ScalarFn,
    g_left: f64,
    g_right: f64,
    h: Option<ScalarFn>,
    method: Method,
    n: usize,
    orders: QuadratureOrders,
    density_boundary_hats: bool,
    integral_f: f64,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("arc", &self.arc.name())
            .field("g_left", &self.g_left)
            .field("g_right", &self.g_right)
            .field("has_h", &self.h.is_some())
            .field("method", &self.method)
            .field("n", &self.n)
            .field("orders", &self.orders)
            .field("density_boundary_hats", &self.density_boundary_hats)
            .finish()
    }
}

impl ProblemSpec {
    pub fn new(
        name: impl Into<String>,
        arc: ArcParameterization,
        f: ScalarFn,
        g_left: f64,
        g_right: f64,
        method: Method,
        n: usize,
    ) -> Result<Self> {
        if n < MIN_ELEMENTS {
            return Err(Error::InvalidArgument(format!(
                "at least {MIN_ELEMENTS} elements are required, got {n}"
            )));
        }
        if !g_left.is_finite() || !g_right.is_finite() {
            return Err(Error::InvalidArgument(
                "endpoint data must be finite".into(),
            ));
        }
        let integral_f = adaptive_integrate(|s| f(s), arc.domain(), 1e-14)?;
        Ok(Self {
            name: name.into(),
            arc,
            f,
            g_left,
            g_right,
            h: None,
            method,
            n,
            orders: QuadratureOrders::default(),
            density_boundary_hats: false,
            integral_f,
        })
    }

    /// Example 1: the segment `(-1, 1)`, `f = 1`, `g = -1` at both ends.
    pub fn example1(method: Method, n: usize) -> Result<Self> {
        Self::new(
            "ex1",
            make_segment(),
            Arc::new(|_| 1.0),
            -1.0,
            -1.0,
            method,
            n,
        )
    }

    /// Example 2: the upper unit semicircle, `f(x, y) = sin(pi x)`, and
    /// `g = -(1/2) int f` at both ends.
    pub fn example2(method: Method, n: usize) -> Result<Self> {
        let arc = make_semicircle();
        let f: ScalarFn = Arc::new(|s: f64| (PI * s.cos()).sin());
        let g = -0.5 * adaptive_integrate(|s| f(s), arc.domain(), 1e-14)?;
        Self::new("ex2", arc, f, g, g, method, n)
    }

    /// Built-in examples by name (`ex1`, `ex2`).
    pub fn example(name: &str, method: Method, n: usize) -> Result<Self> {
        match name {
            "ex1" => Self::example1(method, n),
            "ex2" => Self::example2(method, n),
            other => Err(Error::InvalidArgument(format!("unknown example '{other}'"))),
        }
    }

    pub fn with_h(mut self, h: ScalarFn) -> Self {
        self.h = Some(h);
        self
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn with_elements(mut self, n: usize) -> Result<Self> {
        if n < MIN_ELEMENTS {
            return Err(Error::InvalidArgument(format!(
                "at least {MIN_ELEMENTS} elements are required, got {n}"
            )));
        }
        self.n = n;
        Ok(self)
    }

    pub fn with_orders(mut self, orders: QuadratureOrders) -> Self {
        self.orders = orders;
        self
    }

    /// Whether the density space keeps the hats of the two boundary nodes
    /// (off by default).
    pub fn with_density_boundary_hats(mut self, include: bool) -> Self {
        self.density_boundary_hats = include;
        self
    }

    pub fn density_boundary_hats(&self) -> bool {
        self.density_boundary_hats
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arc(&self) -> &ArcParameterization {
        &self.arc
    }

    pub fn f(&self, s: f64) -> f64 {
        (self.f)(s)
    }

    pub fn h(&self, s: f64) -> f64 {
        self.h.as_ref().map_or(0.0, |h| h(s))
    }

    pub fn has_h(&self) -> bool {
        self.h.is_some()
    }

    pub fn g_left(&self) -> f64 {
        self.g_left
    }

    pub fn g_right(&self) -> f64 {
        self.g_right
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn elements(&self) -> usize {
        self.n
    }

    pub fn orders(&self) -> QuadratureOrders {
        self.orders
    }

    /// `int_S f ds`.
    pub fn integral_f(&self) -> f64 {
        self.integral_f
    }

    /// `int_S f ds + g_left + g_right`, which must vanish for the exterior
    /// field to decay.
    pub fn compatibility_defect(&self) -> f64 {
        self.integral_f + self.g_left + self.g_right
    }

    /// A message when the data violate the compatibility condition.
    pub fn compatibility_warning(&self) -> Option<String> {
        let defect = self.compatibility_defect();
        let scale = self.integral_f.abs() + self.g_left.abs() + self.g_right.abs();
        (defect.abs() > COMPATIBILITY_TOL * scale).then(|| {
            format!(
                "incompatible data: int f + g_left + g_right = {defect:.3e}; the exterior field will not decay"
            )
        })
    }

    /// The `U` and density spaces on a uniform partition.
    pub fn spaces(&self) -> Result<(EnrichedSpace, EnrichedSpace)> {
        let part = build_uniform_partition(self.arc.domain(), self.n)?;
        Ok((
            EnrichedSpace::for_u(part.clone(), self.method),
            EnrichedSpace::for_psi(part, self.method)
                .with_boundary_hats(self.density_boundary_hats),
        ))
    }
}

/// The assembled blocks and load vectors.
#[derive(Debug, Clone)]
pub struct BlockSystem {
    pub problem: String,
    pub arc: ArcParameterization,
    pub orders: QuadratureOrders,
    /// Neumann data `(g_left, g_right)`.
    pub g: (f64, f64),
    pub u_space: EnrichedSpace,
    pub psi_space: EnrichedSpace,
    pub a: DenseMatrix,
    pub c: DenseMatrix,
    pub cp: DenseMatrix,
    /// `v_log + v_smooth`.
    pub v: DenseMatrix,
    /// Part of `V` from the kernel `-(1/2 pi) ln|s - t|`.
    pub v_log: DenseMatrix,
    /// Part of `V` from the smooth remainder kernel.
    pub v_smooth: DenseMatrix,
    pub f: Vec<f64>,
    pub h: Vec<f64>,
}

impl BlockSystem {
    pub fn dim_u(&self) -> usize {
        self.u_space.dim()
    }

    pub fn dim_psi(&self) -> usize {
        self.psi_space.dim()
    }

    pub fn dim(&self) -> usize {
        self.dim_u() + self.dim_psi()
    }

    /// `[[A, C], [-Cp, V]]`.
    pub fn full_matrix(&self) -> DenseMatrix {
        let (nu, np) = (self.dim_u(), self.dim_psi());
        let mut m = DenseMatrix::zeros(nu + np, nu + np);
        for i in 0..nu {
            let row = m.row_mut(i);
            row[..nu].copy_from_slice(self.a.row(i));
            row[nu..].copy_from_slice(self.c.row(i));
        }
        for i in 0..np {
            let row = m.row_mut(nu + i);
            for (dst, src) in row[..nu].iter_mut().zip(self.cp.row(i)) {
                *dst = -src;
            }
            row[nu..].copy_from_slice(self.v.row(i));
        }
        m
    }

    /// `(F, H)`.
    pub fn rhs(&self) -> Vec<f64> {
        self.f.iter().chain(&self.h).copied().collect()
    }

    /// Writes every block as `row col value` lines into `dir`.
    pub fn write_dump(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        let blocks = [
            ("A", &self.a),
            ("C", &self.c),
            ("Cp", &self.cp),
            ("V", &self.v),
            ("V_log", &self.v_log),
            ("V_smooth", &self.v_smooth),
        ];
        for (name, m) in blocks {
            let file = std::fs::File::create(dir.join(format!("{name}.txt")))?;
            m.write_triplets(std::io::BufWriter::new(file))?;
        }
        for (name, v) in [("F", &self.f), ("H", &self.h)] {
            let col = DenseMatrix::from_rows(&v.iter().map(|x| vec![*x]).collect::<Vec<_>>())
                .expect("column vector");
            let file = std::fs::File::create(dir.join(format!("{name}.txt")))?;
            col.write_triplets(std::io::BufWriter::new(file))?;
        }
        Ok(())
    }
}

/// `a(u, v)` for coefficient pairs `u = (u_U, u_psi)`, `v = (v_U, v_psi)`.
pub fn bilinear_apply(sys: &BlockSystem, u: (&[f64], &[f64]), v: (&[f64], &[f64])) -> Result<f64> {
    for (vec, expected) in [
        (u.0, sys.dim_u()),
        (u.1, sys.dim_psi()),
        (v.0, sys.dim_u()),
        (v.1, sys.dim_psi()),
    ] {
        if vec.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: vec.len(),
            });
        }
    }
    Ok(
        sys.a.bilinear(v.0, u.0) + sys.c.bilinear(v.0, u.1) + sys.v.bilinear(v.1, u.1)
            - sys.cp.bilinear(v.1, u.0),
    )
}

/// Assembles all blocks for `spec`.
pub fn assemble_system(spec: &ProblemSpec) -> Result<BlockSystem> {
    let (u_space, psi_space) = spec.spaces()?;
    let orders = spec.orders();
    let rules = RuleSet::new(orders)?;
    let pieces = integration_pieces(
        u_space.partition(),
        spec.method() == Method::Enriched,
        orders.transition_split,
    );

    let (nu, np) = (u_space.dim(), psi_space.dim());
    let mut a = DenseMatrix::zeros(nu, nu);
    let mut c = DenseMatrix::zeros(nu, np);
    let mut f = vec![0.0; nu];
    let mut h = vec![0.0; np];
    let (gx, gw) = rules.base();
    for piece in &pieces {
        let e = piece.element;
        let u_act = u_space.active_on_element(e);
        let p_act = psi_space.active_on_element(e);
        for (&x, &w) in gx.iter().zip(gw) {
            let (pt, jac) = piece.point(x);
            let wj = w * jac;
            let phi: Vec<f64> = u_act
                .iter()
                .map(|&i| u_space.eval_on_element(i, e, &pt, false))
                .collect();
            let dphi: Vec<f64> = u_act
                .iter()
                .map(|&i| u_space.eval_on_element(i, e, &pt, true))
                .collect();
            let zeta: Vec<f64> = p_act
                .iter()
                .map(|&i| psi_space.eval_on_element(i, e, &pt, false))
                .collect();
            for (ia, &i) in u_act.iter().enumerate() {
                for (ja, &j) in u_act.iter().enumerate() {
                    a[(i, j)] += wj * dphi[ia] * dphi[ja];
                }
                for (jb, &j) in p_act.iter().enumerate() {
                    c[(i, j)] += wj * phi[ia] * zeta[jb];
                }
            }
            let fv = spec.f(pt.s);
            for (ia, &i) in u_act.iter().enumerate() {
                f[i] += wj * fv * phi[ia];
            }
            if spec.has_h() {
                let hv = spec.h(pt.s);
                for (jb, &j) in p_act.iter().enumerate() {
                    h[j] += wj * hv * zeta[jb];
                }
            }
        }
    }
    let (left, right) = spec.arc().domain();
    for (i, fi) in f.iter_mut().enumerate() {
        *fi += spec.g_left() * u_space.eval_basis(i, left, 0)?
            + spec.g_right() * u_space.eval_basis(i, right, 0)?;
    }
    let cp = c.transpose();

    let (v_log, v_smooth) = assemble_single_layer(&psi_space, &pieces, spec.arc(), &rules)?;
    let v = v_log.add(&v_smooth);
    Ok(BlockSystem {
        problem: spec.name().to_string(),
        arc: spec.arc().clone(),
        orders,
        g: (spec.g_left(), spec.g_right()),
        u_space,
        psi_space,
        a,
        c,
        cp,
        v,
        v_log,
        v_smooth,
        f,
        h,
    })
}

/// Basis values of one piece at one Gauss order.
struct Level {
    order: usize,
    s: Vec<f64>,
    pos: Vec<[f64; 2]>,
    wj: Vec<f64>,
    /// Node-major: `vals[k * active + a]`.
    vals: Vec<f64>,
}

struct PieceTable {
    active: Vec<usize>,
    levels: Vec<Level>,
}

impl PieceTable {
    fn new(
        space: &EnrichedSpace,
        piece: &Piece,
        arc: &ArcParameterization,
        rules: &RuleSet,
    ) -> Self {
        let active = space.active_on_element(piece.element);
        let levels = rules
            .available()
            .map(|order| {
                let (x, w) = rules.gauss01(order);
                let mut level = Level {
                    order,
                    s: Vec::with_capacity(order),
                    pos: Vec::with_capacity(order),
                    wj: Vec::with_capacity(order),
                    vals: Vec::with_capacity(order * active.len()),
                };
                for (&xi, &wi) in x.iter().zip(w) {
                    let (pt, jac) = piece.point(xi);
                    level.s.push(pt.s);
                    level.pos.push(arc.position(pt.s));
                    level.wj.push(wi * jac);
                    level.vals.extend(
                        active
                            .iter()
                            .map(|&i| space.eval_on_element(i, piece.element, &pt, false)),
                    );
                }
                level
            })
            .collect();
        Self { active, levels }
    }

    fn level(&self, order: usize) -> &Level {
        self.levels
            .iter()
            .find(|l| l.order == order)
            .expect("order available in the rule set")
    }
}

fn smooth_kernel(arc: &ArcParameterization, s: f64, t: f64, xs: [f64; 2], xt: [f64; 2]) -> f64 {
    let ds = s - t;
    if ds.abs() < 1e-8 {
        return -arc.log_chord_ratio(s, t) / (2.0 * PI);
    }
    -((xs[0] - xt[0]) / ds).hypot((xs[1] - xt[1]) / ds).ln() / (2.0 * PI)
}

/// Log part and smooth-remainder part of the single-layer Galerkin matrix.
pub(crate) fn assemble_single_layer(
    space: &EnrichedSpace,
    pieces: &[Piece],
    arc: &ArcParameterization,
    rules: &RuleSet,
) -> Result<(DenseMatrix, DenseMatrix)> {
    let n = space.dim();
    let mut v_log = DenseMatrix::zeros(n, n);
    let mut v_smooth = DenseMatrix::zeros(n, n);
    let tables: Vec<PieceTable> = pieces
        .iter()
        .map(|p| PieceTable::new(space, p, arc, rules))
        .collect();
    let base = rules.orders().gauss;
    let mut local_log = Vec::new();
    let mut local_smooth = Vec::new();
    let mut tmp_log = Vec::new();
    let mut tmp_smooth = Vec::new();

    for (ip, p) in pieces.iter().enumerate() {
        for (iq, q) in pieces.iter().enumerate().skip(ip) {
            let kind = classify(p, q)?;
            let (tp, tq) = (&tables[ip], &tables[iq]);
            let (na, nb) = (tp.active.len(), tq.active.len());
            local_log.clear();
            local_log.resize(na * nb, 0.0);
            local_smooth.clear();
            local_smooth.resize(na * nb, 0.0);

            let tensor_orders = if kind == PairKind::Separated {
                rules.far_orders(p, q)
            } else {
                (base, base)
            };
            let (lp, lq) = (tp.level(tensor_orders.0), tq.level(tensor_orders.1));
            let separated = kind == PairKind::Separated;
            // tmp[k * nb + b] = sum_l K(s_k, t_l) vals_q[l][b]
            tmp_log.clear();
            tmp_log.resize(lp.order * nb, 0.0);
            tmp_smooth.clear();
            tmp_smooth.resize(lp.order * nb, 0.0);
            for k in 0..lp.order {
                for l in 0..lq.order {
                    let w = lp.wj[k] * lq.wj[l];
                    let ks = w * smooth_kernel(arc, lp.s[k], lq.s[l], lp.pos[k], lq.pos[l]);
                    let kl = if separated {
                        w * (lp.s[k] - lq.s[l]).abs().ln()
                    } else {
                        0.0
                    };
                    let row = &lq.vals[l * nb..(l + 1) * nb];
                    for b in 0..nb {
                        tmp_smooth[k * nb + b] += ks * row[b];
                        tmp_log[k * nb + b] += kl * row[b];
                    }
                }
            }
            for k in 0..lp.order {
                let row = &lp.vals[k * na..(k + 1) * na];
                for a in 0..na {
                    for b in 0..nb {
                        local_smooth[a * nb + b] += row[a] * tmp_smooth[k * nb + b];
                        local_log[a * nb + b] += row[a] * tmp_log[k * nb + b];
                    }
                }
            }

            if !separated {
                let mut va = vec![0.0; na];
                let mut vb = vec![0.0; nb];
                for node in near_log_nodes(rules, p, q, kind) {
                    for (a, &i) in tp.active.iter().enumerate() {
                        va[a] = space.eval_on_element(i, p.element, &node.s, false);
                    }
                    for (b, &j) in tq.active.iter().enumerate() {
                        vb[b] = space.eval_on_element(j, q.element, &node.t, false);
                    }
                    for a in 0..na {
                        let wa = node.w * va[a];
                        for b in 0..nb {
                            local_log[a * nb + b] += wa * vb[b];
                        }
                    }
                }
            }

            for (a, &i) in tp.active.iter().enumerate() {
                for (b, &j) in tq.active.iter().enumerate() {
                    let lg = -local_log[a * nb + b] / (2.0 * PI);
                    let sm = local_smooth[a * nb + b];
                    v_log[(i, j)] += lg;
                    v_smooth[(i, j)] += sm;
                    if iq != ip {
                        v_log[(j, i)] += lg;
                        v_smooth[(j, i)] += sm;
                    }
                }
            }
        }
    }
    Ok((v_log, v_smooth))
}
