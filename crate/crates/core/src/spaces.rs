//! Partitions, the smooth cutoff, and the standard / enriched finite
//! element spaces for `U` and `psi`.

use crate::error::{Error, Result};
use crate::geometry::ParamPoint;

/// Smallest element count accepted for a partition.
pub const MIN_ELEMENTS: usize = 4;

/// Largest admissible ratio between the longest and shortest element.
pub const MAX_QUASI_UNIFORMITY: f64 = 2.0;

/// Exponent of the endpoint enrichment in the `U` space.
pub const U_EXPONENT: f64 = 1.5;

/// Exponent of the endpoint enrichment in the `psi` space.
pub const PSI_EXPONENT: f64 = -0.5;

/// Strictly increasing nodes `x_0 < ... < x_N` covering the parameter domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    nodes: Vec<f64>,
}

impl Partition {
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < MIN_ELEMENTS + 1 {
            return Err(Error::InvalidArgument(format!(
                "a partition needs at least {MIN_ELEMENTS} elements, got {}",
                nodes.len().saturating_sub(1)
            )));
        }
        if nodes.iter().any(|x| !x.is_finite()) || nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "partition nodes must be finite and strictly increasing".into(),
            ));
        }
        let partition = Self { nodes };
        let ratio = partition.h() / partition.min_element_length();
        if ratio > MAX_QUASI_UNIFORMITY + 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "partition quasi-uniformity ratio {ratio:.3} exceeds {MAX_QUASI_UNIFORMITY}"
            )));
        }
        Ok(partition)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Number of elements `N`.
    pub fn num_elements(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.nodes[0], self.nodes[self.nodes.len() - 1])
    }

    /// Mesh size: the longest element.
    pub fn h(&self) -> f64 {
        self.nodes
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    pub fn min_element_length(&self) -> f64 {
        self.nodes
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    pub fn element(&self, e: usize) -> (f64, f64) {
        (self.nodes[e], self.nodes[e + 1])
    }

    /// Index of the element containing `s`; nodes belong to the element on
    /// their right except for the last node.
    pub fn locate(&self, s: f64) -> usize {
        let n = self.num_elements();
        match self.nodes.binary_search_by(|x| x.total_cmp(&s)) {
            Ok(i) => i.min(n - 1),
            Err(i) => i.saturating_sub(1).min(n - 1),
        }
    }

    /// The nested refinement obtained by inserting every midpoint.
    pub fn refine(&self) -> Partition {
        let mut nodes = Vec::with_capacity(2 * self.nodes.len() - 1);
        for w in self.nodes.windows(2) {
            nodes.push(w[0]);
            nodes.push(0.5 * (w[0] + w[1]));
        }
        nodes.push(*self.nodes.last().unwrap());
        Partition { nodes }
    }

    /// True when `fine` is exactly this partition with midpoints inserted.
    pub fn is_refined_by(&self, fine: &Partition) -> bool {
        fine.nodes.len() == 2 * self.nodes.len() - 1
            && self
                .nodes
                .iter()
                .enumerate()
                .all(|(i, &x)| fine.nodes[2 * i] == x)
    }
}

/// `N` equal elements over `domain`.
pub fn build_uniform_partition(domain: (f64, f64), n: usize) -> Result<Partition> {
    let (a, b) = domain;
    if n < MIN_ELEMENTS {
        return Err(Error::InvalidArgument(format!(
            "N = {n} is too coarse; at least {MIN_ELEMENTS} elements are required"
        )));
    }
    if !(a < b) {
        return Err(Error::InvalidArgument(format!("empty domain [{a}, {b}]")));
    }
    let h = (b - a) / n as f64;
    let mut nodes: Vec<f64> = (0..=n).map(|j| a + j as f64 * h).collect();
    nodes[n] = b;
    Partition::new(nodes)
}

/// The smooth step `eta(t) = b(t) / (b(t) + b(1 - t))` with `b(t) = exp(-1/t)`
/// for `t > 0` and zero otherwise.
pub fn eta(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        // b(t) / (b(t) + b(1-t)) = 1 / (1 + exp(1/t - 1/(1-t)))
        1.0 / (1.0 + (1.0 / t - 1.0 / (1.0 - t)).exp())
    }
}

pub fn eta_prime(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    let e = eta(t);
    e * (1.0 - e) * (1.0 / (t * t) + 1.0 / ((1.0 - t) * (1.0 - t)))
}

/// Cutoff with `phi = 1` on `[0, 1/8]` and `phi = 0` on `[1/4, inf)`,
/// built from the step as `phi(x) = eta(1 - (8x - 1))`.
pub fn cutoff_phi(x: f64) -> f64 {
    eta(2.0 - 8.0 * x)
}

pub fn cutoff_phi_prime(x: f64) -> f64 {
    -8.0 * eta_prime(2.0 - 8.0 * x)
}

/// The cutoff used by the singular enrichment functions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CutoffFunction;

impl CutoffFunction {
    /// Plateau edge: `phi = 1` below this argument.
    pub const PLATEAU: f64 = 0.125;
    /// Support edge: `phi = 0` above this argument.
    pub const SUPPORT: f64 = 0.25;

    pub fn phi(&self, x: f64) -> f64 {
        cutoff_phi(x)
    }

    pub fn phi_prime(&self, x: f64) -> f64 {
        cutoff_phi_prime(x)
    }

    pub fn eta(&self, t: f64) -> f64 {
        eta(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Standard,
    Enriched,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Standard => "standard",
            Method::Enriched => "enriched",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(Method::Standard),
            "enriched" => Ok(Method::Enriched),
            other => Err(Error::InvalidArgument(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Endpoint {
    Left,
    Right,
}

/// A basis function of an [`EnrichedSpace`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisKind {
    /// Nodal hat function of the given partition node.
    Hat(usize),
    /// `D^q phi(D)` with `D` the scaled distance to the endpoint.
    Singular(Endpoint),
}

/// Continuous piecewise-linear hats on a partition, optionally enriched by
/// the endpoint functions `D^q phi(D)`.
///
/// `D = 2 d / (b - a)` rescales the parameter distance `d` to the endpoint
/// so that the enrichment occupies the same fraction of any domain as it
/// does on (-1, 1). Basis indices number the hats first, followed by the
/// left then right singular function when present.
///
/// The hats of the two boundary nodes can be left out, in which case the
/// piecewise-linear part vanishes at the endpoints and hat index `i`
/// belongs to node `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnrichedSpace {
    partition: Partition,
    method: Method,
    exponent: f64,
    left: bool,
    right: bool,
    boundary_hats: bool,
}

impl EnrichedSpace {
    /// Space for `U`: hats plus `D^{3/2} phi(D)` when enriched.
    pub fn for_u(partition: Partition, method: Method) -> Self {
        Self::with_endpoints(partition, method, U_EXPONENT, true, true)
    }

    /// Space for `psi`: interior hats plus `D^{-1/2} phi(D)` when enriched.
    pub fn for_psi(partition: Partition, method: Method) -> Self {
        Self::with_endpoints(partition, method, PSI_EXPONENT, true, true).with_boundary_hats(false)
    }

    /// Keeps or drops the hats of the two boundary nodes.
    pub fn with_boundary_hats(mut self, include: bool) -> Self {
        self.boundary_hats = include;
        self
    }

    pub fn with_endpoints(
        partition: Partition,
        method: Method,
        exponent: f64,
        left: bool,
        right: bool,
    ) -> Self {
        let enriched = method == Method::Enriched;
        Self {
            partition,
            method,
            exponent,
            left: enriched && left,
            right: enriched && right,
            boundary_hats: true,
        }
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn domain(&self) -> (f64, f64) {
        self.partition.domain()
    }

    pub fn has_boundary_hats(&self) -> bool {
        self.boundary_hats
    }

    pub fn num_hats(&self) -> usize {
        if self.boundary_hats {
            self.partition.num_elements() + 1
        } else {
            self.partition.num_elements() - 1
        }
    }

    fn first_hat_node(&self) -> usize {
        usize::from(!self.boundary_hats)
    }

    /// Partition node of hat `index`.
    pub fn hat_node(&self, index: usize) -> Option<usize> {
        (index < self.num_hats()).then(|| index + self.first_hat_node())
    }

    /// Hat index of partition node `node`, if that node carries a hat.
    pub fn node_hat(&self, node: usize) -> Option<usize> {
        let first = self.first_hat_node();
        (node >= first && node - first < self.num_hats()).then(|| node - first)
    }

    pub fn dim(&self) -> usize {
        self.num_hats() + self.left as usize + self.right as usize
    }

    pub fn has_singular(&self, end: Endpoint) -> bool {
        match end {
            Endpoint::Left => self.left,
            Endpoint::Right => self.right,
        }
    }

    pub fn singular_index(&self, end: Endpoint) -> Option<usize> {
        match end {
            Endpoint::Left if self.left => Some(self.num_hats()),
            Endpoint::Right if self.right => Some(self.num_hats() + self.left as usize),
            _ => None,
        }
    }

    pub fn kind(&self, index: usize) -> Result<BasisKind> {
        let n_hats = self.num_hats();
        if index < n_hats {
            return Ok(BasisKind::Hat(index + self.first_hat_node()));
        }
        if Some(index) == self.singular_index(Endpoint::Left) {
            return Ok(BasisKind::Singular(Endpoint::Left));
        }
        if Some(index) == self.singular_index(Endpoint::Right) {
            return Ok(BasisKind::Singular(Endpoint::Right));
        }
        Err(Error::InvalidArgument(format!(
            "basis index {index} out of range (dim {})",
            self.dim()
        )))
    }

    /// Parameter distance from an endpoint beyond which the singular
    /// functions vanish: `(b - a) / 8`.
    pub fn singular_support(&self) -> f64 {
        let (a, b) = self.domain();
        CutoffFunction::SUPPORT * 0.5 * (b - a)
    }

    /// Basis indices that can be nonzero on element `e`.
    pub fn active_on_element(&self, e: usize) -> Vec<usize> {
        let mut active: Vec<usize> = [e, e + 1]
            .into_iter()
            .filter_map(|node| self.node_hat(node))
            .collect();
        let (lo, hi) = self.partition.element(e);
        let (a, b) = self.domain();
        let reach = self.singular_support();
        if let Some(i) = self.singular_index(Endpoint::Left) {
            if lo - a < reach {
                active.push(i);
            }
        }
        if let Some(i) = self.singular_index(Endpoint::Right) {
            if b - hi < reach {
                active.push(i);
            }
        }
        active
    }

    /// Evaluates basis function `index` (or its derivative) at parameter `s`.
    pub fn eval_basis(&self, index: usize, s: f64, derivative_order: u8) -> Result<f64> {
        let (a, b) = self.domain();
        if !(s >= a && s <= b) {
            return Err(Error::OutOfDomain { s, a, b });
        }
        if derivative_order > 1 {
            return Err(Error::InvalidArgument(format!(
                "derivative order {derivative_order} is not supported"
            )));
        }
        let kind = self.kind(index)?;
        if derivative_order == 1 && matches!(kind, BasisKind::Singular(_)) && self.exponent < 1.0 {
            return Err(Error::ForbiddenDerivative {
                exponent: self.exponent,
            });
        }
        let p = ParamPoint::in_domain(s, (a, b));
        let e = self.partition.locate(s);
        Ok(self.eval_kind(kind, e, &p, derivative_order == 1))
    }

    /// Evaluation at a quadrature point known to lie in element `e`.
    ///
    /// No range checks; the caller guarantees that `index` is active on `e`
    /// and that derivatives are only requested where they exist.
    pub fn eval_on_element(&self, index: usize, e: usize, p: &ParamPoint, derivative: bool) -> f64 {
        let kind = if index < self.num_hats() {
            BasisKind::Hat(index + self.first_hat_node())
        } else if Some(index) == self.singular_index(Endpoint::Left) {
            BasisKind::Singular(Endpoint::Left)
        } else {
            BasisKind::Singular(Endpoint::Right)
        };
        self.eval_kind(kind, e, p, derivative)
    }

    fn eval_kind(&self, kind: BasisKind, e: usize, p: &ParamPoint, derivative: bool) -> f64 {
        match kind {
            BasisKind::Hat(i) => {
                let (lo, hi) = self.partition.element(e);
                let len = hi - lo;
                if i == e {
                    if derivative {
                        -1.0 / len
                    } else {
                        (hi - p.s) / len
                    }
                } else if i == e + 1 {
                    if derivative {
                        1.0 / len
                    } else {
                        (p.s - lo) / len
                    }
                } else {
                    0.0
                }
            }
            BasisKind::Singular(end) => {
                let (a, b) = self.domain();
                let scale = 2.0 / (b - a);
                let (d, sign) = match end {
                    Endpoint::Left => (p.dl, 1.0),
                    Endpoint::Right => (p.dr, -1.0),
                };
                let big_d = (scale * d).max(0.0);
                if big_d >= CutoffFunction::SUPPORT {
                    return 0.0;
                }
                let q = self.exponent;
                if derivative {
                    let lead = if big_d == 0.0 {
                        0.0
                    } else {
                        q * big_d.powf(q - 1.0) * cutoff_phi(big_d)
                    };
                    sign * scale * (lead + big_d.powf(q) * cutoff_phi_prime(big_d))
                } else {
                    big_d.powf(q) * cutoff_phi(big_d)
                }
            }
        }
    }

    /// Evaluates `sum_i coeffs[i] b_i(s)` (or its derivative).
    pub fn eval_function(&self, coeffs: &[f64], s: f64, derivative_order: u8) -> Result<f64> {
        if coeffs.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: coeffs.len(),
            });
        }
        let (a, b) = self.domain();
        if !(s >= a && s <= b) {
            return Err(Error::OutOfDomain { s, a, b });
        }
        let e = self.partition.locate(s);
        self.eval_function_at(
            coeffs,
            e,
            &ParamPoint::in_domain(s, (a, b)),
            derivative_order,
        )
    }

    /// Like [`eval_function`](Self::eval_function) at a precomputed point.
    pub fn eval_function_at(
        &self,
        coeffs: &[f64],
        e: usize,
        p: &ParamPoint,
        derivative_order: u8,
    ) -> Result<f64> {
        let derivative = derivative_order == 1;
        let mut total = 0.0;
        for i in self.active_on_element(e) {
            if coeffs[i] == 0.0 {
                continue;
            }
            let singular = i >= self.num_hats();
            if singular {
                let at_endpoint = match self.kind(i)? {
                    BasisKind::Singular(Endpoint::Left) => p.dl <= 0.0,
                    _ => p.dr <= 0.0,
                };
                if self.exponent < 0.0 && at_endpoint {
                    let (a, b) = self.domain();
                    return Err(Error::OutOfDomain { s: p.s, a, b });
                }
                if derivative && self.exponent < 1.0 {
                    return Err(Error::ForbiddenDerivative {
                        exponent: self.exponent,
                    });
                }
            }
            total += coeffs[i] * self.eval_on_element(i, e, p, derivative);
        }
        Ok(total)
    }
}

/// Transfers coefficients from `coarse` to the nested refinement `fine`, or
/// copies them when both spaces share a partition.
///
/// Hat coefficients become the nodal values of the same piecewise-linear
/// function; singular coefficients are copied, since the enrichment does not
/// depend on the mesh.
pub fn prolong(coarse: &EnrichedSpace, coeffs: &[f64], fine: &EnrichedSpace) -> Result<Vec<f64>> {
    if coeffs.len() != coarse.dim() {
        return Err(Error::DimensionMismatch {
            expected: coarse.dim(),
            found: coeffs.len(),
        });
    }
    if coarse.method != fine.method
        || coarse.exponent != fine.exponent
        || coarse.boundary_hats != fine.boundary_hats
    {
        return Err(Error::InvalidArgument(
            "prolongation requires matching space kinds".into(),
        ));
    }
    if coarse.partition == fine.partition {
        return Ok(coeffs.to_vec());
    }
    if !coarse.partition.is_refined_by(&fine.partition) {
        return Err(Error::NonNested {
            coarse: coarse.partition.num_elements(),
            fine: fine.partition.num_elements(),
        });
    }
    let nodal = |node: usize| coarse.node_hat(node).map_or(0.0, |i| coeffs[i]);
    let mut out = vec![0.0; fine.dim()];
    for (i, value) in out.iter_mut().enumerate().take(fine.num_hats()) {
        let node = fine.hat_node(i).expect("hat index in range");
        *value = if node % 2 == 0 {
            nodal(node / 2)
        } else {
            0.5 * (nodal(node / 2) + nodal(node / 2 + 1))
        };
    }
    for end in [Endpoint::Left, Endpoint::Right] {
        if let (Some(c), Some(f)) = (coarse.singular_index(end), fine.singular_index(end)) {
            out[f] = coeffs[c];
        }
    }
    Ok(out)
}
