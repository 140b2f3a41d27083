//! Quadrature rules: Gauss–Legendre on intervals (single and composite),
//! equispaced rules on the circle, polar products on the disk and
//! radial sections of the ball.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::NumericsError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridGeometry {
    Interval,
    Circle,
    Disk,
    RadialBall,
}

/// A quadrature node: either a point on the line, or a polar pair `(r, theta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Line(f64),
    Polar { r: f64, theta: f64 },
}

impl Node {
    pub fn x(&self) -> f64 {
        match *self {
            Node::Line(x) => x,
            Node::Polar { r, .. } => r,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureGrid {
    nodes: Vec<Node>,
    weights: Vec<f64>,
    geometry: GridGeometry,
}

impl QuadratureGrid {
    fn from_parts(nodes: Vec<Node>, weights: Vec<f64>, geometry: GridGeometry) -> Self {
        debug_assert_eq!(nodes.len(), weights.len());
        debug_assert!(weights.iter().all(|w| *w > 0.0));
        Self {
            nodes,
            weights,
            geometry,
        }
    }

    /// A custom rule; weights must be positive and finite.
    pub fn new(
        nodes: Vec<Node>,
        weights: Vec<f64>,
        geometry: GridGeometry,
    ) -> Result<Self, NumericsError> {
        if nodes.len() != weights.len() {
            return Err(NumericsError::Shape(format!(
                "{} nodes with {} weights",
                nodes.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(NumericsError::InvalidRule(
                "weights must be positive".into(),
            ));
        }
        Ok(Self::from_parts(nodes, weights, geometry))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn geometry(&self) -> GridGeometry {
        self.geometry
    }

    /// Line coordinates (or radii for polar grids).
    pub fn abscissae(&self) -> Vec<f64> {
        self.nodes.iter().map(Node::x).collect()
    }

    pub fn integrate<T, F>(&self, mut f: F) -> T
    where
        T: std::ops::Mul<f64, Output = T> + std::iter::Sum<T>,
        F: FnMut(&Node) -> T,
    {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(n, &w)| f(n) * w)
            .sum()
    }

    /// The same rule with nodes listed in a permuted order.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self::from_parts(
            perm.iter().map(|&i| self.nodes[i]).collect(),
            perm.iter().map(|&i| self.weights[i]).collect(),
            self.geometry,
        )
    }
}

/// Legendre nodes and weights on `[-1, 1]`, by Newton iteration on the
/// three-term recurrence.
fn legendre_reference(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    for i in 0..m {
        // Tricomi initial guess
        let theta = PI * (i as f64 + 0.75) / (nf + 0.5);
        let mut t = (1.0 - (1.0 - 1.0 / nf) / (8.0 * nf * nf)) * theta.cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, t);
            dp = d;
            let dt = p / d;
            t -= dt;
            if dt.abs() <= 1e-16 * t.abs().max(1.0) {
                let (_, d) = legendre_with_derivative(n, t);
                dp = d;
                break;
            }
        }
        x[i] = -t;
        x[n - 1 - i] = t;
        let wi = 2.0 / ((1.0 - t * t) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, t: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = t;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * t * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (t * p1 - p0) / (t * t - 1.0);
    (p1, d)
}

/// `n`-point Gauss–Legendre rule on `[a, b]`, exact for degree `2n - 1`.
pub fn gauss_interval(n: usize, a: f64, b: f64) -> Result<QuadratureGrid, NumericsError> {
    if n == 0 {
        return Err(NumericsError::InvalidRule(
            "node count must be positive".into(),
        ));
    }
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(NumericsError::InvalidRule(format!(
            "interval [{a}, {b}] is empty or not finite"
        )));
    }
    let (x, w) = legendre_reference(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    Ok(QuadratureGrid::from_parts(
        x.iter().map(|t| Node::Line(mid + half * t)).collect(),
        w.iter().map(|wi| wi * half).collect(),
        GridGeometry::Interval,
    ))
}

/// Composite Gauss–Legendre rule on `[a, b]` with panel boundaries at every
/// breakpoint inside `(a, b)`, `n` nodes in total.
///
/// Panels of order at most `panel_order` are laid out so that each
/// smooth piece receives nodes in proportion to its length, with at least
/// one panel per piece.
pub fn composite_gauss(
    n: usize,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    panel_order: usize,
) -> Result<QuadratureGrid, NumericsError> {
    if n == 0 || panel_order == 0 {
        return Err(NumericsError::InvalidRule(
            "node count must be positive".into(),
        ));
    }
    if !(a < b) {
        return Err(NumericsError::InvalidRule(format!(
            "interval [{a}, {b}] is empty"
        )));
    }
    let mut cuts: Vec<f64> = vec![a];
    let mut inner: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&x| x > a && x < b)
        .collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    cuts.extend(inner);
    cuts.push(b);
    let pieces = cuts.len() - 1;
    if n < pieces {
        return Err(NumericsError::InvalidRule(format!(
            "{n} nodes cannot cover {pieces} smooth pieces"
        )));
    }

    // nodes per piece, proportional to length, at least one each
    let total = b - a;
    let mut counts: Vec<usize> = cuts
        .windows(2)
        .map(|c| (((c[1] - c[0]) / total) * n as f64).floor().max(1.0) as usize)
        .collect();
    let mut assigned: usize = counts.iter().sum();
    let mut i = 0;
    while assigned < n {
        counts[i % pieces] += 1;
        assigned += 1;
        i += 1;
    }
    while assigned > n {
        let j = (0..pieces).max_by_key(|&j| counts[j]).unwrap();
        counts[j] -= 1;
        assigned -= 1;
    }

    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for (c, &count) in cuts.windows(2).zip(&counts) {
        let panels = count.div_ceil(panel_order);
        let h = (c[1] - c[0]) / panels as f64;
        for p in 0..panels {
            // spread the remainder over the first panels
            let order = count / panels + usize::from(p < count % panels);
            let lo = c[0] + p as f64 * h;
            let rule = gauss_interval(order, lo, lo + h)?;
            nodes.extend_from_slice(rule.nodes());
            weights.extend_from_slice(rule.weights());
        }
    }
    Ok(QuadratureGrid::from_parts(
        nodes,
        weights,
        GridGeometry::Interval,
    ))
}

/// `n` equispaced angles `2 pi j / n` with weights `2 pi / n`.
pub fn circle_rule(n: usize) -> Result<QuadratureGrid, NumericsError> {
    if n == 0 {
        return Err(NumericsError::InvalidRule(
            "node count must be positive".into(),
        ));
    }
    let h = 2.0 * PI / n as f64;
    Ok(QuadratureGrid::from_parts(
        (0..n)
            .map(|j| Node::Polar {
                r: 1.0,
                theta: h * j as f64,
            })
            .collect(),
        vec![h; n],
        GridGeometry::Circle,
    ))
}

/// Polar product rule on the unit disk: Gauss–Legendre in `r` (weight
/// including the Jacobian `r`) times the circle rule in `theta`.
pub fn disk_rule(n_radial: usize, n_angular: usize) -> Result<QuadratureGrid, NumericsError> {
    let radial = gauss_interval(n_radial, 0.0, 1.0)?;
    let circle = circle_rule(n_angular)?;
    let mut nodes = Vec::with_capacity(n_radial * n_angular);
    let mut weights = Vec::with_capacity(n_radial * n_angular);
    for (rn, &rw) in radial.nodes().iter().zip(radial.weights()) {
        let r = rn.x();
        for (cn, &cw) in circle.nodes().iter().zip(circle.weights()) {
            let Node::Polar { theta, .. } = *cn else {
                unreachable!()
            };
            nodes.push(Node::Polar { r, theta });
            weights.push(rw * r * cw);
        }
    }
    Ok(QuadratureGrid::from_parts(
        nodes,
        weights,
        GridGeometry::Disk,
    ))
}

/// Radial rule on the unit ball for spherically symmetric integrands:
/// weights carry `4 pi r^2`.
pub fn radial_ball_rule(n_radial: usize) -> Result<QuadratureGrid, NumericsError> {
    let radial = gauss_interval(n_radial, 0.0, 1.0)?;
    let nodes: Vec<Node> = radial
        .nodes()
        .iter()
        .map(|n| Node::Polar {
            r: n.x(),
            theta: 0.0,
        })
        .collect();
    let weights = radial
        .nodes()
        .iter()
        .zip(radial.weights())
        .map(|(n, w)| 4.0 * PI * n.x() * n.x() * w)
        .collect();
    Ok(QuadratureGrid::from_parts(
        nodes,
        weights,
        GridGeometry::RadialBall,
    ))
}
