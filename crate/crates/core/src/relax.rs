//! The relaxation LPs behind the certified bounds.
//!
//! Two families share one builder. For a grid graph with per-edge
//! probabilities, the variables are `x_S` for every edge subset `S`
//! (the probability that the open set is exactly `S`), and the constraints
//! are the 1-independence relaxation
//!
//! ```text
//!   x_S >= 0,   y_{S ∪ {e}} = p_e · y_S,   y_∅ = 1,
//! ```
//!
//! where `y_S = Σ_{T ⊇ S} x_T` is substituted away and `(S, e)` ranges over
//! every subset `S` and every edge `e` vertex-disjoint from all of `S`.
//! Minimizing an event-indicator objective over this polytope gives a lower
//! bound valid for every 1-independent model with those edge probabilities;
//! by independent thinning it is also valid when the probabilities are only
//! lower bounds, so the bound is monotone in `(p, p')`.
//!
//! All reported values are rounded conservatively at the sixth decimal
//! (down for lower bounds, up for the complement bounds) before they feed
//! the next iteration, so accumulated float error can only weaken a verdict.

use crate::grid::{
    build_hypercube, config_target_pairs, good_pair_event, EdgeLabel, EdgeSubset, SmallGridGraph,
};
use crate::lp::{
    self, certificate_hash, certificate_record, minimize, BoundCertificate, Constraint,
    LinearProgramSpec, LpError, LpOutcome, LP_TOL,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RelaxError {
    #[error("probability {0} outside [0,1]")]
    InvalidProbability(f64),
    #[error("theta {0} outside [0,1]")]
    InvalidTheta(f64),
    #[error("graph with {0} edges too large for subset LP (max 12)")]
    OversizeGraph(usize),
    #[error("LP did not reach an optimum: {0:?}")]
    NotOptimal(lp::LpStatus),
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// Edge probabilities of the two-probability rectangle model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoProbability {
    /// Probability of edges inside a 2×2 square.
    pub p: f64,
    /// Probability of the two edges joining the squares.
    pub p_prime: f64,
}

impl TwoProbability {
    pub fn new(p: f64, p_prime: f64) -> Result<Self, RelaxError> {
        for v in [p, p_prime] {
            if !(0.0..=1.0).contains(&v) {
                return Err(RelaxError::InvalidProbability(v));
            }
        }
        Ok(TwoProbability { p, p_prime })
    }

    pub fn min(&self) -> f64 {
        self.p.min(self.p_prime)
    }
}

/// θ-mixture over the four target configurations C0..C3.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureWeights {
    pub theta: f64,
    pub weights: [f64; 4],
}

impl MixtureWeights {
    /// Weights for an edge inside a renormalized 2×2 square:
    /// `((1-θ)², θ(1-θ), θ(1-θ), θ²)`.
    pub fn intra(theta: f64) -> Result<Self, RelaxError> {
        Self::build(theta, false)
    }

    /// Weights for an edge joining two renormalized squares:
    /// `(θ², θ(1-θ), θ(1-θ), (1-θ)²)`.
    pub fn cross(theta: f64) -> Result<Self, RelaxError> {
        Self::build(theta, true)
    }

    fn build(theta: f64, cross: bool) -> Result<Self, RelaxError> {
        if !(0.0..=1.0).contains(&theta) {
            return Err(RelaxError::InvalidTheta(theta));
        }
        let (a, b) = ((1.0 - theta) * (1.0 - theta), theta * theta);
        let mid = theta * (1.0 - theta);
        let weights = if cross { [b, mid, mid, a] } else { [a, mid, mid, b] };
        Ok(MixtureWeights { theta, weights })
    }
}

/// Round a certified lower bound down at the sixth decimal.
pub fn floor6(x: f64) -> f64 {
    ((x * 1e6 + 1e-7).floor() / 1e6).clamp(0.0, 1.0)
}

/// Round a certified upper bound up at the sixth decimal.
pub fn ceil6(x: f64) -> f64 {
    ((x * 1e6 - 1e-7).ceil() / 1e6).clamp(0.0, 1.0)
}

/// A solved minimization with its verified dual certificate.
#[derive(Debug, Clone)]
pub struct CertifiedBound {
    /// Conservative 6-decimal truncation of `certified_bound - tol`; this is
    /// the value fed into iterations.
    pub value: f64,
    /// Raw LP objective at the optimum.
    pub raw: f64,
    pub certificate: BoundCertificate,
    pub certificate_hash: String,
}

fn solve_certified(lp_spec: &LinearProgramSpec) -> Result<CertifiedBound, RelaxError> {
    let outcome = minimize(lp_spec)?;
    let sol = match &outcome {
        LpOutcome::Optimal(sol) => sol,
        other => return Err(RelaxError::NotOptimal(other.status())),
    };
    let certificate = lp::certificate_for(lp_spec, sol);
    // minimize() already verified the certificate at LP_TOL; since the
    // normalization row pins sum(x) = 1, the true minimum is at least
    // certified_bound - LP_TOL.
    let value = floor6(certificate.certified_bound - LP_TOL);
    let hash = certificate_hash(&certificate_record(lp_spec, &certificate));
    Ok(CertifiedBound {
        value,
        raw: sol.objective_value,
        certificate,
        certificate_hash: hash,
    })
}

/// Builds the relaxation LP for an arbitrary 0/1 (or weighted) event
/// objective over the subsets of `g`'s edges.
fn build_event_lp(
    g: &SmallGridGraph,
    p_of_edge: &dyn Fn(usize) -> f64,
    objective: Vec<f64>,
) -> LinearProgramSpec {
    let m = g.edge_count();
    let n = 1usize << m;
    assert_eq!(objective.len(), n);
    let full = (n - 1) as u32;
    let mut constraints = Vec::new();
    for ei in 0..m {
        let p = p_of_edge(ei);
        let disjoint = g.vertex_disjoint_edges(ei);
        let ebit = 1u32 << ei;
        // S ranges over subsets of the edges vertex-disjoint from ei.
        let mut smask_bits = 0u32;
        loop {
            let mut smask = 0u32;
            for (b, &j) in disjoint.iter().enumerate() {
                if smask_bits >> b & 1 == 1 {
                    smask |= 1 << j;
                }
            }
            // sum_{T ⊇ S∪{e}} x_T - p · sum_{T ⊇ S} x_T = 0
            let free = !smask & full;
            let mut terms = Vec::with_capacity(1usize << free.count_ones());
            let mut u = 0u32;
            loop {
                let t = smask | u;
                let coeff = if t & ebit != 0 { 1.0 - p } else { -p };
                terms.push((t, coeff));
                if u == free {
                    break;
                }
                u = u.wrapping_sub(free) & free;
            }
            constraints.push(Constraint { terms, rhs: 0.0 });
            if smask_bits + 1 == 1u32 << disjoint.len() {
                break;
            }
            smask_bits += 1;
        }
    }
    // y_∅ = 1
    constraints.push(Constraint {
        terms: (0..n as u32).map(|t| (t, 1.0)).collect(),
        rhs: 1.0,
    });
    LinearProgramSpec { n_vars: n, objective, constraints }
}

/// The product measure `x_S = Π_{e∈S} p_e Π_{f∉S} (1-p_f)`, a feasible point
/// of every LP built here.
pub fn product_measure(g: &SmallGridGraph, p_of_edge: &dyn Fn(usize) -> f64) -> Vec<f64> {
    let m = g.edge_count();
    let n = 1usize << m;
    let mut x = vec![1.0f64; n];
    for ei in 0..m {
        let p = p_of_edge(ei);
        for (t, v) in x.iter_mut().enumerate() {
            *v *= if t >> ei & 1 == 1 { p } else { 1.0 - p };
        }
    }
    x
}

/// Per-edge probability map for the rectangle's two-probability model.
pub fn rect_p_of_edge(g: &SmallGridGraph, tp: TwoProbability) -> impl Fn(usize) -> f64 + '_ {
    let labels: Vec<EdgeLabel> = g.edges().iter().map(|e| e.label).collect();
    move |ei| match labels[ei] {
        EdgeLabel::CrossSquare => tp.p_prime,
        _ => tp.p,
    }
}

/// Connectivity LP for a hypercube-sized graph: minimize the probability of
/// a connected spanning open set among all measures satisfying the
/// 1-independence relaxation at edge probability `p`.
pub fn build_connectivity_lp(g: &SmallGridGraph, p: f64) -> Result<LinearProgramSpec, RelaxError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(RelaxError::InvalidProbability(p));
    }
    if g.edge_count() > 12 {
        return Err(RelaxError::OversizeGraph(g.edge_count()));
    }
    let objective = (0..g.subset_count())
        .map(|t| if g.is_connected_spanning(EdgeSubset(t as u32)) { 1.0 } else { 0.0 })
        .collect();
    Ok(build_event_lp(g, &|_| p, objective))
}

/// Certified minimum connection probability over the relaxation at edge
/// probability at least `p` (connectivity is an increasing event, so the
/// bound transfers to every model with probabilities at least `p`).
pub fn min_connect_prob(g: &SmallGridGraph, p: f64) -> Result<CertifiedBound, RelaxError> {
    let lp_spec = build_connectivity_lp(g, p)?;
    solve_certified(&lp_spec)
}

/// The `Q_6` connectivity chain: two `Q_3` LP solves spliced by the
/// renormalization step, compared against the golden-ratio threshold.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Q6Chain {
    pub p: f64,
    /// Certified `P_0`: min connection probability of `Q_3` at `p`.
    pub p0: f64,
    /// Edge probability for the second solve, at most `1 - (1-p)^8 / P_0²`.
    pub p_second: f64,
    /// Certified `P_1`: min connection probability of `Q_3` at `p_second`.
    pub p1: f64,
    /// `P = P_0^8 · P_1`.
    pub big_p: f64,
    /// `(1-p)^32 · φ`.
    pub threshold: f64,
    pub passes: bool,
    /// Set when `P_0² <= (1-p)^8`, in which case the chain cannot proceed.
    pub collapsed: bool,
    pub certificate_hashes: Vec<String>,
}

/// Runs the chain with the default `p_second` policy (the admissible value
/// rounded down to 4 decimals); `p_second_override` substitutes any smaller
/// admissible probability.
pub fn q6_connectivity_bound(
    p: f64,
    p_second_override: Option<f64>,
) -> Result<Q6Chain, RelaxError> {
    if !(0.0..=1.0).contains(&p) || p == 0.0 {
        return Err(RelaxError::InvalidProbability(p));
    }
    let q3 = build_hypercube(3).expect("k=3 in range");
    let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
    let threshold = (1.0 - p).powi(32) * phi;
    let b0 = min_connect_prob(&q3, p)?;
    let p0 = b0.value;
    let q8 = (1.0 - p).powi(8);
    if p0 * p0 <= q8 {
        return Ok(Q6Chain {
            p,
            p0,
            p_second: 0.0,
            p1: 0.0,
            big_p: 0.0,
            threshold,
            passes: false,
            collapsed: true,
            certificate_hashes: vec![b0.certificate_hash],
        });
    }
    let admissible = 1.0 - q8 / (p0 * p0);
    let p_second = match p_second_override {
        Some(v) if v <= admissible && (0.0..=1.0).contains(&v) => v,
        Some(v) => return Err(RelaxError::InvalidProbability(v)),
        None => (admissible * 1e4).floor() / 1e4,
    };
    let b1 = min_connect_prob(&q3, p_second)?;
    let p1 = b1.value;
    let big_p = p0.powi(8) * p1;
    Ok(Q6Chain {
        p,
        p0,
        p_second,
        p1,
        big_p,
        threshold,
        passes: big_p > threshold,
        collapsed: false,
        certificate_hashes: vec![b0.certificate_hash, b1.certificate_hash],
    })
}

fn class_indicators(g: &SmallGridGraph) -> [Vec<f64>; 4] {
    let tps = config_target_pairs(g);
    let n = g.subset_count() as usize;
    let mut ind = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for t in 0..n {
        let s = EdgeSubset(t as u32);
        for (i, tp) in tps.iter().enumerate() {
            if good_pair_event(g, s, tp) {
                ind[i][t] = 1.0;
            }
        }
    }
    ind
}

/// The θ-weighted good-event LP on the 4×2 rectangle.
pub fn build_renorm_lp(tp: TwoProbability, weights: &MixtureWeights) -> LinearProgramSpec {
    let g = crate::grid::build_rectangle_4x2();
    let ind = class_indicators(&g);
    let n = g.subset_count() as usize;
    let objective = (0..n)
        .map(|t| (0..4).map(|i| weights.weights[i] * ind[i][t]).sum())
        .collect();
    let p_of_edge = rect_p_of_edge(&g, tp);
    build_event_lp(&g, &p_of_edge, objective)
}

#[derive(Debug, Clone)]
pub struct RenormStep {
    pub next: TwoProbability,
    pub intra: CertifiedBound,
    pub cross: CertifiedBound,
}

/// One renormalization step: the intra-square mixture LP yields the next
/// `p`, the cross-square mixture LP the next `p'`. The two solves run
/// concurrently.
pub fn renorm_step(tp: TwoProbability, theta: f64) -> Result<RenormStep, RelaxError> {
    let wi = MixtureWeights::intra(theta)?;
    let wc = MixtureWeights::cross(theta)?;
    let (ri, rc) = rayon::join(
        || solve_certified(&build_renorm_lp(tp, &wi)),
        || solve_certified(&build_renorm_lp(tp, &wc)),
    );
    let (intra, cross) = (ri?, rc?);
    let next = TwoProbability { p: intra.value, p_prime: cross.value };
    Ok(RenormStep { next, intra, cross })
}

#[derive(Debug, Clone)]
pub struct OriginStep {
    /// Certified upper bound on `P(G^c)`, rounded up at the sixth decimal.
    pub g_complement_bound: f64,
    /// Raw LP minimum of `P(G)`.
    pub raw_min: f64,
    pub bound: CertifiedBound,
}

/// The origin-event LP: minimize, with the intra-square mixture weights, the
/// probability that adding the middle vertical edge `(1,0)-(1,1)` to the
/// open set yields the corresponding good event. Returns an upper bound on
/// the complement.
pub fn origin_step(tp: TwoProbability, theta: f64) -> Result<OriginStep, RelaxError> {
    let g = crate::grid::build_rectangle_4x2();
    let weights = MixtureWeights::intra(theta)?;
    let ind = class_indicators(&g);
    let mid = g.edge_index(&[1, 0], &[1, 1]).expect("middle vertical edge");
    let n = g.subset_count() as usize;
    let objective: Vec<f64> = (0..n)
        .map(|t| {
            let with_mid = t | 1usize << mid;
            (0..4).map(|i| weights.weights[i] * ind[i][with_mid]).sum()
        })
        .collect();
    let p_of_edge = rect_p_of_edge(&g, tp);
    let lp_spec = build_event_lp(&g, &p_of_edge, objective);
    let bound = solve_certified(&lp_spec)?;
    let g_complement_bound = ceil6(1.0 - (bound.certificate.certified_bound - LP_TOL));
    Ok(OriginStep { g_complement_bound, raw_min: bound.raw, bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_rectangle_4x2;

    #[test]
    fn q1_optimum_is_p() {
        let q1 = build_hypercube(1).unwrap();
        for p in [0.0, 0.3, 0.5847, 1.0] {
            let b = min_connect_prob(&q1, p).unwrap();
            assert!((b.raw - p).abs() < 1e-9, "p={p} raw={}", b.raw);
        }
    }

    #[test]
    fn q2_at_half_certifies_zero() {
        let q2 = build_hypercube(2).unwrap();
        let b = min_connect_prob(&q2, 0.5).unwrap();
        assert!(b.raw.abs() < 1e-9);
        assert_eq!(b.value, 0.0);
    }

    #[test]
    fn min_connect_prob_monotone_in_p() {
        let q2 = build_hypercube(2).unwrap();
        let grid = [0.3, 0.5, 0.6, 0.75, 0.9, 1.0];
        let vals: Vec<f64> = grid
            .iter()
            .map(|&p| min_connect_prob(&q2, p).unwrap().raw)
            .collect();
        for w in vals.windows(2) {
            assert!(w[1] >= w[0] - 1e-9, "{vals:?}");
        }
    }

    #[test]
    fn connectivity_lp_shape() {
        let q3 = build_hypercube(3).unwrap();
        let lp_spec = build_connectivity_lp(&q3, 0.5847).unwrap();
        assert_eq!(lp_spec.n_vars, 4096);
        // 12 edges, each with 7 vertex-disjoint edges: 12 * 2^7 rows + normalization
        assert_eq!(lp_spec.constraints.len(), 12 * 128 + 1);
        let q4 = build_hypercube(4).unwrap();
        assert!(matches!(
            build_connectivity_lp(&q4, 0.5),
            Err(RelaxError::OversizeGraph(32))
        ));
    }

    #[test]
    fn product_measure_is_feasible() {
        let g = build_rectangle_4x2();
        let tp = TwoProbability::new(0.8457, 0.8131).unwrap();
        let lp_spec = build_renorm_lp(tp, &MixtureWeights::intra(0.18).unwrap());
        let x = product_measure(&g, &rect_p_of_edge(&g, tp));
        assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for c in &lp_spec.constraints {
            let lhs: f64 = c.terms.iter().map(|&(j, v)| v * x[j as usize]).sum();
            assert!((lhs - c.rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn renorm_objective_extremes() {
        let tp = TwoProbability::new(0.9, 0.9).unwrap();
        let lp_spec = build_renorm_lp(tp, &MixtureWeights::intra(0.18).unwrap());
        assert_eq!(lp_spec.n_vars, 1024);
        assert!((lp_spec.objective[1023] - 1.0).abs() < 1e-12);
        assert_eq!(lp_spec.objective[0], 0.0);
    }

    #[test]
    fn mixture_weights_sum_to_one() {
        for theta in [0.0, 0.18, 0.5, 1.0] {
            for w in [
                MixtureWeights::intra(theta).unwrap(),
                MixtureWeights::cross(theta).unwrap(),
            ] {
                assert!((w.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
        assert!(MixtureWeights::intra(1.5).is_err());
    }

    #[test]
    fn rounding_is_conservative() {
        assert_eq!(floor6(0.8591678436), 0.859167);
        assert_eq!(floor6(0.829055756), 0.829055);
        assert_eq!(ceil6(0.09620033), 0.096201);
        assert_eq!(ceil6(0.0975393), 0.097540);
        assert_eq!(floor6(1.0), 1.0);
        assert_eq!(ceil6(0.0), 0.0);
        assert_eq!(floor6(-1e-12), 0.0);
    }
}
