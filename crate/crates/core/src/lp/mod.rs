//! Equality-constrained minimization with nonnegative variables, plus dual
//! certificates proving lower bounds.
//!
//! Problems here are small (at most a few thousand variables and rows), so
//! the solver is a dense two-phase tableau simplex with no external
//! dependency — certificates stay in-house and reproducible. Every optimal
//! answer is re-checked through [`verify_lower_bound`] before it is
//! returned; a numerical failure is an error, never a silent wrong answer.
//!
//! The certificate logic is the usual weak-duality argument: for any dual
//! vector `y`, any feasible `x >= 0` satisfies
//! `c.x = b.y + (c - A^T y).x`, so if every reduced cost is `>= -tol` and
//! the total mass `sum(x)` is bounded (it is 1 in all LPs built here, which
//! carry the normalization row `sum x_S = 1`), then `c.x >= b.y - tol`.

mod exact;
mod simplex;

pub use exact::verify_lower_bound_exact;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Primal/dual feasibility tolerance used throughout the LP layer.
pub const LP_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum LpError {
    #[error("malformed program: {0}")]
    Malformed(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// One equality row `sum_j terms[j].1 * x[terms[j].0] = rhs`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Constraint {
    pub terms: Vec<(u32, f64)>,
    pub rhs: f64,
}

/// `min c.x  s.t.  A x = b,  x >= 0`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearProgramSpec {
    pub n_vars: usize,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

impl LinearProgramSpec {
    pub fn validate(&self) -> Result<(), LpError> {
        if self.objective.len() != self.n_vars {
            return Err(LpError::Malformed(format!(
                "objective length {} != n_vars {}",
                self.objective.len(),
                self.n_vars
            )));
        }
        if !self.objective.iter().all(|v| v.is_finite()) {
            return Err(LpError::Malformed("non-finite objective coefficient".into()));
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if !c.rhs.is_finite() || !c.terms.iter().all(|&(_, v)| v.is_finite()) {
                return Err(LpError::Malformed(format!("non-finite coefficient in row {i}")));
            }
            if c.terms.iter().any(|&(j, _)| j as usize >= self.n_vars) {
                return Err(LpError::Malformed(format!("column out of range in row {i}")));
            }
        }
        Ok(())
    }

    /// SHA-256 over a canonical byte serialization, for certificate records.
    pub fn problem_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.n_vars as u64).to_le_bytes());
        for v in &self.objective {
            h.update(v.to_le_bytes());
        }
        h.update((self.constraints.len() as u64).to_le_bytes());
        for c in &self.constraints {
            h.update((c.terms.len() as u64).to_le_bytes());
            for &(j, v) in &c.terms {
                h.update(j.to_le_bytes());
                h.update(v.to_le_bytes());
            }
            h.update(c.rhs.to_le_bytes());
        }
        hex_string(&h.finalize())
    }
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub primal: Vec<f64>,
    pub objective_value: f64,
    /// One multiplier per equality row.
    pub dual: Vec<f64>,
}

impl LpOutcome {
    pub fn status(&self) -> LpStatus {
        match self {
            LpOutcome::Optimal(_) => LpStatus::Optimal,
            LpOutcome::Infeasible => LpStatus::Infeasible,
            LpOutcome::Unbounded => LpStatus::Unbounded,
        }
    }

    pub fn optimal(&self) -> Option<&LpSolution> {
        match self {
            LpOutcome::Optimal(s) => Some(s),
            _ => None,
        }
    }
}

/// Dual multipliers proving `min c.x >= certified_bound - tol` by weak
/// duality (for programs normalized to `sum x = 1`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundCertificate {
    pub dual: Vec<f64>,
    /// `rhs . dual`.
    pub certified_bound: f64,
    /// Worst reduced-cost violation `max(0, -min_j (c - A^T y)_j)`.
    pub max_residual: f64,
}

/// Solves the program. Optimal outcomes carry a dual vector that has already
/// passed [`verify_lower_bound`] at [`LP_TOL`].
pub fn minimize(lp: &LinearProgramSpec) -> Result<LpOutcome, LpError> {
    lp.validate()?;
    let outcome = simplex::solve(lp)?;
    if let LpOutcome::Optimal(sol) = &outcome {
        let cert = certificate_for(lp, sol);
        if !verify_lower_bound(lp, &cert, LP_TOL)? {
            return Err(LpError::Numerical(format!(
                "emitted dual failed certification (max residual {:.3e})",
                cert.max_residual
            )));
        }
        let gap = (sol.objective_value - cert.certified_bound).abs();
        if gap > 1e-6 * (1.0 + sol.objective_value.abs()) {
            return Err(LpError::Numerical(format!("primal/dual gap {gap:.3e}")));
        }
    }
    Ok(outcome)
}

/// Builds the certificate carried by an optimal solution.
pub fn certificate_for(lp: &LinearProgramSpec, sol: &LpSolution) -> BoundCertificate {
    let bound: f64 = lp
        .constraints
        .iter()
        .zip(&sol.dual)
        .map(|(c, y)| c.rhs * y)
        .sum();
    let reduced = reduced_costs(lp, &sol.dual);
    let max_residual = reduced.iter().fold(0.0f64, |m, &r| m.max(-r));
    BoundCertificate { dual: sol.dual.clone(), certified_bound: bound, max_residual }
}

fn reduced_costs(lp: &LinearProgramSpec, dual: &[f64]) -> Vec<f64> {
    let mut r = lp.objective.clone();
    for (c, &y) in lp.constraints.iter().zip(dual) {
        if y != 0.0 {
            for &(j, v) in &c.terms {
                r[j as usize] -= y * v;
            }
        }
    }
    r
}

/// Checks that `cert.dual` proves `min >= cert.certified_bound - tol`:
/// every reduced cost must be `>= -(tol + float slack)` and the certified
/// bound must equal `rhs . dual`.
///
/// The float slack per column is a directed bound on the summation error,
/// `4 eps * sum_i |y_i a_ij|`, so a `true` answer is trustworthy even though
/// the arithmetic is f64. [`verify_lower_bound_exact`] removes even that
/// slack with rational arithmetic.
pub fn verify_lower_bound(
    lp: &LinearProgramSpec,
    cert: &BoundCertificate,
    tol: f64,
) -> Result<bool, LpError> {
    if cert.dual.len() != lp.constraints.len() {
        return Err(LpError::DimensionMismatch(format!(
            "dual length {} != row count {}",
            cert.dual.len(),
            lp.constraints.len()
        )));
    }
    let mut reduced = lp.objective.clone();
    let mut magnitude = vec![0.0f64; lp.n_vars];
    for (c, &y) in lp.constraints.iter().zip(&cert.dual) {
        if y != 0.0 {
            for &(j, v) in &c.terms {
                reduced[j as usize] -= y * v;
                magnitude[j as usize] += (y * v).abs();
            }
        }
    }
    let eps = f64::EPSILON;
    let costs_ok = reduced
        .iter()
        .zip(&magnitude)
        .all(|(&r, &m)| r >= -(tol + 4.0 * eps * (m + 1.0)));
    let by: f64 = lp.constraints.iter().zip(&cert.dual).map(|(c, y)| c.rhs * y).sum();
    let bound_ok = (by - cert.certified_bound).abs() <= 1e-9 * (1.0 + by.abs());
    Ok(costs_ok && bound_ok)
}

/// Portable certificate record for third-party re-verification.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateRecord {
    pub problem_hash: String,
    pub bound: f64,
    pub dual_vector: Vec<f64>,
    pub residuals: CertificateResiduals,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateResiduals {
    pub max_reduced_cost_violation: f64,
    pub bound_minus_rhs_dot_dual: f64,
}

pub fn certificate_record(lp: &LinearProgramSpec, cert: &BoundCertificate) -> CertificateRecord {
    let by: f64 = lp.constraints.iter().zip(&cert.dual).map(|(c, y)| c.rhs * y).sum();
    CertificateRecord {
        problem_hash: lp.problem_hash(),
        bound: cert.certified_bound,
        dual_vector: cert.dual.clone(),
        residuals: CertificateResiduals {
            max_reduced_cost_violation: cert.max_residual,
            bound_minus_rhs_dot_dual: cert.certified_bound - by,
        },
    }
}

/// SHA-256 of the serialized certificate record, referenced from trace rows.
pub fn certificate_hash(record: &CertificateRecord) -> String {
    let bytes = serde_json::to_vec(record).expect("certificate serializes");
    hex_string(&Sha256::digest(bytes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lp(n: usize, obj: &[f64], rows: &[(&[(u32, f64)], f64)]) -> LinearProgramSpec {
        LinearProgramSpec {
            n_vars: n,
            objective: obj.to_vec(),
            constraints: rows
                .iter()
                .map(|(t, rhs)| Constraint { terms: t.to_vec(), rhs: *rhs })
                .collect(),
        }
    }

    #[test]
    fn trivial_equality() {
        let p = lp(1, &[1.0], &[(&[(0, 1.0)], 1.0)]);
        let out = minimize(&p).unwrap();
        let sol = out.optimal().unwrap();
        assert!((sol.objective_value - 1.0).abs() < 1e-12);
        let cert = certificate_for(&p, sol);
        assert!(verify_lower_bound(&p, &cert, 1e-9).unwrap());
        assert!(verify_lower_bound_exact(&p, &cert, 1e-9).unwrap());

        let mut bad = cert.clone();
        bad.dual[0] += 1.0;
        bad.certified_bound = p.constraints[0].rhs * bad.dual[0];
        assert!(!verify_lower_bound(&p, &bad, 1e-9).unwrap());
        assert!(!verify_lower_bound_exact(&p, &bad, 1e-9).unwrap());
    }

    #[test]
    fn two_var_transport() {
        // min 2x + 3y s.t. x + y = 4, x - y = 0  ->  x = y = 2, value 10
        let p = lp(
            2,
            &[2.0, 3.0],
            &[(&[(0, 1.0), (1, 1.0)], 4.0), (&[(0, 1.0), (1, -1.0)], 0.0)],
        );
        let sol = minimize(&p).unwrap().optimal().unwrap().clone();
        assert!((sol.objective_value - 10.0).abs() < 1e-9);
        assert!((sol.primal[0] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn detects_infeasible() {
        let p = lp(1, &[1.0], &[(&[(0, 1.0)], -1.0)]);
        assert_eq!(minimize(&p).unwrap().status(), LpStatus::Infeasible);
        // contradictory rows
        let p = lp(1, &[0.0], &[(&[(0, 1.0)], 1.0), (&[(0, 1.0)], 2.0)]);
        assert_eq!(minimize(&p).unwrap().status(), LpStatus::Infeasible);
    }

    #[test]
    fn detects_unbounded() {
        // min -x s.t. x - y = 0: ray (t, t)
        let p = lp(2, &[-1.0, 0.0], &[(&[(0, 1.0), (1, -1.0)], 0.0)]);
        assert_eq!(minimize(&p).unwrap().status(), LpStatus::Unbounded);
    }

    #[test]
    fn redundant_rows_are_harmless() {
        // same row three times plus its double
        let p = lp(
            2,
            &[1.0, 2.0],
            &[
                (&[(0, 1.0), (1, 1.0)], 1.0),
                (&[(0, 1.0), (1, 1.0)], 1.0),
                (&[(0, 1.0), (1, 1.0)], 1.0),
                (&[(0, 2.0), (1, 2.0)], 2.0),
            ],
        );
        let sol = minimize(&p).unwrap().optimal().unwrap().clone();
        assert!((sol.objective_value - 1.0).abs() < 1e-9);
        let cert = certificate_for(&p, &sol);
        assert!(verify_lower_bound(&p, &cert, 1e-9).unwrap());
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let p = lp(1, &[1.0], &[(&[(0, 1.0)], 1.0)]);
        let cert = BoundCertificate { dual: vec![0.0, 0.0], certified_bound: 0.0, max_residual: 0.0 };
        assert!(matches!(verify_lower_bound(&p, &cert, 1e-9), Err(LpError::DimensionMismatch(_))));
    }

    #[test]
    fn deterministic_objective() {
        let p = lp(
            3,
            &[1.0, 5.0, 4.0],
            &[(&[(0, 1.0), (1, 2.0), (2, 1.0)], 3.0), (&[(1, 1.0), (2, 1.0)], 1.0)],
        );
        let a = minimize(&p).unwrap().optimal().unwrap().objective_value;
        let b = minimize(&p).unwrap().optimal().unwrap().objective_value;
        assert_eq!(a.to_bits(), b.to_bits());
    }

    proptest! {
        /// Random feasible programs: weak duality and certification hold.
        #[test]
        fn weak_duality_on_random_feasible(seed in 0u64..500) {
            let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
            let mut next = move || {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                (state >> 11) as f64 / (1u64 << 53) as f64
            };
            let (m, n) = (3usize, 6usize);
            let mut rows = Vec::new();
            let x0: Vec<f64> = (0..n).map(|_| next() * 2.0).collect();
            for _ in 0..m {
                let terms: Vec<(u32, f64)> =
                    (0..n).map(|j| (j as u32, (next() * 4.0 - 2.0).round() / 2.0)).collect();
                let rhs: f64 = terms.iter().map(|&(j, v)| v * x0[j as usize]).sum();
                rows.push(Constraint { terms, rhs });
            }
            let p = LinearProgramSpec {
                n_vars: n,
                objective: (0..n).map(|_| next() * 2.0 - 0.5).collect(),
                constraints: rows,
            };
            let out = minimize(&p).unwrap();
            match out {
                LpOutcome::Optimal(sol) => {
                    let feasible_value: f64 =
                        p.objective.iter().zip(&x0).map(|(c, x)| c * x).sum();
                    prop_assert!(sol.objective_value <= feasible_value + 1e-6);
                    let cert = certificate_for(&p, &sol);
                    prop_assert!(verify_lower_bound(&p, &cert, 1e-9).unwrap());
                    prop_assert!(cert.certified_bound <= sol.objective_value + 1e-6);
                }
                LpOutcome::Unbounded => {}
                LpOutcome::Infeasible => prop_assert!(false, "constructed feasible"),
            }
        }
    }
}
