//! Exact rational re-verification of bound certificates.
//!
//! Every f64 in the program and the certificate is a dyadic rational, so
//! the reduced costs `c - A^T y` and the product `rhs . y` can be computed
//! without rounding. Slower than the f64 path; used on the certificates
//! that gate acceptance.

use super::{BoundCertificate, LinearProgramSpec, LpError};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

fn rat(x: f64) -> Result<BigRational, LpError> {
    BigRational::from_float(x)
        .ok_or_else(|| LpError::Malformed(format!("non-finite value {x} in exact check")))
}

/// Exact counterpart of [`super::verify_lower_bound`]: reduced costs must be
/// `>= -tol` and the certified bound must match `rhs . dual` to within `tol`,
/// both decided in exact arithmetic.
pub fn verify_lower_bound_exact(
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
    let tol = rat(tol)?;
    let mut reduced: Vec<BigRational> = lp
        .objective
        .iter()
        .map(|&c| rat(c))
        .collect::<Result<_, _>>()?;
    let mut rhs_dot = BigRational::from(BigInt::from(0));
    for (con, &y) in lp.constraints.iter().zip(&cert.dual) {
        let y = rat(y)?;
        if !y.is_zero() {
            for &(j, v) in &con.terms {
                reduced[j as usize] -= &y * rat(v)?;
            }
            rhs_dot += &y * rat(con.rhs)?;
        }
    }
    let neg_tol = -tol.clone();
    if reduced.iter().any(|r| *r < neg_tol) {
        return Ok(false);
    }
    let diff = rat(cert.certified_bound)? - rhs_dot;
    Ok(diff.abs() <= tol)
}
