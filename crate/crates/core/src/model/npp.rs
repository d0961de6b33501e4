use super::qubo::QuboMatrix;
use crate::instances::NppInstance;
use crate::{Error, Result};

/// Expand `(Σ a_i S_i)²` with `S_i = 2x_i − 1` into an exact integer QUBO.
///
/// `Q_ii = 4a_i(a_i − c)`, `Q_ij = 8a_i a_j` for `i < j`, offset `c²`, so
/// the energy of any assignment equals its partition delta squared.
pub fn build_qubo(instance: &NppInstance) -> Result<QuboMatrix<i64>> {
    let c = instance.total() as i128;
    // the positive upper triangle sums to at most 4c², keep that in range
    if 4 * c * c > i64::MAX as i128 {
        return Err(Error::ResourceLimit(format!(
            "instance total {c} is too large for exact 64-bit QUBO coefficients"
        )));
    }
    let a = instance.values();
    let n = a.len();
    let c = c as i64;
    let mut q = QuboMatrix::new(n);
    for i in 0..n {
        let ai = a[i] as i64;
        q.add(i, i, 4 * ai * (ai - c));
        for (j, &aj) in a.iter().enumerate().skip(i + 1) {
            q.add(i, j, 8 * ai * aj as i64);
        }
    }
    q.set_offset(c * c);
    Ok(q.with_energy_floor(Some(0)))
}
