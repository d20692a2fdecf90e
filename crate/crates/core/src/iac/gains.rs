use crate::error::{ensure_len, Error, Result};
use crate::linalg::{
    condition_number, inverse, min_sym_eigenvalue, skew_defect, symmetry_defect, Matrix, Vector,
    CONDITION_WARN,
};
use crate::ph::StateMatrix;

const SHAPE_TOL: f64 = 1e-12;
const PSD_TOL: f64 = -1e-10;

/// Controller gains `J_c1`, `R_c1`, `R_c2` (possibly state dependent) and
/// the constant integral gain `K_i`.
#[derive(Debug, Clone)]
pub struct IacGains {
    jc1: StateMatrix,
    rc1: StateMatrix,
    rc2: StateMatrix,
    ki: Matrix,
    ki_inv: Matrix,
    /// All three blocks are constant and were validated at construction.
    prevalidated: bool,
}

/// Gains evaluated at one state.
#[derive(Debug, Clone)]
pub struct GainValues {
    pub jc1: Matrix,
    pub rc1: Matrix,
    pub rc2: Matrix,
    pub ki: Matrix,
}

pub(crate) fn check_ki(ki: &Matrix, m: usize) -> Result<()> {
    if ki.shape() != (m, m) {
        return Err(Error::Gain(format!("K_i is {:?}, expected {m}x{m}", ki.shape())));
    }
    if symmetry_defect(ki) > SHAPE_TOL * (1.0 + ki.norm()) {
        return Err(Error::Gain("K_i is not symmetric".into()));
    }
    let min = min_sym_eigenvalue(ki);
    if !(min > SHAPE_TOL * (1.0 + ki.norm())) {
        return Err(Error::Gain(format!(
            "K_i is not positive definite (smallest eigenvalue {min:e})"
        )));
    }
    Ok(())
}

fn check_values(jc1: &Matrix, rc1: &Matrix, rc2: &Matrix, m: usize) -> Result<()> {
    for (name, a) in [("J_c1", jc1), ("R_c1", rc1), ("R_c2", rc2)] {
        if a.shape() != (m, m) {
            return Err(Error::Gain(format!("{name} is {:?}, expected {m}x{m}", a.shape())));
        }
        if !a.iter().all(|v| v.is_finite()) {
            return Err(Error::Gain(format!("{name} has non-finite entries")));
        }
    }
    if skew_defect(jc1) > SHAPE_TOL * (1.0 + jc1.norm()) {
        return Err(Error::Gain("J_c1 is not skew-symmetric".into()));
    }
    if symmetry_defect(rc1) > SHAPE_TOL * (1.0 + rc1.norm()) {
        return Err(Error::Gain("R_c1 is not symmetric".into()));
    }
    let min1 = min_sym_eigenvalue(rc1);
    if !(min1 > SHAPE_TOL * (1.0 + rc1.norm())) {
        return Err(Error::Gain(format!(
            "R_c1 is not positive definite (smallest eigenvalue {min1:e})"
        )));
    }
    if symmetry_defect(rc2) > SHAPE_TOL * (1.0 + rc2.norm()) {
        return Err(Error::Gain("R_c2 is not symmetric".into()));
    }
    let min2 = min_sym_eigenvalue(rc2);
    if min2 < PSD_TOL {
        return Err(Error::Gain(format!(
            "R_c2 is not positive semidefinite (smallest eigenvalue {min2:e})"
        )));
    }
    Ok(())
}

pub(crate) fn split_gd(gd: &Matrix) -> (Matrix, Matrix) {
    let gt = gd.transpose();
    ((gd - &gt) * 0.5, (gd + &gt) * -0.5)
}

/// `J_c1 = ½(G_d − G_dᵀ)`, `R_c1 = −½(G_d + G_dᵀ)`, so that `J_c1 − R_c1 = G_d`.
pub fn matched_gains(gd: &Matrix) -> Result<(Matrix, Matrix)> {
    if !gd.is_square() {
        return Err(Error::Gain(format!("G_d must be square, got {:?}", gd.shape())));
    }
    let cond = condition_number(gd);
    if !cond.is_finite() || cond > CONDITION_WARN {
        return Err(Error::Gain(format!("G_d is singular (condition {cond:e})")));
    }
    let (jc1, rc1) = split_gd(gd);
    let min = min_sym_eigenvalue(&rc1);
    if !(min > SHAPE_TOL * (1.0 + gd.norm())) {
        return Err(Error::Gain(format!(
            "symmetric part of G_d is not negative definite: R_c1 has eigenvalue {min:e}"
        )));
    }
    Ok((jc1, rc1))
}

impl IacGains {
    /// Validates `K_i` and every constant block. Field blocks are checked
    /// each time they are evaluated.
    pub fn new(jc1: StateMatrix, rc1: StateMatrix, rc2: StateMatrix, ki: Matrix) -> Result<Self> {
        let m = ki.nrows();
        check_ki(&ki, m)?;
        let ki_inv = inverse(&ki, "K_i", &[])?;
        let prevalidated = match (jc1.as_constant(), rc1.as_constant(), rc2.as_constant()) {
            (Some(j), Some(r1), Some(r2)) => {
                check_values(j, r1, r2, m)?;
                true
            }
            _ => {
                for (name, a) in [("J_c1", &jc1), ("R_c1", &rc1), ("R_c2", &rc2)] {
                    if let Some(c) = a.as_constant() {
                        if c.shape() != (m, m) {
                            return Err(Error::Gain(format!(
                                "{name} is {:?}, expected {m}x{m}",
                                c.shape()
                            )));
                        }
                    }
                }
                false
            }
        };
        Ok(Self {
            jc1,
            rc1,
            rc2,
            ki,
            ki_inv,
            prevalidated,
        })
    }

    /// Constant gains with only `K_i` validated; used to build negative
    /// controls that violate the sign conditions.
    pub fn constant_unchecked(jc1: Matrix, rc1: Matrix, rc2: Matrix, ki: Matrix) -> Result<Self> {
        let m = ki.nrows();
        check_ki(&ki, m)?;
        let ki_inv = inverse(&ki, "K_i", &[])?;
        Ok(Self {
            jc1: StateMatrix::constant(jc1),
            rc1: StateMatrix::constant(rc1),
            rc2: StateMatrix::constant(rc2),
            ki,
            ki_inv,
            prevalidated: true,
        })
    }

    pub fn constant(jc1: Matrix, rc1: Matrix, rc2: Matrix, ki: Matrix) -> Result<Self> {
        Self::new(
            StateMatrix::constant(jc1),
            StateMatrix::constant(rc1),
            StateMatrix::constant(rc2),
            ki,
        )
    }

    /// `J_c1`, `R_c1` from [`matched_gains`] applied to `G_d` (pointwise when
    /// `G_d` depends on the state).
    pub fn from_matched(gd: &StateMatrix, rc2: StateMatrix, ki: Matrix) -> Result<Self> {
        match gd {
            StateMatrix::Constant(g) => {
                let (jc1, rc1) = matched_gains(g)?;
                Self::new(StateMatrix::constant(jc1), StateMatrix::constant(rc1), rc2, ki)
            }
            StateMatrix::Field(_) => {
                let gj = gd.clone();
                let gr = gd.clone();
                Self::new(
                    StateMatrix::field(move |x| split_gd(&gj.eval(x)).0),
                    StateMatrix::field(move |x| split_gd(&gr.eval(x)).1),
                    rc2,
                    ki,
                )
            }
        }
    }

    pub fn m(&self) -> usize {
        self.ki.nrows()
    }

    pub fn ki(&self) -> &Matrix {
        &self.ki
    }

    pub fn ki_inv(&self) -> &Matrix {
        &self.ki_inv
    }

    pub fn jc1(&self) -> &StateMatrix {
        &self.jc1
    }

    pub fn rc1(&self) -> &StateMatrix {
        &self.rc1
    }

    pub fn rc2(&self) -> &StateMatrix {
        &self.rc2
    }

    pub fn is_constant(&self) -> bool {
        self.prevalidated
    }

    /// Gains at `x`, validated unless they are constant and already checked.
    pub fn evaluate(&self, x: &Vector) -> Result<GainValues> {
        let values = GainValues {
            jc1: self.jc1.eval(x),
            rc1: self.rc1.eval(x),
            rc2: self.rc2.eval(x),
            ki: self.ki.clone(),
        };
        if !self.prevalidated {
            check_values(&values.jc1, &values.rc1, &values.rc2, self.m())?;
        }
        Ok(values)
    }

    /// `K_i⁻¹ d`.
    pub fn ki_solve(&self, d: &Vector) -> Result<Vector> {
        ensure_len("integral gain right-hand side", self.m(), d.len())?;
        Ok(&self.ki_inv * d)
    }
}
