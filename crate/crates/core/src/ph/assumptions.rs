//! Numerical checks of the structural and disturbance assumptions.

use serde::Serialize;

use super::gradient::finite_diff_jacobian;
use super::{split_blocks, PhSystem};
use crate::error::{ensure_len, Error, Result};
use crate::linalg::{
    condition_number, max_sym_eigenvalue, min_sym_eigenvalue, skew_defect, symmetry_defect, Matrix,
    Vector,
};

/// Relative tolerance on `‖J + Jᵀ‖` and `‖R − Rᵀ‖`.
pub const STRUCTURE_REL_TOL: f64 = 1e-12;
/// Smallest eigenvalue accepted for a positive semidefinite matrix.
pub const PSD_TOL: f64 = -1e-10;
/// Residual bound for the constant unmatched-disturbance fit.
pub const UNMATCHED_FIT_TOL: f64 = 1e-8;
/// Gradient norm accepted as stationary by the minimum search.
pub const MINIMUM_GRAD_TOL: f64 = 1e-9;
const MINIMUM_MAX_ITERS: usize = 200;

#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub sample_index: usize,
    pub value: f64,
    pub sample: Vec<f64>,
}

/// Worst observed margin and first violation of one property over a scan.
#[derive(Debug, Clone, Serialize)]
pub struct PropertyOutcome {
    pub worst: f64,
    pub first_violation: Option<Violation>,
}

impl PropertyOutcome {
    fn new(initial: f64) -> Self {
        Self {
            worst: initial,
            first_violation: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.first_violation.is_none()
    }

    fn record(&mut self, idx: usize, x: &Vector, value: f64, worse: bool, violated: bool) {
        if worse {
            self.worst = value;
        }
        if violated && self.first_violation.is_none() {
            self.first_violation = Some(Violation {
                sample_index: idx,
                value,
                sample: x.as_slice().to_vec(),
            });
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StructureReport {
    pub samples: usize,
    /// Largest `‖J + Jᵀ‖ / (1 + ‖J‖)`.
    pub skew: PropertyOutcome,
    /// Largest `‖R − Rᵀ‖ / (1 + ‖R‖)`.
    pub symmetry: PropertyOutcome,
    /// Smallest eigenvalue of `R`.
    pub psd: PropertyOutcome,
    /// Smallest eigenvalue of `R_uu`; recorded, never enforced beyond PSD.
    pub r_uu_min_eigenvalue: f64,
}

impl StructureReport {
    pub fn passed(&self) -> bool {
        self.skew.passed() && self.symmetry.passed() && self.psd.passed()
    }
}

/// Incremental structural scan; usable for closed-loop matrices too.
#[derive(Debug, Clone)]
pub struct StructureScan {
    count: usize,
    skew: PropertyOutcome,
    symmetry: PropertyOutcome,
    psd: PropertyOutcome,
    r_uu_min: f64,
}

impl Default for StructureScan {
    fn default() -> Self {
        Self {
            count: 0,
            skew: PropertyOutcome::new(0.0),
            symmetry: PropertyOutcome::new(0.0),
            psd: PropertyOutcome::new(f64::INFINITY),
            r_uu_min: f64::INFINITY,
        }
    }
}

impl StructureScan {
    pub fn push(&mut self, x: &Vector, j: &Matrix, r: &Matrix, r_uu: Option<&Matrix>) {
        let idx = self.count;
        self.count += 1;
        let skew = skew_defect(j) / (1.0 + j.norm());
        self.skew
            .record(idx, x, skew, skew > self.skew.worst, skew > STRUCTURE_REL_TOL);
        let sym = symmetry_defect(r) / (1.0 + r.norm());
        self.symmetry
            .record(idx, x, sym, sym > self.symmetry.worst, sym > STRUCTURE_REL_TOL);
        let min_eig = min_sym_eigenvalue(r);
        self.psd
            .record(idx, x, min_eig, min_eig < self.psd.worst, min_eig < PSD_TOL);
        if let Some(ruu) = r_uu {
            self.r_uu_min = self.r_uu_min.min(min_sym_eigenvalue(ruu));
        }
    }

    pub fn finish(self) -> StructureReport {
        StructureReport {
            samples: self.count,
            skew: self.skew,
            symmetry: self.symmetry,
            psd: self.psd,
            r_uu_min_eigenvalue: self.r_uu_min,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MatchedReport {
    pub samples: usize,
    /// Smallest `−λ_max(sym G_d)` over the samples; must be positive.
    pub worst_margin: f64,
    pub worst_condition: f64,
    pub state_dependent: bool,
    pub failure: Option<String>,
}

impl MatchedReport {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct UnmatchedReport {
    pub samples: usize,
    /// Least-squares constant fit over all samples.
    pub d_bar_u: Vec<f64>,
    pub max_residual: f64,
    pub worst_sample_index: Option<usize>,
    pub failure: Option<String>,
}

impl UnmatchedReport {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }

    pub fn d_bar_u(&self) -> Vector {
        Vector::from_column_slice(&self.d_bar_u)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MinimumReport {
    /// Final iterate; the minimiser when the search succeeded.
    pub x_bar: Vec<f64>,
    pub gradient_norm: f64,
    pub min_hessian_eigenvalue: f64,
    pub iterations: usize,
    pub analytic_hessian: bool,
    pub failure: Option<String>,
}

impl MinimumReport {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }

    pub fn x_bar(&self) -> Vector {
        Vector::from_column_slice(&self.x_bar)
    }
}

impl PhSystem {
    /// Structural audit of `J` and `R` over the given states.
    pub fn check_structure(&self, samples: &[Vector]) -> Result<StructureReport> {
        if samples.is_empty() {
            return Err(Error::Precondition("structure check needs at least one sample".into()));
        }
        let mut scan = StructureScan::default();
        for x in samples {
            ensure_len("structure sample", self.partition.n(), x.len())?;
            let j = self.j.eval(x);
            let r = self.r.eval(x);
            let ruu = split_blocks(self.partition, &r).uu;
            scan.push(x, &j, &r, Some(&ruu));
        }
        Ok(scan.finish())
    }

    /// Full rank and `sym(G_d) < 0` at every sample.
    pub fn check_matched_assumption(&self, samples: &[Vector]) -> Result<MatchedReport> {
        let md = self.dist.matched.as_ref().ok_or_else(|| {
            Error::Config("plant has no matched disturbance model".into())
        })?;
        let mut worst_margin = f64::INFINITY;
        let mut worst_condition = 1.0_f64;
        let mut failure = None;
        for (idx, x) in samples.iter().enumerate() {
            ensure_len("matched-assumption sample", self.partition.n(), x.len())?;
            let gd = md.gd.eval(x);
            let cond = condition_number(&gd);
            let margin = -max_sym_eigenvalue(&gd);
            worst_condition = worst_condition.max(cond);
            worst_margin = worst_margin.min(margin);
            if failure.is_none() {
                if !cond.is_finite() || cond > crate::linalg::CONDITION_WARN {
                    failure = Some(format!("G_d singular at sample {idx} (condition {cond:e})"));
                } else if margin.abs() <= 1e-12 * (1.0 + gd.norm()) {
                    failure = Some(format!("symmetric part of G_d singular at sample {idx}"));
                } else if margin < 0.0 {
                    failure = Some(format!(
                        "symmetric part of G_d not negative definite at sample {idx} (largest eigenvalue {:e})",
                        -margin
                    ));
                }
            }
        }
        Ok(MatchedReport {
            samples: samples.len(),
            worst_margin,
            worst_condition,
            state_dependent: !md.gd.is_constant(),
            failure,
        })
    }

    /// Fits one constant `d̄_u` with `(J_au + R_au)ᵀ(x) d̄_u = d_u_raw(x)` at all samples.
    pub fn check_unmatched_assumption<F>(&self, d_u_raw: F, samples: &[Vector]) -> Result<UnmatchedReport>
    where
        F: Fn(&Vector) -> Vector,
    {
        if samples.is_empty() {
            return Err(Error::Precondition("unmatched check needs at least one sample".into()));
        }
        let (m, s) = (self.partition.m(), self.partition.s());
        let k = samples.len();
        let mut a = Matrix::zeros(k * s, m);
        let mut b = Vector::zeros(k * s);
        let mut blocks = Vec::with_capacity(k);
        for (idx, x) in samples.iter().enumerate() {
            ensure_len("unmatched-assumption sample", self.partition.n(), x.len())?;
            let dir = self.unmatched_direction(x);
            let rhs = d_u_raw(x);
            ensure_len("raw unmatched disturbance", s, rhs.len())?;
            a.view_mut((idx * s, 0), (s, m)).copy_from(&dir);
            b.rows_mut(idx * s, s).copy_from(&rhs);
            blocks.push((dir, rhs));
        }
        let d_bar = if a.nrows() == 0 {
            Vector::zeros(m)
        } else {
            let svd = a.svd(true, true);
            let eps = 1e-12 * svd.singular_values.max().max(1e-300);
            svd.solve(&b, eps)
                .map_err(|e| Error::Validation(format!("least-squares fit failed: {e}")))?
        };
        let mut max_residual = 0.0_f64;
        let mut worst = None;
        for (idx, (dir, rhs)) in blocks.iter().enumerate() {
            let res = (dir * &d_bar - rhs).norm();
            if res > max_residual || worst.is_none() {
                max_residual = max_residual.max(res);
                worst = Some(idx);
            }
        }
        let failure = (max_residual >= UNMATCHED_FIT_TOL).then(|| {
            format!(
                "no constant d̄_u reproduces the disturbance: residual {max_residual:e} at sample {}",
                worst.unwrap_or(0)
            )
        });
        Ok(UnmatchedReport {
            samples: k,
            d_bar_u: d_bar.as_slice().to_vec(),
            max_residual,
            worst_sample_index: worst,
            failure,
        })
    }

    /// Searches for an isolated minimiser of `H(x) + x_aᵀ d̄_u` seeded at `x_star`.
    pub fn check_shifted_minimum(&self, d_bar_u: &Vector) -> Result<MinimumReport> {
        let m = self.partition.m();
        ensure_len("d̄_u", m, d_bar_u.len())?;
        let value = |x: &Vector| self.h.value(x) + x.rows(0, m).dot(d_bar_u);
        let grad = |x: &Vector| {
            let mut g = self.h.gradient(x);
            let mut top = g.rows_mut(0, m);
            top += d_bar_u;
            g
        };
        let hessian = |x: &Vector| -> Result<Matrix> {
            match self.h.hessian(x) {
                Some(h) => Ok(h),
                None => {
                    let jac = finite_diff_jacobian(|v| self.h.gradient(v), x, 1e-5)?;
                    Ok((&jac + jac.transpose()) * 0.5)
                }
            }
        };

        let mut x = self.x_star.clone();
        let mut g = grad(&x);
        let mut iterations = 0;
        while g.norm() >= MINIMUM_GRAD_TOL && iterations < MINIMUM_MAX_ITERS {
            iterations += 1;
            let hs = hessian(&x)?;
            let dir = match hs.clone().cholesky() {
                Some(chol) => -chol.solve(&g),
                None => -g.clone(),
            };
            let f0 = value(&x);
            let slope = g.dot(&dir);
            let mut t = 1.0;
            let mut accepted = false;
            while t > 1e-14 {
                let trial = &x + &dir * t;
                let f1 = value(&trial);
                let g1 = grad(&trial);
                if f1 <= f0 + 1e-4 * t * slope || (f1 <= f0 + 1e-12 * (1.0 + f0.abs()) && g1.norm() < g.norm()) {
                    x = trial;
                    g = g1;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                break;
            }
        }

        // Polish to near machine precision so downstream residuals stay tiny.
        if g.norm() < MINIMUM_GRAD_TOL {
            for _ in 0..4 {
                let Some(chol) = hessian(&x)?.cholesky() else { break };
                let trial = &x - chol.solve(&g);
                let g1 = grad(&trial);
                if g1.norm() >= g.norm() {
                    break;
                }
                x = trial;
                g = g1;
            }
        }

        let hs = hessian(&x)?;
        let min_eig = min_sym_eigenvalue(&hs);
        let gradient_norm = g.norm();
        let failure = if !gradient_norm.is_finite() || gradient_norm >= MINIMUM_GRAD_TOL {
            Some(format!(
                "no stationary point found after {iterations} iterations (|∇H| = {gradient_norm:e})"
            ))
        } else if min_eig <= 1e-12 * (1.0 + hs.norm()) {
            Some(format!(
                "stationary point is not a minimum: Hessian eigenvalue {min_eig:e}"
            ))
        } else {
            None
        };
        Ok(MinimumReport {
            x_bar: x.as_slice().to_vec(),
            gradient_norm,
            min_hessian_eigenvalue: min_eig,
            iterations,
            analytic_hessian: self.h.has_hessian(),
            failure,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{matrix, vector};
    use crate::ph::{
        DisturbanceModel, HamiltonianModel, Partition, PartitionedMatrix, StateMatrix,
    };

    fn plant(j_au: f64, r: Matrix, dist: DisturbanceModel) -> PhSystem {
        let p = Partition::new(1, 1).unwrap();
        PhSystem::new(
            p,
            PartitionedMatrix::interconnection(
                p,
                StateMatrix::zeros(1, 1),
                StateMatrix::constant(matrix(&[&[j_au]])),
                StateMatrix::zeros(1, 1),
            ),
            PartitionedMatrix::from_full(p, move |_| r.clone()),
            HamiltonianModel::quadratic(Matrix::identity(2, 2), Vector::zeros(2)),
            dist,
            Vector::zeros(2),
        )
        .unwrap()
    }

    #[test]
    fn structure_passes_for_valid_matrices() {
        let sys = plant(1.0, matrix(&[&[1.0, 0.0], &[0.0, 0.0]]), DisturbanceModel::none());
        let report = sys.check_structure(&[vector(&[0.1, 0.2])]).unwrap();
        assert!(report.passed());
        assert_eq!(report.r_uu_min_eigenvalue, 0.0);
    }

    #[test]
    fn negative_eigenvalue_is_reported() {
        let sys = plant(1.0, matrix(&[&[-1.0, 0.0], &[0.0, 1.0]]), DisturbanceModel::none());
        let report = sys
            .check_structure(&[vector(&[0.0, 0.0]), vector(&[1.0, 1.0])])
            .unwrap();
        assert!(!report.passed());
        let v = report.psd.first_violation.unwrap();
        assert_eq!(v.sample_index, 0);
        assert!((v.value + 1.0).abs() < 1e-12);
        assert!(report.skew.passed());
    }

    #[test]
    fn empty_samples_rejected() {
        let sys = plant(1.0, Matrix::zeros(2, 2), DisturbanceModel::none());
        assert!(sys.check_structure(&[]).is_err());
    }

    #[test]
    fn matched_assumption_cases() {
        let samples = [vector(&[0.0, 0.0]), vector(&[1.0, -2.0])];
        let ok = plant(
            1.0,
            Matrix::zeros(2, 2),
            DisturbanceModel::matched(StateMatrix::constant(-Matrix::identity(1, 1)), vector(&[1.0])),
        );
        let report = ok.check_matched_assumption(&samples).unwrap();
        assert!(report.passed());
        assert!((report.worst_margin - 1.0).abs() < 1e-12);

        let positive = plant(
            1.0,
            Matrix::zeros(2, 2),
            DisturbanceModel::matched(StateMatrix::constant(Matrix::identity(1, 1)), vector(&[1.0])),
        );
        assert!(!positive.check_matched_assumption(&samples).unwrap().passed());

        let none = plant(1.0, Matrix::zeros(2, 2), DisturbanceModel::none());
        assert!(matches!(
            none.check_matched_assumption(&samples),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn skew_g_d_has_singular_symmetric_part() {
        let p = Partition::new(2, 0).unwrap();
        let sys = PhSystem::new(
            p,
            PartitionedMatrix::zeros(p),
            PartitionedMatrix::zeros(p),
            HamiltonianModel::quadratic(Matrix::identity(2, 2), Vector::zeros(2)),
            DisturbanceModel::matched(
                StateMatrix::constant(matrix(&[&[0.0, 1.0], &[-1.0, 0.0]])),
                vector(&[1.0, 1.0]),
            ),
            Vector::zeros(2),
        )
        .unwrap();
        let report = sys.check_matched_assumption(&[Vector::zeros(2)]).unwrap();
        assert!(!report.passed());
        assert!(report.failure.unwrap().contains("symmetric part"));
    }

    #[test]
    fn unmatched_zero_disturbance() {
        let sys = plant(2.0, Matrix::zeros(2, 2), DisturbanceModel::none());
        let report = sys
            .check_unmatched_assumption(|_| Vector::zeros(1), &[vector(&[0.3, 0.1])])
            .unwrap();
        assert!(report.passed());
        assert_eq!(report.d_bar_u, vec![0.0]);
    }

    #[test]
    fn shifted_minimum_of_quadratic() {
        let sys = plant(2.0, Matrix::zeros(2, 2), DisturbanceModel::none());
        let report = sys.check_shifted_minimum(&vector(&[0.7])).unwrap();
        assert!(report.passed());
        assert!((report.x_bar[0] + 0.7).abs() < 1e-12);
        assert!(report.x_bar[1].abs() < 1e-12);
    }

    #[test]
    fn saddle_is_not_a_minimum() {
        let p = Partition::new(1, 1).unwrap();
        let sys = PhSystem::new(
            p,
            PartitionedMatrix::zeros(p),
            PartitionedMatrix::zeros(p),
            HamiltonianModel::quadratic(matrix(&[&[1.0, 0.0], &[0.0, -1.0]]), Vector::zeros(2)),
            DisturbanceModel::none(),
            Vector::zeros(2),
        )
        .unwrap();
        let report = sys.check_shifted_minimum(&vector(&[0.0])).unwrap();
        assert!(!report.passed());
        assert!(report.failure.unwrap().contains("not a minimum"));
    }

    #[test]
    fn unbounded_energy_does_not_converge() {
        let p = Partition::new(1, 0).unwrap();
        // H = x⁴/4 − 0 … shifted by a linear term it has a minimiser, but
        // a linear H has none.
        let sys = PhSystem::new(
            p,
            PartitionedMatrix::zeros(p),
            PartitionedMatrix::zeros(p),
            HamiltonianModel::new(|_| 0.0, |_| Vector::zeros(1)),
            DisturbanceModel::none(),
            Vector::zeros(1),
        )
        .unwrap();
        let report = sys.check_shifted_minimum(&vector(&[1.0])).unwrap();
        assert!(!report.passed());
    }
}
