use super::{check_gain_dim, IacGains};
use crate::error::{ensure_len, Result};
use crate::linalg::{concat, weighted_sq_norm, Matrix, Vector};
use crate::ph::{Activity, PhSystem, StructureReport, StructureScan};

/// Plant and controller in the coordinates `w = col(x_a, x_u, x_a − x_c)`.
///
/// ```text
///        ⎡ J_c1           J_au + R_au   J_c1 ⎤          ⎡ R_c1 + R_c2   0     R_c1 ⎤
/// J_cl = ⎢ −(J_au+R_au)ᵀ  J_uu          0    ⎥   R_cl = ⎢ 0             R_uu  0    ⎥
///        ⎣ J_c1           0             J_c1 ⎦          ⎣ R_c1          0     R_c1 ⎦
/// ```
///
/// with `H_cl(w) = H(x) + ½‖w_c‖²_{K_i}`.
#[derive(Debug, Clone)]
pub struct ClosedLoop {
    plant: PhSystem,
    gains: IacGains,
}

pub fn build_closed_loop(plant: &PhSystem, gains: &IacGains) -> Result<ClosedLoop> {
    check_gain_dim(plant, gains)?;
    gains.evaluate(plant.x_star())?;
    Ok(ClosedLoop {
        plant: plant.clone(),
        gains: gains.clone(),
    })
}

impl ClosedLoop {
    pub fn plant(&self) -> &PhSystem {
        &self.plant
    }

    pub fn gains(&self) -> &IacGains {
        &self.gains
    }

    /// `n + m`.
    pub fn dim(&self) -> usize {
        let p = self.plant.partition();
        p.n() + p.m()
    }

    fn check(&self, w: &Vector) -> Result<()> {
        ensure_len("closed-loop state", self.dim(), w.len())
    }

    /// Splits `w` into `(x, w_c)`.
    pub fn split(&self, w: &Vector) -> (Vector, Vector) {
        let n = self.plant.partition().n();
        let m = self.plant.partition().m();
        (w.rows(0, n).clone_owned(), w.rows(n, m).clone_owned())
    }

    /// `w = (x, x_a − x_c)`.
    pub fn to_w(&self, x: &Vector, x_c: &Vector) -> Vector {
        let m = self.plant.partition().m();
        concat(&[x, &(x.rows(0, m) - x_c)])
    }

    /// `(x, x_c)` from `w`.
    pub fn from_w(&self, w: &Vector) -> (Vector, Vector) {
        let m = self.plant.partition().m();
        let (x, wc) = self.split(w);
        let xc = x.rows(0, m) - wc;
        (x, xc)
    }

    pub fn interconnection(&self, w: &Vector) -> Result<Matrix> {
        Ok(self.matrices(w)?.0)
    }

    pub fn dissipation(&self, w: &Vector) -> Result<Matrix> {
        Ok(self.matrices(w)?.1)
    }

    /// `(J_cl, R_cl)` at `w`.
    pub fn matrices(&self, w: &Vector) -> Result<(Matrix, Matrix)> {
        self.check(w)?;
        let p = self.plant.partition();
        let (m, s, n) = (p.m(), p.s(), p.n());
        let x = w.rows(0, n).clone_owned();
        let k = self.gains.evaluate(&x)?;
        let jb = self.plant.interconnection().blocks(&x);
        let rb = self.plant.dissipation().blocks(&x);
        let coupling = &jb.au + &rb.au;
        let d = n + m;
        let mut j = Matrix::zeros(d, d);
        j.view_mut((0, 0), (m, m)).copy_from(&k.jc1);
        j.view_mut((0, m), (m, s)).copy_from(&coupling);
        j.view_mut((0, n), (m, m)).copy_from(&k.jc1);
        j.view_mut((m, 0), (s, m)).copy_from(&(-coupling.transpose()));
        j.view_mut((m, m), (s, s)).copy_from(&jb.uu);
        j.view_mut((n, 0), (m, m)).copy_from(&k.jc1);
        j.view_mut((n, n), (m, m)).copy_from(&k.jc1);
        let mut r = Matrix::zeros(d, d);
        r.view_mut((0, 0), (m, m)).copy_from(&(&k.rc1 + &k.rc2));
        r.view_mut((0, n), (m, m)).copy_from(&k.rc1);
        r.view_mut((m, m), (s, s)).copy_from(&rb.uu);
        r.view_mut((n, 0), (m, m)).copy_from(&k.rc1);
        r.view_mut((n, n), (m, m)).copy_from(&k.rc1);
        Ok((j, r))
    }

    /// `H_cl(w) = H(x) + ½‖w_c‖²_{K_i}`.
    pub fn hamiltonian(&self, w: &Vector) -> Result<f64> {
        self.check(w)?;
        let (x, wc) = self.split(w);
        Ok(self.plant.hamiltonian().value(&x) + 0.5 * weighted_sq_norm(&wc, self.gains.ki()))
    }

    /// `∇H_cl = col(∇H(x), K_i w_c)`.
    pub fn gradient(&self, w: &Vector) -> Result<Vector> {
        self.check(w)?;
        let (x, wc) = self.split(w);
        Ok(concat(&[&self.plant.hamiltonian().gradient(&x), &(self.gains.ki() * wc)]))
    }

    /// `d_a = G_d(x) d̄_a` with the plant's `G_d`; plants without a matched
    /// model use `G_d = J_c1 − R_c1`.
    pub fn matched_term(&self, x: &Vector, d_bar_a: &Vector) -> Vector {
        match &self.plant.disturbance().matched {
            Some(md) => md.gd.eval(x) * d_bar_a,
            None => match self.gains.evaluate(x) {
                Ok(k) => (k.jc1 - k.rc1) * d_bar_a,
                Err(_) => Vector::from_element(d_bar_a.len(), f64::NAN),
            },
        }
    }

    /// `[J_cl − R_cl]∇H_cl − col(d_a, d_u, d_a)` for explicit constants.
    pub fn drift_with(
        &self,
        w: &Vector,
        d_bar_a: Option<&Vector>,
        d_bar_u: Option<&Vector>,
    ) -> Result<Vector> {
        let (j, r) = self.matrices(w)?;
        let grad = self.gradient(w)?;
        let mut dw = (j - r) * grad;
        let p = self.plant.partition();
        let (m, s, n) = (p.m(), p.s(), p.n());
        let x = w.rows(0, n).clone_owned();
        if let Some(da) = d_bar_a {
            ensure_len("matched disturbance", m, da.len())?;
            let d_a = self.matched_term(&x, da);
            let mut top = dw.rows_mut(0, m);
            top -= &d_a;
            let mut last = dw.rows_mut(n, m);
            last -= &d_a;
        }
        if let Some(du) = d_bar_u {
            ensure_len("unmatched disturbance", m, du.len())?;
            let d_u = self.plant.unmatched_direction(&x) * du;
            let mut mid = dw.rows_mut(m, s);
            mid -= d_u;
        }
        Ok(dw)
    }

    /// Drift with the plant's own disturbance constants switched by `active`.
    pub fn drift(&self, w: &Vector, active: Activity) -> Result<Vector> {
        let dist = self.plant.disturbance();
        let da = dist.matched.as_ref().filter(|_| active.matched).map(|md| &md.d_bar);
        let du = dist.unmatched.as_ref().filter(|_| active.unmatched);
        self.drift_with(w, da, du)
    }

    /// Structural audit of `J_cl`, `R_cl` over closed-loop samples.
    pub fn check_structure(&self, samples: &[Vector]) -> Result<StructureReport> {
        let mut scan = StructureScan::default();
        let p = self.plant.partition();
        for w in samples {
            let (j, r) = self.matrices(w)?;
            let ruu = r.view((p.m(), p.m()), (p.s(), p.s())).clone_owned();
            scan.push(w, &j, &r, Some(&ruu));
        }
        Ok(scan.finish())
    }
}
