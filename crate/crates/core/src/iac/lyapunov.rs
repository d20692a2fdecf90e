use super::{equilibrium_matched, ClosedLoop, EquilibriumPrediction};
use crate::error::{ensure_len, Result};
use crate::linalg::{concat, weighted_sq_norm, Vector};

/// Shifted energy certifying an equilibrium `w̄`:
///
/// ```text
/// W(w) = H(x) + x_aᵀ d̄_u + ½‖w_c‖²_{K_i} − (d̄_a + d̄_u)ᵀ(w_c − w̄_c) − [same at w̄]
/// ```
///
/// With `d̄_u = 0` this is the matched certificate and with `d̄_a = 0` the
/// unmatched one.
#[derive(Debug, Clone)]
pub struct ShiftedLyapunov {
    closed: ClosedLoop,
    w_bar: Vector,
    d_bar_a: Vector,
    d_bar_u: Vector,
    offset: f64,
}

impl ShiftedLyapunov {
    pub fn new(closed: &ClosedLoop, prediction: &EquilibriumPrediction) -> Result<Self> {
        let w_bar = prediction.w_bar();
        ensure_len("equilibrium", closed.dim(), w_bar.len())?;
        let mut out = Self {
            closed: closed.clone(),
            w_bar,
            d_bar_a: prediction.d_bar_a(),
            d_bar_u: prediction.d_bar_u(),
            offset: 0.0,
        };
        out.offset = out.raw(&out.w_bar.clone());
        Ok(out)
    }

    pub fn w_bar(&self) -> &Vector {
        &self.w_bar
    }

    fn d_tot(&self) -> Vector {
        &self.d_bar_a + &self.d_bar_u
    }

    fn raw(&self, w: &Vector) -> f64 {
        let m = self.closed.plant().partition().m();
        let (x, wc) = self.closed.split(w);
        self.closed.plant().hamiltonian().value(&x)
            + x.rows(0, m).dot(&self.d_bar_u)
            + 0.5 * weighted_sq_norm(&wc, self.closed.gains().ki())
            - self.d_tot().dot(&wc)
    }

    pub fn value(&self, w: &Vector) -> Result<f64> {
        ensure_len("closed-loop state", self.closed.dim(), w.len())?;
        Ok(self.raw(w) - self.offset)
    }

    /// `∇W = col(∇_a H + d̄_u, ∇_u H, K_i (w_c − w̄_c))`.
    pub fn gradient(&self, w: &Vector) -> Result<Vector> {
        ensure_len("closed-loop state", self.closed.dim(), w.len())?;
        let m = self.closed.plant().partition().m();
        let (x, wc) = self.closed.split(w);
        let mut gx = self.closed.plant().hamiltonian().gradient(&x);
        let mut top = gx.rows_mut(0, m);
        top += &self.d_bar_u;
        let gc = self.closed.gains().ki() * wc - self.d_tot();
        Ok(concat(&[&gx, &gc]))
    }

    /// `Ẇ` along the closed-loop drift with both disturbances active.
    pub fn rate(&self, w: &Vector) -> Result<f64> {
        let drift = self
            .closed
            .drift_with(w, Some(&self.d_bar_a), Some(&self.d_bar_u))?;
        Ok(self.gradient(w)?.dot(&drift))
    }

    /// `−‖∇_a H‖²_{R_c2} − ‖∇_a H + d̄_u + K_i w̃_c‖²_{R_c1}`.
    pub fn bound(&self, w: &Vector) -> Result<f64> {
        ensure_len("closed-loop state", self.closed.dim(), w.len())?;
        let m = self.closed.plant().partition().m();
        let (x, wc) = self.closed.split(w);
        let k = self.closed.gains().evaluate(&x)?;
        let ga = self.closed.plant().hamiltonian().gradient(&x).rows(0, m).clone_owned();
        let n = x.len();
        let wc_bar = self.w_bar.rows(n, m);
        let y = &ga + &self.d_bar_u + &k.ki * (wc - wc_bar);
        Ok(-weighted_sq_norm(&ga, &k.rc2) - weighted_sq_norm(&y, &k.rc1))
    }

    /// `(Ẇ, bound)`.
    pub fn rate_and_bound(&self, w: &Vector) -> Result<(f64, f64)> {
        Ok((self.rate(w)?, self.bound(w)?))
    }
}

/// Matched certificate `W(w)` about `w̄ = (x_star, K_i⁻¹ d̄_a)`.
pub fn lyapunov_matched(closed: &ClosedLoop, d_bar_a: &Vector, w: &Vector) -> Result<f64> {
    let eq = equilibrium_matched(closed, d_bar_a)?;
    ShiftedLyapunov::new(closed, &eq)?.value(w)
}

/// `(Ẇ, bound)` for a certified equilibrium.
pub fn lyapunov_rate_bound(
    closed: &ClosedLoop,
    prediction: &EquilibriumPrediction,
    w: &Vector,
) -> Result<(f64, f64)> {
    ShiftedLyapunov::new(closed, prediction)?.rate_and_bound(w)
}

/// Unmatched certificate `𝐖(w)` for a prediction from
/// [`super::equilibrium_unmatched`].
pub fn lyapunov_unmatched(
    closed: &ClosedLoop,
    prediction: &EquilibriumPrediction,
    w: &Vector,
) -> Result<f64> {
    ShiftedLyapunov::new(closed, prediction)?.value(w)
}

/// Detectability outputs `Y_a = col(∇_a H, w̃_c)` and
/// `Y_u = ∇_a H + d̄_u + K_i w̃_c`, with `w̃_c = w_c − K_i⁻¹(d̄_a + d̄_u)`.
pub fn detect_outputs(
    closed: &ClosedLoop,
    d_bar_a: &Vector,
    d_bar_u: &Vector,
    w: &Vector,
) -> Result<(Vector, Vector)> {
    ensure_len("closed-loop state", closed.dim(), w.len())?;
    let m = closed.plant().partition().m();
    let (x, wc) = closed.split(w);
    let wc_tilde = wc - closed.gains().ki_solve(&(d_bar_a + d_bar_u))?;
    let ga = closed.plant().hamiltonian().gradient(&x).rows(0, m).clone_owned();
    let y_u = &ga + d_bar_u + closed.gains().ki() * &wc_tilde;
    Ok((concat(&[&ga, &wc_tilde]), y_u))
}
