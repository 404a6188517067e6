/// `(ε_Ex, x_E0, y_E0, w_E0)`.
pub type Theta = [f64; 4];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Param {
    EpsEx,
    X,
    Y,
    W,
}

impl Param {
    pub const ALL: [Param; 4] = [Param::EpsEx, Param::X, Param::Y, Param::W];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Param::EpsEx => "eps_Ex",
            Param::X => "x_E0",
            Param::Y => "y_E0",
            Param::W => "w_E0",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "eps" | "eps_Ex" | "eps_x" => Some(Param::EpsEx),
            "x" | "x_E0" | "x_A0" => Some(Param::X),
            "y" | "y_E0" | "y_A0" => Some(Param::Y),
            "w" | "w_E0" | "w_A0" => Some(Param::W),
            _ => None,
        }
    }
}

/// A least-squares objective: `value(θ)` is the mean square of `residuals(θ)`.
pub trait Objective: Sync {
    /// `+∞` where the objective cannot be evaluated (divergence).
    fn value(&self, theta: &Theta) -> f64;

    /// Fills `out` and returns `false` if the point cannot be evaluated.
    fn residuals(&self, theta: &Theta, out: &mut Vec<f64>) -> bool;

    /// Value of the pinned `z_E0` reported alongside estimates.
    fn pinned_z(&self) -> f64 {
        0.0
    }
}

/// `‖A(θ − θ*)‖² / rows`: a synthetic convex objective for optimizer tests.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    pub center: Theta,
    pub rows: Vec<Theta>,
}

impl Quadratic {
    /// Axis-aligned with the given per-axis weights.
    pub fn diagonal(center: Theta, weights: Theta) -> Self {
        let rows = (0..4)
            .map(|i| {
                let mut r = [0.0; 4];
                r[i] = weights[i];
                r
            })
            .collect();
        Self { center, rows }
    }
}

impl Objective for Quadratic {
    fn value(&self, theta: &Theta) -> f64 {
        let mut r = Vec::new();
        self.residuals(theta, &mut r);
        r.iter().map(|v| v * v).sum::<f64>() / r.len() as f64
    }

    fn residuals(&self, theta: &Theta, out: &mut Vec<f64>) -> bool {
        out.clear();
        out.extend(
            self.rows
                .iter()
                .map(|row| (0..4).map(|j| row[j] * (theta[j] - self.center[j])).sum::<f64>()),
        );
        true
    }
}

/// Central-difference Jacobian of the residual vector over the `free` parameters,
/// with step `rel_step · max(|θ_i|, 1)`. Returns `(residuals at θ, columns,
/// evaluations)`, or `None` if any evaluation fails.
pub fn finite_difference_jacobian<O: Objective + ?Sized>(
    obj: &O,
    theta: &Theta,
    free: &[Param],
    rel_step: f64,
) -> Option<(Vec<f64>, Vec<Vec<f64>>, usize)> {
    let mut r0 = Vec::new();
    if !obj.residuals(theta, &mut r0) {
        return None;
    }
    let mut cols = Vec::with_capacity(free.len());
    let (mut rp, mut rm) = (Vec::new(), Vec::new());
    for &p in free {
        let i = p.index();
        let h = rel_step * theta[i].abs().max(1.0);
        let (mut tp, mut tm) = (*theta, *theta);
        tp[i] += h;
        tm[i] -= h;
        if !obj.residuals(&tp, &mut rp) || !obj.residuals(&tm, &mut rm) {
            return None;
        }
        let denom = tp[i] - tm[i];
        cols.push(rp.iter().zip(&rm).map(|(a, b)| (a - b) / denom).collect());
    }
    Some((r0, cols, 1 + 2 * free.len()))
}

/// `JᵀJ` and `Jᵀr` for column-major `J`.
pub(crate) fn normal_equations(cols: &[Vec<f64>], r: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let k = cols.len();
    let mut jtj = vec![vec![0.0; k]; k];
    let mut jtr = vec![0.0; k];
    for i in 0..k {
        jtr[i] = cols[i].iter().zip(r).map(|(a, b)| a * b).sum();
        for j in 0..=i {
            let v: f64 = cols[i].iter().zip(&cols[j]).map(|(a, b)| a * b).sum();
            jtj[i][j] = v;
            jtj[j][i] = v;
        }
    }
    (jtj, jtr)
}

/// Solves `(A + λ·diag(A))x = b` by Gaussian elimination with partial pivoting.
pub(crate) fn solve_damped(a: &[Vec<f64>], b: &[f64], lambda: f64) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row = a[i].clone();
            row[i] += lambda * a[i][i] + 1e-300;
            row.push(b[i]);
            row
        })
        .collect();
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))?;
        if m[piv][c] == 0.0 || !m[piv][c].is_finite() {
            return None;
        }
        m.swap(c, piv);
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            for k in c..=n {
                m[r][k] -= f * m[c][k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| m[r][k] * x[k]).sum();
        x[r] = (m[r][n] - s) / m[r][r];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}
