//! The jump function `F(x) = x + Σ_{x_i < x} ε_i`, which opens a gap of width `ε_i`
//! at each `x_i`, and the stairs function `G(y) = inf { x : F(x) ≥ y }`, which closes
//! them again.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gap locations and widths on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpSpec {
    locations: Vec<f64>,
    widths: Vec<f64>,
    /// `prefix[i] = Σ_{l < i} ε_l`, length `len + 1`.
    #[serde(skip)]
    prefix: Vec<f64>,
}

impl JumpSpec {
    pub fn new(locations: Vec<f64>, widths: Vec<f64>) -> Result<Self> {
        if locations.len() != widths.len() {
            return Err(Error::Shape("one width per jump location".into()));
        }
        if locations.iter().any(|&x| !(x > 0.0 && x < 1.0)) {
            return Err(Error::Domain("jump locations must lie in (0, 1)".into()));
        }
        if locations.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("jump locations must be strictly increasing".into()));
        }
        if widths.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            return Err(Error::Domain("jump widths must be positive and finite".into()));
        }
        let mut prefix = Vec::with_capacity(widths.len() + 1);
        let mut acc = 0.0;
        prefix.push(acc);
        for e in &widths {
            acc += e;
            prefix.push(acc);
        }
        if !acc.is_finite() {
            return Err(Error::Domain("total width is not finite".into()));
        }
        Ok(Self { locations, widths, prefix })
    }

    pub fn empty() -> Self {
        Self { locations: vec![], widths: vec![], prefix: vec![0.0] }
    }

    pub fn locations(&self) -> &[f64] {
        &self.locations
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }

    /// `ε = Σ ε_i`.
    pub fn total(&self) -> f64 {
        *self.prefix.last().unwrap()
    }

    /// Open gaps `(y_i, y_i + ε_i)` in the widened interval, `y_i = x_i + Σ_{l<i} ε_l`.
    pub fn gaps(&self) -> Vec<(f64, f64)> {
        (0..self.len())
            .map(|i| (self.locations[i] + self.prefix[i], self.locations[i] + self.prefix[i + 1]))
            .collect()
    }

    /// `Σ_{x_l ≤ x} ε_l`, the shift just to the right of `x`.
    fn shift_right_of(&self, x: f64) -> f64 {
        self.prefix[self.locations.partition_point(|&l| l <= x)]
    }
}

/// `F(x) = x + Σ_{x_i < x} ε_i`.
pub fn jump_function_f(spec: &JumpSpec, x: f64) -> f64 {
    x + spec.prefix[spec.locations.partition_point(|&l| l < x)]
}

/// `G(y) = inf { x ∈ [0, 1] : F(x) ≥ y }`.
pub fn stairs_function_g(spec: &JumpSpec, y: f64) -> f64 {
    for (i, &xi) in spec.locations.iter().enumerate() {
        let s = spec.prefix[i];
        if y <= xi + s {
            return (y - s).max(0.0);
        }
        if y <= xi + spec.prefix[i + 1] {
            return xi;
        }
    }
    (y - spec.total()).min(1.0)
}

/// Comparison of the transported measure `F_♯(f dx)` with `f∘G dy` off the gaps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PushforwardReport {
    /// Masses of `F_♯(f dx)` on `out_cells` uniform cells of `[0, 1 + ε]`.
    pub transported: Vec<f64>,
    /// Masses of `f∘G · 1_{off gaps}` on the same cells (midpoint sub-sampling).
    pub reference: Vec<f64>,
    pub mass_in: f64,
    pub mass_out: f64,
    /// Transported mass that lands inside the gaps.
    pub gap_mass: f64,
    /// Largest transported mass on an output cell lying entirely inside a gap.
    pub gap_cell_mass: f64,
    pub max_discrepancy: f64,
}

/// Transports the piecewise-constant density `density` (one value per uniform cell of
/// `[0, 1]`) through `F` and compares it cell by cell with `f∘G` off the gaps.
pub fn pushforward_check(spec: &JumpSpec, density: &[f64], out_cells: usize) -> Result<PushforwardReport> {
    let n = density.len();
    if n == 0 || out_cells == 0 {
        return Err(Error::Shape("need at least one input and one output cell".into()));
    }
    if density.iter().any(|f| !(f.is_finite() && *f >= 0.0)) {
        return Err(Error::Domain("density must be finite and nonnegative".into()));
    }
    let h = 1.0 / n as f64;
    let top = 1.0 + spec.total();
    let big_h = top / out_cells as f64;
    let gaps = spec.gaps();
    let mut transported = vec![0.0; out_cells];
    let mut gap_mass = 0.0;

    let mut deposit = |lo: f64, hi: f64, f: f64| {
        if hi <= lo || f == 0.0 {
            return;
        }
        for &(g0, g1) in &gaps {
            gap_mass += f * (hi.min(g1) - lo.max(g0)).max(0.0);
        }
        let c0 = ((lo / big_h).floor() as usize).min(out_cells - 1);
        let c1 = ((hi / big_h).ceil() as usize).min(out_cells);
        for (c, slot) in transported.iter_mut().enumerate().take(c1).skip(c0) {
            let a = c as f64 * big_h;
            let b = if c + 1 == out_cells { top } else { (c + 1) as f64 * big_h };
            *slot += f * (hi.min(b) - lo.max(a)).max(0.0);
        }
    };

    for (j, &f) in density.iter().enumerate() {
        let a = j as f64 * h;
        let b = if j + 1 == n { 1.0 } else { (j + 1) as f64 * h };
        let mut cuts = vec![a];
        cuts.extend(spec.locations.iter().copied().filter(|&x| x > a && x < b));
        cuts.push(b);
        for w in cuts.windows(2) {
            let s = spec.shift_right_of(w[0]);
            deposit(w[0] + s, w[1] + s, f);
        }
    }

    let sub = 64;
    let reference: Vec<f64> = (0..out_cells)
        .map(|c| {
            let mut acc = 0.0;
            for i in 0..sub {
                let y = (c as f64 + (i as f64 + 0.5) / sub as f64) * big_h;
                if gaps.iter().any(|&(g0, g1)| y > g0 && y < g1) {
                    continue;
                }
                let x = stairs_function_g(spec, y);
                acc += density[((x * n as f64).floor() as usize).min(n - 1)];
            }
            acc * big_h / sub as f64
        })
        .collect();

    let gap_cell_mass = (0..out_cells)
        .filter(|&c| {
            let a = c as f64 * big_h;
            let b = a + big_h;
            gaps.iter().any(|&(g0, g1)| a >= g0 && b <= g1)
        })
        .map(|c| transported[c])
        .fold(0.0, f64::max);
    let max_discrepancy = transported.iter().zip(&reference).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(PushforwardReport {
        mass_in: density.iter().sum::<f64>() * h,
        mass_out: transported.iter().sum(),
        transported,
        reference,
        gap_mass,
        gap_cell_mass,
        max_discrepancy,
    })
}
