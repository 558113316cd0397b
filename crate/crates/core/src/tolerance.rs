use serde::Serialize;

/// Thresholds for every numeric decision. Each is relative: a quantity passes
/// when `value ≤ tol · (1 + scale)` for the scale noted per check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    /// Vanishing of a tensor, relative to the curvature scale.
    pub zero: f64,
    /// `|det CY| > det · ‖CY‖³` means nondegenerate.
    pub det: f64,
    /// Eigenvalue coincidence, relative to `max(1, spectral radius)`.
    pub degeneracy: f64,
    pub eigenflag: f64,
    /// Integrability, umbilicity, closedness, Lie conformality and Killing checks.
    pub check: f64,
    /// Angle used when matching directions and planes.
    pub angle: f64,
    pub plucker: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            zero: 1e-9,
            det: 1e-8,
            degeneracy: 1e-7,
            eigenflag: 1e-8,
            check: 1e-8,
            angle: 1e-6,
            plucker: 1e-9,
        }
    }
}

impl Tolerances {
    pub fn with_check(mut self, tol: f64) -> Self {
        self.check = tol;
        self
    }
}

/// One threshold comparison, kept for the report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Margin {
    pub value: f64,
    pub threshold: f64,
}

impl Margin {
    pub fn new(value: f64, threshold: f64) -> Margin {
        Margin { value, threshold }
    }

    /// `value ≤ threshold`.
    pub fn pass(&self) -> bool {
        self.value <= self.threshold
    }

    pub fn ratio(&self) -> f64 {
        if self.threshold > 0.0 {
            self.value / self.threshold
        } else if self.value == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }

    /// Within a factor 10 of the threshold on either side.
    pub fn ambiguous(&self) -> bool {
        let r = self.ratio();
        r > 0.1 && r < 10.0
    }

    /// The worse (larger ratio) of two margins.
    pub fn worst(self, other: Margin) -> Margin {
        if other.ratio() > self.ratio() {
            other
        } else {
            self
        }
    }

    pub fn zero() -> Margin {
        Margin::new(0.0, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ambiguity_band() {
        assert!(!Margin::new(1e-12, 1e-8).ambiguous());
        assert!(Margin::new(2e-8, 1e-8).ambiguous());
        assert!(Margin::new(2e-9, 1e-8).ambiguous());
        assert!(!Margin::new(1.0, 1e-8).ambiguous());
        assert!(Margin::new(1e-9, 1e-8).worst(Margin::new(1.0, 1.0)).value == 1.0);
    }
}
