use std::fmt::Debug;

use serde::{Deserialize, Serialize};

/// Attention-injection knobs of the prompt-to-prompt editor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct P2PParams {
    /// Fraction of denoising steps with injected attention.
    pub frac: f64,
    /// Fraction of steps to wait before injecting.
    pub delay: f64,
    /// Reweighting multiplier on edited tokens.
    pub weight: f64,
}

/// Inversion knobs of the zero-shot editor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZetaParams {
    pub cfg_src: f64,
    pub cfg_tar: f64,
    /// Timestep the inversion starts from.
    pub t_start: u32,
}

/// A box-bounded parameter space mapped onto the unit cube.
pub trait SearchSpace {
    type Params: Copy + Debug + PartialEq;

    fn dim(&self) -> usize;
    /// Maps unit-cube coordinates to parameters (rounding integer axes).
    fn from_unit(&self, u: &[f64]) -> Self::Params;
    fn to_unit(&self, p: &Self::Params) -> Vec<f64>;
    /// Bounds plus any cross-parameter constraint.
    fn is_feasible(&self, p: &Self::Params) -> bool;
}

fn lerp(lo: f64, hi: f64, u: f64) -> f64 {
    lo + (hi - lo) * u.clamp(0.0, 1.0)
}

fn unlerp(lo: f64, hi: f64, x: f64) -> f64 {
    (x - lo) / (hi - lo)
}

fn within(x: f64, (lo, hi): (f64, f64)) -> bool {
    x >= lo && x <= hi
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct P2PSpace {
    pub frac: (f64, f64),
    pub delay: (f64, f64),
    pub weight: (f64, f64),
    /// Upper bound on `frac + delay`.
    pub max_frac_plus_delay: f64,
}

impl Default for P2PSpace {
    fn default() -> Self {
        Self {
            frac: (0.3, 0.9),
            delay: (0.0, 0.6),
            weight: (1.0, 1.8),
            max_frac_plus_delay: 1.0,
        }
    }
}

impl SearchSpace for P2PSpace {
    type Params = P2PParams;

    fn dim(&self) -> usize {
        3
    }

    fn from_unit(&self, u: &[f64]) -> P2PParams {
        P2PParams {
            frac: lerp(self.frac.0, self.frac.1, u[0]),
            delay: lerp(self.delay.0, self.delay.1, u[1]),
            weight: lerp(self.weight.0, self.weight.1, u[2]),
        }
    }

    fn to_unit(&self, p: &P2PParams) -> Vec<f64> {
        vec![
            unlerp(self.frac.0, self.frac.1, p.frac),
            unlerp(self.delay.0, self.delay.1, p.delay),
            unlerp(self.weight.0, self.weight.1, p.weight),
        ]
    }

    fn is_feasible(&self, p: &P2PParams) -> bool {
        within(p.frac, self.frac)
            && within(p.delay, self.delay)
            && within(p.weight, self.weight)
            && p.frac + p.delay <= self.max_frac_plus_delay
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZetaSpace {
    pub cfg_src: (f64, f64),
    pub cfg_tar: (f64, f64),
    /// Inclusive integer range.
    pub t_start: (u32, u32),
}

impl Default for ZetaSpace {
    fn default() -> Self {
        Self {
            cfg_src: (1.0, 3.0),
            cfg_tar: (3.0, 10.0),
            t_start: (18, 65),
        }
    }
}

impl ZetaSpace {
    /// Continuous span whose rounding covers every integer equally.
    fn t_span(&self) -> (f64, f64) {
        (self.t_start.0 as f64 - 0.5, self.t_start.1 as f64 + 0.5)
    }
}

impl SearchSpace for ZetaSpace {
    type Params = ZetaParams;

    fn dim(&self) -> usize {
        3
    }

    fn from_unit(&self, u: &[f64]) -> ZetaParams {
        let (lo, hi) = self.t_span();
        let t = lerp(lo, hi, u[2]).round() as u32;
        ZetaParams {
            cfg_src: lerp(self.cfg_src.0, self.cfg_src.1, u[0]),
            cfg_tar: lerp(self.cfg_tar.0, self.cfg_tar.1, u[1]),
            t_start: t.clamp(self.t_start.0, self.t_start.1),
        }
    }

    fn to_unit(&self, p: &ZetaParams) -> Vec<f64> {
        let (lo, hi) = self.t_span();
        vec![
            unlerp(self.cfg_src.0, self.cfg_src.1, p.cfg_src),
            unlerp(self.cfg_tar.0, self.cfg_tar.1, p.cfg_tar),
            unlerp(lo, hi, p.t_start as f64),
        ]
    }

    fn is_feasible(&self, p: &ZetaParams) -> bool {
        within(p.cfg_src, self.cfg_src)
            && within(p.cfg_tar, self.cfg_tar)
            && (self.t_start.0..=self.t_start.1).contains(&p.t_start)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_round_trip() {
        let s = P2PSpace::default();
        let p = P2PParams { frac: 0.6, delay: 0.2, weight: 1.4 };
        let q = s.from_unit(&s.to_unit(&p));
        assert!((p.frac - q.frac).abs() < 1e-12 && (p.delay - q.delay).abs() < 1e-12);
        assert!(s.is_feasible(&p));
        assert!(!s.is_feasible(&P2PParams { frac: 0.9, delay: 0.2, weight: 1.0 }));
    }

    #[test]
    fn t_start_rounding_covers_ends() {
        let s = ZetaSpace::default();
        assert_eq!(s.from_unit(&[0.0, 0.0, 0.0]).t_start, 18);
        assert_eq!(s.from_unit(&[1.0, 1.0, 1.0]).t_start, 65);
        let p = ZetaParams { cfg_src: 2.0, cfg_tar: 5.0, t_start: 40 };
        assert_eq!(s.from_unit(&s.to_unit(&p)), p);
    }
}
