use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// How the spatial bandwidth of a patch is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SigmaPolicy {
    /// Largest distance from the centre to a neighbour.
    #[default]
    MaxNeighbor,
    /// Diagonal of the neighbours' bounding box.
    PatchDiagonal,
}

/// Per-patch distance minimized by the filtering terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FilterKind {
    /// Projections onto both the neighbour and the centre normal.
    #[default]
    Bilateral,
    /// Projection onto the neighbour normal only.
    Unidirectional,
    /// Distance to the position-weighted mean of the neighbours.
    Average,
}

/// Term that keeps the field from degenerating.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Constraint {
    #[default]
    Chamfer,
    Pull,
}

/// Named loss combinations used for ablations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossCombo {
    PullOnly,
    CdOnly,
    CdZero,
    CdZeroField,
    Full,
}

impl LossCombo {
    pub const ALL: [LossCombo; 5] = [
        LossCombo::PullOnly,
        LossCombo::CdOnly,
        LossCombo::CdZero,
        LossCombo::CdZeroField,
        LossCombo::Full,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LossCombo::PullOnly => "pull",
            LossCombo::CdOnly => "cd",
            LossCombo::CdZero => "cd+zero",
            LossCombo::CdZeroField => "cd+zero+field",
            LossCombo::Full => "full",
        }
    }
}

impl FromStr for LossCombo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: Vec<String> = s
            .trim()
            .to_ascii_lowercase()
            .split('+')
            .map(|t| t.trim().trim_start_matches("l_").to_string())
            .collect();
        match key.join("+").as_str() {
            "pull" | "pull_only" => Ok(LossCombo::PullOnly),
            "cd" | "cd_only" => Ok(LossCombo::CdOnly),
            "cd+zero" => Ok(LossCombo::CdZero),
            "cd+zero+field" => Ok(LossCombo::CdZeroField),
            "full" => Ok(LossCombo::Full),
            _ => Err(Error::input(format!("unknown loss combination `{s}`"))),
        }
    }
}

impl fmt::Display for LossCombo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

macro_rules! keyword_enum {
    ($ty:ty, $what:literal, $($name:literal => $val:expr),+ $(,)?) => {
        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s.trim().to_ascii_lowercase().as_str() {
                    $($name => Ok($val),)+
                    _ => Err(Error::input(format!(concat!("unknown ", $what, " `{}`"), s))),
                }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let name = [$(($val, $name)),+]
                    .into_iter()
                    .find(|(v, _)| v == self)
                    .map(|(_, n)| n)
                    .unwrap_or("?");
                f.write_str(name)
            }
        }
    };
}

keyword_enum!(SigmaPolicy, "sigma_p policy", "max" => SigmaPolicy::MaxNeighbor, "diagonal" => SigmaPolicy::PatchDiagonal);
keyword_enum!(
    FilterKind,
    "filter kind",
    "bilateral" => FilterKind::Bilateral,
    "unidirectional" => FilterKind::Unidirectional,
    "average" => FilterKind::Average,
);
keyword_enum!(Constraint, "constraint", "cd" => Constraint::Chamfer, "pull" => Constraint::Pull);

/// Parameters of the filtering objective.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterConfig {
    /// Normal bandwidth in degrees.
    pub sigma_n_deg: f64,
    pub sigma_p_policy: SigmaPolicy,
    pub k_filter: usize,
    /// Weight of the zero level set term; 0 or 1 in the standard combinations.
    pub zero_weight: f64,
    /// Field term.
    pub alpha1: f64,
    /// Distance term.
    pub alpha2: f64,
    /// Constraint term.
    pub alpha3: f64,
    pub constraint: Constraint,
    /// Optional `(|grad f| - 1)^2` penalty at the queries.
    pub eikonal_weight: f64,
    pub weight_floor: f64,
    pub kind: FilterKind,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            sigma_n_deg: 15.0,
            sigma_p_policy: SigmaPolicy::MaxNeighbor,
            k_filter: 16,
            zero_weight: 1.0,
            alpha1: 1.0,
            alpha2: 1.0,
            alpha3: 10.0,
            constraint: Constraint::Chamfer,
            eikonal_weight: 0.0,
            weight_floor: 1e-12,
            kind: FilterKind::Bilateral,
        }
    }
}

impl FilterConfig {
    /// Configuration for a named combination, other settings left default.
    pub fn for_combo(combo: LossCombo) -> Self {
        let mut cfg = Self::default();
        cfg.apply_combo(combo);
        cfg
    }

    /// Switches the term weights to `combo`.
    pub fn apply_combo(&mut self, combo: LossCombo) {
        let (zero, field, dist, constraint) = match combo {
            LossCombo::PullOnly => (0.0, 0.0, 0.0, Constraint::Pull),
            LossCombo::CdOnly => (0.0, 0.0, 0.0, Constraint::Chamfer),
            LossCombo::CdZero => (1.0, 0.0, 0.0, Constraint::Chamfer),
            LossCombo::CdZeroField => (1.0, 1.0, 0.0, Constraint::Chamfer),
            LossCombo::Full => (1.0, 1.0, 1.0, Constraint::Chamfer),
        };
        self.zero_weight = zero;
        self.alpha1 = field;
        self.alpha2 = dist;
        self.constraint = constraint;
        if self.alpha3 == 0.0 {
            self.alpha3 = 10.0;
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_n_deg > 0.0 && self.sigma_n_deg < 90.0) {
            return Err(Error::input(format!("sigma_n_deg must lie in (0, 90), got {}", self.sigma_n_deg)));
        }
        if self.k_filter < 2 {
            return Err(Error::input(format!("k_filter must be at least 2, got {}", self.k_filter)));
        }
        for (name, w) in [
            ("zero_weight", self.zero_weight),
            ("alpha1", self.alpha1),
            ("alpha2", self.alpha2),
            ("alpha3", self.alpha3),
            ("eikonal_weight", self.eikonal_weight),
        ] {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::input(format!("{name} must be finite and nonnegative, got {w}")));
            }
        }
        if !(self.weight_floor > 0.0 && self.weight_floor.is_finite()) {
            return Err(Error::input("weight_floor must be positive"));
        }
        Ok(())
    }

    /// `1 - cos(sigma_n)`, the normal bandwidth denominator.
    pub fn normal_scale(&self) -> f64 {
        1.0 - self.sigma_n_deg.to_radians().cos()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let cfg = FilterConfig::default();
        cfg.validate().unwrap();
        assert_eq!((cfg.alpha1, cfg.alpha2, cfg.alpha3), (1.0, 1.0, 10.0));
    }

    #[test]
    fn rejects_bad_values() {
        for cfg in [
            FilterConfig { sigma_n_deg: 0.0, ..Default::default() },
            FilterConfig { sigma_n_deg: 90.0, ..Default::default() },
            FilterConfig { k_filter: 1, ..Default::default() },
            FilterConfig { alpha3: -1.0, ..Default::default() },
            FilterConfig { alpha1: f64::NAN, ..Default::default() },
            FilterConfig { weight_floor: 0.0, ..Default::default() },
        ] {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn keywords_round_trip() {
        for p in [SigmaPolicy::MaxNeighbor, SigmaPolicy::PatchDiagonal] {
            assert_eq!(p.to_string().parse::<SigmaPolicy>().unwrap(), p);
        }
        for k in [FilterKind::Bilateral, FilterKind::Unidirectional, FilterKind::Average] {
            assert_eq!(k.to_string().parse::<FilterKind>().unwrap(), k);
        }
        for c in [Constraint::Chamfer, Constraint::Pull] {
            assert_eq!(c.to_string().parse::<Constraint>().unwrap(), c);
        }
        for c in LossCombo::ALL {
            assert_eq!(c.name().parse::<LossCombo>().unwrap(), c);
        }
        assert_eq!("L_CD+L_zero".parse::<LossCombo>().unwrap(), LossCombo::CdZero);
        assert_eq!("L_pull".parse::<LossCombo>().unwrap(), LossCombo::PullOnly);
        assert!("nonsense".parse::<LossCombo>().is_err());
    }

    #[test]
    fn combos_select_terms() {
        let cd = FilterConfig::for_combo(LossCombo::CdOnly);
        assert_eq!((cd.zero_weight, cd.alpha1, cd.alpha2), (0.0, 0.0, 0.0));
        let full = FilterConfig::for_combo(LossCombo::Full);
        assert_eq!(full, FilterConfig::default());
        assert_eq!(FilterConfig::for_combo(LossCombo::PullOnly).constraint, Constraint::Pull);
    }

    #[test]
    fn normal_scale_at_default() {
        let s = FilterConfig::default().normal_scale();
        assert!((s - (1.0 - 15f64.to_radians().cos())).abs() < 1e-15);
    }
}
