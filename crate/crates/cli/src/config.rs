//! Experiment configuration: a TOML file of sections `grid`, `profile`,
//! `spectrum`, `flow`, `shoot` and `io`. Every key is optional; unknown
//! sections or keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub grid: GridSection,
    pub profile: ProfileSection,
    pub spectrum: SpectrumSection,
    pub flow: FlowSection,
    pub shoot: ShootSection,
    pub io: IoSection,
}

/// Grid parameters. Missing values fall back to defaults that depend on the
/// profile index: 4001 uniform nodes for `n = 0`, 6001 nodes with stretch 2
/// otherwise, `r_max = 30` in both cases.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub n: Option<usize>,
    pub r_max: Option<f64>,
    pub stretch: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProfileSection {
    pub n_index: usize,
    /// Bracket on the center value; defaults to (0.5, 2) for `n = 0` and
    /// (100, 1000) for `n = 1`, none for higher `n`.
    pub bracket: Option<[f64; 2]>,
    pub tol: f64,
    /// Use the closed form for `n = 0` instead of shooting.
    pub closed_form: bool,
}

impl Default for ProfileSection {
    fn default() -> Self {
        Self { n_index: 0, bracket: None, tol: 1e-10, closed_form: true }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumSection {
    pub k: usize,
    /// Two-grid Richardson extrapolation of the eigenvalues.
    pub refine: bool,
    /// Recompute the nonpositive eigenvalues with `r_max` doubled and report the shift.
    pub r_max_double_check: bool,
    /// Random projected fields in the gap check; 0 disables it.
    pub gap_trials: usize,
    pub tail_window: [f64; 2],
}

impl Default for SpectrumSection {
    fn default() -> Self {
        Self { k: 4, refine: true, r_max_double_check: false, gap_trials: 100, tail_window: [8.0, 16.0] }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowSection {
    /// Must equal `profile.n_index` when given.
    pub n_index: Option<usize>,
    pub s0: f64,
    pub ds: f64,
    pub mu: f64,
    pub s_end: f64,
    pub perturbation: PerturbationSection,
    /// Initial unstable coefficients `a_2, ...`; zeros when empty.
    pub a: Vec<f64>,
    pub thresholds: ThresholdSection,
    pub record_every: usize,
    pub max_halvings: u32,
    /// Points `x` where `u(t, x)` is sampled for the limit profile.
    pub ustar_points: Vec<f64>,
}

impl Default for FlowSection {
    fn default() -> Self {
        let p = kslab_core::FlowParams::default();
        Self {
            n_index: None,
            s0: p.s0,
            ds: p.ds,
            mu: p.mu,
            s_end: p.s_end,
            perturbation: PerturbationSection::default(),
            a: Vec::new(),
            thresholds: ThresholdSection::default(),
            record_every: p.record_every,
            max_halvings: p.max_halvings,
            ustar_points: Vec::new(),
        }
    }
}

/// `v0(y) = amplitude * exp(-y^2 / width^2)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PerturbationSection {
    pub amplitude: f64,
    pub width: f64,
}

impl Default for PerturbationSection {
    fn default() -> Self {
        Self { amplitude: 1e-2, width: 1.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThresholdSection {
    pub k_l2: f64,
    pub k_inf: f64,
    pub k_grad: f64,
    pub delta: f64,
    pub tube: f64,
    pub ustar_radius: f64,
}

impl Default for ThresholdSection {
    fn default() -> Self {
        let p = kslab_core::FlowParams::default();
        Self { k_l2: p.k_l2, k_inf: p.k_inf, k_grad: p.k_grad, delta: p.delta, tube: p.tube, ustar_radius: p.ustar_radius }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShootSection {
    pub bracket: [f64; 2],
    pub bisect_tol: f64,
    /// Amplitude of the fixed even part of the data, with the flow width.
    pub base_amplitude: f64,
}

impl Default for ShootSection {
    fn default() -> Self {
        Self { bracket: [-1e-3, 1e-3], bisect_tol: 1e-8, base_amplitude: 0.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IoSection {
    pub out_dir: PathBuf,
    /// Defaults to `<out_dir>/cache`.
    pub cache_dir: Option<PathBuf>,
    pub overwrite: bool,
    /// When false, missing cached inputs are an error instead of being computed.
    pub compute: bool,
}

impl Default for IoSection {
    fn default() -> Self {
        Self { out_dir: PathBuf::from("out"), cache_dir: None, overwrite: true, compute: true }
    }
}

/// Grid actually used, after defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridChoice {
    pub nodes: usize,
    pub r_max: f64,
    pub stretch: f64,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn grid_choice(&self) -> GridChoice {
        let excited = self.profile.n_index > 0;
        GridChoice {
            nodes: self.grid.n.unwrap_or(if excited { 6001 } else { 4001 }),
            r_max: self.grid.r_max.unwrap_or(30.0),
            stretch: self.grid.stretch.unwrap_or(if excited { 2.0 } else { 1.0 }),
        }
    }

    pub fn profile_bracket(&self) -> Option<(f64, f64)> {
        match (self.profile.bracket, self.profile.n_index) {
            (Some([lo, hi]), _) => Some((lo, hi)),
            (None, 0) => Some((0.5, 2.0)),
            (None, 1) => Some((100.0, 1000.0)),
            _ => None,
        }
    }

    pub fn uses_closed_form(&self) -> bool {
        self.profile.n_index == 0 && self.profile.closed_form
    }

    pub fn flow_params(&self) -> kslab_core::FlowParams {
        let f = &self.flow;
        let t = &f.thresholds;
        kslab_core::FlowParams {
            s0: f.s0,
            ds: f.ds,
            s_end: f.s_end,
            mu: f.mu,
            k_l2: t.k_l2,
            k_inf: t.k_inf,
            k_grad: t.k_grad,
            delta: t.delta,
            tube: t.tube,
            max_halvings: f.max_halvings,
            record_every: f.record_every,
            ustar_points: f.ustar_points.clone(),
            ustar_radius: t.ustar_radius,
        }
    }

    pub fn cache_dir(&self) -> PathBuf {
        self.io.cache_dir.clone().unwrap_or_else(|| self.io.out_dir.join("cache"))
    }

    /// Checks every numeric field before any computation starts.
    pub fn validate(&self) -> Result<(), CliError> {
        let g = self.grid_choice();
        check(g.nodes >= 11, "grid.n must be at least 11")?;
        check(g.r_max > 0.0 && g.r_max.is_finite(), "grid.r_max must be positive")?;
        check(g.stretch >= 1.0 && g.stretch.is_finite(), "grid.stretch must be at least 1")?;
        if !self.uses_closed_form() {
            let Some((lo, hi)) = self.profile_bracket() else {
                return Err(CliError::config(format!(
                    "profile.bracket is required for n_index = {}",
                    self.profile.n_index
                )));
            };
            check(lo > 0.0 && hi > lo && hi.is_finite(), "profile.bracket must satisfy 0 < lo < hi")?;
        } else if let Some([lo, hi]) = self.profile.bracket {
            check(lo > 0.0 && hi > lo && hi.is_finite(), "profile.bracket must satisfy 0 < lo < hi")?;
        }
        check(self.profile.tol > 0.0, "profile.tol must be positive")?;
        check(self.spectrum.k >= 1, "spectrum.k must be at least 1")?;
        let [w0, w1] = self.spectrum.tail_window;
        check(w0 > 0.0 && w1 > w0, "spectrum.tail_window must satisfy 0 < lo < hi")?;
        if let Some(n) = self.flow.n_index {
            check(n == self.profile.n_index, "flow.n_index must equal profile.n_index")?;
        }
        check(self.flow.perturbation.width > 0.0, "flow.perturbation.width must be positive")?;
        check(self.flow.perturbation.amplitude.is_finite(), "flow.perturbation.amplitude must be finite")?;
        check(self.flow.ustar_points.iter().all(|x| *x > 0.0), "flow.ustar_points must be positive")?;
        self.flow_params().validate().map_err(|e| CliError::config(format!("flow: {e}")))?;
        let [b0, b1] = self.shoot.bracket;
        check(b0 < b1, "shoot.bracket must be increasing")?;
        check(self.shoot.bisect_tol > 0.0, "shoot.bisect_tol must be positive")?;
        Ok(())
    }
}

fn check(ok: bool, msg: &str) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::config(msg))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_takes_defaults() {
        let c = ExperimentConfig::parse("").unwrap();
        assert_eq!(c.grid_choice(), GridChoice { nodes: 4001, r_max: 30.0, stretch: 1.0 });
        assert_eq!(c.profile_bracket(), Some((0.5, 2.0)));
        assert_eq!(c.cache_dir(), PathBuf::from("out/cache"));
    }

    #[test]
    fn excited_defaults() {
        let c = ExperimentConfig::parse("[profile]\nn_index = 1\n").unwrap();
        assert_eq!(c.grid_choice(), GridChoice { nodes: 6001, r_max: 30.0, stretch: 2.0 });
        assert_eq!(c.profile_bracket(), Some((100.0, 1000.0)));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert_eq!(ExperimentConfig::parse("[grid]\nnodes = 10\n").unwrap_err().code, 2);
        assert_eq!(ExperimentConfig::parse("[plot]\n").unwrap_err().code, 2);
        assert_eq!(ExperimentConfig::parse("[flow.thresholds]\nk = 1.0\n").unwrap_err().code, 2);
    }

    #[test]
    fn invalid_values_are_rejected() {
        for text in [
            "[profile]\nbracket = [2.0, 1.0]\n",
            "[profile]\nn_index = 2\n",
            "[spectrum]\nk = 0\n",
            "[flow]\nds = 0.0\n",
            "[flow]\ns_end = 1.0\n",
            "[shoot]\nbracket = [1e-3, -1e-3]\n",
            "[grid]\nr_max = -3.0\n",
        ] {
            assert_eq!(ExperimentConfig::parse(text).unwrap_err().code, 2, "{text}");
        }
    }

    #[test]
    fn shipped_configs_parse() {
        let ground = ExperimentConfig::parse(include_str!("../../../configs/ground.toml")).unwrap();
        assert!(ground.uses_closed_form());
        let excited = ExperimentConfig::parse(include_str!("../../../configs/excited.toml")).unwrap();
        assert_eq!(excited.profile_bracket(), Some((100.0, 1000.0)));
        assert_eq!(excited.flow.a, vec![1e-3]);
    }
}
