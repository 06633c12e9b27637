//! Command-line surface. Scenario flags override the loaded config field by field.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use cornerflow::EosFamily;

use crate::config::{ScenarioConfig, Target};
use crate::error::CliError;
use crate::export::Format;
use crate::presets;

#[derive(Debug, Parser)]
#[command(name = "cornerflow", version, about = "Characteristic solver for gas expanding around a sharp corner into vacuum")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate p, c, m, m', delta-bar, psi and chi over the fan.
    AnalyzeEos(ScenarioArgs),
    /// Evaluate the hypothesis window only; exits 3 when it fails.
    CheckHypothesis(ScenarioArgs),
    /// Solve, audit and write every configured export.
    Solve(ScenarioArgs),
    /// Grid-refinement study and commutator checks.
    Validate(ScenarioArgs),
    /// Solve and write selected targets in a chosen format.
    Export {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_enum, value_delimiter = ',', required = true)]
        what: Vec<Target>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// List presets, or print one with --dump.
    Preset {
        name: Option<String>,
        #[arg(long)]
        dump: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EosName {
    Polytropic,
    TwoConstant,
    ShallowWater,
    Magneto,
    Vdw,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ScenarioArgs {
    /// Scenario file (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Named preset used as the base config.
    #[arg(long)]
    pub preset: Option<String>,
    /// EOS family; without --config or --preset the family's preset is the base.
    #[arg(long, value_enum)]
    pub eos: Option<EosName>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub g: Option<f64>,
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long)]
    pub a1: Option<f64>,
    #[arg(long)]
    pub b1: Option<f64>,
    #[arg(long)]
    pub gamma1: Option<f64>,
    #[arg(long)]
    pub gamma2: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub kappa0: Option<f64>,
    #[arg(long = "S1")]
    pub s1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub u0: Option<f64>,
    #[arg(long)]
    pub u0_over_c0: Option<f64>,
    #[arg(long)]
    pub tau0: Option<f64>,
    /// Wall inclination in radians, in (-pi/2, 0).
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub grid_n: Option<usize>,
    #[arg(long)]
    pub c_vac: Option<f64>,
    #[arg(long)]
    pub rho_vac: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub phi_tol: Option<f64>,
    #[arg(long)]
    pub eps1: Option<f64>,
    #[arg(long)]
    pub eps2: Option<f64>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output directory; overrides output.dir.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn family_preset(e: EosName) -> &'static str {
    match e {
        EosName::Polytropic | EosName::TwoConstant => "polytropic",
        EosName::ShallowWater => "dam-break",
        EosName::Magneto => "mhd",
        EosName::Vdw => "vdw",
    }
}

fn same_family(e: EosName, f: &EosFamily) -> bool {
    matches!(
        (e, f),
        (EosName::Polytropic, EosFamily::Polytropic { .. })
            | (EosName::TwoConstant, EosFamily::TwoConstant { .. })
            | (EosName::ShallowWater, EosFamily::ShallowWater { .. })
            | (EosName::Magneto, EosFamily::Magneto { .. })
            | (EosName::Vdw, EosFamily::VanDerWaals { .. })
    )
}

impl ScenarioArgs {
    /// Base config from --config, --preset or the --eos family, then flag overrides.
    pub fn resolve(&self) -> Result<ScenarioConfig, CliError> {
        let mut cfg = match (&self.config, &self.preset, self.eos) {
            (Some(_), Some(_), _) => return Err(CliError::Config("--config and --preset are exclusive".into())),
            (Some(path), None, _) => ScenarioConfig::from_path(path)?,
            (None, Some(name), _) => presets::load(name)?,
            (None, None, Some(e)) => presets::load(family_preset(e))?,
            (None, None, None) => return Err(CliError::Config("give --config, --preset or --eos".into())),
        };
        if let Some(e) = self.eos {
            if !same_family(e, &cfg.eos) {
                cfg.eos = match e {
                    // Two-power law with a polytropic-like leading term.
                    EosName::TwoConstant => EosFamily::TwoConstant { a1: 1.0, b1: 0.5, gamma1: -1.4, gamma2: -2.0 },
                    _ => presets::load(family_preset(e))?.eos,
                };
                cfg.name = "custom".into();
            }
        }
        self.apply_eos(&mut cfg.eos)?;
        self.apply_rest(&mut cfg);
        Ok(cfg)
    }

    fn apply_eos(&self, fam: &mut EosFamily) -> Result<(), CliError> {
        let mut used = Vec::new();
        let mut set = |slot: &mut f64, v: Option<f64>, name: &'static str| {
            if let Some(v) = v {
                *slot = v;
                used.push(name);
            }
        };
        match fam {
            EosFamily::Polytropic { a, gamma } => {
                set(a, self.a, "a");
                set(gamma, self.gamma, "gamma");
            }
            EosFamily::TwoConstant { a1, b1, gamma1, gamma2 } => {
                set(a1, self.a1, "a1");
                set(b1, self.b1, "b1");
                set(gamma1, self.gamma1, "gamma1");
                set(gamma2, self.gamma2, "gamma2");
            }
            EosFamily::ShallowWater { g, k } => {
                set(g, self.g, "g");
                set(k, self.k, "k");
            }
            EosFamily::Magneto { a1, gamma, mu, kappa0 } => {
                set(a1, self.a1, "a1");
                set(gamma, self.gamma, "gamma");
                set(mu, self.mu, "mu");
                set(kappa0, self.kappa0, "kappa0");
            }
            EosFamily::VanDerWaals { s1, gamma } => {
                set(s1, self.s1, "S1");
                set(gamma, self.gamma, "gamma");
            }
            EosFamily::Custom => {}
        }
        let given = [
            ("a", self.a),
            ("gamma", self.gamma),
            ("g", self.g),
            ("k", self.k),
            ("a1", self.a1),
            ("b1", self.b1),
            ("gamma1", self.gamma1),
            ("gamma2", self.gamma2),
            ("mu", self.mu),
            ("kappa0", self.kappa0),
            ("S1", self.s1),
        ];
        let stray: Vec<&str> = given.iter().filter(|(n, v)| v.is_some() && !used.contains(n)).map(|(n, _)| *n).collect();
        if stray.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(format!("--{} does not apply to this EOS family", stray.join(", --"))))
        }
    }

    fn apply_rest(&self, cfg: &mut ScenarioConfig) {
        let f = &mut cfg.flow;
        match (self.u0, self.u0_over_c0) {
            (Some(u), _) => {
                f.u0 = Some(u);
                f.u0_over_c0 = None;
            }
            (None, Some(r)) => {
                f.u0 = None;
                f.u0_over_c0 = Some(r);
            }
            _ => {}
        }
        let put = |slot: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        put(&mut f.tau0, self.tau0);
        put(&mut f.theta, self.theta);
        let g = &mut cfg.grid;
        if let Some(n) = self.grid_n {
            g.n = n;
        }
        put(&mut g.c_vac, self.c_vac);
        put(&mut g.rho_vac, self.rho_vac);
        put(&mut g.tol, self.tol);
        put(&mut g.phi_tol, self.phi_tol);
        if let Some(m) = self.max_iter {
            g.max_iter = m;
        }
        if let Some(w) = self.workers {
            g.workers = w;
        }
        if self.eps1.is_some() {
            cfg.monitor.eps1 = self.eps1;
        }
        if self.eps2.is_some() {
            cfg.monitor.eps2 = self.eps2;
        }
        if let Some(out) = &self.out {
            cfg.output.dir = out.to_string_lossy().into_owned();
        }
    }
}

pub fn out_dir(cfg: &ScenarioConfig) -> &Path {
    Path::new(&cfg.output.dir)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> ScenarioArgs {
        let cli = Cli::try_parse_from(std::iter::once("cornerflow").chain(args.iter().copied())).unwrap();
        match cli.command {
            Command::CheckHypothesis(s) => s,
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn eos_flag_picks_family_preset_and_parameters() {
        let cfg = parse(&["check-hypothesis", "--eos", "vdw", "--S1", "0.28", "--gamma", "0.05"]).resolve().unwrap();
        assert_eq!(cfg.eos, EosFamily::VanDerWaals { s1: 0.28, gamma: 0.05 });
        assert_eq!(cfg.name, "vdw");
    }

    #[test]
    fn stray_parameter_is_rejected() {
        let err = parse(&["check-hypothesis", "--preset", "polytropic", "--k", "1"]).resolve().unwrap_err();
        assert!(err.to_string().contains("--k"));
    }

    #[test]
    fn switching_family_replaces_parameters() {
        let cfg = parse(&["check-hypothesis", "--preset", "dam-break", "--eos", "polytropic", "--gamma", "1.4"]).resolve().unwrap();
        assert_eq!(cfg.eos, EosFamily::Polytropic { a: 1.0, gamma: 1.4 });
        assert_eq!(cfg.flow.u0_over_c0, Some(3.0));
    }

    #[test]
    fn speed_flags_replace_each_other() {
        let cfg = parse(&["check-hypothesis", "--preset", "polytropic", "--u0", "5", "--theta", "-0.5"]).resolve().unwrap();
        assert_eq!((cfg.flow.u0, cfg.flow.u0_over_c0, cfg.flow.theta), (Some(5.0), None, -0.5));
    }
}
