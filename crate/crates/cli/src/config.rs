//! Flat `key = value` configuration files.
//!
//! ```text
//! # comments run to the end of the line
//! [bath]
//! alpha = 0.035      # dimensionless coupling 4κ²γ/ω₀³ (or `kappa`, energy)
//! omega0 = 10        # oscillator frequency ω₀ (energy)
//! gamma = 1          # damping γ (energy)
//! beta = 0.1         # inverse temperature β (1/energy)
//!
//! [system]
//! epsilon0 = 1       # static bias ε₀ (energy)
//! tunneling = 0.3    # tunneling V (energy), default 0.3
//!
//! [noise]            # optional, absent means Ω = 0
//! nu = 1.5707963     # switching rate ν (energy), > 0
//! omega = 3.1415926  # amplitude Ω (energy), or `K` = Ω/ν (dimensionless)
//!
//! [solver]
//! horizon = 20       # T (1/energy), default 20
//! step = 0.01        # h (1/energy), default 0.01, must divide T
//! methods = nz, tcl  # default both
//! averaging = exact  # or monte_carlo
//! trajectories = 1000
//! seed = 0
//!
//! [output]
//! quantities = trace, blp, tau_d
//!
//! [sweep]            # turns the file into a sweep
//! axis1 = alpha
//! axis1_min = 0.0035
//! axis1_max = 0.35
//! axis1_count = 20
//! axis1_scale = log  # or linear (default)
//! axis2 = beta
//! ...
//! quantity = N_tcl   # N_nz, N_tcl or tau_d
//! ```
//!
//! Units are those of ε₀ with ħ = k_B = 1. Every key may appear once.

use crate::CliError;
use polaron_nm::{Averaging, BathParams64, Error, Method, NoiseParams64, SolverConfig64, SystemParams64};
use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

pub const DEFAULT_TUNNELING: f64 = 0.3;
pub const DEFAULT_HORIZON: f64 = 20.0;
pub const DEFAULT_STEP: f64 = 0.01;
pub const DEFAULT_TRAJECTORIES: usize = 1000;
pub const DEFAULT_SWEEP_COUNT: usize = 20;

const SECTIONS: &[(&str, &[&str])] = &[
    ("bath", &["alpha", "kappa", "omega0", "gamma", "beta"]),
    ("system", &["epsilon0", "tunneling"]),
    ("noise", &["nu", "omega", "K"]),
    ("solver", &["horizon", "step", "methods", "averaging", "trajectories", "seed"]),
    ("output", &["quantities"]),
    (
        "sweep",
        &[
            "axis1", "axis1_min", "axis1_max", "axis1_count", "axis1_scale", "axis2", "axis2_min", "axis2_max",
            "axis2_count", "axis2_scale", "quantity",
        ],
    ),
];

/// Parameters a sweep axis may vary.
pub const SWEEPABLE: &[&str] = &["alpha", "kappa", "omega0", "gamma", "beta", "epsilon0", "tunneling", "nu", "omega", "K"];

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    value: String,
    line: usize,
}

/// Raw entries keyed by bare key name, which is unique across sections.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, Entry>,
    sections: BTreeMap<String, usize>,
}

fn config_error(line: usize, msg: impl Into<String>) -> CliError {
    CliError::Config { line, msg: msg.into() }
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut raw = RawConfig::default();
        let mut section: Option<(&str, &[&str])> = None;
        for (idx, full) in text.lines().enumerate() {
            let line = idx + 1;
            let body = full.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            if let Some(name) = body.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| config_error(line, format!("malformed section header `{body}`")))?
                    .trim();
                let found = SECTIONS
                    .iter()
                    .find(|(s, _)| *s == name)
                    .ok_or_else(|| config_error(line, format!("unknown section [{name}]")))?;
                if let Some(prev) = raw.sections.insert(name.to_string(), line) {
                    return Err(config_error(line, format!("section [{name}] repeated (first on line {prev})")));
                }
                section = Some(*found);
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| config_error(line, format!("expected `key = value`, got `{body}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let (sname, keys) = section.ok_or_else(|| config_error(line, format!("key `{key}` outside any section")))?;
            if !keys.contains(&key) {
                return Err(config_error(line, format!("unknown key `{key}` in [{sname}]")));
            }
            if value.is_empty() {
                return Err(config_error(line, format!("key `{key}` has no value")));
            }
            let entry = Entry {
                value: value.to_string(),
                line,
            };
            if let Some(prev) = raw.entries.insert(key.to_string(), entry) {
                return Err(config_error(line, format!("duplicate key `{key}` (first on line {})", prev.line)));
            }
        }
        Ok(raw)
    }

    fn line_of(&self, key: &str) -> usize {
        self.entries.get(key).map_or(0, |e| e.line)
    }

    fn section_line(&self, section: &str) -> usize {
        self.sections.get(section).copied().unwrap_or(0)
    }

    fn has(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    fn missing(&self, section: &str, key: &str) -> CliError {
        match self.sections.get(section) {
            Some(&line) => config_error(line, format!("missing key `{key}` in [{section}]")),
            None => config_error(0, format!("missing section [{section}] (needs `{key}`)")),
        }
    }

    fn number(&self, key: &str) -> Result<Option<f64>, CliError> {
        let Some(e) = self.entries.get(key) else { return Ok(None) };
        let v: f64 = e
            .value
            .parse()
            .map_err(|_| config_error(e.line, format!("`{key}` is not a number: `{}`", e.value)))?;
        if !v.is_finite() {
            return Err(config_error(e.line, format!("`{key}` must be finite")));
        }
        Ok(Some(v))
    }

    fn required(&self, section: &str, key: &str) -> Result<f64, CliError> {
        self.number(key)?.ok_or_else(|| self.missing(section, key))
    }

    fn integer(&self, key: &str) -> Result<Option<u64>, CliError> {
        let Some(e) = self.entries.get(key) else { return Ok(None) };
        e.value
            .parse()
            .map(Some)
            .map_err(|_| config_error(e.line, format!("`{key}` must be a non-negative integer, got `{}`", e.value)))
    }

    fn text(&self, key: &str) -> Option<(&str, usize)> {
        self.entries.get(key).map(|e| (e.value.as_str(), e.line))
    }

    /// Replaces or inserts a numeric value (used for sweep cells).
    pub fn with_value(&self, key: &str, value: f64) -> Self {
        let mut out = self.clone();
        let line = self.line_of(key);
        out.entries.insert(key.to_string(), Entry { value: format!("{value}"), line });
        out
    }

    /// Maps a parameter error from the core to the line of the offending key.
    fn physics(&self, err: Error) -> CliError {
        match &err {
            Error::InvalidParameter { name, .. } => config_error(self.line_of(name), err.to_string()),
            _ => config_error(0, err.to_string()),
        }
    }

    fn exclusive(&self, a: &str, b: &str) -> Result<(), CliError> {
        if self.has(a) && self.has(b) {
            return Err(config_error(
                self.line_of(b).max(self.line_of(a)),
                format!("`{a}` and `{b}` over-determine the same parameter, give exactly one"),
            ));
        }
        Ok(())
    }

    pub fn run_config(&self) -> Result<RunConfig, CliError> {
        self.exclusive("alpha", "kappa")?;
        let omega0 = self.required("bath", "omega0")?;
        let gamma = self.required("bath", "gamma")?;
        let beta = self.required("bath", "beta")?;
        let bath = match (self.number("alpha")?, self.number("kappa")?) {
            (Some(a), None) => BathParams64::from_alpha(a, omega0, gamma, beta),
            (None, Some(k)) => BathParams64::new(k, omega0, gamma, beta),
            _ => return Err(self.missing("bath", "alpha` or `kappa")),
        }
        .map_err(|e| self.physics(e))?;

        let epsilon0 = self.required("system", "epsilon0")?;
        let tunneling = self.number("tunneling")?.unwrap_or(DEFAULT_TUNNELING);
        let sys = SystemParams64::new(epsilon0, tunneling).map_err(|e| self.physics(e))?;

        let noise = if ["nu", "omega", "K"].iter().any(|k| self.has(k)) || self.sections.contains_key("noise") {
            self.exclusive("omega", "K")?;
            let nu = self.required("noise", "nu")?;
            let noise = match (self.number("omega")?, self.number("K")?) {
                (Some(w), None) => NoiseParams64::new(w, nu),
                (None, Some(k)) => NoiseParams64::from_color(k, nu),
                _ => return Err(self.missing("noise", "omega` or `K")),
            };
            Some(noise.map_err(|e| self.physics(e))?)
        } else {
            None
        };

        let horizon = self.number("horizon")?.unwrap_or(DEFAULT_HORIZON);
        let step = self.number("step")?.unwrap_or(DEFAULT_STEP);
        let methods = match self.text("methods") {
            None => vec![Method::Nz, Method::Tcl],
            Some((list, line)) => parse_list(list, line, "methods", |s| match s.to_ascii_lowercase().as_str() {
                "nz" => Some(Method::Nz),
                "tcl" => Some(Method::Tcl),
                _ => None,
            })?,
        };
        let averaging = match self.text("averaging") {
            None | Some(("exact", _)) => {
                for k in ["trajectories", "seed"] {
                    if self.has(k) {
                        return Err(config_error(self.line_of(k), format!("`{k}` needs `averaging = monte_carlo`")));
                    }
                }
                Averaging::Exact
            }
            Some(("monte_carlo", _)) => Averaging::MonteCarlo {
                trajectories: self.integer("trajectories")?.map_or(DEFAULT_TRAJECTORIES, |n| n as usize),
                seed: self.integer("seed")?.unwrap_or(0),
            },
            Some((other, line)) => {
                return Err(config_error(line, format!("averaging must be `exact` or `monte_carlo`, got `{other}`")))
            }
        };
        let solver = SolverConfig64::new(horizon, step, methods[0], averaging).map_err(|e| self.physics(e))?;

        let outputs = match self.text("quantities") {
            None => vec![Output::Trace, Output::Blp, Output::TauD],
            Some((list, line)) => parse_list(list, line, "quantities", |s| match s {
                "trace" => Some(Output::Trace),
                "blp" => Some(Output::Blp),
                "tau_d" => Some(Output::TauD),
                _ => None,
            })?,
        };
        Ok(RunConfig {
            bath,
            sys,
            noise,
            solver,
            methods,
            outputs,
        })
    }

    fn axis(&self, n: u8) -> Result<Axis, CliError> {
        let key = |s: &str| format!("axis{n}{s}");
        let name_key = key("");
        let (name, line) = self.text(&name_key).ok_or_else(|| self.missing("sweep", &name_key))?;
        let name = SWEEPABLE
            .iter()
            .find(|&&p| p == name)
            .ok_or_else(|| config_error(line, format!("cannot sweep `{name}`, expected one of {}", SWEEPABLE.join(", "))))?;
        if self.has(name) {
            return Err(config_error(
                self.line_of(name),
                format!("`{name}` is swept by {name_key} (line {line}) and also fixed"),
            ));
        }
        let min = self.required("sweep", &key("_min"))?;
        let max = self.required("sweep", &key("_max"))?;
        let count = self.integer(&key("_count"))?.map_or(DEFAULT_SWEEP_COUNT, |c| c as usize);
        if count < 2 {
            return Err(config_error(self.line_of(&key("_count")), format!("{} must be >= 2", key("_count"))));
        }
        let scale = match self.text(&key("_scale")) {
            None | Some(("linear", _)) => Scale::Linear,
            Some(("log", l)) => {
                if !(min > 0.0 && max > 0.0) {
                    return Err(config_error(l, "log scale needs positive bounds"));
                }
                Scale::Log
            }
            Some((other, l)) => return Err(config_error(l, format!("scale must be `linear` or `log`, got `{other}`"))),
        };
        Ok(Axis {
            name,
            min,
            max,
            count,
            scale,
        })
    }

    pub fn sweep_config(&self) -> Result<SweepConfig, CliError> {
        let axes = [self.axis(1)?, self.axis(2)?];
        if axes[0].name == axes[1].name {
            return Err(config_error(self.line_of("axis2"), "axis1 and axis2 name the same parameter"));
        }
        let quantity = match self.text("quantity") {
            None => return Err(self.missing("sweep", "quantity")),
            Some(("N_nz", _)) => Quantity::BlpNz,
            Some(("N_tcl", _)) => Quantity::BlpTcl,
            Some(("tau_d", _)) => Quantity::TauD,
            Some((other, l)) => {
                return Err(config_error(l, format!("quantity must be N_nz, N_tcl or tau_d, got `{other}`")))
            }
        };
        let template = self.clone();
        let cfg = SweepConfig { axes, quantity, template };
        // Fail early on the corners; interior cells can still fail later.
        for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            let pick = |a: &Axis, k: usize| if k == 0 { a.min } else { a.max };
            cfg.cell_config(pick(&cfg.axes[0], i), pick(&cfg.axes[1], j))?;
        }
        Ok(cfg)
    }

    pub fn is_sweep(&self) -> bool {
        self.sections.contains_key("sweep")
    }

    pub fn sweep_line(&self) -> usize {
        self.section_line("sweep")
    }
}

fn parse_list<V: PartialEq>(
    list: &str,
    line: usize,
    key: &str,
    item: impl Fn(&str) -> Option<V>,
) -> Result<Vec<V>, CliError> {
    let mut out = Vec::new();
    for s in list.split(',').map(str::trim) {
        let v = item(s).ok_or_else(|| config_error(line, format!("unknown entry `{s}` in `{key}`")))?;
        if out.contains(&v) {
            return Err(config_error(line, format!("`{s}` listed twice in `{key}`")));
        }
        out.push(v);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Output {
    Trace,
    Blp,
    TauD,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub bath: BathParams64,
    pub sys: SystemParams64,
    /// `None` when the file has no noise block (Ω = 0).
    pub noise: Option<NoiseParams64>,
    pub solver: SolverConfig64,
    pub methods: Vec<Method>,
    pub outputs: Vec<Output>,
}

impl RunConfig {
    pub fn noise_or_silent(&self) -> NoiseParams64 {
        self.noise.unwrap_or_else(NoiseParams64::silent)
    }

    pub fn wants(&self, o: Output) -> bool {
        self.outputs.contains(&o)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub name: &'static str,
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub scale: Scale,
}

impl Axis {
    pub fn value(&self, k: usize) -> f64 {
        if k + 1 == self.count {
            return self.max;
        }
        let s = k as f64 / (self.count - 1) as f64;
        match self.scale {
            Scale::Linear => self.min + s * (self.max - self.min),
            Scale::Log => (self.min.ln() + s * (self.max.ln() - self.min.ln())).exp(),
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.count).map(|k| self.value(k)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    BlpNz,
    BlpTcl,
    TauD,
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Quantity::BlpNz => "N_nz",
            Quantity::BlpTcl => "N_tcl",
            Quantity::TauD => "log10_tau_d",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub axes: [Axis; 2],
    pub quantity: Quantity,
    template: RawConfig,
}

impl SweepConfig {
    pub fn cell_config(&self, v1: f64, v2: f64) -> Result<RunConfig, CliError> {
        self.template
            .with_value(self.axes[0].name, v1)
            .with_value(self.axes[1].name, v2)
            .run_config()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Config {
    Run(RunConfig),
    Sweep(SweepConfig),
}

pub fn parse_config_str(text: &str) -> Result<Config, CliError> {
    let raw = RawConfig::parse(text)?;
    if raw.is_sweep() {
        raw.sweep_config().map(Config::Sweep)
    } else {
        raw.run_config().map(Config::Run)
    }
}

pub fn parse_config(path: &Path) -> Result<Config, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_error(0, format!("cannot read {}: {e}", path.display())))?;
    parse_config_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[bath]\nalpha = 0.035\nomega0 = 10\ngamma = 1\nbeta = 0.1\n[system]\nepsilon0 = 1\n";

    fn run(text: &str) -> Result<RunConfig, CliError> {
        match parse_config_str(text)? {
            Config::Run(r) => Ok(r),
            Config::Sweep(_) => panic!("expected a run config"),
        }
    }

    fn err_line(text: &str) -> (usize, String) {
        match run(text) {
            Err(CliError::Config { line, msg }) => (line, msg),
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_config_has_no_noise() {
        let r = run(MINIMAL).unwrap();
        assert!(r.noise.is_none());
        assert_eq!(r.sys.tunneling(), DEFAULT_TUNNELING);
        assert_eq!(r.solver.horizon(), DEFAULT_HORIZON);
        assert_eq!(r.methods, vec![Method::Nz, Method::Tcl]);
        assert!((r.bath.alpha() - 0.035).abs() < 1e-15);
    }

    #[test]
    fn comments_and_whitespace() {
        let text = format!("# header\n\n{MINIMAL}  [noise]   # trailing\n  nu=2 # rate\nK = 1.5\n");
        let r = run(&text).unwrap();
        let n = r.noise.unwrap();
        assert_eq!(n.nu(), 2.0);
        assert_eq!(n.omega_amp(), 3.0);
    }

    #[test]
    fn zero_rate_is_rejected_at_its_line() {
        let (line, msg) = err_line(&format!("{MINIMAL}[noise]\nnu = 0\nomega = 1\n"));
        assert_eq!(line, 9);
        assert!(msg.contains("nu") && msg.contains("> 0"), "{msg}");
    }

    #[test]
    fn over_determined_noise_is_rejected() {
        let (line, msg) = err_line(&format!("{MINIMAL}[noise]\nnu = 1\nomega = 2\nK = 3\n"));
        assert_eq!(line, 11);
        assert!(msg.contains("over-determine"));
        let (_, msg) = err_line(&MINIMAL.replace("beta = 0.1\n", "beta = 0.1\nkappa = 1\n"));
        assert!(msg.contains("over-determine"), "{msg}");
    }

    #[test]
    fn unknown_duplicate_and_missing_keys() {
        let (line, msg) = err_line(&format!("{MINIMAL}bogus = 1\n"));
        assert_eq!(line, 8);
        assert!(msg.contains("bogus"));
        let (line, msg) = err_line(&format!("{MINIMAL}epsilon0 = 2\n"));
        assert_eq!(line, 8);
        assert!(msg.contains("duplicate") && msg.contains("line 7"));
        let (line, msg) = err_line(&MINIMAL.replace("gamma = 1\n", ""));
        assert_eq!(line, 1);
        assert!(msg.contains("gamma"));
        let (_, msg) = err_line("[bath]\nalpha = 1\nomega0 = 1\ngamma = 1\nbeta = 1\n");
        assert!(msg.contains("[system]"));
        let (line, _) = err_line("alpha = 1\n");
        assert_eq!(line, 1);
        let (line, msg) = err_line(&format!("{MINIMAL}[plot]\n"));
        assert_eq!(line, 8);
        assert!(msg.contains("plot"));
    }

    #[test]
    fn solver_keys() {
        let r = run(&format!(
            "{MINIMAL}[solver]\nhorizon = 5\nstep = 0.05\nmethods = tcl\naveraging = monte_carlo\ntrajectories = 200\nseed = 7\n"
        ))
        .unwrap();
        assert_eq!(r.methods, vec![Method::Tcl]);
        assert_eq!(r.solver.steps(), 100);
        assert_eq!(r.solver.averaging, Averaging::MonteCarlo { trajectories: 200, seed: 7 });
        let (line, _) = err_line(&format!("{MINIMAL}[solver]\nhorizon = 1\nstep = 0.3\n"));
        assert_eq!(line, 10);
        let (line, _) = err_line(&format!("{MINIMAL}[solver]\nseed = 3\n"));
        assert_eq!(line, 9);
        let (_, msg) = err_line(&format!("{MINIMAL}[solver]\nmethods = nz, nz\n"));
        assert!(msg.contains("twice"));
    }

    #[test]
    fn sweep_axes() {
        let text = format!(
            "{}[sweep]\naxis1 = alpha\naxis1_min = 0.01\naxis1_max = 1\naxis1_count = 3\naxis1_scale = log\naxis2 = K\naxis2_min = 0\naxis2_max = 2\naxis2_count = 5\nquantity = N_tcl\n[noise]\nnu = 1\n",
            MINIMAL.replace("alpha = 0.035\n", "")
        );
        let Config::Sweep(s) = parse_config_str(&text).unwrap() else { panic!() };
        let a = s.axes[0].values();
        assert!((a[1] - 0.1).abs() < 1e-15 && a[2] == 1.0);
        assert_eq!(s.axes[1].values(), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        let cell = s.cell_config(0.1, 1.5).unwrap();
        assert_eq!(cell.noise.unwrap().omega_amp(), 1.5);

        let fixed_too = text.replace("[sweep]", "alpha = 0.1\n[sweep]");
        assert!(matches!(parse_config_str(&fixed_too), Err(CliError::Config { .. })));
        let neg_log = text.replace("axis1_min = 0.01", "axis1_min = -1");
        assert!(matches!(parse_config_str(&neg_log), Err(CliError::Config { .. })));
        let conflicting = text.replace("nu = 1\n", "nu = 1\nomega = 2\n");
        assert!(matches!(parse_config_str(&conflicting), Err(CliError::Config { .. })));
    }
}
