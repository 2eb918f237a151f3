//! Command-line front end.
//!
//! Exit codes: 0 success, 1 a reported check failed, 2 usage error,
//! 3 physics error (singular or off-shell kinematics and the like).

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::amplitude::{elastic_kinematics, gordon_check, tree_amplitude};
use crate::dirac::{u_labeled, u_rest, FourVector, GammaBasis, SpinLabel};
use crate::dynamics::{coupling_j, definite_state, epr_state, evolve, evolve_spin};
use crate::entanglement::{
    analyze, analyze_transformed, default_grid, invariance_scan, negative_control_scan, scaled_isometry_deviation,
    transform_grid, ScanRow, DEFAULT_ANGLES, DEFAULT_RAPIDITIES, DEFAULT_SCAN_TOL,
};
use crate::error::Error;
use crate::lorentz::{compose, transform_spinor, Axis, LorentzTransform};
use crate::reduction::{
    curl_form_check, dipole_momentum_kernel, effective_spin_potential, extract_spin_potential, ExtractionTemplate,
    SPIN_PAIRS,
};
use crate::tensor::{eigh, C64};

pub const CONFIG_ENV: &str = "SPINOR_EPR_CONFIG";
pub const DEFAULT_ALPHA: f64 = 1.0 / 137.035999;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PHYSICS: i32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Pretty,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum StateKind {
    Epr,
    Product,
}

#[derive(Debug, Parser)]
#[command(name = "spinor-epr", version, about = "Spin entanglement from one-photon exchange and its Lorentz invariance")]
pub struct Cli {
    /// Fine-structure constant.
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Particle mass (natural units).
    #[arg(long, global = true)]
    pub mass: Option<f64>,
    /// Separation between the two particles.
    #[arg(long, global = true)]
    pub r: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Seed for randomized transforms and checks.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// key = value config file; overrides SPINOR_EPR_CONFIG.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evolve |↓↑⟩ under the exchange potential.
    Evolve {
        /// The product 2Jt. J is negative, so positive values mean t < 0;
        /// the amplitudes on (|↓↑⟩, |↑↓⟩) are (cos jt, −i sin jt).
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        jt: f64,
    },
    /// Boost a rest-frame two-particle state and report its entanglement.
    Boost {
        #[arg(long, default_value = "x")]
        axis: Axis,
        #[arg(long, conflicts_with = "beta", allow_negative_numbers = true)]
        rapidity: Option<f64>,
        /// Velocity in units of c, |beta| < 1.
        #[arg(long, allow_negative_numbers = true)]
        beta: Option<f64>,
        #[arg(long, value_enum, default_value = "epr")]
        state: StateKind,
    },
    /// Tree-level amplitude for elastic scattering in the centre-of-momentum frame.
    Amplitude {
        /// Momentum magnitude of each particle.
        #[arg(long, default_value_t = 0.1)]
        pmag: f64,
        /// Scattering angle in radians.
        #[arg(long, default_value_t = FRAC_PI_2, allow_negative_numbers = true)]
        angle: f64,
        /// Incoming spins as two of u/d, e.g. "ud".
        #[arg(long, default_value = "ud", value_parser = parse_spins)]
        spins_in: [SpinLabel; 2],
        #[arg(long, default_value = "du", value_parser = parse_spins)]
        spins_out: [SpinLabel; 2],
        /// Compare the extracted spin potential with the dipole kernel at
        /// near-backscatter kinematics with |p| = pmag.
        #[arg(long)]
        nr_check: bool,
    },
    /// Entanglement of the EPR state over a grid of Lorentz transforms.
    InvarianceScan {
        #[arg(long, value_delimiter = ',', default_value = "x,y,z")]
        axes: Vec<Axis>,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_RAPIDITIES.to_vec())]
        rapidities: Vec<f64>,
        /// Rotation angles in radians.
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_ANGLES.to_vec())]
        angles: Vec<f64>,
        /// Extra random boost-rotation composites drawn from the seed.
        #[arg(long, default_value_t = 4)]
        random: usize,
        #[arg(long, default_value_t = DEFAULT_SCAN_TOL)]
        tol: f64,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Add rows for a deliberately non-Lorentz local map; they never
        /// affect the exit code.
        #[arg(long)]
        include_negative_control: bool,
    },
    /// Run the built-in property checks.
    Selftest,
}

fn parse_spins(s: &str) -> Result<[SpinLabel; 2], String> {
    let labels: Vec<SpinLabel> = s.chars().filter_map(SpinLabel::from_symbol).collect();
    if labels.len() != 2 || s.chars().count() != 2 {
        return Err(format!("expected two of u/d, got '{s}'"));
    }
    Ok([labels[0], labels[1]])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub alpha: f64,
    pub mass: f64,
    pub r: f64,
    #[serde(skip)]
    pub format: Format,
    #[serde(skip)]
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            mass: 1.0,
            r: 1.0,
            format: Format::Pretty,
            seed: 0,
        }
    }
}

impl RunConfig {
    /// `e = √(4πα)`.
    pub fn coupling_e(&self) -> f64 {
        (4.0 * PI * self.alpha).sqrt()
    }

    fn apply_file(&mut self, text: &str, origin: &Path) -> Result<(), String> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("{}:{}: expected key = value", origin.display(), n + 1))?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str| format!("{}:{}: invalid {what} '{value}'", origin.display(), n + 1);
            match key {
                "alpha" => self.alpha = value.parse().map_err(|_| bad("alpha"))?,
                "mass" => self.mass = value.parse().map_err(|_| bad("mass"))?,
                "r" => self.r = value.parse().map_err(|_| bad("r"))?,
                "seed" => self.seed = value.parse().map_err(|_| bad("seed"))?,
                "format" => self.format = Format::from_str(value, true).map_err(|_| bad("format"))?,
                other => return Err(format!("{}:{}: unknown key '{other}'", origin.display(), n + 1)),
            }
        }
        Ok(())
    }

    /// Flags over config file over defaults.
    pub fn resolve(cli: &Cli, env_path: Option<PathBuf>) -> Result<Self, String> {
        let mut cfg = Self::default();
        if let Some(path) = cli.config.clone().or(env_path) {
            let text = std::fs::read_to_string(&path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            cfg.apply_file(&text, &path)?;
        }
        if let Some(a) = cli.alpha {
            cfg.alpha = a;
        }
        if let Some(m) = cli.mass {
            cfg.mass = m;
        }
        if let Some(r) = cli.r {
            cfg.r = r;
        }
        if let Some(f) = cli.format {
            cfg.format = f;
        }
        if let Some(s) = cli.seed {
            cfg.seed = s;
        }
        for (name, v) in [("alpha", cfg.alpha), ("mass", cfg.mass), ("r", cfg.r)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("{name} must be positive, got {v}"));
            }
        }
        Ok(cfg)
    }
}

/// A named pass/fail comparison. `paper_ref` holds a short topic tag.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub paper_ref: String,
    pub pass: bool,
    pub deviation: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn at_most(name: &str, topic: &str, deviation: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            paper_ref: topic.to_string(),
            pass: deviation <= tolerance,
            deviation,
            tolerance,
        }
    }

    /// Passes when `deviation` lies in `[lo, hi]`; `tolerance` records `hi − lo`.
    pub fn within(name: &str, topic: &str, value: f64, lo: f64, hi: f64) -> Self {
        Self {
            name: name.to_string(),
            paper_ref: topic.to_string(),
            pass: (lo..=hi).contains(&value),
            deviation: value,
            tolerance: hi - lo,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub command: String,
    pub config: RunConfig,
    pub results: Vec<Value>,
    pub checks: Vec<Check>,
}

impl Report {
    fn new(command: &str, config: &RunConfig) -> Self {
        Self {
            command: command.to_string(),
            config: *config,
            results: Vec::new(),
            checks: Vec::new(),
        }
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Rounds to `digits` significant digits.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", digits - 1, x).parse().unwrap_or(x)
}

/// Decimal text for moderate magnitudes, scientific otherwise.
pub fn format_sig(x: f64, digits: usize) -> String {
    let a = x.abs();
    if !x.is_finite() || x == 0.0 || (1e-4..1e6).contains(&a) {
        return format!("{}", round_sig(x, digits));
    }
    let s = format!("{:.*e}", digits - 1, x);
    match s.split_once('e') {
        Some((mantissa, exp)) if mantissa.contains('.') => {
            format!("{}e{exp}", mantissa.trim_end_matches('0').trim_end_matches('.'))
        }
        _ => s,
    }
}

fn round_value(v: &mut Value, digits: usize) {
    match v {
        Value::Number(n) => {
            if n.is_f64() {
                if let Some(x) = n.as_f64() {
                    *v = json!(round_sig(x, digits));
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(|x| round_value(x, digits)),
        Value::Object(map) => map.values_mut().for_each(|x| round_value(x, digits)),
        _ => {}
    }
}

fn scalar_text(v: &Value, digits: usize) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Number(n) => match n.as_f64() {
            Some(x) if n.is_f64() => format_sig(x, digits),
            _ => n.to_string(),
        },
        Value::Array(items) => items.iter().map(|x| scalar_text(x, digits)).collect::<Vec<_>>().join(";"),
        other => other.to_string(),
    }
}

fn column_order(rows: &[Value]) -> Vec<String> {
    let mut cols: Vec<String> = Vec::new();
    for row in rows {
        if let Value::Object(map) = row {
            for k in map.keys() {
                if !cols.contains(k) {
                    cols.push(k.clone());
                }
            }
        }
    }
    cols
}

pub fn render_json(report: &Report) -> String {
    let mut v = serde_json::to_value(report).expect("report serializes");
    round_value(&mut v, 12);
    let mut s = serde_json::to_string_pretty(&v).expect("value serializes");
    s.push('\n');
    s
}

/// Results as a table; checks are left to the exit code.
pub fn render_csv(report: &Report) -> String {
    let cols = column_order(&report.results);
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(&cols).expect("in-memory write");
    for row in &report.results {
        let record: Vec<String> = cols.iter().map(|k| row.get(k).map(|v| scalar_text(v, 12)).unwrap_or_default()).collect();
        w.write_record(&record).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}

pub fn render_pretty(report: &Report) -> String {
    let mut s = String::new();
    let cfg = &report.config;
    let _ = writeln!(s, "{}  (alpha = {}, mass = {}, r = {})", report.command, format_sig(cfg.alpha, 6), format_sig(cfg.mass, 6), format_sig(cfg.r, 6));
    let cols = column_order(&report.results);
    if !cols.is_empty() {
        let width = cols.iter().map(|c| c.len()).max().unwrap_or(0);
        for (i, row) in report.results.iter().enumerate() {
            let _ = writeln!(s, "\n[{}]", i + 1);
            for k in &cols {
                if let Some(v) = row.get(k) {
                    let _ = writeln!(s, "  {k:<width$}  {}", scalar_text(v, 6));
                }
            }
        }
    }
    if !report.checks.is_empty() {
        let width = report.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
        let _ = writeln!(s, "\nchecks:");
        for c in &report.checks {
            let _ = writeln!(
                s,
                "  {}  {:<width$}  deviation {:<12}  tolerance {}",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                format_sig(c.deviation, 6),
                format_sig(c.tolerance, 6),
            );
        }
    }
    s
}

pub fn render(report: &Report, format: Format) -> String {
    match format {
        Format::Json => render_json(report),
        Format::Csv => render_csv(report),
        Format::Pretty => render_pretty(report),
    }
}

fn complex_pair(z: C64) -> Value {
    json!([z.re, z.im])
}

fn four_vector(p: FourVector) -> Value {
    json!([p.t, p.x, p.y, p.z])
}

fn spin_label(spins: [SpinLabel; 2]) -> String {
    spins.iter().map(|s| s.symbol()).collect()
}

fn cmd_evolve(cfg: &RunConfig, jt: f64) -> Result<Report, Error> {
    let coupling = coupling_j(cfg.r, cfg.mass, cfg.alpha)?;
    let j = coupling.j;
    let t = jt / (2.0 * j);
    let start = definite_state([SpinLabel::Down, SpinLabel::Up], cfg.mass)?;
    let psi = evolve(&start, j, t)?;
    let spin = psi.spin_amplitudes()?;
    let report_ent = analyze(&psi)?;
    let c_du = spin[2];
    let c_ud = spin[1];

    let mut report = Report::new("evolve", cfg);
    report.results.push(json!({
        "J": j,
        "jt": jt,
        "t": t,
        "c_du_re": c_du.re,
        "c_du_im": c_du.im,
        "c_ud_re": c_ud.re,
        "c_ud_im": c_ud.im,
        "spinor_norm": psi.norm_sqr(),
        "entropy_bits": report_ent.entropy_bits,
    }));
    let oracle_dev = (c_du - C64::new(jt.cos(), 0.0)).norm().max((c_ud - C64::new(0.0, -jt.sin())).norm());
    report.checks.push(Check::at_most("amplitudes match (cos 2Jt, -i sin 2Jt)", "exchange-evolution", oracle_dev, 1e-12));
    let target = (2.0 * cfg.mass).powi(2);
    report.checks.push(Check::at_most(
        "spinor norm equals (2m)^2",
        "spinor-normalization",
        (psi.norm_sqr() - target).abs() / target,
        1e-10,
    ));
    Ok(report)
}

fn boost_report_row(t: &LorentzTransform, beta: Option<f64>, psi: &crate::dynamics::TwoParticleState) -> Result<Value, Error> {
    let moved = crate::lorentz::transform_two_particle(t, psi);
    let ent = analyze_transformed(psi, t)?;
    let d = t.descriptor();
    Ok(json!({
        "kind": d.kind.to_string(),
        "label": d.label,
        "rapidity": d.rapidity,
        "beta": beta.unwrap_or_else(|| d.rapidity.tanh()),
        "p1": four_vector(moved.momenta[0]),
        "p2": four_vector(moved.momenta[1]),
        "amplitudes": moved.amplitudes.as_slice().iter().map(|z| complex_pair(*z)).collect::<Vec<_>>(),
        "schmidt_spectrum": ent.schmidt_spectrum,
        "spin_schmidt_spectrum": ent.spin_schmidt_spectrum,
        "concurrence": ent.concurrence,
        "entropy_bits": ent.entropy_bits,
    }))
}

fn cmd_boost(cfg: &RunConfig, axis: Axis, rapidity: Option<f64>, beta: Option<f64>, state: StateKind) -> Result<Report, Error> {
    let t = match (rapidity, beta) {
        (_, Some(b)) => LorentzTransform::boost_velocity(axis.unit(), b)?,
        (Some(eta), None) => LorentzTransform::boost(axis.unit(), eta)?,
        (None, None) => LorentzTransform::boost(axis.unit(), 0.0)?,
    };
    let psi = match state {
        StateKind::Epr => epr_state(cfg.mass)?,
        StateKind::Product => definite_state([SpinLabel::Down, SpinLabel::Up], cfg.mass)?,
    };
    let rest = analyze(&psi)?;
    let mut report = Report::new("boost", cfg);
    let row = boost_report_row(&t, beta, &psi)?;
    let entropy = row["entropy_bits"].as_f64().unwrap_or(f64::NAN);
    report.results.push(row);
    report.checks.push(Check::at_most(
        "entropy equals rest-frame entropy",
        "entanglement-invariance",
        (entropy - rest.entropy_bits).abs(),
        DEFAULT_SCAN_TOL,
    ));
    report.checks.push(Check::at_most(
        "S^dagger S proportional to identity on spin subspace",
        "scaled-isometry",
        scaled_isometry_deviation(&t, psi.momenta[0], cfg.mass)?,
        1e-10,
    ));
    Ok(report)
}

fn cmd_amplitude(
    cfg: &RunConfig,
    pmag: f64,
    angle: f64,
    spins_in: [SpinLabel; 2],
    spins_out: [SpinLabel; 2],
    nr_check: bool,
) -> Result<Report, Error> {
    let e = cfg.coupling_e();
    let k = elastic_kinematics(cfg.mass, e, pmag, angle, spins_in, spins_out)?;
    let amp = tree_amplitude(&k)?;
    let swapped = tree_amplitude(&k.with_outgoing_swapped())?;
    let mut report = Report::new("amplitude", cfg);
    report.results.push(json!({
        "row": "amplitude",
        "spins_in": spin_label(spins_in),
        "spins_out": spin_label(spins_out),
        "pmag": pmag,
        "angle": angle,
        "direct_re": amp.direct_term.re,
        "direct_im": amp.direct_term.im,
        "exchange_re": amp.exchange_term.re,
        "exchange_im": amp.exchange_term.im,
        "total_re": amp.value.re,
        "total_im": amp.value.im,
    }));
    let scale = amp.value.norm().max(f64::MIN_POSITIVE);
    report.checks.push(Check::at_most(
        "outgoing-label swap negates amplitude",
        "fermion-antisymmetry",
        (swapped.value + amp.value).norm() / scale,
        1e-10,
    ));

    if nr_check {
        let template = ExtractionTemplate::new(pmag / cfg.mass, cfg.mass, e);
        let extracted = extract_spin_potential(&template)?;
        let kernel = dipole_momentum_kernel(extracted.q, cfg.mass, e)?;
        let kmax = kernel.matrix().max_abs();
        let mut worst: f64 = 0.0;
        for out in SPIN_PAIRS {
            for inc in SPIN_PAIRS {
                let got = extracted.matrix.element(out, inc);
                let want = kernel.element(out, inc);
                let rel = (got - want).norm() / kmax;
                worst = worst.max(rel);
                report.results.push(json!({
                    "row": "nr-check",
                    "spins_in": spin_label(inc),
                    "spins_out": spin_label(out),
                    "extracted_re": got.re,
                    "extracted_im": got.im,
                    "kernel_re": want.re,
                    "kernel_im": want.im,
                    "relative_deviation": rel,
                }));
            }
        }
        report.checks.push(Check::at_most(
            "extracted spin potential matches dipole kernel",
            "dipole-kernel",
            worst,
            0.05,
        ));
    }
    Ok(report)
}

fn scan_row_value(row: &ScanRow, tol: f64) -> Value {
    let d = &row.transform;
    json!({
        "kind": d.kind.to_string(),
        "label": d.label,
        "axis": d.axis,
        "rapidity": d.rapidity,
        "angle": d.angle,
        "entropy_bits": row.entropy_bits,
        "entropy_deviation": row.entropy_deviation,
        "spectrum_deviation": row.spectrum_deviation,
        "spin_spectrum_deviation": row.spin_spectrum_deviation,
        "scope": if row.negative_control { "negative-control" } else { "lorentz" },
        "pass": row.passes(tol),
    })
}

/// `rotation(n₂, θ) ∘ boost(n₁, η)` with random unit axes, `η ∈ [0, 3]`, `θ ∈ [−π, π]`.
pub fn random_transforms(seed: u64, count: usize) -> Vec<LorentzTransform> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let axis = |rng: &mut ChaCha8Rng| loop {
        let v: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 0.1 && n <= 1.0 {
            return v.map(|x| x / n);
        }
    };
    (0..count)
        .map(|_| {
            let b = LorentzTransform::boost(axis(&mut rng), rng.gen_range(0.0..3.0)).expect("unit axis");
            let r = LorentzTransform::rotation(axis(&mut rng), rng.gen_range(-PI..PI)).expect("unit axis");
            compose(&r, &b)
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn cmd_invariance_scan(
    cfg: &RunConfig,
    axes: &[Axis],
    rapidities: &[f64],
    angles: &[f64],
    random: usize,
    tol: f64,
    include_negative_control: bool,
) -> Result<Report, Error> {
    let psi = epr_state(cfg.mass)?;
    let mut transforms = transform_grid(axes, rapidities, angles)?;
    transforms.extend(random_transforms(cfg.seed, random));
    let rows = invariance_scan(&psi, &transforms)?;

    let mut report = Report::new("invariance-scan", cfg);
    let worst_entropy = rows.iter().map(|r| r.entropy_deviation).fold(0.0, f64::max);
    let worst_spectrum = rows.iter().map(|r| r.spectrum_deviation).fold(0.0, f64::max);
    let mut worst_isometry: f64 = 0.0;
    for t in &transforms {
        worst_isometry = worst_isometry.max(scaled_isometry_deviation(t, psi.momenta[0], cfg.mass)?);
    }
    report.results.extend(rows.iter().map(|r| scan_row_value(r, tol)));
    if include_negative_control {
        let controls = negative_control_scan(&psi, &transforms)?;
        report.results.extend(controls.iter().map(|r| scan_row_value(r, tol)));
    }
    report.checks.push(Check::at_most("entropy deviation", "entanglement-invariance", worst_entropy, tol));
    report.checks.push(Check::at_most("Schmidt spectrum deviation", "entanglement-invariance", worst_spectrum, tol));
    report.checks.push(Check::at_most(
        "S^dagger S proportional to identity on spin subspace",
        "scaled-isometry",
        worst_isometry,
        1e-10,
    ));
    Ok(report)
}

fn random_on_shell(rng: &mut ChaCha8Rng, mass: f64, pmax: f64) -> FourVector {
    FourVector::on_shell(mass, std::array::from_fn(|_| rng.gen_range(-pmax..pmax)))
}

fn selftest(cfg: &RunConfig) -> Result<Report, Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut report = Report::new("selftest", cfg);
    let m = cfg.mass;
    let e = cfg.coupling_e();
    let transforms = random_transforms(cfg.seed, 20);

    report.checks.push(Check::at_most("Clifford algebra", "gamma-matrices", GammaBasis::weyl().clifford_defect(), 1e-14));
    let metric = transforms.iter().map(|t| t.metric_defect()).fold(0.0, f64::max);
    report.checks.push(Check::at_most("Lorentz transforms preserve the metric", "lorentz-group", metric, 1e-12));
    let mut intertwine: f64 = 0.0;
    for t in &transforms {
        intertwine = intertwine.max(t.intertwining_defect()?);
    }
    report.checks.push(Check::at_most("S^-1 gamma S = Lambda gamma", "spinor-representation", intertwine, 1e-10));

    let mut dirac: f64 = 0.0;
    for t in &transforms {
        let spin = if rng.gen_bool(0.5) { SpinLabel::Up } else { SpinLabel::Down };
        let u = u_labeled(random_on_shell(&mut rng, m, 2.0), spin, m)?;
        let v = transform_spinor(t, &u);
        dirac = dirac
            .max(crate::dirac::dirac_residual(&u) / u.components.norm())
            .max(crate::dirac::dirac_residual(&v) / v.components.norm());
    }
    report.checks.push(Check::at_most("Dirac equation residual", "dirac-equation", dirac, 1e-9));

    let mut concord: f64 = 0.0;
    for k in 0..20 {
        let eta = 3.0 * k as f64 / 19.0;
        let t = LorentzTransform::boost(Axis::X.unit(), eta)?;
        for spin in SpinLabel::ALL {
            let moved = transform_spinor(&t, &u_rest(spin, m));
            let direct = u_labeled(t.apply_vector(FourVector::at_rest(m)), spin, m)?;
            concord = concord.max(moved.components.max_abs_diff(&direct.components));
        }
    }
    report.checks.push(Check::at_most("boosted rest spinor equals u(p)", "spinor-boost", concord, 1e-10));

    let mut antisym: f64 = 0.0;
    for _ in 0..50 {
        let spins = |rng: &mut ChaCha8Rng| [0, 1].map(|_| if rng.gen_bool(0.5) { SpinLabel::Up } else { SpinLabel::Down });
        let (si, so) = (spins(&mut rng), spins(&mut rng));
        let k = elastic_kinematics(m, e, rng.gen_range(0.01..2.0) * m, rng.gen_range(0.1..PI - 0.1), si, so)?;
        let a = tree_amplitude(&k)?;
        let b = tree_amplitude(&k.with_outgoing_swapped())?;
        if a.value.norm() > 0.0 {
            antisym = antisym.max((a.value + b.value).norm() / a.value.norm());
        }
    }
    report.checks.push(Check::at_most("amplitude antisymmetry", "fermion-antisymmetry", antisym, 1e-10));

    let xi = SpinLabel::Up.xi();
    let xi_p = SpinLabel::Down.xi();
    let gordon = |d: f64| {
        gordon_check(
            FourVector::on_shell(m, [0.48 * d * m, 0.6 * d * m, 0.64 * d * m]),
            FourVector::on_shell(m, [-0.4 * d * m, 0.18 * d * m, 0.24 * d * m]),
            &xi,
            &xi_p,
            m,
        )
    };
    report.checks.push(Check::within("Gordon deviation halving ratio", "gordon-decomposition", gordon(0.1)? / gordon(0.05)?, 3.5, 4.5));
    let extraction = crate::reduction::extraction_deviation(&ExtractionTemplate::new(0.02, m, e))?;
    report.checks.push(Check::at_most("extracted spin potential vs dipole kernel", "dipole-kernel", extraction, 0.05));
    report.checks.push(Check::at_most("curl form vs tensor form", "dipole-position", curl_form_check([0.0, 0.0, 1.0], 1e-3)?, 1e-5));

    let j = coupling_j(cfg.r, m, cfg.alpha)?.j;
    let eig = eigh(effective_spin_potential(j).matrix(), 1e-14)?;
    let mut expected = [j, j, j, -3.0 * j];
    expected.sort_by(f64::total_cmp);
    let spec_dev = eig.values.iter().zip(expected).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / j.abs();
    report.checks.push(Check::at_most("potential eigenvalues {J, J, J, -3J}", "exchange-potential", spec_dev, 1e-12));

    let du = {
        let mut s = [C64::new(0.0, 0.0); 4];
        s[2] = C64::new(1.0, 0.0);
        s
    };
    let mut evo: f64 = 0.0;
    for k in 0..100 {
        let jt2 = 2.0 * PI * k as f64 / 99.0;
        let s = evolve_spin(&du, j, jt2 / (2.0 * j))?;
        evo = evo.max((s[2] - C64::new(jt2.cos(), 0.0)).norm()).max((s[1] - C64::new(0.0, -jt2.sin())).norm());
    }
    report.checks.push(Check::at_most("evolution amplitudes", "exchange-evolution", evo, 1e-12));

    let start = definite_state([SpinLabel::Down, SpinLabel::Up], m)?;
    let generated = evolve(&start, j, (PI / 4.0) / (2.0 * j))?;
    let epr = epr_state(m)?;
    let rel = generated.amplitudes.max_abs_diff(&epr.amplitudes);
    report.checks.push(Check::at_most("evolution reaches the EPR state", "epr-generation", rel, 1e-12));

    let rows = invariance_scan(&epr, &default_grid())?;
    let worst = rows.iter().map(|r| r.deviation()).fold(0.0, f64::max);
    report.checks.push(Check::at_most("entanglement invariance over default grid", "entanglement-invariance", worst, 1e-9));

    let j2 = coupling_j(2.0 * cfg.r, m, cfg.alpha)?.j;
    report.checks.push(Check::at_most("coupling scales as r^-3", "coupling-constant", (j2 * 8.0 - j).abs() / j.abs(), 1e-14));
    Ok(report)
}

fn dispatch(cli: &Cli, cfg: &RunConfig) -> Result<Report, Error> {
    match &cli.command {
        Command::Evolve { jt } => cmd_evolve(cfg, *jt),
        Command::Boost { axis, rapidity, beta, state } => cmd_boost(cfg, *axis, *rapidity, *beta, *state),
        Command::Amplitude { pmag, angle, spins_in, spins_out, nr_check } => {
            cmd_amplitude(cfg, *pmag, *angle, *spins_in, *spins_out, *nr_check)
        }
        Command::InvarianceScan { axes, rapidities, angles, random, tol, include_negative_control, .. } => {
            cmd_invariance_scan(cfg, axes, rapidities, angles, *random, *tol, *include_negative_control)
        }
        Command::Selftest => selftest(cfg),
    }
}

fn usage_problem(cli: &Cli) -> Option<String> {
    match &cli.command {
        Command::Boost { beta: Some(b), .. } if b.is_nan() || b.abs() >= 1.0 => Some(format!("--beta must satisfy |beta| < 1, got {b}")),
        Command::Amplitude { pmag, .. } if !(*pmag >= 0.0 && pmag.is_finite()) => Some(format!("--pmag must be non-negative, got {pmag}")),
        Command::InvarianceScan { tol, .. } if tol.is_nan() || *tol < 0.0 => Some(format!("--tol must be non-negative, got {tol}")),
        _ => None,
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                EXIT_USAGE
            } else {
                let _ = write!(out, "{text}");
                EXIT_OK
            };
        }
    };
    let env_path = std::env::var_os(CONFIG_ENV).map(PathBuf::from);
    let cfg = match RunConfig::resolve(&cli, env_path) {
        Ok(cfg) => cfg,
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            return EXIT_USAGE;
        }
    };
    if let Some(msg) = usage_problem(&cli) {
        let _ = writeln!(err, "error: {msg}");
        return EXIT_USAGE;
    }
    let report = match dispatch(&cli, &cfg) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_PHYSICS;
        }
    };
    let text = render(&report, cfg.format);
    let target = match &cli.command {
        Command::InvarianceScan { out: Some(path), .. } => Some(path.clone()),
        _ => None,
    };
    match target {
        Some(path) => {
            if let Err(e) = std::fs::write(&path, &text) {
                let _ = writeln!(err, "error: cannot write {}: {e}", path.display());
                return EXIT_USAGE;
            }
            let _ = writeln!(err, "wrote {} rows to {}", report.results.len(), path.display());
        }
        None => {
            let _ = out.write_all(text.as_bytes());
        }
    }
    if report.all_pass() {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    }
}
