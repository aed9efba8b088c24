//! The batch commands. Each returns a typed report that renders as JSON or
//! as a CSV table.

use std::fs;
use std::path::Path;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::Serialize;
use serde_json::Number;

use liouville_core::coupling::{PiMonomial, RhoVector};
use liouville_core::degree::{self, DegreeError};
use liouville_core::solver::{
    self, local_masses, reconstruct_original, write_sweep_csv, SweepMode, SweepPath,
    SweepRecord, TorusSystem,
};
use liouville_core::torus::{self, ScalarField};

use crate::output::{self, csv_float, float, floats, opt_float, rational, Float, Table};
use crate::spec::{ProblemSpec, SpecError};
use crate::CliError;

/// Something a command produced.
pub trait Report {
    fn json(&self) -> String;
    fn table(&self) -> Table;

    fn csv(&self) -> String {
        self.table().render()
    }
}

macro_rules! json_report {
    ($t:ty) => {
        fn json(&self) -> String {
            let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
            s.push('\n');
            s
        }
    };
}

fn critical(e: DegreeError) -> CliError {
    match e {
        DegreeError::OnCriticalSet { k, n } => CliError::OnCriticalSet { k, n },
        other => CliError::Degree(other),
    }
}

fn pi_monomial(m: &PiMonomial) -> String {
    let c = rational(&m.coeff);
    match m.pi_power {
        0 => c,
        1 => format!("{c}*pi"),
        p => format!("{c}*pi^{p}"),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Coefficient {
    pub n: String,
    pub b: Number,
}

#[derive(Debug, Clone, Serialize)]
pub struct DegreeOutput {
    pub k: usize,
    #[serde(serialize_with = "float")]
    pub ratio: f64,
    /// `Q/(8πL)` when it is rational.
    pub ratio_over_8pi: Option<String>,
    /// `[n_k, n_{k+1}]`; the region is `8πn_k < Q/L < 8πn_{k+1}`.
    pub bounds: [String; 2],
    pub coefficients: Vec<Coefficient>,
    pub degree: Number,
    #[serde(skip)]
    pub degree_value: BigInt,
}

impl Report for DegreeOutput {
    json_report!(DegreeOutput);

    fn table(&self) -> Table {
        let mut t = Table::new(&["n", "b"]);
        for c in &self.coefficients {
            t.push(vec![c.n.clone(), c.b.to_string()]);
        }
        t
    }
}

pub fn cmd_degree(spec: &ProblemSpec) -> Result<DegreeOutput, CliError> {
    let a = spec.matrix()?;
    let rho = spec.rho()?;
    let profile = spec.profile()?;
    let report = degree::degree_report(&a, &rho, &spec.topology()?, &profile).map_err(critical)?;
    let c = &report.classification;
    Ok(DegreeOutput {
        k: c.k,
        ratio: c.ratio,
        ratio_over_8pi: c.ratio_over_8pi.as_ref().map(rational),
        bounds: [rational(&c.bounds.0), rational(&c.bounds.1)],
        coefficients: report
            .coefficients
            .iter()
            .map(|(n, b)| Coefficient {
                n: rational(n),
                b: output::integer(b),
            })
            .collect(),
        degree: output::integer(&report.degree),
        degree_value: report.degree,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumRow {
    pub n: String,
    pub b: Number,
    /// `1 + Σ_{j≤k} b_j`.
    pub partial_sum: Number,
}

#[derive(Debug, Clone, Serialize)]
#[serde(transparent)]
pub struct SpectrumOutput {
    pub rows: Vec<SpectrumRow>,
}

impl Report for SpectrumOutput {
    json_report!(SpectrumOutput);

    fn table(&self) -> Table {
        let mut t = Table::new(&["n", "b", "partial_sum"]);
        for r in &self.rows {
            t.push(vec![r.n.clone(), r.b.to_string(), r.partial_sum.to_string()]);
        }
        t
    }
}

pub fn cmd_spectrum(spec: &ProblemSpec, cutoff: Option<&str>) -> Result<SpectrumOutput, CliError> {
    let cutoff = spec.cutoff(cutoff)?;
    let profile = spec.profile()?;
    let spectrum = degree::enumerate_spectrum(&profile, &cutoff).map_err(critical)?;
    let series = degree::expand_series(&spec.topology()?, &profile, &cutoff).map_err(critical)?;
    let mut partial = BigInt::one();
    let rows = spectrum
        .values()
        .iter()
        .map(|n| {
            let b = series.coefficient(n);
            partial += &b;
            SpectrumRow {
                n: rational(n),
                b: output::integer(&b),
                partial_sum: output::integer(&partial),
            }
        })
        .collect();
    Ok(SpectrumOutput { rows })
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassifyOutput {
    #[serde(rename = "Q")]
    pub quadratic: String,
    #[serde(rename = "L")]
    pub linear: String,
    #[serde(serialize_with = "float")]
    pub ratio: f64,
    pub ratio_over_8pi: Option<String>,
    pub k: usize,
    pub bounds: [String; 2],
}

impl Report for ClassifyOutput {
    json_report!(ClassifyOutput);

    fn table(&self) -> Table {
        let mut t = Table::new(&["Q", "L", "ratio", "ratio_over_8pi", "k", "n_k", "n_k1"]);
        t.push(vec![
            self.quadratic.clone(),
            self.linear.clone(),
            csv_float(self.ratio),
            self.ratio_over_8pi.clone().unwrap_or_default(),
            self.k.to_string(),
            self.bounds[0].clone(),
            self.bounds[1].clone(),
        ]);
        t
    }
}

pub fn cmd_classify(spec: &ProblemSpec) -> Result<ClassifyOutput, CliError> {
    let a = spec.matrix()?;
    let rho = spec.rho()?;
    let profile = spec.profile()?;
    let c = degree::classify(&a, &rho, &profile).map_err(critical)?;
    Ok(ClassifyOutput {
        quadratic: pi_monomial(&c.quadratic),
        linear: pi_monomial(&c.linear),
        ratio: c.ratio,
        ratio_over_8pi: c.ratio_over_8pi.as_ref().map(rational),
        k: c.k,
        bounds: [rational(&c.bounds.0), rational(&c.bounds.1)],
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SymmetrizeOutput {
    pub b11: String,
    pub b12: String,
    pub b22: String,
    pub mass_scale: String,
    #[serde(serialize_with = "float")]
    pub shift: f64,
}

impl Report for SymmetrizeOutput {
    json_report!(SymmetrizeOutput);

    fn table(&self) -> Table {
        let mut t = Table::new(&["b11", "b12", "b22", "mass_scale", "shift"]);
        t.push(vec![
            self.b11.clone(),
            self.b12.clone(),
            self.b22.clone(),
            self.mass_scale.clone(),
            csv_float(self.shift),
        ]);
        t
    }
}

pub fn cmd_symmetrize(spec: &ProblemSpec) -> Result<SymmetrizeOutput, CliError> {
    let s = spec
        .matrix()?
        .symmetrize()
        .map_err(|e| CliError::Degree(e.into()))?;
    Ok(SymmetrizeOutput {
        b11: rational(&s.b11),
        b12: rational(&s.b12),
        b22: rational(&s.b22),
        mass_scale: rational(&s.mass_scale),
        shift: s.shift,
    })
}

fn system(spec: &ProblemSpec, grid: Option<usize>) -> Result<(TorusSystem, solver::SolveConfig), CliError> {
    if spec.topology()? != degree::Topology::torus() {
        return Err(SpecError {
            field: "topology".into(),
            message: "the solver runs on the torus only".into(),
            kind: "InvalidSpec",
        }
        .into());
    }
    let config = spec.solver_config(grid)?;
    let system = TorusSystem::new(spec.matrix()?, spec.profile()?, spec.weights()?, &config)
        .map_err(CliError::from_solve)?;
    Ok((system, config))
}

#[derive(Debug, Clone, Serialize)]
pub struct LocalMassOutput {
    #[serde(serialize_with = "floats")]
    pub position: Vec<f64>,
    #[serde(serialize_with = "float")]
    pub mu: f64,
    #[serde(serialize_with = "floats")]
    pub sigma: Vec<f64>,
    #[serde(serialize_with = "float")]
    pub pohozaev: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveOutput {
    #[serde(serialize_with = "floats")]
    pub rho: Vec<f64>,
    pub region: usize,
    #[serde(serialize_with = "float")]
    pub residual: f64,
    pub picard_iterations: usize,
    pub newton_steps: usize,
    #[serde(serialize_with = "floats")]
    pub normalization: Vec<f64>,
    #[serde(serialize_with = "floats")]
    pub max_u: Vec<f64>,
    #[serde(serialize_with = "opt_float")]
    pub energy: Option<f64>,
    /// `∫h_i* e^{u_i*}` of the reconstructed original fields.
    #[serde(serialize_with = "floats")]
    pub reconstructed_mass: Vec<f64>,
    #[serde(serialize_with = "float")]
    pub delta: f64,
    pub local_masses: Vec<LocalMassOutput>,
    #[serde(serialize_with = "opt_float")]
    pub degenerate_constant: Option<f64>,
    #[serde(serialize_with = "floats")]
    pub residual_history: Vec<f64>,
    #[serde(skip)]
    pub fields: Option<Box<SolvedFields>>,
}

#[derive(Debug, Clone)]
pub struct SolvedFields {
    pub u: [ScalarField; 2],
    pub u_star: [ScalarField; 2],
}

impl SolveOutput {
    /// Writes `u1.csv`, `u2.csv`, `u1_star.csv` and `u2_star.csv` into `dir`.
    pub fn write_fields(&self, dir: &Path) -> Result<(), CliError> {
        let Some(f) = &self.fields else {
            return Ok(());
        };
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let named = [
            ("u1.csv", &f.u[0]),
            ("u2.csv", &f.u[1]),
            ("u1_star.csv", &f.u_star[0]),
            ("u2_star.csv", &f.u_star[1]),
        ];
        for (name, field) in named {
            let path = dir.join(name);
            let file = fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
            field
                .write_csv(std::io::BufWriter::new(file))
                .map_err(|e| CliError::io(&path, e))?;
        }
        Ok(())
    }
}

impl Report for SolveOutput {
    json_report!(SolveOutput);

    fn table(&self) -> Table {
        let mut t = Table::new(&["point", "x1", "x2", "mu", "sigma_1", "sigma_2", "pohozaev"]);
        for (l, p) in self.local_masses.iter().enumerate() {
            t.push(vec![
                (l + 1).to_string(),
                csv_float(p.position[0]),
                csv_float(p.position[1]),
                csv_float(p.mu),
                csv_float(p.sigma[0]),
                csv_float(p.sigma[1]),
                csv_float(p.pohozaev),
            ]);
        }
        t
    }
}

pub fn cmd_solve(spec: &ProblemSpec, grid: Option<usize>) -> Result<SolveOutput, CliError> {
    let rho = spec.rho()?;
    let (system, config) = system(spec, grid)?;
    let region = degree::classify(&system.matrix, &rho, &system.profile).map_err(critical)?;
    let sol = solver::solve(&system, &rho, &config).map_err(CliError::from_solve)?;
    let masses = local_masses(&sol, &system, config.ball_radius).map_err(CliError::from_solve)?;
    let u_star = reconstruct_original(&sol, &system).map_err(CliError::from_solve)?;
    let reconstructed_mass = (0..2)
        .map(|i| torus::quadrature(&system.hstar[i].zip_with(&u_star[i], |h, v| h * v.exp())))
        .collect();
    Ok(SolveOutput {
        rho: sol.rho.to_vec(),
        region: region.k,
        residual: sol.residual,
        picard_iterations: sol.picard_iterations,
        newton_steps: sol.newton_steps,
        normalization: sol.normalization.to_vec(),
        max_u: sol.max_abs().to_vec(),
        energy: solver::energy(&sol.u, sol.rho, &system).ok(),
        reconstructed_mass,
        delta: config.ball_radius,
        local_masses: masses
            .points
            .iter()
            .map(|p| LocalMassOutput {
                position: p.position.to_vec(),
                mu: p.mu,
                sigma: p.sigma.to_vec(),
                pohozaev: p.pohozaev,
            })
            .collect(),
        degenerate_constant: masses.degenerate_constant,
        residual_history: sol.history.clone(),
        fields: Some(Box::new(SolvedFields { u: sol.u, u_star })),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub t: String,
    #[serde(serialize_with = "floats")]
    pub rho: Vec<f64>,
    pub region: String,
    pub converged: bool,
    #[serde(serialize_with = "float")]
    pub residual: f64,
    #[serde(serialize_with = "floats")]
    pub max_u: Vec<f64>,
    #[serde(serialize_with = "opt_float")]
    pub energy: Option<f64>,
    pub sigma: Vec<[Float; 2]>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(transparent)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    #[serde(skip)]
    pub records: Vec<SweepRecord>,
    #[serde(skip)]
    pub points: usize,
}

impl Report for SweepOutput {
    json_report!(SweepOutput);

    fn table(&self) -> Table {
        unreachable!("sweeps render through csv()")
    }

    fn csv(&self) -> String {
        let mut buf = Vec::new();
        write_sweep_csv(&self.records, self.points, &mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("CSV is UTF-8")
    }
}

pub fn cmd_sweep(spec: &ProblemSpec, grid: Option<usize>, parallel: bool) -> Result<SweepOutput, CliError> {
    let (from, to, s) = spec.sweep_path()?;
    let (system, config) = system(spec, grid)?;
    let path = SweepPath { from, to };
    let ts = SweepPath::uniform_grid(s.steps, s.include_start);
    let mode = if parallel {
        SweepMode::Independent
    } else {
        SweepMode::WarmStart
    };
    let records = solver::sweep(&system, &path, &ts, &config, mode).map_err(CliError::from_solve)?;
    let rows = records
        .iter()
        .map(|r| SweepRow {
            t: rational(&r.t),
            rho: r.rho.to_vec(),
            region: r.region.to_string(),
            converged: r.converged,
            residual: r.residual,
            max_u: r.max_u.to_vec(),
            energy: r.energy,
            sigma: r.sigma.iter().map(|s| [Float(s[0]), Float(s[1])]).collect(),
        })
        .collect();
    Ok(SweepOutput {
        rows,
        records,
        points: system.profile.len(),
    })
}

/// Intrinsic ρ for a matrix and a profile, as a spec-ready pair of strings.
pub fn intrinsic_rho_strings(rho: &RhoVector) -> [String; 2] {
    let c = rho.coeffs();
    let render = |q: &liouville_core::exact::Rational| {
        if q.is_zero() {
            "0".to_string()
        } else {
            format!("{}pi", rational(q))
        }
    };
    [render(&c[0]), render(&c[1])]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(text: &str) -> ProblemSpec {
        ProblemSpec::parse(text).unwrap()
    }

    #[test]
    fn degree_on_the_torus() {
        let s = spec(
            r#"
matrix = [["0", "2"], ["2", "0"]]
rho = ["6pi", "6pi"]
[profile]
strengths = ["3"]
"#,
        );
        let out = cmd_degree(&s).unwrap();
        assert_eq!(out.k, 1);
        assert_eq!(out.degree_value, BigInt::from(2));
        assert_eq!(out.ratio_over_8pi.as_deref(), Some("3/2"));
        assert!(out.json().contains("\"degree\": 2"));
    }

    #[test]
    fn spectrum_rows() {
        let s = spec("[profile]\nstrengths = [\"1/2\"]\n");
        let out = cmd_spectrum(&s, Some("2")).unwrap();
        let cells: Vec<(String, String)> = out
            .rows
            .iter()
            .map(|r| (r.n.clone(), r.b.to_string()))
            .collect();
        assert_eq!(
            cells,
            [("1", "1"), ("3/2", "-1"), ("2", "1")].map(|(a, b)| (a.to_string(), b.to_string()))
        );
        assert_eq!(out.csv(), "n,b,partial_sum\n1,1,2\n3/2,-1,1\n2,1,2\n");
    }

    #[test]
    fn symmetrize_reports_exact_entries() {
        let s = spec(r#"matrix = [["1", "3"], ["2", "2"]]"#);
        let out = cmd_symmetrize(&s).unwrap();
        assert_eq!((out.b11.as_str(), out.b12.as_str(), out.b22.as_str()), ("3/2", "3", "2"));
        assert!((out.shift - (2.0f64 / 3.0).ln()).abs() < 1e-15);
    }

    #[test]
    fn classify_renders_pi_powers() {
        let s = spec(
            r#"
matrix = [["0", "2"], ["2", "0"]]
rho = ["3pi", "3pi"]
"#,
        );
        let out = cmd_classify(&s).unwrap();
        assert_eq!(out.quadratic, "36*pi^2");
        assert_eq!(out.linear, "6*pi");
    }

    #[test]
    fn intrinsic_rho_renders_as_pi_multiples() {
        let rho = RhoVector::pi_multiple(liouville_core::exact::ratio(3, 2), liouville_core::exact::int(0)).unwrap();
        assert_eq!(intrinsic_rho_strings(&rho), ["3/2pi".to_string(), "0".to_string()]);
    }
}
