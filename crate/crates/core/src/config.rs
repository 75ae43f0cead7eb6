//! Run configuration: sectioned TOML with strict keys, defaults for every field and
//! dotted command-line overrides.

use std::f64::consts::{E, PI};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::equilibria::{ConservedQuantities, ProbeOptions};
use crate::error::{Error, Result};
use crate::flat_symbols::{CurvatureSymbol, FlatParams, Variant};
use crate::spectral::{DispersionOptions, LinearizationParams, OuterBoundary, RadialGeometry, SpectrumOptions};
use crate::thermo::{FreeEnergy, MaterialParams, PhaseLaw, ScalarLaw};
use crate::zerocert::{Region, ScanGrid, WindingOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhaseSection {
    /// `reference` (c or c, e0, s0) or `two_term` (a, b)
    pub free_energy: String,
    pub free_energy_coeffs: Vec<f64>,
    /// `constant`, `arrhenius` or `power`
    pub mu: String,
    pub mu_coeffs: Vec<f64>,
    pub d: String,
    pub d_coeffs: Vec<f64>,
}

impl PhaseSection {
    fn reference(c: f64, mu: f64, d: f64) -> Self {
        PhaseSection {
            free_energy: "reference".into(),
            free_energy_coeffs: vec![c],
            mu: "constant".into(),
            mu_coeffs: vec![mu],
            d: "constant".into(),
            d_coeffs: vec![d],
        }
    }

    fn law(&self) -> Result<PhaseLaw> {
        Ok(PhaseLaw {
            free_energy: FreeEnergy::from_coeffs(&self.free_energy, &self.free_energy_coeffs)?,
            mu: ScalarLaw::from_coeffs(&self.mu, &self.mu_coeffs)?,
            d: ScalarLaw::from_coeffs(&self.d, &self.d_coeffs)?,
        })
    }
}

impl Default for PhaseSection {
    fn default() -> Self {
        PhaseSection::reference(1.0, 1.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MaterialSection {
    pub rho1: f64,
    pub rho2: f64,
    pub sigma: f64,
    pub phase1: PhaseSection,
    pub phase2: PhaseSection,
}

impl Default for MaterialSection {
    fn default() -> Self {
        MaterialSection {
            rho1: 1.0,
            rho2: 2.0,
            sigma: 1.0,
            phase1: PhaseSection::reference(1.0, 1.0, 1.0),
            phase2: PhaseSection::reference(2.0, 2.0, 1.5),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometrySection {
    pub n: usize,
    #[serde(rename = "R")]
    pub radius: f64,
    #[serde(rename = "R_out")]
    pub r_out: f64,
    pub m: usize,
    #[serde(rename = "L_max")]
    pub l_max: usize,
    /// collocation points per radial subinterval
    #[serde(rename = "N")]
    pub points: usize,
    pub theta_star: f64,
    pub outer: OuterBoundary,
}

impl Default for GeometrySection {
    fn default() -> Self {
        GeometrySection { n: 2, radius: 1.0, r_out: 2.0, m: 1, l_max: 6, points: 24, theta_star: E, outer: OuterBoundary::Wall }
    }
}

/// Defaults reproduce `R = 1`, `theta_* = e` in the disc of radius 2 for the default material.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConservedSection {
    pub c0: f64,
    #[serde(rename = "E0")]
    pub e0: f64,
    pub volume: f64,
}

impl Default for ConservedSection {
    fn default() -> Self {
        ConservedSection { c0: 7.0 * PI, e0: 13.0 * PI * E + 2.0 * PI, volume: 4.0 * PI }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SymbolSection {
    /// coefficient of the phase-transition term
    pub c0: f64,
    pub b0: Vec<f64>,
    /// only `constant` is shipped
    pub m_fn: String,
    pub m_value: f64,
    /// bound M with `|m(z)| <= M`
    pub m_bound: f64,
    /// bound L on `tau |ell|` used in the decay threshold
    pub ell_bound: f64,
    pub variant: String,
    pub rmax: f64,
    /// clearance of certification contours from the branch cuts
    pub margin: f64,
    pub scan: ScanGrid,
    pub winding: WindingOptions,
}

impl Default for SymbolSection {
    fn default() -> Self {
        SymbolSection {
            c0: 0.5,
            b0: vec![0.3, 0.0],
            m_fn: "constant".into(),
            m_value: 1.0,
            m_bound: 1.0,
            ell_bound: 1.0,
            variant: "s22".into(),
            rmax: 1e3,
            margin: 1e-3,
            scan: ScanGrid::default(),
            winding: WindingOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub seed: u64,
    /// random parameter draws per acceptance criterion
    pub draws: usize,
    pub out_dir: PathBuf,
    /// left margin of the eigenvalue window; omitted means `sigma (n-1) / (2 R^2)`
    #[serde(skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    pub zero_tol: f64,
    pub persist_tol: f64,
    pub kernel_tol: f64,
    pub jordan_tol: f64,
    pub energy_tol: f64,
    pub curve_lambda_min: f64,
    pub curve_lambda_max: f64,
    pub curve_samples: usize,
    pub probe_samples: usize,
    pub probe_step: f64,
    /// minimum gap between balls and to the outer boundary, relative to R
    pub gap_fraction: f64,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            seed: 7,
            draws: 10,
            out_dir: PathBuf::from("out"),
            margin: None,
            zero_tol: 1e-8,
            persist_tol: 1e-7,
            kernel_tol: 1e-9,
            jordan_tol: 1e-7,
            energy_tol: 1e-6,
            curve_lambda_min: 1e-6,
            curve_lambda_max: 1e4,
            curve_samples: 121,
            probe_samples: 32,
            probe_step: 1e-2,
            gap_fraction: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub material: MaterialSection,
    pub geometry: GeometrySection,
    pub conserved: ConservedSection,
    pub symbol: SymbolSection,
    pub run: RunSection,
}

/// Constant curvature symbol with a separately configured bound.
#[derive(Debug, Clone, Copy)]
pub struct BoundedConstant {
    pub value: f64,
    pub bound: f64,
}

impl CurvatureSymbol for BoundedConstant {
    fn eval(&self, _z: num_complex::Complex64) -> num_complex::Complex64 {
        num_complex::Complex64::new(self.value, 0.0)
    }

    fn bound(&self) -> f64 {
        self.bound
    }
}

fn defaults_table() -> Table {
    match Value::try_from(RunConfig::default()).expect("defaults serialize") {
        Value::Table(t) => t,
        _ => unreachable!("config serializes to a table"),
    }
}

fn merge(base: &mut Table, top: Table) {
    for (k, v) in top {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(t)) => merge(b, t),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Leaf paths of a table, dotted.
fn leaves(t: &Table, prefix: &str, out: &mut Vec<String>) {
    for (k, v) in t {
        let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            Value::Table(sub) => leaves(sub, &path, out),
            _ => out.push(path),
        }
    }
}

fn known_paths() -> Vec<String> {
    let mut out = Vec::new();
    leaves(&defaults_table(), "", &mut out);
    out.push("run.margin".into());
    out
}

/// Integers written for float fields are promoted; unknown keys are rejected with their path.
fn coerce(user: &mut Table, reference: &Table, prefix: &str) -> Result<()> {
    for (k, v) in user.iter_mut() {
        let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        let Some(expected) = reference.get(k) else {
            if path == "run.margin" {
                if let Value::Integer(i) = v {
                    *v = Value::Float(*i as f64);
                }
                continue;
            }
            return Err(Error::Config(format!("unknown key {path:?}")));
        };
        match (expected, &mut *v) {
            (Value::Table(r), Value::Table(u)) => coerce(u, r, &path)?,
            (Value::Table(_), _) => return Err(Error::Config(format!("{path:?} must be a table"))),
            (Value::Float(_), Value::Integer(i)) => *v = Value::Float(*i as f64),
            (Value::Array(r), Value::Array(u)) if r.iter().all(|x| x.is_float()) => {
                for x in u.iter_mut() {
                    if let Value::Integer(i) = x {
                        *x = Value::Float(*i as f64);
                    }
                }
            }
            _ => {}
        }
    }
    Ok(())
}

fn parse_value(raw: &str) -> Value {
    match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => Value::String(raw.to_string()),
    }
}

impl RunConfig {
    /// Parses TOML text strictly on top of the defaults.
    pub fn from_toml(text: &str) -> Result<Self> {
        let table: Table = text.parse().map_err(|e| Error::Config(format!("{e}")))?;
        Self::from_table(table)
    }

    fn from_table(mut table: Table) -> Result<Self> {
        let mut full = defaults_table();
        coerce(&mut table, &full, "")?;
        merge(&mut full, table);
        let cfg: RunConfig = Value::Table(full).try_into().map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads `path` (if any) and applies `overrides` given as `(key, raw value)` pairs.
    /// A key is either a full dotted path (`geometry.N`) or a leaf name that occurs in
    /// exactly one section (`m`, `rmax`).
    pub fn load(text: Option<&str>, overrides: &[(String, String)]) -> Result<Self> {
        let mut table: Table = match text {
            Some(t) => t.parse().map_err(|e| Error::Config(format!("{e}")))?,
            None => Table::new(),
        };
        let paths = known_paths();
        for (key, raw) in overrides {
            let path = resolve_key(key, &paths)?;
            let parts: Vec<&str> = path.split('.').collect();
            let mut t = &mut table;
            for part in &parts[..parts.len() - 1] {
                let entry = t.entry(part.to_string()).or_insert_with(|| Value::Table(Table::new()));
                t = entry.as_table_mut().ok_or_else(|| Error::Config(format!("{part:?} is not a table")))?;
            }
            t.insert(parts[parts.len() - 1].to_string(), parse_value(raw));
        }
        Self::from_table(table)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Copy with every optional field materialized.
    pub fn resolved(&self) -> Self {
        let mut c = self.clone();
        if c.run.margin.is_none() {
            c.run.margin = Some(0.5 * c.material.sigma * (c.geometry.n as f64 - 1.0) / (c.geometry.radius * c.geometry.radius));
        }
        c
    }

    pub fn validate(&self) -> Result<()> {
        self.material()?;
        let g = &self.geometry;
        if g.n < 2 {
            return Err(Error::Config(format!("geometry.n must be at least 2, got {}", g.n)));
        }
        if g.m == 0 || g.l_max == 0 {
            return Err(Error::Config("geometry.m and geometry.L_max must be positive".into()));
        }
        if !(g.theta_star > 0.0) {
            return Err(Error::Config("geometry.theta_star must be positive".into()));
        }
        if !(g.radius > 0.0 && g.r_out > g.radius) {
            return Err(Error::Config("need 0 < geometry.R < geometry.R_out".into()));
        }
        let s = &self.symbol;
        if s.m_fn != "constant" {
            return Err(Error::Config(format!("unknown curvature symbol {:?} (shipped: constant)", s.m_fn)));
        }
        if !(s.m_bound >= s.m_value.abs()) {
            return Err(Error::Config("symbol.m_bound must dominate |symbol.m_value|".into()));
        }
        s.variant.parse::<Variant>()?;
        if !(s.rmax > 0.0 && s.margin > 0.0) {
            return Err(Error::Config("symbol.rmax and symbol.margin must be positive".into()));
        }
        let r = &self.run;
        if r.draws == 0 || r.curve_samples < 2 {
            return Err(Error::Config("run.draws and run.curve_samples too small".into()));
        }
        if !(r.curve_lambda_min > 0.0 && r.curve_lambda_max > r.curve_lambda_min) {
            return Err(Error::Config("need 0 < run.curve_lambda_min < run.curve_lambda_max".into()));
        }
        Ok(())
    }

    pub fn material(&self) -> Result<MaterialParams> {
        let m = &self.material;
        let mat = MaterialParams { rho1: m.rho1, rho2: m.rho2, sigma: m.sigma, phase1: m.phase1.law()?, phase2: m.phase2.law()? };
        mat.validate()?;
        Ok(mat)
    }

    pub fn conserved(&self) -> ConservedQuantities {
        let c = &self.conserved;
        ConservedQuantities { c0: c.c0, e0: c.e0, volume: c.volume, n: self.geometry.n, m: self.geometry.m }
    }

    pub fn radial_geometry(&self) -> Result<RadialGeometry> {
        let g = &self.geometry;
        Ok(RadialGeometry::new(g.n, g.radius, g.r_out, g.points)?.with_outer(g.outer))
    }

    pub fn linearization(&self) -> Result<LinearizationParams> {
        LinearizationParams::from_material(&self.material()?, self.geometry.theta_star)
    }

    pub fn spectrum_options(&self) -> SpectrumOptions {
        let r = &self.run;
        SpectrumOptions { margin: r.margin, zero_tol: r.zero_tol, persist_tol: r.persist_tol, kernel_tol: r.kernel_tol, jordan_tol: r.jordan_tol }
    }

    pub fn dispersion_options(&self) -> DispersionOptions {
        let r = &self.run;
        DispersionOptions { lambda_min: r.curve_lambda_min, lambda_max: r.curve_lambda_max, samples: r.curve_samples, ..Default::default() }
    }

    pub fn probe_options(&self) -> ProbeOptions {
        ProbeOptions { n_samples: self.run.probe_samples, step: self.run.probe_step, seed: self.run.seed }
    }

    pub fn flat_params(&self) -> Result<FlatParams> {
        Ok(FlatParams::from_material(&self.material()?, self.geometry.theta_star))
    }

    pub fn variant(&self) -> Result<Variant> {
        self.symbol.variant.parse()
    }

    pub fn region(&self) -> Region {
        Region { margin: self.symbol.margin, ..Region::half_plane(self.symbol.rmax) }
    }

    pub fn curvature_symbol(&self) -> BoundedConstant {
        BoundedConstant { value: self.symbol.m_value, bound: self.symbol.m_bound }
    }
}

fn resolve_key(key: &str, paths: &[String]) -> Result<String> {
    if paths.iter().any(|p| p == key) {
        return Ok(key.to_string());
    }
    let hits: Vec<&String> = paths.iter().filter(|p| p.rsplit('.').next() == Some(key)).collect();
    match hits.as_slice() {
        [one] if !key.contains('.') => Ok((*one).clone()),
        [] => Err(Error::Config(format!("unknown key {key:?}"))),
        many => Err(Error::Config(format!("key {key:?} is ambiguous: {}", many.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ")))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::solve_equilibrium;

    #[test]
    fn defaults_round_trip_through_toml() {
        let c = RunConfig::default();
        let back = RunConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        assert_eq!(RunConfig::from_toml("").unwrap(), c);
    }

    #[test]
    fn default_conserved_quantities_match_default_geometry() {
        let c = RunConfig::default();
        let eq = solve_equilibrium(&c.conserved(), &c.material().unwrap(), c.run.gap_fraction).unwrap();
        assert!((eq.radius - c.geometry.radius).abs() < 1e-12);
        assert!((eq.theta_star - c.geometry.theta_star).abs() < 1e-10);
        assert!((eq.config.unwrap().r_out - c.geometry.r_out).abs() < 1e-12);
    }

    #[test]
    fn unknown_keys_are_errors() {
        for text in ["[geometry]\nNN = 3", "[material.phase1]\nmu_coef = [1.0]", "[nope]\nx = 1", "seed = 3", "[symbol.scan]\nn_tauu = 3"] {
            assert!(matches!(RunConfig::from_toml(text), Err(Error::Config(_))), "{text}");
        }
    }

    #[test]
    fn integers_are_accepted_for_floats() {
        let c = RunConfig::from_toml("[geometry]\nR = 1\nR_out = 3\n[symbol]\nb0 = [1, 0]\n[run]\nmargin = 2").unwrap();
        assert_eq!(c.geometry.r_out, 3.0);
        assert_eq!(c.symbol.b0, vec![1.0, 0.0]);
        assert_eq!(c.run.margin, Some(2.0));
    }

    #[test]
    fn overrides_take_precedence() {
        let file = "[geometry]\nN = 16\nm = 3";
        let ov = vec![("geometry.N".to_string(), "128".to_string()), ("m".into(), "2".into()), ("variant".into(), "s11".into()), ("symbol.scan.n_tau".into(), "5".into())];
        let c = RunConfig::load(Some(file), &ov).unwrap();
        assert_eq!(c.geometry.points, 128);
        assert_eq!(c.geometry.m, 2);
        assert_eq!(c.variant().unwrap(), Variant::S11);
        assert_eq!(c.symbol.scan.n_tau, 5);
        assert!(RunConfig::load(None, &[("bogus".into(), "1".into())]).is_err());
        assert!(RunConfig::load(None, &[("geometry.N".into(), "many".into())]).is_err());
        // `c0` lives in two sections
        assert!(RunConfig::load(None, &[("c0".into(), "1".into())]).is_err());
    }

    #[test]
    fn partial_sections_keep_their_own_defaults() {
        let c = RunConfig::from_toml("[material.phase2]\nmu_coeffs = [4.0]").unwrap();
        assert_eq!(c.material.phase2.d_coeffs, vec![1.5]);
        assert_eq!(c.material.phase2.free_energy_coeffs, vec![2.0]);
        assert_eq!(c.material().unwrap().phase2.mu.eval(1.0), 4.0);
    }

    #[test]
    fn resolved_materializes_the_margin() {
        let c = RunConfig::default().resolved();
        assert_eq!(c.run.margin, Some(0.5));
        assert!(c.to_toml().contains("margin = 0.5"));
    }

    #[test]
    fn invalid_values_are_rejected() {
        for text in ["[material]\nrho2 = 1.0", "[symbol]\nm_bound = 0.5", "[symbol]\nvariant = \"s33\"", "[geometry]\nm = 0", "[material.phase2]\nmu = \"cubic\""] {
            assert!(RunConfig::from_toml(text).is_err(), "{text}");
        }
    }
}
