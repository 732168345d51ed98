use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use riemann_kit::manifold::{builtin, load_definition, parse_params, MetricChart};
use riemann_kit::{Error, Result};
use serde::Serialize;

/// Comma-separated numbers, e.g. `0.3,0.1`.
pub fn vector(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| x.parse::<f64>().map_err(|_| format!("`{x}` is not a number")))
        .collect()
}

/// Semicolon-separated vectors, e.g. `1,0;0,1`.
pub fn vectors(s: &str) -> std::result::Result<Vec<Vec<f64>>, String> {
    s.split(';').filter(|x| !x.trim().is_empty()).map(vector).collect()
}

/// A number or `inf`.
pub fn extended(s: &str) -> std::result::Result<f64, String> {
    match s.trim() {
        "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
        x => x.parse::<f64>().map_err(|_| format!("`{x}` is not a number or inf")),
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ManifoldArgs {
    /// Manifold definition file (JSON).
    #[arg(long, conflicts_with = "builtin")]
    pub manifold: Option<PathBuf>,
    /// Builtin model: euclidean, sphere_stereo, hyperbolic_ball or torus.
    #[arg(long)]
    pub builtin: Option<String>,
    /// Builtin parameters as k=v,k=v.
    #[arg(long, default_value = "")]
    pub param: String,
    /// Echo the definition text verbatim to stdout before the report.
    #[arg(long)]
    pub print_manifold: bool,
}

impl ManifoldArgs {
    pub fn given(&self) -> bool {
        self.manifold.is_some() || self.builtin.is_some()
    }

    /// The chart and the exact definition text it came from.
    pub fn load(&self) -> Result<(MetricChart<f64>, String)> {
        let (chart, text) = match (&self.manifold, &self.builtin) {
            (Some(path), _) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                (load_definition::<f64>(&text)?, text)
            }
            (None, Some(name)) => {
                let params: BTreeMap<String, f64> = parse_params(&self.param)?;
                let chart = builtin::<f64>(name, &params)?;
                let text = serde_json::json!({ "builtin": name, "params": params }).to_string();
                (chart, text)
            }
            (None, None) => return Err(Error::BadParam("a manifold is required (--manifold or --builtin)".into())),
        };
        if self.print_manifold {
            println!("{text}");
        }
        Ok((chart, text))
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct RunArgs {
    /// Seed for every randomized choice.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Report path; stdout when absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Worker threads for sweeps (0 = all cores).
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// RK4 step.
    #[arg(long, default_value_t = 1e-3)]
    pub step: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct GeodesicArgs {
    /// Start point.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    pub point: Vec<f64>,
    /// Initial velocity.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    pub velocity: Vec<f64>,
    /// Parameter length of the geodesic.
    #[arg(long, default_value_t = 1.0)]
    pub length: f64,
    /// Rescale the velocity to unit length first.
    #[arg(long)]
    pub unit: bool,
}
