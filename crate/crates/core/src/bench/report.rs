//! One CSV row per (method, tolerance set, hyper-reduction ranks), plus a
//! plain-text summary laid out as basis sizes | efficiency | accuracy.

use crate::error::{Error, Result};
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Space-time Galerkin reduced basis.
    StGrb,
    /// Spatial reduction with full-order time marching.
    Srb,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::StGrb => "st-grb",
            Method::Srb => "srb-tfo",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "st-grb" => Ok(Method::StGrb),
            "srb-tfo" => Ok(Method::Srb),
            _ => Err(Error::format("metrics", format!("unknown method {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub method: Method,
    pub eps_u: f64,
    pub eps_p: f64,
    pub eps_lambda_space: f64,
    pub eps_lambda_time: f64,
    pub n_c: usize,
    pub n_cj: usize,
    pub n_u_space: usize,
    pub n_u_time: usize,
    pub n_p_space: usize,
    pub n_p_time: usize,
    /// Summed over the Dirichlet boundaries.
    pub n_lambda_space: usize,
    pub n_lambda_time: usize,
    pub fom_dofs: usize,
    pub rom_dofs: usize,
    pub reduction_factor: f64,
    pub tests: usize,
    /// Test solves that errored or stopped before the Newton tolerance.
    pub failures: usize,
    pub err_u: Option<f64>,
    pub err_p: Option<f64>,
    pub err_d: Option<f64>,
    pub err_u_rel_eps: Option<f64>,
    pub err_p_rel_eps: Option<f64>,
    pub mean_iterations: Option<f64>,
    /// Seconds spent on snapshots for the whole campaign.
    pub snapshot_time: f64,
    /// Seconds spent on bases and reduced operators for this row.
    pub offline_time: f64,
    /// Mean full-order wall time per test parameter.
    pub fom_time: Option<f64>,
    /// Mean reduced wall time per test parameter.
    pub online_time: Option<f64>,
    pub speedup: Option<f64>,
}

impl MetricsRecord {
    /// Equality of everything but the wall-clock columns.
    pub fn same_numbers(&self, other: &Self) -> bool {
        let strip = |r: &Self| Self {
            snapshot_time: 0.0,
            offline_time: 0.0,
            fom_time: None,
            online_time: None,
            speedup: None,
            ..r.clone()
        };
        strip(self) == strip(other)
    }

    pub fn flagged(&self) -> bool {
        self.failures > 0
    }
}

pub const COLUMNS: [&str; 29] = [
    "method",
    "eps_u",
    "eps_p",
    "eps_lambda_space",
    "eps_lambda_time",
    "n_c",
    "n_cj",
    "n_u_space",
    "n_u_time",
    "n_p_space",
    "n_p_time",
    "n_lambda_space",
    "n_lambda_time",
    "fom_dofs",
    "rom_dofs",
    "reduction_factor",
    "tests",
    "failures",
    "err_u",
    "err_p",
    "err_d",
    "err_u_rel_eps",
    "err_p_rel_eps",
    "mean_iterations",
    "snapshot_time",
    "offline_time",
    "fom_time",
    "online_time",
    "speedup",
];

fn sci(v: f64) -> String {
    format!("{v:.5e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(sci).unwrap_or_default()
}

fn row(r: &MetricsRecord) -> Vec<String> {
    vec![
        r.method.name().to_string(),
        sci(r.eps_u),
        sci(r.eps_p),
        sci(r.eps_lambda_space),
        sci(r.eps_lambda_time),
        r.n_c.to_string(),
        r.n_cj.to_string(),
        r.n_u_space.to_string(),
        r.n_u_time.to_string(),
        r.n_p_space.to_string(),
        r.n_p_time.to_string(),
        r.n_lambda_space.to_string(),
        r.n_lambda_time.to_string(),
        r.fom_dofs.to_string(),
        r.rom_dofs.to_string(),
        sci(r.reduction_factor),
        r.tests.to_string(),
        r.failures.to_string(),
        opt(r.err_u),
        opt(r.err_p),
        opt(r.err_d),
        opt(r.err_u_rel_eps),
        opt(r.err_p_rel_eps),
        opt(r.mean_iterations),
        sci(r.snapshot_time),
        sci(r.offline_time),
        opt(r.fom_time),
        opt(r.online_time),
        opt(r.speedup),
    ]
}

fn csv_err(e: csv::Error) -> Error {
    Error::format("metrics CSV", e.to_string())
}

pub fn format_metrics_csv(table: &[MetricsRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(COLUMNS).map_err(csv_err)?;
    for r in table {
        w.write_record(row(r)).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::format("metrics CSV", e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::format("metrics CSV", e.to_string()))
}

pub fn parse_metrics_csv(text: &str) -> Result<Vec<MetricsRecord>> {
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let header = rd.headers().map_err(csv_err)?.clone();
    if header.iter().ne(COLUMNS) {
        return Err(Error::format("metrics CSV", "unexpected header"));
    }
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(csv_err)?;
        let cell = |k: usize| rec.get(k).unwrap_or("");
        let bad = |k: usize| Error::format("metrics CSV", format!("bad {} value {:?}", COLUMNS[k], cell(k)));
        let f = |k: usize| -> Result<f64> { cell(k).parse().map_err(|_| bad(k)) };
        let n = |k: usize| -> Result<usize> { cell(k).parse().map_err(|_| bad(k)) };
        let o = |k: usize| -> Result<Option<f64>> {
            match cell(k) {
                "" => Ok(None),
                s => s.parse().map(Some).map_err(|_| bad(k)),
            }
        };
        out.push(MetricsRecord {
            method: Method::parse(cell(0))?,
            eps_u: f(1)?,
            eps_p: f(2)?,
            eps_lambda_space: f(3)?,
            eps_lambda_time: f(4)?,
            n_c: n(5)?,
            n_cj: n(6)?,
            n_u_space: n(7)?,
            n_u_time: n(8)?,
            n_p_space: n(9)?,
            n_p_time: n(10)?,
            n_lambda_space: n(11)?,
            n_lambda_time: n(12)?,
            fom_dofs: n(13)?,
            rom_dofs: n(14)?,
            reduction_factor: f(15)?,
            tests: n(16)?,
            failures: n(17)?,
            err_u: o(18)?,
            err_p: o(19)?,
            err_d: o(20)?,
            err_u_rel_eps: o(21)?,
            err_p_rel_eps: o(22)?,
            mean_iterations: o(23)?,
            snapshot_time: f(24)?,
            offline_time: f(25)?,
            fom_time: o(26)?,
            online_time: o(27)?,
            speedup: o(28)?,
        });
    }
    Ok(out)
}

/// Human-readable table. `config` lines are echoed first for reproducibility.
pub fn format_summary(table: &[MetricsRecord], config: &[(String, String)]) -> String {
    let mut s = String::from("# configuration\n");
    for (k, v) in config {
        let _ = writeln!(s, "{k} = {v}");
    }
    let _ = writeln!(
        s,
        "\n{:<8} {:>9} {:>7} | {:>5} {:>5} {:>5} {:>5} | {:>9} {:>9} {:>6} | {:>9} {:>9} {:>9}",
        "method", "eps", "n_c", "n_u^s", "n_u^t", "n_p^s", "n_p^t", "RF", "SU", "iters", "E_u/eps", "E_p/eps", "E_d"
    );
    let dash = |v: Option<f64>, prec: usize| v.map(|x| format!("{x:.prec$e}")).unwrap_or_else(|| "-".into());
    for r in table {
        let _ = writeln!(
            s,
            "{:<8} {:>9.2e} {:>7} | {:>5} {:>5} {:>5} {:>5} | {:>9.3e} {:>9} {:>6} | {:>9} {:>9} {:>9}{}",
            r.method.name(),
            r.eps_u,
            format!("{}/{}", r.n_c, r.n_cj),
            r.n_u_space,
            r.n_u_time,
            r.n_p_space,
            r.n_p_time,
            r.reduction_factor,
            dash(r.speedup, 2),
            r.mean_iterations.map(|x| format!("{x:.2}")).unwrap_or_else(|| "-".into()),
            dash(r.err_u_rel_eps, 2),
            dash(r.err_p_rel_eps, 2),
            dash(r.err_d, 2),
            if r.flagged() { format!("  [{} failed]", r.failures) } else { String::new() }
        );
    }
    s
}

/// Writes `metrics.csv` and `summary.txt` into `dir`.
pub fn emit_report(dir: &Path, table: &[MetricsRecord], config: &[(String, String)]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("metrics.csv"), format_metrics_csv(table)?)?;
    std::fs::write(dir.join("summary.txt"), format_summary(table, config))?;
    Ok(())
}
