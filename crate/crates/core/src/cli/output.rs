use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::lmi::STRICT_EPS;
use crate::lti::ss::rows_of;
use crate::plant::MINREAL_TOL;
use crate::synth::{
    HalfStep, Sweep, SynthesisConfig, SynthesisResult, Verification, COMPLETION_TOL, RECOVERY_TOL,
};

pub const CSV_HEADER: &str =
    "omega,sigma_max_T_ed_weighted,sigma_min_T_ef_weighted,sigma_max_T_ed,sigma_min_T_ef,gamma_over_abs_Gd,nu_over_abs_Gf";

/// Sweep as CSV. The unweighted columns repeat the weighted ones when the plant
/// carries no shaping weights.
pub fn sweep_csv(s: &Sweep) -> String {
    let mut out = String::with_capacity(s.omega.len() * 140);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for i in 0..s.omega.len() {
        let ud = s
            .unweighted_disturbance
            .as_ref()
            .map_or(s.sigma_max_disturbance[i], |v| v[i]);
        let uf = s
            .unweighted_fault
            .as_ref()
            .map_or(s.sigma_min_fault[i], |v| v[i]);
        let row = [
            s.omega[i],
            s.sigma_max_disturbance[i],
            s.sigma_min_fault[i],
            ud,
            uf,
            s.bound_disturbance[i],
            s.bound_fault[i],
        ];
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.12e}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Self-contained log-log plot of the unweighted curves against their bounds.
pub fn sweep_svg(s: &Sweep, title: &str) -> String {
    const W: f64 = 760.0;
    const H: f64 = 460.0;
    const L: f64 = 70.0;
    const R: f64 = 20.0;
    const T: f64 = 40.0;
    const B: f64 = 50.0;
    let pts: Vec<usize> = (0..s.omega.len()).filter(|&i| s.omega[i] > 0.0).collect();
    let ud = s
        .unweighted_disturbance
        .clone()
        .unwrap_or_else(|| s.sigma_max_disturbance.clone());
    let uf = s
        .unweighted_fault
        .clone()
        .unwrap_or_else(|| s.sigma_min_fault.clone());
    let series: [(&str, &str, &[f64], bool); 4] = [
        ("|T_ed|", "#1f77b4", &ud, false),
        ("|T_ef|", "#d62728", &uf, false),
        ("gamma/|G_d|", "#1f77b4", &s.bound_disturbance, true),
        ("nu/|G_f|", "#d62728", &s.bound_fault, true),
    ];
    let floor = 1e-6;
    let lg = |v: f64| v.max(floor).log10();
    let (mut ylo, mut yhi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (_, _, v, _) in &series {
        for &i in &pts {
            ylo = ylo.min(lg(v[i]));
            yhi = yhi.max(lg(v[i]));
        }
    }
    if pts.is_empty() || !ylo.is_finite() {
        ylo = -1.0;
        yhi = 1.0;
    }
    let (ylo, yhi) = (ylo.floor(), yhi.ceil().max(ylo.floor() + 1.0));
    let (xlo, xhi) = match (pts.first(), pts.last()) {
        (Some(&a), Some(&b)) if b > a => (s.omega[a].log10().floor(), s.omega[b].log10().ceil()),
        _ => (-3.0, 4.0),
    };
    let px = |w: f64| L + (w.log10() - xlo) / (xhi - xlo) * (W - L - R);
    let py = |v: f64| T + (yhi - lg(v)) / (yhi - ylo) * (H - T - B);

    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#).unwrap();
    writeln!(
        out,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        W / 2.0,
        escape(title)
    )
    .unwrap();
    for d in xlo as i32..=xhi as i32 {
        let x = px(10f64.powi(d));
        writeln!(
            out,
            r##"<line x1="{x:.1}" y1="{T}" x2="{x:.1}" y2="{:.1}" stroke="#ddd"/>"##,
            H - B
        )
        .unwrap();
        writeln!(
            out,
            r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">1e{d}</text>"#,
            H - B + 18.0
        )
        .unwrap();
    }
    for d in ylo as i32..=yhi as i32 {
        let y = py(10f64.powi(d));
        writeln!(
            out,
            r##"<line x1="{L}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/>"##,
            W - R
        )
        .unwrap();
        writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">1e{d}</text>"#,
            L - 6.0,
            y + 4.0
        )
        .unwrap();
    }
    writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">frequency (rad/s)</text>"#,
        (L + W - R) / 2.0,
        H - 12.0
    )
    .unwrap();
    for (k, (name, color, v, dashed)) in series.iter().enumerate() {
        let path: Vec<String> = pts
            .iter()
            .map(|&i| format!("{:.2},{:.2}", px(s.omega[i]), py(v[i])))
            .collect();
        let dash = if *dashed {
            r#" stroke-dasharray="6,4""#
        } else {
            ""
        };
        writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.6"{dash} points="{}"/>"#,
            path.join(" ")
        )
        .unwrap();
        let ly = T + 16.0 + 16.0 * k as f64;
        writeln!(
            out,
            r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="1.6"{dash}/>"#,
            W - R - 150.0,
            W - R - 120.0
        )
        .unwrap();
        writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}">{}</text>"#,
            W - R - 114.0,
            ly + 4.0,
            escape(name)
        )
        .unwrap();
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// LMI variables of the final certificate, row-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LmiCertificate {
    pub x1: Vec<Vec<f64>>,
    pub y1: Vec<Vec<f64>>,
    pub an: Vec<Vec<f64>>,
    pub bn: Vec<Vec<f64>>,
    pub cn: Vec<Vec<f64>>,
    pub dn: Vec<Vec<f64>>,
    pub slack_x: Vec<Vec<f64>>,
    pub slack_y: Vec<Vec<f64>>,
    pub slack_z: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Certificates {
    pub status: String,
    pub iterations: usize,
    pub gamma0: f64,
    pub nu_certified: f64,
    pub nu_measured: f64,
    pub nu_reported: f64,
    pub hinf_measured: f64,
    pub j_certified: f64,
    pub j_measured: f64,
    pub certificate_margin: f64,
    pub history: Vec<HalfStep>,
    pub lmi: LmiCertificate,
}

impl Certificates {
    pub fn new(r: &SynthesisResult) -> Self {
        let m = |x: &DMatrix<f64>| rows_of(x);
        Self {
            status: status_name(r),
            iterations: r.iterations,
            gamma0: r.gamma0,
            nu_certified: r.nu_certified,
            nu_measured: r.nu_measured,
            nu_reported: r.nu_reported,
            hinf_measured: r.hinf_measured,
            j_certified: r.j_certified(),
            j_measured: r.j_measured(),
            certificate_margin: r.certificate_margin,
            history: r.history.clone(),
            lmi: LmiCertificate {
                x1: m(&r.vars.x1),
                y1: m(&r.vars.y1),
                an: m(&r.vars.an),
                bn: m(&r.vars.bn),
                cn: m(&r.vars.cn),
                dn: m(&r.vars.dn),
                slack_x: m(&r.slacks.x),
                slack_y: m(&r.slacks.y),
                slack_z: m(&r.slacks.z),
            },
        }
    }
}

fn status_name(r: &SynthesisResult) -> String {
    serde_json::to_value(r.status)
        .ok()
        .and_then(|v| v.as_str().map(String::from))
        .unwrap_or_default()
}

/// Norms of a filter in closed loop, as written by `analyze`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurements {
    pub hinf_disturbance: f64,
    pub hinf_peak_omega: f64,
    pub hminus_fault: f64,
    pub hminus_omega: f64,
    pub ratio: f64,
    pub scale: f64,
    pub post_scaled: bool,
    pub gamma0: Option<f64>,
}

impl Measurements {
    pub fn new(v: &Verification, scale: f64, post_scaled: bool, gamma0: Option<f64>) -> Self {
        Self {
            hinf_disturbance: v.hinf_disturbance,
            hinf_peak_omega: v.hinf_peak_omega,
            hminus_fault: v.hminus_fault,
            hminus_omega: v.hminus_omega,
            ratio: v.ratio,
            scale,
            post_scaled,
            gamma0,
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

/// Report header listing every tolerance in effect.
pub fn tolerance_header(cfg: &SynthesisConfig) -> String {
    let s = &cfg.solver;
    let mut out = String::new();
    writeln!(out, "tolerances:").unwrap();
    writeln!(out, "  mu (outer stop)         {:e}", cfg.mu).unwrap();
    writeln!(out, "  max outer iterations    {}", cfg.max_outer_iters).unwrap();
    writeln!(out, "  sdp gap_tol             {:e}", s.gap_tol).unwrap();
    writeln!(out, "  sdp feas_tol            {:e}", s.feas_tol).unwrap();
    writeln!(out, "  sdp max iterations      {}", s.max_iter).unwrap();
    match s.variable_bound {
        Some(b) => writeln!(out, "  variable bound          {b:e}").unwrap(),
        None => writeln!(out, "  variable bound          none").unwrap(),
    }
    writeln!(out, "  strictness margin       {STRICT_EPS:e} (relative)").unwrap();
    writeln!(out, "  norm tolerance          {:e}", cfg.norm_tol).unwrap();
    writeln!(out, "  report tolerance        {:e}", cfg.report_tol).unwrap();
    writeln!(out, "  minimal realization     {MINREAL_TOL:e}").unwrap();
    writeln!(out, "  recovery singularity    {RECOVERY_TOL:e}").unwrap();
    writeln!(out, "  completion singularity  {COMPLETION_TOL:e}").unwrap();
    out
}

pub fn synthesis_report(
    cfg: &SynthesisConfig,
    r: &SynthesisResult,
    solver: &str,
    dims: (usize, usize, usize),
) -> String {
    let mut out = String::new();
    writeln!(out, "fdisynth synthesis report").unwrap();
    writeln!(out, "solver: {solver}").unwrap();
    out.push_str(&tolerance_header(cfg));
    writeln!(out).unwrap();
    writeln!(
        out,
        "plant: n = {}, residual outputs = {}, measurements = {}",
        dims.0, dims.1, dims.2
    )
    .unwrap();
    writeln!(
        out,
        "channels: disturbance `{}`, fault `{}`, shared Lyapunov {}",
        cfg.disturbance_channel,
        cfg.fault_channel,
        if cfg.shared_lyapunov { "on" } else { "off" }
    )
    .unwrap();
    writeln!(
        out,
        "status: {} after {} iterations",
        status_name(r),
        r.iterations
    )
    .unwrap();
    writeln!(out, "gamma0 = {:.6}", r.gamma0).unwrap();
    if cfg.shared_lyapunov {
        writeln!(out, "nu certified = {:.6}", r.nu_certified).unwrap();
    } else {
        writeln!(
            out,
            "nu certified = {:.6} (relaxed LMI value, not a certificate)",
            r.nu_certified
        )
        .unwrap();
    }
    writeln!(out, "nu measured  = {:.6}", r.nu_measured).unwrap();
    writeln!(out, "nu reported  = {:.6}", r.nu_reported).unwrap();
    writeln!(
        out,
        "J = nu/gamma0 = {:.6} (measured ratio {:.6})",
        r.nu_reported / r.gamma0,
        r.j_measured()
    )
    .unwrap();
    writeln!(
        out,
        "||T_ed||_inf = {:.6} at w = {:.4}",
        r.verification.hinf_disturbance, r.verification.hinf_peak_omega
    )
    .unwrap();
    writeln!(
        out,
        "||T_ef||_-   = {:.6} at w = {:.4}",
        r.verification.hminus_fault, r.verification.hminus_omega
    )
    .unwrap();
    writeln!(out, "filter order = {}", r.filter.n()).unwrap();
    writeln!(out, "certificate margin = {:.3e}", r.certificate_margin).unwrap();
    writeln!(out).unwrap();
    writeln!(out, "iteration  step  nu^2          sdp iters  seconds").unwrap();
    for h in &r.history {
        writeln!(
            out,
            "{:>9}  {:>4}  {:<12.8}  {:>9}  {:.3}",
            h.iteration, h.step, h.nu2, h.solver_iterations, h.seconds
        )
        .unwrap();
    }
    out
}

pub fn analysis_report(m: &Measurements, order: usize, norm_tol: f64) -> String {
    let mut out = String::new();
    writeln!(out, "fdisynth analysis report").unwrap();
    writeln!(out, "tolerances:").unwrap();
    writeln!(out, "  norm tolerance          {norm_tol:e}").unwrap();
    writeln!(out, "  minimal realization     {MINREAL_TOL:e}").unwrap();
    writeln!(out).unwrap();
    writeln!(out, "filter order = {order}").unwrap();
    writeln!(out, "output scale = {}", m.scale).unwrap();
    writeln!(out, "post-scaled = {}", m.post_scaled).unwrap();
    if let Some(g) = m.gamma0 {
        writeln!(out, "gamma0 = {g:.6}").unwrap();
    }
    writeln!(
        out,
        "||T_ed||_inf = {:.6} at w = {:.4}",
        m.hinf_disturbance, m.hinf_peak_omega
    )
    .unwrap();
    writeln!(
        out,
        "||T_ef||_-   = {:.6} at w = {:.4}",
        m.hminus_fault, m.hminus_omega
    )
    .unwrap();
    writeln!(out, "J = {:.6}", m.ratio).unwrap();
    out
}
