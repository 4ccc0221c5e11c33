//! JSON reports for the rigid-body stability and Hopf analysis.
//!
//! All floating-point values are written with 17 significant digits, so a
//! report round-trips doubles exactly.

use num_complex::Complex;
use serde::ser::{SerializeStruct, Serializer};
use serde::Serialize;
use serde_json::value::RawValue;
use thiserror::Error;

use crate::hopf::{
    analyze_hopf, hopf_quantities, printed_a_coefficients, printed_normal_form, taylor_oracle, Direction, HopfAnalysis,
    HopfError, OrbitStability, W11Choice,
};
use crate::models::RigidBodyParams;
use crate::spectral::{
    branch_formula, coefficients, critical_delay, crossing_candidates, crossing_system, hopf_point,
    linearization_fd_error, linearize, tau_zero_roots, tracked_slope, transversality, transversality_closed_form,
    CoefficientVariant, HopfBranch, HopfPoint, SpectralCoefficients, SpectralError,
};

pub const SCHEMA_VERSION: &str = "1.0.0";

/// `f64` serialized with 17 significant digits (`null` when not finite).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct R17(pub f64);

impl Serialize for R17 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            let raw = RawValue::from_string(format!("{:.16e}", self.0)).map_err(serde::ser::Error::custom)?;
            raw.serialize(s)
        } else {
            s.serialize_none()
        }
    }
}

impl From<f64> for R17 {
    fn from(x: f64) -> Self {
        Self(x)
    }
}

/// Complex number as `{"re": …, "im": …}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct C17(pub Complex<f64>);

impl Serialize for C17 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Complex", 2)?;
        st.serialize_field("re", &R17(self.0.re))?;
        st.serialize_field("im", &R17(self.0.im))?;
        st.end()
    }
}

fn c3(v: &[Complex<f64>; 3]) -> [C17; 3] {
    [C17(v[0]), C17(v[1]), C17(v[2])]
}

fn r3(v: &[f64; 3]) -> [R17; 3] {
    [R17(v[0]), R17(v[1]), R17(v[2])]
}

/// Serializes any report with a trailing newline.
pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize infallibly");
    s.push('\n');
    s
}

// ---------------------------------------------------------------------------
// Published reference values

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PaperSet {
    pub inertia: [R17; 3],
    pub alpha: R17,
    pub m: R17,
    pub omega0: R17,
    pub tau0: R17,
    pub mu2: R17,
    pub t2: R17,
    pub beta2: R17,
    /// Branch formula the values are attributed to.
    pub branch: HopfBranch,
    /// The text calls both limit cycles supercritical.
    pub claimed_supercritical: bool,
}

pub const PAPER_SET_1: PaperSet = PaperSet {
    inertia: [R17(0.8), R17(0.5), R17(0.4)],
    alpha: R17(0.3),
    m: R17(1.5),
    omega0: R17(3.20631),
    tau0: R17(0.88154),
    mu2: R17(0.00958),
    t2: R17(0.00057),
    beta2: R17(-0.00139),
    branch: HopfBranch::CaseI,
    claimed_supercritical: true,
};

pub const PAPER_SET_2: PaperSet = PaperSet {
    inertia: [R17(0.8), R17(0.5), R17(0.4)],
    alpha: R17(0.3),
    m: R17(1.8),
    omega0: R17(0.68547),
    tau0: R17(0.88154),
    mu2: R17(0.00344),
    t2: R17(0.00050),
    beta2: R17(0.00097),
    branch: HopfBranch::CaseIi,
    claimed_supercritical: true,
};

#[derive(Debug, Clone, Serialize)]
pub struct PaperReferenceValues {
    pub set_1: PaperSet,
    pub set_2: PaperSet,
    /// Which printed set the analysed parameters coincide with, if any.
    pub matched_set: Option<&'static str>,
}

fn matches_set(p: &RigidBodyParams<f64>, set: &PaperSet) -> bool {
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12;
    (0..3).all(|i| close(p.inertia[i], set.inertia[i].0)) && close(p.alpha, set.alpha.0) && close(p.m, set.m.0)
}

#[derive(Debug, Clone, Serialize)]
pub struct Discrepancy {
    pub quantity: String,
    pub printed: R17,
    pub computed: R17,
    pub abs_gap: R17,
    pub rel_gap: R17,
    pub note: String,
}

impl Discrepancy {
    pub fn new(quantity: impl Into<String>, printed: f64, computed: f64, note: impl Into<String>) -> Self {
        let gap = computed - printed;
        let rel = if printed != 0.0 { gap.abs() / printed.abs() } else { f64::NAN };
        Self {
            quantity: quantity.into(),
            printed: R17(printed),
            computed: R17(computed),
            abs_gap: R17(gap.abs()),
            rel_gap: R17(rel),
            note: note.into(),
        }
    }
}

// ---------------------------------------------------------------------------
// Report structures

#[derive(Debug, Clone, Serialize)]
pub struct LinearizationReport {
    pub a: [[R17; 3]; 3],
    pub g: [[R17; 3]; 3],
    pub fd_max_error: R17,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoefficientReport {
    pub a: R17,
    pub b: R17,
    pub c: R17,
    pub variant: CoefficientVariant,
}

impl From<&SpectralCoefficients<f64>> for CoefficientReport {
    fn from(co: &SpectralCoefficients<f64>) -> Self {
        Self { a: R17(co.a), b: R17(co.b), c: R17(co.c), variant: co.variant }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BranchCandidate {
    pub branch: HopfBranch,
    pub omega0: R17,
    pub tau0: R17,
    /// Positive frequency and residual within tolerance.
    pub valid: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct HopfPointReport {
    pub omega0: R17,
    pub tau0: R17,
    pub branch: HopfBranch,
    pub prescribed_branch: HopfBranch,
    pub fallback_note: Option<String>,
    pub residual: R17,
    pub crossing_system_residuals: [R17; 2],
}

#[derive(Debug, Clone, Serialize)]
pub struct TransversalityReport {
    pub implicit: C17,
    pub tracked_slope: C17,
    pub tracking_relative_gap: R17,
    /// The printed closed form for `Re dλ/dτ`.
    pub closed_form: R17,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralReport {
    pub linearization: LinearizationReport,
    pub coefficients: CoefficientReport,
    pub determinant_coefficients: CoefficientReport,
    pub tau_c: R17,
    pub tau_zero_roots: [C17; 2],
    pub branch_candidates: Vec<BranchCandidate>,
    /// Every `(ω, τ)` solving the crossing condition, earliest delay first.
    pub crossing_scan: Vec<[R17; 2]>,
    pub hopf_point: Option<HopfPointReport>,
    pub transversality: Option<TransversalityReport>,
    /// `(τ, Re λ, Im λ)` samples along the continued root when no crossing exists.
    pub no_crossing_evidence: Option<Vec<[R17; 3]>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenReport {
    pub v: [C17; 3],
    pub w: [C17; 3],
    pub printed_w: [C17; 3],
    pub v_residual: R17,
    pub w_residual: R17,
    pub printed_w_residual: R17,
    pub printed_w_valid: bool,
    pub w_tilde: [C17; 3],
    pub a11: C17,
    pub a12: C17,
    pub b11: C17,
    pub b12: C17,
    pub printed_b11_consistent: bool,
    /// Printed closed forms for `a₁₁`, `a₁₂` evaluated with the printed adjoint.
    pub printed_a11: C17,
    pub printed_a12: C17,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub g21: C17,
    pub f20_1: C17,
    pub f11_1: C17,
    pub g21_relative_gap: R17,
}

#[derive(Debug, Clone, Serialize)]
pub struct NormalFormReport {
    pub f20: [C17; 3],
    pub f11: [C17; 3],
    pub f02: [C17; 3],
    pub f21: [C17; 3],
    pub w20: [C17; 3],
    pub w11: [C17; 3],
    pub w20_closed_form: C17,
    pub w20_casimir: C17,
    pub w11_choice: W11Choice,
    pub g20: C17,
    pub g11: C17,
    pub g02: C17,
    pub g21: C17,
    pub oracle: OracleReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct QuantitiesReport {
    pub g21: C17,
    pub c1: C17,
    pub mu2: R17,
    pub t2: R17,
    pub beta2: R17,
    pub direction: Direction,
    pub stability: OrbitStability,
}

fn quantities_report(g21: Complex<f64>, trans: Complex<f64>, omega0: f64) -> Option<QuantitiesReport> {
    let q = hopf_quantities(g21, trans, omega0).ok()?;
    Some(QuantitiesReport {
        g21: C17(g21),
        c1: C17(q.c1),
        mu2: R17(q.mu2),
        t2: R17(q.t2),
        beta2: R17(q.beta2),
        direction: q.direction,
        stability: q.stability,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PrintedFormulasReport {
    pub f20_1: C17,
    pub f11_1: C17,
    pub f02_1: C17,
    pub w20_1: C17,
    pub f21: [C17; 3],
    pub quantities: Option<QuantitiesReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct HopfReport {
    pub eigen: EigenReport,
    pub normal_form: NormalFormReport,
    pub g21: C17,
    #[serde(rename = "C1")]
    pub c1: C17,
    pub mu2: R17,
    #[serde(rename = "T2")]
    pub t2: R17,
    pub beta2: R17,
    pub direction: Direction,
    pub stability: OrbitStability,
    /// Leading-order period at `τ = 1.1 τ₀`.
    pub predicted_period_at_1_1_tau0: R17,
    pub w11_zero_variant: Option<QuantitiesReport>,
    pub printed_formulas_variant: PrintedFormulasReport,
    pub paper_reference: Option<PaperSet>,
    pub discrepancy_notes: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ParameterReport {
    pub inertia: [R17; 3],
    pub alpha: R17,
    pub m: R17,
    pub variant: CoefficientVariant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalysisStatus {
    Ok,
    NoCrossing,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub schema_version: &'static str,
    pub status: AnalysisStatus,
    pub parameters: ParameterReport,
    pub spectral: SpectralReport,
    pub hopf: Option<HopfReport>,
    pub paper_reference_values: PaperReferenceValues,
    pub discrepancies: Vec<Discrepancy>,
    pub notes: Vec<String>,
}

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("{0}")]
    Hypothesis(SpectralError),
    #[error("{0}")]
    Numerical(String),
}

fn matrix3(m: &crate::linalg::Matrix<f64>) -> [[R17; 3]; 3] {
    let mut out = [[R17(0.0); 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = R17(m[(i, j)]);
        }
    }
    out
}

fn hypothesis_or_numeric(e: SpectralError) -> AnalysisError {
    match e {
        SpectralError::Hypothesis(_) | SpectralError::ZeroMomentum | SpectralError::Model(_) => {
            AnalysisError::Hypothesis(e)
        }
        other => AnalysisError::Numerical(other.to_string()),
    }
}

/// Runs linearization → characteristic equation → Hopf point →
/// transversality → normal form, and collects the comparison with the
/// printed numbers.
pub fn analyze(p: &RigidBodyParams<f64>, variant: CoefficientVariant) -> Result<AnalysisReport, AnalysisError> {
    let lin = linearize(p).map_err(hypothesis_or_numeric)?;
    let tau_c = critical_delay(p).map_err(hypothesis_or_numeric)?;
    let co = coefficients(p, variant).map_err(hypothesis_or_numeric)?;
    let co_det = coefficients(p, CoefficientVariant::Determinant).map_err(hypothesis_or_numeric)?;
    let fd = linearization_fd_error(p, 1e-5).map_err(hypothesis_or_numeric)?;
    let mut notes = Vec::new();
    let mut discrepancies = Vec::new();

    let branch_candidates: Vec<BranchCandidate> = [HopfBranch::CaseI, HopfBranch::CaseIi]
        .into_iter()
        .filter_map(|b| {
            let (w, t) = branch_formula(&co, b).ok()?;
            let (e1, e2) = crossing_system(w, t, &co);
            let valid = w > 0.0 && e1.abs() <= 1e-10 && e2.abs() <= 1e-10;
            Some(BranchCandidate { branch: b, omega0: R17(w), tau0: R17(t), valid })
        })
        .collect();

    let roots = tau_zero_roots(&co);
    let scan = crossing_candidates(&co);
    let mut spectral = SpectralReport {
        linearization: LinearizationReport { a: matrix3(&lin.a), g: matrix3(&lin.g), fd_max_error: R17(fd) },
        coefficients: (&co).into(),
        determinant_coefficients: (&co_det).into(),
        tau_c: R17(tau_c),
        tau_zero_roots: [C17(roots[0]), C17(roots[1])],
        branch_candidates,
        crossing_scan: scan.iter().map(|&(w, t)| [R17(w), R17(t)]).collect(),
        hopf_point: None,
        transversality: None,
        no_crossing_evidence: None,
    };

    let matched = if matches_set(p, &PAPER_SET_1) {
        Some(("set_1", PAPER_SET_1))
    } else if matches_set(p, &PAPER_SET_2) {
        Some(("set_2", PAPER_SET_2))
    } else {
        None
    };
    let paper_reference_values =
        PaperReferenceValues { set_1: PAPER_SET_1, set_2: PAPER_SET_2, matched_set: matched.map(|m| m.0) };
    let parameters = ParameterReport { inertia: r3(&p.inertia), alpha: R17(p.alpha), m: R17(p.m), variant };

    if variant == CoefficientVariant::Paper {
        discrepancies.push(Discrepancy::new(
            "coefficient a",
            co.a,
            co_det.a,
            "printed closed form carries an extra 1/I1 relative to the determinant of the linearization",
        ));
    }

    let hp = match hopf_point(&co, p.m, p.alpha) {
        Ok(hp) => hp,
        Err(SpectralError::NoCrossing { evidence, .. }) => {
            spectral.no_crossing_evidence =
                Some(evidence.iter().map(|&(t, re, im)| [R17(t), R17(re), R17(im)]).collect());
            notes.push("no imaginary-axis crossing found along the continued zero-delay root".into());
            if let Some((_, set)) = matched {
                paper_structure_discrepancies(&set, tau_c, &mut discrepancies);
            }
            return Ok(AnalysisReport {
                schema_version: SCHEMA_VERSION,
                status: AnalysisStatus::NoCrossing,
                parameters,
                spectral,
                hopf: None,
                paper_reference_values,
                discrepancies,
                notes,
            });
        }
        Err(e) => return Err(hypothesis_or_numeric(e)),
    };
    if let Some(note) = &hp.fallback_note {
        notes.push(format!("branch rule fallback: {note}"));
    }
    if let Some(&(w, t)) = scan.first() {
        if t < hp.tau0 * (1.0 - 1e-9) {
            notes.push(format!(
                "a root reaches the imaginary axis earlier, at tau = {t} with omega = {w}; the selected point is not the first loss of stability"
            ));
        }
    }
    let (e1, e2) = crossing_system(hp.omega0, hp.tau0, &co);
    spectral.hopf_point = Some(HopfPointReport {
        omega0: R17(hp.omega0),
        tau0: R17(hp.tau0),
        branch: hp.branch,
        prescribed_branch: hp.prescribed,
        fallback_note: hp.fallback_note.clone(),
        residual: R17(hp.residual),
        crossing_system_residuals: [R17(e1), R17(e2)],
    });
    if hp.tau0 > tau_c {
        notes.push(format!("computed tau0 = {} exceeds tau_c = {}, as the stability bound requires", hp.tau0, tau_c));
    } else {
        notes.push(format!("computed tau0 = {} does not exceed tau_c = {}", hp.tau0, tau_c));
    }

    let trans = transversality(&co, &hp).map_err(|e| AnalysisError::Numerical(e.to_string()))?;
    let slope = tracked_slope(&co, &hp, 1e-4).map_err(|e| AnalysisError::Numerical(e.to_string()))?;
    let closed = transversality_closed_form(&co, &hp);
    spectral.transversality = Some(TransversalityReport {
        implicit: C17(trans),
        tracked_slope: C17(slope),
        tracking_relative_gap: R17((slope.re - trans.re).abs() / trans.re.abs()),
        closed_form: R17(closed),
    });
    if (closed - trans.re).abs() > 1e-8 * trans.re.abs() {
        discrepancies.push(Discrepancy::new(
            "Re dlambda/dtau",
            closed,
            trans.re,
            "printed closed form versus implicit differentiation of the characteristic function",
        ));
    }

    if let Some((_, set)) = matched {
        paper_structure_discrepancies(&set, tau_c, &mut discrepancies);
        discrepancies.push(Discrepancy::new("omega0", set.omega0.0, hp.omega0, "Hopf frequency"));
        discrepancies.push(Discrepancy::new("tau0", set.tau0.0, hp.tau0, "Hopf delay"));
        if let Ok((w, _)) = branch_formula(&co, set.branch) {
            discrepancies.push(Discrepancy::new(
                "omega0 (attributed branch formula)",
                set.omega0.0,
                w,
                format!("frequency of the {:?} branch formula the printed value is attributed to", set.branch),
            ));
        }
    }

    let hopf = if variant == CoefficientVariant::Determinant {
        match hopf_report(p, &hp, trans, matched.map(|m| m.1), &mut discrepancies) {
            Ok(r) => Some(r),
            Err(e) => {
                notes.push(format!("normal form not computed: {e}"));
                None
            }
        }
    } else {
        notes.push("normal form is computed only with the determinant coefficients".into());
        None
    };

    Ok(AnalysisReport {
        schema_version: SCHEMA_VERSION,
        status: AnalysisStatus::Ok,
        parameters,
        spectral,
        hopf,
        paper_reference_values,
        discrepancies,
        notes,
    })
}

fn paper_structure_discrepancies(set: &PaperSet, tau_c: f64, out: &mut Vec<Discrepancy>) {
    let product = set.omega0.0 * set.tau0.0;
    let required = match set.branch {
        HopfBranch::CaseIi => 1.5 * std::f64::consts::PI,
        _ => std::f64::consts::FRAC_PI_2,
    };
    out.push(Discrepancy::new(
        "omega0*tau0 (printed pair)",
        product,
        required,
        "the attributed branch formula fixes omega0*tau0; the printed pair violates it",
    ));
    out.push(Discrepancy::new(
        "tau0 versus tau_c",
        set.tau0.0,
        tau_c,
        if set.tau0.0 < tau_c {
            "printed tau0 lies below the critical delay, inside the region of proven stability"
        } else {
            "printed tau0 lies above the critical delay"
        },
    ));
}

fn hopf_report(
    p: &RigidBodyParams<f64>,
    hp: &HopfPoint<f64>,
    trans: Complex<f64>,
    paper: Option<PaperSet>,
    discrepancies: &mut Vec<Discrepancy>,
) -> Result<HopfReport, HopfError> {
    let HopfAnalysis { eigen, normal_form: nf, quantities: q } = analyze_hopf(p, hp, trans, W11Choice::Casimir)?;
    let oracle = taylor_oracle(p, hp, &eigen, W11Choice::Casimir)?;
    let zero_variant = analyze_hopf(p, hp, trans, W11Choice::Zero).ok();
    let printed = printed_normal_form(p, &eigen);
    let (pa11, pa12) = printed_a_coefficients(p, &eigen, &eigen.printed_w);
    let mut notes = eigen.notes.clone();
    if nf.f11[0].norm() > 1e-10 * nf.f20[0].norm().max(1.0) {
        notes.push(format!("F11 first component {} is not negligible", nf.f11[0]));
    }
    if let Some(z) = &zero_variant {
        notes.push(format!(
            "with w11 = 0 the normal form gives mu2 = {:.6e}, beta2 = {:.6e}; the orbit-constrained w11 gives mu2 = {:.6e}, beta2 = {:.6e}",
            z.quantities.mu2, z.quantities.beta2, q.mu2, q.beta2
        ));
    }
    if let Some(set) = paper {
        discrepancies.push(Discrepancy::new("mu2", set.mu2.0, q.mu2, "direction coefficient"));
        discrepancies.push(Discrepancy::new("T2", set.t2.0, q.t2, "period coefficient"));
        discrepancies.push(Discrepancy::new("beta2", set.beta2.0, q.beta2, "stability coefficient"));
        if set.claimed_supercritical && set.beta2.0 > 0.0 {
            notes.push(format!(
                "printed beta2 = {} > 0 would make the orbit unstable, yet the text calls the cycle supercritical and stable; computed beta2 = {:.6e}, mu2 = {:.6e}",
                set.beta2.0, q.beta2, q.mu2
            ));
        }
    }
    let period = crate::hopf::predicted_period(&q, hp.omega0, hp.tau0, 1.1 * hp.tau0);
    Ok(HopfReport {
        eigen: EigenReport {
            v: c3(&eigen.v),
            w: c3(&eigen.w),
            printed_w: c3(&eigen.printed_w),
            v_residual: R17(eigen.v_residual),
            w_residual: R17(eigen.w_residual),
            printed_w_residual: R17(eigen.printed_w_residual),
            printed_w_valid: eigen.printed_w_valid,
            w_tilde: c3(&eigen.w_tilde),
            a11: C17(eigen.a11),
            a12: C17(eigen.a12),
            b11: C17(eigen.b11),
            b12: C17(eigen.b12),
            printed_b11_consistent: eigen.printed_b11_consistent,
            printed_a11: C17(pa11),
            printed_a12: C17(pa12),
        },
        normal_form: NormalFormReport {
            f20: c3(&nf.f20),
            f11: c3(&nf.f11),
            f02: c3(&nf.f02),
            f21: c3(&nf.f21),
            w20: c3(&nf.w20),
            w11: c3(&nf.w11),
            w20_closed_form: C17(nf.w20_closed_form),
            w20_casimir: C17(nf.w20_casimir),
            w11_choice: nf.w11_choice,
            g20: C17(nf.g20),
            g11: C17(nf.g11),
            g02: C17(nf.g02),
            g21: C17(nf.g21),
            oracle: OracleReport {
                g21: C17(oracle.g21),
                f20_1: C17(oracle.f20[0]),
                f11_1: C17(oracle.f11[0]),
                g21_relative_gap: R17((oracle.g21 - nf.g21).norm() / nf.g21.norm()),
            },
        },
        g21: C17(nf.g21),
        c1: C17(q.c1),
        mu2: R17(q.mu2),
        t2: R17(q.t2),
        beta2: R17(q.beta2),
        direction: q.direction,
        stability: q.stability,
        predicted_period_at_1_1_tau0: R17(period),
        w11_zero_variant: zero_variant.and_then(|z| quantities_report(z.normal_form.g21, trans, hp.omega0)),
        printed_formulas_variant: PrintedFormulasReport {
            f20_1: C17(printed.f20_1),
            f11_1: C17(printed.f11_1),
            f02_1: C17(printed.f02_1),
            w20_1: C17(printed.w20_1),
            f21: c3(&printed.f21),
            quantities: quantities_report(printed.g21, trans, hp.omega0),
        },
        paper_reference: paper,
        discrepancy_notes: notes,
    })
}
