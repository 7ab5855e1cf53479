//! Assembles report sections by driving the verification routines of the
//! core crate. Numeric failures surface as failed items, never as crashes;
//! only malformed input aborts a run.

use std::time::Instant;

use jetcalc_core::chart::{make_chart, BundleSpec, CoordMap, SpaceKind};
use jetcalc_core::expr::Expr;
use jetcalc_core::forms::{canonical_omega_expanded, forms_equivalent, pullback};
use jetcalc_core::lagrangian::{
    classify_regularity, hessian, legendre_jacobian, omega_l_expanded, poincare_cartan,
    Classification, DetVerdict, LagrangianError, LagrangianSystem, PoincareCartanKind,
};
use jetcalc_core::legendre::{
    hamiltonian_symbolic, hamiltonian_value, invert_reduced, legendre_map, round_trip_error,
    verify_diagram, verify_pullbacks, verify_tautology, LegendreKind, VerifyMode,
};
use jetcalc_core::numeric::{
    nondegeneracy_check, sample_points, SampleConfig, DEFAULT_PIVOT_TOL,
};
use jetcalc_core::rng::SplitMix64;
use jetcalc_core::{
    canonical_form, canonical_map, dimension_table, equivalence_check, CanonicalFormKind,
    CanonicalMapKind, Chart, Equivalence, IdentityReport,
};

use crate::report::{CheckItem, CheckSection, Report, Status};
use crate::runspec::{InputError, RunSpec};

#[derive(Debug)]
pub enum CliError {
    Input(InputError),
    Lagrangian(LagrangianError),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(e) => write!(f, "{e}"),
            CliError::Lagrangian(e) => write!(f, "invalid Lagrangian: {e}"),
        }
    }
}

impl From<InputError> for CliError {
    fn from(e: InputError) -> Self {
        CliError::Input(e)
    }
}

impl From<LagrangianError> for CliError {
    fn from(e: LagrangianError) -> Self {
        CliError::Lagrangian(e)
    }
}

pub fn build_system(spec: &RunSpec) -> Result<LagrangianSystem, CliError> {
    let src = spec.lagrangian_src()?;
    Ok(jetcalc_core::load_system(spec.bundle, src, spec.name.clone())?)
}

/// Runs every toggled check and assembles the full report.
pub fn run_check(spec: &RunSpec, with_timings: bool) -> Result<Report, CliError> {
    let system = build_system(spec)?;
    let mut sections = Vec::new();
    let mut push = |section: CheckSection| sections.push(section);

    let timed = |name: &str,
                 with_timings: bool,
                 body: &mut dyn FnMut() -> Result<Vec<CheckItem>, String>|
     -> CheckSection {
        let start = Instant::now();
        let mut section = match body() {
            Ok(items) => CheckSection::new(name, items),
            Err(message) => CheckSection::new(
                name,
                vec![CheckItem::new("internal failure", Status::Fail).with_detail(message)],
            ),
        };
        if with_timings {
            section.elapsed_ms = Some(start.elapsed().as_secs_f64() * 1e3);
        }
        section
    };

    if spec.toggles.dimensions {
        push(timed("dimensions", with_timings, &mut || {
            Ok(dimension_items(&spec.bundle))
        }));
    }
    if spec.toggles.canonical_forms {
        push(timed("canonical-forms", with_timings, &mut || {
            canonical_form_items(spec, &system).map_err(|e| e.to_string())
        }));
    }
    if spec.toggles.diagram {
        push(timed("diagram", with_timings, &mut || {
            let report = verify_diagram(&system, spec.samples, spec.tol, spec.seed)
                .map_err(|e| e.to_string())?;
            Ok(identity_items(&report))
        }));
    }
    if spec.toggles.pullbacks {
        push(timed("pullbacks", with_timings, &mut || {
            let report =
                verify_pullbacks(&system, VerifyMode::Symbolic, spec.samples, spec.tol, spec.seed)
                    .map_err(|e| e.to_string())?;
            Ok(identity_items(&report))
        }));
    }
    if spec.toggles.tautology {
        push(timed("tautology", with_timings, &mut || {
            tautology_items(spec).map_err(|e| e.to_string())
        }));
    }

    let mut classification = None;
    if spec.toggles.regularity {
        push(timed("regularity", with_timings, &mut || {
            let (items, class) = regularity_items(spec, &system).map_err(|e| e.to_string())?;
            classification = Some(class);
            Ok(items)
        }));
    }
    if spec.toggles.inversion {
        let class = match classification {
            Some(c) => c,
            None => classify_regularity(&system, 10, DEFAULT_PIVOT_TOL, spec.seed)
                .map(|r| r.classification)
                .unwrap_or(Classification::Indeterminate),
        };
        push(timed("inversion", with_timings, &mut || {
            inversion_items(spec, &system, class).map_err(|e| e.to_string())
        }));
    }

    Ok(Report::new(spec, sections))
}

pub fn dimension_items(bundle: &BundleSpec) -> Vec<CheckItem> {
    let table = dimension_table(bundle);
    let mut items = Vec::new();
    for (kind, dim) in &table.dims {
        items.push(CheckItem::new(format!("dim {kind}"), Status::Info).with_detail(dim.to_string()));
    }
    for relation in &table.relations {
        let status = if relation.pass { Status::Pass } else { Status::Fail };
        items.push(
            CheckItem::new(relation.name.clone(), status)
                .with_detail(format!("{} = {}", relation.lhs, relation.rhs)),
        );
    }
    items
}

pub fn dimension_report(spec: &RunSpec, with_timings: bool) -> Report {
    let start = Instant::now();
    let mut section = CheckSection::new("dimensions", dimension_items(&spec.bundle));
    if with_timings {
        section.elapsed_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    }
    Report::new(spec, vec![section])
}

fn identity_items(report: &IdentityReport) -> Vec<CheckItem> {
    report
        .checks
        .iter()
        .map(|check| CheckItem::from_equivalence(&check.name, &check.verdict))
        .collect()
}

fn canonical_form_items(
    spec: &RunSpec,
    system: &LagrangianSystem,
) -> Result<Vec<CheckItem>, LagrangianError> {
    let bundle = &spec.bundle;
    let mut items = Vec::new();

    for space in [SpaceKind::MPi, SpaceKind::J1EStar] {
        let omega = canonical_form(space, CanonicalFormKind::Omega, bundle)?;
        let expanded = canonical_omega_expanded(space, bundle)?;
        let verdict = forms_equivalent(&omega, &expanded, spec.samples, spec.tol, spec.seed)?;
        items.push(CheckItem::from_equivalence(
            format!("Omega({space}) = expanded coordinate expression"),
            &verdict,
        ));
    }

    let theta = canonical_form(SpaceKind::MPi, CanonicalFormKind::Theta, bundle)?;
    let theta_hat = canonical_form(SpaceKind::J1EStar, CanonicalFormKind::Theta, bundle)?;
    let iota0 = canonical_map(CanonicalMapKind::Iota0, bundle);
    let pulled = pullback(&iota0, &theta)?;
    let verdict = forms_equivalent(&pulled, &theta_hat, spec.samples, spec.tol, spec.seed)?;
    items.push(CheckItem::from_equivalence(
        "iota0* Theta = ThetaHat (p0 = trace substitution)",
        &verdict,
    ));

    // 1-nondegeneracy of Omega on Mpi at sampled points.
    let omega = canonical_form(SpaceKind::MPi, CanonicalFormKind::Omega, bundle)?;
    let chart = make_chart(SpaceKind::MPi, bundle);
    let count = spec.samples.clamp(1, 100);
    let points = sample_points(
        &chart,
        &SampleConfig {
            count,
            seed: spec.seed,
            range: spec.range,
            forced: Vec::new(),
        },
    );
    let mut max_kernel = 0usize;
    for point in &points {
        let (kernel, _) = nondegeneracy_check(&omega, point, DEFAULT_PIVOT_TOL)?;
        max_kernel = max_kernel.max(kernel);
    }
    items.push(
        CheckItem::new(
            "Omega(Mpi) 1-nondegenerate at sampled points",
            if max_kernel == 0 { Status::Pass } else { Status::Fail },
        )
        .with_detail(format!("max kernel dimension {max_kernel} over {count} points")),
    );

    // The Poincaré–Cartan (m+1)-form against its expanded expression.
    let omega_l = poincare_cartan(system, PoincareCartanKind::OmegaL);
    let expanded = omega_l_expanded(system);
    let verdict = forms_equivalent(&omega_l, &expanded, spec.samples, spec.tol, spec.seed)?;
    items.push(CheckItem::from_equivalence(
        "Omega_L = expanded coordinate formula",
        &verdict,
    ));
    Ok(items)
}

/// Random polynomial in the chart coordinates with small integer
/// coefficients, for section generation.
fn random_poly(rng: &mut SplitMix64, chart: &Chart, terms: usize, degree: u32) -> Expr {
    let mut acc = Expr::int((rng.next_u64() % 7) as i64 - 3);
    for _ in 0..terms {
        let mut term = Expr::int((rng.next_u64() % 7) as i64 - 3);
        for _ in 0..degree {
            let coord = chart.coord((rng.next_u64() % chart.dim() as u64) as usize);
            term = term * Expr::var(coord);
        }
        acc = acc + term;
    }
    acc
}

fn random_section(rng: &mut SplitMix64, bundle: &BundleSpec, space: SpaceKind) -> CoordMap {
    let e_chart = make_chart(SpaceKind::E, bundle);
    let target = make_chart(space, bundle);
    let components = target
        .coords()
        .iter()
        .map(|coord| {
            if e_chart.contains(coord) {
                Expr::var(coord)
            } else {
                random_poly(rng, &e_chart, 2, 2)
            }
        })
        .collect();
    CoordMap::new(e_chart, target, components).expect("section components live on E")
}

fn tautology_items(spec: &RunSpec) -> Result<Vec<CheckItem>, jetcalc_core::LegendreError> {
    let mut items = Vec::new();
    let mut rng = SplitMix64::new(spec.seed ^ 0x7461_7574);
    for space in [SpaceKind::MPi, SpaceKind::J1EStar] {
        for index in 0..3 {
            let section = random_section(&mut rng, &spec.bundle, space);
            let report = verify_tautology(
                &spec.bundle,
                space,
                &section,
                spec.samples,
                spec.tol,
                spec.seed,
            )?;
            for check in &report.checks {
                items.push(CheckItem::from_equivalence(
                    format!("{space} section #{index}: {}", check.name),
                    &check.verdict,
                ));
            }
        }
    }
    Ok(items)
}

fn regularity_items(
    spec: &RunSpec,
    system: &LagrangianSystem,
) -> Result<(Vec<CheckItem>, Classification), LagrangianError> {
    let report = classify_regularity(system, spec.samples, DEFAULT_PIVOT_TOL, spec.seed)?;
    let mut items = Vec::new();

    let class_detail = match report.classification {
        Classification::Regular if report.sampled_only => "Regular (sampled-only)".to_string(),
        Classification::Regular => "Regular (symbolic determinant)".to_string(),
        Classification::SingularConstantRank(r) => format!("SingularConstantRank({r})"),
        Classification::SingularVariableRank => "SingularVariableRank".to_string(),
        Classification::Indeterminate => "Indeterminate".to_string(),
    };
    let class_status = if spec.require_regular && report.classification != Classification::Regular
    {
        Status::Fail
    } else {
        Status::Info
    };
    items.push(CheckItem::new("classification", class_status).with_detail(class_detail));

    let det_detail = match (&report.det, report.det_verdict) {
        (Some(det), DetVerdict::NonzeroConstant) => format!("nonzero constant: {det}"),
        (Some(_), DetVerdict::ZeroConstant) => "identically zero".to_string(),
        (Some(det), DetVerdict::Indeterminate) => format!("non-constant: {det}"),
        (None, _) => "skipped (Hessian too large to expand)".to_string(),
    };
    items.push(CheckItem::new("symbolic Hessian determinant", Status::Info).with_detail(det_detail));
    items.push(
        CheckItem::new("hyper-regularity", Status::Info)
            .with_detail(report.hyper_regular.label()),
    );
    items.push(
        CheckItem::new("almost-regular candidate", Status::Info).with_detail(format!(
            "{} (fiber connectedness: {})",
            report.almost_regular_candidate, report.connectedness
        )),
    );

    let mut ranks: Vec<usize> = report.sampled_ranks.iter().map(|(_, r)| *r).collect();
    ranks.sort_unstable();
    ranks.dedup();
    items.push(
        CheckItem::new("sampled rank profile", Status::Info).with_detail(format!(
            "ranks {:?} over {} points",
            ranks,
            report.sampled_ranks.len()
        )),
    );

    // Hessian symmetry, proved entrywise.
    let h = hessian(system);
    let mut symmetric = true;
    'outer: for i in 0..h.len() {
        for j in 0..i {
            if !equivalence_check(&h[i][j], &h[j][i], spec.samples.clamp(1, 20), spec.tol, spec.seed)
                .map_err(|e| LagrangianError::DomainAt {
                    point: Default::default(),
                    source: e,
                })?
                .holds()
            {
                symmetric = false;
                break 'outer;
            }
        }
    }
    items.push(CheckItem::new(
        "Hessian symmetry",
        if symmetric { Status::Pass } else { Status::Fail },
    ));

    // Tangent-map block structure.
    let jacobian = legendre_jacobian(system);
    let offset = spec.bundle.base_dim() + spec.bundle.fiber_dim();
    let nm = spec.bundle.base_dim() * spec.bundle.fiber_dim();
    let block_matches = (0..nm).all(|i| (0..nm).all(|j| jacobian[offset + i][offset + j] == h[i][j]));
    items.push(CheckItem::new(
        "tangent-map lower-right block = Hessian",
        if block_matches { Status::Pass } else { Status::Fail },
    ));

    // Pointwise Hessian rank vs Omega_L kernel. For base dimension 1 the
    // kernel always contains the evolution direction at regular points, so
    // only the forced probes gate the verdict there.
    let field_theory = spec.bundle.base_dim() >= 2;
    let mut gated = true;
    let mut informational_mismatch = false;
    for record in &report.consistency {
        if !record.consistent {
            if field_theory || record.forced_probe {
                gated = false;
            } else {
                informational_mismatch = true;
            }
        }
    }
    let mut item = CheckItem::new(
        "Hessian rank matches Omega_L kernel test",
        if gated { Status::Pass } else { Status::Fail },
    )
    .with_detail(format!("{} points checked", report.consistency.len()));
    if informational_mismatch {
        item = item.with_detail(
            "checked at forced probes; for base dimension 1 the kernel of Omega_L \
             contains the evolution direction at regular points, so the kernel test \
             matches the Hessian only at the probes",
        );
    }
    items.push(item);

    Ok((items, report.classification))
}

fn inversion_items(
    spec: &RunSpec,
    system: &LagrangianSystem,
    classification: Classification,
) -> Result<Vec<CheckItem>, LagrangianError> {
    let mut items = Vec::new();
    let newton_iterations = 50;

    if classification == Classification::Regular {
        let chart = make_chart(SpaceKind::J1E, &spec.bundle);
        let count = spec.samples.clamp(1, 50);
        let points = sample_points(
            &chart,
            &SampleConfig {
                count,
                seed: spec.seed.wrapping_add(1),
                range: spec.range,
                forced: Vec::new(),
            },
        );
        let mut max_err = 0.0f64;
        let mut failure: Option<String> = None;
        for point in &points {
            match round_trip_error(system, point, newton_iterations, spec.tol.min(1e-10)) {
                Ok(err) => max_err = max_err.max(err),
                Err(e) => {
                    failure = Some(e.to_string());
                    break;
                }
            }
        }
        let item = match failure {
            Some(message) => {
                CheckItem::new("Legendre round trip", Status::Fail).with_detail(message)
            }
            None => CheckItem::new(
                "Legendre round trip",
                if max_err <= 1e-8 { Status::Pass } else { Status::Fail },
            )
            .with_detail(format!("max velocity error {max_err:.2e} over {count} points")),
        };
        items.push(item);
    } else {
        items.push(
            CheckItem::new("Legendre round trip", Status::Skipped)
                .with_detail(format!("system is not regular ({classification:?})")),
        );
    }

    if let Some(target) = &spec.invert_target {
        match invert_reduced(
            system,
            target,
            &Default::default(),
            newton_iterations,
            spec.tol,
        ) {
            Ok(point) => {
                let velocities: Vec<String> = point
                    .iter()
                    .filter(|(name, _)| name.starts_with('v'))
                    .map(|(name, value)| format!("{name} = {value}"))
                    .collect();
                items.push(
                    CheckItem::new("invert target", Status::Pass)
                        .with_detail(velocities.join(", ")),
                );
                match hamiltonian_value(system, target, &Default::default(), spec.tol) {
                    Ok(h) => {
                        let mut item = CheckItem::new("Hamiltonian value", Status::Info)
                            .with_detail(format!("H = {h}"));
                        if let Some(symbolic) = hamiltonian_symbolic(system) {
                            let mut full = target.clone();
                            for coord in make_chart(SpaceKind::Pi, &spec.bundle).coords() {
                                full.entry(coord.clone()).or_insert(0.0);
                            }
                            if let Ok(expected) = symbolic.evaluate(&full) {
                                let consistent = (h - expected).abs() <= spec.tol * (1.0 + h.abs());
                                item = CheckItem::new(
                                    "Hamiltonian value",
                                    if consistent { Status::Pass } else { Status::Fail },
                                )
                                .with_detail(format!(
                                    "H = {h}, closed form {} gives {expected}",
                                    symbolic
                                ));
                            }
                        }
                        items.push(item);
                    }
                    Err(e) => items.push(
                        CheckItem::new("Hamiltonian value", Status::Fail).with_detail(e.to_string()),
                    ),
                }
            }
            Err(e) => {
                items.push(CheckItem::new("invert target", Status::Fail).with_detail(e.to_string()));
            }
        }
    }
    Ok(items)
}

/// Items for the `legendre` command: the five maps in coordinates.
pub fn legendre_items(system: &LagrangianSystem) -> Vec<CheckItem> {
    let mut items = Vec::new();
    for kind in LegendreKind::ALL {
        let map = legendre_map(system, kind);
        let components: Vec<String> = map
            .components()
            .map(|(coord, expr)| format!("{coord} = {expr}"))
            .collect();
        items.push(
            CheckItem::new(
                format!("{} : J1E -> {}", kind.label(), kind.target_space()),
                Status::Info,
            )
            .with_detail(components.join(";  ")),
        );
    }
    items
}
