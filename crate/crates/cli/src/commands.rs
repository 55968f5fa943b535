//! The six commands. Each one appends checks and artifacts to a
//! [`RunSummary`]; `verify` chains the stages of the others.

use bipotential::conjugate::{biconjugate, conjugate_fast, ConjugatePath};
use bipotential::covers::{cover_union_graph, Cover, StarMode};
use bipotential::csvio::{self, format_ext, format_real};
use bipotential::extgrid::sample;
use bipotential::fancheck::{check_fan_bic, minimax_verify, BicReport, MinimaxReport};
use bipotential::graphs::{bb_check, graphs_equal, OperatorGraph};
use bipotential::synth::{extract_graph, synth_table, verify_axioms, BipotentialTable};

use crate::config::RunConfig;
use crate::summary::RunSummary;
use crate::CliError;

fn core<T>(r: bipotential::Result<T>) -> Result<T, CliError> {
    r.map_err(CliError::from_core)
}

fn build_cover(cfg: &RunConfig, s: &mut RunSummary) -> Result<Cover, CliError> {
    let spec = cfg.cover_spec()?;
    let (xg, yg) = (cfg.xgrid()?, cfg.ygrid()?);
    let cover = s.timed("cover", || spec.build(&xg, &yg)).map_err(CliError::from_core)?;
    let kind = match spec {
        bipotential::CoverSpec::QuadraticFan { .. } => "quadratic_fan",
        bipotential::CoverSpec::Singleton { .. } => "singleton",
        bipotential::CoverSpec::Tabulated { .. } => "tabulated",
    };
    s.info("cover", kind);
    s.info("parameters", cover.len());
    s.info(
        "stars",
        match cover.star_mode() {
            StarMode::ClosedForm => "closed_form",
            StarMode::Computed => "computed",
        },
    );
    s.info("xgrid", format!("[{}, {}] n={}", xg.lo(), xg.hi(), xg.len()));
    s.info("ygrid", format!("[{}, {}] n={}", yg.lo(), yg.hi(), yg.len()));
    let stats = cover.continuity_stats();
    s.info("max_jump_phi", format_real(stats.max_jump_phi));
    s.info("max_jump_phi_star", format_real(stats.max_jump_phi_star));
    Ok(cover)
}

pub fn cmd_conjugate(cfg: &RunConfig, s: &mut RunSummary) -> Result<(), CliError> {
    let spec = cfg.function_spec()?;
    let (xg, yg) = (cfg.xgrid()?, cfg.ygrid()?);
    let f = core(sample(spec, &xg))?;
    let conj = core(s.timed("conjugate", || conjugate_fast(&f, &yg)))?;
    let fss = core(s.timed("biconjugate", || biconjugate(&f, &yg)))?;
    s.info(
        "conjugate_path",
        match conj.path {
            ConjugatePath::BruteForce => "brute_force",
            ConjugatePath::MonotoneScan => "monotone_scan",
        },
    );

    s.artifact("conjugate.csv", |p| {
        csvio::write_rows(
            p,
            &["y", "conjugate", "argmax_x"],
            (0..yg.len()).map(|j| {
                [
                    format_real(yg.point(j)),
                    format_ext(conj.values.get(j)),
                    format_real(xg.point(conj.argmax[j])),
                ]
            }),
        )
    })?;
    let mut max_gap = 0.0_f64;
    let mut min_gap = f64::INFINITY;
    for i in 0..xg.len() {
        if let (Some(a), Some(b)) = (f.get(i).value(), fss.get(i).value()) {
            max_gap = max_gap.max(a - b);
            min_gap = min_gap.min(a - b);
        }
    }
    s.artifact("biconjugate.csv", |p| {
        csvio::write_rows(
            p,
            &["x", "f", "biconjugate", "gap"],
            (0..xg.len()).map(|i| {
                let gap = match (f.get(i).value(), fss.get(i).value()) {
                    (Some(a), Some(b)) => format_real(a - b),
                    _ => "+inf".to_string(),
                };
                [format_real(xg.point(i)), format_ext(f.get(i)), format_ext(fss.get(i)), gap]
            }),
        )
    })?;
    s.check(
        "biconjugate_minorant",
        min_gap >= -1e-12,
        &[("min_gap", min_gap), ("max_gap", max_gap)],
        Some("biconjugate.csv"),
    );
    Ok(())
}

fn write_table(s: &mut RunSummary, table: &BipotentialTable) -> Result<(), CliError> {
    s.artifact("b_table.csv", |p| table.write_csv(p))?;
    s.artifact("argmin_lambda.csv", |p| table.write_argmin_csv(p))
}

struct Graphs {
    mb: OperatorGraph,
    union: OperatorGraph,
}

fn graphs_stage(
    cfg: &RunConfig,
    s: &mut RunSummary,
    cover: &Cover,
    table: &BipotentialTable,
) -> Result<Graphs, CliError> {
    let tol = cfg.tolerances.graph;
    let mb = core(s.timed("extract_graph", || extract_graph(table, tol)))?;
    let union = core(s.timed("union_graph", || cover_union_graph(cover, tol)))?;
    s.artifact("graph_b.csv", |p| mb.write_csv(p))?;
    s.artifact("graph_union.csv", |p| union.write_csv(p))?;
    s.info("graph_b_points", mb.len());
    s.info("graph_union_points", union.len());
    Ok(Graphs { mb, union })
}

fn graph_checks(cfg: &RunConfig, s: &mut RunSummary, g: &Graphs) -> Result<(), CliError> {
    let bb = match bb_check(&g.union) {
        Ok(r) => r,
        Err(bipotential::Error::EmptyGraph) => {
            s.check("bb_graph", false, &[("violations", 0.0)], Some("graph_union.csv"));
            return graph_identity(cfg, s, g);
        }
        Err(e) => return Err(CliError::from_core(e)),
    };
    s.artifact("bb_violations.csv", |p| {
        csvio::write_rows(
            p,
            &["section", "index", "missing"],
            bb.violations.iter().map(|v| {
                let missing: Vec<String> = v.holes.iter().map(|&(a, b)| format!("{a}..{b}")).collect();
                [v.axis.to_string(), v.index.to_string(), missing.join(" ")]
            }),
        )
    })?;
    s.check(
        "bb_graph",
        bb.pass,
        &[("violations", bb.violations.len() as f64)],
        Some("bb_violations.csv"),
    );
    graph_identity(cfg, s, g)
}

fn graph_identity(cfg: &RunConfig, s: &mut RunSummary, g: &Graphs) -> Result<(), CliError> {
    let slack = cfg.tolerances.slack;
    let equal = core(graphs_equal(&g.mb, &g.union, slack))?;
    s.check(
        "graph_identity",
        equal,
        &[
            ("slack", slack as f64),
            ("graph_b_points", g.mb.len() as f64),
            ("graph_union_points", g.union.len() as f64),
        ],
        Some("graph_b.csv"),
    );
    Ok(())
}

pub fn cmd_synth(cfg: &RunConfig, s: &mut RunSummary) -> Result<(), CliError> {
    let cover = build_cover(cfg, s)?;
    let table = s.timed("synth", || synth_table(&cover));
    write_table(s, &table)?;
    graphs_stage(cfg, s, &cover, &table)?;
    Ok(())
}

pub fn cmd_graph(cfg: &RunConfig, s: &mut RunSummary) -> Result<(), CliError> {
    let cover = build_cover(cfg, s)?;
    let table = s.timed("synth", || synth_table(&cover));
    let g = graphs_stage(cfg, s, &cover, &table)?;
    graph_checks(cfg, s, &g)
}

fn axioms_stage(cfg: &RunConfig, s: &mut RunSummary, table: &BipotentialTable) -> Result<(), CliError> {
    let tol = cfg.axiom_tolerances();
    let r = s.timed("axioms", || verify_axioms(table, &tol));
    s.artifact("equivalences.csv", |p| r.write_equivalences_csv(p))?;
    s.info("finite_valued", r.finite_valued);
    let (sx, sy) = table.resolution();
    s.check(
        "axioms_convex_x",
        r.convex_in_x.pass,
        &[
            ("worst_second_difference", r.convex_in_x.worst_second_difference),
            ("lines_failed", r.convex_in_x.lines_failed as f64),
            ("resolution_allowance", sx),
        ],
        Some("b_table.csv"),
    );
    s.check(
        "axioms_convex_y",
        r.convex_in_y.pass,
        &[
            ("worst_second_difference", r.convex_in_y.worst_second_difference),
            ("lines_failed", r.convex_in_y.lines_failed as f64),
            ("resolution_allowance", sy),
        ],
        Some("b_table.csv"),
    );
    s.check(
        "axioms_fenchel",
        r.fenchel_like.pass,
        &[("min_gap", r.fenchel_like.min_gap)],
        Some("b_table.csv"),
    );
    s.check(
        "axioms_equivalences",
        r.equivalences_pass,
        &[
            ("graph_points", r.graph_points as f64),
            ("off_graph_checked", r.off_graph_checked as f64),
            ("failures", r.equivalence_failures as f64),
        ],
        Some("equivalences.csv"),
    );
    Ok(())
}

fn fan_stage(cfg: &RunConfig, s: &mut RunSummary, cover: &Cover) -> Result<BicReport, CliError> {
    let thinned = core(cover.thinned(cfg.sampling.fan_thin))?;
    s.info("fan_parameters", thinned.len());
    let bic = cfg.bic_config();
    let r = core(s.timed("fan_bic", || check_fan_bic(&thinned, &bic)))?;
    s.artifact("fan_summary.csv", |p| {
        csvio::write_rows(
            p,
            &["function", "index", "pass", "tested_pairs", "probes", "exhaustive", "failures", "delta_used", "worst_ratio"],
            [("g", &r.g), ("h", &r.h)].into_iter().flat_map(|(name, list)| {
                list.iter().map(move |pr| {
                    let w = &pr.report;
                    [
                        name.to_string(),
                        pr.index.to_string(),
                        w.pass.to_string(),
                        w.tested_pairs.to_string(),
                        w.probes.to_string(),
                        w.exhaustive.to_string(),
                        w.failures.len().to_string(),
                        format_real(w.delta_used),
                        format_real(w.worst_ratio),
                    ]
                })
            }),
        )
    })?;
    s.artifact("fan_failures.csv", |p| r.write_failures_csv(p))?;
    let probes: usize = r.g.iter().chain(&r.h).map(|p| p.report.probes).sum();
    s.check(
        "fan_bic",
        r.pass,
        &[
            ("failures", r.failure_count() as f64),
            ("probes", probes as f64),
            ("worst_ratio", r.worst_ratio()),
        ],
        Some("fan_summary.csv"),
    );
    Ok(r)
}

pub fn cmd_fan_check(cfg: &RunConfig, s: &mut RunSummary) -> Result<(), CliError> {
    let cover = build_cover(cfg, s)?;
    fan_stage(cfg, s, &cover)?;
    Ok(())
}

/// Probe index pairs from the configured coordinates.
pub fn minimax_probes(cfg: &RunConfig) -> Result<Vec<(usize, usize)>, CliError> {
    let (xg, yg) = (cfg.xgrid()?, cfg.ygrid()?);
    let xs: Vec<usize> = cfg.sampling.probe_x.iter().map(|&x| xg.snap(x)).collect();
    let ys: Vec<usize> = cfg.sampling.probe_y.iter().map(|&y| yg.snap(y)).collect();
    Ok(xs.iter().flat_map(|&i| ys.iter().map(move |&j| (i, j))).collect())
}

fn minimax_stage(cfg: &RunConfig, s: &mut RunSummary, cover: &Cover) -> Result<Vec<MinimaxReport>, CliError> {
    // The identities are stated for conjugates taken over the same z-grid.
    let computed = match cover.star_mode() {
        StarMode::Computed => cover.clone(),
        StarMode::ClosedForm => core(cover.to_computed())?,
    };
    let tol = cfg.tolerances.minimax;
    let probes = minimax_probes(cfg)?;
    let reports = s
        .timed("minimax", || {
            probes
                .iter()
                .map(|&(i, j)| minimax_verify(&computed, i, j, tol))
                .collect::<bipotential::Result<Vec<_>>>()
        })
        .map_err(CliError::from_core)?;
    let gap_tol = cfg.tolerances.minimax_gap;
    let ok = |r: &MinimaxReport| r.lhs_matches_b && r.rhs_matches_xbar && r.gap >= -tol && r.gap <= gap_tol;
    let (xg, yg) = (computed.xgrid().clone(), computed.ygrid().clone());
    s.artifact("minimax.csv", |p| {
        csvio::write_rows(
            p,
            &["x", "y", "lhs", "rhs", "b", "xbar_conj", "gap", "pass"],
            reports.iter().map(|r| {
                [
                    format_real(xg.point(r.i)),
                    format_real(yg.point(r.j)),
                    format_real(r.lhs),
                    format_real(r.rhs),
                    format_real(r.b_value),
                    format_real(r.xbar_conj),
                    format_real(r.gap),
                    ok(r).to_string(),
                ]
            }),
        )
    })?;
    let fold = |f: &dyn Fn(&MinimaxReport) -> f64| reports.iter().map(f).fold(0.0, f64::max);
    let min_gap = reports.iter().map(|r| r.gap).fold(f64::INFINITY, f64::min);
    s.check(
        "minimax",
        reports.iter().all(ok),
        &[
            ("probes", reports.len() as f64),
            ("max_gap", fold(&|r| r.gap)),
            ("min_gap", if reports.is_empty() { 0.0 } else { min_gap }),
            ("max_lhs_minus_b", fold(&|r| (r.lhs - r.b_value).abs())),
            ("max_rhs_minus_xbar_conj", fold(&|r| (r.rhs - r.xbar_conj).abs())),
        ],
        Some("minimax.csv"),
    );
    Ok(reports)
}

pub fn cmd_minimax(cfg: &RunConfig, s: &mut RunSummary) -> Result<(), CliError> {
    let cover = build_cover(cfg, s)?;
    minimax_stage(cfg, s, &cover)?;
    Ok(())
}

pub fn cmd_verify(cfg: &RunConfig, s: &mut RunSummary) -> Result<(), CliError> {
    let cover = build_cover(cfg, s)?;
    let table = s.timed("synth", || synth_table(&cover));
    write_table(s, &table)?;
    axioms_stage(cfg, s, &table)?;
    let g = graphs_stage(cfg, s, &cover, &table)?;
    graph_checks(cfg, s, &g)?;
    fan_stage(cfg, s, &cover)?;
    if cover.is_finite_valued() {
        minimax_stage(cfg, s, &cover)?;
    } else {
        s.info("minimax", "skipped: cover takes +inf");
    }
    Ok(())
}
