//! Subcommand implementations.

use crate::config::{ConfigError, RunConfig};
use ncmap_core::matrix::Mat;
use ncmap_core::verify::{
    brockett_residuals, catalog_sweep, corrupt_exploration, default_catalog,
    gradient_order_check, interlacing_check, shoelace_check,
};
use ncmap_core::{
    compute_t_direct, construct_w, counter_rotation, objectives, read_w_file,
    reference_coordinate_sequence, run, ExplorationMatrix, GeneratingPair, MapParameters,
    RunSettings, Schedule, SequenceError, SplitMix64, TargetFamily, TargetSpec,
};
use std::fs;
use std::path::{Path, PathBuf};

/// Process exit codes: 0 ok, 1 verification failure, 2 invalid or
/// incompatible configuration, 3 construction search exhausted, 4 runtime
/// or numeric failure.
pub const EXIT_VERIFY_FAIL: i32 = 1;
pub const EXIT_BAD_CONFIG: i32 = 2;
pub const EXIT_SEARCH_EXHAUSTED: i32 = 3;
pub const EXIT_RUNTIME: i32 = 4;

pub struct CommandError {
    pub code: i32,
    pub message: String,
}

impl CommandError {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<ConfigError> for CommandError {
    fn from(e: ConfigError) -> Self {
        CommandError::new(EXIT_BAD_CONFIG, e.to_string())
    }
}

impl From<SequenceError> for CommandError {
    fn from(e: SequenceError) -> Self {
        let code = match e {
            SequenceError::SearchExhausted { .. } => EXIT_SEARCH_EXHAUSTED,
            SequenceError::IncompatibleParams { .. } | SequenceError::DegenerateAlphas => {
                EXIT_BAD_CONFIG
            }
            _ => EXIT_RUNTIME,
        };
        CommandError::new(code, e.to_string())
    }
}

impl From<std::io::Error> for CommandError {
    fn from(e: std::io::Error) -> Self {
        CommandError::new(EXIT_RUNTIME, e.to_string())
    }
}

fn build_exploration(cfg: &RunConfig) -> Result<ExplorationMatrix, CommandError> {
    cfg.validate()?;
    let params = cfg.map_parameters()?;
    let target = cfg.target_spec()?;
    Ok(construct_w(&target, &params, &cfg.sigma)?)
}

fn out_dir(cfg: &RunConfig, out: &Option<PathBuf>) -> PathBuf {
    out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output_dir))
}

/// `construct`: build W, write the matrix file, print a summary.
pub fn cmd_construct(cfg: &RunConfig, out: &Option<PathBuf>) -> Result<(), CommandError> {
    let em = build_exploration(cfg)?;
    let dir = out_dir(cfg, out);
    fs::create_dir_all(&dir)?;
    let path = dir.join("w.txt");
    em.write_to(&path)?;

    let params = cfg.map_parameters()?;
    let td = em
        .target
        .materialize(&params)
        .map_err(CommandError::from)?;
    let residual = compute_t_direct(&em.w, &params).sub(&td).max_abs();
    println!("m={}", em.nominal_m);
    println!("period={}", em.m);
    println!(
        "sigma={}",
        em.sigma
            .iter()
            .map(|v| format!("{v}"))
            .collect::<Vec<_>>()
            .join(" ")
    );
    println!("residual={residual:e}");
    println!("zero_sum={:e}", em.zero_sum_defect());
    println!("wrote {}", path.display());
    Ok(())
}

fn run_with_config(
    cfg: &RunConfig,
    em: &ExplorationMatrix,
) -> Result<ncmap_core::RunRecord, CommandError> {
    let params = cfg.map_parameters()?;
    let pair = cfg.generating_pair()?;
    let schedule = match cfg.schedule.as_str() {
        "constant" => Schedule::constant(cfg.h0),
        "harmonic" => ncmap_core::harmonic_schedule(cfg.h0, em.m),
        other => {
            return Err(CommandError::new(
                EXIT_BAD_CONFIG,
                format!("unknown schedule '{other}'"),
            ))
        }
    };
    let settings = RunSettings {
        schedule,
        stop: cfg.stop_criteria(),
    };
    let mut port = match cfg.noise_std {
        Some(std_dev) if std_dev > 0.0 => cfg.objective()?.build().with_noise(std_dev, cfg.seed),
        _ => cfg.objective()?.build(),
    };
    run(em, &pair, &params, &settings, &mut port, &cfg.x0)
        .map_err(|e| CommandError::new(EXIT_RUNTIME, e.to_string()))
}

fn write_outputs(
    cfg: &RunConfig,
    em: &ExplorationMatrix,
    record: &ncmap_core::RunRecord,
    dir: &Path,
) -> Result<(), CommandError> {
    fs::create_dir_all(dir)?;
    let traj = dir.join("trajectory.csv");
    fs::write(&traj, record.to_csv_string())?;
    println!("wrote {}", traj.display());

    // Polygon-area data only exists under the two-point parameterization.
    let params = cfg.map_parameters()?;
    if params == MapParameters::two_point() {
        let areas = ncmap_core::shoelace_areas(&em.w);
        let mut area_csv = String::from("p,q,area\n");
        let d = em.w.rows();
        for p in 0..d {
            for q in 0..d {
                area_csv.push_str(&format!("{},{},{}\n", p + 1, q + 1, areas[(p, q)]));
            }
        }
        let area_path = dir.join("areas.csv");
        fs::write(&area_path, area_csv)?;
        println!("wrote {}", area_path.display());

        // Partial-sum polygon corners per coordinate pair.
        let m = em.w.cols();
        let mut ps = vec![vec![0.0; m + 1]; d];
        for p in 0..d {
            for i in 0..m {
                ps[p][i + 1] = ps[p][i] + em.w[(p, i)];
            }
        }
        let mut poly = String::from("p,q,i,x,y\n");
        for p in 0..d {
            for q in 0..d {
                for i in 0..=m {
                    poly.push_str(&format!("{},{},{},{},{}\n", p + 1, q + 1, i, ps[p][i], ps[q][i]));
                }
            }
        }
        let poly_path = dir.join("polygons.csv");
        fs::write(&poly_path, poly)?;
        println!("wrote {}", poly_path.display());
    }
    Ok(())
}

/// `run`: construct (or load `w.file`), run the loop, write the outputs.
pub fn cmd_run(cfg: &RunConfig, out: &Option<PathBuf>) -> Result<(), CommandError> {
    cfg.validate()?;
    let em = if let Some(path) = &cfg.w_file {
        let stored = read_w_file(Path::new(path))
            .map_err(|e| CommandError::new(EXIT_BAD_CONFIG, format!("w.file: {e}")))?;
        if stored.n != cfg.n {
            return Err(CommandError::new(
                EXIT_BAD_CONFIG,
                format!("w.file has n = {}, config has n = {}", stored.n, cfg.n),
            ));
        }
        let mut em = build_exploration_from_matrix(stored.w, stored.m, cfg)?;
        em.nominal_m = stored.m;
        em
    } else {
        build_exploration(cfg)?
    };
    let record = run_with_config(cfg, &em)?;
    let x = record.final_iterate();
    println!(
        "steps={} stop={} final_J={} final_x={}",
        record.steps(),
        record.stop_reason.tag(),
        record.final_objective(),
        x.iter()
            .map(|v| format!("{v}"))
            .collect::<Vec<_>>()
            .join(" ")
    );
    write_outputs(cfg, &em, &record, &out_dir(cfg, out))
}

/// Wrap a stored W matrix in an ExplorationMatrix envelope (identity
/// factors; the run path only needs the columns and the period).
fn build_exploration_from_matrix(
    w: Mat,
    m: usize,
    cfg: &RunConfig,
) -> Result<ExplorationMatrix, CommandError> {
    let params = cfg.map_parameters()?;
    let defect = w.row_sums().iter().fold(0.0f64, |a, b| a.max(b.abs()));
    if defect > 1e-9 {
        return Err(CommandError::new(
            EXIT_BAD_CONFIG,
            format!("stored W violates the zero-sum condition ({defect:.3e})"),
        ));
    }
    let rows = w.rows();
    Ok(ExplorationMatrix {
        u_factor: Mat::identity(rows),
        sigma: vec![],
        v_factor: Mat::identity(m),
        target: cfg.target_spec()?,
        params,
        nominal_m: m,
        m,
        w,
    })
}

/// `simulate`: run a shipped preset (with overrides already applied).
pub fn cmd_simulate(cfg: &RunConfig, out: &Option<PathBuf>) -> Result<(), CommandError> {
    let em = build_exploration(cfg)?;
    println!("m={}", em.nominal_m);
    println!("period={}", em.m);
    let record = run_with_config(cfg, &em)?;
    let x = record.final_iterate();
    println!(
        "steps={} stop={} final_J={} final_x={}",
        record.steps(),
        record.stop_reason.tag(),
        record.final_objective(),
        x.iter()
            .map(|v| format!("{v}"))
            .collect::<Vec<_>>()
            .join(" ")
    );
    write_outputs(cfg, &em, &record, &out_dir(cfg, out))
}

/// `verify`: run one named suite, print report lines, exit 1 on FAIL.
pub fn cmd_verify(
    suite: &str,
    m_max: usize,
    cfg: Option<&RunConfig>,
) -> Result<(), CommandError> {
    let mut all_passed = true;
    let mut reports = Vec::new();
    match suite {
        "interlacing" => {
            let rep = interlacing_check(m_max).map_err(CommandError::from)?;
            reports.push(rep);
        }
        "catalog" => {
            reports.push(catalog_sweep());
        }
        "shoelace" => {
            if let Some(cfg) = cfg {
                let params = cfg.map_parameters()?;
                if params != MapParameters::two_point() {
                    return Err(CommandError::new(
                        EXIT_BAD_CONFIG,
                        "the shoelace identity is defined for the two-point scheme \
                         (alpha = [1/2, 1/2]) only",
                    ));
                }
            }
            let mut rng = SplitMix64::new(cfg.map_or(0, |c| c.seed));
            let em = reference_coordinate_sequence(2);
            reports.push(shoelace_check(&em.w).map_err(CommandError::from)?);
            for _ in 0..200 {
                let n = 1 + (rng.next_u64() % 3) as usize;
                let m = 3 + (rng.next_u64() % 14) as usize;
                let mut w = Mat::zeros(2 * n, m);
                for i in 0..2 * n {
                    let mut acc = 0.0;
                    for j in 0..m - 1 {
                        let v = rng.uniform(-1.0, 1.0);
                        w[(i, j)] = v;
                        acc += v;
                    }
                    w[(i, m - 1)] = -acc;
                }
                let rep = shoelace_check(&w).map_err(CommandError::from)?;
                if !rep.passed {
                    reports.push(rep);
                }
            }
            if reports.len() == 1 {
                println!("200 randomized shoelace checks passed");
            }
        }
        "brockett" => {
            for case in default_catalog() {
                let em = construct_w(&case.target, &case.params, &case.sigma_free)?;
                let td = em
                    .target
                    .materialize(&case.params)
                    .map_err(CommandError::from)?;
                let (ry, rz) = brockett_residuals(&em.w, &td, &case.params);
                let passed = ry <= 1e-9 && rz <= 1e-7;
                println!(
                    "CHECK brockett[{}] {} max_residual={:e} threshold=1e-7",
                    case.label,
                    if passed { "PASS" } else { "FAIL" },
                    rz.max(ry)
                );
                all_passed &= passed;
            }
        }
        "order" => {
            let two = MapParameters::two_point();
            let q2 = counter_rotation(2);
            let h_list = [0.1, 0.05, 0.025, 0.0125];
            let x0 = [0.6, 1.7];
            let battery: Vec<(TargetSpec, MapParameters, GeneratingPair, Vec<f64>)> = vec![
                (
                    TargetSpec::new(TargetFamily::H1, 2),
                    two,
                    GeneratingPair::h2_sincos(1.0, 1.0, 0.0).unwrap(),
                    vec![1.0, 1.0],
                ),
                (
                    TargetSpec::new(TargetFamily::H2, 2)
                        .with_a(1.0)
                        .with_b(1.0)
                        .with_q(q2.clone()),
                    two,
                    GeneratingPair::h2_sincos(1.0, 1.0, 0.0).unwrap(),
                    vec![1.0, 1.0],
                ),
                (
                    TargetSpec::new(TargetFamily::H4, 2).with_q(q2.clone()),
                    two,
                    GeneratingPair::h4_const_lin(2.0, 1.0).unwrap(),
                    vec![1.0, 1.0],
                ),
                (
                    TargetSpec::new(TargetFamily::H5, 2).with_q(q2.clone()),
                    two,
                    GeneratingPair::h5_lin_const(2.0, 1.0).unwrap(),
                    vec![1.0, 1.0],
                ),
                (
                    TargetSpec::new(TargetFamily::H7, 2)
                        .with_a(2.0)
                        .with_b(2.0)
                        .with_c(1.0)
                        .with_q(q2.clone()),
                    two,
                    GeneratingPair::h7_shifted(2.0, 2.0, 1.0, 0.0).unwrap(),
                    vec![1.0, 1.0],
                ),
                (
                    TargetSpec::new(TargetFamily::TdE, 2),
                    MapParameters::single_point(),
                    GeneratingPair::e1_radial(1.0, 0.0).unwrap(),
                    vec![],
                ),
            ];
            for (target, params, pair, sigma) in battery {
                let em = construct_w(&target, &params, &sigma)?;
                let mut port = objectives::quadratic(&[1.0, 2.0]);
                let rep =
                    gradient_order_check(&em, &pair, &params, &mut port, &x0, &h_list, 1.4)
                        .map_err(|e| CommandError::new(EXIT_RUNTIME, e.to_string()))?;
                println!("{rep} [{}]", target.family.tag());
                all_passed &= rep.passed;
            }
            // Negative control: a corrupted matrix must fail.
            let em = construct_w(
                &TargetSpec::new(TargetFamily::H1, 2),
                &two,
                &[1.0, 1.0],
            )?;
            let broken = corrupt_exploration(&em);
            let mut port = objectives::quadratic(&[1.0, 2.0]);
            let rep = gradient_order_check(
                &broken,
                &GeneratingPair::h2_sincos(1.0, 1.0, 0.0).unwrap(),
                &two,
                &mut port,
                &x0,
                &h_list,
                1.4,
            )
            .map_err(|e| CommandError::new(EXIT_RUNTIME, e.to_string()))?;
            println!("{rep} [negative control, expected FAIL]");
            all_passed &= !rep.passed;
        }
        other => {
            return Err(CommandError::new(
                EXIT_BAD_CONFIG,
                format!(
                    "unknown suite '{other}' (use order, shoelace, brockett, catalog or interlacing)"
                ),
            ))
        }
    }
    for rep in &reports {
        println!("{rep}");
        all_passed &= rep.passed;
    }
    if all_passed {
        Ok(())
    } else {
        Err(CommandError::new(EXIT_VERIFY_FAIL, "verification failed"))
    }
}
